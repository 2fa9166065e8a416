"""Graph-state topologies, the dotted triple-graph, and flow bookkeeping.

A dotted triple-graph DT(G) triples every base vertex into three primaries
and replaces every base edge with nine dots (one per primary pair), each dot
adjacent to both of its primaries. A uniformly random colouring (one
permutation of {green, blue, gray} per base vertex, dots inheriting a shared
endpoint colour and red otherwise) then fixes the roles:

    computation = gray primaries and gray dots
    trap        = green primaries and blue dots
    dummy       = blue primaries, green dots, and red dots ("deleted")

Every trap's neighbours are dummies, which is what isolates the traps once
the dummies carry Z-eigenstates.
"""
from __future__ import annotations

from dataclasses import dataclass, field

from .qcore import AngleIndex, norm_angle

GREEN, BLUE, GRAY, RED = "green", "blue", "gray", "red"
COMPUTATION, TRAP, DUMMY = "computation", "trap", "dummy"


class MissingDependencyError(KeyError):
    pass


@dataclass(frozen=True)
class GraphTopology:
    nodes: tuple
    edges: tuple  # of frozenset pairs
    input_nodes: tuple
    output_nodes: tuple

    def __post_init__(self):
        nodes = tuple(self.nodes)
        object.__setattr__(self, "nodes", nodes)
        node_set = set(nodes)
        edges = []
        for e in self.edges:
            a, b = tuple(e)
            if a == b:
                raise ValueError("self-loops are not allowed")
            if a not in node_set or b not in node_set:
                raise ValueError(f"edge {e} references unknown node")
            edges.append(frozenset((a, b)))
        object.__setattr__(self, "edges", tuple(edges))
        object.__setattr__(self, "input_nodes", tuple(self.input_nodes))
        object.__setattr__(self, "output_nodes", tuple(self.output_nodes))

    def neighbors(self, v):
        out = []
        for e in self.edges:
            if v in e:
                (w,) = e - {v}
                out.append(w)
        return out

    def neighbor_map(self) -> dict:
        nm = {v: [] for v in self.nodes}
        for e in self.edges:
            a, b = tuple(e)
            nm[a].append(b)
            nm[b].append(a)
        return nm


def build_linear_cluster(n: int) -> GraphTopology:
    """Path graph 1 - 2 - ... - n; input {1}, output {n}."""
    if n < 1:
        raise ValueError("n must be >= 1")
    nodes = tuple(range(1, n + 1))
    edges = tuple(frozenset((i, i + 1)) for i in range(1, n))
    return GraphTopology(nodes, edges, (1,), (n,))


def build_brickwork(rows: int, cols: int) -> GraphTopology:
    """Brickwork fragment on a rows x cols grid.

    Horizontal edges everywhere; vertical edges in pairs two columns apart
    (the sides of each brick), on odd rows for columns congruent to 3 mod 8
    and even rows for columns congruent to 7 mod 8 (1-indexed).
    Column 0 holds the inputs, the last column the outputs.
    """
    if rows < 1 or cols < 2:
        raise ValueError("need rows >= 1 and cols >= 2")
    nodes = tuple((r, c) for r in range(rows) for c in range(cols))
    edges = []
    for r in range(rows):
        for c in range(cols - 1):
            edges.append(frozenset(((r, c), (r, c + 1))))
    for c in range(cols):
        y1 = c + 1
        if y1 % 8 in (3, 5):
            parity = 0  # 1-indexed odd rows
        elif y1 % 8 in (7, 1) and c >= 6:
            parity = 1
        else:
            continue
        for r in range(rows - 1):
            if r % 2 == parity:
                edges.append(frozenset(((r, c), (r + 1, c))))
    inputs = tuple((r, 0) for r in range(rows))
    outputs = tuple((r, cols - 1) for r in range(rows))
    return GraphTopology(nodes, tuple(edges), inputs, outputs)


# ---------------------------------------------------------------------------
# dotted triple-graph
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DTGraph:
    topology: GraphTopology
    base: GraphTopology
    base_map: dict  # DT node -> base vertex (primaries) or base edge (dots)
    role: dict  # DT node -> computation | trap | dummy
    colour: dict  # DT node -> green | blue | gray | red
    deleted: frozenset  # the dummy set D
    c_of: dict  # base vertex -> computation primary
    t_of: dict  # base vertex -> trap primary (green)
    d_of: dict  # base vertex -> dummy primary (blue)

    def nodes_with_role(self, role: str):
        return [v for v in self.topology.nodes if self.role[v] == role]

    def computation_dot(self, u, v):
        """The gray dot on base edge (u, v)."""
        for node in self.topology.nodes:
            if (
                node[0] == "dot"
                and set(node[1:3]) == {u, v}
                and self.role[node] == COMPUTATION
            ):
                return node
        raise KeyError((u, v))


def primary(v, j) -> tuple:
    return ("p", v, j)


def dotted_triple_graph(base: GraphTopology, rng) -> DTGraph:
    """Build DT(G) with a fresh uniform colouring.

    Deleted positions are kept as dummy-role nodes (they will carry
    Z-eigenstates), never removed from the physical graph.
    """
    nodes = []
    edges = []
    base_map = {}
    colour = {}
    vertex_colours = {}
    for v in base.nodes:
        perm = [GREEN, BLUE, GRAY]
        perm = [perm[i] for i in rng.permutation(3)]
        vertex_colours[v] = perm
        for j in (1, 2, 3):
            node = primary(v, j)
            nodes.append(node)
            base_map[node] = v
            colour[node] = perm[j - 1]
    for e in base.edges:
        u, v = sorted(e, key=lambda x: base.nodes.index(x))
        for i in (1, 2, 3):
            for j in (1, 2, 3):
                dot = ("dot", u, v, i, j)
                nodes.append(dot)
                base_map[dot] = (u, v)
                cu = vertex_colours[u][i - 1]
                cv = vertex_colours[v][j - 1]
                colour[dot] = cu if cu == cv else RED
                edges.append(frozenset((dot, primary(u, i))))
                edges.append(frozenset((dot, primary(v, j))))
    role = {}
    for node in nodes:
        c = colour[node]
        is_dot = node[0] == "dot"
        if c == RED or (is_dot and c == GREEN) or (not is_dot and c == BLUE):
            role[node] = DUMMY
        elif (not is_dot and c == GREEN) or (is_dot and c == BLUE):
            role[node] = TRAP
        else:
            role[node] = COMPUTATION
    c_of, t_of, d_of = {}, {}, {}
    for v in base.nodes:
        for j in (1, 2, 3):
            node = primary(v, j)
            {GRAY: c_of, GREEN: t_of, BLUE: d_of}[colour[node]][v] = node
    deleted = frozenset(n for n in nodes if role[n] == DUMMY)
    topo = GraphTopology(
        tuple(nodes),
        tuple(edges),
        tuple(c_of[v] for v in base.input_nodes),
        tuple(c_of[v] for v in base.output_nodes),
    )
    return DTGraph(topo, base, base_map, role, colour, deleted, c_of, t_of, d_of)


# ---------------------------------------------------------------------------
# flow and angle corrections
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FlowPlan:
    order: tuple  # measurement order over non-output nodes
    x_dep: dict  # node -> its flow predecessor (or absent)
    z_deps: dict  # node -> frozenset of earlier nodes whose Z lands here

    def deps(self, node):
        out = set(self.z_deps.get(node, ()))
        if node in self.x_dep:
            out.add(self.x_dep[node])
        return out


def flow_from_successor(topology: GraphTopology, order, successor: dict) -> FlowPlan:
    """Build the correction plan from a flow-successor map f.

    Measuring i with outcome s puts X^s on f(i) and Z^s on the neighbours of
    f(i) other than i; only corrections landing on later-measured (or output)
    nodes are recorded.
    """
    order = tuple(order)
    pos = {v: i for i, v in enumerate(order)}
    nm = topology.neighbor_map()
    x_dep: dict = {}
    z_deps: dict = {v: set() for v in topology.nodes}
    for i in order:
        g = successor.get(i)
        if g is None:
            continue
        if g in pos and pos[g] <= pos[i]:
            raise ValueError(f"flow successor {g} measured before {i}")
        x_dep[g] = i
        for w in nm[g]:
            if w == i:
                continue
            if w in pos and pos[w] <= pos[i]:
                continue
            z_deps[w].add(i)
    z_deps = {v: frozenset(s) for v, s in z_deps.items() if s}
    return FlowPlan(order, x_dep, z_deps)


def path_flow(topology: GraphTopology, order=None) -> FlowPlan:
    """Flow for a path-shaped topology: successor = next node in order."""
    seq = tuple(order) if order is not None else tuple(topology.nodes)
    succ = {seq[i]: seq[i + 1] for i in range(len(seq) - 1)}
    return flow_from_successor(topology, seq[:-1], succ)


def brickwork_flow(topology: GraphTopology, rows: int, cols: int) -> FlowPlan:
    """Column-major order; flow successor is the horizontal neighbour."""
    order = tuple((r, c) for c in range(cols - 1) for r in range(rows))
    succ = {(r, c): (r, c + 1) for r, c in order}
    return flow_from_successor(topology, order, succ)


def corrected_angle(node, phi: AngleIndex, flow: FlowPlan, results: dict) -> AngleIndex:
    """phi' = (-1)^{s^X} phi + pi * s^Z, reduced into the angle lattice."""
    sx = 0
    if node in flow.x_dep:
        dep = flow.x_dep[node]
        if dep not in results:
            raise MissingDependencyError(dep)
        sx = results[dep] & 1
    sz = 0
    for dep in flow.z_deps.get(node, ()):
        if dep not in results:
            raise MissingDependencyError(dep)
        sz ^= results[dep] & 1
    return norm_angle((-phi if sx else phi) + 4 * sz)


def output_corrections(flow: FlowPlan, outputs, results: dict) -> dict:
    """Byproduct (x, z) bits to undo on each output node."""
    out = {}
    for o in outputs:
        sx = results.get(flow.x_dep[o], 0) & 1 if o in flow.x_dep else 0
        sz = 0
        for dep in flow.z_deps.get(o, ()):
            sz ^= results[dep] & 1
        out[o] = (sx, sz)
    return out


def dummy_phase_update(theta: dict, dummies: dict, topology: GraphTopology) -> dict:
    """Shift each non-dummy theta by pi times the parity of its dummy
    neighbours' bits (a CZ against |d> imprints Z^d)."""
    nm = topology.neighbor_map()
    out = dict(theta)
    for v in theta:
        if v in dummies:
            continue
        par = 0
        for w in nm[v]:
            if w in dummies:
                par ^= dummies[w] & 1
        if par:
            out[v] = norm_angle(theta[v] + 4)
    return out


# ---------------------------------------------------------------------------
# JSON
# ---------------------------------------------------------------------------


def _id_to_json(v):
    return list(v) if isinstance(v, tuple) else v


def _id_from_json(v):
    return tuple(_id_from_json(x) for x in v) if isinstance(v, list) else v


def graph_to_json(g: GraphTopology) -> dict:
    return {
        "nodes": [{"id": _id_to_json(v)} for v in g.nodes],
        "edges": [sorted((_id_to_json(a), _id_to_json(b)), key=repr)
                  for a, b in (tuple(e) for e in g.edges)],
        "input": [_id_to_json(v) for v in g.input_nodes],
        "output": [_id_to_json(v) for v in g.output_nodes],
    }


def graph_from_json(obj) -> GraphTopology:
    nodes = tuple(_id_from_json(n["id"]) for n in obj["nodes"])
    edges = tuple(
        frozenset((_id_from_json(a), _id_from_json(b))) for a, b in obj["edges"]
    )
    return GraphTopology(
        nodes,
        edges,
        tuple(_id_from_json(v) for v in obj.get("input", [])),
        tuple(_id_from_json(v) for v in obj.get("output", [])),
    )


def dtgraph_to_json(dt: DTGraph) -> dict:
    out = graph_to_json(dt.topology)
    for rec in out["nodes"]:
        node = _id_from_json(rec["id"])
        rec["role"] = dt.role[node]
        base = dt.base_map[node]
        rec["base"] = _id_to_json(base)
    out["colour"] = {
        repr(node): dt.colour[node] for node in dt.topology.nodes
    }
    out["deleted"] = sorted((_id_to_json(v) for v in dt.deleted), key=repr)
    return out
