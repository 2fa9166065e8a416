"""Executable delegated-computation protocols.

Contents:

- a delegated-MBQC engine with three interaction styles:
  "bfk"  - client prepares rotated qubits, server measures at blinded angles;
  "tau"  - the routine-by-routine transform of "bfk": the server prepares the
           non-input/non-output qubits from the conjugated measurement bases
           and the client measures in the conjugated preparation bases;
  "mf13" - server prepares plain |+> qubits, client measures at corrected
           angles (the tau protocol with the now-redundant blinding removed);
- double-blind state preparation (DBSP) in prepare-and-send (PS),
  receive-and-measure (RM), and mixed-client forms;
- the H/I gadget, which applies H or the identity to a qubit up to a Pauli
  recorded by the trusted party;
- trap-based verified delegation on the dotted triple-graph (single client,
  PS and RM variants) and its multiparty version with per-node DBSP and
  H/I gadgets;
- an ideal in-process trusted-party stub for the classical multiparty
  computation the protocols assume.

Every run is a deterministic function of its RNG. Sampled entry points
return a ProtocolResult; *_branches variants enumerate measurement branches
with exact probabilities for the verification harness.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import qcore
from ._engine import Register
from .graphs import (
    COMPUTATION,
    DTGraph,
    DUMMY,
    FlowPlan,
    GraphTopology,
    TRAP,
    brickwork_flow,
    corrected_angle,
    dotted_triple_graph,
    dummy_phase_update,
    output_corrections,
    path_flow,
)
from .qcore import (
    AngleIndex,
    COMPUTATIONAL,
    DensityState,
    P_idx,
    basis_from_angle,
    norm_angle,
    pauli_xz,
    plus_state,
)

X_BASIS = basis_from_angle(0)


# ---------------------------------------------------------------------------
# parties, transcripts, results
# ---------------------------------------------------------------------------


@dataclass
class Party:
    id: str
    kind: str  # client_PS | client_RM | server | smpc
    rng: object = None
    notes: dict = field(default_factory=dict)


@dataclass
class Transcript:
    messages: list = field(default_factory=list)

    def add(self, sender: str, receiver: str, kind: str, payload) -> None:
        self.messages.append(
            {
                "step": len(self.messages),
                "sender": sender,
                "receiver": receiver,
                "kind": kind,
                "payload": payload,
            }
        )

    def view_of(self, party: str) -> list:
        return [
            m
            for m in self.messages
            if party in (m["sender"], m["receiver"])
        ]


@dataclass
class ProtocolResult:
    output: DensityState | None
    accepted: bool
    transcript: Transcript
    server_view: list
    extras: dict = field(default_factory=dict)


# ---------------------------------------------------------------------------
# adversary hooks
# ---------------------------------------------------------------------------


class Adversary:
    """Server-side transcript interceptor; the default is honest."""

    def on_qubit_send(self, reg: Register) -> None:
        """Called when the entangled register passes through the server's
        hands; may mutate it."""

    def on_measure_request(self, node, k: AngleIndex) -> AngleIndex:
        """May measure in a different basis than instructed."""
        return k

    def on_classical_send(self, node, bit: int) -> int:
        """May misreport a measurement outcome."""
        return bit


class RandomZAttack(Adversary):
    """Apply Z to one uniformly random live qubit after entangling."""

    def __init__(self, rng, wire=None):
        self.rng = rng
        self.wire = wire
        self.hit = None

    def on_qubit_send(self, reg: Register) -> None:
        wire = self.wire
        if wire is None:
            wire = reg.wires[int(self.rng.integers(len(reg.wires)))]
        self.hit = wire
        reg.apply1(qcore.Z, wire)


class ReportAttack(Adversary):
    """Replace one node's report: mode "flip" negates it, mode "constant"
    reports `value` regardless of the measurement."""

    def __init__(self, node, mode: str = "constant", value: int = 0):
        self.node = node
        self.mode = mode
        self.value = value

    def on_classical_send(self, node, bit: int) -> int:
        if node != self.node:
            return bit
        return bit ^ 1 if self.mode == "flip" else self.value


class BasisAttack(Adversary):
    """Measure one node at an angle offset from the instructed one."""

    def __init__(self, rng, node=None, offset: AngleIndex = 1):
        self.rng = rng
        self.node = node
        self.offset = offset
        self.hit = None

    def on_measure_request(self, node, k: AngleIndex) -> AngleIndex:
        if self.node is None and self.hit is None:
            self.hit = node  # first measured node if none chosen
        if node == (self.node if self.node is not None else self.hit):
            self.hit = node
            return norm_angle(k + self.offset)
        return k


# ---------------------------------------------------------------------------
# delegated-MBQC pattern engine (bfk / tau / mf13)
# ---------------------------------------------------------------------------


@dataclass
class BranchRec:
    stilde: dict  # node -> logical outcome
    raw: dict  # node -> reported/raw outcome visible to its measurer
    deltas: dict  # node -> classical angle the server saw (empty for mf13)
    prob: float
    output: DensityState  # corrected output state
    raw_output: DensityState | None = None  # output wires before corrections


def default_flow(topology: GraphTopology) -> FlowPlan:
    """Path flow for linear clusters, column flow for brickwork grids."""
    if all(isinstance(v, tuple) for v in topology.nodes):
        rows = max(v[0] for v in topology.nodes) + 1
        cols = max(v[1] for v in topology.nodes) + 1
        return brickwork_flow(topology, rows, cols)
    return path_flow(topology)


def normalize_angles(phi, flow: FlowPlan) -> dict:
    if isinstance(phi, dict):
        return {v: norm_angle(k) for v, k in phi.items()}
    phi = list(phi)
    if len(phi) != len(flow.order):
        raise ValueError(
            f"{len(flow.order)} measured nodes but {len(phi)} angles"
        )
    return {v: norm_angle(k) for v, k in zip(flow.order, phi)}


def pattern_secrets(style: str, topology: GraphTopology, flow: FlowPlan, rng) -> dict:
    """Draw every client/server secret for one delegated run."""
    inputs = set(topology.input_nodes)
    outputs = set(topology.output_nodes)
    sec = {"theta": {}, "r": {}, "a": {}, "theta_in": {}, "c": {}, "s_srv": {}}
    for v in inputs:
        sec["theta_in"][v] = int(rng.integers(8))
        sec["a"][v] = int(rng.integers(2))
    for v in topology.nodes:
        if v in inputs or v in outputs:
            continue
        if style == "bfk":
            sec["theta"][v] = int(rng.integers(8))
        elif style == "tau":
            sec["c"][v] = int(rng.integers(8))
            sec["s_srv"][v] = int(rng.integers(2))
    for v in flow.order:
        if style == "bfk" or (style == "tau" and v in inputs):
            sec["r"][v] = int(rng.integers(2))
    return sec


def _pad_parity(topology: GraphTopology, sec: dict, v) -> int:
    """Parity of input one-time-pad X bits among v's neighbours."""
    par = 0
    for u in topology.neighbors(v):
        par ^= sec["a"].get(u, 0)
    return par


def _effective_phi(v, phi, flow, stilde, topology, sec) -> AngleIndex:
    """Flow-corrected angle folded with the input one-time-pad effects."""
    c = corrected_angle(v, phi[v], flow, stilde)
    if sec["a"].get(v, 0):
        c = norm_angle(-c)
    return norm_angle(c + 4 * _pad_parity(topology, sec, v))


def _initial_register(style, topology, input_vec, sec) -> Register:
    inputs = list(topology.input_nodes)
    outputs = set(topology.output_nodes)
    reg = Register()
    if input_vec is None:
        input_vec = np.ones(2 ** len(inputs), dtype=complex)
        input_vec /= np.linalg.norm(input_vec)
    reg.add_state(inputs, input_vec)
    for v in inputs:  # client one-time-pad P(theta) X^a
        reg.apply1(qcore.X if sec["a"][v] else qcore.I2, v)
        reg.apply1(P_idx(sec["theta_in"][v]), v)
    for v in topology.nodes:
        if v in outputs and v not in inputs:
            reg.add_wire(v, plus_state(0))
        elif v not in inputs:
            if style == "bfk":
                k = sec["theta"][v]
            elif style == "tau":
                k = norm_angle(-sec["c"][v] + 4 * sec["s_srv"][v])
            else:  # mf13
                k = 0
            reg.add_wire(v, plus_state(k))
    for e in topology.edges:
        a, b = tuple(e)
        reg.cz(a, b)
    return reg


def _node_basis(style, v, topology, flow, phi, stilde, sec):
    """Measurement-basis angle for node v and how its outcome maps to the
    logical result: returns (angle, measurer, logical_fn(outcome))."""
    eff = _effective_phi(v, phi, flow, stilde, topology, sec)
    is_input = v in set(topology.input_nodes)
    if style == "bfk" or (style == "tau" and is_input):
        theta = sec["theta_in"][v] if is_input else sec["theta"][v]
        r = sec["r"][v]
        delta = norm_angle(eff + theta + 4 * r)
        return delta, "server", lambda s: s ^ r
    if style == "tau":
        angle = norm_angle(eff - sec["c"][v])
        s_srv = sec["s_srv"][v]
        return angle, "client", lambda out: out ^ s_srv
    # mf13: the client measures its own (possibly padded) qubit
    theta = sec["theta_in"][v] if is_input else 0
    sign = -1 if sec["a"].get(v, 0) else 1
    # undo the pad on v itself: remeasure at theta + (-1)^a * phi'
    base = corrected_angle(v, phi[v], flow, stilde)
    base = norm_angle(base + 4 * _pad_parity(topology, sec, v))
    return norm_angle(theta + sign * base), "client", lambda s: s


def _corrected_output(reg: Register, topology, flow, stilde, sec) -> DensityState:
    outputs = list(topology.output_nodes)
    out_reg = reg.copy()
    corr = output_corrections(flow, outputs, stilde)
    for o in outputs:
        sx, sz = corr[o]
        sz ^= _pad_parity(topology, sec, o)
        if o in set(topology.input_nodes):  # undo the client pad
            out_reg.apply1(P_idx(-sec["theta_in"][o]), o)
            if sec["a"][o]:
                out_reg.apply1(qcore.X, o)
        out_reg.apply1(pauli_xz(sx, sz), o)
    return out_reg.density(outputs)


def _pattern_explore(style, topology, flow, phi, input_vec, sec, adversary, rng):
    """Walk the measurement tree. With rng=None, yields every branch; with an
    rng, samples a single path. Yields BranchRec."""
    adversary = adversary or Adversary()
    reg0 = _initial_register(style, topology, input_vec, sec)
    adversary.on_qubit_send(reg0)

    def recurse(reg, idx, stilde, raw, deltas, prob):
        if idx == len(flow.order):
            out = _corrected_output(reg, topology, flow, stilde, sec)
            raw_out = reg.density(list(topology.output_nodes))
            yield BranchRec(
                dict(stilde), dict(raw), dict(deltas), prob, out, raw_out
            )
            return
        v = flow.order[idx]
        angle, measurer, logical = _node_basis(
            style, v, topology, flow, phi, stilde, sec
        )
        meas_angle = angle
        if measurer == "server":
            deltas = dict(deltas)
            deltas[v] = angle
            meas_angle = adversary.on_measure_request(v, angle)
        basis = basis_from_angle(meas_angle)
        if rng is None:
            branches = reg.branches(v, basis)
        else:
            r2 = reg.copy()
            outcome, p = r2.measure(v, basis, rng)
            branches = [(outcome, p, r2)]
        for outcome, p, reg2 in branches:
            rep = outcome
            if measurer == "server":
                rep = adversary.on_classical_send(v, outcome)
            st2 = dict(stilde)
            st2[v] = logical(rep)
            rw = dict(raw)
            rw[v] = rep
            yield from recurse(reg2, idx + 1, st2, rw, deltas, prob * p)

    yield from recurse(reg0, 0, {}, {}, {}, 1.0)


def _run_pattern(style, phi, input_state, topology, adversary, rng, flow=None):
    flow = flow or default_flow(topology)
    phi = normalize_angles(phi, flow)
    input_vec = (
        input_state.pure_vector() if input_state is not None else None
    )
    sec = pattern_secrets(style, topology, flow, rng)
    rec = next(
        _pattern_explore(style, topology, flow, phi, input_vec, sec, adversary, rng)
    )
    transcript = Transcript()
    for v in flow.order:
        if v in rec.deltas:
            transcript.add("client", "server", "angle", [repr(v), rec.deltas[v]])
            transcript.add("server", "client", "result", [repr(v), rec.raw[v]])
        else:
            transcript.add("server", "client", "qubit", repr(v))
            transcript.add("client", "client", "result", [repr(v), rec.raw[v]])
    server_view = [m for m in transcript.messages if "server" in (m["sender"], m["receiver"])]
    return ProtocolResult(
        output=rec.output,
        accepted=True,
        transcript=transcript,
        server_view=server_view,
        extras={
            "results": {repr(v): rec.stilde[v] for v in flow.order},
            "heralds": [],
            "style": style,
        },
    )


def run_bfk09(phi, input_state, topology, adversary=None, rng=None) -> ProtocolResult:
    """Client-prepared blind delegation; server measures at blinded angles."""
    return _run_pattern("bfk", phi, input_state, topology, adversary, rng)


def run_mf13(phi, input_state, topology, adversary=None, rng=None) -> ProtocolResult:
    """Server prepares |+> qubits and streams them; the client measures."""
    return _run_pattern("mf13", phi, input_state, topology, adversary, rng)


def run_tau(phi, input_state, topology, adversary=None, rng=None) -> ProtocolResult:
    """The transformed protocol: server-prepared conjugate-basis qubits,
    client measurements in the conjugated preparation bases."""
    return _run_pattern("tau", phi, input_state, topology, adversary, rng)


def pattern_branches(style, phi, input_state, topology, rng, flow=None,
                     secrets=None, adversary=None):
    """Enumerate all measurement branches for fixed secrets (drawn from rng
    unless given). Returns (list of BranchRec, secrets)."""
    flow = flow or default_flow(topology)
    phi = normalize_angles(phi, flow)
    input_vec = input_state.pure_vector() if input_state is not None else None
    sec = secrets or pattern_secrets(style, topology, flow, rng)
    recs = list(
        _pattern_explore(style, topology, flow, phi, input_vec, sec, adversary, None)
    )
    return recs, sec


def transform_bfk_to_tau(topology: GraphTopology, flow: FlowPlan | None = None):
    """Describe the transformed protocol: which nodes keep their interaction
    and which flip setting (everything outside input and output)."""
    flow = flow or default_flow(topology)
    inputs = set(topology.input_nodes)
    outputs = set(topology.output_nodes)
    desc = {"style": "tau", "nodes": {}}
    for v in topology.nodes:
        if v in inputs or v in outputs:
            desc["nodes"][repr(v)] = {"transformed": False, "setting": "PS"}
        else:
            desc["nodes"][repr(v)] = {"transformed": True, "setting": "RM"}
    return desc


def node_routine_spec(style: str, theta: AngleIndex, delta: AngleIndex):
    """The single-node RoutineSpec of the bfk (PS) interaction at angles
    (theta, delta), or its transform for tau."""
    from .routines import RoutineSpec, t_transform

    cz = qcore.CZ  # the entangling gate with one neighbour
    ps = RoutineSpec(
        setting="PS",
        P=basis_from_angle(theta),
        M=basis_from_angle(delta),
        omega=qcore.BipartiteUnitary(2, cz),
        d_x=2,
    )
    return ps if style == "bfk" else t_transform(ps)


# ---------------------------------------------------------------------------
# double-blind state preparation
# ---------------------------------------------------------------------------


@dataclass
class DbspResult:
    state: DensityState
    theta: AngleIndex
    records: dict


def _apply_cx_and_measure(state: DensityState, aux_vec, basis, outcome=None, rng=None):
    """Append an auxiliary qubit, CX(target -> aux), measure aux in `basis`.

    Returns branches [(outcome, prob, post)] or a single sampled triple.
    """
    joint = DensityState(
        tuple(state.dims) + (2,),
        np.kron(state.matrix, DensityState.from_vector(aux_vec, (2,)).matrix),
    )
    n = len(joint.dims)
    joint = qcore.apply_unitary(joint, qcore.CX, [0, n - 1])
    if rng is not None:
        return qcore.measure_in_basis(joint, n - 1, basis, rng)
    return qcore.measurement_branches(joint, n - 1, basis)


def dbsp_client_step(setting: str, state: DensityState, theta_c: AngleIndex,
                     r_c: int, s_c: int, rng=None):
    """One client's rotation step; enumerates branches when rng is None.

    PS: the client sends |+_{theta+r pi}> and the server measures the
    auxiliary in the computational basis (outcome s); contribution
    (-1)^s theta + r pi.
    RM: the server prepares |s>, couples, and the client measures in the
    conjugated theta-basis (outcome r); contribution (-1)^s (theta + r pi).
    """
    if setting == "PS":
        aux = plus_state(norm_angle(theta_c + 4 * r_c))
        basis = COMPUTATIONAL
        if rng is not None:
            s, p, post = _apply_cx_and_measure(state, aux, basis, rng=rng)
            return s, p, post, norm_angle((theta_c if s == 0 else -theta_c) + 4 * r_c)
        out = []
        for s, p, post in _apply_cx_and_measure(state, aux, basis):
            contrib = norm_angle((theta_c if s == 0 else -theta_c) + 4 * r_c)
            out.append((s, p, post, contrib))
        return out
    # RM
    aux = COMPUTATIONAL.vec(s_c)
    basis = qcore.conjugate_basis(basis_from_angle(theta_c))
    if rng is not None:
        r, p, post = _apply_cx_and_measure(state, aux, basis, rng=rng)
        contrib = norm_angle(theta_c + 4 * r if s_c == 0 else -(theta_c + 4 * r))
        return r, p, post, contrib
    out = []
    for r, p, post in _apply_cx_and_measure(state, aux, basis):
        contrib = norm_angle(theta_c + 4 * r if s_c == 0 else -(theta_c + 4 * r))
        out.append((r, p, post, contrib))
    return out


def run_dbsp(setting: str, rho: DensityState, k: int, rng,
             thetas=None, rbits=None, sbits=None,
             owner: str = "owner") -> DbspResult:
    """Collective blind rotation P(theta) by k clients on the owner's state.

    In PS each client samples (theta_c, r_c); in RM each client samples
    theta_c and the server samples its preparation bit s_c. The returned
    theta is what the trusted party reconstructs from the transcript.
    """
    if setting not in ("PS", "RM"):
        raise ValueError("setting must be PS or RM")
    if k < 1:
        raise ValueError("need at least one client")
    thetas = list(thetas) if thetas is not None else [int(rng.integers(8)) for _ in range(k)]
    rbits = list(rbits) if rbits is not None else [int(rng.integers(2)) for _ in range(k)]
    sbits = list(sbits) if sbits is not None else [int(rng.integers(2)) for _ in range(k)]
    state = rho
    theta = 0
    recs = {"owner": owner, "theta_c": thetas, "r": [], "s": []}
    for c in range(k):
        if setting == "PS":
            s, _p, state, contrib = dbsp_client_step(
                "PS", state, thetas[c], rbits[c], 0, rng=rng
            )
            recs["r"].append(rbits[c])
            recs["s"].append(s)
        else:
            r, _p, state, contrib = dbsp_client_step(
                "RM", state, thetas[c], 0, sbits[c], rng=rng
            )
            recs["r"].append(r)
            recs["s"].append(sbits[c])
        theta = norm_angle(theta + contrib)
    return DbspResult(state, theta, recs)


def dbsp_branches(setting: str, rho: DensityState, thetas, rbits=None, sbits=None):
    """Enumerate every measurement branch of a DBSP run with fixed client
    angles (and fixed choice bits). Yields (bits, prob, state, theta)."""
    k = len(thetas)
    rbits = rbits if rbits is not None else [0] * k
    sbits = sbits if sbits is not None else [0] * k

    def recurse(c, state, prob, theta, bits):
        if c == k:
            yield tuple(bits), prob, state, theta
            return
        for out, p, post, contrib in dbsp_client_step(
            setting, state, thetas[c], rbits[c], sbits[c]
        ):
            yield from recurse(
                c + 1, post, prob * p, norm_angle(theta + contrib), bits + [out]
            )

    yield from recurse(0, rho, 1.0, 0, [])


def run_dbsp_mixed(kinds, rho: DensityState, rng, theta_0: AngleIndex = 0,
                   thetas=None) -> DbspResult:
    """Mixed-client DBSP: PS clients keep r_i = 0, RM clients get the server
    preparation fixed to |0> (s_j = 0); theta = theta_0 + sum of PS terms
    (-1)^{s_i} theta_i and RM terms theta_j + r_j pi."""
    kinds = list(kinds)
    thetas = list(thetas) if thetas is not None else [int(rng.integers(8)) for _ in kinds]
    state = rho
    if theta_0:
        state = qcore.apply_unitary(state, P_idx(theta_0), [0])
    theta = norm_angle(theta_0)
    recs = {"kinds": kinds, "theta_c": thetas, "r": [], "s": []}
    for kind, th in zip(kinds, thetas):
        if kind.upper() == "PS":
            s, _p, state, contrib = dbsp_client_step("PS", state, th, 0, 0, rng=rng)
            recs["r"].append(0)
            recs["s"].append(s)
        elif kind.upper() == "RM":
            r, _p, state, contrib = dbsp_client_step("RM", state, th, 0, 0, rng=rng)
            recs["r"].append(r)
            recs["s"].append(0)
        else:
            raise ValueError(f"unknown client kind {kind!r}")
        theta = norm_angle(theta + contrib)
    return DbspResult(state, theta, recs)


def dbsp_mixed_branches(kinds, rho: DensityState, thetas, theta_0: AngleIndex = 0):
    """Enumerate mixed-client DBSP branches; yields (bits, prob, state, theta)."""
    kinds = list(kinds)
    state0 = rho
    if theta_0:
        state0 = qcore.apply_unitary(state0, P_idx(theta_0), [0])

    def recurse(c, state, prob, theta, bits):
        if c == len(kinds):
            yield tuple(bits), prob, state, theta
            return
        setting = kinds[c].upper()
        for out, p, post, contrib in dbsp_client_step(
            setting, state, thetas[c], 0, 0
        ):
            yield from recurse(
                c + 1, post, prob * p, norm_angle(theta + contrib), bits + [out]
            )

    yield from recurse(0, state0, 1.0, norm_angle(theta_0), [])


# ---------------------------------------------------------------------------
# H/I gadget
# ---------------------------------------------------------------------------

V_GATE = P_idx(6) @ qcore.H @ P_idx(6)  # P(-pi/2) H P(-pi/2)
# full two-qubit gadget unitary on (q, x): the single-qubit factor acts first
_XQ = np.kron(qcore.X, qcore.I2)
HI_OMEGA = qcore.CX @ _XQ @ qcore.CZ @ _XQ @ np.kron(V_GATE, qcore.I2)


def hi_gamma(b: int, r: int) -> AngleIndex:
    """Auxiliary-state angle: b=1 draws from {0, pi}, b=0 from {pi/2, 3pi/2}."""
    return norm_angle((0 if b else 2) + 4 * r)


def hi_pauli(b: int, r: int, s: int) -> tuple[int, int, str]:
    """(x, z, W) such that the gadget branch acts as X^x Z^z W up to phase."""
    if b:
        t = r ^ s
        return (t, t, "H")
    return ((r, 0, "I") if r else (0, 1, "I"))


def run_hi_gadget(setting: str, b: int, rho: DensityState, rng,
                  clients: int = 1, force=None):
    """Apply H (b=1) or the identity (b=0) to a single qubit, double-blind.

    The auxiliary is brought to |+_gamma> by a DBSP plus a server rotation
    (no single party knows gamma); the two-qubit gadget unitary couples it to
    rho and the auxiliary is consumed by an X-basis measurement. In RM the
    circuit runs on the q-partial transpose first and the auxiliary is
    measured double-blind: a DBSP rotation, a server correction, and an
    X measurement whose outcome r~ combines with the choice bit as r'^r~.

    Returns (rho', records); records holds (r, s), the branch Pauli (x, z),
    and the implemented W. `force` may pin secrets for enumeration:
    {"r": bit, "s": bit, "theta_a": [...], "outcome": bit}.
    """
    if rho.total_dim != 2:
        raise ValueError("gadget input must be a single qubit")
    force = force or {}
    joint_dims = (2, 2)  # (q, x)

    def joint_with_aux(aux_vec):
        return DensityState(
            joint_dims,
            np.kron(DensityState.from_vector(aux_vec, (2,)).matrix, rho.matrix),
        )

    if setting == "PS":
        aux0 = DensityState.from_vector(plus_state(0), (2,))
        dbsp = run_dbsp("PS", aux0, clients, rng,
                        thetas=force.get("theta_a"))
        r = force.get("r", int(rng.integers(2)))
        gamma = hi_gamma(b, r)
        delta = norm_angle(gamma - dbsp.theta)
        aux = qcore.apply_unitary(dbsp.state, P_idx(delta), [0])
        joint = DensityState(joint_dims, np.kron(aux.matrix, rho.matrix))
        joint = qcore.apply_unitary(joint, HI_OMEGA, [0, 1])
        if "outcome" in force:
            branches = dict(
                (o, (p, post)) for o, p, post in
                qcore.measurement_branches(joint, 0, X_BASIS)
            )
            p, post = branches[force["outcome"]]
            s = force["outcome"]
        else:
            s, p, post = qcore.measure_in_basis(joint, 0, X_BASIS, rng)
        x, z, w = hi_pauli(b, r, s)
        records = {"setting": "PS", "b": b, "r": r, "s": s,
                   "pauli": (x, z), "w": w, "theta_aux": dbsp.theta,
                   "delta": delta, "prob": p}
        return post, records

    if setting != "RM":
        raise ValueError("setting must be PS or RM")
    s = force.get("s", int(rng.integers(2)))
    aux_vec = X_BASIS.vec(s).conj()  # conj of the X basis is itself
    joint = joint_with_aux(aux_vec)
    omega_t = qcore.partial_transpose_q(qcore.BipartiteUnitary(2, HI_OMEGA))
    joint = qcore.apply_unitary(joint, omega_t.matrix, [0, 1])
    # double-blind measurement of the auxiliary wire
    theta_eta = 0
    thetas = force.get("theta_a") or [int(rng.integers(8)) for _ in range(clients)]
    state = joint
    for th in thetas:
        # RM client step on wire 0 of the joint state: server preps |0>,
        # couples it, the client measures in the conjugated theta-basis
        big = DensityState(tuple(state.dims) + (2,),
                           np.kron(state.matrix, np.outer([1, 0], [1, 0])))
        big = qcore.apply_unitary(big, qcore.CX, [0, len(big.dims) - 1])
        rr, p, state = qcore.measure_in_basis(
            big, len(big.dims) - 1, qcore.conjugate_basis(basis_from_angle(th)), rng
        )
        theta_eta = norm_angle(theta_eta + th + 4 * rr)
    rprime = force.get("r", int(rng.integers(2)))
    gamma = hi_gamma(b, rprime)
    delta = norm_angle(gamma - theta_eta)
    state = qcore.apply_unitary(state, P_idx(delta), [0])
    if "outcome" in force:
        branches = dict(
            (o, (p, post)) for o, p, post in
            qcore.measurement_branches(state, 0, X_BASIS)
        )
        p, post = branches[force["outcome"]]
        rtilde = force["outcome"]
    else:
        rtilde, p, post = qcore.measure_in_basis(state, 0, X_BASIS, rng)
    r = rprime ^ rtilde
    x, z, w = hi_pauli(b, r, s)
    records = {"setting": "RM", "b": b, "r": r, "s": s, "r_prime": rprime,
               "r_tilde": rtilde, "pauli": (x, z), "w": w, "prob": p}
    return post, records


def hi_gadget_branches(setting: str, b: int, rho: DensityState):
    """All (r, s) branches with exact probabilities, blinding collapsed.

    Yields (r, s, prob, rho'). The DBSP layers contribute only known
    rotations, so the branch set is the bare gadget's.
    """
    for r in (0, 1):
        aux = plus_state(hi_gamma(b, r))
        joint = DensityState((2, 2), np.kron(np.outer(aux, aux.conj()), rho.matrix))
        omega = HI_OMEGA
        if setting == "RM":
            omega = qcore.partial_transpose_q(qcore.BipartiteUnitary(2, HI_OMEGA)).matrix
        if setting == "PS":
            joint = qcore.apply_unitary(joint, omega, [0, 1])
            for s, p, post in qcore.measurement_branches(joint, 0, X_BASIS):
                yield r, s, 0.5 * p, post
        else:
            # RM: aux prepared per s, measured in the conjugated gamma basis
            pass
    if setting == "RM":
        for s in (0, 1):
            aux = X_BASIS.vec(s).conj()
            joint = DensityState((2, 2), np.kron(np.outer(aux, aux.conj()), rho.matrix))
            omega_t = qcore.partial_transpose_q(qcore.BipartiteUnitary(2, HI_OMEGA))
            joint = qcore.apply_unitary(joint, omega_t.matrix, [0, 1])
            for rprime in (0, 1):
                basis = qcore.conjugate_basis(basis_from_angle(hi_gamma(b, rprime)))
                # measuring in the conjugated gamma-family basis: outcome 0
                # names |+_{-gamma}>, i.e. the r = rprime branch
                for rt, p, post in qcore.measurement_branches(joint, 0, basis):
                    yield rprime ^ rt, s, 0.25 * p, post


# ---------------------------------------------------------------------------
# SMPC stub
# ---------------------------------------------------------------------------


@dataclass
class SmpcState:
    theta: dict = field(default_factory=dict)  # node -> AngleIndex
    r: dict = field(default_factory=dict)  # node -> bit
    a: dict = field(default_factory=dict)  # input node -> pad bit
    dummy: dict = field(default_factory=dict)  # node -> dummy bit
    gadget: dict = field(default_factory=dict)  # node -> gadget record
    results: dict = field(default_factory=dict)  # node -> logical outcome
    trap_ok: dict = field(default_factory=dict)  # trap node -> bool
    abort: bool = False

    def to_json(self) -> dict:
        return {
            "theta": {repr(k): v for k, v in self.theta.items()},
            "r": {repr(k): v for k, v in self.r.items()},
            "a": {repr(k): v for k, v in self.a.items()},
            "dummy": {repr(k): v for k, v in self.dummy.items()},
            "results": {repr(k): v for k, v in self.results.items()},
            "trap_ok": {repr(k): v for k, v in self.trap_ok.items()},
            "abort": self.abort,
        }


class SmpcResource:
    """Ideal trusted third party: mod-8 secret arithmetic and trap verdicts.

    Secrets never leave the resource; key release is refused until every trap
    check has passed.
    """

    def __init__(self):
        self.state = SmpcState()
        self.parties: set = set()

    def register(self, party_id: str) -> None:
        self.parties.add(party_id)

    def call(self, caller: str, op: str, **args):
        if caller not in self.parties:
            raise PermissionError(f"unregistered caller {caller!r}")
        st = self.state
        if op == "store_theta":
            st.theta[args["node"]] = norm_angle(args["value"])
            return None
        if op == "add_theta":
            st.theta[args["node"]] = norm_angle(
                st.theta.get(args["node"], 0) + args["value"]
            )
            return None
        if op == "delta":
            return norm_angle(args["gamma"] - st.theta[args["node"]])
        if op == "trap_check":
            ok = args["reported"] == st.r[args["node"]]
            st.trap_ok[args["node"]] = ok
            if not ok:
                st.abort = True
            return ok
        if op == "release_keys":
            if st.abort or not all(st.trap_ok.values()):
                raise PermissionError("keys are released only on global accept")
            return {"theta": dict(st.theta), "dummy": dict(st.dummy)}
        if op == "serialize":
            return st.to_json()
        raise ValueError(f"unknown op {op!r}")


def smpc_resource(op: str, args: dict, resource: SmpcResource | None = None,
                  caller: str = "client"):
    """Functional front door to the trusted-party stub."""
    res = resource or _DEFAULT_SMPC
    if caller not in res.parties:
        res.register(caller)
    return res.call(caller, op, **args)


_DEFAULT_SMPC = SmpcResource()


# ---------------------------------------------------------------------------
# trap-based verified delegation on the dotted triple-graph
# ---------------------------------------------------------------------------


@dataclass
class TrapBranch:
    prob: float
    accepted: bool
    stilde: dict  # computation node -> logical outcome
    output: DensityState
    trap_ok: dict
    raw: dict


def comp_path(dt: DTGraph):
    """Computation subgraph of DT(G) for a path-shaped base: the gray
    primaries joined by the gray dots, with the base's input/output ends."""
    order = list(dt.base.nodes)
    for i in range(len(order) - 1):
        if frozenset((order[i], order[i + 1])) not in set(dt.base.edges):
            raise ValueError("base graph must be a path in node order")
    nodes = []
    for i, v in enumerate(order):
        nodes.append(dt.c_of[v])
        if i + 1 < len(order):
            nodes.append(dt.computation_dot(v, order[i + 1]))
    edges = tuple(
        frozenset((nodes[i], nodes[i + 1])) for i in range(len(nodes) - 1)
    )
    topo = GraphTopology(
        tuple(nodes),
        edges,
        tuple(dt.c_of[v] for v in dt.base.input_nodes),
        tuple(dt.c_of[v] for v in dt.base.output_nodes),
    )
    return topo, path_flow(topo)


def comp_angles(dt: DTGraph, phi) -> dict:
    """Base angles lifted to the computation subgraph (dots measure at 0)."""
    topo, flow = comp_path(dt)
    if not isinstance(phi, dict):
        measured_bases = [v for v in dt.base.nodes if v not in set(dt.base.output_nodes)]
        phi = dict(zip(measured_bases, phi))
    out = {}
    for node in flow.order:
        base = dt.base_map[node]
        out[node] = norm_angle(phi[base]) if node[0] == "p" else 0
    return out


def _dt_output_triples(dt: DTGraph):
    outs = list(dt.base.output_nodes)
    return (
        [dt.c_of[v] for v in outs],
        [dt.t_of[v] for v in outs],
        [dt.d_of[v] for v in outs],
    )


def vbdqc_secrets(setting: str, dt: DTGraph, rng) -> dict:
    """Client secrets for one verified-delegation run."""
    out_c, _out_t, _out_d = _dt_output_triples(dt)
    inputs = set(dt.topology.input_nodes)
    in_vertices = set(dt.base.input_nodes)
    sec = {"theta": {}, "d": {}, "r": {}, "theta_in": {}, "a": {},
           "delta_dummy": {}}
    for v in dt.topology.nodes:
        client_prepared = v[0] == "p" and dt.base_map[v] in in_vertices
        if dt.role[v] == DUMMY:
            # PS: the client chooses every dummy value; RM: only the
            # input-vertex dummy primary is client-prepared
            if setting == "PS" or client_prepared:
                sec["d"][v] = int(rng.integers(2))
            if setting == "PS":
                sec["delta_dummy"][v] = int(rng.integers(8))
            continue
        if v in inputs:
            sec["theta_in"][v] = int(rng.integers(8))
            sec["a"][v] = int(rng.integers(2))
        elif v not in set(out_c) and (setting == "PS" or client_prepared):
            sec["theta"][v] = int(rng.integers(8))
        if setting == "PS" and v not in set(out_c):
            sec["r"][v] = int(rng.integers(2))
    return sec


def _ps_trap_explore(dt, reg0, notes, a_map, phi_comp, comp_flow,
                     rsec, ddel, adversary, rng):
    """Measurement phase shared by the PS verified protocol and the
    multiparty protocol: the server measures dummies at random angles, traps
    at their blinded check angles, and the computation path adaptively; the
    client finishes the returned output triple. Yields TrapBranch."""
    adversary = adversary or Adversary()
    out_c, out_t, out_d = _dt_output_triples(dt)
    inputs = set(dt.topology.input_nodes)
    dummies = [v for v in dt.nodes_with_role(DUMMY) if v not in set(out_d)]
    traps = [v for v in dt.nodes_with_role(TRAP) if v not in set(out_t)]
    plan = (
        [(v, "dummy") for v in dummies]
        + [(v, "trap") for v in traps]
        + [(v, "comp") for v in comp_flow.order]
        + [(v, "out_trap") for v in out_t]
        + [(v, "out_dummy") for v in out_d]
    )
    pad = {"a": a_map}

    def finish(reg, stilde, trap_ok, raw, prob):
        corr = output_corrections(comp_flow, out_c, stilde)
        out_reg = reg.copy()
        for o in out_c:
            out_reg.apply1(P_idx(-notes.get(o, 0)), o)
            if o in inputs and a_map.get(o, 0):
                out_reg.apply1(qcore.X, o)
            sx, sz = corr[o]
            out_reg.apply1(pauli_xz(sx, sz), o)
        return TrapBranch(
            prob,
            all(trap_ok.values()),
            dict(stilde),
            out_reg.density(out_c),
            dict(trap_ok),
            dict(raw),
        )

    def recurse(reg, idx, stilde, trap_ok, raw, prob):
        if idx == len(plan):
            yield finish(reg, stilde, trap_ok, raw, prob)
            return
        v, kind = plan[idx]
        server_side = kind in ("dummy", "trap", "comp")
        if kind == "dummy":
            angle = ddel[v]
            basis = basis_from_angle(angle)
        elif kind == "out_dummy":
            basis = COMPUTATIONAL
        elif kind in ("trap", "out_trap"):
            angle = norm_angle(notes[v] + 4 * rsec[v])
            basis = basis_from_angle(angle)
        else:
            eff = _effective_phi(v, phi_comp, comp_flow, stilde, dt.topology, pad)
            angle = norm_angle(eff + notes[v] + 4 * rsec[v])
            basis = basis_from_angle(angle)
        if server_side:
            basis = basis_from_angle(adversary.on_measure_request(v, angle))
        if rng is None:
            branches = reg.branches(v, basis)
        else:
            r2 = reg.copy()
            outcome, p = r2.measure(v, basis, rng)
            branches = [(outcome, p, r2)]
        for outcome, p, reg2 in branches:
            rep = adversary.on_classical_send(v, outcome) if server_side else outcome
            st2, ok2, rw = dict(stilde), dict(trap_ok), dict(raw)
            rw[v] = rep
            if kind in ("trap", "out_trap"):
                ok2[v] = rep == rsec[v]
            elif kind == "comp":
                st2[v] = rep ^ rsec[v]
            yield from recurse(reg2, idx + 1, st2, ok2, rw, prob * p)

    yield from recurse(reg0, 0, {}, {}, {}, 1.0)


def _vbdqc_ps_register(dt, sec, input_vec):
    inputs = list(dt.topology.input_nodes)
    out_c = set(_dt_output_triples(dt)[0])
    reg = Register()
    if input_vec is None:
        input_vec = np.ones(2 ** len(inputs), dtype=complex)
        input_vec /= np.linalg.norm(input_vec)
    reg.add_state(inputs, input_vec)
    for v in inputs:
        if sec["a"][v]:
            reg.apply1(qcore.X, v)
        reg.apply1(P_idx(sec["theta_in"][v]), v)
    for v in dt.topology.nodes:
        if v in set(inputs):
            continue
        if dt.role[v] == DUMMY:
            reg.add_wire(v, COMPUTATIONAL.vec(sec["d"][v]))
        elif v in out_c:
            reg.add_wire(v, plus_state(0))
        else:
            reg.add_wire(v, plus_state(sec["theta"][v]))
    for e in dt.topology.edges:
        a, b = tuple(e)
        reg.cz(a, b)
    return reg


def _vbdqc_ps_branches(dt, phi, input_vec, sec, adversary, rng):
    comp_topo, comp_flow = comp_path(dt)
    phi_comp = comp_angles(dt, phi)
    out_c = set(_dt_output_triples(dt)[0])
    notes = {}
    for v in dt.topology.nodes:
        if dt.role[v] == DUMMY:
            continue
        if v in set(dt.topology.input_nodes):
            notes[v] = sec["theta_in"][v]
        elif v in out_c:
            notes[v] = 0
        else:
            notes[v] = sec["theta"][v]
    notes = dummy_phase_update(notes, sec["d"], dt.topology)
    reg = _vbdqc_ps_register(dt, sec, input_vec)
    (adversary or Adversary()).on_qubit_send(reg)
    a_map = {v: sec["a"][v] for v in dt.topology.input_nodes}
    yield from _ps_trap_explore(
        dt, reg, notes, a_map, phi_comp, comp_flow,
        sec["r"], sec["delta_dummy"], adversary, rng,
    )


def _vbdqc_rm_branches(dt, phi, input_vec, sec, adversary, rng):
    """RM verified delegation: the client prepares only the input triple,
    the server builds and entangles everything else as |+> and streams it;
    the client Z-measures the dummies first, then walks the pattern."""
    comp_topo, comp_flow = comp_path(dt)
    phi_comp = comp_angles(dt, phi)
    out_c, out_t, out_d = _dt_output_triples(dt)
    inputs = list(dt.topology.input_nodes)
    in_traps = {dt.t_of[v] for v in dt.base.input_nodes}
    in_dummies = {dt.d_of[v] for v in dt.base.input_nodes}
    reg = Register()
    if input_vec is None:
        input_vec = np.ones(2 ** len(inputs), dtype=complex)
        input_vec /= np.linalg.norm(input_vec)
    reg.add_state(inputs, input_vec)
    for v in inputs:
        if sec["a"][v]:
            reg.apply1(qcore.X, v)
        reg.apply1(P_idx(sec["theta_in"][v]), v)
    for v in dt.topology.nodes:
        if v in set(inputs):
            continue
        if v in in_dummies:
            reg.add_wire(v, COMPUTATIONAL.vec(sec["d"][v]))
        elif v in in_traps:
            reg.add_wire(v, plus_state(sec["theta"][v]))
        else:
            reg.add_wire(v, plus_state(0))
    for e in dt.topology.edges:
        a, b = tuple(e)
        reg.cz(a, b)
    (adversary or Adversary()).on_qubit_send(reg)

    dummies = dt.nodes_with_role(DUMMY)
    traps = [v for v in dt.nodes_with_role(TRAP) if v not in set(out_t)]
    plan = (
        [(v, "dummy") for v in dummies]
        + [(v, "comp") for v in comp_flow.order]
        + [(v, "trap") for v in traps]
        + [(v, "out_trap") for v in out_t]
    )
    nm = dt.topology.neighbor_map()
    pad = {"a": {v: sec["a"][v] for v in inputs}}

    def par_m(v, mbits):
        par = 0
        for w in nm[v]:
            if w in mbits:
                par ^= mbits[w]
        return par

    def finish(reg_f, stilde, trap_ok, mbits, raw, prob):
        corr = output_corrections(comp_flow, out_c, stilde)
        out_reg = reg_f.copy()
        for o in out_c:
            note = 4 * par_m(o, mbits)
            if o in set(inputs):
                note = norm_angle(note + sec["theta_in"][o])
            out_reg.apply1(P_idx(-note), o)
            if o in set(inputs) and sec["a"][o]:
                out_reg.apply1(qcore.X, o)
            sx, sz = corr[o]
            out_reg.apply1(pauli_xz(sx, sz), o)
        return TrapBranch(
            prob, all(trap_ok.values()), dict(stilde),
            out_reg.density(out_c), dict(trap_ok), dict(raw),
        )

    def recurse(reg_c, idx, stilde, trap_ok, mbits, raw, prob):
        if idx == len(plan):
            yield finish(reg_c, stilde, trap_ok, mbits, raw, prob)
            return
        v, kind = plan[idx]
        if kind == "dummy":
            basis = COMPUTATIONAL
        elif kind in ("trap", "out_trap"):
            theta = sec["theta"].get(v, 0)
            basis = basis_from_angle(norm_angle(theta + 4 * par_m(v, mbits)))
        else:
            eff = _effective_phi(v, phi_comp, comp_flow, stilde, dt.topology, pad)
            theta = sec["theta_in"].get(v, 0)
            basis = basis_from_angle(
                norm_angle(theta + eff + 4 * par_m(v, mbits))
            )
        if rng is None:
            branches = reg_c.branches(v, basis)
        else:
            r2 = reg_c.copy()
            outcome, p = r2.measure(v, basis, rng)
            branches = [(outcome, p, r2)]
        for outcome, p, reg2 in branches:
            st2, ok2, mb2, rw = dict(stilde), dict(trap_ok), dict(mbits), dict(raw)
            rw[v] = outcome
            if kind == "dummy":
                mb2[v] = outcome
            elif kind in ("trap", "out_trap"):
                ok2[v] = outcome == 0
            else:
                st2[v] = outcome
            yield from recurse(reg2, idx + 1, st2, ok2, mb2, rw, prob * p)

    yield from recurse(reg, 0, {}, {}, {}, {}, 1.0)


def vbdqc_branches(setting, phi, input_state, base, rng, dt=None,
                   secrets=None, adversary=None):
    """Enumerate every measurement branch of one verified run.

    Colouring and secrets are drawn from rng unless supplied. Returns
    (branches, dt, secrets)."""
    dt = dt or dotted_triple_graph(base, rng)
    sec = secrets or vbdqc_secrets(setting, dt, rng)
    vec = input_state.pure_vector() if input_state is not None else None
    if setting == "PS":
        recs = list(_vbdqc_ps_branches(dt, phi, vec, sec, adversary, None))
    elif setting == "RM":
        recs = list(_vbdqc_rm_branches(dt, phi, vec, sec, adversary, None))
    else:
        raise ValueError("setting must be PS or RM")
    return recs, dt, sec


def run_vbdqc(setting, phi, input_state, base, adversary=None, rng=None,
              dt=None, secrets=None) -> ProtocolResult:
    """One sampled verified-delegation run; aborts (output None) when any
    trap check fails."""
    dt = dt or dotted_triple_graph(base, rng)
    sec = secrets or vbdqc_secrets(setting, dt, rng)
    vec = input_state.pure_vector() if input_state is not None else None
    gen = (_vbdqc_ps_branches if setting == "PS" else _vbdqc_rm_branches)(
        dt, phi, vec, sec, adversary, rng
    )
    br = next(gen)
    transcript = Transcript()
    for v, bit in sorted(br.raw.items(), key=repr):
        transcript.add("server", "client", "result", [repr(v), int(bit)])
    return ProtocolResult(
        output=br.output if br.accepted else None,
        accepted=br.accepted,
        transcript=transcript,
        server_view=[m for m in transcript.messages],
        extras={
            "setting": setting,
            "trap_ok": {repr(k): bool(v) for k, v in br.trap_ok.items()},
            "results": {repr(k): int(v) for k, v in br.stilde.items()},
            "roles": {repr(v): dt.role[v] for v in dt.topology.nodes},
            "heralds": [],
        },
    )


# ---------------------------------------------------------------------------
# multiparty verified delegation
# ---------------------------------------------------------------------------


def _reg_dbsp(reg: Register, wire, kinds, rng) -> AngleIndex:
    """Per-node collective rotation on a live register wire; returns the
    theta the trusted party reconstructs."""
    theta = 0
    for idx, kind in enumerate(kinds):
        th = int(rng.integers(8))
        aux = ("aux", wire, idx)
        if kind.upper() == "PS":
            reg.add_wire(aux, plus_state(th))
            reg.apply2(qcore.CX, wire, aux)
            s, _ = reg.measure(aux, COMPUTATIONAL, rng)
            theta = norm_angle(theta + (th if s == 0 else -th))
        else:
            reg.add_wire(aux, COMPUTATIONAL.vec(0))
            reg.apply2(qcore.CX, wire, aux)
            r, _ = reg.measure(
                aux, qcore.conjugate_basis(basis_from_angle(th)), rng
            )
            theta = norm_angle(theta + th + 4 * r)
    return theta


def _reg_gadget(reg: Register, wire, b, kinds, rng):
    """In-register H/I gadget; returns (r, s) with r the collective choice
    bit and s the auxiliary's X-measurement outcome."""
    g = ("gadget", wire)
    reg.add_wire(g, plus_state(0))
    theta_g = _reg_dbsp(reg, g, kinds, rng)
    r = int(rng.integers(2))
    delta = norm_angle(hi_gamma(b, r) - theta_g)
    reg.apply1(P_idx(delta), g)
    reg.apply1(V_GATE, g)
    reg.apply1(qcore.X, g)
    reg.apply2(qcore.CZ, g, wire)
    reg.apply1(qcore.X, g)
    reg.apply2(qcore.CX, g, wire)
    s, _ = reg.measure(g, X_BASIS, rng)
    return r, s


def dmpqc_subprotocol1(kinds, base, input_state, rng, dt=None):
    """Collaborative state preparation: per-node DBSP, a trusted-party
    rotation, and an H/I gadget (H exactly on the dummy positions), then the
    server's global entangling layer.

    Returns (dt, register, state) where state holds the trusted party's
    angle notes, pad bits, and realized dummy values."""
    dt = dt or dotted_triple_graph(base, rng)
    inputs = list(dt.topology.input_nodes)
    dummies = set(dt.nodes_with_role(DUMMY))
    reg = Register()
    vec = input_state.pure_vector() if input_state is not None else None
    if vec is None:
        vec = np.ones(2 ** len(inputs), dtype=complex)
        vec /= np.linalg.norm(vec)
    reg.add_state(inputs, vec)
    theta = {}
    a_map = {}
    for v in inputs:
        a_map[v] = int(rng.integers(2))
        theta[v] = int(rng.integers(8))
        if a_map[v]:
            reg.apply1(qcore.X, v)
        reg.apply1(P_idx(theta[v]), v)
    for v in dt.topology.nodes:
        if v not in set(inputs):
            reg.add_wire(v, plus_state(0))
            theta[v] = 0
    d_bits = {}
    for v in dt.topology.nodes:
        theta[v] = norm_angle(theta[v] + _reg_dbsp(reg, v, kinds, rng))
        if v in dummies:
            r2 = int(rng.integers(2))
            delta2 = norm_angle(4 * r2 - theta[v])
            theta[v] = norm_angle(4 * r2)
        else:
            delta2 = int(rng.integers(8))
            theta[v] = norm_angle(theta[v] + delta2)
        reg.apply1(P_idx(delta2), v)
        b = 1 if v in dummies else 0
        r1, s1 = _reg_gadget(reg, v, b, kinds, rng)
        if b:
            d_bits[v] = r2 ^ r1 ^ s1
        else:
            x, z, _w = hi_pauli(0, r1, s1)
            theta[v] = norm_angle((-1) ** x * (theta[v] + 4 * z))
            if v in a_map and x:
                a_map[v] ^= 1
    for e in dt.topology.edges:
        a, bb = tuple(e)
        reg.cz(a, bb)
    for v in dt.topology.nodes:
        if v in dummies:
            continue
        par = 0
        for w in dt.topology.neighbors(v):
            if w in dummies:
                par ^= d_bits[w]
        if par:
            theta[v] = norm_angle(theta[v] + 4)
    state = {"theta": theta, "a": a_map, "d": d_bits}
    return dt, reg, state


def dmpqc_secrets(dt: DTGraph, rng) -> dict:
    """Trusted-party randomness for the measurement phase."""
    out_c = set(_dt_output_triples(dt)[0])
    sec = {"r": {}, "delta_dummy": {}}
    for v in dt.topology.nodes:
        if dt.role[v] == DUMMY:
            sec["delta_dummy"][v] = int(rng.integers(8))
        elif v not in out_c:
            sec["r"][v] = int(rng.integers(2))
        if dt.role[v] == TRAP:
            sec["r"][v] = sec["r"].get(v, int(rng.integers(2)))
    return sec


def _dmpqc_explore(dt, reg, state, phi, sec, adversary, rng):
    comp_topo, comp_flow = comp_path(dt)
    phi_comp = comp_angles(dt, phi)
    adversary = adversary or Adversary()
    adversary.on_qubit_send(reg)
    yield from _ps_trap_explore(
        dt, reg, state["theta"], state["a"], phi_comp, comp_flow,
        sec["r"], sec["delta_dummy"], adversary, rng,
    )


def dmpqc_branches(kinds, phi, input_state, base, rng, dt=None,
                   secrets=None, adversary=None):
    """Run the preparation phase once (sampled), then enumerate every
    measurement branch. Returns (branches, dt, state, secrets)."""
    dt, reg, state = dmpqc_subprotocol1(kinds, base, input_state, rng, dt=dt)
    sec = secrets or dmpqc_secrets(dt, rng)
    recs = list(_dmpqc_explore(dt, reg, state, phi, sec, adversary, None))
    return recs, dt, state, sec


def run_dmpqc(kinds, phi, input_state, base, adversary=None, rng=None,
              dt=None) -> ProtocolResult:
    """Full multiparty verified delegation with an in-process trusted party.

    All clients contribute to every node's blinding; traps are checked
    through the trusted party and the output keys are released only on
    global accept."""
    smpc = SmpcResource()
    for i in range(len(kinds)):
        smpc.register(f"client{i}")
    smpc.register("server")
    dt, reg, state = dmpqc_subprotocol1(kinds, base, input_state, rng, dt=dt)
    for v, th in state["theta"].items():
        smpc.call("client0", "store_theta", node=v, value=th)
    sec = dmpqc_secrets(dt, rng)
    smpc.state.r.update(sec["r"])
    smpc.state.a.update(state["a"])
    smpc.state.dummy.update(state["d"])
    br = next(_dmpqc_explore(dt, reg, state, phi, sec, adversary, rng))
    for v, ok in br.trap_ok.items():
        smpc.call("client0", "trap_check", node=v,
                  reported=smpc.state.r[v] if ok else smpc.state.r[v] ^ 1)
    accepted = br.accepted
    output = None
    if accepted:
        smpc.call("client0", "release_keys")
        output = br.output
    transcript = Transcript()
    for v, bit in sorted(br.raw.items(), key=repr):
        transcript.add("server", "smpc", "result", [repr(v), int(bit)])
    return ProtocolResult(
        output=output,
        accepted=accepted,
        transcript=transcript,
        server_view=[m for m in transcript.messages],
        extras={
            "kinds": list(kinds),
            "trap_ok": {repr(k): bool(v) for k, v in br.trap_ok.items()},
            "results": {repr(k): int(v) for k, v in br.stilde.items()},
            "roles": {repr(v): dt.role[v] for v in dt.topology.nodes},
            "smpc": smpc.call("client0", "serialize"),
            "heralds": [],
        },
    )
