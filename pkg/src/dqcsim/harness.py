"""Verification battery: independent oracle, identity checks, and drivers.

Every check is a deterministic function of its seed and returns a
CheckReport whose deviation is an exact (enumerated) or empirical distance.
The brute-force oracle propagates measurement corrections with its own
bit-tracking code, sharing no correction formulas with the graphs or
protocols modules, so agreement between them is evidence rather than
tautology.
"""
from __future__ import annotations

import zlib
from dataclasses import dataclass, field

import numpy as np

from . import protocols, qcore, routines, simulators
from ._engine import Register
from .graphs import GraphTopology, build_brickwork, build_linear_cluster, \
    dotted_triple_graph, DUMMY, TRAP
from .protocols import (
    BasisAttack,
    RandomZAttack,
    ReportAttack,
    dbsp_branches,
    dbsp_mixed_branches,
    dmpqc_branches,
    hi_gadget_branches,
    hi_pauli,
    pattern_branches,
    vbdqc_branches,
    vbdqc_secrets,
)
from .qcore import (
    ATOL_ALG,
    ATOL_EXACT,
    DensityState,
    P_idx,
    PauliHerald,
    QubitBasis,
    basis_from_angle,
    bell_vector,
    conjugate_basis,
    norm_angle,
    pauli_xz,
    plus_state,
    trace_distance,
    trace_norm,
)
from .routines import RoutineSpec, kraus_ps, kraus_rm


# ---------------------------------------------------------------------------
# reporting
# ---------------------------------------------------------------------------


@dataclass
class CheckReport:
    check: str
    anchor: str
    deviation: float
    tolerance: float
    passed: bool
    branches: int | None = None
    trials: int | None = None
    seed: int | None = None
    details: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        out = {
            "check": self.check,
            "anchor": self.anchor,
            "deviation": float(self.deviation),
            "tolerance": float(self.tolerance),
            "pass": bool(self.passed),
            "seed": self.seed,
        }
        if self.branches is not None:
            out["branches"] = int(self.branches)
        if self.trials is not None:
            out["trials"] = int(self.trials)
        if self.details:
            out["details"] = self.details
        return out


def _report(check, anchor, deviation, tolerance, seed, branches=None,
            trials=None, details=None) -> CheckReport:
    return CheckReport(
        check=check,
        anchor=anchor,
        deviation=float(deviation),
        tolerance=float(tolerance),
        passed=bool(deviation <= tolerance),
        branches=branches,
        trials=trials,
        seed=seed,
        details=details or {},
    )


def named_rng(seed: int, name: str):
    """Independent deterministic sub-stream for a named job."""
    return np.random.default_rng(
        np.random.SeedSequence([int(seed), zlib.crc32(name.encode())])
    )


def wilson_interval(k: int, n: int, z: float = 3.0):
    """Wilson score interval for a binomial proportion."""
    if n == 0:
        return 0.0, 1.0
    p = k / n
    denom = 1 + z * z / n
    centre = (p + z * z / (2 * n)) / denom
    half = z * np.sqrt(p * (1 - p) / n + z * z / (4 * n * n)) / denom
    return max(0.0, centre - half), min(1.0, centre + half)


# ---------------------------------------------------------------------------
# independent brute-force oracle
# ---------------------------------------------------------------------------

ORACLE_SIZE_CAP = 12


def _oracle_defaults(topology: GraphTopology):
    """Measurement order and byproduct successor, derived directly from the
    node shape (ints: path order; pairs: column-major grid)."""
    outs = set(topology.output_nodes)
    if all(isinstance(v, tuple) for v in topology.nodes):
        order = sorted((v for v in topology.nodes if v not in outs),
                       key=lambda v: (v[1], v[0]))
        successor = {v: (v[0], v[1] + 1) for v in order}
    else:
        order = sorted(v for v in topology.nodes if v not in outs)
        successor = {v: v + 1 for v in order}
    return tuple(order), successor


def oracle_circuit(topology: GraphTopology, phi, input_state=None,
                   order=None, successor=None):
    """Ground-truth pattern evaluation, all branches.

    Builds the graph state, measures each non-output node at its corrected
    angle, and undoes the byproduct Paulis on the outputs. Corrections are
    tracked by direct bit propagation along the successor map. Returns a
    list of (results tuple, probability, output DensityState).
    """
    if len(topology.nodes) > ORACLE_SIZE_CAP:
        raise ValueError("oracle size cap exceeded")
    d_order, d_succ = _oracle_defaults(topology)
    order = tuple(order) if order is not None else d_order
    successor = successor if successor is not None else d_succ
    phi = dict(phi) if isinstance(phi, dict) else dict(zip(order, phi))
    nm = topology.neighbor_map()
    inputs = list(topology.input_nodes)
    outputs = list(topology.output_nodes)

    reg = Register()
    vec = input_state.pure_vector() if input_state is not None else None
    if vec is None:
        vec = np.ones(2 ** len(inputs), dtype=complex)
        vec /= np.linalg.norm(vec)
    reg.add_state(inputs, vec)
    for v in topology.nodes:
        if v not in set(inputs):
            reg.add_wire(v, plus_state(0))
    for e in topology.edges:
        a, b = tuple(e)
        reg.cz(a, b)

    results = []

    def recurse(r, idx, xpar, zpar, outcomes, prob):
        if idx == len(order):
            out_reg = r.copy()
            for o in outputs:
                U = np.eye(2, dtype=complex)
                if zpar[o]:
                    U = qcore.Z @ U
                if xpar[o]:
                    U = qcore.X @ U
                out_reg.apply1(U, o)
            results.append((tuple(outcomes), prob, out_reg.density(outputs)))
            return
        v = order[idx]
        angle = norm_angle((-phi[v] if xpar[v] else phi[v]) + 4 * zpar[v])
        for s, p, r2 in r.branches(v, basis_from_angle(angle)):
            xp, zp = dict(xpar), dict(zpar)
            f = successor.get(v)
            if f is not None and f in xp:
                xp[f] ^= s
                for w in nm[f]:
                    if w != v and w in zp:
                        zp[w] ^= s
            recurse(r2, idx + 1, xp, zp, outcomes + [s], prob * p)

    zero = {v: 0 for v in topology.nodes}
    recurse(reg, 0, dict(zero), dict(zero), [], 1.0)
    return results


# ---------------------------------------------------------------------------
# random spec generation
# ---------------------------------------------------------------------------


def random_unitary(n: int, rng) -> np.ndarray:
    z = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    q, r = np.linalg.qr(z)
    return q * (np.diag(r) / np.abs(np.diag(r)))


def random_basis(rng) -> QubitBasis:
    if rng.random() < 0.5:
        return basis_from_angle(int(rng.integers(8)))
    u = random_unitary(2, rng)
    return QubitBasis(u[:, 0], u[:, 1])


def random_spec(rng, d_x: int, setting: str = "PS") -> RoutineSpec:
    return RoutineSpec(
        setting=setting,
        P=random_basis(rng),
        M=random_basis(rng),
        omega=qcore.BipartiteUnitary(d_x, random_unitary(2 * d_x, rng)),
        d_x=d_x,
    )


# ---------------------------------------------------------------------------
# checks
# ---------------------------------------------------------------------------


def check_kraus_equality(n_trials: int = 100, dims=(2, 4, 8),
                         seed: int = 0) -> CheckReport:
    """Both contraction routes agree entrywise and are trace-complete."""
    rng = named_rng(seed, "kraus")
    dev = 0.0
    for t in range(n_trials):
        d_x = int(dims[t % len(dims)])
        spec = random_spec(rng, d_x)
        total = np.zeros((d_x, d_x), dtype=complex)
        for r in (0, 1):
            for s in (0, 1):
                A = kraus_ps(spec, r, s)
                B = kraus_rm(spec, r, s)
                dev = max(dev, float(np.max(np.abs(A - B))))
                total += A.conj().T @ A
        dev = max(dev, float(np.max(np.abs(total - 2 * np.eye(d_x)))))
    return _report("kraus", "kraus-block-vs-transpose-contraction",
                   dev, ATOL_ALG, seed, trials=n_trials)


def _pauli_herald_matrix(h: PauliHerald) -> np.ndarray:
    m = np.eye(2, dtype=complex)
    if h.b0:
        m = qcore.Z @ m
    if h.b1:
        m = qcore.X @ m
    return m  # X^{B1} Z^{B0}


def check_simulator_identities(seed: int = 0, n_omega: int = 20) -> CheckReport:
    """The five Bell-contraction identities behind the channel simulators."""
    rng = named_rng(seed, "identities")
    phi00 = bell_vector(PauliHerald(0, 0)).reshape(2, 2)
    heralds = [PauliHerald(b0, b1) for b0 in (0, 1) for b1 in (0, 1)]
    omegas = [random_unitary(4, rng) for _ in range(n_omega)]
    dev = 0.0
    per = {}

    # identity 1: client-side preparation via a Bell half
    d = 0.0
    for k in range(8):
        P = basis_from_angle(k)
        Pbar = conjugate_basis(P)
        for r in (0, 1):
            lhs = np.einsum("a,aj->j", Pbar.vec(r).conj(), phi00)
            d = max(d, float(np.max(np.abs(lhs - P.vec(r) / np.sqrt(2)))))
    per["bell-prep"] = d
    dev = max(dev, d)

    # identity 2: server-side measurement via Bell measurement, with omega
    d = 0.0
    for Om in omegas:
        O4 = Om.reshape(2, 2, 2, 2)
        OT = qcore.partial_transpose_q(
            qcore.BipartiteUnitary(2, Om)).matrix.reshape(2, 2, 2, 2)
        for k in range(8):
            M = basis_from_angle(k)
            mbar = conjugate_basis(M)
            for h in heralds:
                phiB = bell_vector(h).reshape(2, 2)
                G = _pauli_herald_matrix(h)
                for s in (0, 1):
                    lhs = np.einsum("pa,aibj,b->ipj",
                                    phiB.conj(), OT, mbar.vec(s))
                    rhs = np.einsum("b,bicj,cp->ipj",
                                    M.vec(s).conj(), O4, G) / np.sqrt(2)
                    d = max(d, float(np.max(np.abs(lhs - rhs))))
    per["bell-meas-omega"] = d
    dev = max(dev, d)

    # identity 3: composing the two Bell halves leaves a known Pauli
    d = 0.0
    for h in heralds:
        phiB = bell_vector(h).reshape(2, 2)
        lhs = np.einsum("ab,bc->ac", phi00, phiB.conj())
        rhs = 0.5 * (_pauli_herald_matrix(h).T)
        d = max(d, float(np.max(np.abs(lhs - rhs))))
    per["bell-comb"] = d
    dev = max(dev, d)

    # identity 4: Bell measurement of a prepared basis state
    d = 0.0
    for k in range(8):
        P = basis_from_angle(k)
        Pbar = conjugate_basis(P)
        for h in heralds:
            phiB = bell_vector(h).reshape(2, 2)
            G = _pauli_herald_matrix(h)
            for r in (0, 1):
                lhs = np.einsum("pa,a->p", phiB.conj(), P.vec(r))
                rhs = np.einsum("a,ap->p", Pbar.vec(r).conj(), G) / np.sqrt(2)
                d = max(d, float(np.max(np.abs(lhs - rhs))))
    per["bell-meas-state"] = d
    dev = max(dev, d)

    # identity 5: preparation through omega equals the transposed route
    d = 0.0
    for Om in omegas:
        O4 = Om.reshape(2, 2, 2, 2)
        OT = qcore.partial_transpose_q(
            qcore.BipartiteUnitary(2, Om)).matrix.reshape(2, 2, 2, 2)
        for k in range(8):
            M = basis_from_angle(k)
            mbar = conjugate_basis(M)
            for s in (0, 1):
                lhs = np.einsum("pa,b,biaj->pij",
                                phi00, M.vec(s).conj(), O4)
                rhs = np.einsum("pibj,b->pij", OT, mbar.vec(s)) / np.sqrt(2)
                d = max(d, float(np.max(np.abs(lhs - rhs))))
    per["bell-prep-omega"] = d
    dev = max(dev, d)

    return _report("identities", "bell-pair-contraction-identities",
                   dev, ATOL_ALG, seed,
                   branches=8 * 2 * len(heralds) * (2 + 2 * n_omega),
                   details={k: float(v) for k, v in per.items()})


def check_herald_statistics(n_trials: int = 10000, seed: int = 0) -> CheckReport:
    """Bell-measurement heralds are uniform; here the (0,0) frequency."""
    rng = named_rng(seed, "heralds")
    psi = random_unitary(2, rng)[:, 0]
    counts = {(b0, b1): 0 for b0 in (0, 1) for b1 in (0, 1)}
    cond_dev = 0.0
    target = DensityState.from_vector(psi, (2,))
    messages = []
    for _ in range(n_trials):
        _, _, bell = simulators.sim_bell_prep()
        joint = DensityState(
            (2, 2, 2), np.kron(np.outer(psi, psi.conj()), bell.matrix)
        )
        herald, _p, post = simulators.sim_bell_meas(joint, 0, 1, rng)
        counts[(herald.b0, herald.b1)] += 1
        messages.append((simulators.HERALD_TAG, herald))
        if herald.is_identity():
            cond_dev = max(cond_dev, trace_distance(post, target))
    forwarded, log = simulators.heralding_filter(
        messages, {simulators.HERALD_TAG}
    )
    freq = counts[(0, 0)] / n_trials
    dev = abs(freq - 0.25)
    lo, hi = wilson_interval(counts[(0, 0)], n_trials)
    return _report(
        "heralds", "bell-herald-uniformity", dev, 0.015, seed,
        trials=n_trials,
        details={
            "freq00": freq,
            "wilson": [lo, hi],
            "conditioned_identity_dev": float(cond_dev),
            "forwarded": len(forwarded),
            "suppressed": len(log),
        },
    )


# --- blindness -------------------------------------------------------------


def _enumerate_pattern_secrets(style, topology, flow):
    """Every secret assignment with its probability, for tiny instances."""
    inputs = list(topology.input_nodes)
    outputs = set(topology.output_nodes)
    aux = [v for v in topology.nodes
           if v not in set(inputs) and v not in outputs]
    meas_inputs = [v for v in flow.order if v in set(inputs)]

    slots = []
    for v in inputs:
        slots.append(("theta_in", v, 8))
        slots.append(("a", v, 2))
    for v in aux:
        if style == "bfk":
            slots.append(("theta", v, 8))
        elif style == "tau":
            slots.append(("c", v, 8))
            slots.append(("s_srv", v, 2))
    for v in flow.order:
        if style == "bfk" or (style == "tau" and v in set(meas_inputs)):
            slots.append(("r", v, 2))

    total = 1
    for _, _, n in slots:
        total *= n

    def build(idx, sec):
        if idx == len(slots):
            yield {k: dict(v) for k, v in sec.items()}, 1.0 / total
            return
        kind, v, n = slots[idx]
        for val in range(n):
            sec[kind][v] = val
            yield from build(idx + 1, sec)
        del sec[kind][v]

    base = {"theta": {}, "r": {}, "a": {}, "theta_in": {}, "c": {},
            "s_srv": {}}
    yield from build(0, base)


def _received_state(style, topology, sec, input_vec) -> np.ndarray:
    """The pure state the server receives at the start of a delegated run."""
    inputs = list(topology.input_nodes)
    outputs = set(topology.output_nodes)
    vec = np.asarray(input_vec, dtype=complex).reshape((2,) * len(inputs))
    reg = Register()
    reg.add_state(inputs, vec)
    for v in inputs:
        if sec["a"][v]:
            reg.apply1(qcore.X, v)
        reg.apply1(P_idx(sec["theta_in"][v]), v)
    if style == "bfk":
        for v in topology.nodes:
            if v in set(inputs):
                continue
            if v in outputs:
                reg.add_wire(v, plus_state(0))
            else:
                reg.add_wire(v, plus_state(sec["theta"][v]))
    return reg.state_vector(sorted(reg.wires, key=repr))


def _view_distance(va: dict, vb: dict) -> float:
    dist = 0.0
    for key in set(va) | set(vb):
        ma = va.get(key)
        mb = vb.get(key)
        if ma is None:
            ma = np.zeros_like(mb)
        if mb is None:
            mb = np.zeros_like(ma)
        dist += 0.5 * trace_norm(ma - mb)
    return dist


def _server_views(style, topology, phi, input_state):
    """Exact server view for one computation: the classical record paired
    with (a) the received ciphertext and (b) the residual output qubits."""
    flow = protocols.default_flow(topology)
    phi = protocols.normalize_angles(phi, flow)
    vec = (input_state.pure_vector() if input_state is not None
           else plus_state(0))
    start_view: dict = {}
    end_view: dict = {}
    ciphertext = None
    n_branches = 0
    for sec, w in _enumerate_pattern_secrets(style, topology, flow):
        classical_in = []
        if style == "tau":
            classical_in = [sec["c"][v] for v in sorted(sec["c"], key=repr)]
        recs, _ = pattern_branches(
            style, phi, input_state, topology, None, flow=flow, secrets=sec
        )
        psi = _received_state(style, topology, sec, vec)
        rho_rec = np.outer(psi, psi.conj()) if psi.size else None
        for rec in recs:
            n_branches += 1
            deltas = tuple(rec.deltas[v] for v in flow.order
                           if v in rec.deltas)
            raws = tuple(rec.raw[v] for v in flow.order if v in rec.deltas)
            key0 = (tuple(classical_in), deltas)
            if rho_rec is not None:
                cur = start_view.get(key0)
                start_view[key0] = (w * rec.prob * rho_rec
                                    if cur is None
                                    else cur + w * rec.prob * rho_rec)
            key1 = (tuple(classical_in), deltas, raws)
            m = w * rec.prob * rec.raw_output.matrix
            cur = end_view.get(key1)
            end_view[key1] = m if cur is None else cur + m
            c = w * rec.prob * (rho_rec if rho_rec is not None
                                else np.zeros((1, 1)))
            ciphertext = c if ciphertext is None else ciphertext + c
    return start_view, end_view, ciphertext, n_branches


def check_blindness(protocol: str = "bfk", n: int = 2, phi_a=None,
                    phi_b=None, seed: int = 0) -> CheckReport:
    """Exact server-view equality between two computations."""
    rng = named_rng(seed, f"blindness-{protocol}")
    topology = build_linear_cluster(n)
    flow = protocols.default_flow(topology)
    k = len(flow.order)
    phi_a = list(phi_a) if phi_a is not None else [1] * k
    phi_b = list(phi_b) if phi_b is not None else [2] * k
    psi = random_unitary(2, rng)[:, 0]
    input_state = DensityState.from_vector(psi, (2,))
    sa, ea, ca, nb = _server_views(protocol, topology, phi_a, input_state)
    sb, eb, cb, _ = _server_views(protocol, topology, phi_b, input_state)
    dev = max(_view_distance(sa, sb), _view_distance(ea, eb))
    cipher_dev = 0.0
    if ca is not None and ca.shape[0] > 1:
        # the averaged ciphertext must also match between computations
        cipher_dev = 0.5 * trace_norm(ca - cb)
        dev = max(dev, cipher_dev)
    return _report(
        f"blindness-{protocol}", "server-view-independence",
        dev, ATOL_EXACT, seed, branches=nb,
        details={"phi_a": phi_a, "phi_b": phi_b,
                 "ciphertext_dev": float(cipher_dev)},
    )


# --- equivalence -----------------------------------------------------------


def _pattern_distribution(style, topology, phi, input_state):
    """Joint (logical results, output state) distribution, secrets
    marginalized by exact enumeration."""
    flow = protocols.default_flow(topology)
    dist: dict = {}
    total = 0
    for sec, w in _enumerate_pattern_secrets(style, topology, flow):
        recs, _ = pattern_branches(
            style, phi, input_state, topology, None, flow=flow, secrets=sec
        )
        for rec in recs:
            total += 1
            key = tuple(rec.stilde[v] for v in flow.order)
            m = w * rec.prob * rec.output.matrix
            cur = dist.get(key)
            dist[key] = m if cur is None else cur + m
    return dist, total


def check_equivalence(proto_a: str, proto_b: str, seed: int = 0) -> CheckReport:
    """Exact equality of observable run distributions for a protocol pair.

    Supported ids: bfk, mf13, tau, dbsp-ps, dbsp-rm, hi-ps, hi-rm,
    vbdqc-ps, vbdqc-rm (paired within each family).
    """
    rng = named_rng(seed, f"equiv-{proto_a}-{proto_b}")
    pair = {proto_a, proto_b}
    psi = random_unitary(2, rng)[:, 0]
    rho = DensityState.from_vector(psi, (2,))

    if pair <= {"bfk", "mf13", "tau"}:
        n = 3 if "tau" in pair else 2
        topology = build_linear_cluster(n)
        phi = [int(rng.integers(8)) for _ in range(n - 1)]
        da, na = _pattern_distribution(proto_a, topology, phi, rho)
        db, nb = _pattern_distribution(proto_b, topology, phi, rho)
        dev = _view_distance(da, db)
        return _report(f"equivalence-{proto_a}-{proto_b}",
                       "joint-results-and-output-distribution",
                       dev, ATOL_EXACT, seed, branches=na + nb,
                       details={"phi": phi})

    if pair == {"dbsp-ps", "dbsp-rm"}:
        dev = 0.0
        total = 0
        for t1 in range(8):
            for t2 in range(8):
                da: dict = {}
                db: dict = {}
                for rb in ((0, 0), (0, 1), (1, 0), (1, 1)):
                    for bits, p, state, theta in dbsp_branches(
                        "PS", rho, [t1, t2], rbits=list(rb)
                    ):
                        key = (theta, (rb[0], bits[0]), (rb[1], bits[1]))
                        m = 0.25 * p * state.matrix
                        da[key] = da.get(key, 0) + m
                        total += 1
                for sb in ((0, 0), (0, 1), (1, 0), (1, 1)):
                    for bits, p, state, theta in dbsp_branches(
                        "RM", rho, [t1, t2], sbits=list(sb)
                    ):
                        key = (theta, (bits[0], sb[0]), (bits[1], sb[1]))
                        m = 0.25 * p * state.matrix
                        db[key] = db.get(key, 0) + m
                        total += 1
                dev = max(dev, _view_distance(da, db))
        return _report("equivalence-dbsp", "collective-rotation-ps-vs-rm",
                       dev, ATOL_EXACT, seed, branches=total)

    if pair == {"hi-ps", "hi-rm"}:
        dev = 0.0
        total = 0
        for b in (0, 1):
            da: dict = {}
            db: dict = {}
            for setting, dist in (("PS", da), ("RM", db)):
                for r, s, p, post in hi_gadget_branches(setting, b, rho):
                    key = (r, s)
                    m = p * post.matrix
                    dist[key] = dist.get(key, 0) + m
                    total += 1
            dev = max(dev, _view_distance(da, db))
        return _report("equivalence-hi", "hi-gadget-ps-vs-rm",
                       dev, ATOL_EXACT, seed, branches=total)

    if pair == {"vbdqc-ps", "vbdqc-rm"}:
        base = build_linear_cluster(2)
        phi = [int(rng.integers(8))]
        dt = dotted_triple_graph(base, rng)
        comp_topo, comp_flow = protocols.comp_path(dt)
        dists = []
        total = 0
        for setting in ("PS", "RM"):
            recs, _, _ = vbdqc_branches(
                setting, phi, rho, base, rng, dt=dt
            )
            dist: dict = {}
            for br in recs:
                total += 1
                key = (br.accepted,
                       tuple(br.stilde[v] for v in comp_flow.order))
                m = br.prob * br.output.matrix
                dist[key] = dist.get(key, 0) + m
            dists.append(dist)
        dev = _view_distance(dists[0], dists[1])
        return _report("equivalence-vbdqc", "verified-delegation-ps-vs-rm",
                       dev, ATOL_EXACT, seed, branches=total,
                       details={"phi": phi})

    raise ValueError(f"unsupported pair ({proto_a}, {proto_b})")


# --- formulas --------------------------------------------------------------


def check_dbsp_formula(seed: int = 0) -> CheckReport:
    """Returned state is exactly P(theta) rho P(theta)† with the announced
    theta, exhaustively for one and two clients plus the mixed variant."""
    rng = named_rng(seed, "dbsp-formula")
    psi = random_unitary(2, rng)[:, 0]
    rho = DensityState.from_vector(psi, (2,))
    dev = 0.0
    total = 0

    def expected(theta):
        m = P_idx(theta)
        return DensityState((2,), m @ rho.matrix @ m.conj().T)

    for setting in ("PS", "RM"):
        for k in (1, 2):
            for flat in range(8 ** k):
                thetas = [(flat // (8 ** i)) % 8 for i in range(k)]
                for bflat in range(2 ** k):
                    bits = [(bflat >> i) & 1 for i in range(k)]
                    kw = {"rbits": bits} if setting == "PS" else {"sbits": bits}
                    for _o, p, state, theta in dbsp_branches(
                        setting, rho, thetas, **kw
                    ):
                        total += 1
                        dev = max(dev, trace_distance(state, expected(theta)))
    for t1 in range(8):
        for t2 in range(8):
            for _o, p, state, theta in dbsp_mixed_branches(
                ["PS", "RM"], rho, [t1, t2]
            ):
                total += 1
                dev = max(dev, trace_distance(state, expected(theta)))
    return _report("dbsp-formula", "collective-rotation-angle-formula",
                   dev, ATOL_ALG, seed, branches=total)


def check_hi_gadget(seed: int = 0) -> CheckReport:
    """Every gadget branch acts as the recorded Pauli times H or I."""
    rng = named_rng(seed, "hi-gadget")
    psi = random_unitary(2, rng)[:, 0]
    rho = DensityState.from_vector(psi, (2,))
    dev = 0.0
    total = 0
    for setting in ("PS", "RM"):
        for b in (0, 1):
            for r, s, p, post in hi_gadget_branches(setting, b, rho):
                if p <= 1e-12:
                    continue
                total += 1
                x, z, w = hi_pauli(b, r, s)
                W = qcore.H if w == "H" else np.eye(2, dtype=complex)
                U = pauli_xz(x, z) @ W
                want = U @ rho.matrix @ U.conj().T
                want = want / np.trace(want).real
                dev = max(dev, trace_distance(post, DensityState((2,), want)))
    return _report(
        "hi-gadget", "gadget-branch-pauli-times-hadamard-or-identity",
        dev, ATOL_ALG, seed, branches=total,
        details={"binding": {"b=1": "H", "b=0": "I"}},
    )


def check_bfk_oracle(seed: int = 0, lengths=(2, 3, 4), patterns: int = 3,
                     brickwork=True) -> CheckReport:
    """Delegated output equals the independent oracle, branch by branch."""
    rng = named_rng(seed, "bfk-oracle")
    dev = 0.0
    total = 0

    def compare(topology, phi, input_state):
        nonlocal dev, total
        flow = protocols.default_flow(topology)
        recs, _sec = pattern_branches("bfk", phi, input_state, topology, rng)
        got: dict = {}
        for rec in recs:
            key = tuple(rec.stilde[v] for v in flow.order)
            got[key] = got.get(key, 0) + rec.prob * rec.output.matrix
        want: dict = {}
        for key, p, out in oracle_circuit(topology, dict(zip(flow.order, phi)),
                                          input_state, order=flow.order):
            want[key] = want.get(key, 0) + p * out.matrix
        for key in set(got) | set(want):
            total += 1
            a = got.get(key, np.zeros((2, 2)))
            b = want.get(key, np.zeros((2, 2)))
            dev = max(dev, 0.5 * trace_norm(a - b))

    for n in lengths:
        topo = build_linear_cluster(n)
        for _ in range(patterns):
            phi = [int(rng.integers(8)) for _ in range(n - 1)]
            psi = random_unitary(2, rng)[:, 0]
            compare(topo, phi, DensityState.from_vector(psi, (2,)))
    if brickwork:
        topo = build_brickwork(2, 5)
        flow = protocols.default_flow(topo)
        phi = [int(rng.integers(8)) for _ in flow.order]
        vec = random_unitary(4, rng)[:, 0]
        compare(topo, phi, DensityState.from_vector(vec, (2, 2)))
    return _report("bfk-oracle", "delegated-output-equals-bare-pattern",
                   dev, ATOL_ALG, seed, branches=total)


# --- graphs ----------------------------------------------------------------


def _random_base_graph(rng) -> GraphTopology:
    n = int(rng.integers(1, 7))
    nodes = tuple(range(1, n + 1))
    edges = []
    for i in range(1, n + 1):
        for j in range(i + 1, n + 1):
            if rng.random() < 0.5:
                edges.append(frozenset((i, j)))
    inp = (1,) if n else ()
    out = (n,) if n else ()
    return GraphTopology(nodes, tuple(edges), inp, out)


def check_dt_graph(n_graphs: int = 100, seed: int = 0) -> CheckReport:
    """Counts, colouring, and trap-isolation invariants of DT(G)."""
    rng = named_rng(seed, "dt-graph")
    bad = 0
    for _ in range(n_graphs):
        base = _random_base_graph(rng)
        dt = dotted_triple_graph(base, rng)
        nv, ne = len(base.nodes), len(base.edges)
        ok = len(dt.topology.nodes) == 3 * nv + 9 * ne
        ok &= len(dt.topology.edges) == 18 * ne
        for v in base.nodes:
            cols = {dt.colour[("p", v, j)] for j in (1, 2, 3)}
            ok &= cols == {"green", "blue", "gray"}
            ok &= dt.c_of[v][1] == v and dt.t_of[v][1] == v
        for t in dt.nodes_with_role(TRAP):
            for w in dt.topology.neighbors(t):
                ok &= dt.role[w] == DUMMY
        bad += 0 if ok else 1
    return _report("dt-graph", "triple-and-dot-construction-invariants",
                   float(bad), 0.0, seed, trials=n_graphs)


# --- traps and attacks -----------------------------------------------------


def check_traps(attack: str = "honest", seed: int = 0) -> CheckReport:
    """Honest runs accept with probability exactly one; canned attacks
    abort with the enumerated rates."""
    rng = named_rng(seed, f"traps-{attack}")
    base = build_linear_cluster(2)
    phi = [int(rng.integers(8))]
    psi = random_unitary(2, rng)[:, 0]
    rho = DensityState.from_vector(psi, (2,))
    dt = dotted_triple_graph(base, rng)
    sec = vbdqc_secrets("PS", dt, rng)

    def accept_prob(adversary=None, secrets=None):
        recs, _, _ = vbdqc_branches("PS", phi, rho, base, rng, dt=dt,
                                    secrets=secrets or sec,
                                    adversary=adversary)
        return sum(br.prob for br in recs if br.accepted), len(recs)

    if attack == "honest":
        acc_v, nb = accept_prob()
        drecs, _, _, _ = dmpqc_branches(
            ["PS", "RM"], phi, rho, base, named_rng(seed, "traps-dmpqc")
        )
        acc_d = sum(br.prob for br in drecs if br.accepted)
        dev = max(abs(1.0 - acc_v), abs(1.0 - acc_d))
        return _report("traps-honest", "honest-run-always-accepts",
                       dev, ATOL_EXACT, seed, branches=nb + len(drecs),
                       details={"vbdqc_accept": acc_v, "dmpqc_accept": acc_d})

    if attack == "z":
        wires = list(dt.topology.nodes)
        aborts = []
        nb = 0
        for w in wires:
            acc, n = accept_prob(RandomZAttack(rng, wire=w))
            aborts.append(1.0 - acc)
            nb += n
        rate = float(np.mean(aborts))
        n_traps = len(dt.nodes_with_role(TRAP))
        expected = n_traps / len(wires)
        dev = abs(rate - expected)
        if rate <= 0:
            dev = 1.0
        return _report("traps-z", "single-z-detection-rate",
                       dev, ATOL_EXACT, seed, branches=nb,
                       details={"rate": rate, "expected": expected,
                                "traps": n_traps, "wires": len(wires)})

    if attack == "report":
        trap = dt.nodes_with_role(TRAP)[0]
        rates = []
        nb = 0
        for rbit in (0, 1):
            forced = {k: dict(v) for k, v in sec.items()}
            forced["r"][trap] = rbit
            acc, n = accept_prob(
                ReportAttack(trap, mode="constant", value=0), forced
            )
            rates.append(1.0 - acc)
            nb += n
        rate = 0.5 * (rates[0] + rates[1])
        dev = abs(rate - 0.5)
        if rate <= 0:
            dev = 1.0
        return _report("traps-report", "constant-trap-report-half-rate",
                       dev, ATOL_EXACT, seed, branches=nb,
                       details={"rate_per_r": rates})

    if attack == "basis":
        trap = dt.nodes_with_role(TRAP)[0]
        acc, nb = accept_prob(BasisAttack(rng, node=trap, offset=1))
        rate = 1.0 - acc
        expected = float(np.sin(np.pi / 8) ** 2)
        dev = abs(rate - expected)
        if rate <= 0:
            dev = 1.0
        return _report("traps-basis", "off-basis-trap-detection",
                       dev, ATOL_ALG, seed, branches=nb,
                       details={"rate": rate, "expected": expected})

    raise ValueError(f"unknown attack {attack!r}")


# ---------------------------------------------------------------------------
# battery
# ---------------------------------------------------------------------------

CHECKS = {
    "kraus": lambda seed: check_kraus_equality(seed=seed),
    "identities": lambda seed: check_simulator_identities(seed=seed),
    "heralds": lambda seed: check_herald_statistics(seed=seed),
    "bfk-oracle": lambda seed: check_bfk_oracle(seed=seed),
    "blindness-bfk": lambda seed: check_blindness("bfk", seed=seed),
    "blindness-mf13": lambda seed: check_blindness("mf13", seed=seed),
    "equivalence-bfk-mf13": lambda seed: check_equivalence("bfk", "mf13", seed=seed),
    "equivalence-bfk-tau": lambda seed: check_equivalence("bfk", "tau", seed=seed),
    "equivalence-tau-mf13": lambda seed: check_equivalence("tau", "mf13", seed=seed),
    "equivalence-dbsp": lambda seed: check_equivalence("dbsp-ps", "dbsp-rm", seed=seed),
    "equivalence-hi": lambda seed: check_equivalence("hi-ps", "hi-rm", seed=seed),
    "equivalence-vbdqc": lambda seed: check_equivalence("vbdqc-ps", "vbdqc-rm", seed=seed),
    "dbsp-formula": lambda seed: check_dbsp_formula(seed=seed),
    "hi-gadget": lambda seed: check_hi_gadget(seed=seed),
    "dt-graph": lambda seed: check_dt_graph(seed=seed),
    "traps-honest": lambda seed: check_traps("honest", seed=seed),
    "traps-z": lambda seed: check_traps("z", seed=seed),
    "traps-report": lambda seed: check_traps("report", seed=seed),
    "traps-basis": lambda seed: check_traps("basis", seed=seed),
}


def run_checks(names=None, seed: int = 0):
    """Run named checks (default: all) and return the reports in order."""
    names = list(names) if names else list(CHECKS)
    out = []
    for name in names:
        if name not in CHECKS:
            raise KeyError(name)
        out.append(CHECKS[name](seed))
    return out
