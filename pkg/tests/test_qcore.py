import numpy as np
import pytest
from hypothesis import given, strategies as st

from dqcsim import qcore
from dqcsim.qcore import (
    BipartiteUnitary,
    COMPUTATIONAL,
    DensityState,
    DimensionMismatchError,
    PauliHerald,
    QubitBasis,
    P_idx,
    basis_from_angle,
    bell_measure,
    bell_state,
    bell_vector,
    conjugate_basis,
    measurement_branches,
    norm_angle,
    partial_transpose_q,
    pauli_xz,
    plus_state,
    trace_distance,
)

angle = st.integers(min_value=-20, max_value=20)
bit = st.integers(min_value=0, max_value=1)


def test_gate_unitarity():
    for U in (qcore.X, qcore.Y, qcore.Z, qcore.H, qcore.CZ, qcore.CX):
        n = U.shape[0]
        assert np.allclose(U @ U.conj().T, np.eye(n))


@given(angle)
def test_p_idx_periodic(k):
    assert np.allclose(P_idx(k), P_idx(norm_angle(k)))


def test_cx_control_first():
    # |10> -> |11>
    v = np.zeros(4)
    v[2] = 1
    out = qcore.CX @ v
    assert np.isclose(abs(out[3]), 1)


@given(angle, bit, bit)
def test_pauli_absorption_on_plus(k, x, z):
    # X^x Z^z |+_k> == |+_{(-1)^x (k + 4z)}> up to phase
    lhs = pauli_xz(x, z) @ plus_state(k)
    target = plus_state(norm_angle((-1) ** x * (k + 4 * z)))
    overlap = abs(np.vdot(target, lhs))
    assert np.isclose(overlap, 1.0, atol=1e-12)


@given(angle)
def test_basis_from_angle_orthonormal(k):
    b = basis_from_angle(k)
    assert b.origin == norm_angle(k)
    assert np.isclose(abs(np.vdot(b.v0, b.v1)), 0.0, atol=1e-12)
    assert np.isclose(np.vdot(b.v0, b.v0).real, 1.0)


@given(angle)
def test_conjugate_basis_negates_origin(k):
    b = conjugate_basis(basis_from_angle(k))
    assert b.origin == norm_angle(-k)
    assert b.close_to(QubitBasis(*[v.conj() for v in
                                   (basis_from_angle(k).v0,
                                    basis_from_angle(k).v1)]))


def test_qubit_basis_rejects_non_orthonormal():
    with pytest.raises(ValueError):
        QubitBasis(np.array([1, 0]), np.array([1, 0]))


def test_density_state_shape_mismatch():
    with pytest.raises(DimensionMismatchError):
        DensityState((2, 2), np.eye(2))


def test_partial_transpose_involution_and_blocks():
    rng = np.random.default_rng(0)
    for _ in range(20):
        m = rng.normal(size=(8, 8)) + 1j * rng.normal(size=(8, 8))
        om = BipartiteUnitary(4, m)
        omt = partial_transpose_q(om)
        # exact involution: entry permutation only
        assert np.array_equal(partial_transpose_q(omt).matrix, om.matrix)
        for a in (0, 1):
            for b in (0, 1):
                assert np.array_equal(omt.theta_block(b, a),
                                      om.theta_block(a, b))


def test_partial_transpose_unitarity_flagged():
    q, _ = np.linalg.qr(np.random.default_rng(1).normal(size=(4, 4))
                        + 1j * np.random.default_rng(2).normal(size=(4, 4)))
    om = BipartiteUnitary(2, q)
    assert om.unitary
    # CZ is diagonal, so its q-partial transpose stays unitary
    assert partial_transpose_q(BipartiteUnitary(2, qcore.CZ)).unitary


def test_apply_unitary_matches_kron():
    rng = np.random.default_rng(3)
    v = rng.normal(size=4) + 1j * rng.normal(size=4)
    state = DensityState.from_vector(v, (2, 2))
    out = qcore.apply_unitary(state, qcore.H, [1])
    U = np.kron(np.eye(2), qcore.H)
    v = v / np.linalg.norm(v)
    want = U @ np.outer(v, v.conj()) @ U.conj().T
    assert np.allclose(out.matrix, want)


@given(angle, angle)
def test_measurement_branches_complete(j, k):
    state = DensityState.from_vector(plus_state(j), (2,))
    brs = measurement_branches(state, 0, basis_from_angle(k))
    assert np.isclose(sum(p for _, p, _ in brs), 1.0, atol=1e-12)
    for _, _, post in brs:
        assert post.dims == ()


def test_bell_convention():
    # |Phi^{b0,b1}> = (I (x) X^{b1} Z^{b0}) |Phi^{00}>
    phi00 = np.zeros(4, dtype=complex)
    phi00[0] = phi00[3] = 1 / np.sqrt(2)
    for b0 in (0, 1):
        for b1 in (0, 1):
            want = np.kron(np.eye(2), pauli_xz(b1, b0)) @ phi00
            assert np.allclose(bell_vector(PauliHerald(b0, b1)), want)


def test_bell_vectors_orthonormal():
    vs = [bell_vector(PauliHerald(b0, b1)) for b0 in (0, 1) for b1 in (0, 1)]
    G = np.array([[np.vdot(a, b) for b in vs] for a in vs])
    assert np.allclose(G, np.eye(4), atol=1e-12)


def test_bell_measure_uniform_on_product_state():
    rng = np.random.default_rng(4)
    v = rng.normal(size=2) + 1j * rng.normal(size=2)
    v /= np.linalg.norm(v)
    joint = DensityState((2, 2, 2),
                         np.kron(np.outer(v, v.conj()),
                                 bell_state(PauliHerald(0, 0)).matrix))
    counts = {}
    for _ in range(200):
        h, p, post = bell_measure(joint, 0, 1, rng)
        assert np.isclose(p, 0.25, atol=1e-12)
        counts[(h.b0, h.b1)] = counts.get((h.b0, h.b1), 0) + 1
        if h.is_identity():
            # teleportation: remaining wire equals the input
            assert trace_distance(post, DensityState.from_vector(v, (2,))) < 1e-10
    assert len(counts) == 4


def test_trace_distance_bounds():
    a = DensityState.from_vector(np.array([1, 0]), (2,))
    b = DensityState.from_vector(np.array([0, 1]), (2,))
    assert np.isclose(trace_distance(a, b), 1.0)
    assert trace_distance(a, a) < 1e-15
    with pytest.raises(DimensionMismatchError):
        trace_distance(a, DensityState.from_vector(np.ones(4), (2, 2)))


def test_computational_basis_vectors():
    assert np.array_equal(COMPUTATIONAL.vec(0), np.array([1, 0]))
    assert np.array_equal(COMPUTATIONAL.vec(1), np.array([0, 1]))
