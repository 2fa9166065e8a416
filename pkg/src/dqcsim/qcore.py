"""Linear-algebra substrate: angles, bases, gates, density states, Bell pairs.

Conventions used throughout the package:

- Angles live on the eighth-turn lattice: an AngleIndex k stands for
  theta = k*pi/4, arithmetic is mod 8 (a +pi shift is k+4).
- |+_theta> = (|0> + e^{i theta}|1>)/sqrt(2); the theta-basis is
  {|+_theta>, |-_theta>} with |-_theta> = |+_{theta+pi}>.
- Bell states are |Phi^{B0,B1}> = (I (x) X^{B1} Z^{B0}) (|00>+|11>)/sqrt(2)
  (Z applied before X on the second qubit).
- All state equality checks compare density matrices, which quotients out
  global phase.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

ATOL_ALG = 1e-10     # algebraic identities
ATOL_PROB = 1e-9     # sampled-probability sanity
ATOL_EXACT = 1e-12   # enumerated probabilities / exact constructions

# An AngleIndex is an int mod 8 denoting k*pi/4.
AngleIndex = int


def norm_angle(k: int) -> AngleIndex:
    """Reduce an angle index into 0..7."""
    return int(k) % 8


def angle_radians(k: AngleIndex) -> float:
    return norm_angle(k) * math.pi / 4.0


class DimensionMismatchError(ValueError):
    pass


class MeasurementError(RuntimeError):
    """Outcome probabilities failed to sum to 1; signals numerical corruption."""


# ---------------------------------------------------------------------------
# gates
# ---------------------------------------------------------------------------

I2 = np.eye(2, dtype=complex)
X = np.array([[0, 1], [1, 0]], dtype=complex)
Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
Z = np.array([[1, 0], [0, -1]], dtype=complex)
H = np.array([[1, 1], [1, -1]], dtype=complex) / math.sqrt(2)
CZ = np.diag([1, 1, 1, -1]).astype(complex)
# control on the first qubit of the pair
CX = np.array(
    [[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex
)


def P(theta: float) -> np.ndarray:
    """Phase gate diag(1, e^{i theta}) for theta in radians."""
    return np.array([[1, 0], [0, np.exp(1j * theta)]], dtype=complex)


def P_idx(k: AngleIndex) -> np.ndarray:
    """Phase gate for an angle index."""
    return P(angle_radians(k))


def pauli_xz(x: int, z: int) -> np.ndarray:
    """X^x Z^z as a matrix (X applied after Z)."""
    m = I2
    if z:
        m = Z @ m
    if x:
        m = X @ m
    return m


def plus_state(k: AngleIndex) -> np.ndarray:
    """|+_theta> with theta = k*pi/4."""
    return np.array([1.0, np.exp(1j * angle_radians(k))], dtype=complex) / math.sqrt(2)


def kron_all(*mats: np.ndarray) -> np.ndarray:
    out = np.array([[1.0 + 0j]])
    for m in mats:
        out = np.kron(out, m)
    return out


# ---------------------------------------------------------------------------
# domain types
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PauliHerald:
    """Classical outcome of a Bell measurement, naming the byproduct Z^b0 X^b1."""

    b0: int
    b1: int

    def __post_init__(self):
        if self.b0 not in (0, 1) or self.b1 not in (0, 1):
            raise ValueError("herald bits must be 0 or 1")

    def is_identity(self) -> bool:
        return self.b0 == 0 and self.b1 == 0

    def to_json(self) -> list[int]:
        return [self.b0, self.b1]


@dataclass(frozen=True)
class QubitBasis:
    """Orthonormal single-qubit basis pair; origin records k when it is the
    theta = k*pi/4 basis."""

    v0: np.ndarray
    v1: np.ndarray
    origin: AngleIndex | None = None

    def __post_init__(self):
        v0 = np.asarray(self.v0, dtype=complex).reshape(2)
        v1 = np.asarray(self.v1, dtype=complex).reshape(2)
        object.__setattr__(self, "v0", v0)
        object.__setattr__(self, "v1", v1)
        if (
            abs(np.vdot(v0, v0) - 1) > 1e-12
            or abs(np.vdot(v1, v1) - 1) > 1e-12
            or abs(np.vdot(v0, v1)) > 1e-12
        ):
            raise ValueError("basis vectors must be orthonormal")

    def vec(self, j: int) -> np.ndarray:
        return self.v0 if j == 0 else self.v1

    def close_to(self, other: "QubitBasis", atol: float = ATOL_ALG) -> bool:
        return bool(
            np.allclose(self.v0, other.v0, atol=atol)
            and np.allclose(self.v1, other.v1, atol=atol)
        )


COMPUTATIONAL = QubitBasis(np.array([1, 0]), np.array([0, 1]))


def basis_from_angle(k: AngleIndex) -> QubitBasis:
    """The {|+_theta>, |-_theta>} basis for theta = k*pi/4."""
    k = norm_angle(k)
    return QubitBasis(plus_state(k), plus_state(k + 4), origin=k)


def conjugate_basis(b: QubitBasis) -> QubitBasis:
    """Entrywise complex conjugate of both basis vectors."""
    origin = norm_angle(-b.origin) if b.origin is not None else None
    return QubitBasis(b.v0.conj(), b.v1.conj(), origin=origin)


@dataclass(frozen=True)
class DensityState:
    """Density operator over an ordered list of subsystems."""

    dims: tuple[int, ...]
    matrix: np.ndarray

    def __post_init__(self):
        dims = tuple(int(d) for d in self.dims)
        object.__setattr__(self, "dims", dims)
        m = np.asarray(self.matrix, dtype=complex)
        total = int(np.prod(dims)) if dims else 1
        if m.shape != (total, total):
            raise DimensionMismatchError(
                f"matrix shape {m.shape} does not match dims {dims}"
            )
        object.__setattr__(self, "matrix", m)

    @property
    def total_dim(self) -> int:
        return int(np.prod(self.dims)) if self.dims else 1

    def validate(self, atol: float = ATOL_ALG) -> "DensityState":
        m = self.matrix
        if np.abs(m - m.conj().T).max() > atol:
            raise ValueError("density matrix is not Hermitian")
        if abs(np.trace(m) - 1) > atol:
            raise ValueError("density matrix trace is not 1")
        if np.linalg.eigvalsh(m).min() < -atol:
            raise ValueError("density matrix has a negative eigenvalue")
        return self

    @staticmethod
    def from_vector(vec: np.ndarray, dims) -> "DensityState":
        v = np.asarray(vec, dtype=complex).reshape(-1)
        v = v / np.linalg.norm(v)
        return DensityState(tuple(dims), np.outer(v, v.conj()))

    def pure_vector(self, atol: float = 1e-8) -> np.ndarray:
        """Extract the state vector of a (near-)pure state."""
        vals, vecs = np.linalg.eigh(self.matrix)
        if vals[:-1].max(initial=0.0) > atol:
            raise ValueError("state is not pure")
        return vecs[:, -1]


@dataclass(frozen=True)
class BipartiteUnitary:
    """Operator on (qubit q) (x) (d_x-dimensional register x), q first.

    The q-block decomposition is matrix = sum_{b,c} |b><c| (x) Theta_{b,c}.
    `unitary` records whether the matrix passed the unitarity check; partial
    transposes of unitaries need not be unitary, so construction tolerates
    non-unitary matrices and flags them.
    """

    d_x: int
    matrix: np.ndarray
    unitary: bool = field(default=True)

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        d = 2 * self.d_x
        if m.shape != (d, d):
            raise DimensionMismatchError(
                f"matrix shape {m.shape}, expected {(d, d)}"
            )
        object.__setattr__(self, "matrix", m)
        is_u = bool(np.abs(m @ m.conj().T - np.eye(d)).max() <= ATOL_ALG)
        object.__setattr__(self, "unitary", is_u)

    def theta_block(self, b: int, c: int) -> np.ndarray:
        d = self.d_x
        return self.matrix[b * d : (b + 1) * d, c * d : (c + 1) * d]


def partial_transpose_q(omega: BipartiteUnitary) -> BipartiteUnitary:
    """Transpose the q part only: Omega^{T_q} = sum |b><a| (x) Theta_{a,b}."""
    d = omega.d_x
    m = omega.matrix
    out = np.empty_like(m)
    for a in (0, 1):
        for b in (0, 1):
            out[b * d : (b + 1) * d, a * d : (a + 1) * d] = m[
                a * d : (a + 1) * d, b * d : (b + 1) * d
            ]
    return BipartiteUnitary(d, out)


# ---------------------------------------------------------------------------
# operations on DensityState
# ---------------------------------------------------------------------------


def _as_tensor(state: DensityState) -> np.ndarray:
    return state.matrix.reshape(tuple(state.dims) * 2)


def apply_unitary(state: DensityState, U: np.ndarray, wires) -> DensityState:
    """Apply U on the selected wires: U rho U^dagger, identity elsewhere."""
    wires = list(wires)
    dims = list(state.dims)
    n = len(dims)
    wd = [dims[w] for w in wires]
    dw = int(np.prod(wd))
    U = np.asarray(U, dtype=complex)
    if U.shape != (dw, dw):
        raise DimensionMismatchError(f"U shape {U.shape}, wires dim {dw}")
    k = len(wires)
    Ut = U.reshape(wd + wd)
    T = _as_tensor(state)
    # ket side
    T = np.tensordot(Ut, T, axes=(list(range(k, 2 * k)), wires))
    T = np.moveaxis(T, list(range(k)), wires)
    # bra side (conjugate)
    bra = [n + w for w in wires]
    T = np.tensordot(T, Ut.conj(), axes=(bra, list(range(k, 2 * k))))
    T = np.moveaxis(T, list(range(2 * n - k, 2 * n)), bra)
    return DensityState(state.dims, T.reshape(state.total_dim, state.total_dim))


def _project_out(state: DensityState, wire: int, vec: np.ndarray):
    """<v| rho |v> on one wire; returns (probability, unnormalized DensityState
    with the wire removed)."""
    dims = list(state.dims)
    n = len(dims)
    T = _as_tensor(state)
    T = np.tensordot(vec.conj(), T, axes=(0, wire))
    T = np.tensordot(T, vec, axes=(n - 1 + wire, 0))
    new_dims = tuple(d for i, d in enumerate(dims) if i != wire)
    total = int(np.prod(new_dims)) if new_dims else 1
    m = T.reshape(total, total)
    prob = float(np.trace(m).real)
    return prob, DensityState(new_dims, m)


def measure_in_basis(state: DensityState, wire: int, b: QubitBasis, rng):
    """Born-rule measurement of one qubit wire; the wire is removed from dims.

    Sampling is inverse-CDF on the exact probabilities; outcome 0 wins ties.
    """
    if state.dims[wire] != 2:
        raise DimensionMismatchError("measured wire is not a qubit")
    p0, post0 = _project_out(state, wire, b.v0)
    p1, post1 = _project_out(state, wire, b.v1)
    if abs(p0 + p1 - 1.0) > ATOL_PROB:
        raise MeasurementError(f"probabilities sum to {p0 + p1}")
    u = float(rng.random())
    outcome = 0 if u < max(p0, 0.0) or p1 <= 0.0 else 1
    prob, post = (p0, post0) if outcome == 0 else (p1, post1)
    m = post.matrix / prob
    return outcome, prob, DensityState(post.dims, m)


def measurement_branches(state: DensityState, wire: int, b: QubitBasis):
    """Both branches of measure_in_basis with exact probabilities.

    Returns [(outcome, prob, normalized post)] for outcomes with prob > 0.
    """
    out = []
    for j in (0, 1):
        p, post = _project_out(state, wire, b.vec(j))
        if p > 1e-15:
            out.append((j, p, DensityState(post.dims, post.matrix / p)))
    return out


def bell_vector(h: PauliHerald) -> np.ndarray:
    v = np.zeros(4, dtype=complex)
    v[0] = 1 / math.sqrt(2)
    v[3] = 1 / math.sqrt(2)
    op = kron_all(I2, pauli_xz(h.b1, h.b0))
    return op @ v


def bell_state(h: PauliHerald) -> DensityState:
    """|Phi^{B0,B1}><Phi^{B0,B1}| on two qubit wires."""
    return DensityState.from_vector(bell_vector(h), (2, 2))


def _project_out2(state: DensityState, wa: int, wb: int, vec4: np.ndarray):
    """Project wires (wa, wb) onto a two-qubit vector; removes both wires."""
    dims = list(state.dims)
    n = len(dims)
    T = _as_tensor(state)
    V = vec4.reshape(2, 2)
    T = np.tensordot(V.conj(), T, axes=([0, 1], [wa, wb]))
    # bra axes shifted down by 2 removed ket axes
    T = np.tensordot(T, V, axes=([n - 2 + wa, n - 2 + wb], [0, 1]))
    new_dims = tuple(d for i, d in enumerate(dims) if i not in (wa, wb))
    total = int(np.prod(new_dims)) if new_dims else 1
    m = T.reshape(total, total)
    return float(np.trace(m).real), DensityState(new_dims, m)


def bell_measure(state: DensityState, wire_a: int, wire_b: int, rng):
    """Project wires onto the Bell basis; returns (herald, prob, post)."""
    heralds = [PauliHerald(b0, b1) for b0 in (0, 1) for b1 in (0, 1)]
    probs = []
    posts = []
    for h in heralds:
        p, post = _project_out2(state, wire_a, wire_b, bell_vector(h))
        probs.append(max(p, 0.0))
        posts.append(post)
    total = sum(probs)
    if abs(total - 1.0) > ATOL_PROB:
        raise MeasurementError(f"Bell probabilities sum to {total}")
    u = float(rng.random())
    acc = 0.0
    idx = len(heralds) - 1
    for i, p in enumerate(probs):
        acc += p
        if u < acc:
            idx = i
            break
    prob = probs[idx]
    post = posts[idx]
    return heralds[idx], prob, DensityState(post.dims, post.matrix / prob)


def trace_distance(a: DensityState, b: DensityState) -> float:
    """(1/2) * trace norm of (a - b)."""
    if a.dims != b.dims:
        raise DimensionMismatchError(f"dims differ: {a.dims} vs {b.dims}")
    s = np.linalg.svd(a.matrix - b.matrix, compute_uv=False)
    return float(0.5 * s.sum())


def trace_norm(m: np.ndarray) -> float:
    return float(np.linalg.svd(m, compute_uv=False).sum())
