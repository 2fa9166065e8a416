"""The two atomic delegated-computation routines and the T-transformation.

A prepare-and-send (PS) routine: the client draws r uniformly and sends
|P_r>; the server applies Omega on (q, x), measures q in M, and keeps the
register. A receive-and-measure (RM) routine: the server draws s uniformly,
prepares |conj(M)_s>, applies Omega^{T_q}, and sends q; the client measures
in conj(P) and outputs r.

Both routines have identical Kraus operators on the register,
A_{r,s} = sum_{b,c} Theta_{b,c} conj(M_{s,b}) P_{r,c}, which is what the
T-transformation (setting flip, Omega <-> Omega^{T_q}, P <-> conj(M),
M <-> conj(P)) preserves.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .qcore import (
    ATOL_ALG,
    BipartiteUnitary,
    COMPUTATIONAL,
    DensityState,
    DimensionMismatchError,
    QubitBasis,
    apply_unitary,
    basis_from_angle,
    conjugate_basis,
    measurement_branches,
    partial_transpose_q,
)


class NonUnitaryTransposeError(ValueError):
    """Omega^{T_q} is not unitary, so the RM routine cannot execute it."""


@dataclass(frozen=True)
class RoutineSpec:
    setting: str  # "PS" or "RM"
    P: QubitBasis
    M: QubitBasis
    omega: BipartiteUnitary
    d_x: int

    def __post_init__(self):
        if self.setting not in ("PS", "RM"):
            raise ValueError(f"unknown setting {self.setting!r}")
        if self.omega.d_x != self.d_x:
            raise DimensionMismatchError("omega.d_x != d_x")


@dataclass(frozen=True)
class RoutineOutcome:
    r: int
    s: int
    post: DensityState
    prob: float


def kraus_ps(spec: RoutineSpec, r: int, s: int) -> np.ndarray:
    """A_{r,s} via the q-block contraction."""
    d = spec.d_x
    A = np.zeros((d, d), dtype=complex)
    Pr = spec.P.vec(r)
    Ms = spec.M.vec(s)
    for b in (0, 1):
        for c in (0, 1):
            A += spec.omega.theta_block(b, c) * np.conj(Ms[b]) * Pr[c]
    return A


def kraus_rm(spec: RoutineSpec, r: int, s: int) -> np.ndarray:
    """B_{r,s} = <conj(P)_r| Omega^{T_q} |conj(M)_s>, computed from the full
    matrix (independent of the block route in kraus_ps)."""
    d = spec.d_x
    omega_t = partial_transpose_q(spec.omega).matrix
    pbar = conjugate_basis(spec.P).vec(r)
    mbar = conjugate_basis(spec.M).vec(s)
    T = omega_t.reshape(2, d, 2, d)
    # <pbar|_q on the output qubit, |mbar>_q on the input qubit
    return np.einsum("a,aibj,b->ij", pbar.conj(), T, mbar)


def _embed_q_state(q_vec: np.ndarray, rho_x: DensityState) -> DensityState:
    q = DensityState.from_vector(q_vec, (2,))
    m = np.kron(q.matrix, rho_x.matrix)
    return DensityState((2,) + tuple(rho_x.dims), m)


def _check_rho(spec: RoutineSpec, rho_x: DensityState) -> None:
    if rho_x.total_dim != spec.d_x:
        raise DimensionMismatchError(
            f"register dim {rho_x.total_dim}, spec expects {spec.d_x}"
        )


def _finish(state: DensityState, omega_mx: np.ndarray, meas: QubitBasis):
    """Apply the bipartite operator and return both q-measurement branches."""
    nx = len(state.dims) - 1
    applied = apply_unitary(state, omega_mx, list(range(1 + nx)))
    return measurement_branches(applied, 0, meas)


def enumerate_ps(spec: RoutineSpec, rho_x: DensityState):
    """All (r, s) branches with exact joint probabilities."""
    _check_rho(spec, rho_x)
    out = []
    for r in (0, 1):
        joint = _embed_q_state(spec.P.vec(r), rho_x)
        for s, p, post in _finish(joint, spec.omega.matrix, spec.M):
            out.append(RoutineOutcome(r, s, post, 0.5 * p))
    return out


def enumerate_rm(spec: RoutineSpec, rho_x: DensityState):
    """All (r, s) branches of the RM routine with exact joint probabilities."""
    _check_rho(spec, rho_x)
    omega_t = partial_transpose_q(spec.omega)
    if not omega_t.unitary:
        raise NonUnitaryTransposeError(
            "partial transpose of omega is not unitary"
        )
    mbar = conjugate_basis(spec.M)
    pbar = conjugate_basis(spec.P)
    out = []
    for s in (0, 1):
        joint = _embed_q_state(mbar.vec(s), rho_x)
        for r, p, post in _finish(joint, omega_t.matrix, pbar):
            out.append(RoutineOutcome(r, s, post, 0.5 * p))
    return out


def _sample(branches, rng):
    u = float(rng.random())
    acc = 0.0
    for b in branches:
        acc += b.prob
        if u < acc:
            return b
    return branches[-1]


def run_ps(spec: RoutineSpec, rho_x: DensityState, rng) -> RoutineOutcome:
    """One sampled PS interaction (r uniform, s Born-distributed)."""
    if spec.setting != "PS":
        raise ValueError("spec.setting must be PS")
    return _sample(enumerate_ps(spec, rho_x), rng)


def run_rm(spec: RoutineSpec, rho_x: DensityState, rng) -> RoutineOutcome:
    """One sampled RM interaction (s uniform, r Born-distributed)."""
    if spec.setting != "RM":
        raise ValueError("spec.setting must be RM")
    return _sample(enumerate_rm(spec, rho_x), rng)


def t_transform(spec: RoutineSpec) -> RoutineSpec:
    """Setting flip with Omega <-> Omega^{T_q}, P <-> conj(M), M <-> conj(P).

    Self-inverse bit-exactly: the partial transpose is an entry permutation
    and conjugation is an involution.
    """
    return RoutineSpec(
        setting="RM" if spec.setting == "PS" else "PS",
        P=conjugate_basis(spec.M),
        M=conjugate_basis(spec.P),
        omega=partial_transpose_q(spec.omega),
        d_x=spec.d_x,
    )


# ---------------------------------------------------------------------------
# JSON serialization
# ---------------------------------------------------------------------------


def _basis_to_json(b: QubitBasis):
    if b.origin is not None:
        return {"k": int(b.origin)}
    return {
        "v0": [[float(z.real), float(z.imag)] for z in b.v0],
        "v1": [[float(z.real), float(z.imag)] for z in b.v1],
    }


def _basis_from_json(obj) -> QubitBasis:
    if "k" in obj:
        return basis_from_angle(obj["k"])
    v0 = np.array([complex(re, im) for re, im in obj["v0"]])
    v1 = np.array([complex(re, im) for re, im in obj["v1"]])
    return QubitBasis(v0, v1)


def spec_to_json(spec: RoutineSpec) -> dict:
    return {
        "setting": spec.setting,
        "P": _basis_to_json(spec.P),
        "M": _basis_to_json(spec.M),
        "omega": [
            [[float(z.real), float(z.imag)] for z in row]
            for row in spec.omega.matrix
        ],
        "d_x": spec.d_x,
    }


def spec_from_json(obj) -> RoutineSpec:
    omega = np.array(
        [[complex(re, im) for re, im in row] for row in obj["omega"]]
    )
    d_x = int(obj["d_x"])
    return RoutineSpec(
        setting=obj["setting"],
        P=_basis_from_json(obj["P"]),
        M=_basis_from_json(obj["M"]),
        omega=BipartiteUnitary(d_x, omega),
        d_x=d_x,
    )


def identity_spec(setting: str = "PS") -> RoutineSpec:
    """P = M = computational, Omega = identity on qubit (x) qubit."""
    return RoutineSpec(
        setting=setting,
        P=COMPUTATIONAL,
        M=COMPUTATIONAL,
        omega=BipartiteUnitary(2, np.eye(4, dtype=complex)),
        d_x=2,
    )
