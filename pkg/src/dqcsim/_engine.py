"""Private pure-state register with labeled wires.

Protocol engines and the brute-force oracle both run on pure statevectors
(every honest run starts pure); density matrices enter only at the reporting
boundary. Wires are addressed by hashable labels and removed on measurement.
"""
from __future__ import annotations

import numpy as np

from .qcore import (
    CZ,
    DensityState,
    MeasurementError,
    QubitBasis,
)


class Register:
    """A pure state over labeled qubit wires (axis i of the tensor = wire i)."""

    def __init__(self):
        self.wires: list = []
        self.tensor = np.array(1.0 + 0j)

    def copy(self) -> "Register":
        r = Register.__new__(Register)
        r.wires = list(self.wires)
        r.tensor = self.tensor.copy()
        return r

    @property
    def n(self) -> int:
        return len(self.wires)

    def axis(self, label) -> int:
        return self.wires.index(label)

    def add_wire(self, label, vec: np.ndarray) -> None:
        if label in self.wires:
            raise ValueError(f"wire {label!r} already exists")
        v = np.asarray(vec, dtype=complex).reshape(2)
        self.tensor = np.tensordot(self.tensor, v, axes=0)
        self.wires.append(label)

    def add_state(self, labels, vec: np.ndarray) -> None:
        """Attach a multi-qubit pure state on fresh wires."""
        labels = list(labels)
        v = np.asarray(vec, dtype=complex).reshape((2,) * len(labels))
        for lb in labels:
            if lb in self.wires:
                raise ValueError(f"wire {lb!r} already exists")
        self.tensor = np.tensordot(self.tensor, v, axes=0)
        self.wires.extend(labels)

    def apply1(self, U: np.ndarray, label) -> None:
        ax = self.axis(label)
        t = np.tensordot(np.asarray(U, dtype=complex), self.tensor, axes=(1, ax))
        self.tensor = np.moveaxis(t, 0, ax)

    def apply2(self, U4: np.ndarray, la, lb) -> None:
        """Apply a two-qubit gate given in the (la, lb) tensor order."""
        a, b = self.axis(la), self.axis(lb)
        Ut = np.asarray(U4, dtype=complex).reshape(2, 2, 2, 2)
        t = np.tensordot(Ut, self.tensor, axes=([2, 3], [a, b]))
        self.tensor = np.moveaxis(t, [0, 1], [a, b])

    def cz(self, la, lb) -> None:
        self.apply2(CZ, la, lb)

    def probs(self, label, basis: QubitBasis) -> tuple[float, float]:
        ax = self.axis(label)
        p = []
        for j in (0, 1):
            amp = np.tensordot(basis.vec(j).conj(), self.tensor, axes=(0, ax))
            p.append(float(np.vdot(amp, amp).real))
        s = p[0] + p[1]
        if abs(s - 1.0) > 1e-9:
            raise MeasurementError(f"branch probabilities sum to {s}")
        return p[0], p[1]

    def project(self, label, basis: QubitBasis, outcome: int) -> float:
        """Collapse onto basis.vec(outcome); removes the wire.

        Returns the branch probability; the state is renormalized (no-op on a
        zero-probability branch, which callers must not take).
        """
        ax = self.axis(label)
        amp = np.tensordot(basis.vec(outcome).conj(), self.tensor, axes=(0, ax))
        prob = float(np.vdot(amp, amp).real)
        if prob > 0:
            amp = amp / np.sqrt(prob)
        self.tensor = amp
        self.wires.pop(ax)
        return prob

    def measure(self, label, basis: QubitBasis, rng) -> tuple[int, float]:
        """Inverse-CDF sampling; outcome 0 wins ties. Removes the wire."""
        p0, p1 = self.probs(label, basis)
        u = float(rng.random())
        outcome = 0 if u < p0 or p1 <= 0.0 else 1
        prob = self.project(label, basis, outcome)
        return outcome, prob

    def branches(self, label, basis: QubitBasis):
        """Both measurement branches: [(outcome, prob, collapsed Register)]."""
        out = []
        for j in (0, 1):
            r = self.copy()
            p = r.project(label, basis, j)
            if p > 1e-15:
                out.append((j, p, r))
        return out

    def state_vector(self, order=None) -> np.ndarray:
        order = list(order) if order is not None else list(self.wires)
        axes = [self.axis(lb) for lb in order]
        return np.transpose(self.tensor, axes).reshape(-1)

    def density(self, order=None) -> DensityState:
        """DensityState of the named wires (others traced out)."""
        order = list(order) if order is not None else list(self.wires)
        keep = [self.axis(lb) for lb in order]
        rest = [i for i in range(self.n) if i not in keep]
        t = np.transpose(self.tensor, keep + rest)
        dk = 2 ** len(keep)
        m = t.reshape(dk, -1)
        rho = m @ m.conj().T
        tr = np.trace(rho).real
        if tr > 0:
            rho = rho / tr
        return DensityState((2,) * len(keep), rho)
