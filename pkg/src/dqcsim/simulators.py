"""Bell-pair simulators and the heralding filter.

The client-side preparation simulator emits half of |Phi^{0,0}> instead of a
freshly prepared basis state; the measurement simulator Bell-measures the
received qubit against its own half. Each Bell measurement produces a herald
(B0, B1) naming the byproduct Pauli Z^{B0} X^{B1}; the heralding filter turns
those internal messages into a log without forwarding them.
"""
from __future__ import annotations

from dataclasses import dataclass, field

from .qcore import (
    DensityState,
    PauliHerald,
    bell_measure,
    bell_state,
)

HERALD_TAG = "herald"


class HeraldExhaustionError(RuntimeError):
    """The rerun-until-identity loop hit its attempt cap."""


@dataclass
class HeraldedChannel:
    """Transcript filter state: forwarded messages plus the herald log."""

    suppression: frozenset = frozenset({HERALD_TAG})
    forwarded: list = field(default_factory=list)
    heralds: list = field(default_factory=list)

    def push(self, tag, payload) -> None:
        if tag in self.suppression:
            self.heralds.append(payload)
        else:
            self.forwarded.append((tag, payload))


def sim_bell_prep():
    """Create |Phi^{0,0}> with separately addressable halves.

    Returns (wire_to_inner, wire_to_outer, shared DensityState). The inner
    half replaces the message on the original channel; the outer half is the
    simulator's interface qubit. Only the identity Pauli is induced, so the
    herald is fixed at (0, 0).
    """
    state = bell_state(PauliHerald(0, 0))
    return 0, 1, state


def sim_bell_meas(state: DensityState, wire_a: int, wire_b: int, rng):
    """Bell-measure two wires; the herald names the byproduct Z^{B0} X^{B1}
    left on the entangled partner."""
    herald, prob, post = bell_measure(state, wire_a, wire_b, rng)
    return herald, prob, post


def heralding_filter(messages, suppression):
    """Forward messages whose tag is not suppressed, in order; log the rest.

    `messages` is a sequence of (tag, payload) pairs; returns
    (forwarded, herald_log).
    """
    ch = HeraldedChannel(suppression=frozenset(suppression))
    for tag, payload in messages:
        ch.push(tag, payload)
    return ch.forwarded, ch.heralds


def rerun_until_identity(run_fn, rng, max_attempts: int = 64):
    """Re-run a heralded interaction until every herald is (0, 0).

    `run_fn(rng)` returns (heralds, result). Returns (result, attempts).
    """
    for attempt in range(1, max_attempts + 1):
        heralds, result = run_fn(rng)
        if all(h.is_identity() for h in heralds):
            return result, attempt
    raise HeraldExhaustionError(
        f"no all-identity herald run within {max_attempts} attempts"
    )
