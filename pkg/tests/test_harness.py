import json

import numpy as np
import pytest

from dqcsim.graphs import GraphTopology, build_linear_cluster
from dqcsim.harness import (
    CHECKS,
    CheckReport,
    check_blindness,
    check_equivalence,
    check_kraus_equality,
    named_rng,
    oracle_circuit,
    random_unitary,
    run_checks,
    wilson_interval,
)
from dqcsim.qcore import DensityState, H, P_idx, trace_distance


def _pure(vec):
    v = np.asarray(vec, dtype=complex)
    return DensityState.from_vector(v, (2,) * int(np.log2(v.size)))


def test_oracle_two_cluster_closed_form():
    topo = build_linear_cluster(2)
    rng = named_rng(0, "test-oracle")
    psi = random_unitary(2, rng)[:, 0]
    for phi0 in range(8):
        U = H @ P_idx(-phi0)
        want = DensityState((2,), U @ np.outer(psi, psi.conj()) @ U.conj().T)
        branches = oracle_circuit(topo, {1: phi0}, _pure(psi))
        assert np.isclose(sum(p for _, p, _ in branches), 1.0, atol=1e-12)
        for key, p, out in branches:
            assert key in ((0,), (1,))
            assert trace_distance(out, want) < 1e-10


def test_oracle_empty_pattern_returns_input():
    topo = GraphTopology((1,), (), (1,), (1,))
    rng = named_rng(1, "test-oracle")
    psi = random_unitary(2, rng)[:, 0]
    branches = oracle_circuit(topo, {}, _pure(psi))
    assert len(branches) == 1
    key, p, out = branches[0]
    assert key == () and np.isclose(p, 1.0)
    assert trace_distance(out, _pure(psi)) < 1e-12


def test_oracle_size_cap():
    topo = build_linear_cluster(13)
    with pytest.raises(ValueError):
        oracle_circuit(topo, {v: 0 for v in range(1, 13)}, None)


def test_check_report_json_shape():
    rep = check_kraus_equality(n_trials=5, seed=3)
    obj = rep.to_json()
    assert {"check", "anchor", "deviation", "tolerance", "pass", "seed"} \
        <= set(obj)
    assert obj["trials"] == 5
    json.dumps(obj)  # serializable


def test_checks_reproducible_from_seed():
    a = check_kraus_equality(n_trials=10, seed=11)
    b = check_kraus_equality(n_trials=10, seed=11)
    assert a.deviation == b.deviation
    c = run_checks(["dt-graph"], seed=4)[0]
    d = run_checks(["dt-graph"], seed=4)[0]
    assert c.to_json() == d.to_json()


def test_equivalence_distance_symmetric():
    a = check_equivalence("bfk", "mf13", seed=2)
    b = check_equivalence("mf13", "bfk", seed=2)
    assert np.isclose(a.deviation, b.deviation, atol=1e-14)
    assert a.passed and b.passed


def test_equivalence_rejects_unknown_pair():
    with pytest.raises(ValueError):
        check_equivalence("bfk", "dbsp-ps")


def test_blindness_holds_for_arbitrary_angle_pairs():
    rep = check_blindness("bfk", phi_a=[0], phi_b=[7], seed=5)
    assert rep.passed
    rep = check_blindness("mf13", phi_a=[3], phi_b=[4], seed=5)
    assert rep.passed


def test_run_checks_unknown_name():
    with pytest.raises(KeyError):
        run_checks(["not-a-check"])


def test_named_rng_streams_independent():
    a = named_rng(0, "alpha").integers(1 << 30)
    b = named_rng(0, "beta").integers(1 << 30)
    a2 = named_rng(0, "alpha").integers(1 << 30)
    assert a == a2
    assert a != b


def test_wilson_interval_sane():
    lo, hi = wilson_interval(25, 100)
    assert 0.0 <= lo < 0.25 < hi <= 1.0
    assert wilson_interval(0, 0) == (0.0, 1.0)


def test_battery_names_cover_core_claims():
    assert {"kraus", "identities", "heralds", "bfk-oracle",
            "blindness-bfk", "equivalence-dbsp", "traps-honest"} <= set(CHECKS)


def test_report_pass_flag_tracks_tolerance():
    rep = CheckReport("x", "y", deviation=2e-3, tolerance=1e-3, passed=False)
    assert not rep.passed
    assert rep.to_json()["pass"] is False
