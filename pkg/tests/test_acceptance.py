"""Acceptance gate: the twelve headline claims at their stated tolerances.

Each test drives the corresponding harness check (or the CLI) and asserts
the exact numeric target, plus the runtime budgets where one is stated.
"""
import json
import time

import numpy as np
import pytest

from dqcsim.cli import main
from dqcsim.harness import (
    check_bfk_oracle,
    check_blindness,
    check_dbsp_formula,
    check_dt_graph,
    check_equivalence,
    check_herald_statistics,
    check_hi_gadget,
    check_kraus_equality,
    check_simulator_identities,
    check_traps,
    named_rng,
    random_spec,
)
from dqcsim.routines import t_transform

SEED = 2026


def test_criterion_01_kraus_equality_under_5s():
    t0 = time.monotonic()
    rep = check_kraus_equality(n_trials=100, dims=(2, 4, 8), seed=SEED)
    elapsed = time.monotonic() - t0
    assert rep.trials >= 100
    assert rep.deviation <= 1e-10
    assert rep.passed
    assert elapsed < 5.0


def test_criterion_02_simulator_identities_under_5s():
    t0 = time.monotonic()
    rep = check_simulator_identities(seed=SEED, n_omega=20)
    elapsed = time.monotonic() - t0
    assert rep.deviation <= 1e-10
    assert rep.passed
    # all five identities individually within tolerance
    assert len(rep.details) == 5
    assert all(v <= 1e-10 for v in rep.details.values())
    assert elapsed < 5.0


def test_criterion_03_t_transform_self_inverse_bit_exact():
    rng = named_rng(SEED, "acc-ttransform")
    for _ in range(100):
        spec = random_spec(rng, int(rng.choice([2, 4, 8])))
        t2 = t_transform(t_transform(spec))
        assert t2.setting == spec.setting
        assert np.array_equal(t2.omega.matrix, spec.omega.matrix)
        assert np.array_equal(t2.P.v0, spec.P.v0)
        assert np.array_equal(t2.P.v1, spec.P.v1)
        assert np.array_equal(t2.M.v0, spec.M.v0)
        assert np.array_equal(t2.M.v1, spec.M.v1)


def test_criterion_04_herald_statistics_quarter():
    rep = check_herald_statistics(n_trials=10000, seed=SEED)
    assert rep.trials == 10000
    assert abs(rep.details["freq00"] - 0.25) <= 0.015
    assert rep.passed
    # honest chains suppress every internal herald
    assert rep.details["forwarded"] == 0
    # conditioned on the identity herald the channel is exact
    assert rep.details["conditioned_identity_dev"] <= 1e-10


def test_criterion_05_bfk_matches_oracle_under_60s():
    t0 = time.monotonic()
    rep = check_bfk_oracle(seed=SEED, lengths=(2, 3, 4), patterns=10,
                           brickwork=True)
    elapsed = time.monotonic() - t0
    assert rep.deviation <= 1e-10
    assert rep.passed
    assert elapsed < 60.0


@pytest.mark.parametrize("protocol", ["bfk", "mf13"])
def test_criterion_06_perfect_blindness(protocol):
    # two fixed computations, full secret enumeration
    rep = check_blindness(protocol, phi_a=[1], phi_b=[6], seed=SEED)
    assert rep.deviation <= 1e-12
    assert rep.passed


@pytest.mark.parametrize("pair", [
    ("bfk", "mf13"),
    ("dbsp-ps", "dbsp-rm"),
    ("hi-ps", "hi-rm"),
    ("vbdqc-ps", "vbdqc-rm"),
])
def test_criterion_07_setting_equivalences(pair):
    rep = check_equivalence(*pair, seed=SEED)
    assert rep.deviation <= 1e-12
    assert rep.passed


def test_criterion_08_dbsp_formula_exhaustive():
    rep = check_dbsp_formula(seed=SEED)
    assert rep.deviation <= 1e-10
    assert rep.passed
    # k <= 2 exhaustive in both settings plus the mixed variant
    assert rep.branches > 2 * (8 * 2 * 2 + 64 * 4 * 4)


def test_criterion_09_hi_gadget_branches():
    rep = check_hi_gadget(seed=SEED)
    assert rep.deviation <= 1e-10
    assert rep.passed
    assert rep.details["binding"] == {"b=1": "H", "b=0": "I"}


def test_criterion_10_dotted_triple_graph_invariants():
    rep = check_dt_graph(n_graphs=100, seed=SEED)
    assert rep.trials == 100
    assert rep.deviation == 0.0
    assert rep.passed


def test_criterion_11_traps_and_attacks():
    honest = check_traps("honest", seed=SEED)
    assert honest.passed
    assert abs(honest.details["vbdqc_accept"] - 1.0) <= 1e-12
    assert abs(honest.details["dmpqc_accept"] - 1.0) <= 1e-12

    z = check_traps("z", seed=SEED)
    assert z.passed and z.details["rate"] > 0

    report = check_traps("report", seed=SEED)
    assert report.passed
    rate = 0.5 * sum(report.details["rate_per_r"])
    assert abs(rate - 0.5) <= 1e-12  # exactly 1/2 over the enumerated r

    basis = check_traps("basis", seed=SEED)
    assert basis.passed and basis.details["rate"] > 0


def test_criterion_12_cli_determinism(tmp_path):
    def run_twice(args):
        a = tmp_path / "a.json"
        b = tmp_path / "b.json"
        assert main([*args, "--out", str(a)]) == 0
        assert main([*args, "--out", str(b)]) == 0
        ba, bb = a.read_bytes(), b.read_bytes()
        assert ba == bb
        for line in ba.decode().strip().splitlines():
            json.loads(line)
        return ba

    run_twice(["run", "bfk", "--angles", "3", "--seed", str(SEED)])
    run_twice(["run", "dmpqc", "--clients", "ps,rm", "--seed", str(SEED)])
    run_twice(["run", "dbsp", "--setting", "mixed", "--clients", "ps,rm",
               "--seed", str(SEED)])
    run_twice(["verify", "kraus", "dt-graph", "--seed", str(SEED)])
    run_twice(["graph", "--seed", str(SEED)])
