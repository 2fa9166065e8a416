import numpy as np
import pytest

from dqcsim.harness import named_rng, random_spec, random_unitary
from dqcsim.qcore import (
    BipartiteUnitary,
    DensityState,
    DimensionMismatchError,
    basis_from_angle,
)
from dqcsim.routines import (
    NonUnitaryTransposeError,
    RoutineSpec,
    enumerate_ps,
    enumerate_rm,
    identity_spec,
    kraus_ps,
    kraus_rm,
    run_ps,
    run_rm,
    spec_from_json,
    spec_to_json,
    t_transform,
)


def test_kraus_routes_agree():
    rng = named_rng(0, "test-kraus")
    for d_x in (2, 4, 8):
        for _ in range(10):
            spec = random_spec(rng, d_x)
            for r in (0, 1):
                for s in (0, 1):
                    assert np.allclose(kraus_ps(spec, r, s),
                                       kraus_rm(spec, r, s), atol=1e-10)


def test_kraus_completeness():
    rng = named_rng(1, "test-kraus")
    spec = random_spec(rng, 4)
    total = sum(kraus_ps(spec, r, s).conj().T @ kraus_ps(spec, r, s)
                for r in (0, 1) for s in (0, 1))
    assert np.allclose(total, 2 * np.eye(4), atol=1e-10)


def test_t_transform_flips_setting_and_swaps_bases():
    rng = named_rng(2, "test-kraus")
    spec = random_spec(rng, 2)
    t = t_transform(spec)
    assert t.setting == "RM"
    assert np.array_equal(t.P.v0, spec.M.v0.conj())
    assert np.array_equal(t.M.v0, spec.P.v0.conj())


def test_t_transform_self_inverse_bit_exact():
    rng = named_rng(3, "test-kraus")
    for _ in range(100):
        spec = random_spec(rng, int(rng.choice([2, 4])))
        t2 = t_transform(t_transform(spec))
        assert t2.setting == spec.setting
        assert np.array_equal(t2.omega.matrix, spec.omega.matrix)
        assert np.array_equal(t2.P.v0, spec.P.v0)
        assert np.array_equal(t2.P.v1, spec.P.v1)
        assert np.array_equal(t2.M.v0, spec.M.v0)
        assert np.array_equal(t2.M.v1, spec.M.v1)


def test_t_transform_preserves_kraus():
    rng = named_rng(4, "test-kraus")
    spec = random_spec(rng, 2)
    t = t_transform(spec)
    # the client/server outcome labels swap under the transformation
    for r in (0, 1):
        for s in (0, 1):
            assert np.allclose(kraus_ps(spec, r, s), kraus_rm(t, s, r),
                               atol=1e-10)


def _cz_spec(setting="PS"):
    return RoutineSpec(
        setting=setting,
        P=basis_from_angle(1),
        M=basis_from_angle(2),
        omega=BipartiteUnitary(2, np.diag([1, 1, 1, -1]).astype(complex)),
        d_x=2,
    )


def test_enumerate_ps_probabilities_sum_to_one():
    rng = named_rng(5, "test-kraus")
    rho = DensityState.from_vector(random_unitary(2, rng)[:, 0], (2,))
    outs = enumerate_ps(_cz_spec(), rho)
    assert len(outs) == 4
    assert np.isclose(sum(o.prob for o in outs), 1.0, atol=1e-12)


def test_enumerate_branches_match_kraus_action():
    rng = named_rng(6, "test-kraus")
    psi = random_unitary(2, rng)[:, 0]
    rho = DensityState.from_vector(psi, (2,))
    spec = _cz_spec()
    for enum in (enumerate_ps, enumerate_rm):
        for o in enum(spec, rho):
            A = kraus_ps(spec, o.r, o.s)
            v = A @ psi
            p = 0.5 * float(np.vdot(v, v).real)
            assert np.isclose(o.prob, p, atol=1e-10)
            if p > 1e-12:
                want = np.outer(v, v.conj()) / np.vdot(v, v).real
                assert np.allclose(o.post.matrix, want, atol=1e-10)


def test_rm_requires_unitary_transpose():
    rng = named_rng(7, "test-kraus")
    # a generic unitary has a non-unitary q-partial transpose
    spec = RoutineSpec("RM", basis_from_angle(0), basis_from_angle(0),
                       BipartiteUnitary(2, random_unitary(4, rng)), 2)
    rho = DensityState.from_vector(np.array([1, 0]), (2,))
    with pytest.raises(NonUnitaryTransposeError):
        enumerate_rm(spec, rho)


def test_run_setting_guards():
    rng = named_rng(8, "test-kraus")
    rho = DensityState.from_vector(np.array([1, 0]), (2,))
    with pytest.raises(ValueError):
        run_rm(_cz_spec("PS"), rho, rng)
    with pytest.raises(ValueError):
        run_ps(_cz_spec("RM"), rho, rng)
    out = run_ps(_cz_spec("PS"), rho, rng)
    assert out.r in (0, 1) and out.s in (0, 1)


def test_dimension_mismatch_rejected():
    rho = DensityState.from_vector(np.ones(4), (2, 2))
    with pytest.raises(DimensionMismatchError):
        enumerate_ps(_cz_spec(), rho)


def test_spec_json_round_trip():
    rng = named_rng(9, "test-kraus")
    for spec in (identity_spec(), random_spec(rng, 2), _cz_spec()):
        back = spec_from_json(spec_to_json(spec))
        assert back.setting == spec.setting
        assert np.allclose(back.omega.matrix, spec.omega.matrix)
        assert np.allclose(back.P.v0, spec.P.v0)
        assert np.allclose(back.M.v1, spec.M.v1)


def test_identity_spec_is_noise_free():
    rho = DensityState.from_vector(np.array([0.6, 0.8]), (2,))
    for o in enumerate_ps(identity_spec(), rho):
        assert np.allclose(o.post.matrix, rho.matrix, atol=1e-12)
