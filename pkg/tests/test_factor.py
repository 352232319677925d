import numpy as np
import pytest
from conftest import LOADINGS
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.special import ndtri

from vinegraph.correlation import partial_corr_recursive
from vinegraph.errors import ConvergenceError, PartitionError
from vinegraph.factor import (
    default_t_rowsum,
    fit_one_factor,
    make_proxy,
    residual_report,
    sample_bifactor,
    sample_bifactor_parameters,
    sample_one_factor,
    simulate_bifactor,
    simulate_one_factor,
)
from vinegraph.transform import DataMatrix, rank_to_normal


# -- fit_one_factor ---------------------------------------------------------

def test_exact_recovery(sigma):
    fit = fit_one_factor(sigma)
    np.testing.assert_allclose(fit.loadings, LOADINGS, atol=1e-6)
    assert fit.objective < 1e-12
    np.testing.assert_allclose(fit.uniquenesses, 1 - fit.loadings ** 2, atol=1e-12)
    np.testing.assert_allclose(np.diag(fit.implied()), 1.0)


def test_identity_gives_zero_loadings():
    fit = fit_one_factor(np.eye(5))
    np.testing.assert_allclose(fit.loadings, 0.0, atol=1e-12)
    assert fit.objective == pytest.approx(0.0, abs=1e-24)


def test_mixed_sign_loadings():
    fit = fit_one_factor(simulate_one_factor([-0.8, 0.7, 0.6]))
    np.testing.assert_allclose(fit.loadings, [-0.8, 0.7, 0.6], atol=1e-6)


def test_too_few_variables():
    with pytest.raises(ValueError):
        fit_one_factor(np.eye(2))


def test_convergence_error_carries_trace():
    R = np.array([[1, 0.9, -0.9, 0.1], [0.9, 1, 0.9, -0.2],
                  [-0.9, 0.9, 1, 0.5], [0.1, -0.2, 0.5, 1.0]])
    with pytest.raises(ConvergenceError) as info:
        fit_one_factor(R, max_iter=1, tol=0.0)
    assert info.value.loadings.shape == (4,)
    assert len(info.value.trace) >= 2


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_objective_non_increasing(seed):
    rng = np.random.default_rng(seed)
    a = rng.uniform(0.2, 0.9, size=8)
    R = simulate_one_factor(a).values.copy()
    E = rng.normal(scale=0.05, size=(8, 8))
    R += (E + E.T) / 2
    np.fill_diagonal(R, 1.0)
    fit = fit_one_factor(R)
    t = np.array(fit.trace)
    assert np.all(np.diff(t) <= 1e-15 * t[:-1] + 1e-30)
    assert np.all(np.abs(fit.loadings) <= 0.999)


# -- residual_report --------------------------------------------------------

def test_exact_input_has_no_flags(sigma):
    rep = residual_report(sigma, fit_one_factor(sigma))
    assert np.abs(rep.D).max() < 1e-6
    assert rep.flagged() == []
    assert rep.thresholds == (0.25, default_t_rowsum(10))


def test_perturbed_pair_flagged():
    a = np.full(8, 0.6)
    fit = fit_one_factor(simulate_one_factor(a))
    R = simulate_one_factor(a).values.copy()
    R[2, 5] += 0.3
    R[5, 2] += 0.3
    rep = residual_report(R, fit, t_max=0.2, t_rowsum=10.0)
    assert rep.flagged() == [2, 5]
    assert (np.diag(rep.D) == 0).all()


def test_infinite_thresholds_flag_nothing():
    R = np.random.default_rng(0).uniform(-1, 1, (5, 5))
    R = (R + R.T) / 2
    np.fill_diagonal(R, 1)
    fit = fit_one_factor(simulate_one_factor([0.5] * 5))
    assert residual_report(R, fit, np.inf, np.inf).flagged() == []


def test_rowsum_rule():
    a = np.full(6, 0.5)
    fit = fit_one_factor(simulate_one_factor(a))
    R = simulate_one_factor(a).values.copy()
    R[0, 1:] += 0.1
    R[1:, 0] += 0.1
    rep = residual_report(R, fit, t_max=0.2, t_rowsum=0.45)
    assert rep.flagged() == [0]


# -- make_proxy -------------------------------------------------------------

def _z(x):
    return rank_to_normal(DataMatrix.from_array(x))


def test_single_member_proxy_is_member():
    z = _z(np.random.default_rng(0).standard_normal((50, 3)))
    np.testing.assert_allclose(make_proxy(z, [1]).values, z.values[:, 1])


def test_duplicate_members_proxy_equals_member():
    x = np.random.default_rng(1).standard_normal(40)
    z = _z(np.column_stack([x, x * 3 + 1]))
    np.testing.assert_allclose(make_proxy(z, [0, 1]).values, z.values[:, 0])


def test_proxy_on_z_grid_and_empty_rejected():
    z = _z(np.random.default_rng(2).standard_normal((30, 4)))
    p = make_proxy(z, [0, 2, 3], "g")
    np.testing.assert_allclose(np.sort(p.values), ndtri((np.arange(1, 31) - 0.5) / 30))
    assert p.group_id == "g" and p.member_columns == (0, 2, 3) and p.restandardized
    with pytest.raises(ValueError):
        make_proxy(z, [])


def test_proxy_tracks_latent():
    rng = np.random.default_rng(50)
    a = rng.uniform(0.5, 0.9, 50)
    Z, W = sample_one_factor(a, 2000, seed=51)
    p = make_proxy(_z(Z), range(50))
    assert np.corrcoef(p.values, W)[0, 1] > 0.9


# -- simulators -------------------------------------------------------------

def test_simulate_one_factor(sigma_star):
    assert sigma_star.values[0, 1] == pytest.approx(0.774)
    np.testing.assert_allclose(sigma_star.values[:10, 10], LOADINGS)
    assert sigma_star.variable_names[-1] == "W"
    np.testing.assert_array_equal(simulate_one_factor(np.zeros(4)).values, np.eye(4))
    assert simulate_one_factor([0.3, 0.6]).values[0, 1] == pytest.approx(0.18)
    with pytest.raises(ValueError):
        simulate_one_factor([0.5, 1.0])


def test_bifactor_closed_form():
    R = simulate_bifactor(np.full(6, 0.5), np.full(6, 0.6), [[0, 1, 2], [3, 4, 5]]).values
    assert R[0, 1] == pytest.approx(0.52)
    assert R[0, 3] == pytest.approx(0.25)


def test_bifactor_degenerates_to_one_factor():
    g = np.linspace(0.3, 0.8, 6)
    R = simulate_bifactor(g, np.zeros(6), [[0, 1, 2], [3, 4, 5]])
    np.testing.assert_allclose(R.values, simulate_one_factor(g).values)


def test_bifactor_bad_partition():
    with pytest.raises(PartitionError):
        simulate_bifactor([0.5] * 4, [0.5] * 4, [[0, 1], [1, 2, 3]])
    with pytest.raises(PartitionError):
        simulate_bifactor([0.5] * 4, [0.5] * 4, [[0, 1], [2]])


def test_sampled_bifactor_structure():
    gamma, delta, groups = sample_bifactor_parameters([20, 20, 20], seed=9)
    R = simulate_bifactor(gamma, delta, groups)
    assert R.is_positive_definite
    lab = np.repeat([0, 1, 2], 20)
    # within-group exceeds between-group correlation for the same pair of global loadings
    within = np.outer(gamma, gamma) + np.outer(delta * np.sqrt(1 - gamma ** 2),
                                               delta * np.sqrt(1 - gamma ** 2))
    same = (lab[:, None] == lab[None, :]) & ~np.eye(60, dtype=bool)
    assert np.all(R.values[same] > np.outer(gamma, gamma)[same])
    np.testing.assert_allclose(R.values[same], within[same])


def test_between_group_conditional_independence():
    gamma, delta, groups = sample_bifactor_parameters([4, 4], seed=1)
    R = simulate_bifactor(gamma, delta, groups).values
    d = R.shape[0]
    S = np.block([[R, gamma[:, None]], [gamma[None, :], np.ones((1, 1))]])
    for i in groups[0]:
        for j in groups[1]:
            assert abs(partial_corr_recursive(S, i, j, [d])) < 1e-12


def test_sample_bifactor_matches_population():
    gamma, delta, groups = sample_bifactor_parameters([5, 5], seed=2)
    Z, latent = sample_bifactor(gamma, delta, groups, 200000, seed=3)
    assert latent.shape == (200000, 3)
    emp = np.corrcoef(Z.T)
    np.testing.assert_allclose(emp, simulate_bifactor(gamma, delta, groups).values, atol=0.01)
