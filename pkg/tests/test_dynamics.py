from __future__ import annotations

import numpy as np
import pytest
import scipy.linalg

from conftest import random_physical_cov, random_symmetric, random_symplectic, random_system
from dfls.analysis import decompose
from dfls.core import symplectic_form
from dfls.dynamics import (
    GaussianMoments,
    correlation_block_norm,
    df_stability,
    evolve_moments,
    integrate_covariance_rk4,
    log_negativity_two_mode,
    purity,
    steady_covariance,
    symplectic_eigenvalues,
    uncertainty_margin,
)
from dfls.errors import InvalidDimensionError, NoSteadyStateError, UncertaintyViolationError, UnphysicalStateError
from dfls.scenarios import dispersive_pair, dissipative_pair, tms_covariance


def test_vacuum_is_pure_and_physical():
    vac = GaussianMoments.vacuum(3)
    assert vac.is_physical()
    assert purity(vac.cov) == pytest.approx(1.0, abs=1e-15)
    assert uncertainty_margin(vac.cov) == pytest.approx(0.0, abs=1e-15)


def test_moments_reject_bad_shapes():
    with pytest.raises(InvalidDimensionError):
        GaussianMoments(np.zeros(3), np.eye(3))
    with pytest.raises(InvalidDimensionError):
        GaussianMoments(np.zeros(2), np.array([[1.0, 0.2], [0.0, 1.0]]))


def test_unphysical_initial_state_rejected():
    bad = GaussianMoments(np.zeros(2), np.diag([0.1, 0.1]))
    assert not bad.is_physical()
    with pytest.raises(UncertaintyViolationError):
        evolve_moments(-np.eye(2), np.eye(2), bad, [0.0, 1.0])
    # An explicit opt-out is honoured.
    out = evolve_moments(-np.eye(2), np.eye(2), bad, [0.0, 1.0], allow_unphysical=True)
    assert len(out) == 2


def test_time_grid_must_start_at_zero():
    with pytest.raises(ValueError):
        evolve_moments(-np.eye(2), np.eye(2), GaussianMoments.vacuum(1), [1.0, 2.0])


def test_closed_form_matches_rk4_oracle(rng):
    for _ in range(5):
        sys = random_system(rng, 2, 1)
        V0 = random_physical_cov(rng, 2)
        exact = evolve_moments(sys.A, sys.D, GaussianMoments(np.zeros(4), V0), [0.0, 1.5])[-1].cov
        oracle = integrate_covariance_rk4(sys.A, sys.D, V0, 1.5, 3000)[-1]
        np.testing.assert_allclose(exact, oracle, rtol=1e-9, atol=1e-10)


def test_mean_follows_the_drift(rng):
    sys = random_system(rng, 2, 1)
    x0 = rng.normal(size=4)
    out = evolve_moments(sys.A, sys.D, GaussianMoments(x0, np.eye(4)), [0.0, 0.7])
    np.testing.assert_allclose(out[1].mean, scipy.linalg.expm(0.7 * sys.A) @ x0, atol=1e-13)


def test_steady_state_matches_scipy_lyapunov_solver(rng):
    sys = dissipative_pair(1.3, random_symmetric(rng, 2, psd=True), random_symmetric(rng, 2, 0.1))
    dec = decompose(sys)
    V = steady_covariance(dec.A2, dec.D2)
    oracle = scipy.linalg.solve_continuous_lyapunov(dec.A2, -dec.D2)
    np.testing.assert_allclose(V, oracle, atol=1e-12)


def test_steady_state_is_long_time_limit(rng):
    kappa = 1.0
    sys = dissipative_pair(kappa)
    dec = decompose(sys)
    V0 = dec.T.T @ tms_covariance(0.8) @ dec.T
    late = evolve_moments(dec.A2, dec.D2, GaussianMoments(np.zeros(2), V0[2:, 2:]), [0.0, 40.0])[-1]
    np.testing.assert_allclose(late.cov, steady_covariance(dec.A2, dec.D2), atol=1e-12)


def test_steady_state_needs_hurwitz_drift():
    with pytest.raises(NoSteadyStateError):
        steady_covariance(symplectic_form(1), np.eye(2))


def test_damped_mode_relaxes_to_vacuum():
    kappa = 4.0
    dec = decompose(dissipative_pair(kappa))
    np.testing.assert_allclose(steady_covariance(dec.A2, dec.D2), np.eye(2) / 2, atol=1e-9)


def test_two_mode_squeezed_state():
    r = 1.0
    V = tms_covariance(r)
    m = log_negativity_two_mode(V)
    assert m.purity == pytest.approx(1.0, abs=1e-9)
    assert m.log_negativity == pytest.approx(r / 2, abs=1e-9)
    np.testing.assert_allclose(symplectic_eigenvalues(V), [0.5, 0.5], atol=1e-12)


def test_product_state_has_no_negativity():
    assert log_negativity_two_mode(np.eye(4) / 2).log_negativity == 0.0


def test_log_negativity_invariant_under_local_symplectics(rng):
    V = tms_covariance(0.6)
    ref = log_negativity_two_mode(V).log_negativity
    for _ in range(5):
        L = scipy.linalg.block_diag(random_symplectic(rng, 1, 0.5), random_symplectic(rng, 1, 0.5))
        assert log_negativity_two_mode(L @ V @ L.T).log_negativity == pytest.approx(ref, abs=1e-10)


def test_symplectic_spectrum_invariant_under_symplectic_maps(rng):
    V = random_physical_cov(rng, 3)
    S = random_symplectic(rng, 3)
    np.testing.assert_allclose(symplectic_eigenvalues(S @ V @ S.T), symplectic_eigenvalues(V), rtol=1e-9)


def test_purity_rejects_sub_vacuum_determinant():
    with pytest.raises(UnphysicalStateError):
        purity(np.eye(2) / 4)


def test_stability_of_dissipative_and_dispersive_pairs():
    dec = decompose(dissipative_pair(1.0))
    rep = df_stability(dec.G_DF, dec.A2)
    assert rep.stable and rep.a2_hurwitz and rep.gdf_psd and rep.shortcut_used
    assert rep.worst_pair_real == pytest.approx(-1.0)
    dec = decompose(dispersive_pair(1.0))
    rep = df_stability(dec.G_DF, dec.A2)
    assert not rep.stable and rep.worst_pair_real >= -1e-10 and rep.marginal


def test_indefinite_df_hamiltonian_can_break_stability():
    # A1 = S diag(1, -1) has eigenvalues +-1; with A2 = -0.5 I the pair sum is +0.5.
    rep = df_stability(np.diag([1.0, -1.0]), -0.5 * np.eye(2))
    assert not rep.gdf_psd and not rep.shortcut_used
    assert rep.a2_hurwitz and not rep.stable
    assert rep.worst_pair_real == pytest.approx(0.5)


def test_psd_hamiltonian_spectrum_is_imaginary(rng):
    G = random_symmetric(rng, 4, psd=True)
    rep = df_stability(G, -np.eye(2))
    np.testing.assert_array_equal(rep.eig_A1.real, 0.0)
    direct = np.linalg.eigvals(symplectic_form(2) @ G)
    np.testing.assert_allclose(np.sort(rep.eig_A1.imag), np.sort(direct.imag), atol=1e-12)


def test_empty_blocks_are_vacuously_stable():
    rep = df_stability(np.eye(2), np.zeros((0, 0)))
    assert rep.stable and rep.worst_pair_real == float("-inf")


def test_correlations_decay_in_dissipative_pair():
    kappa = 2.0
    sys = dissipative_pair(kappa)
    dec = decompose(sys)
    Vp = np.eye(4)
    Vp[:2, 2:] = Vp[2:, :2] = 0.1
    traj = evolve_moments(sys.A, sys.D, GaussianMoments(np.zeros(4), dec.T @ Vp @ dec.T.T), [0.0, 20 / kappa])
    assert correlation_block_norm(dec.T.T @ traj[-1].cov @ dec.T, 1) < 1e-6


def test_dispersive_purity_decay_law():
    kappa = 1.0
    sys = dispersive_pair(kappa)
    ts = np.linspace(0, 5, 11)
    traj = evolve_moments(sys.A, sys.D, GaussianMoments(np.zeros(4), tms_covariance(1.0)), ts)
    p = np.array([purity(m.cov) for m in traj])
    assert np.all(np.diff(p) < 0)
    np.testing.assert_allclose(p, (1 + 2 * kappa * ts) ** -0.5, rtol=1e-9)
