from __future__ import annotations

import numpy as np
import pytest

from conftest import embedded_df_system, random_orthosymplectic, random_symmetric, random_system
from dfls.analysis import (
    Preservation,
    align_gauge,
    complement_basis,
    coupling_df_basis,
    decompose,
    df_subspace,
    hamiltonian_preserves_df,
    kalman_matrices,
    kernel_basis,
    max_principal_angle,
    symplectic_df_basis,
)
from dfls.core import assemble_system, is_symplectic, symplectic_form
from dfls.errors import IllConditionedRankError, InvarianceViolationError
from dfls.scenarios import dispersive_pair, dissipative_pair, optomech, ring_trap, solve_ring_df


def test_kalman_matrices_have_2n_power_blocks(rng):
    sys = random_system(rng, 3, 2)
    km = kalman_matrices(sys)
    assert km.ctrb.shape == (6, 6 * 4)
    assert km.obsv.shape == (6 * 4, 6)
    np.testing.assert_allclose(km.obsv[4:8], sys.C @ sys.A)
    np.testing.assert_allclose(km.ctrb[:, 4:8], sys.A @ sys.B)


def test_normalized_blocks_keep_the_kernel(rng):
    sys, _ = embedded_df_system(rng, 3, 1, 1)
    raw = kernel_basis(kalman_matrices(sys).obsv, 1e-12).basis
    scaled = kernel_basis(kalman_matrices(sys, normalize=True).obsv, 1e-9).basis
    assert raw.shape == scaled.shape
    assert max_principal_angle(raw, scaled) < 1e-8


def test_kernel_basis_of_rank_one_matrix():
    kb = kernel_basis([[1.0, 1.0, 0.0]])
    assert kb.d == 2
    np.testing.assert_allclose(np.array([1.0, 1.0, 0.0]) @ kb.basis, 0, atol=1e-15)
    np.testing.assert_allclose(kb.basis.T @ kb.basis, np.eye(2), atol=1e-15)


def test_kernel_basis_of_zero_matrix_is_everything():
    assert kernel_basis(np.zeros((2, 3))).d == 3


def test_closed_system_is_entirely_decoherence_free(rng):
    sys = assemble_system(random_symmetric(rng, 4))
    assert df_subspace(sys).d == 4
    dec = decompose(sys)
    assert dec.ell == 2 and dec.T2.shape == (4, 0)


def test_generic_system_has_no_df_mode(rng):
    assert df_subspace(random_system(rng, 3, 1)).d == 0
    assert decompose(random_system(rng, 3, 1)) is None


def test_dissipative_pair_span():
    sub = df_subspace(dissipative_pair(2.0))
    target = np.array([[1, 0, -1, 0], [0, 1, 0, -1]], dtype=float).T
    assert sub.d == 2
    assert max_principal_angle(sub.basis, target) < 1e-8


def test_dissipative_pair_decomposition_is_the_sum_difference_transform():
    dec = decompose(dissipative_pair(2.0))
    expected = np.array([[1, 0, 1, 0], [0, 1, 0, 1], [-1, 0, 1, 0], [0, -1, 0, 1]]) / np.sqrt(2)
    np.testing.assert_allclose(dec.T, expected, atol=1e-12)


def test_pair_partner_orientation_gives_positive_symplectic_form():
    # (v, S^T v) yields +S_1; (v, S v) would give -S_1.
    v = np.array([1.0, 0.0, -1.0, 0.0]) / np.sqrt(2)
    S = symplectic_form(2)
    T1 = symplectic_df_basis(np.column_stack([v, S.T @ v]))
    np.testing.assert_allclose(T1.T @ S @ T1, symplectic_form(1), atol=1e-15)
    flipped = np.column_stack([v, S @ v])
    np.testing.assert_allclose(flipped.T @ S @ flipped, -symplectic_form(1), atol=1e-15)


def test_non_invariant_span_rejected():
    with pytest.raises(InvarianceViolationError):
        symplectic_df_basis(np.array([[1.0, 0.0], [0.0, 0.0], [0.0, 1.0], [0.0, 0.0]]))
    with pytest.raises(InvarianceViolationError):
        symplectic_df_basis(np.array([[1.0], [0.0]]))


def test_odd_numerical_kernel_is_reported_as_ill_conditioned(monkeypatch):
    # (O; O S)^T (O; O S) commutes with S, so singular values come in pairs and an
    # odd kernel only arises from a tolerance splitting a pair; simulate that.
    import dfls.analysis as analysis

    monkeypatch.setattr(analysis, "kernel_basis", lambda M, tol: analysis.KernelBasis(np.eye(M.shape[1])[:, :1], tol))
    with pytest.raises(IllConditionedRankError, match="tol"):
        df_subspace(dissipative_pair(1.0))


def test_stacked_singular_values_come_in_pairs(rng):
    for _ in range(10):
        sys = random_system(rng, 3, 1)
        obsv = kalman_matrices(sys, normalize=True).obsv
        s = np.linalg.svd(np.vstack([obsv, obsv @ sys.sigma]), compute_uv=False)
        np.testing.assert_allclose(s[0::2], s[1::2], rtol=1e-8, atol=1e-14 * s[0])


def test_complement_completes_an_orthogonal_symplectic_matrix(rng):
    for n in (2, 3, 4):
        _, T1 = embedded_df_system(rng, n, 1, 1)
        T1 = symplectic_df_basis(np.linalg.qr(T1)[0])
        T = np.hstack([T1, complement_basis(T1)])
        assert is_symplectic(T)[0]
        np.testing.assert_allclose(T.T @ T, np.eye(2 * n), atol=1e-12)


def test_decomposition_block_structure(rng):
    sys, T1_true = embedded_df_system(rng, 4, 2, 2)
    dec = decompose(sys)
    assert dec.ell == 2
    assert max_principal_angle(dec.T1, T1_true) < 1e-8
    np.testing.assert_allclose(sys.C @ dec.T1, 0, atol=1e-10)
    np.testing.assert_allclose(dec.T1.T @ sys.B, 0, atol=1e-10)
    Ap = dec.T.T @ sys.A @ dec.T
    np.testing.assert_allclose(Ap[:4, 4:], 0, atol=1e-10)
    np.testing.assert_allclose(Ap[4:, :4], 0, atol=1e-10)
    np.testing.assert_allclose(Ap[:4, :4], dec.A1, atol=1e-10)
    np.testing.assert_allclose(Ap[4:, 4:], dec.A2, atol=1e-10)
    np.testing.assert_allclose(dec.D2, dec.B2 @ dec.B2.T / 2, atol=1e-10)
    np.testing.assert_allclose(dec.C2, sys.C @ dec.T2, atol=1e-12)
    assert max(dec.residuals.values()) < 1e-10


def test_df_dimension_invariant_under_passive_transforms(rng):
    for _ in range(10):
        sys, _ = embedded_df_system(rng, 3, int(rng.integers(1, 3)), 1, rotate=False)
        T = random_orthosymplectic(rng, 3)
        assert df_subspace(sys.transformed(T)).d == df_subspace(sys).d


def test_dispersive_pair_has_complementary_d_mode_support():
    dec = decompose(dispersive_pair(2.0))
    np.testing.assert_allclose(dec.B2[0], 0, atol=1e-12)
    np.testing.assert_allclose(dec.C2[:, 1], 0, atol=1e-12)


def test_align_gauge_requires_the_same_span():
    dec = decompose(dissipative_pair(1.0))
    other = np.array([[1, 0], [0, 1], [1, 0], [0, 1]], dtype=float) / np.sqrt(2)
    with pytest.raises(InvarianceViolationError):
        align_gauge(dec, other)


def test_align_gauge_rotates_hamiltonian_consistently(rng):
    sys, T1_true = embedded_df_system(rng, 3, 1, 2)
    dec = decompose(sys)
    ref = symplectic_df_basis(np.linalg.qr(T1_true)[0])
    aligned = align_gauge(dec, ref)
    np.testing.assert_allclose(aligned.T1, ref, atol=1e-10)
    np.testing.assert_allclose(aligned.G_DF, ref.T @ sys.G @ ref, atol=1e-10)


def test_ring_trap_hamiltonian_check_is_exact():
    omega, k, kappa = 1.0, 1.0, 1.0
    wp, k2, k3 = solve_ring_df(omega, k)
    good = ring_trap(omega, wp, k, k2, k3, kappa)
    T1 = coupling_df_basis(good.C)
    res = hamiltonian_preserves_df(good.G, T1, good.C)
    assert res.exact and res.verdict is Preservation.PRESERVED
    bad = ring_trap(omega, 2 * omega, k, k2, k3, kappa)
    res = hamiltonian_preserves_df(bad.G, T1, bad.C)
    assert res.exact and res.verdict is Preservation.NOT_PRESERVED and not res


def test_hamiltonian_check_falls_back_when_kernels_differ():
    # Coupling to q only: Ker(C) and Ker(C S) differ, so the test is sufficient only.
    C = np.array([[1.0, 0.0, 0.0, 0.0]])
    T1 = coupling_df_basis(C)
    res = hamiltonian_preserves_df(np.diag([1.0, 1.0, 2.0, 2.0]), T1, C)
    assert res.verdict is Preservation.PRESERVED_SUFFICIENT and not res.exact
    mixing = np.eye(4)
    mixing[0, 2] = mixing[2, 0] = 0.5
    res = hamiltonian_preserves_df(mixing, T1, C)
    assert res.verdict is Preservation.NOT_PRESERVED and not res.exact


def test_hamiltonian_check_with_no_coupling_df_subspace():
    C = np.array([[0.5, 0.5]])
    T1 = coupling_df_basis(C)
    assert T1.shape == (2, 0)
    res = hamiltonian_preserves_df(2 * np.eye(2), T1, C)
    assert res.verdict is Preservation.PRESERVED and res.residual == 0.0


def test_optomech_base_system_has_no_df_mode():
    assert df_subspace(optomech(1.0, 2.0, 0.5, 1.0)).d == 0
