"""Gaussian moment dynamics, Lyapunov equations and state metrics.

Means and covariances follow

    d<x>/dt = A <x>,    dV/dt = A V + V A^T + D,

with vacuum quadrature variance 1/2. The covariance flow is solved in
closed form by exponentiating the Kronecker-lifted generator augmented
with the constant forcing ``vec(D)``; a fixed-step RK4 integrator is kept
as an independent cross-check.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg
from numpy.typing import ArrayLike, NDArray

from .core import _sigma
from .errors import InvalidDimensionError, NoSteadyStateError, UncertaintyViolationError, UnphysicalStateError

DEFAULT_TOL_PSD = 1e-9
DEFAULT_TOL_MARGIN = 1e-10


def uncertainty_margin(V: ArrayLike) -> float:
    """Smallest eigenvalue of the Hermitian matrix ``V + i S_n / 2`` (non-negative for physical states)."""
    V = np.asarray(V, dtype=float)
    V = (V + V.T) / 2
    return float(np.linalg.eigvalsh(V + 0.5j * _sigma(V.shape[0] // 2))[0])


@dataclass(frozen=True)
class GaussianMoments:
    mean: NDArray[np.float64]
    cov: NDArray[np.float64]

    def __post_init__(self):
        mean = np.asarray(self.mean, dtype=float)
        cov = np.asarray(self.cov, dtype=float)
        if cov.ndim != 2 or cov.shape != (mean.size, mean.size) or mean.size % 2:
            raise InvalidDimensionError(f"mean {mean.shape} and covariance {cov.shape} do not match")
        if np.max(np.abs(cov - cov.T), initial=0.0) > 1e-12 * max(1.0, np.max(np.abs(cov))):
            raise InvalidDimensionError("covariance matrix is not symmetric")
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "cov", (cov + cov.T) / 2)

    @classmethod
    def vacuum(cls, n: int) -> GaussianMoments:
        return cls(np.zeros(2 * n), np.eye(2 * n) / 2)

    def is_physical(self, tol_psd: float = DEFAULT_TOL_PSD) -> bool:
        return uncertainty_margin(self.cov) >= -tol_psd


def _lyapunov_generator(A: NDArray) -> NDArray:
    # Column-major vec: vec(A V + V A^T) = (I ⊗ A + A ⊗ I) vec(V).
    eye = np.eye(A.shape[0])
    return np.kron(eye, A) + np.kron(A, eye)


def evolve_moments(
    A: ArrayLike,
    D: ArrayLike,
    moments0: GaussianMoments,
    t_grid: ArrayLike,
    *,
    allow_unphysical: bool = False,
    tol_psd: float = DEFAULT_TOL_PSD,
) -> list[GaussianMoments]:
    """Exact moments at every time in ``t_grid`` (non-decreasing, starting at 0).

    Each time point is computed independently from ``t = 0``, so the output
    does not accumulate stepping error.
    """
    A = np.asarray(A, dtype=float)
    D = np.asarray(D, dtype=float)
    t_grid = np.asarray(t_grid, dtype=float)
    dim = A.shape[0]
    if moments0.mean.size != dim or D.shape != A.shape:
        raise InvalidDimensionError("moments, drift and diffusion dimensions disagree")
    if t_grid.size == 0 or t_grid[0] != 0 or np.any(np.diff(t_grid) < 0):
        raise ValueError("time grid must be non-decreasing and start at 0")
    if not allow_unphysical and not moments0.is_physical(tol_psd):
        raise UncertaintyViolationError(
            f"initial covariance violates the uncertainty relation (margin {uncertainty_margin(moments0.cov):.3e})"
        )

    k = dim * dim
    gen = np.zeros((k + 1, k + 1))
    gen[:k, :k] = _lyapunov_generator(A)
    gen[:k, k] = D.reshape(-1, order="F")
    state = np.append(moments0.cov.reshape(-1, order="F"), 1.0)

    out = []
    for t in t_grid:
        mean = scipy.linalg.expm(A * t) @ moments0.mean
        V = (scipy.linalg.expm(gen * t) @ state)[:k].reshape(dim, dim, order="F")
        out.append(GaussianMoments(mean, (V + V.T) / 2))
    return out


def integrate_covariance_rk4(A: ArrayLike, D: ArrayLike, V0: ArrayLike, t_end: float, steps: int) -> NDArray:
    """Fixed-step RK4 solution of ``dV/dt = A V + V A^T + D``; returns shape ``(steps + 1, 2n, 2n)``."""
    A = np.asarray(A, dtype=float)
    D = np.asarray(D, dtype=float)
    V = np.asarray(V0, dtype=float).copy()
    h = t_end / steps

    def rhs(X):
        return A @ X + X @ A.T + D

    out = [V.copy()]
    for _ in range(steps):
        k1 = rhs(V)
        k2 = rhs(V + h / 2 * k1)
        k3 = rhs(V + h / 2 * k2)
        k4 = rhs(V + h * k3)
        V = V + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        out.append(V.copy())
    return np.array(out)


def steady_covariance(A: ArrayLike, D: ArrayLike) -> NDArray[np.float64]:
    """Unique solution of ``A V + V A^T + D = 0`` for Hurwitz ``A``."""
    A = np.asarray(A, dtype=float)
    D = np.asarray(D, dtype=float)
    abscissa = np.max(np.linalg.eigvals(A).real)
    if abscissa >= 0:
        raise NoSteadyStateError(f"drift is not Hurwitz (spectral abscissa {abscissa:.3e})")
    dim = A.shape[0]
    vec = np.linalg.solve(_lyapunov_generator(A), -D.reshape(-1, order="F"))
    V = vec.reshape(dim, dim, order="F")
    V = (V + V.T) / 2
    resid = np.linalg.norm(A @ V + V @ A.T + D, 2)
    bound = 1e-9 * (np.linalg.norm(A, 2) * np.linalg.norm(V, 2) + np.linalg.norm(D, 2))
    if resid > bound:
        raise NoSteadyStateError(f"Lyapunov residual {resid:.3e} above {bound:.3e}")
    return V


@dataclass(frozen=True)
class StabilityReport:
    """Pairwise eigenvalue test for the decay of DF/D correlations.

    ``worst_pair_real`` is ``max Re(l1 + l2)`` over eigenvalues ``l1`` of A1 and
    ``l2`` of A2. ``stable`` requires it below ``-tol_margin``; values
    within ``tol_margin`` of zero are marginal. When ``G_DF`` is positive
    semidefinite (``gdf_psd``) the shortcut verdict ``a2_hurwitz`` must agree.
    """

    eig_A1: NDArray[np.complex128]
    eig_A2: NDArray[np.complex128]
    worst_pair_real: float
    stable: bool
    a2_hurwitz: bool
    gdf_psd: bool
    shortcut_used: bool
    tol_margin: float = DEFAULT_TOL_MARGIN

    @property
    def marginal(self) -> bool:
        return abs(self.worst_pair_real) <= self.tol_margin


def _hamiltonian_spectrum(G: NDArray) -> NDArray[np.complex128]:
    """Eigenvalues of ``S G``; exactly imaginary when ``G`` is positive semidefinite."""
    ell = G.shape[0] // 2
    S = _sigma(ell)
    w, U = np.linalg.eigh(G)
    if w.size and w[0] >= -1e-10:
        # S G and G^{1/2} S G^{1/2} share their spectrum; the latter is antisymmetric.
        root = (U * np.sqrt(np.clip(w, 0, None))) @ U.T
        K = root @ S @ root
        return -1j * np.linalg.eigvalsh(1j * (K - K.T) / 2)
    return np.linalg.eigvals(S @ G)


def df_stability(G_DF: ArrayLike, A2: ArrayLike, tol_margin: float = DEFAULT_TOL_MARGIN) -> StabilityReport:
    """Check that every eigenvalue sum of ``S_l G_DF`` and ``A2`` has negative real part."""
    G_DF = np.asarray(G_DF, dtype=float)
    A2 = np.asarray(A2, dtype=float)
    eig1 = _hamiltonian_spectrum(G_DF) if G_DF.size else np.zeros(0, complex)
    eig2 = np.linalg.eigvals(A2).astype(complex) if A2.size else np.zeros(0, complex)
    gdf_psd = bool(G_DF.size == 0 or np.linalg.eigvalsh(G_DF)[0] >= -1e-10)
    if eig1.size and eig2.size:
        worst = float(eig1.real.max() + eig2.real.max())
    else:
        # No cross-correlation block exists, so there is nothing to decay.
        worst = float("-inf")
    a2_hurwitz = bool(eig2.size == 0 or eig2.real.max() < -tol_margin)
    stable = worst < -tol_margin
    if gdf_psd and stable != a2_hurwitz and eig1.size and eig2.size:
        raise ArithmeticError(
            f"pairwise test ({worst:.3e}) disagrees with the A2 shortcut; spectrum is marginal"
        )
    return StabilityReport(
        eig_A1=eig1,
        eig_A2=eig2,
        worst_pair_real=worst,
        stable=bool(stable),
        a2_hurwitz=a2_hurwitz,
        gdf_psd=gdf_psd,
        shortcut_used=gdf_psd,
        tol_margin=tol_margin,
    )


def correlation_block_norm(V: ArrayLike, ell: int) -> float:
    """Frobenius norm of the DF/D cross block ``V[:2l, 2l:]`` of a DF-ordered covariance."""
    V = np.asarray(V, dtype=float)
    return float(np.linalg.norm(V[: 2 * ell, 2 * ell :]))


def purity(V: ArrayLike) -> float:
    """``1 / sqrt(det(2V))``."""
    V = np.asarray(V, dtype=float)
    det = np.linalg.det(2 * V)
    if det < 1 - 1e-6:
        raise UnphysicalStateError(f"det(2V) = {det:.6g} < 1 is not a physical state")
    return float(1 / np.sqrt(det))


def symplectic_eigenvalues(V: ArrayLike) -> NDArray[np.float64]:
    """Symplectic spectrum: moduli of the eigenvalues of ``i S_n V``, one per conjugate pair."""
    V = np.asarray(V, dtype=float)
    V = (V + V.T) / 2
    ev = np.sort(np.abs(np.linalg.eigvals(1j * _sigma(V.shape[0] // 2) @ V)))
    return ev[::2]


@dataclass(frozen=True)
class StateMetrics:
    purity: float
    log_negativity: float
    symplectic_eigs_pt: NDArray[np.float64]


def log_negativity_two_mode(V: ArrayLike) -> StateMetrics:
    """Purity and logarithmic negativity ``max(0, -ln(2 nu_min))`` of a two-mode state.

    The partial transpose flips the sign of the second momentum ``p2``.
    """
    V = np.asarray(V, dtype=float)
    if V.shape != (4, 4):
        raise InvalidDimensionError(f"need a two-mode (4x4) covariance, got {V.shape}")
    flip = np.diag([1.0, 1.0, 1.0, -1.0])
    nu = symplectic_eigenvalues(flip @ V @ flip)
    e_n = max(0.0, -float(np.log(2 * nu.min())))
    return StateMetrics(purity=purity(V), log_negativity=e_n, symplectic_eigs_pt=nu)
