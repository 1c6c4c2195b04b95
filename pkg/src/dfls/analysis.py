"""Detection and construction of decoherence-free (DF) subsystems.

A DF mode is a canonical pair that is both uncontrollable from the input
noise and unobservable in the output. Its coordinates span

    Ker(O) ∩ Ker(O S_n),

where ``O`` is the observability matrix built from ``(A, C)``. That space
is invariant under ``S_n``, so it can be split into conjugate pairs
``(v, S_n^T v)``, which gives a transform ``T1`` with ``T1^T S_n T1 = S_l``.
The orthogonal complement is paired the same way into ``T2``; in the
coordinates ``(T1, T2)^T x`` the drift is block diagonal and the DF block
sees neither the input nor the output.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace

import numpy as np
import scipy.linalg
from numpy.typing import ArrayLike, NDArray

from .core import QuantumLinearSystem, _sigma
from .errors import (
    DecompositionInconsistencyError,
    IllConditionedRankError,
    InvalidDimensionError,
    InvarianceViolationError,
)

DEFAULT_TOL_RANK = 1e-9


@dataclass(frozen=True)
class KalmanMatrices:
    """Controllability ``(B, AB, ..., A^{2n-1} B)`` and observability ``(C; CA; ...; CA^{2n-1})``."""

    ctrb: NDArray[np.float64]
    obsv: NDArray[np.float64]


def _scaled(block: NDArray, normalize: bool) -> NDArray:
    if not normalize:
        return block
    nrm = np.linalg.norm(block)
    return block / nrm if nrm > 0 else block


def kalman_matrices(sys: QuantumLinearSystem, *, normalize: bool = False) -> KalmanMatrices:
    """Build both Kalman matrices with exactly ``2n`` power blocks.

    With ``normalize=True`` each power block is divided by its Frobenius
    norm. The kernels are unchanged, but the singular values of blocks with
    small and large powers of ``A`` are brought onto one scale, which keeps
    the rank decision meaningful when ``||A||`` is far from 1.

    A closed system (``m = 0``) yields empty matrices.
    """
    A, B, C = sys.A, sys.B, sys.C
    dim = A.shape[0]
    if sys.m == 0:
        return KalmanMatrices(ctrb=np.zeros((dim, 0)), obsv=np.zeros((0, dim)))
    ctrb_blocks, obsv_blocks = [], []
    right, left = B.copy(), C.copy()
    for _ in range(dim):
        ctrb_blocks.append(_scaled(right, normalize))
        obsv_blocks.append(_scaled(left, normalize))
        right = A @ right
        left = left @ A
    return KalmanMatrices(ctrb=np.hstack(ctrb_blocks), obsv=np.vstack(obsv_blocks))


@dataclass(frozen=True)
class KernelBasis:
    """Orthonormal basis (columns) of a numerical kernel."""

    basis: NDArray[np.float64]
    tol_rank: float = DEFAULT_TOL_RANK

    @property
    def d(self) -> int:
        return self.basis.shape[1]


def kernel_basis(M: ArrayLike, tol_rank: float = DEFAULT_TOL_RANK) -> KernelBasis:
    """Right singular vectors of ``M`` whose singular values are at most ``tol_rank * s_max``.

    ``s_max`` is replaced by 1 when ``M`` is identically zero.
    """
    M = np.atleast_2d(np.asarray(M, dtype=float))
    cols = M.shape[1]
    if M.shape[0] == 0:
        return KernelBasis(np.eye(cols), tol_rank)
    _, s, vt = np.linalg.svd(M, full_matrices=True)
    s_max = s[0] if s.size and s[0] > 0 else 1.0
    rank = int(np.count_nonzero(s > tol_rank * s_max))
    return KernelBasis(np.ascontiguousarray(vt[rank:].T), tol_rank)


def df_subspace(sys: QuantumLinearSystem, tol_rank: float = DEFAULT_TOL_RANK) -> KernelBasis:
    """Orthonormal basis of ``Ker(O) ∩ Ker(O S_n)``, computed as one stacked kernel.

    Raises
    ------
    IllConditionedRankError
        If the numerical intersection has odd dimension. The exact space is
        always even-dimensional, so this means the tolerance sits on a gap
        in the singular values.
    """
    if sys.m == 0:
        return KernelBasis(np.eye(2 * sys.n), tol_rank)
    obsv = kalman_matrices(sys, normalize=True).obsv
    kb = kernel_basis(np.vstack([obsv, obsv @ sys.sigma]), tol_rank)
    if kb.d % 2:
        raise IllConditionedRankError(
            f"DF subspace has odd numerical dimension {kb.d} at tol_rank={tol_rank:g}; "
            "adjust the rank tolerance"
        )
    return kb


def _orth_complement(T: NDArray, dim: int) -> NDArray:
    if T.shape[1] == 0:
        return np.eye(dim)
    return scipy.linalg.null_space(T.T, rcond=1e-10)


def _pair_up(W: NDArray, sigma: NDArray) -> NDArray:
    """Split an S-invariant span (orthonormal columns ``W``) into conjugate pairs ``(v, S^T v)``.

    Each round picks the standard basis vector with the largest projection
    onto what is left of the span, so the output gauge is deterministic and
    aligned with the coordinate axes whenever possible.
    """
    dim = W.shape[0]
    cols: list[NDArray] = []
    while W.shape[1] >= 2:
        row_norms = np.linalg.norm(W, axis=1)
        j = int(np.flatnonzero(row_norms >= row_norms.max() * (1 - 1e-9))[0])
        v = W @ W[j]
        if cols:
            Tk = np.column_stack(cols)
            v = v - Tk @ (Tk.T @ v)
        v /= np.linalg.norm(v)
        w = sigma.T @ v
        if cols:
            w = w - Tk @ (Tk.T @ w)
        w -= v * (v @ w)
        w /= np.linalg.norm(w)
        cols += [v, w]
        rest = W - np.outer(v, v @ W) - np.outer(w, w @ W)
        u, s, _ = np.linalg.svd(rest, full_matrices=False)
        W = u[:, : W.shape[1] - 2]
    return np.column_stack(cols) if cols else np.zeros((dim, 0))


def _invariance_residual(Q: NDArray, sigma: NDArray) -> float:
    if Q.shape[1] == 0:
        return 0.0
    SQ = sigma @ Q
    return float(np.max(np.abs(SQ - Q @ (Q.T @ SQ))))


def symplectic_df_basis(
    subspace: KernelBasis | ArrayLike, sigma: ArrayLike | None = None, tol: float = 1e-9
) -> NDArray[np.float64]:
    """Orthonormal symplectic basis ``T1 = (v1, S^T v1, ..., vl, S^T vl)`` of an S-invariant span.

    ``subspace`` must have orthonormal columns. ``T1^T T1 = I`` and
    ``T1^T S_n T1 = S_l``. The pair partner is ``S^T v``: with ``S v`` the
    result would satisfy ``T1^T S_n T1 = -S_l`` instead.

    Raises
    ------
    InvarianceViolationError
        If ``S_n`` does not map the span into itself, or it is odd-dimensional.
    """
    Q = subspace.basis if isinstance(subspace, KernelBasis) else np.asarray(subspace, dtype=float)
    dim = Q.shape[0]
    sigma = _sigma(dim // 2) if sigma is None else np.asarray(sigma, dtype=float)
    if Q.shape[1] % 2:
        raise InvarianceViolationError(f"an odd-dimensional span ({Q.shape[1]}) cannot be S-invariant")
    gap = _invariance_residual(Q, sigma)
    if gap > tol:
        raise InvarianceViolationError(f"span is not invariant under the symplectic form (residual {gap:.3e})")
    return _pair_up(Q, sigma)


def complement_basis(T1: ArrayLike, sigma: ArrayLike | None = None, tol: float = 1e-9) -> NDArray[np.float64]:
    """Pair the orthogonal complement of ``Range(T1)`` into ``T2`` so that ``(T1, T2)`` is orthogonal-symplectic."""
    T1 = np.asarray(T1, dtype=float)
    dim = T1.shape[0]
    sigma = _sigma(dim // 2) if sigma is None else np.asarray(sigma, dtype=float)
    return symplectic_df_basis(_orth_complement(T1, dim), sigma, tol)


def df_hamiltonian(G: ArrayLike, T1: ArrayLike) -> NDArray[np.float64]:
    """Hamiltonian matrix ``T1^T G T1`` that drives the DF mode."""
    G = np.asarray(G, dtype=float)
    T1 = np.asarray(T1, dtype=float)
    if G.shape[0] != T1.shape[0]:
        raise InvalidDimensionError(f"G is {G.shape} but T1 has {T1.shape[0]} rows")
    G_df = T1.T @ G @ T1
    return (G_df + G_df.T) / 2


@dataclass(frozen=True)
class DFDecomposition:
    """Coordinates ``x' = (T1, T2)^T x`` that split a system into DF and D modes.

    ``A1 = S_l G_DF`` drives the DF mode. The D mode has drift ``A2``,
    diffusion ``D2``, input gain ``B2`` and output matrix ``C2``.
    ``residuals`` holds the max-abs residual of every structural check made
    when the decomposition was built.
    """

    ell: int
    T1: NDArray[np.float64]
    T2: NDArray[np.float64]
    G_DF: NDArray[np.float64]
    A1: NDArray[np.float64]
    A2: NDArray[np.float64]
    D2: NDArray[np.float64]
    B2: NDArray[np.float64]
    C2: NDArray[np.float64]
    residuals: dict[str, float] = field(default_factory=dict, compare=False)

    @property
    def n(self) -> int:
        return self.T1.shape[0] // 2

    @property
    def T(self) -> NDArray[np.float64]:
        return np.hstack([self.T1, self.T2])


def _maxabs(M: NDArray) -> float:
    return float(np.max(np.abs(M), initial=0.0))


def decompose(sys: QuantumLinearSystem, tol_rank: float = DEFAULT_TOL_RANK) -> DFDecomposition | None:
    """Construct the DF/D split of ``sys``, or return ``None`` when there is no DF mode.

    Every block identity is verified; a residual above
    ``100 * tol_rank * max(||A||, ||C||)`` raises
    :class:`DecompositionInconsistencyError` instead of returning a bad result.
    """
    sub = df_subspace(sys, tol_rank)
    if sub.d == 0:
        return None
    n = sys.n
    sn = sys.sigma
    T1 = symplectic_df_basis(sub, sn, tol=max(1e-9, 100 * tol_rank))
    T2 = complement_basis(T1, sn, tol=max(1e-9, 100 * tol_rank))
    ell = T1.shape[1] // 2
    A, B, C = sys.A, sys.B, sys.C
    G_df = df_hamiltonian(sys.G, T1)
    A1 = _sigma(ell) @ G_df
    A2 = T2.T @ A @ T2
    D2 = T2.T @ sn.T @ C.T @ C @ sn @ T2 / 2
    D2 = (D2 + D2.T) / 2
    B2 = _sigma(n - ell) @ T2.T @ C.T @ _sigma(sys.m)
    C2 = C @ T2

    T = np.hstack([T1, T2])
    residuals = {
        "orthogonality": _maxabs(T.T @ T - np.eye(2 * n)),
        "symplectic_T1": _maxabs(T1.T @ sn @ T1 - _sigma(ell)),
        "symplectic_T2": _maxabs(T2.T @ sn @ T2 - _sigma(n - ell)),
        "symplectic_cross": _maxabs(T1.T @ sn @ T2),
        "C_T1": _maxabs(C @ T1),
        "T1t_B": _maxabs(T1.T @ B),
        "T2t_A_T1": _maxabs(T2.T @ A @ T1),
        "T1t_A_T2": _maxabs(T1.T @ A @ T2),
        "A1_block": _maxabs(T1.T @ A @ T1 - A1),
        "B2_block": _maxabs(T2.T @ B - B2),
    }
    scale = max(np.linalg.norm(A, 2), np.linalg.norm(C, 2) if C.size else 0.0)
    block_tol = 100 * tol_rank * scale if scale > 0 else 1e-13
    for key, val in residuals.items():
        limit = 1e-10 if key.startswith(("orth", "sympl")) else block_tol
        if val > limit:
            raise DecompositionInconsistencyError(f"{key} residual {val:.3e} exceeds {limit:.3e}")
    return DFDecomposition(
        ell=ell, T1=T1, T2=T2, G_DF=G_df, A1=A1, A2=A2, D2=D2, B2=B2, C2=C2, residuals=residuals
    )


def align_gauge(dec: DFDecomposition, T1_ref: ArrayLike, tol: float = 1e-8) -> DFDecomposition:
    """Rotate the DF basis onto a reference ``T1_ref`` spanning the same space.

    ``T1`` is only defined up to an orthogonal-symplectic rotation ``R`` of
    its columns. With both bases orthonormal and symplectic, ``R = T1^T T1_ref``
    exactly; the DF-side blocks follow as ``G_DF -> R^T G_DF R``.
    """
    T1_ref = np.asarray(T1_ref, dtype=float)
    if T1_ref.shape != dec.T1.shape:
        raise InvalidDimensionError(f"reference is {T1_ref.shape}, T1 is {dec.T1.shape}")
    if max_principal_angle(dec.T1, T1_ref) > tol:
        raise InvarianceViolationError("reference basis spans a different subspace")
    R = dec.T1.T @ T1_ref
    G_df = R.T @ dec.G_DF @ R
    G_df = (G_df + G_df.T) / 2
    return replace(dec, T1=dec.T1 @ R, G_DF=G_df, A1=_sigma(dec.ell) @ G_df)


def max_principal_angle(U: ArrayLike, V: ArrayLike) -> float:
    """Largest principal angle between ``Range(U)`` and ``Range(V)``; ``pi/2`` if the dimensions differ."""
    U = np.asarray(U, dtype=float)
    V = np.asarray(V, dtype=float)
    if U.shape[1] != V.shape[1]:
        return float(np.pi / 2)
    if U.shape[1] == 0:
        return 0.0
    return float(np.max(scipy.linalg.subspace_angles(U, V)))


def coupling_df_basis(C: ArrayLike, tol_rank: float = DEFAULT_TOL_RANK) -> NDArray[np.float64]:
    """``T1`` for ``G = 0``: a symplectic basis of ``Ker(C) ∩ Ker(C S_n)``."""
    C = np.asarray(C, dtype=float)
    sn = _sigma(C.shape[1] // 2)
    kb = kernel_basis(np.vstack([C, C @ sn]), tol_rank)
    return symplectic_df_basis(kb, sn)


class Preservation(enum.Enum):
    """Outcome of the Hamiltonian admissibility test."""

    PRESERVED = "true-iff"
    PRESERVED_SUFFICIENT = "true-sufficient"
    NOT_PRESERVED = "false"


@dataclass(frozen=True)
class HamiltonianCheck:
    verdict: Preservation
    residual: float
    exact: bool  # True when the test is necessary and sufficient

    def __bool__(self) -> bool:
        return self.verdict is not Preservation.NOT_PRESERVED


def hamiltonian_preserves_df(
    G: ArrayLike, T1: ArrayLike, C: ArrayLike, tol: float = DEFAULT_TOL_RANK
) -> HamiltonianCheck:
    """Decide whether adding Hamiltonian ``G`` keeps ``Range(T1)`` a DF subspace.

    ``T1`` must come from the coupling alone (see :func:`coupling_df_basis`).
    When ``Ker(C) = Ker(C S_n)`` the test ``C G T1 = 0`` is exact. Otherwise
    the fallback is invariance of ``Range(T1)`` under ``G``, which is only
    sufficient; a failed fallback is reported as ``NOT_PRESERVED`` with
    ``exact=False``.
    """
    G = np.asarray(G, dtype=float)
    T1 = np.asarray(T1, dtype=float)
    C = np.atleast_2d(np.asarray(C, dtype=float))
    if G.shape[0] != T1.shape[0] or (C.size and C.shape[1] != G.shape[0]):
        raise InvalidDimensionError(f"inconsistent shapes G{G.shape}, T1{T1.shape}, C{C.shape}")
    if T1.size == 0:
        # nothing to preserve
        return HamiltonianCheck(Preservation.PRESERVED, 0.0, True)
    sn = _sigma(G.shape[0] // 2)
    if C.size == 0:
        kernels_equal = True
    else:
        k1 = kernel_basis(C, tol).basis
        k2 = kernel_basis(C @ sn, tol).basis
        kernels_equal = max_principal_angle(k1, k2) <= 1e-8
    g_norm = np.linalg.norm(G, 2)
    if kernels_equal:
        resid = float(np.linalg.norm(C @ G @ T1, 2)) if C.size else 0.0
        limit = tol * (np.linalg.norm(C, 2) if C.size else 0.0) * g_norm
        ok = resid <= limit
        return HamiltonianCheck(Preservation.PRESERVED if ok else Preservation.NOT_PRESERVED, resid, True)
    GT1 = G @ T1
    resid = float(np.linalg.norm(GT1 - T1 @ (T1.T @ GT1), 2))
    ok = resid <= tol * g_norm
    return HamiltonianCheck(
        Preservation.PRESERVED_SUFFICIENT if ok else Preservation.NOT_PRESERVED, resid, False
    )
