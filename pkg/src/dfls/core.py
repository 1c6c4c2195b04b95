"""Matrix model of a linear open quantum system.

A system of ``n`` modes with quadrature vector ``x = (q1, p1, ..., qn, pn)``
is specified by a quadratic Hamiltonian ``H = x^T G x / 2`` and ``m`` linear
coupling operators ``L_i = c_i^T x`` (``hbar = 1``). Everything else (drift,
input gain, output matrix, diffusion) is derived from that data.

Internally the interleaved ordering above is the only ordering used.
Matrices written in the grouped ordering ``(q1, ..., qn, p1, ..., pn)`` are
converted on ingestion with :class:`ModeBasisPermutation`.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .errors import InvalidDimensionError, InvalidHamiltonianError

_SIGMA = np.array([[0.0, 1.0], [-1.0, 0.0]])


def _frozen(a: NDArray) -> NDArray:
    a = np.array(a, copy=True)
    a.setflags(write=False)
    return a


def _sigma(n: int) -> NDArray[np.float64]:
    # n = 0 is allowed here: a closed system has an empty field form.
    return np.kron(np.eye(n), _SIGMA)


def symplectic_form(n: int) -> NDArray[np.float64]:
    """Return the ``2n x 2n`` block-diagonal form ``diag(S, ..., S)``, ``S = [[0, 1], [-1, 0]]``."""
    if isinstance(n, bool) or int(n) != n or n < 1:
        raise InvalidDimensionError(f"mode count must be a positive integer, got {n!r}")
    return _sigma(int(n))


@dataclass(frozen=True)
class QuantumLinearSystem:
    """Hamiltonian and coupling data of a linear system plus the derived coefficients.

    Attributes
    ----------
    G : (2n, 2n) ndarray
        Symmetric Hamiltonian matrix.
    couplings : (m, 2n) complex ndarray
        Row ``i`` is the coupling vector ``c_i``.
    A, B, C, D : ndarray
        Drift ``(2n, 2n)``, input gain ``(2n, 2m)``, output matrix ``(2m, 2n)``
        and diffusion ``(2n, 2n)``.
    """

    G: NDArray[np.float64]
    couplings: NDArray[np.complex128]
    A: NDArray[np.float64]
    B: NDArray[np.float64]
    C: NDArray[np.float64]
    D: NDArray[np.float64]

    @property
    def n(self) -> int:
        return self.G.shape[0] // 2

    @property
    def m(self) -> int:
        return self.couplings.shape[0]

    @cached_property
    def sigma(self) -> NDArray[np.float64]:
        return _sigma(self.n)

    def transformed(self, T: ArrayLike) -> QuantumLinearSystem:
        """Re-express the system in coordinates ``x' = T^T x`` for square symplectic ``T``."""
        T = np.asarray(T, dtype=float)
        if T.shape != self.G.shape:
            raise InvalidDimensionError(f"transform must be {self.G.shape}, got {T.shape}")
        return assemble_system(T.T @ self.G @ T, self.couplings @ T)


def output_matrix(couplings: ArrayLike, n: int) -> NDArray[np.float64]:
    """Stack ``sqrt(2) * (Re c_1, Im c_1, ..., Re c_m, Im c_m)^T`` into a ``(2m, 2n)`` matrix."""
    c = np.asarray(couplings, dtype=complex).reshape(-1, 2 * n)
    C = np.empty((2 * c.shape[0], 2 * n))
    C[0::2] = np.sqrt(2.0) * c.real
    C[1::2] = np.sqrt(2.0) * c.imag
    return C


def assemble_system(
    G: ArrayLike,
    couplings: ArrayLike = (),
    *,
    n: int | None = None,
    m: int | None = None,
    tol_sym: float = 1e-12,
) -> QuantumLinearSystem:
    """Build a :class:`QuantumLinearSystem` from ``G`` and the coupling vectors.

    ``G`` is symmetrized as ``(G + G^T) / 2``; an asymmetry larger than
    ``tol_sym`` (max-abs) is rejected. ``couplings`` is any array of shape
    ``(m, 2n)`` (complex), and may be empty for a closed system.
    """
    G = np.asarray(G, dtype=float)
    if G.ndim != 2 or G.shape[0] != G.shape[1] or G.shape[0] % 2:
        raise InvalidDimensionError(f"G must be square with even size, got shape {G.shape}")
    n_modes = G.shape[0] // 2
    if n_modes == 0:
        raise InvalidDimensionError("a system needs at least one mode")
    if n is not None and n != n_modes:
        raise InvalidDimensionError(f"G is {G.shape[0]}x{G.shape[0]} but n={n}")
    asym = np.max(np.abs(G - G.T))
    if asym > tol_sym:
        raise InvalidHamiltonianError(f"G is not symmetric: max |G - G^T| = {asym:.3e} > {tol_sym:.1e}")
    G = (G + G.T) / 2

    c = np.asarray(couplings, dtype=complex)
    if c.size == 0:
        c = np.zeros((0, 2 * n_modes), dtype=complex)
    elif c.ndim == 1:
        c = c[None, :]
    if c.ndim != 2 or c.shape[1] != 2 * n_modes:
        raise InvalidDimensionError(
            f"each coupling vector must have length {2 * n_modes}, got shape {c.shape}"
        )
    if m is not None and m != c.shape[0]:
        raise InvalidDimensionError(f"got {c.shape[0]} coupling vectors but m={m}")

    sn = _sigma(n_modes)
    sm = _sigma(c.shape[0])
    C = output_matrix(c, n_modes)
    A = sn @ (G + C.T @ sm @ C / 2)
    B = sn @ C.T @ sm
    D = sn.T @ C.T @ C @ sn / 2
    D = (D + D.T) / 2
    return QuantumLinearSystem(
        G=_frozen(G), couplings=_frozen(c), A=_frozen(A), B=_frozen(B), C=_frozen(C), D=_frozen(D)
    )


def system_matrices(sys: QuantumLinearSystem) -> tuple[NDArray, NDArray, NDArray, NDArray]:
    """Return ``(A, B, C, D)`` after checking the diffusion identity ``D = B B^T / 2``."""
    gap = np.max(np.abs(sys.D - sys.B @ sys.B.T / 2), initial=0.0)
    scale = max(1.0, np.max(np.abs(sys.D), initial=0.0))
    if gap > 1e-12 * scale:
        raise InvalidHamiltonianError(f"diffusion identity violated by {gap:.3e}")
    return sys.A, sys.B, sys.C, sys.D


def is_symplectic(T: ArrayLike, tol: float = 1e-10) -> tuple[bool, float]:
    """Test ``T^T S_n T = S_k`` for a ``2n x 2k`` matrix; return ``(verdict, max-abs residual)``."""
    T = np.asarray(T, dtype=float)
    if T.ndim != 2 or T.shape[0] % 2 or T.shape[1] % 2:
        raise InvalidDimensionError(f"need an even number of rows and columns, got {T.shape}")
    if T.shape[1] > T.shape[0]:
        raise InvalidDimensionError(f"more columns than rows: {T.shape}")
    resid = T.T @ _sigma(T.shape[0] // 2) @ T - _sigma(T.shape[1] // 2)
    r = float(np.max(np.abs(resid), initial=0.0))
    return r <= tol, r


@dataclass(frozen=True)
class ModeBasisPermutation:
    """Reordering between grouped ``(q1..qn, p1..pn)`` and interleaved ``(q1, p1, ...)`` coordinates.

    ``order[i]`` is the grouped index of interleaved coordinate ``i``, and
    ``matrix`` is ``P`` with ``x_grouped = P @ x_interleaved``.
    """

    n: int
    order: tuple[int, ...]

    @cached_property
    def matrix(self) -> NDArray[np.float64]:
        P = np.zeros((2 * self.n, 2 * self.n))
        P[list(self.order), np.arange(2 * self.n)] = 1.0
        return P

    def matrix_to_interleaved(self, M: ArrayLike) -> NDArray:
        M = np.asarray(M)
        return M[np.ix_(self.order, self.order)]

    def matrix_to_grouped(self, M: ArrayLike) -> NDArray:
        P = self.matrix
        return P @ np.asarray(M) @ P.T

    def vector_to_interleaved(self, v: ArrayLike) -> NDArray:
        return np.asarray(v)[..., list(self.order)]

    def vector_to_grouped(self, v: ArrayLike) -> NDArray:
        v = np.asarray(v)
        out = np.empty_like(v)
        out[..., list(self.order)] = v
        return out


def basis_permutation(n: int) -> ModeBasisPermutation:
    if n < 1:
        raise InvalidDimensionError(f"mode count must be >= 1, got {n}")
    order = tuple(k for i in range(n) for k in (i, n + i))
    return ModeBasisPermutation(n=n, order=order)
