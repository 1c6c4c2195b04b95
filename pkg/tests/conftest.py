from __future__ import annotations

import os

import numpy as np
import pytest
import scipy.linalg

from dfls.core import assemble_system, basis_permutation

SEED = int(os.environ.get("DFLS_SEED", "20240917"))


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(SEED)


def random_symmetric(rng, dim, scale=1.0, psd=False):
    X = rng.normal(size=(dim, dim)) * scale
    if psd:
        return X @ X.T / dim
    return (X + X.T) / 2


def random_orthosymplectic(rng, n):
    """Passive (orthogonal and symplectic) matrix from a random unitary, interleaved basis."""
    Z = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    U, _ = np.linalg.qr(Z)
    grouped = np.block([[U.real, -U.imag], [U.imag, U.real]])
    return basis_permutation(n).matrix_to_interleaved(grouped)


def random_symplectic(rng, n, scale=0.3):
    sigma = np.kron(np.eye(n), [[0.0, 1.0], [-1.0, 0.0]])
    return scipy.linalg.expm(sigma @ random_symmetric(rng, 2 * n, scale))


def embedded_df_system(rng, n, ell, m, *, gdf=None, gd=None, rotate=True):
    """System whose first ``ell`` modes are DF by construction, optionally rotated by a passive T.

    Returns the system and the (rotated) DF basis.
    """
    gdf = random_symmetric(rng, 2 * ell) if gdf is None else gdf
    # Keep the D-mode spectrum comparable to the DF one: the Krylov stack loses
    # relative precision like (|A_DF| / |A_D|)^(2n) when the D modes are slow.
    gd = random_symmetric(rng, 2 * (n - ell), psd=True) + 0.5 * np.eye(2 * (n - ell)) if gd is None else gd
    G = scipy.linalg.block_diag(gdf, gd)
    c = np.zeros((m, 2 * n), dtype=complex)
    c[:, 2 * ell:] = (rng.normal(size=(m, 2 * (n - ell))) + 1j * rng.normal(size=(m, 2 * (n - ell)))) / np.sqrt(2)
    T = random_orthosymplectic(rng, n) if rotate else np.eye(2 * n)
    # x = T x' ; in x-coordinates G_x = T G T^T and c_x = c T^T (T is orthogonal)
    sys = assemble_system(T @ G @ T.T, c @ T.T)
    return sys, T[:, : 2 * ell]


def random_system(rng, n, m):
    G = random_symmetric(rng, 2 * n)
    c = (rng.normal(size=(m, 2 * n)) + 1j * rng.normal(size=(m, 2 * n))) / 2
    return assemble_system(G, c)


def random_physical_cov(rng, n):
    S = random_symplectic(rng, n)
    thermal = np.repeat(1 + rng.exponential(0.5, size=n), 2)
    return S @ np.diag(thermal) @ S.T / 2
