"""Builders for the physical example systems and their DF engineering solvers.

Every builder returns a :class:`~dfls.core.QuantumLinearSystem` in the
interleaved basis. Scenario kinds and parameter keys double as the config
schema vocabulary:

========================  ===============================================
kind                      params
========================  ===============================================
``dissipative-pair``      kappa, G1, G2
``dispersive-pair``       kappa, G1, G2
``optomech``              m, omega, gamma, kappa
``optomech-extended``     m, omega, gamma, kappa, g, mu, nu
``ring-trap``             omega, omega_prime, k, k2, k3, kappa
========================  ===============================================
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

import numpy as np
import scipy.optimize
from numpy.typing import ArrayLike, NDArray

from .analysis import df_subspace, kalman_matrices
from .core import QuantumLinearSystem, assemble_system, basis_permutation
from .errors import ConfigError, EngineeringInfeasibleError, InvalidHamiltonianError

SCENARIO_KINDS = ("dissipative-pair", "dispersive-pair", "optomech", "optomech-extended", "ring-trap")

_REQUIRED = {
    "dissipative-pair": ("kappa",),
    "dispersive-pair": ("kappa",),
    "optomech": ("m", "omega", "gamma", "kappa"),
    "optomech-extended": ("m", "omega", "gamma", "kappa", "g", "mu", "nu"),
    "ring-trap": ("omega", "omega_prime", "k", "k2", "k3", "kappa"),
}
_OPTIONAL = {
    "dissipative-pair": ("G1", "G2"),
    "dispersive-pair": ("G1", "G2"),
    "optomech": (),
    "optomech-extended": (),
    "ring-trap": (),
}


def _block(M: ArrayLike | None, name: str) -> NDArray[np.float64]:
    if M is None or (isinstance(M, str) and M == "zeros"):
        return np.zeros((2, 2))
    M = np.asarray(M, dtype=float)
    if M.shape != (2, 2):
        raise InvalidHamiltonianError(f"{name} must be 2x2, got {M.shape}")
    if np.max(np.abs(M - M.T)) > 1e-12:
        raise InvalidHamiltonianError(f"{name} must be symmetric")
    return M


def _positive(**values: float) -> None:
    for key, val in values.items():
        if not val > 0:
            raise ValueError(f"{key} must be positive, got {val}")


def _pair_hamiltonian(G1: ArrayLike | None, G2: ArrayLike | None) -> NDArray[np.float64]:
    G1, G2 = _block(G1, "G1"), _block(G2, "G2")
    return np.block([[G1, G2], [G2, G1]])


def dissipative_pair(kappa: float, G1: ArrayLike | None = None, G2: ArrayLike | None = None) -> QuantumLinearSystem:
    """Two particles sharing the damped coupling ``L = sqrt(kappa) (b1 + b2)``."""
    _positive(kappa=kappa)
    c = np.sqrt(kappa / 2) * np.array([1, 1j, 1, 1j])
    return assemble_system(_pair_hamiltonian(G1, G2), [c])


def dispersive_pair(kappa: float, G1: ArrayLike | None = None, G2: ArrayLike | None = None) -> QuantumLinearSystem:
    """Two particles under continuous position measurement, ``L = sqrt(kappa/2) (q1 + q2)``."""
    _positive(kappa=kappa)
    c = np.sqrt(kappa / 2) * np.array([1, 0, 1, 0], dtype=complex)
    return assemble_system(_pair_hamiltonian(G1, G2), [c])


def optomech(
    m: float,
    omega: float,
    gamma: float,
    kappa: float,
    extended: tuple[float, float, float] | None = None,
) -> QuantumLinearSystem:
    """Mechanical oscillator (mode 1) coupled to a damped cavity (mode 2).

    The drift has oscillator block ``[[0, 1/m], [-m omega^2, 0]]``,
    radiation-pressure entries ``gamma`` at (p1, q2) and (p2, q1), and
    cavity damping ``-kappa``. That fixes ``G = diag(m omega^2, 1/m)`` on the
    oscillator, ``G[q1, q2] = -gamma``, and a cavity coupling
    ``sqrt(kappa) (0, 0, 1, i)``.

    ``extended = (g, mu, nu)`` appends an auxiliary mode 3 with Hamiltonian
    ``(-nu q3^2 + mu p3^2) / 2`` and interaction ``-g q2 q3``.
    """
    _positive(m=m, omega=omega, kappa=kappa)
    dim = 4 if extended is None else 6
    G = np.zeros((dim, dim))
    G[0, 0] = m * omega**2
    G[1, 1] = 1 / m
    G[0, 2] = G[2, 0] = -gamma
    c = np.zeros(dim, dtype=complex)
    c[2:4] = np.sqrt(kappa) * np.array([1, 1j])
    if extended is not None:
        g, mu, nu = extended
        G[2, 4] = G[4, 2] = -g
        G[4, 4] = -nu
        G[5, 5] = mu
    return assemble_system(G, [c])


def _smallest_pair_ratio(sys: QuantumLinearSystem) -> float:
    # A DF mode needs a 2-dimensional kernel, so the second-smallest singular value must vanish.
    obsv = kalman_matrices(sys, normalize=True).obsv
    s = np.linalg.svd(np.vstack([obsv, obsv @ sys.sigma]), compute_uv=False)
    return float(s[-2] / s[0])


def _optomech_root_search(m: float, omega: float, gamma: float, kappa: float, g: float) -> NDArray[np.float64]:
    """Multi-start minimization of the rank-drop residual over ``(mu, nu)``.

    The search box and the starting points are scaled by the oscillator's
    own Hamiltonian entries ``1/m`` and ``m omega^2``; both signs of ``nu``
    are tried.
    """

    def residual(p):
        return _smallest_pair_ratio(optomech(m, omega, gamma, kappa, (g, p[0], p[1])))

    mu_scale, nu_scale = 1 / m, m * omega**2
    box = [(-10 * mu_scale, 10 * mu_scale), (-10 * nu_scale, 10 * nu_scale)]
    best = None
    for sign in (-1.0, 1.0):
        for a, b in ((0.5, 0.5), (2.0, 2.0), (0.5, 2.0), (2.0, 0.5)):
            res = scipy.optimize.minimize(
                residual, (a * mu_scale, sign * b * nu_scale), method="Nelder-Mead", bounds=box,
                options={"xatol": 1e-15, "fatol": 1e-18, "maxiter": 2000},
            )
            if best is None or res.fun < best.fun:
                best = res
            if best.fun < 1e-14:
                return best.x
    if best.fun > 1e-10:
        raise EngineeringInfeasibleError(f"no rank drop found in the search box (best residual {best.fun:.3e})")
    return best.x


def solve_optomech_df(
    m: float, omega: float, gamma: float, kappa: float, g: float, *, verify: bool = True
) -> tuple[float, float]:
    """Auxiliary-mode parameters ``(mu, nu)`` that give the extended system a DF mode.

    A rank drop of the observability matrix forces ``mu nu = -omega^2``;
    the pairing condition on the kernel then forces ``mu = 1/m``. So the
    auxiliary mode must copy the oscillator's Hamiltonian, independently of
    the coupling ``g``. With ``verify`` the answer is checked against a
    numerical root search and re-assembled to confirm the DF mode exists.
    """
    _positive(m=m, omega=omega, kappa=kappa)
    if g == 0:
        raise EngineeringInfeasibleError("g = 0 leaves the auxiliary mode decoupled")
    mu, nu = 1.0 / m, -float(m) * omega**2
    if verify:
        found = _optomech_root_search(m, omega, gamma, kappa, g)
        rel = np.abs(found / np.array([mu, nu]) - 1)
        if np.any(rel > 1e-9):
            raise EngineeringInfeasibleError(f"root search found {found}, expected ({mu}, {nu})")
        if df_subspace(optomech(m, omega, gamma, kappa, (g, mu, nu))).d == 0:
            raise EngineeringInfeasibleError("re-assembled system has no DF subspace")
    return mu, nu


def ring_trap_hamiltonian(omega: float, omega_prime: float, k: float, k2: float, k3: float) -> NDArray[np.float64]:
    """Grouped-basis ``G = diag(G_q, I_3)`` for three unit-mass particles on a ring."""
    Gq = np.array(
        [
            [omega**2 + k + k3, -k, -k3],
            [-k, omega**2 + k + k2, -k2],
            [-k3, -k2, omega_prime**2 + k2 + k3],
        ]
    )
    return np.block([[Gq, np.zeros((3, 3))], [np.zeros((3, 3)), np.eye(3)]])


def ring_trap(
    omega: float, omega_prime: float, k: float, k2: float, k3: float, kappa: float
) -> QuantumLinearSystem:
    """Three particles coupled to one damped cavity, ``L = sqrt(kappa) (b1 + b2 + b3)``.

    Springs ``k`` (1-2), ``k2`` (2-3), ``k3`` (3-1) must be non-negative.
    """
    if min(k, k2, k3) < 0:
        raise ValueError(f"spring constants must be non-negative, got k={k}, k2={k2}, k3={k3}")
    if omega < 0 or omega_prime < 0:
        raise ValueError("frequencies must be non-negative")
    _positive(kappa=kappa)
    perm = basis_permutation(3)
    G = perm.matrix_to_interleaved(ring_trap_hamiltonian(omega, omega_prime, k, k2, k3))
    c_grouped = np.sqrt(kappa / 2) * np.array([1, 1, 1, 1j, 1j, 1j])
    return assemble_system(G, [perm.vector_to_interleaved(c_grouped)])


def ring_trap_reference_T1() -> NDArray[np.float64]:
    """Relative-coordinate DF basis of the ring trap, interleaved, columns ``(q'1, p'1, q'2, p'2)``.

    Position weights are ``(1, -1, 0)/sqrt(2)`` and ``(1, 1, -2)/sqrt(6)``,
    with the same weights on the momenta.
    """
    rel = np.array([[1, -1, 0], [1, 1, -2]]) / np.array([[np.sqrt(2)], [np.sqrt(6)]])
    grouped = np.zeros((6, 4))
    grouped[:3, 0:2] = rel.T
    grouped[3:, 2:4] = rel.T
    perm = basis_permutation(3)
    # rows: grouped -> interleaved coordinates; columns: (q'1, q'2, p'1, p'2) -> interleaved pairs
    return grouped[list(perm.order)][:, list(basis_permutation(2).order)]


def solve_ring_df(omega: float, k: float, df_coupling: float | None = None) -> tuple[float, float, float]:
    """Auxiliary parameters ``(omega', k2, k3)`` so the DF mode copies two coupled particles.

    ``omega' = omega`` keeps the relative coordinates decoupled from the
    cavity. Equal DF diagonal entries need ``k2 + k3 = 2k``, and the DF
    spring is ``sqrt(3) (k2 - k3) / 2``. The default DF spring
    ``(3 - sqrt(3)) k`` gives ``k2 = sqrt(3) k`` and ``k3 = (2 - sqrt(3)) k``.
    """
    _positive(omega=omega, k=k)
    if df_coupling is None:
        df_coupling = (3 - np.sqrt(3)) * k
    shift = df_coupling / np.sqrt(3)
    k2, k3 = k + shift, k - shift
    if k3 < 0 or k2 < 0:
        raise EngineeringInfeasibleError(
            f"DF spring {df_coupling} needs a negative auxiliary spring (k2={k2}, k3={k3})"
        )
    return float(omega), float(k2), float(k3)


def tms_covariance(r: float) -> NDArray[np.float64]:
    """Two-mode squeezed covariance with relative-mode variances ``e^{+-r}/2`` and vacuum centre of mass."""
    a, b = np.exp(r), np.exp(-r)
    return 0.25 * np.array(
        [
            [1 + a, 0, 1 - a, 0],
            [0, 1 + b, 0, 1 - b],
            [1 - a, 0, 1 + a, 0],
            [0, 1 - b, 0, 1 + b],
        ]
    )


@dataclass(frozen=True)
class ScenarioSpec:
    kind: str
    params: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in SCENARIO_KINDS:
            raise ConfigError(f"unknown scenario kind {self.kind!r}; expected one of {', '.join(SCENARIO_KINDS)}")
        allowed = set(_REQUIRED[self.kind]) | set(_OPTIONAL[self.kind])
        extra = set(self.params) - allowed
        if extra:
            raise ConfigError(f"scenario {self.kind!r} does not take parameter(s) {sorted(extra)}")
        missing = [key for key in _REQUIRED[self.kind] if key not in self.params]
        if missing:
            raise ConfigError(f"scenario {self.kind!r} is missing parameter(s) {missing}")

    def build(self) -> QuantumLinearSystem:
        p = self.params
        if self.kind == "dissipative-pair":
            return dissipative_pair(p["kappa"], p.get("G1"), p.get("G2"))
        if self.kind == "dispersive-pair":
            return dispersive_pair(p["kappa"], p.get("G1"), p.get("G2"))
        if self.kind == "optomech":
            return optomech(p["m"], p["omega"], p["gamma"], p["kappa"])
        if self.kind == "optomech-extended":
            return optomech(p["m"], p["omega"], p["gamma"], p["kappa"], (p["g"], p["mu"], p["nu"]))
        return ring_trap(p["omega"], p["omega_prime"], p["k"], p["k2"], p["k3"], p["kappa"])
