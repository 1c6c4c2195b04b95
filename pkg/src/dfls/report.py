"""Analysis reports: construction, JSON round trip and text rendering."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .analysis import (
    DEFAULT_TOL_RANK,
    HamiltonianCheck,
    coupling_df_basis,
    decompose,
    hamiltonian_preserves_df,
    kalman_matrices,
    kernel_basis,
    max_principal_angle,
)
from .core import QuantumLinearSystem
from .dynamics import DEFAULT_TOL_MARGIN, df_stability


@dataclass
class AnalysisReport:
    df_dimension: int
    T1: np.ndarray
    T2: np.ndarray
    G_DF: np.ndarray
    G_DF_spectrum: np.ndarray
    A2_spectrum: np.ndarray
    stable: bool | None
    worst_pair_real: float | None
    a2_hurwitz: bool | None
    gdf_psd: bool | None
    kernel_equivalence_residual: float
    residuals: dict[str, float] = field(default_factory=dict)
    hamiltonian_check: dict[str, Any] | None = None
    extra: dict[str, Any] = field(default_factory=dict)

    def to_dict(self) -> dict[str, Any]:
        return {
            "df_dimension": self.df_dimension,
            "T1": self.T1.tolist(),
            "T2": self.T2.tolist(),
            "G_DF": self.G_DF.tolist(),
            "G_DF_spectrum": self.G_DF_spectrum.tolist(),
            "A2_spectrum": [[z.real, z.imag] for z in self.A2_spectrum],
            "stable": self.stable,
            "worst_pair_real": self.worst_pair_real,
            "a2_hurwitz": self.a2_hurwitz,
            "gdf_psd": self.gdf_psd,
            "kernel_equivalence_residual": self.kernel_equivalence_residual,
            "residuals": dict(self.residuals),
            "hamiltonian_check": self.hamiltonian_check,
            "extra": self.extra,
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> AnalysisReport:
        n2 = len(d["T1"])
        ell2 = 2 * d["df_dimension"]
        return cls(
            df_dimension=d["df_dimension"],
            T1=np.array(d["T1"], dtype=float).reshape(n2, ell2),
            T2=np.array(d["T2"], dtype=float).reshape(n2, n2 - ell2),
            G_DF=np.array(d["G_DF"], dtype=float).reshape(ell2, ell2),
            G_DF_spectrum=np.array(d["G_DF_spectrum"], dtype=float),
            A2_spectrum=np.array([complex(re, im) for re, im in d["A2_spectrum"]], dtype=complex),
            stable=d["stable"],
            worst_pair_real=d["worst_pair_real"],
            a2_hurwitz=d["a2_hurwitz"],
            gdf_psd=d["gdf_psd"],
            kernel_equivalence_residual=d["kernel_equivalence_residual"],
            residuals=dict(d["residuals"]),
            hamiltonian_check=d.get("hamiltonian_check"),
            extra=d.get("extra", {}),
        )

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def from_json(cls, text: str) -> AnalysisReport:
        return cls.from_dict(json.loads(text))

    def to_text(self) -> str:
        g = "{:.17g}".format
        out = [f"DF modes (ell): {self.df_dimension}"]
        if self.df_dimension == 0:
            out.append("no decoherence-free subsystem")
        else:
            out.append("T1 =\n" + _matrix_text(self.T1))
            out.append("T2 =\n" + _matrix_text(self.T2))
            out.append("G_DF =\n" + _matrix_text(self.G_DF))
            out.append("G_DF eigenvalues: " + ", ".join(g(x) for x in self.G_DF_spectrum))
            out.append("A2 eigenvalues: " + ", ".join(f"{g(z.real)}{z.imag:+.17g}j" for z in self.A2_spectrum))
            verdict = "stable" if self.stable else "not stable"
            out.append(f"correlation decay: {verdict} (worst pair real part {g(self.worst_pair_real)})")
            out.append(f"G_DF >= 0: {self.gdf_psd}; A2 Hurwitz: {self.a2_hurwitz}")
            out.append("block residuals: " + ", ".join(f"{k}={v:.3e}" for k, v in self.residuals.items()))
        out.append(f"Ker(O S) vs Ker(C^T) max principal angle: {self.kernel_equivalence_residual:.3e}")
        if self.hamiltonian_check is not None:
            hc = self.hamiltonian_check
            out.append(f"candidate Hamiltonian: {hc['verdict']} (residual {hc['residual']:.3e})")
        for key, val in self.extra.items():
            out.append(f"{key}: {val}")
        return "\n".join(out)


def _matrix_text(M: np.ndarray) -> str:
    return "\n".join("  " + "  ".join(f"{x:24.17g}" for x in row) for row in M)


def kernel_equivalence_residual(sys: QuantumLinearSystem, tol_rank: float = DEFAULT_TOL_RANK) -> float:
    """Max principal angle between ``Ker(O S_n)`` and ``Ker(C^T)``; zero when the two kernels coincide."""
    km = kalman_matrices(sys, normalize=True)
    if sys.m == 0:
        return 0.0
    k_obs = kernel_basis(km.obsv @ sys.sigma, tol_rank).basis
    k_ctr = kernel_basis(km.ctrb.T, tol_rank).basis
    return max_principal_angle(k_obs, k_ctr)


def analyze(
    sys: QuantumLinearSystem,
    *,
    tol_rank: float = DEFAULT_TOL_RANK,
    tol_margin: float = DEFAULT_TOL_MARGIN,
    candidate_G: np.ndarray | None = None,
) -> AnalysisReport:
    dim = 2 * sys.n
    dec = decompose(sys, tol_rank)
    check = None
    if candidate_G is not None:
        hc: HamiltonianCheck = hamiltonian_preserves_df(candidate_G, coupling_df_basis(sys.C, tol_rank), sys.C, tol_rank)
        check = {"verdict": hc.verdict.value, "residual": hc.residual, "exact": hc.exact}
    kres = kernel_equivalence_residual(sys, tol_rank)
    if dec is None:
        return AnalysisReport(
            df_dimension=0, T1=np.zeros((dim, 0)), T2=np.eye(dim), G_DF=np.zeros((0, 0)),
            G_DF_spectrum=np.zeros(0), A2_spectrum=np.linalg.eigvals(sys.A),
            stable=None, worst_pair_real=None, a2_hurwitz=None, gdf_psd=None,
            kernel_equivalence_residual=kres, hamiltonian_check=check,
        )
    rep = df_stability(dec.G_DF, dec.A2, tol_margin)
    return AnalysisReport(
        df_dimension=dec.ell,
        T1=dec.T1,
        T2=dec.T2,
        G_DF=dec.G_DF,
        G_DF_spectrum=np.linalg.eigvalsh(dec.G_DF),
        A2_spectrum=rep.eig_A2,
        stable=rep.stable,
        worst_pair_real=rep.worst_pair_real,
        a2_hurwitz=rep.a2_hurwitz,
        gdf_psd=rep.gdf_psd,
        kernel_equivalence_residual=kres,
        residuals=dict(dec.residuals),
        hamiltonian_check=check,
    )
