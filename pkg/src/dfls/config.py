"""Run configuration documents.

A config is a JSON object with exactly one of ``system`` (explicit matrix
data) or ``scenario`` (a named example), plus optional tolerances, time
grid, initial state, candidate Hamiltonian and output paths::

    {
      "scenario": {"kind": "dissipative-pair", "params": {"kappa": 2, "G1": "zeros", "G2": "zeros"}},
      "tolerances": {"tol_rank": 1e-9},
      "time_grid": {"t_end": 5.0, "steps": 50},
      "initial_state": {"kind": "tms", "r": 1.0}
    }

Matrices are row-major nested lists (a flat row-major list is accepted too).
Complex coupling entries are ``[re, im]`` pairs.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Annotated, Any, Literal, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from .core import QuantumLinearSystem, assemble_system, basis_permutation
from .dynamics import GaussianMoments
from .errors import ConfigError
from .scenarios import SCENARIO_KINDS, ScenarioSpec, tms_covariance

Matrix = Union[list[list[float]], list[float]]


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid")


def _square(M: Matrix, size: int, what: str) -> np.ndarray:
    arr = np.asarray(M, dtype=float)
    if arr.ndim == 1:
        if arr.size != size * size:
            raise ValueError(f"{what} has {arr.size} entries, expected {size * size}")
        arr = arr.reshape(size, size)
    if arr.shape != (size, size):
        raise ValueError(f"{what} has shape {arr.shape}, expected ({size}, {size})")
    return arr


class ExplicitSystem(_Strict):
    n: int = Field(ge=1)
    m: int = Field(ge=0)
    G: Matrix
    couplings: list[list[tuple[float, float]]] = Field(default_factory=list)
    basis: Literal["interleaved", "grouped"] = "interleaved"

    @model_validator(mode="after")
    def _shapes(self):
        G = _square(self.G, 2 * self.n, "G")
        if len(self.couplings) != self.m:
            raise ValueError(f"got {len(self.couplings)} coupling vectors for m={self.m}")
        for i, c in enumerate(self.couplings):
            if len(c) != 2 * self.n:
                raise ValueError(f"coupling {i} has {len(c)} entries, expected {2 * self.n}")
        if self.basis == "grouped":
            perm = basis_permutation(self.n)
            G = perm.matrix_to_interleaved(G)
            # each coupling is a (2n, 2) array of [re, im] rows; permute the rows
            self.couplings = [[tuple(c[i]) for i in perm.order] for c in self.couplings]
            self.basis = "interleaved"
        self.G = G.tolist()
        return self

    def coupling_array(self) -> np.ndarray:
        if not self.couplings:
            return np.zeros((0, 2 * self.n), dtype=complex)
        pairs = np.asarray(self.couplings, dtype=float)
        return pairs[..., 0] + 1j * pairs[..., 1]


class Scenario(_Strict):
    kind: Literal[SCENARIO_KINDS]  # type: ignore[valid-type]
    params: dict[str, Union[float, list[list[float]], str]] = Field(default_factory=dict)


class Tolerances(_Strict):
    tol_rank: float = Field(default=1e-9, gt=0, lt=1)
    tol_margin: float = Field(default=1e-10, gt=0, lt=1)
    tol_psd: float = Field(default=1e-9, gt=0, lt=1)


class TimeGrid(_Strict):
    t_end: float = Field(gt=0)
    steps: int = Field(ge=1)

    def times(self) -> np.ndarray:
        return np.linspace(0.0, self.t_end, self.steps + 1)


class Vacuum(_Strict):
    kind: Literal["vacuum"] = "vacuum"


class TwoModeSqueezed(_Strict):
    kind: Literal["tms"]
    r: float


class ExplicitState(_Strict):
    kind: Literal["explicit"]
    mean: list[float]
    cov: Matrix


InitialState = Annotated[Union[Vacuum, TwoModeSqueezed, ExplicitState], Field(discriminator="kind")]


class Outputs(_Strict):
    csv: str | None = None
    report: str | None = None


class RunConfig(_Strict):
    system: ExplicitSystem | None = None
    scenario: Scenario | None = None
    tolerances: Tolerances = Field(default_factory=Tolerances)
    time_grid: TimeGrid | None = None
    initial_state: InitialState = Field(default_factory=Vacuum)
    candidate_G: Matrix | None = None
    output: Outputs = Field(default_factory=Outputs)

    @model_validator(mode="after")
    def _one_source(self):
        if (self.system is None) == (self.scenario is None):
            raise ValueError("exactly one of 'system' or 'scenario' must be given")
        return self

    def build_system(self) -> QuantumLinearSystem:
        """Assemble the system; physical-constraint violations raise :class:`ConfigError`."""
        try:
            if self.system is not None:
                s = self.system
                return assemble_system(np.asarray(s.G), s.coupling_array(), n=s.n, m=s.m)
            return ScenarioSpec(self.scenario.kind, dict(self.scenario.params)).build()
        except ConfigError:
            raise
        except ValueError as exc:
            raise ConfigError(f"invalid system: {exc}") from exc

    def candidate_hamiltonian(self, n: int) -> np.ndarray | None:
        if self.candidate_G is None:
            return None
        try:
            return _square(self.candidate_G, 2 * n, "candidate_G")
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc

    def initial_moments(self, n: int) -> GaussianMoments:
        st = self.initial_state
        try:
            if isinstance(st, Vacuum):
                return GaussianMoments.vacuum(n)
            if isinstance(st, TwoModeSqueezed):
                if n != 2:
                    raise ValueError(f"the two-mode squeezed initial state needs n=2, system has n={n}")
                return GaussianMoments(np.zeros(4), tms_covariance(st.r))
            return GaussianMoments(np.asarray(st.mean, dtype=float), _square(st.cov, 2 * n, "initial_state.cov"))
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc


def _describe(err: ValidationError) -> str:
    lines = []
    for e in err.errors():
        loc = ".".join(str(p) for p in e["loc"]) or "<root>"
        lines.append(f"{loc}: {e['msg']}")
    return "; ".join(lines)


def parse_config(document: str | bytes | dict[str, Any] | Path) -> RunConfig:
    """Validate a config given as a JSON string, a parsed mapping, or a path to a JSON file."""
    if isinstance(document, Path):
        document = document.read_text(encoding="utf-8")
    if isinstance(document, (str, bytes)):
        try:
            document = json.loads(document)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config is not valid JSON: line {exc.lineno} column {exc.colno}: {exc.msg}") from exc
    if not isinstance(document, dict):
        raise ConfigError("config must be a JSON object")
    try:
        return RunConfig.model_validate(document)
    except ValidationError as exc:
        raise ConfigError(f"invalid config: {_describe(exc)}") from exc
