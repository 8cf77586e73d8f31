"""Problem configuration: JSON schema, validation and plant construction."""

from __future__ import annotations

import json
from typing import Literal, Optional, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from .errors import ConfigError, EqualizerError
from .lqg import LqgWeights
from .model import (
    EXAMPLE_CONSTANTS,
    AnnihilationSystem,
    EqualizerPlant,
    LowPassFilter,
    QuadratureSystem,
    compose_equalizer_plant,
    paper_example_plant,
)

__all__ = ["ProblemConfig", "parse_config", "load_config", "build_problem"]

PRESETS = ("paper-example",)

# a matrix entry is a real number or a complex [re, im] pair
Entry = Union[float, tuple[float, float]]
Matrix = list[list[Entry]]


def _shape(M: Matrix, key: str) -> tuple[int, int]:
    if not M or not all(isinstance(row, list) for row in M):
        raise ValueError(f"{key}: expected a non-empty list of rows")
    cols = len(M[0])
    if any(len(row) != cols for row in M):
        raise ValueError(f"{key}: rows have unequal lengths (matrix must be rectangular)")
    return len(M), cols


def to_array(M: Matrix) -> np.ndarray:
    return np.array(
        [[complex(*e) if isinstance(e, tuple) else e for e in row] for row in M]
    )


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class ChannelConfig(_Strict):
    """Channel with input columns ordered ``[u, w]``."""

    A: Matrix
    B: Matrix
    C: Matrix
    D: Matrix
    n_signal: Optional[int] = Field(default=None, ge=1)
    form: Literal["annihilation", "quadrature"] = "annihilation"

    @model_validator(mode="after")
    def _dims(self):
        n, n2 = _shape(self.A, "A")
        if n != n2:
            raise ValueError(f"A: expected a square matrix, got {n}x{n2}")
        nb, n_w = _shape(self.B, "B")
        if nb != n:
            raise ValueError(f"B: expected {n} rows (n x n_w), got {nb}x{n_w}")
        n_y, nc = _shape(self.C, "C")
        if nc != n:
            raise ValueError(f"C: expected shape n_y x {n}, got {n_y}x{nc}")
        dshape = _shape(self.D, "D")
        if dshape != (n_y, n_w):
            raise ValueError(f"D: expected shape {n_y}x{n_w}, got {dshape[0]}x{dshape[1]}")
        ns = n_y if self.n_signal is None else self.n_signal
        if ns > n_w:
            raise ValueError(f"n_signal: {ns} exceeds the {n_w} input columns of B")
        if self.form == "quadrature":
            for key in "ABCD":
                if any(isinstance(e, tuple) for row in getattr(self, key) for e in row):
                    raise ValueError(f"{key}: quadrature channels must be real")
            if n % 2 or n_w % 2 or n_y % 2 or ns % 2:
                raise ValueError("quadrature channel dimensions must all be even")
        return self


class WeightsConfig(_Strict):
    R1: Optional[Matrix] = None
    R2: Optional[Matrix] = None
    mu: float = Field(gt=0)


class PsdConfig(_Strict):
    omega_min: float = Field(default=1e-2, gt=0)
    omega_max: float = Field(default=1e3, gt=0)
    points: int = Field(default=2000, ge=2)

    @model_validator(mode="after")
    def _range(self):
        if self.omega_min >= self.omega_max:
            raise ValueError("omega_min must be below omega_max")
        return self


class ProblemConfig(_Strict):
    preset: Optional[Literal["paper-example"]] = None
    channel: Optional[ChannelConfig] = None
    tau: Optional[float] = Field(default=None, gt=0)
    weights: Optional[WeightsConfig] = None
    mode: Literal["passive", "active"] = "passive"
    psd: PsdConfig = PsdConfig()
    output: Optional[str] = None

    @model_validator(mode="after")
    def _one_source(self):
        if (self.preset is None) == (self.channel is None):
            raise ValueError("exactly one of 'preset' or 'channel' must be given")
        if self.channel is not None:
            if self.tau is None:
                raise ValueError("tau: required with an explicit channel")
            if self.weights is None:
                raise ValueError("weights: required with an explicit channel")
            if self.channel.form == "quadrature" and self.mode != "active":
                raise ValueError("mode: quadrature channels need mode 'active'")
        return self

    def to_json(self) -> str:
        return json.dumps(self.model_dump(mode="json", exclude_none=True), indent=2)


def _format_validation(exc: ValidationError) -> str:
    lines = []
    for err in exc.errors():
        path = ".".join(str(p) for p in err["loc"]) or "<root>"
        msg = err["msg"].removeprefix("Value error, ")
        lines.append(f"{path}: {msg}")
    return "; ".join(lines)


def parse_config(text: str) -> ProblemConfig:
    """Parse and validate a JSON problem description.

    Raises
    ------
    ConfigError
        With line/column for syntax errors and the key path for
        validation errors.
    """
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}")
    if not isinstance(data, dict):
        raise ConfigError("config must be a JSON object")
    try:
        return ProblemConfig.model_validate(data)
    except ValidationError as exc:
        raise ConfigError(_format_validation(exc)) from None


def load_config(path) -> ProblemConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_config(text)


def build_problem(cfg: ProblemConfig) -> tuple[EqualizerPlant, LqgWeights]:
    """Plant and weights described by a validated config."""
    try:
        if cfg.preset is not None:
            plant = paper_example_plant(cfg.mode)
            if cfg.tau is not None and cfg.tau != EXAMPLE_CONSTANTS["tau"]:
                raise ConfigError("tau: the preset fixes tau = 0.1")
        else:
            ch = cfg.channel
            mats = [to_array(getattr(ch, k)) for k in "ABCD"]
            ns = ch.n_signal or len(ch.C)
            if ch.form == "quadrature":
                sys = QuadratureSystem(*(m.real for m in mats))
                plant = compose_equalizer_plant(sys, LowPassFilter(cfg.tau, ns, is_complex=False))
            else:
                sys = AnnihilationSystem(*mats)
                plant = compose_equalizer_plant(sys, LowPassFilter(cfg.tau, ns))
                if cfg.mode == "active":
                    plant = plant.to_quadrature()
        w = cfg.weights
        mu = 0.1 if w is None else w.mu
        R1 = np.eye(plant.n_e) if w is None or w.R1 is None else to_array(w.R1)
        R2 = np.eye(plant.n_hat) if w is None or w.R2 is None else to_array(w.R2)
        if not plant.is_complex:
            R1, R2 = R1.real, R2.real
        if R1.shape not in ((plant.n_e, plant.n_e), (plant.n, plant.n)):
            raise ConfigError(
                f"weights.R1: expected {plant.n_e}x{plant.n_e} (on e) or "
                f"{plant.n}x{plant.n} (on the state), got {R1.shape[0]}x{R1.shape[1]}"
            )
        if R2.shape != (plant.n_hat, plant.n_hat):
            raise ConfigError(
                f"weights.R2: expected {plant.n_hat}x{plant.n_hat}, got {R2.shape[0]}x{R2.shape[1]}"
            )
        weights = LqgWeights(R1, R2, mu)
    except ConfigError:
        raise
    except (EqualizerError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc
    return plant, weights
