"""Pydantic request/response models for the simulation service.

These models are the wire format of the FastAPI app and double as the schema
of the CLI config files, so unknown keys are rejected everywhere and every
domain invariant is checked before any work starts.
"""

from __future__ import annotations

from typing import Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, model_validator

from ..analysis import (
    Coefficient,
    CriticalScale,
    ExplicitScale,
    McSettings,
    PowerScale,
    Regime,
    SweepPlan,
)
from ..engine import InitialCondition, SimulationConfig
from ..errors import ConfigurationError
from ..particles import InteractionSignature
from ..renewal import RenewalSpec

_LAW_PARAMS = {
    "exponential": ("rate",),
    "gamma": ("shape", "scale"),
    "uniform": ("low", "high"),
    "deterministic": ("period",),
    "lognormal": ("log_mean", "log_sd"),
}


class StrictModel(BaseModel):
    model_config = ConfigDict(extra="forbid", populate_by_name=True)


class EpochLawModel(StrictModel):
    """Interval law of the synchronization epochs."""

    law: Literal["exponential", "gamma", "uniform", "deterministic", "lognormal"]
    rate: Optional[float] = None
    shape: Optional[float] = None
    scale: Optional[float] = None
    low: Optional[float] = None
    high: Optional[float] = None
    period: Optional[float] = None
    log_mean: Optional[float] = None
    log_sd: Optional[float] = None

    @model_validator(mode="after")
    def _check_params(self):
        wanted = _LAW_PARAMS[self.law]
        for name in wanted:
            if getattr(self, name) is None:
                raise ValueError(f"law {self.law!r} requires parameter {name!r}")
        for name in ("rate", "shape", "scale", "low", "high", "period",
                     "log_mean", "log_sd"):
            if name not in wanted and getattr(self, name) is not None:
                raise ValueError(f"parameter {name!r} does not belong to "
                                 f"law {self.law!r}")
        self.to_spec()  # surface range violations at validation time
        return self

    def to_spec(self) -> RenewalSpec:
        return RenewalSpec(
            self.law, tuple(getattr(self, k) for k in _LAW_PARAMS[self.law])
        )


class InitialModel(StrictModel):
    """Law of the initial configuration x(0)."""

    kind: Literal["all-zero", "explicit", "iid-gaussian"] = "all-zero"
    values: Optional[list[float]] = None
    mean: float = 0.0
    sd: float = 1.0

    @model_validator(mode="after")
    def _check(self):
        self.to_initial()
        return self

    def to_initial(self) -> InitialCondition:
        if self.kind == "explicit":
            return InitialCondition.explicit(self.values or ())
        if self.kind == "iid-gaussian":
            return InitialCondition.iid_gaussian(self.mean, self.sd)
        return InitialCondition.all_zero()


def _signature(parts: list[int]) -> InteractionSignature:
    return InteractionSignature(tuple(parts))


class SimulateRequest(StrictModel):
    """One Monte Carlo experiment; epochs=null disables synchronization."""

    n: int = Field(alias="N")
    sigma: float
    epochs: Optional[EpochLawModel] = None
    signature: list[int] = Field(default_factory=lambda: [2])
    initial: InitialModel = Field(default_factory=InitialModel)
    t: list[float] = Field(min_length=1)
    replicas: int = Field(ge=1)
    seed: int = Field(ge=0)
    workers: int = Field(default=1, ge=1)
    max_epochs: int = Field(default=100_000_000, ge=1)

    def to_config(self) -> SimulationConfig:
        return SimulationConfig(
            n=self.n,
            sigma=self.sigma,
            epochs=self.epochs.to_spec() if self.epochs else None,
            signature=_signature(self.signature),
            initial=self.initial.to_initial(),
            query_times=tuple(self.t),
            replicas=self.replicas,
            base_seed=self.seed,
            max_epochs=self.max_epochs,
        )

    @model_validator(mode="after")
    def _check(self):
        try:
            self.to_config()
        except ConfigurationError as exc:
            raise ValueError(str(exc)) from exc
        return self


class SimulateRow(StrictModel):
    t: float
    mc_mean: float
    mc_stderr: float
    replicas: int
    closed_form: Optional[float] = None
    zscore: Optional[float] = None
    m_variance: float


class SimulateResponse(StrictModel):
    rows: list[SimulateRow]
    markov: bool
    degenerate: bool
    budget_exceeded: bool
    replicas_completed: int
    config: dict
    version: str


class KappaRequest(StrictModel):
    """Enumeration-vs-formula check of the interaction constant."""

    signatures: list[list[int]] = Field(min_length=1)
    n: int = Field(alias="N")
    configs: int = Field(default=3, ge=1)
    seed: int = Field(ge=0)

    @model_validator(mode="after")
    def _check(self):
        if self.configs < 1:
            raise ValueError("configs must be >= 1")
        for parts in self.signatures:
            try:
                sig = _signature(parts)
            except ConfigurationError as exc:
                raise ValueError(str(exc)) from exc
            if sig.k > self.n:
                raise ValueError(f"signature {parts} has k={sig.k} > N={self.n}")
        return self


class KappaRow(StrictModel):
    signature: str
    n: int = Field(serialization_alias="N")
    kappa_analytic: float
    kappa_enumerated: float
    abs_diff: float
    passed: bool = Field(serialization_alias="pass")


class KappaResponse(StrictModel):
    rows: list[KappaRow]
    config: dict
    version: str


class OracleRequest(StrictModel):
    """Closed-form spread curve over a time grid (no simulation).

    The seed is unused (the oracle is deterministic) but still mandatory so
    every run plan carries one; it is echoed with the config.
    """

    n: int = Field(alias="N")
    sigma: float
    delta: float
    kappa: Optional[float] = None
    signature: Optional[list[int]] = None
    r0: float = 0.0
    t: list[float] = Field(min_length=1)
    seed: int = Field(ge=0)

    @model_validator(mode="after")
    def _check(self):
        if (self.kappa is None) == (self.signature is None):
            raise ValueError("pass exactly one of kappa or signature")
        return self

    def kappa_value(self) -> float:
        if self.kappa is not None:
            return self.kappa
        from ..particles import kappa_analytic

        return kappa_analytic(_signature(self.signature))


class OracleRow(StrictModel):
    t: float
    closed_form: float


class OracleResponse(StrictModel):
    rows: list[OracleRow]
    config: dict
    version: str


class CoefficientModel(StrictModel):
    """a * N**p; plain numbers in configs mean a constant (p = 0)."""

    a: float
    p: float = 0.0

    def to_coefficient(self) -> Coefficient:
        return Coefficient(self.a, self.p)


class ScaleModel(StrictModel):
    kind: Literal["power", "critical", "explicit"]
    a: Optional[float] = None
    p: Optional[float] = None
    c: Optional[float] = None
    values: Optional[list[float]] = None

    @model_validator(mode="after")
    def _check(self):
        self.to_scale()
        return self

    def to_scale(self):
        try:
            if self.kind == "power":
                if self.a is None or self.p is None:
                    raise ValueError("power scale needs a and p")
                return PowerScale(self.a, self.p)
            if self.kind == "critical":
                if self.c is None:
                    raise ValueError("critical scale needs c")
                return CriticalScale(self.c)
            if not self.values:
                raise ValueError("explicit scale needs values")
            return ExplicitScale(tuple(self.values))
        except ConfigurationError as exc:
            raise ValueError(str(exc)) from exc


def _coefficient(value) -> Coefficient:
    if isinstance(value, CoefficientModel):
        return value.to_coefficient()
    return Coefficient(float(value))


class SweepRequest(StrictModel):
    """Regime sweep across an N sequence on one time scale."""

    ns: list[int] = Field(alias="Ns", min_length=1)
    scale: ScaleModel
    mode: Literal["markov", "renewal"] = "markov"
    observe: Literal["closed-form", "monte-carlo"] = "closed-form"
    sigma: float | CoefficientModel = 1.0
    delta: float | CoefficientModel = 1.0
    epochs: Optional[EpochLawModel] = None
    kappa: Optional[float] = None
    signature: Optional[list[int]] = None
    r0: float | CoefficientModel = 0.0
    regime_hint: Optional[Literal["I", "II", "III"]] = None
    replicas: Optional[int] = None
    initial: InitialModel = Field(default_factory=InitialModel)
    seed: int = Field(ge=0)
    workers: int = Field(default=1, ge=1)
    max_epochs: int = Field(default=100_000_000, ge=1)

    @model_validator(mode="after")
    def _check(self):
        try:
            if self.observe == "closed-form" and self.mode == "renewal":
                raise ConfigurationError(
                    "no closed form under renewal epochs; use monte-carlo"
                )
            self.to_plan()
            if self.observe == "monte-carlo":
                self.to_mc_settings()
        except ConfigurationError as exc:
            raise ValueError(str(exc)) from exc
        return self

    def kappa_value(self) -> float:
        from ..particles import kappa_analytic

        if self.signature is not None:
            k = kappa_analytic(_signature(self.signature))
            if self.kappa is not None and self.kappa != k:
                raise ConfigurationError(
                    f"kappa={self.kappa} contradicts signature {self.signature}"
                )
            return k
        if self.kappa is None:
            raise ConfigurationError("pass kappa or signature")
        return self.kappa

    def to_plan(self) -> SweepPlan:
        return SweepPlan(
            ns=tuple(self.ns),
            scale=self.scale.to_scale(),
            sigma=_coefficient(self.sigma),
            kappa=self.kappa_value(),
            mode=self.mode,
            delta=_coefficient(self.delta),
            epochs=self.epochs.to_spec() if self.epochs else None,
            r0=_coefficient(self.r0),
        )

    def to_mc_settings(self) -> McSettings:
        if self.signature is None:
            raise ConfigurationError("monte-carlo sweeps need a signature")
        if self.replicas is None or self.replicas < 2:
            raise ConfigurationError("monte-carlo sweeps need replicas >= 2")
        return McSettings(
            signature=_signature(self.signature),
            replicas=self.replicas,
            base_seed=self.seed,
            initial=self.initial.to_initial(),
            max_epochs=self.max_epochs,
        )

    def regime(self) -> Regime | None:
        return Regime(self.regime_hint) if self.regime_hint else None


class SweepRowModel(StrictModel):
    n: int = Field(serialization_alias="N")
    t: float = Field(serialization_alias="t_of_N")
    alpha: float = Field(serialization_alias="alpha_N")
    regime: str
    predicted: Optional[float]
    observed: Optional[float]
    ratio: Optional[float]
    passed: bool = Field(serialization_alias="pass")
    closed_form: Optional[float] = None
    stderr: Optional[float] = None
    tolerance: Optional[float]
    label: str


class SweepResponse(StrictModel):
    rows: list[SweepRowModel]
    regime: str
    c: Optional[float]
    mode: str
    observe: str
    all_passed: bool
    config: dict
    version: str


class RenewalCheckRequest(StrictModel):
    """Long-horizon plateau check for general renewal epoch laws."""

    laws: list[EpochLawModel] = Field(min_length=1)
    n: int = Field(alias="N")
    sigma: float = 1.0
    signature: list[int] = Field(default_factory=lambda: [2])
    replicas: int = Field(ge=2)
    seed: int = Field(ge=0)
    horizon_multiple: float = 10.0
    workers: int = Field(default=1, ge=1)
    max_epochs: int = Field(default=100_000_000, ge=1)

    @model_validator(mode="after")
    def _check(self):
        try:
            sig = _signature(self.signature)
        except ConfigurationError as exc:
            raise ValueError(str(exc)) from exc
        if sig.k > self.n:
            raise ValueError(f"signature k={sig.k} exceeds N={self.n}")
        if self.replicas < 2:
            raise ValueError("replicas must be >= 2")
        if self.horizon_multiple <= 0:
            raise ValueError("horizon_multiple must be positive")
        return self


class RenewalCheckRowModel(StrictModel):
    law: str
    n: int = Field(serialization_alias="N")
    t: float
    target: float
    mc_mean: float
    mc_stderr: float
    ratio: float
    basis: str
    passed: bool = Field(serialization_alias="pass")


class RenewalCheckResponse(StrictModel):
    rows: list[RenewalCheckRowModel]
    all_passed: bool
    config: dict
    version: str


class HealthResponse(StrictModel):
    status: str
    version: str
