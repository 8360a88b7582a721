"""
Schemas for accproxcg.

This module defines the validated data structures shared across the package:
optimizer and line-search parameters, run traces, experiment specs and metric rows.
"""

import math
import re
from datetime import datetime
from enum import Enum
from typing import Any, Dict, List, Optional, Union

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from accproxcg.losses import LossKind

LAMBDA_RULE_PATTERN = re.compile(r"^paper:(w8a|a9a|gisette)$")


class MessageType(str, Enum):
    """Type of run message for logging and display."""
    INFO = "info"
    SUCCESS = "success"
    WARNING = "warning"
    ERROR = "error"


class RunMessage(BaseModel):
    """Message recorded by an optimizer run or by the orchestrator."""
    source: str
    message_type: MessageType
    content: str
    timestamp: str = Field(default_factory=lambda: datetime.now().isoformat())


class BetaRule(str, Enum):
    """Conjugate-parameter formulas."""
    FR = "fr"
    AFR = "afr"
    FRPR = "frpr"


class BetaFormula(BaseModel):
    """Conjugate-parameter formula with its tunables.

    ``beta_max`` optionally zeroes beta whenever its magnitude exceeds the threshold.
    """
    model_config = ConfigDict(frozen=True)

    rule: BetaRule = BetaRule.AFR
    rho: float = Field(default=0.8, gt=0)
    beta_o: float = Field(default=1.0, gt=0)
    beta_max: Optional[float] = Field(default=None, gt=0)


class WolfeParams(BaseModel):
    """Parameters of the stochastic strong-Wolfe searches."""
    model_config = ConfigDict(frozen=True)

    c1: float = Field(default=1e-4, gt=0, lt=1)
    c2: float = Field(default=0.1, gt=0, lt=1)
    eta2: float = Field(default=1.0, gt=0)
    eta_init: Optional[float] = Field(default=None, gt=0)
    max_bracket: int = Field(default=20, ge=1)
    max_zoom: int = Field(default=30, ge=0)
    expansion: float = Field(default=2.0, gt=1)

    @model_validator(mode="after")
    def _check_order(self) -> "WolfeParams":
        if not self.c1 < self.c2:
            raise ValueError(f"need 0 < c1 < c2 < 1, got c1={self.c1}, c2={self.c2}")
        return self

    @property
    def initial_step(self) -> float:
        """First trial step; defaults to the cap eta2."""
        return self.eta_init if self.eta_init is not None else self.eta2


class SearchOutcome(BaseModel):
    """Result of one line search.

    ``eta`` is the capped step actually used, ``eta_raw`` the searched step before the cap.
    """
    eta: float
    eta_raw: float
    satisfied_armijo: bool
    satisfied_curvature: bool
    trials: int
    gradient_evals: int
    fallback_used: bool


class OutputMode(str, Enum):
    """How the epoch output point is chosen."""
    LAST = "last"
    UNIFORM = "uniform"


class OptimizerConfig(BaseModel):
    """All tunables of the conjugate-gradient methods and the baselines.

    ``switch_frequency`` and ``eta_fixed`` belong to the switching variant; the baselines
    read their fixed step from ``eta_fixed`` as well, and ProxSVRG+ its outer batch from
    ``outer_batch``.
    """
    model_config = ConfigDict(frozen=True)

    epochs: int = Field(default=10, ge=1)
    epoch_length: int = Field(ge=1)
    batch_size: int = Field(ge=1)
    gamma: float = Field(default=1.0, gt=0, le=1)
    eta2: float = Field(default=1.0, gt=0)
    beta_formula: BetaFormula = Field(default_factory=BetaFormula)
    c1: float = Field(default=1e-4, gt=0, lt=1)
    c2: float = Field(default=0.1, gt=0, lt=1)
    switch_frequency: Optional[int] = Field(default=None, gt=1)
    eta_fixed: Optional[float] = Field(default=None, gt=0)
    outer_batch: Optional[int] = Field(default=None, ge=1)
    seed: int = 0
    metric_eta: float = Field(default=0.5, gt=0)
    eta_init: Optional[float] = Field(default=None, gt=0)
    max_bracket: int = Field(default=20, ge=1)
    max_zoom: int = Field(default=30, ge=0)
    output_mode: OutputMode = OutputMode.LAST
    divergence_factor: float = Field(default=1e8, gt=1)
    track_deviation: bool = True

    @model_validator(mode="after")
    def _check_ranges(self) -> "OptimizerConfig":
        if not self.c1 < self.c2:
            raise ValueError(f"need 0 < c1 < c2 < 1, got c1={self.c1}, c2={self.c2}")
        if self.switch_frequency is not None and self.switch_frequency > self.epoch_length - 1:
            raise ValueError(
                f"switch_frequency must satisfy 1 < t <= m - 1, got t={self.switch_frequency}, "
                f"m={self.epoch_length}"
            )
        return self

    def wolfe_params(self) -> WolfeParams:
        """Build the line-search parameters carried by this config."""
        return WolfeParams(
            c1=self.c1,
            c2=self.c2,
            eta2=self.eta2,
            eta_init=self.eta_init,
            max_bracket=self.max_bracket,
            max_zoom=self.max_zoom,
        )


class EpochRecord(BaseModel):
    """Metrics at the output point of one epoch.

    ``effective_passes``, ``ls_calls``, ``fallback_count`` and ``wall_ms`` are cumulative;
    ``search_gradient_evals`` counts batch gradients spent by searches in this epoch only.
    """
    epoch: int
    objective: float
    gmap_sq: float
    effective_passes: float
    ls_calls: int = 0
    fallback_count: int = 0
    search_gradient_evals: int = 0
    wall_ms: float = 0.0


class RunTrace(BaseModel):
    """Per-epoch metrics and diagnostics of one optimizer run."""
    algorithm: str
    config: Dict[str, Any] = Field(default_factory=dict)
    records: List[EpochRecord] = Field(default_factory=list)
    beta_hat: float = 0.0
    eta1: Optional[float] = None
    sigma_sq: float = 0.0
    restarts: int = 0
    ascent_resets: int = 0
    status: str = "running"
    error: Optional[str] = None
    messages: List[RunMessage] = Field(default_factory=list)

    def add_message(self, source: str, message_type: MessageType, content: str) -> None:
        """Append a message to the trace."""
        self.messages.append(
            RunMessage(source=source, message_type=message_type, content=content)
        )

    @property
    def final(self) -> Optional[EpochRecord]:
        """The last epoch record, if any."""
        return self.records[-1] if self.records else None


class MetricRow(BaseModel):
    """One CSV row: the metrics of one run at one epoch."""
    run_id: str
    algo: str
    dataset: str
    loss: str
    seed: int
    epoch: int
    effective_passes: float
    objective: float
    subopt: float
    gmap_sq: float
    ls_calls: int
    fallback_count: int
    wall_ms: float


class DatasetSpec(BaseModel):
    """Where the data comes from and how it is prepared."""
    path: str
    normalize: bool = True
    label_map: Optional[Dict[str, int]] = None
    n_features: Optional[int] = Field(default=None, ge=1)

    @field_validator("label_map")
    @classmethod
    def _check_label_map(cls, value: Optional[Dict[str, int]]) -> Optional[Dict[str, int]]:
        if value is None:
            return value
        for raw, mapped in value.items():
            float(raw)
            if mapped not in (-1, 1):
                raise ValueError(f"label {raw!r} must map to -1 or +1, got {mapped}")
        return value


class AlgorithmEntry(BaseModel):
    """One algorithm to run, either from a named preset or from explicit settings."""
    algorithm: str
    preset: Optional[str] = None
    label: Optional[str] = None
    overrides: Dict[str, Any] = Field(default_factory=dict)


class ExperimentSpec(BaseModel):
    """A full experiment: data, model, algorithms and seeds."""
    dataset: DatasetSpec
    loss: LossKind
    lam: Union[float, str]
    runs: List[AlgorithmEntry] = Field(min_length=1)
    seeds: List[int] = Field(min_length=1)
    output: str
    metric_eta: float = Field(default=0.5, gt=0)
    epochs: int = Field(default=20, ge=1)
    name: Optional[str] = None

    @field_validator("lam")
    @classmethod
    def _check_lambda(cls, value: Union[float, str]) -> Union[float, str]:
        if isinstance(value, str):
            if not LAMBDA_RULE_PATTERN.match(value):
                raise ValueError(
                    f"unknown lambda rule {value!r}; use a number or one of "
                    "'paper:w8a', 'paper:a9a', 'paper:gisette'"
                )
            return value
        if not math.isfinite(value) or value < 0:
            raise ValueError(f"lambda must be a finite number >= 0, got {value}")
        return value


class TheoryInputs(BaseModel):
    """Analysis inputs of the rate-constant calculators."""
    m: int = Field(ge=1)
    b: int = Field(default=1, ge=1)
    n: int = Field(default=2, ge=1)
    eta1: float = Field(gt=0)
    eta2: float = Field(gt=0)
    gamma: float = Field(default=1.0, gt=0, le=1)
    beta_hat: float = Field(gt=0, lt=1)
    alpha: float = Field(default=2.0, gt=1)
    tau: float = Field(default=0.0, ge=0)
    sigma: float = Field(default=0.0, ge=0)
    L: float = Field(default=1.0, gt=0)
    t: Optional[int] = Field(default=None, gt=1)
    q: Optional[int] = Field(default=None, ge=1)
    tau_o: Optional[float] = Field(default=None, gt=0)

    @model_validator(mode="after")
    def _derive_q(self) -> "TheoryInputs":
        if self.t is not None:
            expected = (self.m - 1) // self.t
            if self.q is None:
                self.q = expected
            elif self.q != expected:
                raise ValueError(f"q must equal floor((m - 1) / t) = {expected}, got {self.q}")
        return self
