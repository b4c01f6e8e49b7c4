"""
Pydantic schemas for run configuration, diagnostic reports and result payloads.
"""
import enum
from typing import Any, Dict, List, Literal, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, model_validator

from nonloc.models import TerminationReason


class StrictModel(BaseModel):
    """Base for config models: unknown keys are rejected."""
    model_config = ConfigDict(extra="forbid")


# ==================== Domain & Kernel Schemas ====================

class DomainConfig(StrictModel):
    """Omega = (a, b) with a collar of width collar_width on each side."""
    a: float = -1.0
    b: float = 1.0
    collar_width: float = Field(3.5, gt=0)
    node_count: int = Field(451, ge=3)
    gamma_prime: List[Tuple[float, float]] = Field(default_factory=list)

    @model_validator(mode="after")
    def check_interval(self):
        if not self.a < self.b:
            raise ValueError(f"domain needs a < b, got a={self.a}, b={self.b}")
        return self


class KernelType(str, enum.Enum):
    """Kernel descriptor types."""
    GAUSSIAN = "gaussian"
    CONSTANT = "constant"
    TABLE = "table"
    TWO_POINT = "two_point"


class KernelConfig(StrictModel):
    """Kernel descriptor: gaussian(sigma), constant(value, horizon), table(file), two_point(file)."""
    type: KernelType = KernelType.GAUSSIAN
    sigma: float = Field(1.0, gt=0)
    value: float = 1.0
    horizon: Optional[float] = Field(None, gt=0)
    file: Optional[str] = None

    @model_validator(mode="after")
    def check_params(self):
        if self.type == KernelType.CONSTANT and self.horizon is None:
            raise ValueError("constant kernel needs a horizon")
        if self.type in (KernelType.TABLE, KernelType.TWO_POINT) and not self.file:
            raise ValueError(f"{self.type.value} kernel needs a file")
        return self


# ==================== Solver Schemas ====================

class OptimizerOptions(StrictModel):
    """Projected steepest descent with Armijo backtracking."""
    grad_tol: float = Field(1e-8, gt=0)
    max_iters: int = Field(10000, ge=1)
    armijo_c: float = Field(1e-4, gt=0, lt=1)
    backtrack: float = Field(0.5, gt=0, lt=1)
    initial_step: float = Field(1.0, gt=0)
    step_growth: float = Field(2.0, ge=1)
    max_step: float = Field(1e6, gt=0)
    min_step: float = Field(1e-16, gt=0)
    init: Literal["zero", "boundary_extend", "given"] = "boundary_extend"


class FixedPointOptions(StrictModel):
    """Convolution fixed-point iteration."""
    tol: float = Field(1e-10, gt=0)
    max_iters: int = Field(2000, ge=1)
    damping: float = Field(1.0, gt=0, le=1)
    inversion_tol: float = Field(1e-14, gt=0)


class SolverConfig(StrictModel):
    """Solver settings shared by all commands."""
    optimizer: OptimizerOptions = Field(default_factory=OptimizerOptions)
    fixed_point: FixedPointOptions = Field(default_factory=FixedPointOptions)
    seed: int = 0
    trials: int = Field(10000, ge=1)
    fast_convolution: Optional[bool] = None


# ==================== Run Config ====================

class ProblemConfig(StrictModel):
    """Problem selection: a catalog preset, optionally with constant collar data."""
    preset: str
    collar_value: Optional[float] = None


EmitKind = Literal["solution_csv", "trace_json", "report_json", "residual_csv"]


class OutputConfig(StrictModel):
    """Where and what to write."""
    dir: str = "out"
    emit: List[EmitKind] = Field(
        default_factory=lambda: ["solution_csv", "trace_json", "report_json", "residual_csv"]
    )
    max_trace: Optional[int] = Field(None, ge=1)


class RunConfig(StrictModel):
    """Complete run configuration; domain and kernel default to the preset's."""
    domain: Optional[DomainConfig] = None
    kernel: Optional[KernelConfig] = None
    problem: Optional[ProblemConfig] = None
    solver: SolverConfig = Field(default_factory=SolverConfig)
    output: OutputConfig = Field(default_factory=OutputConfig)


# ==================== Report Schemas ====================

class DiagnosticReport(BaseModel):
    """Structured pass/fail evidence for a check."""
    check: str
    passed: bool
    worst_margin: float
    witness: Dict[str, Any] = Field(default_factory=dict)
    trials: int = 0
    seed: Optional[int] = None
    sample_box: Optional[Tuple[float, float]] = None
    inconclusive: bool = False
    details: Dict[str, Any] = Field(default_factory=dict)


class MinimizeSummary(BaseModel):
    """JSON view of a minimization run."""
    converged: bool
    termination_reason: TerminationReason
    iterations: int
    grad_inf_norm: float
    final_energy: float
    energy_trace: List[float]
    trace_truncated: bool = False


class SolveSummary(BaseModel):
    """JSON view of a fixed-point solve."""
    converged: bool
    termination_reason: TerminationReason
    iterations: int
    residual_inf: float
    residual_tol: float
    damping: float
    contraction_estimates: List[float]


class RunSummary(BaseModel):
    """Machine-readable summary written by every command."""
    command: str
    passed: bool
    key_metrics: Dict[str, Any] = Field(default_factory=dict)
    config_hash: Optional[str] = None
    config: Optional[Dict[str, Any]] = None
    artifacts: List[str] = Field(default_factory=list)


class PresetInfo(BaseModel):
    """Catalog entry as emitted by `preset list` / `preset describe`."""
    name: str
    provenance: str
    description: str
    kind: Literal["energy", "semilinear"]
    solver: Literal["minimize", "fixed_point", "illposed_demo"]
    verification: str
    tolerance: float
    domain: DomainConfig
    kernel: KernelConfig
    collar: str
    audits: List[str] = Field(default_factory=list)
