"""
Core data model for the nonloc toolkit.

Grid objects are immutable after construction: arrays are stored read-only and
every operation returns new objects.
"""
import enum
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Dict, List, Optional, Tuple

import numpy as np

from nonloc.errors import DataError


class Region(str, enum.Enum):
    """Node region labels."""
    INTERIOR = "interior"
    COLLAR_FIXED = "collar_fixed"
    COLLAR_FREE = "collar_free"


REGION_CODES = {Region.INTERIOR: 0, Region.COLLAR_FIXED: 1, Region.COLLAR_FREE: 2}


class KernelKind(str, enum.Enum):
    """Kernel table layout."""
    TRANSLATION_INVARIANT = "translation_invariant"
    TWO_POINT = "two_point"


class GrowthMode(str, enum.Enum):
    """Growth condition selector for derivative audits."""
    GI = "GI"
    GII = "GII"


class TerminationReason(str, enum.Enum):
    """Why an iterative solver stopped."""
    GRADIENT_TOL = "gradient_tol"
    UPDATE_TOL = "update_tol"
    MAX_ITERS = "max_iters"
    LINE_SEARCH_FAILURE = "line_search_failure"
    NON_FINITE = "non_finite"
    DIVERGED = "diverged"


def _frozen(array: np.ndarray) -> np.ndarray:
    array = np.array(array, dtype=float, copy=True)
    array.setflags(write=False)
    return array


# ==================== Grid ====================

@dataclass(frozen=True, eq=False)
class Domain:
    """Uniform 1D grid over Omega = (a, b) plus a collar of width collar_width."""
    a: float
    b: float
    collar_width: float
    node_count: int
    gamma_prime: Tuple[Tuple[float, float], ...]
    nodes: np.ndarray
    weights: np.ndarray
    labels: np.ndarray

    @property
    def spacing(self) -> float:
        return (self.b - self.a + 2.0 * self.collar_width) / (self.node_count - 1)

    @property
    def measure(self) -> float:
        """Length of Omega plus collar."""
        return self.b - self.a + 2.0 * self.collar_width

    def mask(self, *regions: Region) -> np.ndarray:
        """Boolean node mask for the union of the given regions (all nodes if none given)."""
        if not regions:
            return np.ones(self.node_count, dtype=bool)
        codes = [REGION_CODES[Region(r)] for r in regions]
        return np.isin(self.labels, codes)

    @cached_property
    def free(self) -> np.ndarray:
        """Nodes where the unknown is free: Omega and the free collar."""
        return self.mask(Region.INTERIOR, Region.COLLAR_FREE)

    @cached_property
    def fixed(self) -> np.ndarray:
        return self.mask(Region.COLLAR_FIXED)

    @cached_property
    def interior(self) -> np.ndarray:
        return self.mask(Region.INTERIOR)

    def region_counts(self) -> Dict[str, int]:
        return {r.value: int(np.count_nonzero(self.mask(r))) for r in Region}

    def __repr__(self):
        return (f"<Domain(a={self.a}, b={self.b}, collar_width={self.collar_width}, "
                f"node_count={self.node_count})>")


@dataclass(frozen=True, eq=False)
class GridFunction:
    """Values of an N-component function at the grid nodes (M x N)."""
    domain: Domain
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.ndim == 1:
            values = values[:, None]
        if values.ndim != 2 or values.shape[0] != self.domain.node_count:
            raise DataError(
                f"grid function needs {self.domain.node_count} rows, got shape {values.shape}"
            )
        if not np.all(np.isfinite(values)):
            bad = int(np.argwhere(~np.isfinite(values))[0][0])
            raise DataError(f"grid function has a non-finite value at node {bad}")
        object.__setattr__(self, "values", _frozen(values))

    @property
    def components(self) -> int:
        return self.values.shape[1]

    @property
    def scalar(self) -> np.ndarray:
        """First component as a 1-D array (the N = 1 view)."""
        return self.values[:, 0]

    @classmethod
    def zeros(cls, domain: Domain, components: int = 1) -> "GridFunction":
        return cls(domain, np.zeros((domain.node_count, components)))

    @classmethod
    def from_callable(cls, domain: Domain, fn: Callable[[np.ndarray], np.ndarray]) -> "GridFunction":
        return cls(domain, np.asarray(fn(domain.nodes), dtype=float))

    def __repr__(self):
        return f"<GridFunction(M={self.values.shape[0]}, N={self.components})>"


@dataclass(frozen=True, eq=False)
class KernelTable:
    """
    Sampled interaction kernel.

    Translation-invariant kernels store mu on the difference grid
    z_k = k*h, k = -(M-1)..(M-1) (length 2M-1); two-point kernels store the
    full M x M table alpha(x_i, y_j).
    """
    kind: KernelKind
    domain: Domain
    samples: np.ndarray
    nonneg: bool
    symmetric: bool
    label: str = "table"

    def __post_init__(self):
        object.__setattr__(self, "samples", _frozen(self.samples))

    @cached_property
    def matrix(self) -> np.ndarray:
        """M x M table kappa(x_i, y_j); for translation-invariant kernels mu(y_j - x_i)."""
        if self.kind == KernelKind.TWO_POINT:
            return self.samples
        m = self.domain.node_count
        idx = np.arange(m)
        table = self.samples[idx[None, :] - idx[:, None] + (m - 1)]
        table.setflags(write=False)
        return table

    @property
    def offsets(self) -> np.ndarray:
        """Integer offsets of the difference grid (translation-invariant kernels)."""
        m = self.domain.node_count
        return np.arange(-(m - 1), m)

    @property
    def sup(self) -> float:
        return float(np.max(np.abs(self.samples)))

    def __repr__(self):
        return f"<KernelTable(kind='{self.kind.value}', label='{self.label}')>"


@dataclass(frozen=True, eq=False)
class TwoPointField:
    """Field on node pairs; entry (i, j) holds the value at (x_i, y_j)."""
    domain: Domain
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.ndim == 2:
            values = values[:, :, None]
        if not np.all(np.isfinite(values)):
            raise DataError("two-point field has non-finite entries")
        object.__setattr__(self, "values", _frozen(values))


# ==================== Integrands ====================

@dataclass(frozen=True)
class Integrand:
    """
    Energy density f(x, z, u, xi) with its partial derivatives.

    All three callables take NumPy arrays that broadcast against each other and
    must be stateless.
    """
    name: str
    eval: Callable[..., np.ndarray]
    du: Callable[..., np.ndarray]
    dxi: Callable[..., np.ndarray]
    p: Optional[float] = None
    q: Optional[float] = None
    claims_convex: bool = False
    claims_coercive: bool = False


@dataclass(frozen=True)
class DivergenceForm:
    """Integrands of the form f(x, z, u, xi) = g(x, u, xi * mu(z)); holds g_u and g_eta."""
    g_u: Callable[[np.ndarray, np.ndarray, np.ndarray], np.ndarray]
    g_eta: Callable[[np.ndarray, np.ndarray, np.ndarray], np.ndarray]


@dataclass(frozen=True)
class CoercivityData:
    """Lower-bound data alpha1|xi|^p + alpha2|u|^q + alpha3 with alpha1 >= C0 near the diagonal."""
    alpha1: KernelTable
    alpha2: KernelTable
    alpha3: KernelTable
    p: float
    q: float
    C0: float
    delta: float


@dataclass(frozen=True)
class GrowthData:
    """
    Majorants for derivative growth audits.

    GI uses one table a_R per tested radius R; GII uses a, beta and p.
    """
    mode: GrowthMode
    majorants: Dict[float, KernelTable] = field(default_factory=dict)
    a: Optional[KernelTable] = None
    beta: Optional[KernelTable] = None
    p: Optional[float] = None


# ==================== Solver results ====================

@dataclass
class MinimizeResult:
    """Outcome of projected steepest descent."""
    u_star: GridFunction
    energy_trace: List[float]
    grad_inf_norm: float
    iterations: int
    converged: bool
    termination_reason: TerminationReason


@dataclass
class SolveResult:
    """
    Outcome of the convolution fixed-point iteration.

    converged implies residual_inf <= residual_tol.
    """
    u_star: GridFunction
    residual_inf: float
    iterations: int
    contraction_estimates: List[float]
    converged: bool
    termination_reason: TerminationReason
    residual_tol: float
    damping: float = 1.0
