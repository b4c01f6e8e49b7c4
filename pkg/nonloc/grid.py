"""
Discretization of Omega with its collar: nodes, region labels, trapezoid
quadrature, norms and sampled kernels.
"""
import logging
import math
from pathlib import Path
from typing import Callable, Optional, Sequence, Tuple, Union

import numpy as np

from nonloc import io
from nonloc.errors import ConfigurationError, DataError
from nonloc.models import (
    REGION_CODES,
    Domain,
    GridFunction,
    KernelKind,
    KernelTable,
    Region,
)
from nonloc.schemas import KernelConfig, KernelType

logger = logging.getLogger(__name__)

Field1D = Union[np.ndarray, GridFunction, float]


# ==================== Domain ====================

def build_domain(
    a: float,
    b: float,
    collar_width: float,
    node_count: int,
    gamma_prime: Sequence[Tuple[float, float]] = (),
) -> Domain:
    """
    Build the uniform grid on [a - collar_width, b + collar_width].

    Nodes exactly at a or b belong to Omega. Nodes inside a gamma_prime
    interval are free collar nodes; every other collar node is fixed.

    Args:
        a: Left endpoint of Omega
        b: Right endpoint of Omega
        collar_width: Collar thickness on each side
        node_count: Number of nodes M
        gamma_prime: Free-collar intervals, each inside the collar band

    Returns:
        Immutable Domain

    Raises:
        ConfigurationError: On invalid geometry, an under-resolved collar or
            overlapping / out-of-band gamma_prime intervals
    """
    if not a < b:
        raise ConfigurationError(f"domain needs a < b, got a={a}, b={b}")
    if not collar_width > 0:
        raise ConfigurationError(f"collar_width must be positive, got {collar_width}")
    if node_count < 3:
        raise ConfigurationError(f"node_count must be at least 3, got {node_count}")

    lo, hi = a - collar_width, b + collar_width
    nodes = np.linspace(lo, hi, node_count)
    h = (hi - lo) / (node_count - 1)
    tol = 1e-9 * h

    labels = np.full(node_count, REGION_CODES[Region.COLLAR_FIXED], dtype=np.int8)
    inside = (nodes >= a - tol) & (nodes <= b + tol)
    labels[inside] = REGION_CODES[Region.INTERIOR]

    # Resolution counts nodes in the closed bands [a - w, a] and [b, b + w]
    left = int(np.count_nonzero(nodes <= a + tol))
    right = int(np.count_nonzero(nodes >= b - tol))
    if left < 2 or right < 2:
        raise ConfigurationError(
            f"node_count={node_count} resolves only {left}/{right} collar nodes "
            "(left/right); at least 2 per side are needed"
        )

    intervals = sorted((float(s), float(e)) for s, e in gamma_prime)
    for k, (s, e) in enumerate(intervals):
        if not s < e:
            raise ConfigurationError(f"gamma_prime interval ({s}, {e}) is empty")
        in_left = s >= lo - tol and e <= a + tol
        in_right = s >= b - tol and e <= hi + tol
        if not (in_left or in_right):
            raise ConfigurationError(
                f"gamma_prime interval ({s}, {e}) is outside the collar band "
                f"[{lo}, {a}] U [{b}, {hi}]"
            )
        if k and s < intervals[k - 1][1]:
            raise ConfigurationError(
                f"gamma_prime intervals {intervals[k - 1]} and ({s}, {e}) overlap"
            )
        free = (nodes >= s - tol) & (nodes <= e + tol) & ~inside
        labels[free] = REGION_CODES[Region.COLLAR_FREE]

    weights = np.full(node_count, h)
    weights[0] = weights[-1] = 0.5 * h

    nodes.setflags(write=False)
    weights.setflags(write=False)
    labels.setflags(write=False)

    domain = Domain(
        a=float(a),
        b=float(b),
        collar_width=float(collar_width),
        node_count=int(node_count),
        gamma_prime=tuple(intervals),
        nodes=nodes,
        weights=weights,
        labels=labels,
    )
    logger.debug("built %r with regions %s", domain, domain.region_counts())
    return domain


def refine(domain: Domain) -> Domain:
    """Same geometry with 2M - 1 nodes (every old node kept, midpoints added)."""
    return build_domain(domain.a, domain.b, domain.collar_width,
                        2 * domain.node_count - 1, domain.gamma_prime)


# ==================== Quadrature & norms ====================

def _as_array(field: Field1D, domain: Domain) -> np.ndarray:
    if isinstance(field, GridFunction):
        values = field.values
        return values[:, 0] if values.shape[1] == 1 else np.linalg.norm(values, axis=1)
    values = np.asarray(field, dtype=float)
    if values.ndim == 0:
        return np.full(domain.node_count, float(values))
    if values.shape[0] != domain.node_count:
        raise DataError(f"field has {values.shape[0]} entries, domain has {domain.node_count} nodes")
    return values


def _region_mask(domain: Domain, region) -> np.ndarray:
    if region is None:
        return domain.mask()
    if isinstance(region, np.ndarray):
        return region.astype(bool)
    if isinstance(region, (Region, str)):
        return domain.mask(region)
    return domain.mask(*region)


def _closed_weights(domain: Domain, mask: np.ndarray) -> np.ndarray:
    """
    Trapezoid weights of the selected nodes taken as a set of closed intervals.

    Each node gets h/2 per selected neighbour, so the ends of every contiguous
    run carry h/2 and an isolated node carries nothing.
    """
    mask = np.asarray(mask, dtype=bool)
    left = np.r_[False, mask[:-1]]
    right = np.r_[mask[1:], False]
    return np.where(mask, 0.5 * domain.spacing * (left.astype(float) + right), 0.0)


def integrate(field: Field1D, domain: Domain, region=None, closed: bool = False) -> float:
    """
    Trapezoid quadrature of a nodal field over the selected regions.

    Args:
        field: Per-node values (array, scalar or scalar GridFunction)
        domain: Grid
        region: None (all nodes), a Region, an iterable of Regions or a boolean mask
        closed: Integrate over the region alone (its end nodes carry h/2)
            instead of summing the full-grid weights of its nodes

    Returns:
        Weighted sum over the selected nodes
    """
    values = _as_array(field, domain)
    mask = _region_mask(domain, region)
    if closed:
        return float(np.sum(_closed_weights(domain, mask)[mask] * values[mask]))
    return float(np.sum(domain.weights[mask] * values[mask]))


def lp_norm(u: GridFunction, p: float, region=None) -> float:
    """(sum_i w_i |u_i|^p)^(1/p) over the selected regions."""
    if p < 1:
        raise ConfigurationError(f"lp_norm needs p >= 1, got {p}")
    domain = u.domain
    magnitude = np.linalg.norm(u.values, axis=1)
    mask = _region_mask(domain, region)
    total = float(np.sum(domain.weights[mask] * magnitude[mask] ** p))
    return total ** (1.0 / p)


def linf_norm(u: Union[GridFunction, np.ndarray], region=None) -> float:
    """max_i |u_i| over the selected regions."""
    if isinstance(u, GridFunction):
        magnitude = np.linalg.norm(u.values, axis=1)
        mask = _region_mask(u.domain, region)
    else:
        magnitude = np.abs(np.asarray(u, dtype=float))
        mask = np.ones(magnitude.shape[0], dtype=bool) if region is None else region
    if not np.any(mask):
        return 0.0
    return float(np.max(magnitude[mask]))


def weighted_seminorm(u: GridFunction, beta: KernelTable, p: float) -> float:
    """
    Discrete W^p_beta seminorm (sum_ij w_i w_j |beta_ij| |u_j - u_i|^p)^(1/p).
    """
    if p < 1:
        raise ConfigurationError(f"weighted_seminorm needs p >= 1, got {p}")
    w = u.domain.weights
    values = u.scalar
    diff = np.abs(values[None, :] - values[:, None]) ** p
    rows = np.sum(np.abs(beta.matrix) * diff * w[None, :], axis=1)
    return float(np.sum(w * rows)) ** (1.0 / p)


# ==================== Kernels ====================

def _flags(kind: KernelKind, samples: np.ndarray) -> Tuple[bool, bool]:
    nonneg = bool(np.all(samples >= 0))
    if kind == KernelKind.TRANSLATION_INVARIANT:
        symmetric = bool(np.array_equal(samples, samples[::-1]))
    else:
        symmetric = bool(np.array_equal(samples, samples.T))
    return nonneg, symmetric


def kernel_from_samples(domain: Domain, samples: np.ndarray, kind: KernelKind,
                        label: str = "table") -> KernelTable:
    """
    Wrap raw samples in a KernelTable, computing the nonneg/symmetric flags.

    Raises:
        DataError: On wrong shape or non-finite samples
    """
    samples = np.asarray(samples, dtype=float)
    m = domain.node_count
    expected = (2 * m - 1,) if kind == KernelKind.TRANSLATION_INVARIANT else (m, m)
    if samples.shape != expected:
        raise DataError(f"{kind.value} kernel needs shape {expected}, got {samples.shape}")
    if not np.all(np.isfinite(samples)):
        raise DataError(f"kernel '{label}' has non-finite samples")
    nonneg, symmetric = _flags(kind, samples)
    return KernelTable(kind=kind, domain=domain, samples=samples,
                       nonneg=nonneg, symmetric=symmetric, label=label)


def kernel_from_function(domain: Domain, fn: Callable[[np.ndarray], np.ndarray],
                         label: str = "function") -> KernelTable:
    """Sample a translation-invariant kernel mu(z) on the difference grid."""
    m = domain.node_count
    z = np.arange(-(m - 1), m) * domain.spacing
    return kernel_from_samples(domain, fn(z), KernelKind.TRANSLATION_INVARIANT, label)


def two_point_from_function(domain: Domain, fn: Callable[[np.ndarray, np.ndarray], np.ndarray],
                            label: str = "function") -> KernelTable:
    """Sample a two-point kernel alpha(x, y) on all node pairs."""
    x = domain.nodes
    table = np.broadcast_to(fn(x[:, None], x[None, :]), (x.size, x.size))
    return kernel_from_samples(domain, table, KernelKind.TWO_POINT, label)


def kernel_map(kernel: KernelTable, fn: Callable[[np.ndarray], np.ndarray],
               label: Optional[str] = None) -> KernelTable:
    """Apply fn sample-wise (e.g. squaring mu) keeping the layout."""
    return kernel_from_samples(kernel.domain, fn(kernel.samples), kernel.kind,
                               label or f"{kernel.label}'")


def gaussian(sigma: float = 1.0) -> Callable[[np.ndarray], np.ndarray]:
    """mu(z) = exp(-(z/sigma)^2) / (sigma sqrt(pi)), unit mass on R."""
    scale = 1.0 / (sigma * math.sqrt(math.pi))
    return lambda z: scale * np.exp(-(np.asarray(z) / sigma) ** 2)


def sample_kernel(spec: KernelConfig, domain: Domain, base_dir: Optional[Path] = None) -> KernelTable:
    """
    Sample a kernel descriptor on the domain.

    Constant kernels are supported on |k| h <= horizon, decided on integer
    offsets k so the support never depends on rounding of node differences.

    Args:
        spec: Kernel descriptor
        domain: Grid
        base_dir: Directory relative file paths are resolved against

    Returns:
        KernelTable with flags computed from the samples

    Raises:
        DataError: On unreadable files or non-finite samples
    """
    m = domain.node_count
    if spec.type == KernelType.GAUSSIAN:
        return kernel_from_function(domain, gaussian(spec.sigma), label=f"gaussian({spec.sigma})")

    if spec.type == KernelType.CONSTANT:
        reach = int(math.floor(spec.horizon / domain.spacing + 1e-9))
        offsets = np.arange(-(m - 1), m)
        samples = np.where(np.abs(offsets) <= reach, spec.value, 0.0)
        return kernel_from_samples(domain, samples, KernelKind.TRANSLATION_INVARIANT,
                                   label=f"constant({spec.value}, {spec.horizon})")

    path = Path(spec.file)
    if base_dir is not None and not path.is_absolute():
        path = Path(base_dir) / path

    if spec.type == KernelType.TABLE:
        z, mu = io.read_kernel_csv(path)
        expected = np.arange(-(m - 1), m) * domain.spacing
        if z.shape != expected.shape or not np.allclose(z, expected, rtol=0, atol=1e-12 * max(1.0, domain.measure)):
            raise DataError(f"z column must be the {2 * m - 1}-point difference grid of the domain",
                            path=str(path))
        return kernel_from_samples(domain, mu, KernelKind.TRANSLATION_INVARIANT, label=path.name)

    table = io.read_two_point_csv(path, m)
    return kernel_from_samples(domain, table, KernelKind.TWO_POINT, label=path.name)


def write_kernel_table(kernel: KernelTable, path: Path) -> None:
    """Re-emit a kernel in the CSV layout it was read from."""
    if kernel.kind == KernelKind.TRANSLATION_INVARIANT:
        z = kernel.offsets * kernel.domain.spacing
        io.write_kernel_csv(path, z, kernel.samples)
    else:
        io.write_two_point_csv(path, kernel.samples)


def row_mass(kernel: KernelTable, power: float = 1.0) -> np.ndarray:
    """
    Per-node kernel mass sum_j w_j |kappa(x_i, y_j)|^power.

    This is the discrete stand-in for the L1 norm of mu seen from node i.
    """
    w = kernel.domain.weights
    table = np.abs(kernel.matrix)
    if power != 1.0:
        table = table ** power
    return np.sum(table * w[None, :], axis=1)


def difference_mass(kernel: KernelTable, power: float = 1.0) -> float:
    """Trapezoid quadrature of |mu|^power over the whole difference grid."""
    if kernel.kind != KernelKind.TRANSLATION_INVARIANT:
        raise ConfigurationError("difference_mass needs a translation-invariant kernel")
    h = kernel.domain.spacing
    weights = np.full(kernel.samples.size, h)
    weights[0] = weights[-1] = 0.5 * h
    return float(np.sum(weights * np.abs(kernel.samples) ** power))


def kernel_lookup(kernel: KernelTable) -> Callable[[np.ndarray], np.ndarray]:
    """
    mu(z) read from a translation-invariant table at the nearest grid offset.

    Integrands built on a table see exactly the samples the operators use.
    """
    if kernel.kind != KernelKind.TRANSLATION_INVARIANT:
        raise ConfigurationError("kernel_lookup needs a translation-invariant kernel")
    h = kernel.domain.spacing
    m = kernel.domain.node_count
    samples = kernel.samples

    def mu(z):
        k = np.clip(np.rint(np.asarray(z, dtype=float) / h).astype(int), -(m - 1), m - 1)
        return samples[k + m - 1]

    return mu


def sample_points(domain: Domain, pairs: int, rng: np.random.Generator) -> Tuple[np.ndarray, np.ndarray]:
    """Random node pairs (i, j) for Monte Carlo audits."""
    m = domain.node_count
    return rng.integers(0, m, size=pairs), rng.integers(0, m, size=pairs)


def band_mask(domain: Domain, delta: float) -> np.ndarray:
    """M x M mask of node pairs with |y - x| <= delta."""
    idx = np.arange(domain.node_count)
    reach = int(math.floor(delta / domain.spacing + 1e-9))
    return np.abs(idx[None, :] - idx[:, None]) <= reach
