"""
Discrete nonlocal operators: two-point difference, gradient, divergence,
Laplacian, p-Laplacian and convolution.

Integrals over y are trapezoid sums over all nodes of Omega plus collar. Every
node's reduction runs over a complete row, so results do not depend on the
number of worker threads.
"""
import logging
from typing import Optional

import numpy as np
from scipy.signal import fftconvolve

from nonloc import config
from nonloc.errors import ParameterError, PreconditionError
from nonloc.models import GridFunction, KernelKind, KernelTable, TwoPointField
from nonloc.parallel import map_rows

logger = logging.getLogger(__name__)


def hat(u: GridFunction) -> TwoPointField:
    """Two-point difference: entry (i, j) = u(y_j) - u(x_i)."""
    values = u.values
    return TwoPointField(u.domain, values[None, :, :] - values[:, None, :])


def nonlocal_gradient(u: GridFunction, alpha: KernelTable) -> TwoPointField:
    """G_alpha[u](x_i, y_j) = (u(y_j) - u(x_i)) * alpha(x_i, y_j)."""
    return TwoPointField(u.domain, hat(u).values * alpha.matrix[:, :, None])


def nonlocal_divergence(field: TwoPointField, alpha: KernelTable) -> GridFunction:
    """
    D_alpha[F](x_i) = sum_j w_j [F(i, j) alpha(i, j) - F(j, i) alpha(j, i)].
    """
    domain = field.domain
    w = domain.weights[None, :, None]
    F = field.values
    A = alpha.matrix

    def rows(block):
        outgoing = F[block, :, :] * A[block, :, None]
        incoming = np.swapaxes(F[:, block, :], 0, 1) * A[:, block].T[:, :, None]
        return np.sum((outgoing - incoming) * w, axis=1)

    return GridFunction(domain, map_rows(rows, domain.node_count))


def nonlocal_laplacian(u: GridFunction, kappa: KernelTable) -> GridFunction:
    """
    L[u](x_i) = 2 sum_j w_j (u_j - u_i) kappa(x_i, y_j).

    kappa holds |alpha|^2 in the two-point form, or mu(y - x) in the
    convolution form.
    """
    domain = u.domain
    values = u.values
    w = domain.weights[None, :, None]
    K = kappa.matrix

    def rows(block):
        diff = values[None, :, :] - values[block, None, :]
        return 2.0 * np.sum(diff * K[block, :, None] * w, axis=1)

    return GridFunction(domain, map_rows(rows, domain.node_count))


def _signed_power(diff: np.ndarray, p: float) -> np.ndarray:
    """|d|^(p-2) d, with the removable value 0 at d = 0."""
    magnitude = np.abs(diff)
    out = np.zeros_like(diff)
    nonzero = magnitude > 0
    out[nonzero] = magnitude[nonzero] ** (p - 2.0) * diff[nonzero]
    return out


def nonlocal_p_laplacian(u: GridFunction, mu: KernelTable, p: float) -> GridFunction:
    """
    L^p[u](x_i) = 2 sum_j w_j |u_j - u_i|^(p-2) (u_j - u_i) |mu(x_i, y_j)|^p.

    Raises:
        ParameterError: If p <= 1
    """
    if not p > 1:
        raise ParameterError(f"p-Laplacian needs p > 1, got {p}")
    domain = u.domain
    values = u.values
    w = domain.weights[None, :, None]
    K = np.abs(mu.matrix) ** p

    def rows(block):
        diff = values[None, :, :] - values[block, None, :]
        return 2.0 * np.sum(_signed_power(diff, p) * K[block, :, None] * w, axis=1)

    return GridFunction(domain, map_rows(rows, domain.node_count))


def convolve(u: GridFunction, mu: KernelTable, fast: Optional[bool] = None) -> GridFunction:
    """
    (u * mu)(x_i) = sum_j w_j u_j mu(x_i - y_j), u and mu extended by zero
    outside the grid.

    Args:
        u: Grid function
        mu: Translation-invariant kernel
        fast: Use zero-padded FFT convolution instead of the direct sum
            (defaults to NONLOC_FAST_CONVOLUTION)

    Raises:
        PreconditionError: If mu is a two-point kernel
    """
    if mu.kind != KernelKind.TRANSLATION_INVARIANT:
        raise PreconditionError("convolution needs a translation-invariant kernel")
    domain = u.domain
    m = domain.node_count
    weighted = u.values * domain.weights[:, None]
    fast = config.FAST_CONVOLUTION if fast is None else fast

    if fast:
        columns = [fftconvolve(mu.samples, weighted[:, c], mode="full")[m - 1:2 * m - 1]
                   for c in range(u.components)]
        return GridFunction(domain, np.stack(columns, axis=1))

    # mu(x_i - y_j) is the transpose of the mu(y_j - x_i) table
    K = mu.matrix.T

    def rows(block):
        return np.sum(K[block, :, None] * weighted[None, :, :], axis=1)

    return GridFunction(domain, map_rows(rows, m))
