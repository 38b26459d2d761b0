"""Log-log slope fits with delete-one-block jackknife errors."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ParameterError


@dataclass(frozen=True)
class SlopeFit:
    slope: float
    intercept: float
    slope_stderr: float
    n_blocks: int


def wls_line(x, y, w=None) -> tuple[float, float]:
    """Weighted least-squares line y = intercept + slope*x."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.size < 2:
        raise ParameterError("a line fit needs at least two points")
    w = np.ones_like(x) if w is None else np.asarray(w, dtype=float)
    sw = math.fsum(w)
    xm = math.fsum(w * x) / sw
    ym = math.fsum(w * y) / sw
    sxx = math.fsum(w * (x - xm) ** 2)
    if sxx == 0:
        raise ParameterError("degenerate abscissae")
    slope = math.fsum(w * (x - xm) * (y - ym)) / sxx
    return slope, ym - slope * xm


def block_sums(values: np.ndarray, n_blocks: int) -> tuple[np.ndarray, np.ndarray]:
    """Column sums of contiguous row blocks and the block sizes."""
    edges = np.linspace(0, values.shape[0], n_blocks + 1).round().astype(int)
    sums = np.array([[math.fsum(col) for col in values[lo:hi].T] for lo, hi in zip(edges[:-1], edges[1:])])
    return sums, np.diff(edges)


def column_stats(values: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Mean and standard error per column (compensated sums)."""
    n = values.shape[0]
    mean = np.array([math.fsum(col) / n for col in values.T])
    if n < 2:
        return mean, np.zeros_like(mean)
    var = np.array([math.fsum((col - m) ** 2) / (n - 1) for col, m in zip(values.T, mean)])
    return mean, np.sqrt(var / n)


def loglog_slope(x, values, n_blocks: int = 20, log_x=True) -> tuple[SlopeFit, np.ndarray, np.ndarray]:
    """Fit log(mean of column j) against log(x_j).

    ``values`` has one row per sample and one column per abscissa. Weights are
    the inverse variances of log(mean); if any column has zero variance the fit
    falls back to ordinary least squares. The slope error comes from deleting
    one contiguous block of samples at a time.
    """
    values = np.asarray(values, dtype=float)
    x = np.asarray(x, dtype=float)
    lx = np.log(x) if log_x else x
    mean, stderr = column_stats(values)
    if np.any(mean <= 0):
        raise ParameterError("log-log fit needs positive means")
    if np.all(stderr > 0):
        w = (mean / stderr) ** 2
    else:
        w = None
    slope, icept = wls_line(lx, np.log(mean), w)
    n = values.shape[0]
    nb = min(n_blocks, n)
    if nb < 2:
        return SlopeFit(slope, icept, math.nan, nb), mean, stderr
    sums, sizes = block_sums(values, nb)
    total = sums.sum(axis=0)
    jk = []
    for b in range(nb):
        m_b = (total - sums[b]) / (n - sizes[b])
        if np.any(m_b <= 0):
            continue
        jk.append(wls_line(lx, np.log(m_b), w)[0])
    jk = np.array(jk)
    err = math.sqrt((nb - 1) / nb * math.fsum((jk - jk.mean()) ** 2)) if jk.size > 1 else math.nan
    return SlopeFit(slope, icept, err, nb), mean, stderr
