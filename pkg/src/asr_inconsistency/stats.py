"""Correlation and run statistics for the evaluation harness."""

from __future__ import annotations

import math

import numpy as np
from scipy import stats as _scipy_stats

from .errors import DegenerateVarianceError, LengthMismatchError, TooFewValuesError

_VAR_EPS = 1e-12


def pearson(x: list[float], y: list[float]) -> float:
    """Sample Pearson correlation coefficient."""
    if len(x) != len(y):
        raise LengthMismatchError(f"{len(x)} vs {len(y)} points")
    if len(x) < 3:
        raise TooFewValuesError("need at least 3 points")
    xa = np.asarray(x, dtype=np.float64)
    ya = np.asarray(y, dtype=np.float64)
    xc = xa - xa.mean()
    yc = ya - ya.mean()
    sxx = float(np.dot(xc, xc))
    syy = float(np.dot(yc, yc))
    if sxx == 0.0 or syy == 0.0:
        raise DegenerateVarianceError("an input has zero variance")
    r = float(np.dot(xc, yc)) / math.sqrt(sxx * syy)
    return max(-1.0, min(1.0, r))


def mean_ci(values: list[float], level: float = 0.95) -> tuple[float, float]:
    """Mean and Student-t confidence-interval halfwidth."""
    n = len(values)
    if n < 2:
        raise TooFewValuesError("need at least 2 values for an interval")
    arr = np.asarray(values, dtype=np.float64)
    mean = float(arr.mean())
    s = float(arr.std(ddof=1))
    t = float(_scipy_stats.t.ppf(0.5 + level / 2.0, n - 1))
    return mean, t * s / math.sqrt(n)


def two_sample_t(a: list[float], b: list[float]) -> tuple[float, float]:
    """Welch's two-sample t-test, two-sided.

    Zero-variance inputs are handled with a small epsilon on the pooled
    variance term instead of failing, so constant samples give p ~ 0 when
    means differ and p = 1 when they do not.
    """
    na, nb = len(a), len(b)
    if na < 2 or nb < 2:
        raise TooFewValuesError("need at least 2 values per sample")
    aa = np.asarray(a, dtype=np.float64)
    ba = np.asarray(b, dtype=np.float64)
    va = float(aa.var(ddof=1))
    vb = float(ba.var(ddof=1))
    se2 = va / na + vb / nb
    if se2 < _VAR_EPS:
        se2 = _VAR_EPS
    t_stat = (float(aa.mean()) - float(ba.mean())) / math.sqrt(se2)
    denom = 0.0
    if va > 0:
        denom += (va / na) ** 2 / (na - 1)
    if vb > 0:
        denom += (vb / nb) ** 2 / (nb - 1)
    if denom == 0.0:
        df = float(na + nb - 2)
    else:
        df = se2 * se2 / denom
    p = 2.0 * float(_scipy_stats.t.sf(abs(t_stat), df))
    return t_stat, min(1.0, p)
