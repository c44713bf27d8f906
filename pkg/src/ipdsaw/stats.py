"""Statistical estimators used by the experiments."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import stats as _sps

__all__ = [
    "Estimate",
    "estimate",
    "ks_two_sample",
    "ks_discrete_laws",
    "chi2_pvalue",
    "loglog_slope",
    "empirical_covariance",
    "sup_distance",
]


@dataclass(frozen=True)
class Estimate:
    """A statistic with its uncertainty (None when the value is exact)."""

    value: object
    stderr: object | None = None


def ks_two_sample(a, b) -> Estimate:
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.size < 2 or b.size < 2:
        raise ValueError("need at least two points per sample")
    res = _sps.ks_2samp(a, b)
    return Estimate(float(res.statistic), None)


def ks_discrete_laws(x1, p1, x2, p2) -> Estimate:
    """KS distance between two discrete laws given atoms and masses."""
    x1 = np.asarray(x1, dtype=float)
    x2 = np.asarray(x2, dtype=float)
    grid = np.union1d(x1, x2)
    c1 = np.cumsum(np.asarray(p1, dtype=float))
    c2 = np.cumsum(np.asarray(p2, dtype=float))
    f1 = np.concatenate([[0.0], c1])[np.searchsorted(x1, grid, side="right")]
    f2 = np.concatenate([[0.0], c2])[np.searchsorted(x2, grid, side="right")]
    return Estimate(float(np.max(np.abs(f1 - f2))), None)


def ks_sample_vs_law(sample, atoms, probs) -> Estimate:
    """KS distance between an empirical sample and a discrete law."""
    sample = np.sort(np.asarray(sample, dtype=float))
    atoms = np.asarray(atoms, dtype=float)
    cdf = np.cumsum(np.asarray(probs, dtype=float))
    emp = np.searchsorted(sample, atoms, side="right") / sample.size
    return Estimate(float(np.max(np.abs(emp - cdf))), None)


def chi2_pvalue(observed, expected) -> Estimate:
    observed = np.asarray(observed, dtype=float)
    expected = np.asarray(expected, dtype=float)
    if observed.size < 2:
        raise ValueError("need at least two bins")
    # guard expected counts; scipy requires matching totals
    expected = expected * observed.sum() / expected.sum()
    res = _sps.chisquare(observed, expected)
    return Estimate(float(res.pvalue), None)


def loglog_slope(x, y) -> Estimate:
    """Least-squares slope of log y against log x, with its standard error."""
    lx = np.log(np.asarray(x, dtype=float))
    ly = np.log(np.asarray(y, dtype=float))
    if lx.size < 2:
        raise ValueError("need at least two points")
    A = np.vstack([lx, np.ones_like(lx)]).T
    coef, res, _, _ = np.linalg.lstsq(A, ly, rcond=None)
    if lx.size > 2 and res.size:
        s2 = float(res[0]) / (lx.size - 2)
        var = s2 * np.linalg.inv(A.T @ A)[0, 0]
        se = math.sqrt(max(var, 0.0))
    else:
        se = 0.0
    return Estimate(float(coef[0]), se)


def empirical_covariance(samples) -> Estimate:
    """Sample covariance with the Gaussian-theory entrywise standard errors."""
    s = np.asarray(samples, dtype=float)
    if s.ndim != 2 or s.shape[0] < 2:
        raise ValueError("need a (replicas, dim) array")
    n = s.shape[0]
    c = np.cov(s, rowvar=False)
    c = np.atleast_2d(c)
    d = np.diag(c)
    se = np.sqrt((np.outer(d, d) + c**2) / n)
    return Estimate(c, se)


def sup_distance(a, b) -> Estimate:
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    return Estimate(float(np.max(np.abs(a - b))), None)


_KINDS = {
    "ks": ks_two_sample,
    "chi2": chi2_pvalue,
    "loglog_slope": loglog_slope,
    "emp_cov": empirical_covariance,
    "sup_dist": sup_distance,
}


def estimate(kind: str, *data) -> Estimate:
    """Dispatch by name: ks | chi2 | loglog_slope | emp_cov | sup_dist."""
    try:
        fn = _KINDS[kind]
    except KeyError:
        raise ValueError(f"unknown estimator {kind!r}") from None
    return fn(*data)
