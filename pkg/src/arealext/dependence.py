"""Estimation of the spatial dependence parameter ``beta``.

For two sites at Manhattan distance ``h`` the field has
``P(eta(u) <= 1, eta(v) <= 1) = exp{-2 Phi(sqrt(beta h)/2)}``, so each station
pair yields ``beta_pq = (4/h) * Phi^-1(L/2)**2`` from a nonparametric estimate
``L`` of the stable tail dependence function at (1, 1).
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr, ndtri

from .margins import DEFAULT_K, FitError

logger = logging.getLogger(__name__)


def std_normal_cdf(x):
    return ndtr(x)


def std_normal_inv(p):
    """Inverse of the standard normal CDF; +-inf at p = 1 and p = 0."""
    p = np.asarray(p, dtype=float)
    if np.any((p < 0) | (p > 1)):
        raise ValueError("probability outside [0, 1]")
    out = ndtri(p)
    return out if out.ndim else float(out)


def bivariate_cdf_eq7(x, y, h: float, beta: float):
    """``P(eta(u) <= e**x, eta(v) <= e**y)`` for sites at Manhattan distance ``h``."""
    if h < 0 or not beta > 0:
        raise ValueError("need h >= 0 and beta > 0")
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    r = math.sqrt(beta * h)
    if r == 0.0:
        out = np.exp(-np.exp(-np.minimum(x, y)))
    else:
        with np.errstate(over="ignore"):
            expo = np.exp(-x) * ndtr(r / 2 + (y - x) / r) + np.exp(-y) * ndtr(r / 2 + (x - y) / r)
        out = np.exp(-expo)
    return out if out.ndim else float(out)


def _top_k_mask(x: np.ndarray, k: int) -> np.ndarray:
    mask = np.zeros(x.size, dtype=bool)
    mask[np.argsort(-x, kind="stable")[:k]] = True
    return mask


def l_estimator(x_series, y_series, k: int) -> float:
    """Empirical ``L(1, 1)``: share of days where either series is among its top k.

    The top k of each series are taken from a stable descending sort, so exactly
    k days count per series and the result lies in ``[1, 2]``.
    """
    x = np.asarray(x_series, dtype=float).ravel()
    y = np.asarray(y_series, dtype=float).ravel()
    if x.size != y.size:
        raise ValueError("series differ in length")
    if not 1 <= k < x.size:
        raise FitError(f"k={k} must satisfy 1 <= k < n={x.size}")
    return float(np.count_nonzero(_top_k_mask(x, k) | _top_k_mask(y, k)) / k)


def pair_beta(l11: float, h: float) -> float | None:
    """Invert the bivariate law at (1, 1); ``None`` when the pair is unusable."""
    if not 1.0 <= l11 <= 2.0:
        raise ValueError(f"l11={l11} outside [1, 2]")
    if h <= 0 or l11 >= 2.0:
        return None
    return 4.0 / h * std_normal_inv(l11 / 2.0) ** 2


@dataclass(frozen=True)
class PairEstimate:
    p: int
    q: int
    h: float
    l11: float
    beta_pq: float | None
    k_pq: int

    @property
    def included(self) -> bool:
        return self.beta_pq is not None


@dataclass(frozen=True)
class DependenceFit:
    pairs: tuple[PairEstimate, ...]
    beta_hat: float
    beta_q25: float
    beta_q75: float

    @property
    def n_excluded(self) -> int:
        return sum(not pr.included for pr in self.pairs)


def manhattan(u, v) -> float:
    return float(abs(u[0] - v[0]) + abs(u[1] - v[1]))


def fit_dependence(panel, catalog, k: int = DEFAULT_K) -> DependenceFit:
    """Average the pairwise ``beta`` estimates over all station pairs."""
    values = np.asarray(getattr(panel, "values", panel), dtype=float)
    xy = np.asarray(catalog.xy, dtype=float)
    n_st = values.shape[1]
    if n_st < 2:
        raise FitError("need at least two stations")
    if not 1 <= k < values.shape[0]:
        raise FitError(f"k={k} must satisfy 1 <= k < n_days={values.shape[0]}")
    masks = [_top_k_mask(values[:, j], k) for j in range(n_st)]
    pairs = []
    for p in range(n_st):
        for q in range(p + 1, n_st):
            h = manhattan(xy[p], xy[q])
            l11 = np.count_nonzero(masks[p] | masks[q]) / k
            pairs.append(PairEstimate(p, q, h, l11, pair_beta(l11, h), k))
    used = [pr.beta_pq for pr in pairs if pr.included]
    if not used:
        raise FitError("every station pair was excluded")
    n_ex = len(pairs) - len(used)
    if n_ex:
        logger.info("%d of %d pairs excluded (L=2 or h=0)", n_ex, len(pairs))
    # sequential sum in (p, q) order
    beta_hat = sum(used) / len(used)
    q25, q75 = np.quantile(np.array(used), [0.25, 0.75])
    return DependenceFit(tuple(pairs), float(beta_hat), float(q25), float(q75))
