"""Peaks-over-threshold estimation for the station margins.

Moment estimator of the extreme value index, the matching scale estimator,
the k-th largest order statistic as shift, pooled shape, return levels and
the mixed empirical / generalized Pareto distribution used for resampling.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

logger = logging.getLogger(__name__)

DEFAULT_K = 125
_GAMMA_ZERO = 1e-8


class FitError(ValueError):
    """A tail fit cannot be computed for the given sample."""


def _top(sample, k: int) -> np.ndarray:
    """The ``k`` largest values in descending order (stable for ties)."""
    x = np.asarray(sample, dtype=float).ravel()
    if not 1 <= k <= x.size:
        raise FitError(f"k={k} out of range for sample of size {x.size}")
    order = np.argsort(-x, kind="stable")
    return x[order[:k]]


def kth_largest(sample, k: int) -> float:
    """k-th element of the descending sort, duplicates counted."""
    return float(_top(sample, k)[-1])


def _log_moments(sample, k: int) -> tuple[float, float, float]:
    """Return ``(M1, M2, X_{n-k,n})`` from the top ``k + 1`` order statistics."""
    x = np.asarray(sample, dtype=float).ravel()
    if not 1 <= k < x.size:
        raise FitError(f"k={k} must satisfy 1 <= k < n={x.size}")
    top = _top(x, k + 1)
    if top[-1] <= 0:
        raise FitError(f"nonpositive order statistic among the top {k + 1}")
    dlog = np.log(top[:k]) - np.log(top[k])
    m1 = float(np.mean(dlog))
    m2 = float(np.mean(dlog ** 2))
    return m1, m2, float(top[k])


def moment_estimator(sample, k: int) -> float:
    """Moment estimator of the extreme value index.

    ``M1 + 1 - 1/2 * (1 - M1**2/M2)**-1`` with ``Mj`` the j-th mean power of
    the log excesses of the top ``k`` values over ``X_{n-k,n}``.
    """
    m1, m2, _ = _log_moments(sample, k)
    if m2 <= 0 or m2 - m1 * m1 <= 1e-15 * m2:
        raise FitError("degenerate sample: top log excesses are all equal")
    return m1 + 1.0 - 0.5 / (1.0 - m1 * m1 / m2)


def _scale_from(m1: float, x_ref: float, gamma: float) -> float:
    gamma_minus = gamma - m1
    return x_ref * m1 * (1.0 - gamma_minus)


def scale_estimator(sample, k: int, gamma_local: float) -> float:
    """Scale ``X_{n-k,n} * M1 * (1 - (gamma - M1))``."""
    m1, _, x_ref = _log_moments(sample, k)
    scale = _scale_from(m1, x_ref, gamma_local)
    if not scale > 0:
        raise FitError(f"nonpositive scale estimate {scale}")
    return scale


@dataclass(frozen=True)
class MarginalFit:
    station_ids: tuple[str, ...]
    k: int
    gamma_local: np.ndarray
    scale: np.ndarray
    shift: np.ndarray
    gamma_pooled: float
    n: int

    def diagnostics(self) -> list[str]:
        return [f"station {s}: |gamma_local|={g:.3f} > 1"
                for s, g in zip(self.station_ids, self.gamma_local) if abs(g) > 1]


def fit_margins(panel, k: int = DEFAULT_K, station_ids=None) -> MarginalFit:
    """Fit shift, scale and local shape at every station; pool the shapes.

    ``panel`` is a :class:`~arealext.data_io.RainPanel` or a day x station array.
    """
    values = np.asarray(getattr(panel, "values", panel), dtype=float)
    n, n_st = values.shape
    ids = tuple(station_ids) if station_ids is not None else tuple(str(j) for j in range(n_st))
    if not 1 <= k < n:
        raise FitError(f"k={k} must satisfy 1 <= k < n_days={n}")
    gammas, scales, shifts = [], [], []
    for j in range(n_st):
        col = values[:, j]
        try:
            g = moment_estimator(col, k)
            a = scale_estimator(col, k, g)
        except FitError as err:
            raise FitError(f"station {ids[j]}: {err}") from None
        gammas.append(g)
        scales.append(a)
        shifts.append(kth_largest(col, k))
    gammas = np.array(gammas)
    # plain left-to-right sum in catalog order
    pooled = float(sum(gammas.tolist()) / len(gammas))
    fit = MarginalFit(ids, int(k), gammas, np.array(scales), np.array(shifts), pooled, n)
    for msg in fit.diagnostics():
        logger.warning(msg)
    return fit


def gamma_stability_scan(panel, k_min: int, k_max: int) -> list[tuple[int, float]]:
    """Mean local shape for each k in ``[k_min, k_max]``; failing k are skipped."""
    if k_min < 2:
        raise ValueError("k_min must be at least 2")
    values = np.asarray(getattr(panel, "values", panel), dtype=float)
    rows = []
    for k in range(k_min, k_max + 1):
        try:
            gammas = [moment_estimator(values[:, j], k) for j in range(values.shape[1])]
        except FitError:
            continue
        rows.append((k, float(sum(gammas) / len(gammas))))
    return rows


def _growth(y, gamma: float):
    """``(y**gamma - 1)/gamma`` with the log limit near gamma = 0."""
    log_y = np.log(y)
    if abs(gamma) < _GAMMA_ZERO:
        return log_y * (1.0 + gamma * log_y / 2.0)
    return np.expm1(gamma * log_y) / gamma


def return_level(gamma: float, scale: float, shift: float, k: int, n: int,
                 p_exceed: float) -> float:
    """Level exceeded with daily probability ``p_exceed``.

    Only valid beyond the fitted threshold, ``0 < p_exceed <= k/n``.
    """
    if not 0 < p_exceed <= k / n:
        raise ValueError(f"p_exceed={p_exceed} is inside the empirical range (k/n={k / n:.6g}); "
                         "use the empirical quantile")
    return float(shift + scale * _growth(k / (n * p_exceed), gamma))


@dataclass(frozen=True)
class TailModel:
    """Empirical distribution below ``threshold``, GPD tail above it."""

    threshold: float
    below: np.ndarray
    n_total: int
    gamma: float
    scale: float

    @property
    def tail_mass(self) -> float:
        return 1.0 - len(self.below) / self.n_total

    @classmethod
    def from_sample(cls, sample, k: int, gamma: float | None = None,
                    scale: float | None = None) -> "TailModel":
        """Threshold at the k-th largest value; shape and scale fitted if omitted."""
        x = np.asarray(sample, dtype=float).ravel()
        t = kth_largest(x, k)
        if gamma is None:
            gamma = moment_estimator(x, k)
        if scale is None:
            scale = scale_estimator(x, k, gamma)
        return cls(t, np.sort(x[x <= t]), x.size, float(gamma), float(scale))

    def gpd_survival(self, x):
        z = 1.0 + self.gamma * (np.asarray(x, dtype=float) - self.threshold) / self.scale
        with np.errstate(divide="ignore", invalid="ignore"):
            if abs(self.gamma) < _GAMMA_ZERO:
                surv = np.exp(-(np.asarray(x, dtype=float) - self.threshold) / self.scale)
            else:
                surv = np.where(z > 0, np.power(np.maximum(z, 0.0), -1.0 / self.gamma), 0.0)
        return surv

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        emp = np.searchsorted(self.below, x, side="right") / self.n_total
        tail = 1.0 - self.tail_mass * self.gpd_survival(np.maximum(x, self.threshold))
        out = np.where(x < self.threshold, emp, tail)
        return out if out.ndim else float(out)

    def sample(self, rng, size: int) -> np.ndarray:
        """Resample the body, draw the tail from the GPD."""
        rng = np.random.default_rng(rng)
        u = rng.random(size)
        out = np.empty(size)
        body = u < 1.0 - self.tail_mass
        out[body] = self.below[rng.integers(len(self.below), size=int(body.sum()))]
        # inverse GPD on the conditional tail uniform
        v = (u[~body] - (1.0 - self.tail_mass)) / self.tail_mass
        out[~body] = self.threshold + self.scale * _growth(1.0 / (1.0 - v), self.gamma)
        return out


def mixed_tail_cdf(model: TailModel, x):
    return model.cdf(x)
