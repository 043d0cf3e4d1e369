"""Max-stable random field built from exponential martingales.

The field is

    eta(s1, s2) = max_i exp{W1_i(beta s1) + W2_i(beta s2) - beta(|s1| + |s2|)/2} / Gamma_i

with ``Gamma_i`` the partial sums of standard exponentials and ``W1_i``, ``W2_i``
independent double-sided Brownian motions.  Only the first ``m_terms`` terms are
simulated.  All coordinates are km relative to the origin station.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field as dc_field

import numpy as np

logger = logging.getLogger(__name__)

#: Bound on ``|exponent|`` before ``exp``; keeps every value finite and positive.
EXPONENT_CLAMP = 700.0


@dataclass(frozen=True)
class EvalPoints:
    """Planar evaluation points with precomputed per-axis unique coordinates."""

    xy: np.ndarray
    xs: np.ndarray = dc_field(repr=False)
    x_index: np.ndarray = dc_field(repr=False)
    ys: np.ndarray = dc_field(repr=False)
    y_index: np.ndarray = dc_field(repr=False)

    @classmethod
    def from_xy(cls, xy) -> "EvalPoints":
        xy = np.array(xy, dtype=float).reshape(-1, 2)
        if not np.all(np.isfinite(xy)):
            raise ValueError("evaluation points must be finite")
        xs, x_index = np.unique(xy[:, 0], return_inverse=True)
        ys, y_index = np.unique(xy[:, 1], return_inverse=True)
        xy.setflags(write=False)
        return cls(xy, xs, x_index.ravel(), ys, y_index.ravel())

    def __len__(self) -> int:
        return len(self.xy)

    def rotated(self, degrees: float) -> "EvalPoints":
        """Rotate all points counter-clockwise about the origin."""
        degrees = float(degrees) % 360.0
        if degrees == 0.0:
            return self
        t = np.deg2rad(degrees)
        c, s = np.cos(t), np.sin(t)
        rot = np.array([[c, -s], [s, c]])
        return EvalPoints.from_xy(self.xy @ rot.T)


@dataclass(frozen=True)
class FieldParams:
    beta: float
    m_terms: int = 4
    rotation_deg: float = 0.0

    def __post_init__(self):
        if not (self.beta > 0 and np.isfinite(self.beta)):
            raise ValueError(f"beta must be positive, got {self.beta}")
        if int(self.m_terms) != self.m_terms or self.m_terms < 1:
            raise ValueError(f"m_terms must be a positive integer, got {self.m_terms}")


@dataclass(frozen=True)
class FieldSample:
    """One realization (or a batch, leading axis = draw) of the field."""

    eta: np.ndarray
    seed: int | None
    m_terms: int
    n_clamped: int = 0


def double_sided_bm(coords, rng, size: int | None = None) -> np.ndarray:
    """Evaluate a double-sided Brownian motion at sorted coordinates.

    Positive coordinates follow one path started at 0, negative coordinates an
    independent path evaluated at ``|s|``.  ``W(0) = 0``.

    Parameters
    ----------
    coords : array_like
        Ascending coordinates, may straddle 0.
    rng : numpy.random.Generator
    size : int, optional
        Number of independent paths; adds a leading axis to the result.
    """
    coords = np.asarray(coords, dtype=float)
    lead = () if size is None else (int(size),)
    out = np.zeros(lead + coords.shape)
    for side in (coords > 0, coords < 0):
        idx = np.flatnonzero(side)
        if idx.size == 0:
            continue
        dist = np.abs(coords[idx])
        order = np.argsort(dist, kind="stable")
        gaps = np.diff(dist[order], prepend=0.0)
        steps = rng.standard_normal(lead + (idx.size,)) * np.sqrt(gaps)
        out[..., idx[order]] = np.cumsum(steps, axis=-1)
    return out


def spectral_value(point, w1, w2, beta: float):
    """``exp{W1(beta s1) + W2(beta s2) - beta(|s1| + |s2|)/2}``.

    ``w1`` and ``w2`` are the Brownian values already evaluated at ``beta*s1``
    and ``beta*s2``.
    """
    s1, s2 = np.asarray(point, dtype=float)[..., 0], np.asarray(point, dtype=float)[..., 1]
    return np.exp(w1 + w2 - beta * (np.abs(s1) + np.abs(s2)) / 2.0)


def simulate_eta(points: EvalPoints, params: FieldParams, randomness=None,
                 size: int | None = None) -> FieldSample:
    """Simulate the truncated max-stable field at ``points``.

    Terms are drawn one after another from the same generator, so for a fixed
    seed the first ``m`` terms do not depend on ``params.m_terms``; raising
    ``m_terms`` can only increase every value.

    Parameters
    ----------
    points : EvalPoints
    params : FieldParams
    randomness : int, numpy.random.Generator or None
    size : int, optional
        Number of independent realizations.  ``eta`` then has shape
        ``(size, len(points))``.
    """
    seed = randomness if isinstance(randomness, (int, np.integer)) else None
    rng = np.random.default_rng(randomness)
    pts = points.rotated(params.rotation_deg)
    beta = float(params.beta)
    lead = () if size is None else (int(size),)

    drift = -beta * (np.abs(pts.xy[:, 0]) + np.abs(pts.xy[:, 1])) / 2.0
    gamma_sum = np.zeros(lead + (1,))
    eta = np.zeros(lead + (len(pts),))
    n_clamped = 0
    for _ in range(int(params.m_terms)):
        gamma_sum = gamma_sum + rng.standard_exponential(lead + (1,))
        w1 = double_sided_bm(beta * pts.xs, rng, size)
        w2 = double_sided_bm(beta * pts.ys, rng, size)
        expo = w1[..., pts.x_index] + w2[..., pts.y_index] + drift
        over = np.abs(expo) > EXPONENT_CLAMP
        if over.any():
            n_clamped += int(over.sum())
            expo = np.clip(expo, -EXPONENT_CLAMP, EXPONENT_CLAMP)
        np.maximum(eta, np.exp(expo) / gamma_sum, out=eta)
    if n_clamped:
        logger.warning("spectral exponent clamped %d times", n_clamped)
    return FieldSample(eta=eta, seed=seed, m_terms=int(params.m_terms), n_clamped=n_clamped)


def to_gpd_margins(eta):
    """Map standard Frechet values to the standard Pareto law ``1 - 1/x``."""
    eta = np.asarray(eta, dtype=float)
    # -expm1(-1/eta) = 1 - exp(-1/eta) without cancellation for large eta
    return 1.0 / -np.expm1(-1.0 / eta)


def to_local_margins(xi, gamma: float, scale, shift):
    """``scale * (xi**gamma - 1)/gamma + shift``; log form as gamma -> 0."""
    xi = np.asarray(xi, dtype=float)
    log_xi = np.log(xi)
    if abs(gamma) < 1e-8:
        # series of (e^{g L} - 1)/g about g = 0
        growth = log_xi * (1.0 + gamma * log_xi / 2.0)
    else:
        growth = np.expm1(gamma * log_xi) / gamma
    return np.asarray(scale) * growth + np.asarray(shift)
