"""Monte Carlo checks of the field simulator against its closed-form laws."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import stats

from .dependence import bivariate_cdf_eq7, pair_beta, std_normal_cdf
from .field import EvalPoints, FieldParams, simulate_eta

#: Anderson-Darling 1% critical value for a fully specified null.
AD_CRIT_1PCT = 3.857


@dataclass(frozen=True)
class Check:
    name: str
    statistic: float
    threshold: float
    passed: bool
    detail: str = ""

    def line(self) -> str:
        tag = "PASS" if self.passed else "FAIL"
        extra = f" ({self.detail})" if self.detail else ""
        return f"[{tag}] {self.name}: {self.statistic:.6g} vs {self.threshold:.6g}{extra}"


def frechet_cdf(x):
    x = np.asarray(x, dtype=float)
    with np.errstate(divide="ignore"):
        return np.where(x > 0, np.exp(-1.0 / np.where(x > 0, x, 1.0)), 0.0)


def origin_frechet(n: int = 100_000, seed: int = 1, threshold: float = 0.006) -> Check:
    """KS distance of single-term draws at the origin to ``exp(-1/x)``."""
    eta = simulate_eta(EvalPoints.from_xy([[0.0, 0.0]]), FieldParams(1.0, 1), seed,
                       size=n).eta[:, 0]
    ks = stats.kstest(eta, frechet_cdf).statistic
    return Check("origin Frechet KS", ks, threshold, ks < threshold)


def pair_points(h: float, offset=(0.0, 0.0)) -> np.ndarray:
    """Two sites at Manhattan distance ``h`` placed symmetrically about ``offset``."""
    off = np.asarray(offset, dtype=float)
    return np.array([[-h / 4, -h / 4], [h / 4, h / 4]]) + off


def bivariate_agreement(beta: float, h: float, n: int = 200_000, m_terms: int = 100,
                        seed: int = 2, offset=(0.0, 0.0), n_sigma: float = 3.0) -> Check:
    """Empirical ``P(eta(u) <= 1, eta(v) <= 1)`` against ``exp{-2 Phi(sqrt(beta h)/2)}``."""
    pts = EvalPoints.from_xy(pair_points(h, offset))
    eta = simulate_eta(pts, FieldParams(beta, m_terms), seed, size=n).eta
    p_hat = float(np.mean(np.all(eta <= 1.0, axis=1)))
    p = float(np.exp(-2.0 * std_normal_cdf(np.sqrt(beta * h) / 2.0)))
    sigma = np.sqrt(p * (1 - p) / n)
    z = (p_hat - p) / sigma
    name = f"bivariate law beta={beta:g} h={h:g} offset=({offset[0]:g},{offset[1]:g})"
    return Check(name, abs(z), n_sigma, abs(z) <= n_sigma,
                 f"empirical {p_hat:.5f}, exact {p:.5f}")


def truncation_ks(points, beta: float = 0.05, m_small: int = 4, m_large: int = 50,
                  n: int = 50_000, seed: int = 3, threshold: float = 0.02) -> Check:
    """Two-sample KS between field maxima over ``points`` at two truncation levels."""
    pts = points if isinstance(points, EvalPoints) else EvalPoints.from_xy(points)
    ss = np.random.SeedSequence(seed).spawn(2)
    a = simulate_eta(pts, FieldParams(beta, m_small), np.random.default_rng(ss[0]), size=n).eta
    b = simulate_eta(pts, FieldParams(beta, m_large), np.random.default_rng(ss[1]), size=n).eta
    ks = stats.ks_2samp(a.max(axis=1), b.max(axis=1)).statistic
    return Check(f"truncation KS m={m_small} vs m={m_large}", ks, threshold, ks < threshold)


def beta_round_trip(n: int = 100, seed: int = 4, tol: float = 1e-6) -> Check:
    rng = np.random.default_rng(seed)
    worst = 0.0
    for beta, h in zip(rng.uniform(0.001, 2.0, n), rng.uniform(0.1, 100.0, n)):
        l11 = 2.0 * std_normal_cdf(np.sqrt(beta * h) / 2.0)
        worst = max(worst, abs(pair_beta(l11, h) - beta))
    return Check("beta round trip max error", worst, tol, worst <= tol)


def anderson_darling(u) -> float:
    """A^2 for probability-integral-transformed data under a fully specified null."""
    u = np.sort(np.clip(np.asarray(u, dtype=float), 1e-300, 1 - 1e-16))
    n = u.size
    i = np.arange(1, n + 1)
    return float(-n - np.mean((2 * i - 1) * (np.log(u) + np.log1p(-u[::-1]))))


def gpd_cdf(x, gamma: float, scale: float, shift: float):
    return stats.genpareto.cdf(x, gamma, loc=shift, scale=scale)


def bivariate_cdf_check(beta: float, h: float, x: float, y: float, n: int, seed: int) -> Check:
    """Joint CDF at ``(e**x, e**y)`` rather than (1, 1)."""
    pts = EvalPoints.from_xy(pair_points(h))
    eta = simulate_eta(pts, FieldParams(beta, 100), seed, size=n).eta
    p_hat = float(np.mean((eta[:, 0] <= np.exp(x)) & (eta[:, 1] <= np.exp(y))))
    p = bivariate_cdf_eq7(x, y, h, beta)
    z = (p_hat - p) / np.sqrt(p * (1 - p) / n)
    return Check(f"joint cdf beta={beta:g} h={h:g} at ({x:g},{y:g})", abs(z), 3.0, abs(z) <= 3.0)


def run_suite(n_draws: int = 20_000, seed: int = 0) -> list[Check]:
    """Reduced-size versions of the field checks for the command line."""
    out = [origin_frechet(n_draws, seed + 1, threshold=1.36 / np.sqrt(n_draws) * 1.5)]
    for beta, h in ((0.05, 5.0), (0.05, 50.0), (1.0, 1.0)):
        out.append(bivariate_agreement(beta, h, n_draws, 100, seed + 2))
    out.append(bivariate_cdf_check(0.2, 10.0, 0.5, -0.3, n_draws, seed + 5))
    out.append(beta_round_trip(100, seed + 4))
    return out
