"""Experiment driver: fits, day simulation, return-period quantiles and ARF."""
from __future__ import annotations

import datetime as dt
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import data_io
from .data_io import RainPanel, StationCatalog
from .day_engine import DayEngine
from .dependence import DependenceFit, fit_dependence
from .field import EvalPoints, FieldParams, simulate_eta, to_gpd_margins, to_local_margins
from .margins import (DEFAULT_K, MarginalFit, _log_moments, _scale_from, fit_margins,
                      kth_largest, return_level)
from .mesh import DEFAULT_D, TriMesh, build_mesh, delaunay_triangles

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ExperimentConfig:
    k: int = DEFAULT_K
    d: int = DEFAULT_D
    m_terms: int = 4
    n_days_sim: int = 91_000
    return_period_days: int = 9_100
    n_replicates: int = 60
    master_seed: int = 0
    rotation_deg: float = 0.0
    beta_override: float | None = None
    workers: int = 1
    stations: str | None = None
    rain: str | None = None
    triangles: str | None = None
    origin: str | None = None
    out_dir: str = "."
    hist_bins: int = 10

    def __post_init__(self):
        for name in ("k", "d", "m_terms", "n_days_sim", "return_period_days", "n_replicates",
                     "workers", "hist_bins"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")
        if self.n_days_sim % self.return_period_days:
            raise ValueError(f"n_days_sim={self.n_days_sim} is not a multiple of "
                             f"return_period_days={self.return_period_days}")
        if self.beta_override is not None and not self.beta_override > 0:
            raise ValueError("beta_override must be positive")


def extract_return_quantile(totals, return_period_days: int) -> float:
    """The r-th largest value, ``r = len(totals) / return_period_days``."""
    x = np.asarray(totals, dtype=float).ravel()
    if x.size == 0 or x.size % return_period_days:
        raise ValueError(f"sample size {x.size} is not a positive multiple of {return_period_days}")
    r = x.size // return_period_days
    return float(np.partition(x, x.size - r)[x.size - r])


def avg_series_return_level(panel, k: int, gamma_pooled: float, return_period_days: int) -> float:
    """Return level of the cross-station mean daily series with the shape fixed."""
    values = np.asarray(getattr(panel, "values", panel), dtype=float)
    series = values.mean(axis=1)
    m1, _, x_ref = _log_moments(series, k)
    scale = _scale_from(m1, x_ref, gamma_pooled)
    if not scale > 0:
        raise ValueError(f"nonpositive scale {scale} for the station-average series")
    shift = kth_largest(series, k)
    return return_level(gamma_pooled, scale, shift, k, len(series), 1.0 / return_period_days)


def station_return_levels(margins: MarginalFit, return_period_days: int) -> np.ndarray:
    """Per-station levels with the pooled shape and local scale and shift."""
    p = 1.0 / return_period_days
    return np.array([return_level(margins.gamma_pooled, a, b, margins.k, margins.n, p)
                     for a, b in zip(margins.scale, margins.shift)])


@dataclass
class Model:
    """Inputs and fits shared by all replicates."""

    catalog: StationCatalog
    panel: RainPanel
    mesh: TriMesh
    margins: MarginalFit
    dependence: DependenceFit | None
    beta: float

    @classmethod
    def fit(cls, catalog, panel, triangles=None, *, k=DEFAULT_K, d=DEFAULT_D,
            beta_override=None) -> "Model":
        source = "file"
        if triangles is None:
            triangles, source = delaunay_triangles(catalog), "delaunay"
            logger.info("no Triangle file given; using Delaunay triangulation")
        mesh = build_mesh(catalog, triangles, d, source=source)
        margins = fit_margins(panel, k, catalog.ids)
        dep = fit_dependence(panel, catalog, k)
        beta = dep.beta_hat if beta_override is None else float(beta_override)
        return cls(catalog, panel, mesh, margins, dep, beta)

    def engine(self, config: ExperimentConfig, beta=None, rotation_deg=None) -> DayEngine:
        params = FieldParams(self.beta if beta is None else beta, config.m_terms,
                             config.rotation_deg if rotation_deg is None else rotation_deg)
        return DayEngine(self.panel, self.margins, self.mesh, params, config.master_seed)


def load_model(config: ExperimentConfig) -> Model:
    if not config.stations or not config.rain:
        raise ValueError("stations and rain paths are required")
    catalog = data_io.load_stations(config.stations, config.origin)
    panel = data_io.load_rainfall(config.rain, catalog)
    tris = data_io.load_triangles(config.triangles, catalog) if config.triangles else None
    return Model.fit(catalog, panel, tris, k=config.k, d=config.d,
                     beta_override=config.beta_override)


@dataclass
class QuantileReport:
    replicate_quantiles: np.ndarray
    station_quantiles: np.ndarray
    avg_series_quantile: float
    beta: float
    gamma_pooled: float
    rotation_deg: float
    n_invariant_violations: int = 0
    hist: list = field(default_factory=list)

    @property
    def mean(self) -> float:
        return float(np.mean(self.replicate_quantiles))

    @property
    def std(self) -> float:
        q = self.replicate_quantiles
        return float(np.std(q, ddof=1)) if q.size > 1 else 0.0

    @property
    def min(self) -> float:
        return float(np.min(self.replicate_quantiles))

    @property
    def max(self) -> float:
        return float(np.max(self.replicate_quantiles))

    @property
    def mean_station_quantile(self) -> float:
        return float(np.mean(self.station_quantiles))

    @property
    def arf(self) -> float:
        return self.mean / self.mean_station_quantile

    @property
    def arf_avg_series(self) -> float:
        return self.avg_series_quantile / self.mean_station_quantile

    def lines(self) -> list[str]:
        return [
            f"n_replicates={self.replicate_quantiles.size}",
            f"beta={self.beta:.6f}",
            f"gamma_pooled={self.gamma_pooled:.6f}",
            f"rotation_deg={self.rotation_deg:g}",
            f"mean_mm={self.mean:.4f}",
            f"std_mm={self.std:.4f}",
            f"min_mm={self.min:.4f}",
            f"max_mm={self.max:.4f}",
            f"mean_station_quantile_mm={self.mean_station_quantile:.4f}",
            f"arf={self.arf:.4f}",
            f"avg_series_quantile_mm={self.avg_series_quantile:.4f}",
            f"arf_avg_series={self.arf_avg_series:.4f}",
            f"invariant_violations={self.n_invariant_violations}",
        ]


def histogram(values, bins: int = 10) -> list[tuple[float, float, int]]:
    counts, edges = np.histogram(np.asarray(values, dtype=float), bins=bins)
    return [(float(edges[i]), float(edges[i + 1]), int(c)) for i, c in enumerate(counts)]


def simulate_replicates(model: Model, config: ExperimentConfig, *, beta=None,
                        rotation_deg=None, n_replicates=None):
    """Areal quantile of each replicate batch plus the count of invariant violations."""
    engine = model.engine(config, beta, rotation_deg)
    n_rep = config.n_replicates if n_replicates is None else n_replicates
    quantiles, bad = [], 0
    for r in range(n_rep):
        rows = engine.with_replicate(r).run(config.n_days_sim, config.workers)
        bad += int(np.sum(rows[:, 2] > rows[:, 6] + 1e-9 * np.abs(rows[:, 6])))
        quantiles.append(extract_return_quantile(rows[:, 2], config.return_period_days))
        logger.info("replicate %d: %.3f mm", r, quantiles[-1])
    return np.array(quantiles), bad


def run_experiment(config: ExperimentConfig, model: Model | None = None) -> QuantileReport:
    model = load_model(config) if model is None else model
    beta = model.beta if config.beta_override is None else config.beta_override
    q, bad = simulate_replicates(model, config, beta=beta)
    return QuantileReport(
        replicate_quantiles=q,
        station_quantiles=station_return_levels(model.margins, config.return_period_days),
        avg_series_quantile=avg_series_return_level(model.panel, config.k,
                                                    model.margins.gamma_pooled,
                                                    config.return_period_days),
        beta=beta,
        gamma_pooled=model.margins.gamma_pooled,
        rotation_deg=config.rotation_deg,
        n_invariant_violations=bad,
        hist=histogram(q, config.hist_bins),
    )


SENSITIVITY_HEADER = ("beta", "rotation_deg", "n_replicates", "mean_mm", "std_mm",
                      "min_mm", "max_mm", "arf")


def sensitivity_run(config: ExperimentConfig, betas, rotations, model: Model | None = None,
                    n_replicates: int = 10) -> list[tuple]:
    """One summary row per (beta, rotation) pair, fits shared."""
    model = load_model(config) if model is None else model
    mean_station = float(np.mean(station_return_levels(model.margins, config.return_period_days)))
    rows = []
    for beta in betas:
        for rot in rotations:
            q, _ = simulate_replicates(model, config, beta=beta, rotation_deg=rot,
                                       n_replicates=n_replicates)
            std = float(np.std(q, ddof=1)) if q.size > 1 else 0.0
            rows.append((float(beta), float(rot), int(q.size), float(q.mean()), std,
                         float(q.min()), float(q.max()), float(q.mean()) / mean_station))
    return rows


def fall_days(n_days: int, first_year: int = 1971) -> tuple[str, ...]:
    """Consecutive September-November dates, 91 per year."""
    days = []
    year = first_year
    while len(days) < n_days:
        d = dt.date(year, 9, 1)
        while d.month <= 11 and len(days) < n_days:
            days.append(d.isoformat())
            d += dt.timedelta(days=1)
        year += 1
    return tuple(days)


def synth_generate(catalog, beta: float, gamma: float, scale, shift, n_days: int,
                   seed: int = 0, *, exceed_prob: float = 0.08, dry_prob: float = 0.5,
                   bulk_power: float = 2.0, m_terms: int = 100) -> RainPanel:
    """Synthetic panel whose tails follow the field model with known parameters.

    Each day the field is simulated at the stations and mapped to
    ``u = exceed_prob * xi`` (``xi`` standard Pareto).  Where ``u >= 1`` the
    value is ``shift + scale * (u**gamma - 1)/gamma``, so station ``j`` exceeds
    its ``shift`` with probability ``exceed_prob`` and the excesses are GPD with
    ``(gamma, scale)``.  Below the threshold a fixed bulk model applies: the
    day is dry (0 mm) with probability ``dry_prob``, otherwise the depth is
    ``shift * w**bulk_power`` with ``w`` in (0, 1) rising linearly in ``u``.
    Because the bulk is a monotone function of the same field, moderate
    rainfall is spatially coherent.  The bulk exists only to exercise the tail
    estimators; it is not a rainfall model.
    """
    if not 0 < exceed_prob < 1 or not 0 <= dry_prob < 1 - exceed_prob:
        raise ValueError("need 0 < exceed_prob < 1 and 0 <= dry_prob < 1 - exceed_prob")
    n_st = len(catalog)
    scale = np.broadcast_to(np.asarray(scale, dtype=float), (n_st,))
    shift = np.broadcast_to(np.asarray(shift, dtype=float), (n_st,))
    if n_days == 0:
        return RainPanel((), np.zeros((0, n_st)))
    eta = simulate_eta(EvalPoints.from_xy(catalog.xy), FieldParams(beta, m_terms), seed,
                       size=n_days).eta
    u = exceed_prob * to_gpd_margins(eta)
    shifts = np.broadcast_to(shift, u.shape)
    tail = u >= 1.0
    values = np.zeros_like(u)
    values[tail] = to_local_margins(u[tail], gamma, np.broadcast_to(scale, u.shape)[tail],
                                    shifts[tail])
    # P(u < u_dry) = dry_prob since P(u > y) = exceed_prob / y
    u_dry = exceed_prob / (1.0 - dry_prob)
    wet = ~tail & (u >= u_dry)
    w = (u[wet] - u_dry) / (1.0 - u_dry)
    values[wet] = shifts[wet] * w ** bulk_power
    return RainPanel(fall_days(n_days), values)


def write_margins(path, margins: MarginalFit) -> None:
    rows = [(s, data_io.fmt(g), data_io.fmt(a), data_io.fmt(b), margins.k)
            for s, g, a, b in zip(margins.station_ids, margins.gamma_local, margins.scale,
                                  margins.shift)]
    data_io.write_table(path, ("station_id", "gamma_local", "scale_mm", "shift_mm", "k"), rows,
                        [f"gamma_pooled={margins.gamma_pooled:.6f}"])


def write_pairs(path, dep: DependenceFit, catalog) -> None:
    rows = [(catalog.ids[p.p], catalog.ids[p.q], data_io.fmt(p.h, 4), data_io.fmt(p.l11),
             data_io.fmt(p.beta_pq), int(p.included)) for p in dep.pairs]
    data_io.write_table(path, ("p_id", "q_id", "h_km", "l11", "beta_pq", "included"), rows,
                        [f"beta_hat={dep.beta_hat:.6f} q25={dep.beta_q25:.6f} "
                         f"q75={dep.beta_q75:.6f} n_excluded={dep.n_excluded}"])


def write_totals(path, rows: np.ndarray) -> None:
    out = [(int(r[0]), int(r[1]), f"{r[2]:.6f}", f"{r[3]:.4f}", int(r[4]), int(r[5])) for r in rows]
    data_io.write_table(path, ("sim_index", "source_day", "areal_avg_mm", "total_mm_km2",
                               "n_extreme_stations", "n_extreme_triangles"), out)


def write_report(out_dir, report: QuantileReport) -> None:
    out = Path(out_dir)
    data_io.write_table(out / "quantiles.csv", ("replicate", "quantile_mm"),
                        [(i, f"{q:.6f}") for i, q in enumerate(report.replicate_quantiles)])
    data_io.write_table(out / "hist.csv", ("bin_left_mm", "bin_right_mm", "count"),
                        [(f"{a:.6f}", f"{b:.6f}", c) for a, b, c in report.hist])
    (out / "report.txt").write_text("\n".join(report.lines()) + "\n", encoding="utf-8")


def write_mesh(path, mesh: TriMesh, ids=None) -> None:
    from .mesh import provenance_label
    rows = [(v, repr(float(x)), repr(float(y)), provenance_label(mesh, v, ids))
            for v, (x, y) in enumerate(mesh.vertex_xy)]
    data_io.write_table(path, ("vertex_id", "x_km", "y_km", "provenance"), rows,
                        [f"source={mesh.source}", f"total_area_km2={mesh.total_area:.6f}"])


def write_field(path, mesh: TriMesh, eta, xi, rain) -> None:
    rows = [(repr(float(x)), repr(float(y)), f"{e:.6g}", f"{s:.6g}", f"{r:.3f}")
            for (x, y), e, s, r in zip(mesh.vertex_xy, eta, xi, rain)]
    data_io.write_table(path, ("x_km", "y_km", "eta", "xi", "rain_mm"), rows)


__all__ = [
    "ExperimentConfig", "Model", "QuantileReport", "avg_series_return_level",
    "extract_return_quantile", "load_model", "run_experiment", "sensitivity_run",
    "station_return_levels", "synth_generate",
]
