"""One simulated day of areal rainfall.

A random observed day is combined with one realization of the transformed
max-stable field: stations whose observation exceeds their shift are
extreme, every Triangle touching an extreme station is extreme, and mesh
vertices are filled either from the observations (linear interpolation) or
from the field.
"""
from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .field import EvalPoints, FieldParams, simulate_eta, to_gpd_margins, to_local_margins
from .mesh import EDGE, INTERIOR, STATION, TriMesh, integrate_pwl, interpolate_station_field

OBSERVED_STATION = "observed-station"
SIMULATED_STATION = "simulated-station"
EDGE_INTERPOLATED = "edge-interpolated"
TRIANGLE_INTERPOLATED = "triangle-interpolated"
SIMULATED = "simulated"

SUMMARY_FIELDS = ("sim_index", "source_day", "areal_avg_mm", "total_mm_km2",
                  "n_extreme_stations", "n_extreme_triangles", "max_vertex_mm")


@dataclass(frozen=True)
class DayField:
    day_index: int
    station_extreme: np.ndarray
    triangle_extreme: np.ndarray
    vertex_values: np.ndarray
    vertex_source: np.ndarray
    total: float
    areal_avg: float


def classify(row, margins) -> np.ndarray:
    """Extreme iff the observation is strictly above the station shift."""
    return np.asarray(row, dtype=float) > np.asarray(margins.shift)


def simulated_vertices(mesh: TriMesh, flags) -> np.ndarray:
    """Vertices whose interpolation support contains an extreme station.

    For a station this is the station itself, for an Edge vertex its two
    endpoints and for an interior vertex the three corners of its Triangle,
    which is exactly the rule table for extreme Triangles.
    """
    flags = np.asarray(flags, dtype=bool)
    if not flags.any():
        return np.zeros(mesh.n_vertices, dtype=bool)
    return (mesh.bary[:, flags] > 0).any(axis=1)


def assign_vertex_values(mesh: TriMesh, flags, row, margins, eta, gamma: float | None = None):
    """Fill all mesh vertices for one day.

    Returns ``(values, sources)``.  ``eta`` holds one field realization at every
    mesh vertex; it is only read where a value has to be simulated.
    """
    gamma = margins.gamma_pooled if gamma is None else gamma
    sim = simulated_vertices(mesh, flags)
    values = interpolate_station_field(mesh, row)
    if sim.any():
        xi = to_gpd_margins(np.asarray(eta, dtype=float)[sim])
        scale = interpolate_station_field(mesh, margins.scale)[sim]
        shift = interpolate_station_field(mesh, margins.shift)[sim]
        values[sim] = to_local_margins(xi, gamma, scale, shift)
    sources = np.empty(mesh.n_vertices, dtype=object)
    kind = mesh.vertex_kind
    sources[kind == STATION] = OBSERVED_STATION
    sources[kind == EDGE] = EDGE_INTERPOLATED
    sources[kind == INTERIOR] = TRIANGLE_INTERPOLATED
    sources[sim & (kind == STATION)] = SIMULATED_STATION
    sources[sim & (kind != STATION)] = SIMULATED
    return values, sources


class DayEngine:
    """Precomputed state for simulating many days from one fitted model.

    Each simulated day is a pure function of ``(seed, replicate, index)``.
    """

    def __init__(self, panel_values, margins, mesh: TriMesh, params: FieldParams,
                 seed: int = 0, replicate: int = 0):
        self.values = np.asarray(getattr(panel_values, "values", panel_values), dtype=float)
        if self.values.shape[1] != mesh.n_stations:
            raise ValueError("panel and mesh disagree on the number of stations")
        self.margins = margins
        self.mesh = mesh
        self.params = params
        self.seed = int(seed)
        self.replicate = int(replicate)
        self.points = EvalPoints.from_xy(mesh.vertex_xy).rotated(params.rotation_deg)
        # rotation already applied to the points
        self._unrotated = FieldParams(params.beta, params.m_terms, 0.0)

    def with_replicate(self, replicate: int) -> "DayEngine":
        other = object.__new__(DayEngine)
        other.__dict__.update(self.__dict__)
        other.replicate = int(replicate)
        return other

    def rng(self, index: int) -> np.random.Generator:
        ss = np.random.SeedSequence(self.seed, spawn_key=(self.replicate, int(index)))
        return np.random.default_rng(ss)

    def _day(self, index: int, need_eta: bool = False):
        rng = self.rng(index)
        day = int(rng.integers(len(self.values)))
        row = self.values[day]
        flags = classify(row, self.margins)
        eta = None
        # the field is drawn after the day, so skipping it never shifts other draws
        if flags.any() or need_eta:
            eta = simulate_eta(self.points, self._unrotated, rng).eta
        values, sources = assign_vertex_values(self.mesh, flags, row, self.margins, eta)
        return day, flags, values, sources, eta

    def simulate(self, index: int) -> DayField:
        return self.field_snapshot(index)[0]

    def field_snapshot(self, index: int) -> tuple[DayField, np.ndarray | None]:
        """The simulated day and the field realization behind it."""
        day, flags, values, sources, eta = self._day(index, need_eta=True)
        total = integrate_pwl(self.mesh, values)
        tri_ext = flags[self.mesh.triangles].any(axis=1)
        field = DayField(day, flags, tri_ext, values, sources, total, total / self.mesh.total_area)
        return field, eta

    def summary(self, index: int) -> tuple:
        day, flags, values, _, _ = self._day(index)
        total = integrate_pwl(self.mesh, values)
        n_tri = int(flags[self.mesh.triangles].any(axis=1).sum())
        return (int(index), day, total / self.mesh.total_area, total,
                int(flags.sum()), n_tri, float(values.max()))

    def run_range(self, start: int, stop: int) -> np.ndarray:
        return np.array([self.summary(i) for i in range(start, stop)], dtype=float).reshape(-1, 7)

    def run(self, n_days: int, workers: int = 1, chunk: int = 2000) -> np.ndarray:
        """Summaries for indices ``0 .. n_days-1`` in index order (see ``SUMMARY_FIELDS``)."""
        bounds = [(s, min(s + chunk, n_days)) for s in range(0, n_days, chunk)]
        if workers <= 1 or len(bounds) <= 1:
            parts = [self.run_range(a, b) for a, b in bounds]
        else:
            with ProcessPoolExecutor(max_workers=workers, initializer=_init_worker,
                                     initargs=(self,)) as pool:
                parts = list(pool.map(_worker_range, bounds))
        return np.concatenate(parts) if parts else np.zeros((0, 7))


_ENGINE: DayEngine | None = None


def _init_worker(engine: DayEngine) -> None:
    global _ENGINE
    _ENGINE = engine


def _worker_range(bounds) -> np.ndarray:
    return _ENGINE.run_range(*bounds)


def simulate_day(panel, margins, mesh: TriMesh, params: FieldParams, seed: int = 0,
                 index: int = 0, replicate: int = 0) -> DayField:
    return DayEngine(panel, margins, mesh, params, seed, replicate).simulate(index)
