"""Triangle mesh over the stations with d-fold subdivision.

Each station Triangle is split into ``d**2`` small triangles by lines parallel
to its Edges.  Mesh vertices are identified combinatorially (station, Edge and
lattice fraction, or Triangle and lattice point) so that Triangles sharing an
Edge share the same vertex objects along it.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial import Delaunay

from .data_io import DataError, triangle_area

STATION, EDGE, INTERIOR = 0, 1, 2
DEFAULT_D = 5


@dataclass(frozen=True)
class TriMesh:
    station_xy: np.ndarray
    triangles: np.ndarray          # (T, 3) station indices
    d: int
    vertex_xy: np.ndarray          # (V, 2)
    vertex_kind: np.ndarray        # STATION / EDGE / INTERIOR
    provenance: tuple              # per vertex: ("station", s) | ("edge", lo, hi, j) | ("interior", t, (a, b, c))
    bary: np.ndarray               # (V, n_stations) interpolation weights
    support: np.ndarray            # (V, 3) station indices with nonzero weight, padded
    support_w: np.ndarray          # (V, 3) matching weights, padded with 0
    small: np.ndarray              # (T*d*d, 3) vertex indices
    small_area: np.ndarray
    small_parent: np.ndarray
    total_area: float
    source: str = "file"

    @property
    def n_vertices(self) -> int:
        return len(self.vertex_xy)

    @property
    def n_stations(self) -> int:
        return len(self.station_xy)


def _overlap(a: np.ndarray, b: np.ndarray, tol: float) -> bool:
    """True if the interiors of triangles ``a`` and ``b`` intersect."""
    for tri in (a, b):
        for i in range(3):
            e = tri[(i + 1) % 3] - tri[i]
            axis = np.array([-e[1], e[0]])
            pa, pb = a @ axis, b @ axis
            slack = tol * np.linalg.norm(axis)
            if pa.max() <= pb.min() + slack or pb.max() <= pa.min() + slack:
                return False
    return True


def check_overlaps(station_xy, triangles) -> None:
    xy = np.asarray(station_xy, dtype=float)
    tris = [xy[list(t)] for t in triangles]
    lo = np.array([t.min(axis=0) for t in tris])
    hi = np.array([t.max(axis=0) for t in tris])
    tol = 1e-9 * max(np.abs(xy).max(), 1.0)
    for i in range(len(tris)):
        cand = np.flatnonzero(np.all(lo[i + 1:] < hi[i], axis=1) & np.all(hi[i + 1:] > lo[i], axis=1))
        for j in cand + i + 1:
            if _overlap(tris[i], tris[j], tol):
                raise DataError(f"Triangles {i} and {j} overlap")


def delaunay_triangles(catalog) -> list[tuple[int, int, int]]:
    """Fallback Triangulation of all stations."""
    tri = Delaunay(np.asarray(catalog.xy, dtype=float))
    return [tuple(sorted(int(v) for v in s)) for s in tri.simplices]


def build_mesh(catalog, triangles, d: int = DEFAULT_D, source: str = "file") -> TriMesh:
    """Subdivide every Triangle into ``d**2`` triangles and deduplicate vertices."""
    if int(d) != d or d < 1:
        raise ValueError(f"d must be a positive integer, got {d}")
    d = int(d)
    sxy = np.asarray(getattr(catalog, "xy", catalog), dtype=float)
    n_st = len(sxy)
    tris = np.array([tuple(int(v) for v in t) for t in triangles], dtype=int).reshape(-1, 3)
    if len(tris) == 0:
        raise DataError("no Triangles")
    for t in tris:
        if len(set(t)) != 3 or triangle_area(sxy[t]) <= 1e-12:
            raise DataError(f"degenerate Triangle {tuple(t)}")
    check_overlaps(sxy, tris)

    keys: dict = {}
    xy, kind, prov, bary = [], [], [], []

    def add(key, pos, k, w):
        keys[key] = len(xy)
        xy.append(pos)
        kind.append(k)
        prov.append(key)
        bary.append(w)

    for s in range(n_st):
        w = np.zeros(n_st)
        w[s] = 1.0
        add(("station", s), sxy[s], STATION, w)

    def vertex(t, corners, counts):
        nz = [(c, v) for c, v in zip(counts, corners) if c > 0]
        if len(nz) == 1:
            return keys[("station", nz[0][1])]
        if len(nz) == 2:
            (c1, v1), (c2, v2) = sorted(nz, key=lambda cv: cv[1])
            key = ("edge", v1, v2, c2)
            if key not in keys:
                w = np.zeros(n_st)
                w[v1], w[v2] = c1 / d, c2 / d
                add(key, w[v1] * sxy[v1] + w[v2] * sxy[v2], EDGE, w)
            return keys[key]
        key = ("interior", t, tuple(counts))
        w = np.zeros(n_st)
        for c, v in zip(counts, corners):
            w[v] = c / d
        add(key, w @ sxy, INTERIOR, w)
        return keys[key]

    small, parent = [], []
    for t, (a, b, c) in enumerate(tris):
        lattice = {}
        for i in range(d + 1):
            for j in range(d + 1 - i):
                lattice[i, j] = vertex(t, (a, b, c), (d - i - j, i, j))
        for i in range(d):
            for j in range(d - i):
                small.append((lattice[i, j], lattice[i + 1, j], lattice[i, j + 1]))
                parent.append(t)
                if i + j <= d - 2:
                    small.append((lattice[i + 1, j], lattice[i + 1, j + 1], lattice[i, j + 1]))
                    parent.append(t)

    vxy = np.array(xy)
    bary = np.array(bary)
    support = np.zeros((len(prov), 3), dtype=int)
    support_w = np.zeros((len(prov), 3))
    for v, key in enumerate(prov):
        corners = (key[1],) if key[0] == "station" else (
            key[1:3] if key[0] == "edge" else tuple(tris[key[1]]))
        support[v, :len(corners)] = corners
        support_w[v, :len(corners)] = bary[v, list(corners)]
    small = np.array(small, dtype=int)
    p0, p1, p2 = vxy[small[:, 0]], vxy[small[:, 1]], vxy[small[:, 2]]
    area = np.abs((p1[:, 0] - p0[:, 0]) * (p2[:, 1] - p0[:, 1])
                  - (p2[:, 0] - p0[:, 0]) * (p1[:, 1] - p0[:, 1])) / 2.0
    total = float(sum(triangle_area(sxy[t]) for t in tris))
    return TriMesh(sxy, tris, d, vxy, np.array(kind), tuple(prov), bary, support, support_w,
                   small, area, np.array(parent), total, source)


def interpolate_station_field(mesh: TriMesh, station_values) -> np.ndarray:
    """Piecewise-linear interpolation of one value per station to all vertices.

    Summed term by term in corner order, so the result does not depend on the
    BLAS in use.
    """
    x = np.asarray(station_values, dtype=float)
    terms = mesh.support_w * x[mesh.support]
    return (terms[:, 0] + terms[:, 1]) + terms[:, 2]


def integrate_pwl(mesh: TriMesh, vertex_values) -> float:
    """Exact integral (mm km^2) of the piecewise-linear field over the mesh."""
    v = np.asarray(vertex_values, dtype=float)
    s = mesh.small
    # np.sum uses pairwise summation, fixed order
    return float(np.sum(mesh.small_area * (v[s[:, 0]] + v[s[:, 1]] + v[s[:, 2]]) / 3.0))


def areal_average(total: float, mesh: TriMesh) -> float:
    if not mesh.total_area > 0:
        raise ValueError("mesh has no area")
    return total / mesh.total_area


def provenance_label(mesh: TriMesh, v: int, ids=None) -> str:
    name = (lambda s: ids[s]) if ids is not None else str
    p = mesh.provenance[v]
    if p[0] == "station":
        return f"station:{name(p[1])}"
    if p[0] == "edge":
        return f"edge:{name(p[1])}-{name(p[2])}:{p[3]}/{mesh.d}"
    return f"interior:T{p[1]}:{'/'.join(str(c) for c in p[2])}"
