"""CSV readers and writers for station catalogs, rainfall panels and Triangle lists."""
from __future__ import annotations

import csv
import datetime as dt
from dataclasses import dataclass
from pathlib import Path

import numpy as np


class DataError(ValueError):
    """Raised when an input file violates its schema or invariants."""


@dataclass(frozen=True)
class StationCatalog:
    """Station ids with planar positions in km, re-centered on ``origin_id``."""

    ids: tuple[str, ...]
    xy: np.ndarray
    origin_id: str

    def __post_init__(self):
        xy = np.array(self.xy, dtype=float).reshape(-1, 2)
        xy.setflags(write=False)
        object.__setattr__(self, "xy", xy)
        object.__setattr__(self, "ids", tuple(self.ids))
        if len(set(self.ids)) != len(self.ids):
            dup = next(s for s in self.ids if self.ids.count(s) > 1)
            raise DataError(f"duplicate station id {dup!r}")
        if len(self.ids) != len(xy):
            raise DataError("ids and positions differ in length")
        if len(self.ids) < 3:
            raise DataError(f"need at least 3 stations, got {len(self.ids)}")
        if not np.all(np.isfinite(xy)):
            raise DataError("station positions must be finite")
        if self.origin_id not in self.ids:
            raise DataError(f"origin {self.origin_id!r} is not a station")
        rel = xy - xy[0]
        scale = max(np.abs(rel).max(), 1.0)
        if np.linalg.matrix_rank(rel, tol=1e-9 * scale) < 2:
            raise DataError("station positions are collinear")

    def __len__(self) -> int:
        return len(self.ids)

    def index(self, station_id: str) -> int:
        try:
            return self.ids.index(station_id)
        except ValueError:
            raise DataError(f"unknown station id {station_id!r}") from None


@dataclass(frozen=True)
class RainPanel:
    """Daily rainfall depths in mm, one column per catalog station."""

    days: tuple[str, ...]
    values: np.ndarray

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        if values.ndim != 2:
            values = values.reshape(len(self.days), -1)
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "days", tuple(self.days))
        if values.shape[0] != len(self.days):
            raise DataError("number of day labels does not match panel rows")
        if not np.all(np.isfinite(values)):
            raise DataError("rainfall values must be finite")
        if np.any(values < 0):
            i, j = np.argwhere(values < 0)[0]
            raise DataError(f"negative rainfall on {self.days[i]} at column {j}")

    @property
    def n_days(self) -> int:
        return self.values.shape[0]

    @property
    def n_stations(self) -> int:
        return self.values.shape[1]


def _read_rows(path):
    path = Path(path)
    if not path.is_file():
        raise DataError(f"no such file: {path}")
    with open(path, newline="", encoding="utf-8") as fh:
        rows = [r for r in csv.reader(fh) if r and not r[0].startswith("#")]
    if not rows:
        raise DataError(f"{path}: empty file")
    return [c.strip() for c in rows[0]], [[c.strip() for c in r] for r in rows[1:]]


def load_stations(path, origin_id: str | None = None) -> StationCatalog:
    """Read ``station_id,x_km,y_km``; positions are shifted so the origin is (0, 0).

    The origin defaults to the first station in the file.
    """
    header, rows = _read_rows(path)
    if header != ["station_id", "x_km", "y_km"]:
        raise DataError(f"{path}: expected header station_id,x_km,y_km, got {','.join(header)}")
    ids, xy = [], []
    for lineno, row in enumerate(rows, start=2):
        try:
            sid, x, y = row
            xy.append((float(x), float(y)))
        except ValueError:
            raise DataError(f"{path}: unparsable row {lineno}: {row}") from None
        if sid in ids:
            raise DataError(f"{path}: duplicate station id {sid!r} at row {lineno}")
        ids.append(sid)
    if not ids:
        raise DataError(f"{path}: no stations")
    origin_id = ids[0] if origin_id is None else origin_id
    xy = np.array(xy, dtype=float)
    if origin_id not in ids:
        raise DataError(f"{path}: origin {origin_id!r} is not a station")
    xy = xy - xy[ids.index(origin_id)]
    return StationCatalog(tuple(ids), xy, origin_id)


def load_rainfall(path, catalog: StationCatalog) -> RainPanel:
    """Read a wide ``date,<id>...`` table and align its columns to ``catalog``."""
    header, rows = _read_rows(path)
    if not header or header[0] != "date":
        raise DataError(f"{path}: first column must be 'date'")
    cols = header[1:]
    if len(set(cols)) != len(cols):
        raise DataError(f"{path}: repeated station column")
    unknown = [c for c in cols if c not in catalog.ids]
    missing = [s for s in catalog.ids if s not in cols]
    if unknown:
        raise DataError(f"{path}: unknown station column(s) {unknown}")
    if missing:
        raise DataError(f"{path}: missing station column(s) {missing}")
    order = [cols.index(s) for s in catalog.ids]
    days, values = [], []
    for lineno, row in enumerate(rows, start=2):
        if len(row) != len(header):
            raise DataError(f"{path}: row {lineno} has {len(row)} fields, expected {len(header)}")
        day = row[0]
        try:
            dt.date.fromisoformat(day)
        except ValueError:
            raise DataError(f"{path}: bad date {day!r} at row {lineno}") from None
        vals = []
        for sid, cell in zip(cols, row[1:]):
            if cell == "":
                raise DataError(f"{path}: missing value on {day} at station {sid}")
            try:
                v = float(cell)
            except ValueError:
                raise DataError(f"{path}: unparsable value {cell!r} on {day} at station {sid}") from None
            if not np.isfinite(v):
                raise DataError(f"{path}: non-finite value on {day} at station {sid}")
            if v < 0:
                raise DataError(f"{path}: negative value {v} on {day} at station {sid}")
            vals.append(v)
        days.append(day)
        values.append([vals[i] for i in order])
    arr = np.array(values, dtype=float).reshape(len(days), len(catalog))
    return RainPanel(tuple(days), arr)


def load_triangles(path, catalog: StationCatalog) -> list[tuple[int, int, int]]:
    """Read ``v1,v2,v3`` rows of station ids into station-index triples."""
    header, rows = _read_rows(path)
    if header != ["v1", "v2", "v3"]:
        raise DataError(f"{path}: expected header v1,v2,v3")
    tris = []
    for lineno, row in enumerate(rows, start=2):
        if len(row) != 3:
            raise DataError(f"{path}: row {lineno} must have 3 station ids")
        if len(set(row)) != 3:
            raise DataError(f"{path}: repeated vertex in row {lineno}: {row}")
        idx = tuple(catalog.index(s) for s in row)
        if triangle_area(catalog.xy[list(idx)]) <= 1e-12:
            raise DataError(f"{path}: zero-area triangle in row {lineno}: {row}")
        tris.append(idx)
    return tris


def triangle_area(corners) -> float:
    (x0, y0), (x1, y1), (x2, y2) = np.asarray(corners, dtype=float)
    return abs((x1 - x0) * (y2 - y0) - (x2 - x0) * (y1 - y0)) / 2.0


def write_stations(path, catalog: StationCatalog) -> None:
    # repr() keeps the float round trip exact
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["station_id", "x_km", "y_km"])
        for sid, (x, y) in zip(catalog.ids, catalog.xy):
            w.writerow([sid, repr(float(x)), repr(float(y))])


def write_rainfall(path, panel: RainPanel, catalog: StationCatalog) -> None:
    """Write the panel at gauge resolution (0.1 mm)."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["date", *catalog.ids])
        for day, row in zip(panel.days, panel.values):
            w.writerow([day, *(f"{v:.1f}" for v in row)])


def write_triangles(path, triangles, catalog: StationCatalog) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["v1", "v2", "v3"])
        for t in triangles:
            w.writerow([catalog.ids[i] for i in t])


def write_table(path, header, rows, comments=()) -> None:
    """Write a CSV table followed by ``# key=value`` comment lines."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)
        for line in comments:
            fh.write(f"# {line}\n")


def fmt(x, digits: int = 6) -> str:
    if x is None:
        return ""
    return f"{x:.{digits}f}"
