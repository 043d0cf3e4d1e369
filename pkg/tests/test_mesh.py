from collections import Counter

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from arealext import mesh as ms
from arealext.data_io import DataError, StationCatalog, triangle_area


def _cat(xy):
    xy = np.asarray(xy, dtype=float)
    return StationCatalog(tuple(f"S{i}" for i in range(len(xy))), xy, "S0")


UNIT = _cat([[0, 0], [1, 0], [0, 1]])
SQUARE = _cat([[0, 0], [1, 0], [0, 1], [1, 1]])


@pytest.mark.parametrize("d, nv, nt", [(1, 3, 1), (2, 6, 4), (5, 21, 25)])
def test_single_triangle_counts(d, nv, nt):
    m = ms.build_mesh(UNIT, [(0, 1, 2)], d)
    assert (m.n_vertices, len(m.small)) == (nv, nt)


def test_shared_edge_vertices_owned_once():
    m = ms.build_mesh(SQUARE, [(0, 1, 2), (2, 1, 3)], 5)
    assert m.n_vertices == 36
    edge = [p for p in m.provenance if p[0] == "edge" and p[1:3] == (1, 2)]
    assert len(edge) == 4


def test_orientation_is_normalized():
    a = ms.build_mesh(SQUARE, [(0, 1, 2), (1, 3, 2)], 4)
    b = ms.build_mesh(SQUARE, [(2, 1, 0), (3, 2, 1)], 4)
    assert a.n_vertices == b.n_vertices == 25
    assert a.total_area == b.total_area == 1.0


def test_overlap_rejected():
    cat = _cat([[0, 0], [2, 0], [0, 2], [1, 1.5], [0.5, 0.5]])
    with pytest.raises(DataError, match="overlap"):
        ms.build_mesh(cat, [(0, 1, 2), (4, 1, 3)], 1)


def test_bad_d():
    with pytest.raises(ValueError):
        ms.build_mesh(UNIT, [(0, 1, 2)], 0)


def test_interpolation_examples():
    m = ms.build_mesh(UNIT, [(0, 1, 2)], 2)
    v = ms.interpolate_station_field(m, [2.0, 4.0, 7.0])
    mid = m.provenance.index(("edge", 0, 1, 1))
    assert v[mid] == 3.0
    assert np.all(ms.interpolate_station_field(m, [5.5] * 3) == 5.5)
    m3 = ms.build_mesh(UNIT, [(0, 1, 2)], 3)
    c = m3.provenance.index(("interior", 0, (1, 1, 1)))
    assert ms.interpolate_station_field(m3, [3.0, 6.0, 9.0])[c] == pytest.approx(6.0, abs=1e-14)
    np.testing.assert_allclose(m3.vertex_xy[c], [1 / 3, 1 / 3], atol=1e-15)


def test_integration_examples():
    m = ms.build_mesh(UNIT, [(0, 1, 2)], 1)
    assert ms.integrate_pwl(m, [4.0, 4.0, 4.0]) == 2.0
    assert ms.integrate_pwl(m, m.vertex_xy[:, 0]) == pytest.approx(1 / 6, abs=1e-16)
    assert ms.areal_average(0.0, m) == 0.0
    assert ms.areal_average(ms.integrate_pwl(m, [3.0] * 3), m) == 3.0


def test_schematic_mesh_invariants(catalog, triangles):
    for d in (1, 2, 5):
        m = ms.build_mesh(catalog, triangles, d)
        assert len(m.small) == d * d * len(triangles)
        assert np.all(m.bary >= 0)
        np.testing.assert_allclose(m.bary.sum(axis=1), 1.0, atol=1e-14)
        np.testing.assert_allclose(m.bary @ m.station_xy, m.vertex_xy, atol=1e-12)
        per_parent = np.bincount(m.small_parent, weights=m.small_area)
        ref = np.array([triangle_area(catalog.xy[list(t)]) for t in triangles])
        np.testing.assert_allclose(per_parent, ref, rtol=1e-10)
        assert m.total_area == pytest.approx(ref.sum(), rel=1e-15)
        # no two vertex objects at one geometric point
        pos = {tuple(np.round(p, 9)) for p in m.vertex_xy}
        assert len(pos) == m.n_vertices


def test_continuity_across_shared_edges(catalog, triangles):
    m = ms.build_mesh(catalog, triangles, 3)
    vals = np.random.default_rng(0).normal(size=m.n_vertices)
    edges = Counter()
    for tri in m.small:
        for i in range(3):
            edges[tuple(sorted((tri[i], tri[(i + 1) % 3])))] += 1
    assert max(edges.values()) == 2
    # the linear function of each small triangle restricted to an edge is the
    # segment interpolant of the two shared vertex objects
    for tri in m.small:
        P = m.vertex_xy[tri]
        A = np.column_stack([P, np.ones(3)])
        coef = np.linalg.solve(A, vals[tri])
        for i in range(3):
            a, b = tri[i], tri[(i + 1) % 3]
            mid = (m.vertex_xy[a] + m.vertex_xy[b]) / 2
            assert coef @ [*mid, 1.0] == pytest.approx((vals[a] + vals[b]) / 2, abs=1e-12)


@settings(max_examples=30, deadline=None)
@given(st.lists(st.floats(-50, 50), min_size=32, max_size=32))
def test_areal_average_within_range(schematic_mesh_d2, values):
    m = schematic_mesh_d2
    v = ms.interpolate_station_field(m, values)
    avg = ms.areal_average(ms.integrate_pwl(m, v), m)
    assert v.min() - 1e-9 <= avg <= v.max() + 1e-9


def test_integral_invariant_under_refinement(catalog, triangles):
    x = np.random.default_rng(9).uniform(0, 30, len(catalog))
    totals = [ms.integrate_pwl(ms.build_mesh(catalog, triangles, d),
                               ms.interpolate_station_field(ms.build_mesh(catalog, triangles, d), x))
              for d in (2, 4)]
    assert totals[0] == pytest.approx(totals[1], rel=1e-10)


def test_delaunay_fallback_and_unreferenced_station(catalog):
    tris = ms.delaunay_triangles(catalog)
    m = ms.build_mesh(catalog, tris, 1, source="delaunay")
    assert m.source == "delaunay"
    part = ms.build_mesh(catalog, tris[:3], 1)
    assert part.n_stations == len(catalog)
    assert np.all(part.vertex_kind[:len(catalog)] == ms.STATION)


def test_provenance_labels():
    m = ms.build_mesh(SQUARE, [(0, 1, 2)], 2)
    labels = {ms.provenance_label(m, v, SQUARE.ids) for v in range(m.n_vertices)}
    assert "station:S0" in labels and "edge:S0-S1:1/2" in labels


def test_support_matches_dense_weights(catalog, triangles):
    m = ms.build_mesh(catalog, triangles, 3)
    dense = np.zeros_like(m.bary)
    for v in range(m.n_vertices):
        np.add.at(dense[v], m.support[v], m.support_w[v])
    np.testing.assert_array_equal(dense, m.bary)
    x = np.random.default_rng(1).normal(size=len(catalog))
    np.testing.assert_allclose(ms.interpolate_station_field(m, x), m.bary @ x, rtol=1e-13, atol=1e-13)
