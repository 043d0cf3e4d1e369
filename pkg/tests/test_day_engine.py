import numpy as np
import pytest

from arealext import day_engine as de
from arealext.field import FieldParams
from arealext.margins import MarginalFit
from arealext.mesh import build_mesh, interpolate_station_field

from oracles import fake_margins, hexagon, rule_oracle


def test_classify_strict():
    m = fake_margins(3, np.random.default_rng(0))
    m = MarginalFit(m.station_ids, 1, m.gamma_local, m.scale, np.array([10.0, 10.0, 5.0]), 0.1, 10)
    assert de.classify([12.0, 10.0, 0.0], m).tolist() == [True, False, False]
    assert not de.classify([0.0, 0.0, 0.0], m).any()


def test_single_extreme_vertex_rules():
    cat, tris = hexagon()
    mesh = build_mesh(cat, tris[:1], 3)
    rng = np.random.default_rng(1)
    mg = fake_margins(7, rng)
    flags = np.zeros(7, bool)
    flags[1] = True
    row = rng.uniform(0, 10, 7)
    eta = rng.uniform(0.2, 20, mesh.n_vertices)
    vals, tags = de.assign_vertex_values(mesh, flags, row, mg, eta)
    for v, p in enumerate(mesh.provenance):
        if p[0] == "edge" and p[1:3] == (0, 2):
            assert tags[v] == de.EDGE_INTERPOLATED
        elif p[0] == "edge" or p[0] == "interior":
            assert tags[v] == de.SIMULATED
    assert vals[0] == row[0] and vals[2] == row[2]
    assert tags[1] == de.SIMULATED_STATION


def test_rule_table_against_oracle_many_patterns():
    cat, tris = hexagon()
    mesh = build_mesh(cat, tris, 4)
    rng = np.random.default_rng(2)
    for _ in range(200):
        mg = fake_margins(7, rng, gamma=rng.uniform(-0.3, 0.4))
        flags = rng.random(7) < rng.random()
        row = rng.uniform(0, 40, 7)
        eta = 1.0 / rng.standard_exponential(mesh.n_vertices)
        vals, tags = de.assign_vertex_values(mesh, flags, row, mg, eta)
        ref_vals, ref_tags = rule_oracle(mesh, flags, row, mg, eta)
        assert list(tags) == ref_tags
        np.testing.assert_array_equal(vals, ref_vals)


def test_no_extreme_and_all_extreme():
    cat, tris = hexagon()
    mesh = build_mesh(cat, tris, 5)
    rng = np.random.default_rng(3)
    mg = fake_margins(7, rng)
    row = rng.uniform(0, 10, 7)
    vals, tags = de.assign_vertex_values(mesh, np.zeros(7, bool), row, mg, None)
    np.testing.assert_array_equal(vals, interpolate_station_field(mesh, row))
    assert de.SIMULATED not in set(tags) and de.SIMULATED_STATION not in set(tags)
    eta = 1.0 / rng.standard_exponential(mesh.n_vertices)
    vals, tags = de.assign_vertex_values(mesh, np.ones(7, bool), row, mg, eta)
    assert set(tags) <= {de.SIMULATED, de.SIMULATED_STATION}
    assert np.all(vals >= mesh.bary @ mg.shift - 1e-12)


def _engine(values, mg, seed=0, d=3):
    cat, tris = hexagon()
    mesh = build_mesh(cat, tris, d)
    return de.DayEngine(np.atleast_2d(values), mg, mesh, FieldParams(0.05, 4), seed)


def test_engine_zero_day_and_constant_day():
    mg = fake_margins(7, np.random.default_rng(4))
    assert de.simulate_day(np.zeros((1, 7)), mg, _engine(np.zeros(7), mg).mesh,
                           FieldParams(0.05)).areal_avg == 0.0
    eng = _engine(np.full((2, 7), 4.25), mg)
    assert eng.simulate(5).areal_avg == pytest.approx(4.25, rel=1e-14)


def test_engine_deterministic_and_invariants():
    rng = np.random.default_rng(5)
    mg = fake_margins(7, rng)
    panel = rng.uniform(0, 35, (40, 7))
    eng = _engine(panel, mg, seed=9)
    for i in range(60):
        a, b = eng.simulate(i), eng.simulate(i)
        np.testing.assert_array_equal(a.vertex_values, b.vertex_values)
        assert a.total == b.total and a.day_index == b.day_index
        assert a.vertex_values.min() <= a.areal_avg <= a.vertex_values.max()
        np.testing.assert_array_equal(a.triangle_extreme,
                                      ~np.all(~a.station_extreme[eng.mesh.triangles], axis=1))
        obs = ~a.station_extreme
        np.testing.assert_array_equal(a.vertex_values[:7][obs], panel[a.day_index][obs])
        sim = np.isin(a.vertex_source, [de.SIMULATED, de.SIMULATED_STATION])
        assert np.all(a.vertex_values[sim] >= (eng.mesh.bary @ mg.shift)[sim] - 1e-12)
        s = eng.summary(i)
        assert s[1] == a.day_index and s[2] == a.areal_avg and s[6] == a.vertex_values.max()


def test_replicates_differ_and_run_order():
    rng = np.random.default_rng(6)
    mg = fake_margins(7, rng)
    eng = _engine(rng.uniform(0, 35, (40, 7)), mg, seed=1)
    r0 = eng.run(30, chunk=7)
    np.testing.assert_array_equal(r0, eng.run_range(0, 30))
    np.testing.assert_array_equal(r0[:, 0], np.arange(30))
    assert not np.array_equal(r0, eng.with_replicate(1).run(30))


def test_nearby_vertices_joint_exceedance():
    # dependence carried into the engine matches the bivariate law at the mesh vertices
    from arealext.dependence import bivariate_cdf_eq7
    from arealext.field import simulate_eta
    cat, tris = hexagon()
    mesh = build_mesh(cat, tris, 5)
    eng = de.DayEngine(np.zeros((1, 7)), fake_margins(7, np.random.default_rng(0)), mesh,
                       FieldParams(0.2, 100), 0)
    u, v = 0, mesh.provenance.index(("edge", 0, 1, 1))
    h = float(np.abs(mesh.vertex_xy[u] - mesh.vertex_xy[v]).sum())
    eta = simulate_eta(eng.points, eng._unrotated, 3, size=20_000).eta[:, [u, v]]
    p_hat = np.mean(np.all(eta <= 1.0, axis=1))
    p = bivariate_cdf_eq7(0.0, 0.0, h, 0.2)
    assert abs(p_hat - p) < 3 * np.sqrt(p * (1 - p) / 20_000)
