"""Command line interface.

Every subcommand accepts ``--config FILE`` with flat ``key = value`` lines
using the flag names (``n-days`` or ``n_days``); flags given on the command
line take precedence.
"""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import data_io, pipeline, validation
from .field import to_gpd_margins
from .margins import gamma_stability_scan

COMMANDS = ("fit-margins", "fit-dependence", "simulate", "quantile", "arf", "sensitivity",
            "synth", "validate")


def read_config(path) -> dict:
    out = {}
    for lineno, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise SystemExit(f"{path}:{lineno}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        out[key.lstrip("-").replace("-", "_")] = value
    return out


def _floats(text: str) -> list[float]:
    return [float(v) for v in str(text).split(",") if v.strip()]


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="flat key = value file; flags override it")
    common.add_argument("--stations", help="stations.csv (station_id,x_km,y_km)")
    common.add_argument("--rain", help="rain.csv (date,<station_id>...)")
    common.add_argument("--triangles", help="triangles.csv (v1,v2,v3); Delaunay if omitted")
    common.add_argument("--origin", help="station id used as coordinate origin (default: first)")
    common.add_argument("--k", type=int, default=125)
    common.add_argument("--d", type=int, default=5)
    common.add_argument("--m-terms", type=int, default=4)
    common.add_argument("--n-days", type=int, default=None,
                        help="simulated days (default 91000); synth: panel length (default 2730)")
    common.add_argument("--period-days", type=int, default=9_100)
    common.add_argument("--replicates", type=int, default=60)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--rotate-deg", type=float, default=0.0)
    common.add_argument("--beta", type=float, default=None)
    common.add_argument("--workers", type=int, default=1)
    common.add_argument("--out-dir", default=".")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="arealext", description="Areal extreme rainfall simulation and return-level estimation.")
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("fit-margins", parents=[common], help="write margins.csv")
    p.add_argument("--scan", help="k_min:k_max; also write gamma_scan.csv")
    sub.add_parser("fit-dependence", parents=[common], help="write pairs.csv")
    p = sub.add_parser("simulate", parents=[common], help="write totals.csv for one batch")
    p.add_argument("--snapshot", type=int, default=None,
                   help="also write field.csv for this simulation index")
    sub.add_parser("quantile", parents=[common], help="replicate quantiles, report and histogram")
    sub.add_parser("arf", parents=[common], help="quantile run plus station_quantiles.csv")
    p = sub.add_parser("sensitivity", parents=[common], help="rerun over beta and rotation values")
    p.add_argument("--betas", help="comma separated; default: pair quartiles and beta_hat")
    p.add_argument("--rotations", default="0,45")
    p.add_argument("--sens-replicates", type=int, default=10)
    p = sub.add_parser("synth", parents=[common], help="synthetic rain.csv with known parameters")
    p.add_argument("--gamma", type=float, default=0.1)
    p.add_argument("--scale", type=float, default=6.0)
    p.add_argument("--shift", type=float, default=20.0)
    p.add_argument("--exceed-prob", type=float, default=0.08)
    p.add_argument("--synth-m-terms", type=int, default=100)
    p = sub.add_parser("validate", parents=[common], help="Monte Carlo invariant checks")
    p.add_argument("--draws", type=int, default=20_000)
    return parser


def parse_args(argv=None) -> argparse.Namespace:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.config:
        conf = read_config(args.config)
        # re-parse with file values as defaults so explicit flags win
        sp = parser._subparsers._group_actions[0].choices[args.command]
        known = {a.dest for a in sp._actions}
        unknown = sorted(set(conf) - known)
        if unknown:
            parser.error(f"unknown config key(s): {', '.join(unknown)}")
        sp.set_defaults(**{k: _coerce(sp, k, v) for k, v in conf.items()})
        args = parser.parse_args(argv)
    return args


def _coerce(sp, dest, value):
    for action in sp._actions:
        if action.dest == dest and action.type is not None:
            return action.type(value)
    return value


def config_from(args) -> pipeline.ExperimentConfig:
    return pipeline.ExperimentConfig(
        k=args.k, d=args.d, m_terms=args.m_terms, n_days_sim=_sim_days(args),
        return_period_days=args.period_days, n_replicates=args.replicates,
        master_seed=args.seed, rotation_deg=args.rotate_deg, beta_override=args.beta,
        workers=args.workers, stations=args.stations, rain=args.rain,
        triangles=args.triangles, origin=args.origin, out_dir=args.out_dir)


def _sim_days(args) -> int:
    return 91_000 if args.n_days is None else args.n_days


def _need(args, *names):
    missing = [n for n in names if not getattr(args, n)]
    if missing:
        raise SystemExit(f"missing required option(s): {', '.join('--' + m for m in missing)}")


def main(argv=None) -> int:
    args = parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    try:
        return _dispatch(args, out)
    except (data_io.DataError, ValueError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 2


def _dispatch(args, out: Path) -> int:
    cmd = args.command
    if cmd == "synth":
        _need(args, "stations")
        catalog = data_io.load_stations(args.stations, args.origin)
        beta = 0.05 if args.beta is None else args.beta
        n_days = 2730 if args.n_days is None else args.n_days
        panel = pipeline.synth_generate(catalog, beta, args.gamma, args.scale, args.shift,
                                        n_days, args.seed, exceed_prob=args.exceed_prob,
                                        m_terms=args.synth_m_terms)
        data_io.write_rainfall(out / "rain.csv", panel, catalog)
        print(f"wrote {out / 'rain.csv'} ({panel.n_days} days, {panel.n_stations} stations)")
        return 0

    if cmd == "validate":
        ok = True
        for res in validation.run_suite(n_draws=args.draws, seed=args.seed):
            print(res.line())
            ok &= res.passed
        return 0 if ok else 1

    _need(args, "stations", "rain")
    catalog = data_io.load_stations(args.stations, args.origin)
    panel = data_io.load_rainfall(args.rain, catalog)

    if cmd == "fit-margins":
        from .margins import fit_margins
        fit = fit_margins(panel, args.k, catalog.ids)
        pipeline.write_margins(out / "margins.csv", fit)
        if args.scan:
            lo, hi = (int(v) for v in args.scan.split(":"))
            data_io.write_table(out / "gamma_scan.csv", ("k", "mean_gamma_local"),
                                [(k, f"{g:.6f}") for k, g in gamma_stability_scan(panel, lo, hi)])
        print(f"gamma_pooled={fit.gamma_pooled:.6f}")
        return 0

    if cmd == "fit-dependence":
        from .dependence import fit_dependence
        dep = fit_dependence(panel, catalog, args.k)
        pipeline.write_pairs(out / "pairs.csv", dep, catalog)
        print(f"beta_hat={dep.beta_hat:.6f} q25={dep.beta_q25:.6f} q75={dep.beta_q75:.6f} "
              f"n_excluded={dep.n_excluded}")
        return 0

    tris = data_io.load_triangles(args.triangles, catalog) if args.triangles else None
    model = pipeline.Model.fit(catalog, panel, tris, k=args.k, d=args.d,
                               beta_override=args.beta)
    pipeline.write_margins(out / "margins.csv", model.margins)
    pipeline.write_pairs(out / "pairs.csv", model.dependence, catalog)

    if cmd == "simulate":
        n_days = _sim_days(args)
        config = pipeline.ExperimentConfig(
            k=args.k, d=args.d, m_terms=args.m_terms, n_days_sim=n_days,
            return_period_days=1, n_replicates=1, master_seed=args.seed,
            rotation_deg=args.rotate_deg, beta_override=args.beta, workers=args.workers)
        engine = model.engine(config)
        rows = engine.run(n_days, args.workers)
        pipeline.write_totals(out / "totals.csv", rows)
        pipeline.write_mesh(out / "mesh.csv", model.mesh, catalog.ids)
        if args.snapshot is not None:
            day, eta = engine.field_snapshot(args.snapshot)
            pipeline.write_field(out / "field.csv", model.mesh, eta, to_gpd_margins(eta),
                                 day.vertex_values)
        print(f"wrote {out / 'totals.csv'} ({len(rows)} days, beta={model.beta:.6f})")
        return 0

    config = config_from(args)
    if cmd in ("quantile", "arf"):
        report = pipeline.run_experiment(config, model)
        pipeline.write_report(out, report)
        if cmd == "arf":
            data_io.write_table(out / "station_quantiles.csv", ("station_id", "quantile_mm"),
                                [(s, f"{q:.4f}") for s, q in
                                 zip(catalog.ids, report.station_quantiles)])
        print("\n".join(report.lines()))
        return 0

    if cmd == "sensitivity":
        dep = model.dependence
        betas = _floats(args.betas) if args.betas else [dep.beta_q25, dep.beta_hat, dep.beta_q75]
        rows = pipeline.sensitivity_run(config, betas, _floats(args.rotations), model,
                                        n_replicates=args.sens_replicates)
        data_io.write_table(out / "sensitivity.csv", pipeline.SENSITIVITY_HEADER,
                            [(f"{r[0]:.6f}", f"{r[1]:g}", r[2], *(f"{v:.4f}" for v in r[3:]))
                             for r in rows])
        for r in rows:
            print(f"beta={r[0]:.5f} rotation={r[1]:g} mean={r[3]:.3f} std={r[4]:.3f}")
        return 0
    raise SystemExit(f"unknown command {cmd}")


if __name__ == "__main__":
    sys.exit(main())
