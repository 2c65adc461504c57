"""Command-line entry point: ``ceabc <subcommand> [options]``.

Exit codes: 0 success, 2 configuration error, 3 data error, 4 no accepted samples.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys

import numpy as np

from . import pipeline
from .config import RunConfig
from .data import generate_synthetic, load_surveillance_csv, write_surveillance_csv
from .errors import CEABCError, ConfigError, DataError, NoAcceptedSamples
from .forward import default_threads
from .ic import write_state_csv
from .integrate import TimeGrid, integrate, write_series_csv
from .model import D, A, E, H, I, PARAM_NAMES, virgin_state
from .report import write_json

logger = logging.getLogger("ceabc")

EXIT_OK, EXIT_CONFIG, EXIT_DATA, EXIT_NO_ACCEPTED = 0, 2, 3, 4


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="TOML run configuration (dotted keys)")
    common.add_argument("--data", help="surveillance CSV (date,hospitalized,new_deaths,total_deaths)")
    common.add_argument("--out", help="output directory (default: paths.out, 'results')")
    common.add_argument("--seed", type=int, help="root random seed")
    common.add_argument("--threads", type=int, default=None,
                        help="worker threads for forward simulations (default: all cores)")
    common.add_argument("--omega", type=float, help="misfit weight on hospitalizations")
    common.add_argument("--tol", type=float, help="ABC acceptance tolerance")
    common.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                        help="override any config key, e.g. --set ce.n_samples=200")
    common.add_argument("-v", "--verbose", action="count", default=0)

    parser = argparse.ArgumentParser(prog="ceabc", description="Epidemic model calibration with CE-seeded ABC.")
    sub = parser.add_subparsers(dest="command", required=True)
    sim = sub.add_parser("simulate", parents=[common], help="integrate the model and write the trajectory")
    sim.add_argument("--initial-state", help="start from this state CSV instead of the virgin population")
    sim.add_argument("--horizon", type=float, help="days to simulate (default: virgin.horizon)")
    sub.add_parser("infer-ic", parents=[common], help="infer a consistent initial state from references")
    sub.add_parser("calibrate", parents=[common], help="CE optimization followed by ABC (needs --seed)")
    pred = sub.add_parser("predict", parents=[common], help="forecast envelopes from a calibrate run")
    pred.add_argument("--horizon", type=int, help="days past the calibration window (default: predict.horizon)")
    syn = sub.add_parser("gen-synthetic", parents=[common], help="write a synthetic surveillance CSV")
    syn.add_argument("--days", type=int, help="number of days (default: synthetic.days)")
    syn.add_argument("--noise", type=float, help="lognormal noise scale (default: synthetic.noise)")
    return parser


def _parse_set(items) -> dict:
    out = {}
    for item in items:
        key, sep, val = item.partition("=")
        if not sep:
            raise ConfigError(f"--set expects KEY=VALUE, got {item!r}")
        key, val = key.strip(), val.strip()
        if val.lower() in ("true", "false"):
            out[key] = val.lower() == "true"
        else:
            try:
                out[key] = float(val) if any(c in val for c in ".eE") or not val.lstrip("-").isdigit() else int(val)
            except ValueError:
                out[key] = val
    return out


def load_config(args) -> RunConfig:
    overrides = _parse_set(args.set)
    overrides.update({"seed": args.seed, "omega": args.omega, "abc.tol": args.tol,
                      "paths.data": args.data, "paths.out": args.out})
    if getattr(args, "days", None) is not None:
        overrides["synthetic.days"] = args.days
    if getattr(args, "noise", None) is not None:
        overrides["synthetic.noise"] = args.noise
    if args.command == "predict" and args.horizon is not None:
        overrides["predict.horizon"] = args.horizon
    return RunConfig.load(args.config, overrides)


def _threads(args) -> int:
    if args.threads is None:
        return default_threads()
    if args.threads < 1:
        raise ConfigError("--threads must be >= 1")
    return args.threads


def _load_data(cfg: RunConfig, required: bool = True):
    path = cfg["paths.data"]
    if path is None:
        if required:
            raise ConfigError("no data file given (use --data or paths.data)")
        return None
    return load_surveillance_csv(path, cfg["data.reconcile_tol"])


def _out_dir(cfg: RunConfig) -> str:
    out = cfg["paths.out"]
    os.makedirs(out, exist_ok=True)
    return out


def cmd_simulate(cfg: RunConfig, args) -> int:
    if args.initial_state:
        from .ic import read_state_csv

        u0 = read_state_csv(args.initial_state)
    else:
        u0 = virgin_state(cfg["virgin.n0"], cfg["virgin.e0"])
    horizon = cfg["virgin.horizon"] if args.horizon is None else args.horizon
    traj = integrate(u0, cfg.params(), TimeGrid(0.0, horizon, 1.0, cfg["grid.substeps"]))
    out = _out_dir(cfg)
    traj.to_csv(os.path.join(out, "trajectory.csv"))
    write_series_csv(os.path.join(out, "admissions.csv"), traj.times,
                     {"cumulative_admissions": traj.admissions})
    active = traj.states[:, E] + traj.states[:, I] + traj.states[:, A]
    daily_deaths = np.diff(traj.states[:, D])
    n0 = float(u0[0] + u0[1] + u0[2] + u0[3] + u0[4] + u0[5])
    summary = {
        "config": cfg.as_dict(),
        "initial_state": [float(v) for v in u0],
        "peak_active_day": float(traj.times[int(np.argmax(active))]),
        "peak_active": float(active.max()),
        "peak_hospitalized_day": float(traj.times[int(np.argmax(traj.states[:, H]))]),
        "peak_hospitalized": float(traj.states[:, H].max()),
        "peak_daily_deaths": float(daily_deaths.max()) if daily_deaths.size else 0.0,
        "cumulative_admissions": float(traj.admissions[-1]),
        "cumulative_deaths": float(traj.states[-1, D]),
        "final_susceptible_fraction": float(traj.states[-1, 0] / n0),
        "final_recovered_fraction": float(traj.states[-1, 5] / n0),
    }
    write_json(summary, os.path.join(out, "simulate_summary.json"))
    print(f"peak active {summary['peak_active']:.0f} on day {summary['peak_active_day']:.0f}; "
          f"deaths {summary['cumulative_deaths']:.0f}; wrote {out}")
    return EXIT_OK


def cmd_infer_ic(cfg: RunConfig, args) -> int:
    ds = _load_data(cfg, required=False)
    if ds is not None:
        ds = pipeline.calibration_window(cfg, ds)
    ic = pipeline.initial_condition(cfg, ds)
    out = _out_dir(cfg)
    write_state_csv(ic.u0, os.path.join(out, "initial_condition.csv"))
    write_json({"config": cfg.as_dict(), **ic.to_dict(),
                "matched_states": [[float(v) for v in row] for row in ic.matched]},
               os.path.join(out, "initial_condition.json"))
    print(f"matched days {ic.matched_times.tolist()} with weight {ic.weight}; wrote {out}")
    return EXIT_OK


def cmd_calibrate(cfg: RunConfig, args) -> int:
    if cfg["seed"] is None:
        raise ConfigError("calibrate requires an explicit --seed (or seed in the config)")
    ds = _load_data(cfg)
    cal = pipeline.calibrate(cfg, ds, cfg["seed"], _threads(args))
    out = _out_dir(cfg)
    pipeline.write_calibration(cfg, cal, cfg["seed"], out)
    print(f"j_opt {cal.ce.j_opt:.4g} after {cal.ce.iterations_run} CE iterations; "
          f"ABC accepted {cal.abc.n_accepted}/{cal.abc.n_evaluated}; wrote {out}")
    if cal.abc.n_accepted == 0:
        raise NoAcceptedSamples(f"no ABC sample met tol={cal.abc.tol}; consider raising --tol")
    return EXIT_OK


def cmd_predict(cfg: RunConfig, args) -> int:
    out = _out_dir(cfg)
    try:
        x, u0, summary = pipeline.load_calibration_outputs(out)
    except (OSError, ValueError, KeyError) as exc:
        raise ConfigError(f"cannot read calibrate outputs in {out}: {exc}") from exc
    n_train = int(summary["window"]["n_days"])
    horizon = cfg["predict.horizon"]
    fc = pipeline.predict(cfg, x, u0, n_train, horizon, _threads(args))
    for label, env in fc.envelopes.items():
        env.to_csv(os.path.join(out, f"forecast_{label}.csv"))
    report = {"config": cfg.as_dict(), "n_samples": fc.n_samples, "n_failed": fc.n_failed,
              "n_train_days": n_train, "horizon": horizon, "calibration_seed": summary.get("seed")}
    ds = _load_data(cfg, required=False)
    if ds is not None:
        import datetime as dt

        start = dt.date.fromisoformat(summary["window"]["start"])
        first = (ds.start - start).days
        if first < 0:
            ds = pipeline.window(ds, start, ds.end)
            first = 0
        days = min(len(ds), n_train + horizon - first)
        if days > 0:
            report["observed_coverage"] = {
                label: pipeline.forecast_coverage(fc.envelopes[label], series[:days], first)
                for label, series in (("H", ds.hospitalized), ("D", ds.total_deaths))
            }
            pipeline.write_observed_csv(ds, os.path.join(out, "forecast_observed.csv"), start)
    if cfg["output.gnuplot"]:
        pipeline.write_gnuplot(os.path.join(out, "plot_forecast.gp"), "forecast",
                               "forecast_observed.csv" if ds is not None else None)
    write_json(report, os.path.join(out, "forecast.json"))
    print(f"forecast {horizon} days past {n_train} training days from {fc.n_samples} samples; wrote {out}")
    return EXIT_OK


def cmd_gen_synthetic(cfg: RunConfig, args) -> int:
    ic = pipeline.initial_condition(cfg)
    seed = 0 if cfg["seed"] is None else cfg["seed"]
    ds = generate_synthetic(ic.u0, cfg.params(), cfg.date("synthetic.start"), cfg["synthetic.days"],
                            cfg["synthetic.noise"], seed, cfg["grid.substeps"])
    out = _out_dir(cfg)
    path = cfg["paths.data"] or os.path.join(out, "synthetic.csv")
    write_surveillance_csv(ds, path)
    write_json({"config": cfg.as_dict(), "x_true": dict(zip(PARAM_NAMES, map(float, cfg.params()))),
                "initial_condition": ic.to_dict()},
               os.path.splitext(path)[0] + "_truth.json")
    print(f"wrote {len(ds)} days to {path}")
    return EXIT_OK


COMMANDS = {
    "simulate": cmd_simulate,
    "infer-ic": cmd_infer_ic,
    "calibrate": cmd_calibrate,
    "predict": cmd_predict,
    "gen-synthetic": cmd_gen_synthetic,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.WARNING - 10 * min(args.verbose, 2),
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        cfg = load_config(args)
        return COMMANDS[args.command](cfg, args)
    except ConfigError as exc:
        print(f"ceabc: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DataError as exc:
        print(f"ceabc: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except NoAcceptedSamples as exc:
        print(f"ceabc: {exc}", file=sys.stderr)
        return EXIT_NO_ACCEPTED
    except (ValueError, CEABCError) as exc:
        print(f"ceabc: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
