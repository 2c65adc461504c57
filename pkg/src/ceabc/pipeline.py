"""End-to-end workflows shared by the command line and the acceptance tests.

Each workflow returns in-memory results; the ``write_*`` helpers turn them into
the CSV/JSON files. Every file is a pure function of the configuration and the
seed, so runs with different worker counts produce identical bytes.
"""

from __future__ import annotations

import datetime as dt
import json
import logging
import os
from dataclasses import dataclass

import numpy as np

from .abc import (
    ABCResult,
    Envelope,
    abc_infer,
    credible_envelope,
    envelope_from_series,
    read_samples_csv,
    write_samples_csv,
)
from .ce import CEResult, ce_optimize, write_history_csv
from .config import RunConfig
from .data import SurveillanceDataset, to_target, window
from .errors import ConfigError, NoAcceptedSamples
from .forward import ForwardModel
from .ic import ICReference, infer_initial_condition, read_state_csv, write_state_csv
from .integrate import TimeGrid
from .misfit import QoITarget
from .model import PARAM_NAMES
from .report import summarize, write_histograms_csv, write_json, write_scatter_csv
from .sampling import DistributionState

logger = logging.getLogger(__name__)

# references used when neither the config nor a dataset provides them
FALLBACK_H_REF = 1000.0
FALLBACK_D_REF = 300.0


@dataclass
class InitialCondition:
    u0: np.ndarray
    matched: np.ndarray  # (2, 8): H-matched and D-matched virgin-run states
    matched_times: np.ndarray
    h_ref: float
    d_ref: float
    weight: float

    def to_dict(self) -> dict:
        return {
            "h_ref": self.h_ref,
            "d_ref": self.d_ref,
            "weight": self.weight,
            "matched_times": [float(t) for t in self.matched_times],
            "u0": [float(v) for v in self.u0],
        }


@dataclass
class Calibration:
    dataset: SurveillanceDataset
    target: QoITarget
    ic: InitialCondition
    ce: CEResult
    abc: ABCResult
    envelopes: dict  # label -> Envelope; empty when nothing was accepted


def resolve_references(cfg: RunConfig, dataset: SurveillanceDataset | None = None):
    """Reference values for the initial-condition match.

    Explicit config values win; otherwise the first day of ``dataset`` is used;
    otherwise fixed fallbacks suitable for synthetic experiments.
    """
    h_ref, d_ref = cfg["ic.h_ref"], cfg["ic.d_ref"]
    if h_ref is None:
        h_ref = float(dataset.hospitalized[0]) if dataset is not None else FALLBACK_H_REF
    if d_ref is None:
        d_ref = float(dataset.total_deaths[0]) if dataset is not None else FALLBACK_D_REF
    return h_ref, d_ref


def initial_condition(cfg: RunConfig, dataset: SurveillanceDataset | None = None) -> InitialCondition:
    h_ref, d_ref = resolve_references(cfg, dataset)
    try:
        refs = [ICReference("H", h_ref), ICReference("D", d_ref)]
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    w = cfg.ic_weight
    grid = TimeGrid(0.0, cfg["virgin.horizon"], 1.0, cfg["grid.substeps"])
    u0, matched, times = infer_initial_condition(cfg.virgin(), refs, [w, 1.0 - w], grid)
    return InitialCondition(u0, matched, times, h_ref, d_ref, w)


def calibration_window(cfg: RunConfig, dataset: SurveillanceDataset) -> SurveillanceDataset:
    start = cfg.date("window.start") or dataset.start
    end = cfg.date("window.end") or dataset.end
    return window(dataset, start, end)


def forward_model(cfg: RunConfig, u0, n_days: int, threads: int) -> ForwardModel:
    return ForwardModel(u0, TimeGrid.days(n_days, cfg["grid.substeps"]), threads, cfg["grid.chunk_size"])


def calibrate(cfg: RunConfig, dataset: SurveillanceDataset, seed: int, threads: int = 1) -> Calibration:
    """Initial condition, cross-entropy optimization, then ABC seeded by the CE distribution."""
    ds = calibration_window(cfg, dataset)
    if len(ds) < 2:
        raise ConfigError("the calibration window must span at least two days")
    ic = initial_condition(cfg, ds)
    target = to_target(ds, cfg["omega"])
    fwd = forward_model(cfg, ic.u0, len(ds), threads)
    bounds = cfg.bounds()
    init = None
    if cfg["ce.init"] == "nominal":
        flat = DistributionState.flat(bounds)
        init = DistributionState(np.clip(cfg.params(), bounds.lower, bounds.upper), flat.sigma, bounds)
    logger.info("CE: %d samples/iteration on %d days (%s..%s)", cfg["ce.n_samples"], len(ds), ds.start, ds.end)
    ce = ce_optimize(fwd, target, bounds, cfg.ce(), seed, init=init)
    logger.info("CE: %d iterations, j_opt=%.4g, converged=%s", ce.iterations_run, ce.j_opt, ce.converged)
    prior = ce.final_dist if cfg["abc.prior"] == "ce" else DistributionState.flat(bounds)
    abc = abc_infer(prior, fwd, target, cfg.abc(), seed)
    logger.info("ABC: accepted %d of %d (rate %.3f)", abc.n_accepted, abc.n_evaluated, abc.acceptance_rate)
    envelopes = credible_envelope(abc, cfg["abc.level"]) if abc.n_accepted else {}
    return Calibration(ds, target, ic, ce, abc, envelopes)


def calibration_summary(cfg: RunConfig, cal: Calibration, seed: int) -> dict:
    ce = cal.ce
    out = {
        "config": cfg.as_dict(),
        "seed": seed,
        "window": {
            "start": cal.dataset.start.isoformat(),
            "end": cal.dataset.end.isoformat(),
            "n_days": len(cal.dataset),
        },
        "initial_condition": cal.ic.to_dict(),
        "ce": {
            "j_opt": ce.j_opt,
            "x_opt": dict(zip(PARAM_NAMES, map(float, ce.x_opt))),
            "iterations": ce.iterations_run,
            "converged": ce.converged,
            "final_mu": dict(zip(PARAM_NAMES, map(float, ce.final_dist.mu))),
            "final_sigma": dict(zip(PARAM_NAMES, map(float, ce.final_dist.sigma))),
        },
        "j_opt": ce.j_opt,
        "acceptance_rate": cal.abc.acceptance_rate,
        "abc": {
            "n_evaluated": cal.abc.n_evaluated,
            "n_accepted": cal.abc.n_accepted,
            "n_failed": cal.abc.n_failed,
            "tol": cal.abc.tol,
        },
        "posterior": None,
    }
    if cal.abc.n_accepted:
        out["posterior"] = summarize(cal.abc, cfg.bounds(), cfg["abc.bins"]).to_dict()
    return out


def write_calibration(cfg: RunConfig, cal: Calibration, seed: int, out_dir) -> list:
    """Write every calibration artifact into ``out_dir``; returns the file names written."""
    os.makedirs(out_dir, exist_ok=True)
    path = lambda name: os.path.join(out_dir, name)  # noqa: E731
    written = ["initial_condition.csv", "ce_history.csv", "abc_samples.csv", "summary.json"]
    write_state_csv(cal.ic.u0, path("initial_condition.csv"))
    write_history_csv(cal.ce, path("ce_history.csv"), PARAM_NAMES)
    write_samples_csv(cal.abc, path("abc_samples.csv"), PARAM_NAMES)
    write_json(calibration_summary(cfg, cal, seed), path("summary.json"))
    if cal.abc.n_accepted:
        summary = summarize(cal.abc, cfg.bounds(), cfg["abc.bins"])
        write_histograms_csv(summary, path("histograms.csv"))
        write_scatter_csv(summary, path("scatter.csv"))
        written += ["histograms.csv", "scatter.csv"]
        for label, env in cal.envelopes.items():
            env.to_csv(path(f"envelope_{label}.csv"))
            written.append(f"envelope_{label}.csv")
        write_observed_csv(cal.dataset, path("observed.csv"))
        written.append("observed.csv")
        if cfg["output.gnuplot"]:
            write_gnuplot(path("plot_envelopes.gp"), "envelope", "observed.csv")
            written.append("plot_envelopes.gp")
    return written


def write_observed_csv(ds: SurveillanceDataset, path, start: dt.date | None = None) -> None:
    """Observations on the model's day axis (day 0 is ``start``, default the first date)."""
    start = start or ds.start
    with open(path, "w", newline="") as fh:
        fh.write("t,date,H,D\n")
        for k, day in enumerate(ds.dates):
            t = (day - start).days
            fh.write(f"{t},{day.isoformat()},{ds.hospitalized[k]!r},{ds.total_deaths[k]!r}\n")


def write_gnuplot(path, prefix: str, observed: str | None) -> None:
    lines = ["set datafile separator ','", "set key autotitle columnhead", "set xlabel 'day'"]
    for label, col, name in (("H", 3, "hospitalized"), ("D", 4, "total deaths")):
        lines.append(f"set terminal pngcairo size 900,600; set output '{prefix}_{label}.png'")
        lines.append(f"set ylabel '{name}'")
        plot = (f"plot '{prefix}_{label}.csv' using 1:2:4 with filledcurves lc rgb '#c0d0f0' "
                f"title 'credible band', '' using 1:3 with lines lw 2 title 'median'")
        if observed:
            plot += f", '{observed}' using 1:{col} with points pt 7 ps 0.6 title 'observed'"
        lines.append(plot)
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


@dataclass
class Forecast:
    envelopes: dict  # label -> Envelope over days 0 .. n_train + horizon - 1
    n_samples: int
    n_train: int
    horizon: int
    n_failed: int


def predict(cfg: RunConfig, samples, u0, n_train: int, horizon: int, threads: int = 1) -> Forecast:
    """Re-simulate accepted parameter samples past the calibration window."""
    samples = np.atleast_2d(np.asarray(samples, dtype=float))
    if samples.shape[0] == 0 or samples.shape[1] == 0:
        raise NoAcceptedSamples("the sample file has no accepted samples to forecast from")
    if horizon < 0:
        raise ConfigError("horizon must be >= 0")
    n = n_train + horizon
    fwd = forward_model(cfg, u0, n, threads)
    (hs, ds), ok = fwd(samples)
    ok = np.asarray(ok, dtype=bool)
    times = np.arange(n, dtype=float)
    level = cfg["abc.level"]
    envs = {
        "H": envelope_from_series(hs[ok], times, level),
        "D": envelope_from_series(ds[ok], times, level),
    }
    return Forecast(envs, int(ok.sum()), n_train, horizon, int((~ok).sum()))


def load_calibration_outputs(out_dir):
    """Accepted samples, initial state and the calibration summary from a calibrate run."""
    names, x, _ = read_samples_csv(os.path.join(out_dir, "abc_samples.csv"))
    if tuple(names) != PARAM_NAMES:
        raise ConfigError(f"unexpected parameter columns in abc_samples.csv: {names}")
    u0 = read_state_csv(os.path.join(out_dir, "initial_condition.csv"))
    with open(os.path.join(out_dir, "summary.json")) as fh:
        summary = json.load(fh)
    return x, u0, summary


def forecast_coverage(env: Envelope, observed, offset: int = 0) -> float:
    """Fraction of observations inside the envelope, the first one lying on day ``offset``."""
    observed = np.asarray(observed, dtype=float)
    sl = slice(offset, offset + observed.size)
    band = Envelope(env.times[sl], env.lower[sl], env.median[sl], env.upper[sl])
    return float(np.mean(band.contains(observed)))
