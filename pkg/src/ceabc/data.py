"""Surveillance time series: CSV ingestion, validation, windowing and synthetic generation.

Canonical file layout (header required, ISO-8601 dates, one row per day)::

    date,hospitalized,new_deaths,total_deaths
    2020-05-01,1021.0,35.0,1002.0
"""

from __future__ import annotations

import csv
import datetime as dt
import math
from dataclasses import dataclass

import numpy as np

from .errors import GapInDates, InvariantViolation, OutOfRange, ParseError
from .integrate import TimeGrid, integrate
from .misfit import QoITarget
from .model import D, H, rhs
from .sampling import make_rng

HEADER = ["date", "hospitalized", "new_deaths", "total_deaths"]
DEFAULT_RECONCILE_TOL = 1.0
SYNTHETIC_STREAM = 3


@dataclass(frozen=True)
class SurveillanceDataset:
    dates: tuple
    hospitalized: np.ndarray
    new_deaths: np.ndarray
    total_deaths: np.ndarray
    reconcile_tol: float = DEFAULT_RECONCILE_TOL

    def __post_init__(self):
        dates = tuple(self.dates)
        arrays = {}
        for name in ("hospitalized", "new_deaths", "total_deaths"):
            arr = np.asarray(getattr(self, name), dtype=float)
            if arr.shape != (len(dates),):
                raise InvariantViolation(f"{name} length {arr.size} != {len(dates)} dates")
            if not np.all(np.isfinite(arr)) or np.any(arr < 0):
                raise InvariantViolation(f"{name} must be finite and nonnegative")
            arr.setflags(write=False)
            arrays[name] = arr
        if not dates:
            raise InvariantViolation("dataset is empty")
        for prev, cur in zip(dates, dates[1:]):
            if cur <= prev:
                raise InvariantViolation(f"dates not strictly increasing at {cur.isoformat()}")
            if (cur - prev).days != 1:
                missing = prev + dt.timedelta(days=1)
                raise GapInDates(f"missing date {missing.isoformat()} (between {prev} and {cur})")
        td = arrays["total_deaths"]
        steps = np.diff(td)
        if np.any(steps < 0):
            k = int(np.flatnonzero(steps < 0)[0]) + 1
            raise InvariantViolation(f"total_deaths decreases on {dates[k].isoformat()}")
        mismatch = np.abs(steps - arrays["new_deaths"][1:])
        if np.any(mismatch > self.reconcile_tol):
            k = int(np.argmax(mismatch > self.reconcile_tol)) + 1
            raise InvariantViolation(
                f"new_deaths on {dates[k].isoformat()} ({arrays['new_deaths'][k]:g}) does not "
                f"reconcile with the total_deaths increment ({steps[k - 1]:g})"
            )
        object.__setattr__(self, "dates", dates)
        for name, arr in arrays.items():
            object.__setattr__(self, name, arr)

    def __len__(self):
        return len(self.dates)

    def __eq__(self, other):
        if not isinstance(other, SurveillanceDataset):
            return NotImplemented
        return (
            self.dates == other.dates
            and np.array_equal(self.hospitalized, other.hospitalized)
            and np.array_equal(self.new_deaths, other.new_deaths)
            and np.array_equal(self.total_deaths, other.total_deaths)
        )

    @property
    def start(self) -> dt.date:
        return self.dates[0]

    @property
    def end(self) -> dt.date:
        return self.dates[-1]


def load_surveillance_csv(path, reconcile_tol: float = DEFAULT_RECONCILE_TOL) -> SurveillanceDataset:
    """Parse and validate a surveillance CSV.

    Raises
    ------
    ParseError
        Bad header, wrong field count, or unparsable values (line number included).
    GapInDates, InvariantViolation
        Semantic problems with the series.
    """
    try:
        fh = open(path, newline="")
    except OSError as exc:
        raise ParseError(f"{path}: {exc.strerror}") from exc
    with fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != HEADER:
            raise ParseError(f"{path}:1: expected header {','.join(HEADER)}, got {header}")
        dates, cols = [], ([], [], [])
        for row in reader:
            line = reader.line_num
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != 4:
                raise ParseError(f"{path}:{line}: expected 4 fields, got {len(row)}")
            try:
                dates.append(dt.date.fromisoformat(row[0].strip()))
            except ValueError as exc:
                raise ParseError(f"{path}:{line}: bad date {row[0]!r}") from exc
            for col, raw in zip(cols, row[1:]):
                try:
                    val = float(raw)
                except ValueError as exc:
                    raise ParseError(f"{path}:{line}: bad number {raw!r}") from exc
                if not math.isfinite(val):
                    raise ParseError(f"{path}:{line}: non-finite value {raw!r}")
                col.append(val)
    if not dates:
        raise ParseError(f"{path}: no data rows")
    return SurveillanceDataset(tuple(dates), *map(np.array, cols), reconcile_tol=reconcile_tol)


def write_surveillance_csv(ds: SurveillanceDataset, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(HEADER)
        for k, day in enumerate(ds.dates):
            w.writerow([day.isoformat(), repr(float(ds.hospitalized[k])),
                        repr(float(ds.new_deaths[k])), repr(float(ds.total_deaths[k]))])


def window(ds: SurveillanceDataset, start: dt.date, end: dt.date) -> SurveillanceDataset:
    """Inclusive sub-series between ``start`` and ``end``."""
    if start > end:
        raise OutOfRange(f"window start {start} is after end {end}")
    if start < ds.start or end > ds.end:
        raise OutOfRange(f"window {start}..{end} not inside {ds.start}..{ds.end}")
    i = (start - ds.start).days
    j = (end - ds.start).days + 1
    return SurveillanceDataset(
        ds.dates[i:j], ds.hospitalized[i:j], ds.new_deaths[i:j], ds.total_deaths[i:j],
        reconcile_tol=ds.reconcile_tol,
    )


def to_target(ds: SurveillanceDataset, omega: float) -> QoITarget:
    """Two-block target: hospitalized with weight ``omega``, total deaths with ``1 - omega``."""
    if not 0.0 <= omega <= 1.0:
        raise ValueError("omega must lie in [0, 1]")
    return QoITarget(
        [("H", ds.hospitalized), ("D", ds.total_deaths)],
        [omega, 1.0 - omega],
    )


def generate_synthetic(
    u0,
    x,
    start: dt.date,
    n_days: int,
    noise: float = 0.0,
    seed: int = 0,
    substeps: int = 10,
) -> SurveillanceDataset:
    """Simulated surveillance records starting from state ``u0`` at ``start``.

    With ``noise > 0`` hospitalizations and daily deaths are multiplied by
    independent lognormal factors of log-scale ``noise``; total deaths are then
    rebuilt as the running sum so the file stays self-consistent. The first
    day's ``new_deaths`` is the instantaneous death rate at ``start``.
    """
    if n_days < 2:
        raise ValueError("n_days must be at least 2")
    traj = integrate(u0, x, TimeGrid.days(n_days, substeps))
    hosp = traj.states[:, H].copy()
    total = traj.states[:, D].copy()
    first = float(rhs(0.0, traj.states[0], np.asarray(x, dtype=float))[D])
    new = np.concatenate([[first], np.diff(total)])
    if noise > 0:
        rng = make_rng(seed, SYNTHETIC_STREAM)
        hosp = hosp * rng.lognormal(0.0, noise, n_days)
        new = new * rng.lognormal(0.0, noise, n_days)
        total = total[0] + np.concatenate([[0.0], np.cumsum(new[1:])])
    dates = tuple(start + dt.timedelta(days=k) for k in range(n_days))
    return SurveillanceDataset(dates, hosp, np.maximum(new, 0.0), total)
