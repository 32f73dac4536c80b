"""Discrete data assimilation driver.

The approximating solution follows the model between observation times
and, at each ``t_n``, has its observed component overwritten by the
reference's::

    u_0 = eta + P U(t_0),   u_{n+1} = Q S(t_{n+1}, t_n, u_n) + P U(t_{n+1})

Reference and approximating states are advanced together as one stacked
array with the same integrator and step partition, so the recorded error
``delta = U - u`` reflects the assimilation and not scheme mismatch.
"""
from __future__ import annotations

import csv
import enum
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Sequence

import numpy as np

from .analysis import BracketError
from .integrators import BlowUpError, StepperConfig, integrate, step_sizes
from .observation import ObservationOp

__all__ = [
    "Verdict",
    "Schedule",
    "VerdictConfig",
    "ErrorSeries",
    "initial_guess",
    "assimilate_step",
    "run",
    "detect_convergence",
    "convergence_time",
    "ThresholdConfig",
    "ThresholdResult",
    "threshold_search",
    "majority",
    "BoundednessReport",
    "boundedness_monitor",
    "monotonicity_anomalies",
    "write_series_csv",
    "read_series_csv",
    "SERIES_SCHEMA",
]

SERIES_SCHEMA = "ddalab.errorseries/1"
SERIES_COLUMNS = ("t", "err_l2", "err_h1", "u_l2", "u_h1", "event")


class Verdict(str, enum.Enum):
    CONVERGED = "Converged"
    DIVERGED = "Diverged"
    UNDECIDED = "Undecided"


@dataclass(frozen=True)
class Schedule:
    """Observation times: uniform ``t_0 + n h`` or an explicit list."""

    times: np.ndarray
    h: float | None = None

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        if t.ndim != 1 or t.size < 2:
            raise ValueError("a schedule needs at least two observation times")
        if not np.all(np.diff(t) > 0):
            raise ValueError("observation times must be strictly increasing")
        object.__setattr__(self, "times", t)

    @classmethod
    def uniform(cls, h: float, horizon: float | None = None,
                n_max: int | None = None, t0: float = 0.0) -> "Schedule":
        if not h > 0:
            raise ValueError("h must be positive")
        if n_max is None:
            if horizon is None:
                raise ValueError("give either horizon or n_max")
            n_max = max(1, int(math.floor(horizon / h + 1e-9)))
        # t0 + n*h rather than accumulated sums: no drift over 10^4 windows
        return cls(t0 + h * np.arange(n_max + 1), h=h)

    @classmethod
    def explicit(cls, times: Iterable[float]) -> "Schedule":
        return cls(np.asarray(list(times), dtype=float))

    @classmethod
    def random_gaps(cls, h_max: float, horizon: float, rng,
                    t0: float = 0.0) -> "Schedule":
        """Gaps drawn uniformly from ``(0, h_max]`` until ``horizon``."""
        times = [t0]
        while times[-1] < t0 + horizon:
            gap = h_max * (1.0 - rng.random())  # in (0, h_max]
            times.append(times[-1] + gap)
        return cls.explicit(times)

    @property
    def t0(self) -> float:
        return float(self.times[0])

    @property
    def t_end(self) -> float:
        return float(self.times[-1])

    @property
    def max_gap(self) -> float:
        return float(np.max(np.diff(self.times)))

    def describe(self) -> str:
        if self.h is not None:
            return f"uniform h={self.h!r} n={self.times.size - 1} t0={self.t0!r}"
        return (f"explicit n={self.times.size - 1} t0={self.t0!r} "
                f"t_end={self.t_end!r} max_gap={self.max_gap!r}")


@dataclass(frozen=True)
class VerdictConfig:
    tol_rel: float = 1e-6
    blowup_factor: float = 1e3
    dwell: float = 0.1

    def as_dict(self):
        return {"tol_rel": self.tol_rel, "blowup_factor": self.blowup_factor,
                "dwell": self.dwell}


@dataclass
class ErrorSeries:
    """Samples of ``delta = U - u`` and of ``u`` along one assimilation run.

    At an observation time two samples share the same ``t``: the limit
    from the left (``event="step"``) followed by the post-update value
    (``event="update"``). Every other sample is a ``"step"``.
    """

    t: np.ndarray
    err_l2: np.ndarray
    u_l2: np.ndarray
    event: list
    err_h1: np.ndarray | None = None
    u_h1: np.ndarray | None = None
    verdict: Verdict = Verdict.UNDECIDED
    blowup_time: float | None = None
    metadata: dict = field(default_factory=dict)

    @property
    def err(self) -> np.ndarray:
        """The norm convergence is judged in (``H^1`` when available)."""
        return self.err_h1 if self.err_h1 is not None else self.err_l2

    @property
    def initial_error(self) -> float:
        return float(self.err[0])

    def at_updates(self):
        """``(t_n, err(t_n+))`` for every observation time."""
        idx = [i for i, e in enumerate(self.event) if e == "update"]
        return self.t[idx], self.err[idx]

    def before_updates(self):
        """``(t_n, err(t_n-))`` for every observation time after the first."""
        idx = [i for i, e in enumerate(self.event)
               if e == "step" and i + 1 < len(self.event)
               and self.event[i + 1] == "update"]
        return self.t[idx], self.err[idx]

    def __len__(self):
        return len(self.t)


def initial_guess(obs: ObservationOp, like, eta=None) -> np.ndarray:
    """The unobserved initial guess, forced into the range of ``Q``."""
    if eta is None:
        return np.zeros_like(np.asarray(like))
    return obs.apply_Q(np.asarray(eta))


def assimilate_step(S: Callable, u_n, obs: ObservationOp, U_next):
    """``Q S(u_n) + P U_next``: the observed part jumps, the rest is continuous."""
    return obs.insert(S(u_n), U_next)


def _norm_fn(system):
    if hasattr(system, "norms"):
        return system.norms
    return lambda y: (np.linalg.norm(np.ravel(y)), None)


def run(system, U0, obs: ObservationOp, schedule: Schedule, stepper: StepperConfig,
        eta=None, *, sample_dt: float | None = None,
        verdict_cfg: VerdictConfig = VerdictConfig(),
        metadata: dict | None = None) -> ErrorSeries:
    """Assimilate observations of the reference started at ``U0`` at time
    ``schedule.t0``.

    ``sample_dt`` adds intermediate samples inside each window (the window
    is then integrated in sub-intervals of that length; the last one is
    shortened). Blow-up of the approximating solution ends the run with
    verdict ``Diverged`` and the failing time recorded.
    """
    norms = _norm_fn(system)
    U0 = np.asarray(U0)
    eta = initial_guess(obs, U0, eta)
    u0 = eta + obs.apply_P(U0)
    pair = np.stack([U0, u0])

    ts, el2, eh1, ul2, uh1, events = [], [], [], [], [], []

    def record(t, pair, event):
        e = norms(pair[0] - pair[1])
        n = norms(pair[1])
        ts.append(t)
        el2.append(e[0])
        eh1.append(e[1])
        ul2.append(n[0])
        uh1.append(n[1])
        events.append(event)

    times = schedule.times
    record(times[0], pair, "update")
    blowup = None
    try:
        for n in range(times.size - 1):
            ta, tb = float(times[n]), float(times[n + 1])
            if sample_dt is None:
                pair = integrate(system, pair, ta, tb, stepper)
            else:
                k, _ = step_sizes(ta, tb, sample_dt)
                for j in range(k):
                    t_lo = ta + j * sample_dt
                    t_hi = tb if j == k - 1 else ta + (j + 1) * sample_dt
                    pair = integrate(system, pair, t_lo, t_hi, stepper)
                    if j < k - 1:
                        record(t_hi, pair, "step")
            record(tb, pair, "step")
            pair[1] = obs.insert(pair[1], pair[0])
            record(tb, pair, "update")
    except BlowUpError as exc:
        blowup = exc.t

    has_h1 = eh1[0] is not None
    meta = {
        "schedule": schedule.describe(),
        "scheme": stepper.scheme.value,
        "dt": stepper.dt,
        "observation": obs.name,
        "observation_rank": obs.rank,
        "eta_norm": float(norms(eta)[0]),
        "sample_dt": sample_dt,
        **verdict_cfg.as_dict(),
    }
    if metadata:
        meta.update(metadata)
    series = ErrorSeries(
        t=np.asarray(ts), err_l2=np.asarray(el2, dtype=float),
        u_l2=np.asarray(ul2, dtype=float), event=events,
        err_h1=np.asarray(eh1, dtype=float) if has_h1 else None,
        u_h1=np.asarray(uh1, dtype=float) if has_h1 else None,
        blowup_time=blowup, metadata=meta)
    series.verdict = detect_convergence(series, verdict_cfg)
    series.metadata["verdict"] = series.verdict.value
    return series


def detect_convergence(series: ErrorSeries, cfg: VerdictConfig = VerdictConfig(),
                       horizon: float | None = None) -> Verdict:
    """Finite-horizon reading of "converges as t -> infinity".

    Diverged: blow-up, or the error exceeds ``blowup_factor`` times its
    initial value. Converged: the error is below ``tol_rel`` times its
    initial value over the final ``dwell`` fraction of the horizon.
    Anything else is Undecided.
    """
    if len(series) == 0:
        raise ValueError("empty series")
    if series.blowup_time is not None:
        return Verdict.DIVERGED
    err = series.err
    t = series.t
    e0 = float(err[0])
    if not np.all(np.isfinite(err)):
        return Verdict.DIVERGED
    if e0 == 0.0:
        return Verdict.CONVERGED if np.all(err == 0.0) else Verdict.UNDECIDED
    if np.max(err) > cfg.blowup_factor * e0:
        return Verdict.DIVERGED
    t_end = float(t[-1]) if horizon is None else float(t[0]) + horizon
    if float(t[-1]) < t_end:
        return Verdict.UNDECIDED
    tail = t >= t_end - cfg.dwell * (t_end - float(t[0]))
    if np.all(err[tail] < cfg.tol_rel * e0):
        return Verdict.CONVERGED
    return Verdict.UNDECIDED


def convergence_time(series: ErrorSeries, tol_rel: float = 1e-6) -> float | None:
    """First time after which the error stays below ``tol_rel * err(t_0)``."""
    err = series.err
    below = err < tol_rel * err[0]
    if not below[-1]:
        return None
    bad = np.flatnonzero(~below)
    if bad.size == 0:
        return float(series.t[0])
    return float(series.t[bad[-1] + 1])


def majority(verdicts: Sequence[Verdict]) -> Verdict:
    """Strict-majority verdict; ties and splits give Undecided."""
    n = len(verdicts)
    for v in (Verdict.CONVERGED, Verdict.DIVERGED):
        if sum(1 for x in verdicts if x == v) * 2 > n:
            return v
    return Verdict.UNDECIDED


@dataclass(frozen=True)
class ThresholdConfig:
    n_seeds: int = 5
    resolution: float | None = None


@dataclass
class ThresholdResult:
    h_conv: float
    h_div: float
    probes: list  # (h, [verdict per seed])

    @property
    def width(self) -> float:
        return self.h_div - self.h_conv


def threshold_search(probe: Callable[[float, int], Verdict], h_lo: float, h_hi: float,
                     cfg: ThresholdConfig = ThresholdConfig(),
                     map_fn=map) -> ThresholdResult:
    """Bisection on the observation interval for the empirical critical ``h``.

    ``probe(h, seed)`` runs one assimilation experiment and returns its
    verdict. An interval counts as converging when a strict majority of
    seeds converge. ``map_fn`` may be an executor's ``map`` to dispatch
    seeds concurrently; results are consumed in seed order.
    """
    if not 0 < h_lo < h_hi:
        raise ValueError("require 0 < h_lo < h_hi")
    resolution = cfg.resolution or (h_hi - h_lo) / 32.0
    probes = []

    def converges(h):
        seeds = list(range(cfg.n_seeds))
        verdicts = list(map_fn(probe, [h] * len(seeds), seeds))
        probes.append((h, verdicts))
        return majority(verdicts) is Verdict.CONVERGED

    if not converges(h_lo):
        raise BracketError(
            f"h_lo={h_lo!r} does not converge for a majority of seeds; "
            f"lower h_lo to widen the bracket")
    if converges(h_hi):
        raise BracketError(
            f"h_hi={h_hi!r} still converges for a majority of seeds; "
            f"raise h_hi to widen the bracket")
    lo, hi = h_lo, h_hi
    while hi - lo > resolution:
        mid = 0.5 * (lo + hi)
        if converges(mid):
            lo = mid
        else:
            hi = mid
    return ThresholdResult(lo, hi, probes)


@dataclass(frozen=True)
class BoundednessReport:
    sup: float
    bound: float
    norm: str

    @property
    def ok(self) -> bool:
        return self.sup <= self.bound


def boundedness_monitor(series: ErrorSeries, bound: float,
                        norm: str = "auto") -> BoundednessReport:
    """Largest sampled norm of the approximating solution against ``bound``.

    ``norm="auto"`` uses the ``H^1`` norm when the series carries it (the
    Navier-Stokes bound is on ``||u||``) and ``|u|`` otherwise; ``bound``
    is in the same units as the norm, not squared.
    """
    if norm == "auto":
        norm = "h1" if series.u_h1 is not None else "l2"
    values = series.u_h1 if norm == "h1" else series.u_l2
    return BoundednessReport(sup=float(np.max(values)), bound=float(bound), norm=norm)


def monotonicity_anomalies(verdicts: dict, axis_order: Sequence) -> list:
    """Flag ``Converged -> Diverged`` flips along an axis ordered from the
    easiest setting to the hardest (e.g. decreasing ``lambda`` at fixed
    ``h``). Returns ``(easier, harder)`` key pairs where the easier setting
    diverged while a harder one converged.
    """
    anomalies = []
    keys = [k for k in axis_order if k in verdicts]
    for i, easy in enumerate(keys):
        if verdicts[easy] is not Verdict.DIVERGED:
            continue
        for hard in keys[i + 1:]:
            if verdicts[hard] is Verdict.CONVERGED:
                anomalies.append((easy, hard))
    return anomalies


def write_series_csv(path, series: ErrorSeries):
    """CSV with ``# key=value`` metadata comment lines before the header."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    meta = {"schema": SERIES_SCHEMA, **series.metadata,
            "verdict": series.verdict.value, "blowup_time": series.blowup_time}
    with open(path, "w", newline="") as fh:
        for k, v in meta.items():
            fh.write(f"# {k}={json.dumps(v, default=str)}\n")
        w = csv.writer(fh)
        w.writerow(SERIES_COLUMNS)
        for i in range(len(series)):
            w.writerow([
                repr(float(series.t[i])),
                repr(float(series.err_l2[i])),
                "" if series.err_h1 is None else repr(float(series.err_h1[i])),
                repr(float(series.u_l2[i])),
                "" if series.u_h1 is None else repr(float(series.u_h1[i])),
                series.event[i],
            ])


def read_series_csv(path) -> ErrorSeries:
    meta = {}
    rows = []
    with open(path, newline="") as fh:
        lines = []
        for line in fh:
            if line.startswith("# "):
                k, _, v = line[2:].rstrip("\n").partition("=")
                meta[k] = json.loads(v)
            else:
                lines.append(line)
        reader = csv.reader(lines)
        header = next(reader)
        if tuple(header) != SERIES_COLUMNS:
            raise ValueError(f"unexpected columns {header!r}")
        rows = list(reader)
    if meta.get("schema") != SERIES_SCHEMA:
        raise ValueError(f"unsupported schema {meta.get('schema')!r}")
    col = lambda j: [r[j] for r in rows]  # noqa: E731
    has_h1 = bool(rows) and rows[0][2] != ""
    fl = lambda xs: np.array([float(x) for x in xs])  # noqa: E731
    return ErrorSeries(
        t=fl(col(0)), err_l2=fl(col(1)),
        err_h1=fl(col(2)) if has_h1 else None,
        u_l2=fl(col(3)), u_h1=fl(col(4)) if has_h1 else None,
        event=col(5), verdict=Verdict(meta.pop("verdict")),
        blowup_time=meta.pop("blowup_time"), metadata=meta)
