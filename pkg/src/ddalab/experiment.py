"""Turning an :class:`ExperimentConfig` into systems, references and runs.

Every function here is a plain module-level function of picklable
arguments so the CLI can hand them to a process pool.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import lorenz as lz
from .config import ExperimentConfig
from .dda import ErrorSeries, Schedule, VerdictConfig, convergence_time, run
from .integrators import StepperConfig
from .nse2d import core as ns
from .nse2d.grid import FourierGrid
from .observation import ObservationOp


@dataclass
class Setup:
    """Everything :func:`ddalab.dda.run` needs apart from the reference state."""

    system: object
    obs: ObservationOp
    stepper: StepperConfig
    verdict: VerdictConfig
    metadata: dict


def lorenz_params(cfg: ExperimentConfig) -> lz.LorenzParams:
    p = cfg.lorenz
    return lz.LorenzParams(sigma=p.sigma, b=p.b, r=p.r)


@lru_cache(maxsize=8)
def _nse_params_cached(section) -> ns.NseParams:
    grid = FourierGrid(section.N, section.L)
    f = ns.kolmogorov_forcing(grid, section.f_norm, kind=section.forcing)
    return ns.NseParams(section.nu, f, grid)


def nse_params(cfg: ExperimentConfig) -> ns.NseParams:
    return _nse_params_cached(cfg.nse2d)


def stepper(cfg: ExperimentConfig) -> StepperConfig:
    r = cfg.resolved().integrator
    return StepperConfig(r.scheme, r.dt)


@lru_cache(maxsize=64)
def _reference_cached(system, section, t_spinup, dt, seed):
    if system == "lorenz":
        p = lz.LorenzParams(section.sigma, section.b, section.r)
        return lz.spin_up(p, seed=seed, t_spinup=t_spinup, dt=dt)
    return ns.spin_up(_nse_params_cached(section), seed=seed, t_spinup=t_spinup, dt=dt)


def reference(cfg: ExperimentConfig, seed: int) -> np.ndarray:
    """The spun-up reference state for ``seed`` (cached per process)."""
    section = cfg.lorenz if cfg.system == "lorenz" else cfg.nse2d
    U = _reference_cached(cfg.system, section, cfg.experiment.t_spinup,
                          stepper(cfg).dt, seed)
    return U.copy()


def observation(cfg: ExperimentConfig, lam: float | None = None) -> ObservationOp:
    if cfg.system == "lorenz":
        return lz.proj_X()
    p = nse_params(cfg)
    return ns.proj_lambda(p.grid, cfg.nse2d.lam if lam is None else lam)


def make_eta(cfg: ExperimentConfig, obs: ObservationOp, seed: int):
    """``None`` for ``eta = 0``; otherwise a random ``Q``-range state of
    norm ``eta.norm`` (``|.|`` for Lorenz, ``||.||`` for Navier-Stokes)."""
    if cfg.eta.kind == "zero" or cfg.eta.norm == 0:
        return None
    rng = np.random.default_rng([seed, 7])
    if cfg.system == "lorenz":
        v = obs.apply_Q(rng.standard_normal(3))
        return v * (cfg.eta.norm / np.linalg.norm(v))
    p = nse_params(cfg)
    v = obs.apply_Q(ns.random_field(p.grid, rng))
    return v * (cfg.eta.norm / ns.norms(p.grid, v)[1])


def schedule(cfg: ExperimentConfig, seed: int, h: float | None = None) -> Schedule:
    s = cfg.resolved().schedule
    h = s.h if h is None else h
    if s.kind == "uniform":
        return Schedule.uniform(h, horizon=s.horizon)
    rng = np.random.default_rng([seed, 11])
    return Schedule.random_gaps(h, s.horizon, rng)


def setup(cfg: ExperimentConfig, U0=None, lam: float | None = None) -> Setup:
    cfg = cfg.resolved()
    st = stepper(cfg)
    meta = {"system": cfg.system}
    if cfg.system == "lorenz":
        system = lz.LorenzSystem(lorenz_params(cfg))
    else:
        p = nse_params(cfg)
        system = ns.NseSystem(p)
        if U0 is not None:
            dt = ns.cfl_dt(p.grid, U0, st.dt)
            if dt < st.dt:
                st = StepperConfig(st.scheme, dt)
        meta.update(nu=p.nu, f_norm=p.forcing_norm, N=p.grid.N, L=p.grid.L,
                    lam=cfg.nse2d.lam if lam is None else lam, dt_configured=cfg.integrator.dt)
    v = cfg.verdict
    return Setup(system, observation(cfg, lam), st,
                 VerdictConfig(v.tol_rel, v.blowup_factor, v.dwell), meta)


def run_one(cfg: ExperimentConfig, seed: int, U0=None, h: float | None = None,
            lam: float | None = None) -> ErrorSeries:
    """One assimilation run; ``U0`` defaults to the cached reference."""
    cfg = cfg.resolved()
    if U0 is None:
        U0 = reference(cfg, seed)
    s = setup(cfg, U0, lam)
    sched = schedule(cfg, seed, h)
    eta = make_eta(cfg, s.obs, seed)
    meta = dict(s.metadata, seed=seed, t_spinup=cfg.experiment.t_spinup)
    return run(s.system, U0, s.obs, sched, s.stepper, eta,
               sample_dt=cfg.schedule.sample_dt, verdict_cfg=s.verdict, metadata=meta)


def summarize(series: ErrorSeries) -> dict:
    """Scalar outcome of a run for sweep tables."""
    e0 = series.initial_error
    final = float(series.err[-1])
    tc = convergence_time(series, series.metadata.get("tol_rel", 1e-6))
    steps = None
    if tc is not None:
        t_up, _ = series.at_updates()
        steps = int(np.searchsorted(t_up, tc, side="left"))
    return {
        "verdict": series.verdict.value,
        "final_error": final,
        "error_reduction": final / e0 if e0 > 0 else math.nan,
        "converge_time": tc,
        "steps_to_converge": steps,
        "blowup_time": series.blowup_time,
    }
