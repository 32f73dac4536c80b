"""Experiment configuration: an INI file with one section per concern.

Example::

    [experiment]
    system = lorenz
    seed_count = 5

    [lorenz]
    sigma = 10.0
    b = 2.6666666666666665
    r = 28.0

    [schedule]
    kind = uniform
    h = 0.1
    horizon = 100.0

Unset optional keys are written as empty values and read back as
``None``; floats are written with ``repr`` so a dump/load cycle is exact.
Values left unset in ``[integrator]`` and ``[schedule]`` take
system-specific defaults via :meth:`ExperimentConfig.resolved`.
"""
import configparser
import dataclasses
import io
import math
import typing
from dataclasses import dataclass, field
from typing import Optional

SYSTEMS = ("lorenz", "nse2d")
SCHEDULE_KINDS = ("uniform", "random")
ETA_KINDS = ("zero", "random")
SCHEMES = ("RK4", "IFRK4")
FORCINGS = ("kolmogorov4", "shear", "shell")


class ConfigError(ValueError):
    """Invalid configuration; ``path`` names the offending field."""

    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path


@dataclass(frozen=True)
class ExperimentSection:
    system: str = "lorenz"
    seed: int = 0
    seed_count: int = 5
    t_spinup: float = 100.0


@dataclass(frozen=True)
class LorenzSection:
    sigma: float = 10.0
    b: float = 8.0 / 3.0
    r: float = 28.0


@dataclass(frozen=True)
class NseSection:
    N: int = 64
    L: float = 2 * math.pi
    nu: float = 0.025
    forcing: str = "kolmogorov4"
    # |f| of a unit-amplitude sin(4y) shear on the 2 pi box
    f_norm: float = 2 * math.pi / math.sqrt(2.0)
    lam: float = 16.0
    c: float = 1.0
    R: Optional[float] = None
    t_star_target: Optional[float] = None


@dataclass(frozen=True)
class ScheduleSection:
    kind: str = "uniform"
    h: Optional[float] = None
    horizon: Optional[float] = None
    sample_dt: Optional[float] = None


@dataclass(frozen=True)
class EtaSection:
    kind: str = "zero"
    norm: float = 0.0


@dataclass(frozen=True)
class IntegratorSection:
    scheme: Optional[str] = None
    dt: Optional[float] = None


@dataclass(frozen=True)
class VerdictSection:
    tol_rel: float = 1e-6
    blowup_factor: float = 1e3
    dwell: float = 0.1


@dataclass(frozen=True)
class ThresholdSection:
    h_lo: float = 0.05
    h_hi: float = 0.5
    resolution: Optional[float] = None


@dataclass(frozen=True)
class SweepSection:
    h: tuple = ()
    lam: tuple = ()


_DEFAULTS = {
    "lorenz": {"scheme": "RK4", "dt": 1e-3, "h": 0.1, "horizon": 100.0},
    "nse2d": {"scheme": "IFRK4", "dt": 0.02, "h": 0.5, "horizon": 30.0},
}


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: ExperimentSection = field(default_factory=ExperimentSection)
    lorenz: LorenzSection = field(default_factory=LorenzSection)
    nse2d: NseSection = field(default_factory=NseSection)
    schedule: ScheduleSection = field(default_factory=ScheduleSection)
    eta: EtaSection = field(default_factory=EtaSection)
    integrator: IntegratorSection = field(default_factory=IntegratorSection)
    verdict: VerdictSection = field(default_factory=VerdictSection)
    threshold: ThresholdSection = field(default_factory=ThresholdSection)
    sweep: SweepSection = field(default_factory=SweepSection)

    @property
    def system(self) -> str:
        return self.experiment.system

    def replace(self, section: str, **changes) -> "ExperimentConfig":
        new = dataclasses.replace(getattr(self, section), **changes)
        return dataclasses.replace(self, **{section: new})

    def resolved(self) -> "ExperimentConfig":
        """Fill unset integrator and schedule values with the system defaults."""
        d = _DEFAULTS[self.system]
        integ = IntegratorSection(self.integrator.scheme or d["scheme"],
                                  self.integrator.dt or d["dt"])
        sched = dataclasses.replace(
            self.schedule,
            h=self.schedule.h if self.schedule.h is not None else d["h"],
            horizon=self.schedule.horizon if self.schedule.horizon is not None else d["horizon"])
        return dataclasses.replace(self, integrator=integ, schedule=sched)

    def validate(self) -> "ExperimentConfig":
        validate(self)
        return self

    def to_ini(self) -> str:
        cp = configparser.ConfigParser(interpolation=None)
        cp.optionxform = str
        for sec in dataclasses.fields(self):
            obj = getattr(self, sec.name)
            cp[sec.name] = {f.name: _dump(getattr(obj, f.name)) for f in dataclasses.fields(obj)}
        buf = io.StringIO()
        cp.write(buf)
        return buf.getvalue()

    @classmethod
    def from_ini(cls, text: str) -> "ExperimentConfig":
        cp = configparser.ConfigParser(interpolation=None)
        cp.optionxform = str
        try:
            cp.read_string(text)
        except configparser.Error as exc:
            raise ConfigError("<file>", f"unparseable INI: {exc}") from None
        known = {f.name: f for f in dataclasses.fields(cls)}
        for name in cp.sections():
            if name not in known:
                raise ConfigError(name, "unknown section")
        sections = {}
        for name, sec_field in known.items():
            sec_cls = sec_field.default_factory
            if name not in cp:
                sections[name] = sec_cls()
                continue
            hints = typing.get_type_hints(sec_cls)
            names = {f.name for f in dataclasses.fields(sec_cls)}
            kwargs = {}
            for key, raw in cp[name].items():
                if key not in names:
                    raise ConfigError(f"{name}.{key}", "unknown key")
                kwargs[key] = _parse(f"{name}.{key}", raw, hints[key])
            sections[name] = sec_cls(**kwargs)
        return cls(**sections)

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        with open(path) as fh:
            return cls.from_ini(fh.read())

    def save(self, path) -> None:
        with open(path, "w") as fh:
            fh.write(self.to_ini())


def _dump(v) -> str:
    if v is None:
        return ""
    if isinstance(v, tuple):
        return ", ".join(repr(float(x)) for x in v)
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _parse(path: str, raw: str, typ):
    raw = raw.strip()
    optional = typing.get_origin(typ) is typing.Union
    if optional:
        if raw == "":
            return None
        typ = next(a for a in typing.get_args(typ) if a is not type(None))
    try:
        if typ is tuple:
            return tuple(float(x) for x in raw.replace(",", " ").split())
        if typ is int:
            return int(raw)
        if typ is float:
            return float(raw)
        return raw
    except ValueError:
        raise ConfigError(path, f"cannot read {raw!r} as {typ.__name__}") from None


def _check(ok: bool, path: str, message: str):
    if not ok:
        raise ConfigError(path, message)


def _positive(value, path):
    _check(value is not None and value > 0 and math.isfinite(value), path,
           f"must be positive and finite, got {value!r}")


def validate(cfg: ExperimentConfig) -> None:
    """Raise :class:`ConfigError` naming the first invalid field."""
    e = cfg.experiment
    _check(e.system in SYSTEMS, "experiment.system", f"must be one of {SYSTEMS}, got {e.system!r}")
    _check(e.seed >= 0, "experiment.seed", "must be nonnegative")
    _check(e.seed_count >= 1, "experiment.seed_count", "must be at least 1")
    _check(e.t_spinup >= 0, "experiment.t_spinup", "must be nonnegative")

    if e.system == "lorenz":
        lz = cfg.lorenz
        _positive(lz.sigma, "lorenz.sigma")
        _positive(lz.r, "lorenz.r")
        _check(lz.b > 1, "lorenz.b",
               f"must exceed 1: the bound K = b^2 (r+sigma)^2 / (4 (b-1)) "
               f"has denominator 4(b-1), got b={lz.b!r}")
    else:
        ns = cfg.nse2d
        _check(ns.N >= 8 and ns.N & (ns.N - 1) == 0, "nse2d.N", f"must be a power of two >= 8, got {ns.N!r}")
        _positive(ns.L, "nse2d.L")
        _positive(ns.nu, "nse2d.nu")
        _positive(ns.f_norm, "nse2d.f_norm")
        _check(ns.forcing in FORCINGS, "nse2d.forcing", f"must be one of {FORCINGS}")
        _check(ns.lam >= 0, "nse2d.lam", "must be nonnegative")
        _positive(ns.c, "nse2d.c")
        if ns.R is not None:
            _check(ns.R >= 0, "nse2d.R", "must be nonnegative")
        if ns.t_star_target is not None:
            _positive(ns.t_star_target, "nse2d.t_star_target")

    s = cfg.schedule
    _check(s.kind in SCHEDULE_KINDS, "schedule.kind", f"must be one of {SCHEDULE_KINDS}")
    if s.h is not None:
        _positive(s.h, "schedule.h")
    if s.horizon is not None:
        _positive(s.horizon, "schedule.horizon")
    if s.sample_dt is not None:
        _positive(s.sample_dt, "schedule.sample_dt")

    _check(cfg.eta.kind in ETA_KINDS, "eta.kind", f"must be one of {ETA_KINDS}")
    _check(cfg.eta.norm >= 0, "eta.norm", "must be nonnegative")

    i = cfg.integrator
    if i.scheme is not None:
        _check(i.scheme in SCHEMES, "integrator.scheme", f"must be one of {SCHEMES}")
    if i.dt is not None:
        _positive(i.dt, "integrator.dt")

    v = cfg.verdict
    _positive(v.tol_rel, "verdict.tol_rel")
    _check(v.blowup_factor > 1, "verdict.blowup_factor", "must exceed 1")
    _check(0 < v.dwell <= 1, "verdict.dwell", "must lie in (0, 1]")

    t = cfg.threshold
    _positive(t.h_lo, "threshold.h_lo")
    _check(t.h_hi > t.h_lo, "threshold.h_hi", "must exceed threshold.h_lo")
    if t.resolution is not None:
        _positive(t.resolution, "threshold.resolution")

    for k, x in enumerate(cfg.sweep.h):
        _positive(x, f"sweep.h[{k}]")
    for k, x in enumerate(cfg.sweep.lam):
        _check(x >= 0, f"sweep.lam[{k}]", "must be nonnegative")
