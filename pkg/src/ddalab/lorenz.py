"""The Lorenz system written as ``dU/dt + AU + B(U,U) = f``.

The state is shifted so that ``Z`` measures the distance from ``r + sigma``:

    X' = -sigma X + sigma Y
    Y' = -sigma X - Y - X Z
    Z' = -b Z + X Y - b (r + sigma)

States are numpy arrays whose last axis holds ``(X, Y, Z)``; leading axes
batch independent trajectories. Also here: the X-observation projection
and the analytic bounds for discrete assimilation of X (attractor radius,
error growth rate, the per-window contraction factor ``M`` and the
critical interval where it drops below one, and the boundedness
constants for arbitrary update intervals).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numba
import numpy as np

from .analysis import BracketError, RootConfig, bisect
from .integrators import StepperConfig, integrate
from .observation import ObservationOp

__all__ = [
    "LorenzParams",
    "LorenzSystem",
    "LorenzBounds",
    "linear_operator",
    "forcing",
    "bilinear_B",
    "rhs",
    "rhs_components",
    "attractor_bound_K",
    "growth_rate_beta",
    "contraction_M",
    "t_star",
    "proj_X",
    "initial_error_bound",
    "boundedness_constants",
    "lorenz_bounds",
    "spin_up",
]


@dataclass(frozen=True)
class LorenzParams:
    sigma: float = 10.0
    b: float = 8.0 / 3.0
    r: float = 28.0

    def __post_init__(self):
        if not self.sigma > 0:
            raise ValueError(f"sigma must be positive, got {self.sigma!r}")
        if not self.r > 0:
            raise ValueError(f"r must be positive, got {self.r!r}")
        if not self.b > 1:
            raise ValueError(
                f"b must exceed 1 (the attractor bound K divides by "
                f"4(b-1)), got {self.b!r}")


def linear_operator(p: LorenzParams) -> np.ndarray:
    return np.array([[p.sigma, -p.sigma, 0.0],
                     [p.sigma, 1.0, 0.0],
                     [0.0, 0.0, p.b]])


def forcing(p: LorenzParams) -> np.ndarray:
    return np.array([0.0, 0.0, -p.b * (p.r + p.sigma)])


def bilinear_B(u, v):
    """Symmetrized quadratic term; ``B(u, u) = (0, XZ, -XY)``."""
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    X, Y, Z = u[..., 0], u[..., 1], u[..., 2]
    Xt, Yt, Zt = v[..., 0], v[..., 1], v[..., 2]
    return np.stack([np.zeros_like(X + Xt),
                     0.5 * (X * Zt + Z * Xt),
                     -0.5 * (X * Yt + Y * Xt)], axis=-1)


def rhs(p: LorenzParams, u):
    """``f - A u - B(u, u)``."""
    u = np.asarray(u, dtype=float)
    return forcing(p) - u @ linear_operator(p).T - bilinear_B(u, u)


def rhs_components(p: LorenzParams, u):
    """The same vector field written out component by component."""
    u = np.asarray(u, dtype=float)
    X, Y, Z = u[..., 0], u[..., 1], u[..., 2]
    s, b, r = p.sigma, p.b, p.r
    return np.stack([-s * X + s * Y,
                     -s * X - Y - X * Z,
                     -b * Z + X * Y - b * (r + s)], axis=-1)


@numba.njit(cache=True)
def _rk4_kernel(y, sigma, b, r, dt, n, dt_last):
    out = y.copy()
    c = b * (r + sigma)
    m = out.shape[0]
    for i in range(n):
        h = dt if i < n - 1 else dt_last
        for j in range(m):
            x0, y0, z0 = out[j, 0], out[j, 1], out[j, 2]
            a1 = sigma * (y0 - x0)
            b1 = -sigma * x0 - y0 - x0 * z0
            c1 = -b * z0 + x0 * y0 - c
            x1 = x0 + 0.5 * h * a1
            y1 = y0 + 0.5 * h * b1
            z1 = z0 + 0.5 * h * c1
            a2 = sigma * (y1 - x1)
            b2 = -sigma * x1 - y1 - x1 * z1
            c2 = -b * z1 + x1 * y1 - c
            x2 = x0 + 0.5 * h * a2
            y2 = y0 + 0.5 * h * b2
            z2 = z0 + 0.5 * h * c2
            a3 = sigma * (y2 - x2)
            b3 = -sigma * x2 - y2 - x2 * z2
            c3 = -b * z2 + x2 * y2 - c
            x3 = x0 + h * a3
            y3 = y0 + h * b3
            z3 = z0 + h * c3
            a4 = sigma * (y3 - x3)
            b4 = -sigma * x3 - y3 - x3 * z3
            c4 = -b * z3 + x3 * y3 - c
            xn = x0 + h / 6.0 * (a1 + 2.0 * a2 + 2.0 * a3 + a4)
            yn = y0 + h / 6.0 * (b1 + 2.0 * b2 + 2.0 * b3 + b4)
            zn = z0 + h / 6.0 * (c1 + 2.0 * c2 + 2.0 * c3 + c4)
            if not (np.isfinite(xn) and np.isfinite(yn) and np.isfinite(zn)):
                return out, i
            out[j, 0], out[j, 1], out[j, 2] = xn, yn, zn
    return out, -1


class LorenzSystem:
    """Vector field object consumed by :func:`ddalab.integrators.integrate`."""

    def __init__(self, params: LorenzParams = LorenzParams()):
        self.params = params

    def rhs(self, y):
        return rhs_components(self.params, y)

    def rk4_kernel(self, y, dt, n, dt_last):
        p = self.params
        shape = y.shape
        flat = np.ascontiguousarray(y, dtype=np.float64).reshape(-1, 3)
        out, fail = _rk4_kernel(flat, p.sigma, p.b, p.r, dt, n, dt_last)
        return out.reshape(shape), fail

    def norm(self, y):
        return np.linalg.norm(y, axis=-1)


def attractor_bound_K(p: LorenzParams) -> float:
    """Bound on ``|U|^2`` over the global attractor."""
    if p.b <= 1:
        raise ValueError("b must exceed 1")
    return p.b ** 2 * (p.r + p.sigma) ** 2 / (4.0 * (p.b - 1.0))


def _beta_from_K(K: float) -> float:
    if K < 1:
        raise ValueError(
            f"K={K!r} < 1 gives a negative growth rate; outside the regime "
            f"where the error growth estimate is meaningful")
    return 2.0 * (math.sqrt(K) - 1.0)


def growth_rate_beta(p: LorenzParams) -> float:
    """Rate ``beta`` with ``|delta(t)|^2 <= |delta(t_n)|^2 exp(beta (t - t_n))``."""
    return _beta_from_K(attractor_bound_K(p))


def contraction_M(p: LorenzParams, tau: float) -> float:
    """Per-window amplification bound ``|delta(t_n + tau)|^2 / |delta(t_n)|^2``.

    Closed form of ``exp(-tau) (1 + sigma K/(beta+sigma) int_0^tau
    (exp((beta+1)s) - exp(-(sigma-1)s)) ds)``.
    """
    if tau < 0:
        raise ValueError("tau must be nonnegative")
    K = attractor_bound_K(p)
    beta = _beta_from_K(K)
    s = p.sigma
    grow = math.expm1((beta + 1.0) * tau) / (beta + 1.0)
    if s == 1.0:
        decay = tau
    else:
        decay = -math.expm1(-(s - 1.0) * tau) / (s - 1.0)
    return math.exp(-tau) * (1.0 + s * K / (beta + s) * (grow - decay))


def t_star(p: LorenzParams, cfg: RootConfig = RootConfig()) -> float:
    """Root of ``M(t) = 1``: the end of the window where ``M < 1``.

    ``M`` starts at 1 with slope -1 and is convex, so the first sign
    change of ``M - 1`` found by doubling from a tiny probe is the root.
    """
    f = lambda t: contraction_M(p, t) - 1.0  # noqa: E731
    lo = 1e-12
    hi = cfg.hint if cfg.hint is not None else 1e-9
    if not f(lo) < 0:
        raise BracketError("M(t) is not below 1 just after t=0")
    prev = lo
    while True:
        if f(hi) >= 0:
            break
        prev = hi
        hi *= 2.0
        if hi > 10.0:
            raise BracketError("M(t) does not return to 1 within [0, 10]")
    return bisect(f, prev, hi, cfg)


def proj_X() -> ObservationOp:
    return ObservationOp(np.array([True, False, False]), name="P_X")


def initial_error_bound(p: LorenzParams, eta=None) -> float:
    """``R = 2 (K + |eta|^2)`` bounds ``|Q U(t_0) - eta|^2``."""
    eta2 = 0.0 if eta is None else float(np.sum(np.square(eta)))
    return 2.0 * (attractor_bound_K(p) + eta2)


def boundedness_constants(p: LorenzParams, eta=None, h: float = 1.0,
                          tstar: float | None = None) -> tuple[float, float]:
    """Return ``(M1, M4)``.

    ``|u(t)|^2 <= M1 / (1 - exp(-h))`` for updates every ``h``, with
    ``M1 = |eta|^2 + C1 + K + |f|^2`` and ``C1 = K g + |f|^2 (1 - g)``,
    ``g = exp(-h)``. ``M4`` bounds ``|u(t)|`` uniformly in ``h``; its
    large-``h`` branch uses the supremum of ``C1`` over ``h``, which is
    ``max(K, |f|^2)``.
    """
    if not h > 0:
        raise ValueError("h must be positive")
    K = attractor_bound_K(p)
    f2 = float(forcing(p) @ forcing(p))
    eta2 = 0.0 if eta is None else float(np.sum(np.square(eta)))
    g = math.exp(-h)
    C1 = K * g + f2 * (1.0 - g)
    M1 = eta2 + C1 + K + f2
    if tstar is None:
        tstar = t_star(p)
    R = initial_error_bound(p, eta)
    M1_uniform = eta2 + max(K, f2) + K + f2
    M4 = max(math.sqrt(K) + math.sqrt(R),
             math.sqrt(M1_uniform) / math.sqrt(-math.expm1(-tstar)))
    return M1, M4


@dataclass(frozen=True)
class LorenzBounds:
    K: float
    beta: float
    t_star: float
    R: float
    M1: float
    M4: float
    h: float

    def as_rows(self):
        """(name, value, formula) triples for reports."""
        return [
            ("K", self.K, "b^2 (r+sigma)^2 / (4 (b-1))"),
            ("beta", self.beta, "2 (K^(1/2) - 1)"),
            ("t_star", self.t_star, "root of M(t) = 1, M(tau) = e^-tau (1 + sigma K/(beta+sigma) int_0^tau (e^((beta+1)s) - e^(-(sigma-1)s)) ds)"),
            ("R", self.R, "2 (K + |eta|^2)"),
            ("M1", self.M1, "|eta|^2 + C1 + K + |f|^2, C1 = K e^-h + |f|^2 (1 - e^-h)"),
            ("M1_bound", self.M1 / -math.expm1(-self.h), "M1 / (1 - e^-h) bounds |u|^2"),
            ("M4", self.M4, "max(K^(1/2) + R^(1/2), M1^(1/2) / (1 - e^-t_star)^(1/2)) bounds |u|"),
        ]


def lorenz_bounds(p: LorenzParams, eta=None, h: float = 1.0) -> LorenzBounds:
    K = attractor_bound_K(p)
    ts = t_star(p)
    M1, M4 = boundedness_constants(p, eta, h, tstar=ts)
    return LorenzBounds(K=K, beta=_beta_from_K(K), t_star=ts,
                        R=initial_error_bound(p, eta), M1=M1, M4=M4, h=h)


def spin_up(p: LorenzParams = LorenzParams(), seed: int | None = None,
            t_spinup: float = 100.0, dt: float = 1e-3) -> np.ndarray:
    """A point on (numerically) the attractor.

    Starts from ``(1, 1, 1)``, perturbed by a standard normal draw when a
    ``seed`` is given, and integrates for ``t_spinup``.
    """
    u0 = np.ones(3)
    if seed is not None:
        u0 = u0 + np.random.default_rng(seed).standard_normal(3)
    return integrate(LorenzSystem(p), u0, 0.0, t_spinup, StepperConfig("RK4", dt))
