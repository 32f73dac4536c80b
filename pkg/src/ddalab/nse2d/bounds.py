"""Analytic constants for assimilating low Fourier modes of 2D Navier-Stokes.

Everything here is a function of ``(nu, |f|, L, lambda, R, c)``:
the attractor bound ``K`` on ``||U||^2``, the ``H^1`` error growth rate
``beta``, the per-window amplification ``M(tau)`` and its exponential
majorant ``m(tau)``, and the resolution thresholds on ``lambda``. The
Sobolev/Agmon constant ``c`` is not known numerically and is a parameter;
all reports carry the value used.

``M(tau)`` integrates ``g(s) e^(nu lambda s)``. The ``g_1`` part is a sum of
three exponentials. The ``g_2`` part carries the power ``8/3`` of a sum of
exponentials and has no elementary antiderivative; with ``x = e^(beta s/2)``
it becomes ``int x^(1+mu) (a x + b)^(8/3) dx`` which is a Gauss
hypergeometric function, evaluated with mpmath at extended precision.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

import mpmath as mp

from ..analysis import BracketError, RootConfig, bisect

__all__ = [
    "NseBounds",
    "nse_bounds",
    "bounds",
    "g_eval",
    "contraction_M_nse",
    "majorant_m",
    "majorant_dm",
    "lambda_for_tstar",
    "t_star_nse",
    "boundedness_threshold",
    "absorbing_bound_M5",
]

_Q = mp.mpf(8) / 3
_DPS = 40
LAMBDA_CAP = 1e12


@dataclass(frozen=True)
class NseBounds:
    nu: float
    f_norm: float
    L: float
    lam: float
    R: float
    c: float
    lambda1: float
    K: float
    C1: float
    C2: float
    C3: float
    beta: float
    lambda_min_bounded: float
    lambda_min_general: float
    lambda_min_eta0: float
    M5: float
    eta_h1_sq: float = 0.0

    @property
    def coef1(self) -> float:
        """Weight of ``g_1`` in ``g``."""
        return self.C2 * (self.lam / (self.nu ** 4 * self.lambda1)) ** 0.25

    @property
    def coef2(self) -> float:
        """Weight of ``g_2`` in ``g``."""
        return self.C3 * (1.0 / (self.nu ** 5 * self.lambda1)) ** (1.0 / 3.0)

    @property
    def L1(self) -> float:
        return math.sqrt(self.R) + 2 * math.sqrt(self.K)

    @property
    def L2(self) -> float:
        r = self.L1 / self.nu
        return (self.C2 * self.lambda1 ** -0.25 * r ** 2
                + self.C3 * self.lambda1 ** (-7.0 / 12.0) * r ** (8.0 / 3.0))

    @property
    def epsilon(self) -> float:
        """``L_2 lambda^(-3/4)``, the weight of the growing term in ``m``."""
        return self.L2 * self.lam ** -0.75

    def with_lambda(self, lam: float) -> "NseBounds":
        return replace(self, lam=float(lam))

    def M5_bound(self, h: float) -> float:
        """``M5 / (1 - e^(-nu lambda_1 h))`` bounds ``||u(t)||^2``."""
        return self.M5 / -math.expm1(-self.nu * self.lambda1 * h)

    def as_rows(self):
        """(name, value, formula) triples for reports."""
        return [
            ("c", self.c, "Sobolev/Agmon constant (configured)"),
            ("lambda1", self.lambda1, "(2 pi / L)^2"),
            ("K", self.K, "|f|^2 / (lambda1 nu^2)"),
            ("R", self.R, "bound on ||delta(t0)||^2"),
            ("C1", self.C1, "3 5^(5/3) 2^(-16/3) c^(8/3)"),
            ("C2", self.C2, "c^2 2^(5/4)"),
            ("C3", self.C3, "3 c^(8/3) 5^(5/3) 2^(-10/3)"),
            ("beta", self.beta, "2 C1 nu^(-5/3) lambda1^(-1/3) K^(4/3)"),
            ("lambda", self.lam, "observed modes |k|^2 <= lambda"),
            ("g0", g_eval(self, 0.0), "C2 (lambda/(nu^4 lambda1))^(1/4) (R^(1/2)+2K^(1/2))^2 "
                                      "+ C3 (1/(nu^5 lambda1))^(1/3) (R^(1/2)+2K^(1/2))^(8/3)"),
            ("dM0", -self.nu * self.lam + g_eval(self, 0.0), "M'(0) = -nu lambda + g(0)"),
            ("lambda_min_bounded", self.lambda_min_bounded, "c^2 |f|^2 / (lambda1 nu^4)"),
            ("lambda_min_general", self.lambda_min_general,
             "9 / lambda1^(1/3) ((2 c K^(1/2) + c R^(1/2)) / nu)^(8/3)"),
            ("lambda_min_eta0", self.lambda_min_eta0, "9 / lambda1^(5/3) (3 c |f| / nu^2)^(8/3)"),
            ("M5", self.M5, "||eta||^2 + 3 K"),
        ]


def boundedness_threshold(nu, f_norm, lambda1, c=1.0) -> float:
    """One-step decrease needs ``lambda > c^2 K / nu^2 = c^2 |f|^2/(lambda1 nu^4)``."""
    return c ** 2 * f_norm ** 2 / (lambda1 * nu ** 4)


def absorbing_bound_M5(K: float, eta_h1_sq: float = 0.0) -> float:
    """Constant in ``||u(t)||^2 <= M5 / (1 - e^(-nu lambda1 h))``.

    In 2D ``(B(u, u), Au) = 0``, so ``d||u||^2/dt + nu lambda1 ||u||^2 <=
    |f|^2 / nu`` and with ``g = e^(-nu lambda1 h)`` a window maps
    ``||u_n||^2`` to at most ``g ||u_n||^2 + K (1 - g)``. The update replaces
    the observed part by that of ``U``, adding at most ``K``, so
    ``x_(n+1) <= g x_n + 2K``. Since ``P eta = 0``,
    ``x_0 = ||eta||^2 + ||P U(t_0)||^2 <= ||eta||^2 + K``, and summing the
    geometric series gives ``x_n <= (||eta||^2 + 3K) / (1 - g)``, which also
    covers the interior of every window.
    """
    return eta_h1_sq + 3.0 * K


def nse_bounds(nu: float, f_norm: float, L: float = 2 * math.pi, lam: float = 1.0,
               R: float | None = None, c: float = 1.0,
               eta_h1_sq: float = 0.0) -> NseBounds:
    """All constants for the given parameters.

    ``R`` bounds ``||delta(t_0)||^2``; the default is ``K`` when
    ``eta = 0`` (then ``delta(t_0) = Q U(t_0)``) and ``2(K + ||eta||^2)``
    otherwise.
    """
    for name, v in (("nu", nu), ("f_norm", f_norm), ("L", L), ("lambda", lam), ("c", c)):
        if not v > 0:
            raise ValueError(f"{name} must be positive, got {v!r}")
    lambda1 = (2 * math.pi / L) ** 2
    K = f_norm ** 2 / (lambda1 * nu ** 2)
    if R is None:
        R = K if eta_h1_sq == 0 else 2 * (K + eta_h1_sq)
    if R < 0:
        raise ValueError("R must be nonnegative")
    C1 = 3 * 5 ** (5 / 3) * 2 ** (-16 / 3) * c ** (8 / 3)
    C2 = c ** 2 * 2 ** 1.25
    C3 = 3 * c ** (8 / 3) * 5 ** (5 / 3) * 2 ** (-10 / 3)
    beta = 2 * C1 * nu ** (-5 / 3) * lambda1 ** (-1 / 3) * K ** (4 / 3)
    general = 9 / lambda1 ** (1 / 3) * ((2 * c * math.sqrt(K) + c * math.sqrt(R)) / nu) ** (8 / 3)
    eta0 = 9 / lambda1 ** (5 / 3) * (3 * c * f_norm / nu ** 2) ** (8 / 3)
    return NseBounds(nu=nu, f_norm=f_norm, L=L, lam=float(lam), R=float(R), c=c,
                     lambda1=lambda1, K=K, C1=C1, C2=C2, C3=C3, beta=beta,
                     lambda_min_bounded=boundedness_threshold(nu, f_norm, lambda1, c),
                     lambda_min_general=general, lambda_min_eta0=eta0,
                     M5=absorbing_bound_M5(K, eta_h1_sq), eta_h1_sq=eta_h1_sq)


def bounds(params, lam: float, R: float | None = None, c: float = 1.0,
           eta_h1_sq: float = 0.0) -> NseBounds:
    """:func:`nse_bounds` for an :class:`NseParams`."""
    return nse_bounds(params.nu, params.forcing_norm, params.grid.L, lam, R, c, eta_h1_sq)


def _exp(x: float) -> float:
    try:
        return math.exp(x)
    except OverflowError:
        return math.inf


def g_eval(b: NseBounds, tau: float) -> float:
    """``g(tau) = coef1 g_1(tau) + coef2 g_2(tau)``; ``inf`` on overflow."""
    if tau < 0:
        raise ValueError("tau must be nonnegative")
    with mp.workdps(_DPS):
        e = mp.exp(b.beta * mp.mpf(tau))
        s = mp.sqrt(b.R) * mp.sqrt(e) + 2 * mp.sqrt(b.K)
        g = b.coef1 * e * s ** 2 + b.coef2 * e * s ** _Q
        return float(g)


def _J1(b: NseBounds, tau):
    """``e^(-nu lambda tau) int_0^tau g_1(s) e^(nu lambda s) ds``."""
    nl = b.nu * b.lam
    a, c = mp.sqrt(b.R), 2 * mp.sqrt(b.K)
    total = mp.mpf(0)
    for coef, p in ((a * a, 2 * b.beta), (2 * a * c, 1.5 * b.beta), (c * c, b.beta)):
        total += coef * (mp.exp(p * tau) - mp.exp(-nl * tau)) / (p + nl)
    return total


def _J2(b: NseBounds, tau):
    """``e^(-nu lambda tau) int_0^tau g_2(s) e^(nu lambda s) ds``.

    With ``x = e^(beta s / 2)`` and ``mu = 2 nu lambda / beta`` the integral
    is ``(2/beta) int_1^X x^(1+mu) (a x + c)^q dx``, whose antiderivative is
    ``c^q x^p / p * 2F1(-q, p; p+1; -a x / c)`` with ``p = 2 + mu``.
    """
    nl = b.nu * b.lam
    a, c = mp.sqrt(b.R), 2 * mp.sqrt(b.K)
    beta = mp.mpf(b.beta)
    mu = 2 * nl / beta
    p = 2 + mu
    X = mp.exp(beta * tau / 2)

    def F(x):
        return c ** _Q * x ** p / p * mp.hyp2f1(-_Q, p, p + 1, -a * x / c)

    return 2 / beta * (F(X) - F(mp.mpf(1))) * mp.exp(-nl * tau)


def contraction_M_nse(b: NseBounds, tau: float) -> float:
    """``M(tau) = e^(-nu lambda tau) (1 + int_0^tau g(s) e^(nu lambda s) ds)``.

    ``M(0) = 1`` exactly; values too large for a double come back as ``inf``.
    """
    if tau < 0:
        raise ValueError("tau must be nonnegative")
    if tau == 0:
        return 1.0
    with mp.workdps(_DPS):
        t = mp.mpf(tau)
        val = mp.exp(-b.nu * b.lam * t) + b.coef1 * _J1(b, t) + b.coef2 * _J2(b, t)
        return float(val)


def _majorant_terms(b: NseBounds, lam: float | None = None):
    lam = b.lam if lam is None else lam
    if lam < b.lambda1:
        raise ValueError("the majorant needs lambda >= lambda1")
    return b.nu * lam, b.L2 * lam ** -0.75, 7.0 * b.beta / 3.0


def majorant_m(b: NseBounds, tau: float) -> float:
    """``(1 - eps) e^(-nu lambda tau) + eps e^(7 beta tau / 3)``, ``eps = L2 lambda^(-3/4)``."""
    nl, eps, g = _majorant_terms(b)
    return (1 - eps) * math.exp(-nl * tau) + eps * _exp(g * tau)


def majorant_dm(b: NseBounds, tau: float, lam: float | None = None) -> float:
    """``m'(tau)``, optionally at another ``lambda`` (nothing else depends on it)."""
    nl, eps, g = _majorant_terms(b, lam)
    grow = eps * g * _exp(g * tau) if eps > 0 else 0.0
    return -nl * (1 - eps) * math.exp(-nl * tau) + grow


def lambda_for_tstar(b: NseBounds, t_star: float, rel_tol: float = 1e-6) -> float:
    """Smallest ``lambda`` with ``m'(t_star) < 0``.

    ``m`` is convex, so ``m'(t_star) < 0`` makes it decrease on
    ``[0, t_star]`` and ``M(h) <= m(h) < 1`` there. The search doubles
    ``lambda`` from ``max(lambda1, L2^(4/3))`` (below which ``eps >= 1``)
    and bisects the last doubling. The set of admissible ``lambda`` is an
    interval that closes again at large ``lambda``: ``nu lambda
    e^(-nu lambda t*)`` decays exponentially while ``eps`` only decays like
    ``lambda^(-3/4)``. When doubling steps over that window a finer
    geometric scan is tried before giving up at ``lambda = 1e12``.
    """
    if not t_star > 0:
        raise ValueError("t_star must be positive")

    def ok(lam):
        return majorant_dm(b, t_star, lam) < 0

    lam0 = max(b.lambda1, b.L2 ** (4.0 / 3.0))
    lo, hi = lam0, None
    if ok(lam0):
        return lam0
    lam = lam0
    while lam < LAMBDA_CAP:
        lam *= 2
        if ok(lam):
            hi = lam
            break
        lo = lam
    if hi is None:
        grid_factor = 2 ** (1 / 64)
        lam = lam0
        while lam < LAMBDA_CAP:
            nxt = lam * grid_factor
            if ok(nxt):
                lo, hi = lam, nxt
                break
            lam = nxt
    if hi is None:
        raise BracketError(
            f"no lambda <= {LAMBDA_CAP:g} gives m'(t*) < 0 for t*={t_star!r}; "
            "the contraction window of the majorant closes before t*")

    width = 0.5 * rel_tol * (hi - lo)
    mid = bisect(lambda lam: majorant_dm(b, t_star, lam), lo, hi,
                 RootConfig(rel_tol=0.5 * rel_tol))
    # the final bracket's admissible end lies within one width of its midpoint
    return mid + width


def t_star_nse(b: NseBounds, cfg: RootConfig = RootConfig()) -> float | None:
    """Root of ``M(t) = 1`` at the configured ``lambda``; ``None`` when
    ``M'(0) >= 0`` and there is no contraction window."""
    if -b.nu * b.lam + g_eval(b, 0.0) >= 0:
        return None

    def f(t):
        return contraction_M_nse(b, t) - 1.0

    hi = 1.0 / (b.nu * b.lam)
    while f(hi) < 0:
        hi *= 2
        if hi > 1e6:
            raise BracketError("M(t) stays below 1 up to t = 1e6")
    lo = hi
    while f(lo) >= 0:
        lo /= 2
        if lo < 1e-300:
            raise BracketError("could not bracket the root of M(t) = 1")
    return bisect(f, lo, hi, cfg)
