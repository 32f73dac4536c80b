"""Small numerical utilities used by the bound machinery.

Root bracketing and bisection (critical intervals, resolution searches),
adaptive Simpson quadrature (oracle for the closed-form contraction
factors) and one-sided finite differences.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

__all__ = [
    "BracketError",
    "RootConfig",
    "bisect",
    "expand_bracket",
    "adaptive_simpson",
    "fd_derivative",
]


class BracketError(ValueError):
    """Raised when an interval does not bracket a sign change."""


@dataclass(frozen=True)
class RootConfig:
    rel_tol: float = 1e-9
    max_doublings: int = 60
    hint: float | None = None

    def __post_init__(self):
        if not self.rel_tol > 0:
            raise ValueError("rel_tol must be positive")


def bisect(f: Callable[[float], float], lo: float, hi: float,
           cfg: RootConfig = RootConfig()) -> float:
    """Bisection on ``[lo, hi]`` until the bracket width is below
    ``cfg.rel_tol * |hi - lo|``.

    The sign change between the two ends of the working bracket is
    maintained at every iteration; the midpoint of the final bracket is
    returned.
    """
    flo, fhi = f(lo), f(hi)
    if flo == 0.0:
        return lo
    if fhi == 0.0:
        return hi
    if not (flo * fhi < 0):
        raise BracketError(
            f"f({lo!r})={flo!r} and f({hi!r})={fhi!r} do not bracket a root")
    width = cfg.rel_tol * abs(hi - lo)
    # each halving is exact in binary, 1100 iterations exhausts float64
    for _ in range(1100):
        if abs(hi - lo) <= width:
            break
        mid = 0.5 * (lo + hi)
        if mid == lo or mid == hi:
            break
        fm = f(mid)
        if fm == 0.0:
            return mid
        if (fm < 0) == (flo < 0):
            lo, flo = mid, fm
        else:
            hi, fhi = mid, fm
    return 0.5 * (lo + hi)


def expand_bracket(f: Callable[[float], float], lo: float, hi: float,
                   cfg: RootConfig = RootConfig(),
                   limit: float = math.inf) -> tuple[float, float]:
    """Double ``hi`` (keeping ``lo`` fixed) until ``f`` changes sign.

    Returns the bracket ``(prev, hi)`` whose ends differ in sign, where
    ``prev`` is the last probe with the sign of ``f(lo)``.
    """
    flo = f(lo)
    prev = lo
    for _ in range(cfg.max_doublings):
        fhi = f(hi)
        if fhi * flo <= 0:
            return prev, hi
        prev = hi
        hi *= 2.0
        if hi > limit:
            break
    raise BracketError(
        f"no sign change found starting from [{lo!r}, ...] within "
        f"{cfg.max_doublings} doublings (limit {limit!r})")


class QuadratureError(RuntimeError):
    pass


def adaptive_simpson(f: Callable[[float], float], a: float, b: float,
                     rel_tol: float = 1e-10, max_depth: int = 50) -> float:
    """Adaptive Simpson quadrature with Richardson correction.

    A panel is accepted when ``|S_left + S_right - S_whole| <= 15 * tol``;
    the tolerance is relative to a coarse first estimate of the integral.
    """
    if b < a:
        raise ValueError("require a <= b")
    if a == b:
        return 0.0
    fa, fb = f(a), f(b)
    m = 0.5 * (a + b)
    fm = f(m)
    whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb)
    # a scale from a few interior samples guards against a lucky zero
    probes = [abs(f(a + (b - a) * s)) for s in (0.1, 0.37, 0.73)]
    scale = max(abs(whole), (b - a) * max(probes), 1e-300)
    tol = rel_tol * scale

    def _recurse(a, b, fa, fm, fb, whole, tol, depth):
        m = 0.5 * (a + b)
        lm, rm = 0.5 * (a + m), 0.5 * (m + b)
        flm, frm = f(lm), f(rm)
        left = (m - a) / 6.0 * (fa + 4.0 * flm + fm)
        right = (b - m) / 6.0 * (fm + 4.0 * frm + fb)
        delta = left + right - whole
        if abs(delta) <= 15.0 * tol:
            return left + right + delta / 15.0
        if depth >= max_depth:
            raise QuadratureError(
                f"adaptive_simpson: max depth {max_depth} exceeded near "
                f"[{a!r}, {b!r}]")
        return (_recurse(a, m, fa, flm, fm, left, 0.5 * tol, depth + 1)
                + _recurse(m, b, fm, frm, fb, right, 0.5 * tol, depth + 1))

    return _recurse(a, b, fa, fm, fb, whole, tol, 0)


def fd_derivative(f: Callable[[float], float], x: float,
                  eps: float = 1e-8) -> float:
    """Forward difference (one-sided: the contraction factors live on
    tau >= 0)."""
    return (f(x + eps) - f(x)) / eps
