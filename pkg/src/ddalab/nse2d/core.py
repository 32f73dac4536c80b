"""Pseudospectral 2D incompressible Navier-Stokes on the periodic box.

Velocity fields are stored as spectral arrays of shape ``(..., 2, N, N//2+1)``
(component axis before the wavevector axes, see :mod:`.grid`). All fields
are kept divergence-free, zero-mean and two-thirds dealiased; the
evolution equation is ``du/dt + nu A u + B(u, u) = f`` with ``A = -Laplacian``
and ``B(u, v)`` the Leray projection of ``(u . grad) v``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..integrators import Scheme, StepperConfig, integrate
from ..observation import ObservationOp
from .grid import FourierGrid

__all__ = [
    "leray_project",
    "divergence_max",
    "hermitian_defect",
    "nonlinear_B",
    "nonlinear_B_rotational",
    "inner",
    "norms",
    "apply_A",
    "proj_lambda",
    "NseParams",
    "NseSystem",
    "rhs",
    "kolmogorov_forcing",
    "random_field",
    "cfl_dt",
    "spin_up",
]


def leray_project(grid: FourierGrid, uh):
    """Remove the gradient part mode by mode: ``u_k - k (k.u_k) / |k|^2``."""
    uh = np.asarray(uh)
    kdotu = grid.kx * uh[..., 0, :, :] + grid.ky * uh[..., 1, :, :]
    phi = kdotu / grid.k2_safe
    out = np.stack([uh[..., 0, :, :] - grid.kx * phi,
                    uh[..., 1, :, :] - grid.ky * phi], axis=-3)
    out[..., 0, 0] = 0.0
    return out


def divergence_max(grid: FourierGrid, uh) -> float:
    """``max_k |k . u_k|``."""
    return float(np.max(np.abs(grid.kx * uh[..., 0, :, :] + grid.ky * uh[..., 1, :, :])))


def hermitian_defect(grid: FourierGrid, uh) -> float:
    """``max |u_{-k} - conj(u_k)|`` over the stored self-conjugate columns.

    Only the ``n2 = 0`` and ``n2 = N/2`` columns hold both ``k`` and ``-k``;
    elsewhere the symmetry is implied by the storage layout.
    """
    worst = 0.0
    for col in (0, grid.N // 2):
        c = uh[..., col]
        mirrored = np.roll(c[..., ::-1], 1, axis=-1)
        worst = max(worst, float(np.max(np.abs(c - np.conj(mirrored)))))
    return worst


def _dealias_project(grid, wh):
    return leray_project(grid, wh * grid.dealias)


def nonlinear_B(grid: FourierGrid, u, v):
    """``P_H[(u . grad) v]``, dealiased.

    ``u`` and the four derivatives ``d_j v_i`` are brought to physical
    space, multiplied pointwise, and the product is transformed back.
    """
    u = np.asarray(u)
    v = np.asarray(v)
    ik = (1j * grid.kx, 1j * grid.ky)
    batch = np.stack([u[..., 0, :, :], u[..., 1, :, :],
                      ik[0] * v[..., 0, :, :], ik[1] * v[..., 0, :, :],
                      ik[0] * v[..., 1, :, :], ik[1] * v[..., 1, :, :]], axis=-3)
    p = grid.to_physical(batch)
    u0, u1 = p[..., 0, :, :], p[..., 1, :, :]
    w0 = u0 * p[..., 2, :, :] + u1 * p[..., 3, :, :]
    w1 = u0 * p[..., 4, :, :] + u1 * p[..., 5, :, :]
    wh = grid.to_spectral(np.stack([w0, w1], axis=-3))
    return _dealias_project(grid, wh)


def nonlinear_B_rotational(grid: FourierGrid, u):
    """``B(u, u)`` via the rotational form ``P_H[omega z x u]``.

    Equal to ``nonlinear_B(grid, u, u)`` up to rounding (the gradient of
    ``|u|^2/2`` is annihilated by the projection) with five transforms
    instead of eight.
    """
    u = np.asarray(u)
    omega = 1j * (grid.kx * u[..., 1, :, :] - grid.ky * u[..., 0, :, :])
    p = grid.to_physical(np.stack([u[..., 0, :, :], u[..., 1, :, :], omega], axis=-3))
    u0, u1, om = p[..., 0, :, :], p[..., 1, :, :], p[..., 2, :, :]
    wh = grid.to_spectral(np.stack([-om * u1, om * u0], axis=-3))
    return _dealias_project(grid, wh)


def inner(grid: FourierGrid, u, v) -> float:
    """L^2 inner product ``L^2 sum_k u_k . conj(v_k)`` (real part)."""
    prod = np.real(u * np.conj(v)).sum(axis=-3)
    return grid.L ** 2 * grid.wavevector_sum(prod)


def apply_A(grid: FourierGrid, u):
    return grid.k2 * u


def norms(grid: FourierGrid, u):
    """``(|u|, ||u||, |Au|)``: square roots of ``L^2 sum |k|^(2m) |u_k|^2``,
    m = 0, 1, 2."""
    a2 = (np.abs(u) ** 2).sum(axis=-3)
    L2 = grid.L ** 2
    l2 = math.sqrt(L2 * grid.wavevector_sum(a2))
    h1 = math.sqrt(L2 * grid.wavevector_sum(grid.k2 * a2))
    h2 = math.sqrt(L2 * grid.wavevector_sum(grid.k2 ** 2 * a2))
    return l2, h1, h2


def proj_lambda(grid: FourierGrid, lam: float) -> ObservationOp:
    """Observe the Fourier modes with ``|k|^2 <= lam``."""
    if lam < 0:
        raise ValueError("lambda must be nonnegative")
    mask = grid.k2 <= lam
    mask = mask.copy()
    mask[0, 0] = False
    return ObservationOp(mask, name=f"P_lambda(lambda={lam!r})")


@dataclass
class NseParams:
    nu: float
    forcing: np.ndarray
    grid: FourierGrid

    def __post_init__(self):
        if not self.nu > 0:
            raise ValueError("nu must be positive")
        f = np.asarray(self.forcing, dtype=complex)
        if f.shape != (2,) + self.grid.shape:
            raise ValueError(f"forcing has shape {f.shape}, expected {(2,) + self.grid.shape}")
        scale = max(norms(self.grid, f)[1], 1e-300)
        if divergence_max(self.grid, f) > 1e-12 * scale:
            raise ValueError("forcing must be divergence-free")
        self.forcing = f

    @property
    def forcing_norm(self) -> float:
        """``|f|`` (L^2 norm)."""
        return norms(self.grid, self.forcing)[0]

    @property
    def grashof(self) -> float:
        """``|f| / (nu^2 lambda_1)``."""
        return self.forcing_norm / (self.nu ** 2 * self.grid.lambda1)


class NseSystem:
    """Vector field for IFRK4: ``du/dt = -nu |k|^2 u + (f - B(u, u))``."""

    def __init__(self, params: NseParams):
        self.params = params
        self.grid = params.grid
        self.linear = -params.nu * self.grid.k2

    def nonlinear(self, u):
        return self.params.forcing - nonlinear_B_rotational(self.grid, u)

    def rhs(self, u):
        return self.linear * u + self.nonlinear(u)

    def norms(self, u):
        """``(|u|, ||u||)`` for the assimilation driver."""
        l2, h1, _ = norms(self.grid, u)
        return l2, h1


def rhs(params: NseParams, u):
    """``f - nu A u - B(u, u)``."""
    return NseSystem(params).rhs(u)


def kolmogorov_forcing(grid: FourierGrid, amplitude: float = 1.0,
                       kind: str = "kolmogorov4") -> np.ndarray:
    """Time-independent divergence-free forcing.

    ``kind="shear"``: the single shear mode ``(sin(2 pi y / L), 0)``.
    ``kind="kolmogorov4"``: the shear ``(sin(8 pi y / L), 0)``, whose laminar
    state is unstable at small viscosity and gives a chaotic attractor.
    ``kind="shell"``: ``(sin(k0 y), 0) + (0, sin(k0 x))`` plus the two
    diagonal shears with ``|k|^2 = 2 k0^2``, unequal weights to break the
    square's symmetries. Scaled so that ``|f| = amplitude``.
    """
    X, Y = grid.coords()
    k0 = 2 * math.pi / grid.L
    if kind == "shear":
        fx, fy = np.sin(k0 * Y), np.zeros_like(Y)
    elif kind == "kolmogorov4":
        fx, fy = np.sin(4 * k0 * Y), np.zeros_like(Y)
    elif kind == "shell":
        s = 1.0 / math.sqrt(2.0)
        fx = np.sin(k0 * Y) + 0.7 * s * np.cos(k0 * (X + Y)) + 0.5 * s * np.sin(k0 * (X - Y) + 0.3)
        fy = 0.6 * np.sin(k0 * X) - 0.7 * s * np.cos(k0 * (X + Y)) + 0.5 * s * np.sin(k0 * (X - Y) + 0.3)
    else:
        raise ValueError(f"unknown forcing kind {kind!r}")
    fh = leray_project(grid, grid.to_spectral(np.stack([fx, fy])) * grid.dealias)
    return fh * (amplitude / norms(grid, fh)[0])


def random_field(grid: FourierGrid, rng, kmax: float | None = None,
                 slope: float = 2.0, norm: float | None = None):
    """Random real, divergence-free, dealiased field.

    Mode amplitudes decay like ``|k|^-slope`` and modes with ``|n| > kmax``
    are dropped. Scaled to ``|u| = norm`` when given.
    """
    shape = (2,) + grid.shape
    c = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    c *= grid.k2_safe ** (-slope / 2) * grid.dealias
    if kmax is not None:
        c *= (np.abs(grid.n1) <= kmax) & (np.abs(grid.n2) <= kmax)
    # round trip through physical space enforces Hermitian symmetry
    c = grid.to_spectral(grid.to_physical(c))
    u = leray_project(grid, c * grid.dealias)
    if norm is not None:
        u *= norm / norms(grid, u)[0]
    return u


def cfl_dt(grid: FourierGrid, u, dt_max: float, safety: float = 0.5) -> float:
    """``min(dt_max, safety * dx / max|u|)``."""
    p = grid.to_physical(u)
    umax = float(np.max(np.sqrt(p[0] ** 2 + p[1] ** 2)))
    if umax == 0.0:
        return dt_max
    return min(dt_max, safety * (grid.L / grid.N) / umax)


def spin_up(params: NseParams, seed: int = 0, t_spinup: float = 100.0,
            dt: float = 0.02, amplitude: float = 0.1):
    """Reference state after ``t_spinup`` from a random low-mode start.

    The initial field lives on ``|n| <= 4`` with ``||u||^2`` a fraction
    ``amplitude^2`` of the attractor bound, so the run starts inside the
    absorbing ball.
    """
    grid = params.grid
    rng = np.random.default_rng(seed)
    u0 = random_field(grid, rng, kmax=4)
    K = params.forcing_norm ** 2 / (grid.lambda1 * params.nu ** 2)
    u0 *= amplitude * math.sqrt(K) / norms(grid, u0)[1]
    cfg = StepperConfig(Scheme.IFRK4, dt)
    return integrate(NseSystem(params), u0, 0.0, t_spinup, cfg)
