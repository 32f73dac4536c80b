"""Periodic Fourier grid in the half-spectrum (``rfft2``) layout.

Spectral arrays have shape ``(..., N, N//2 + 1)``: axis -2 runs over
``n1`` in FFT order, axis -1 over ``n2 = 0 .. N/2``. Coefficients are the
true Fourier coefficients ``u_k`` of ``u(x) = sum_k u_k exp(i k.x)``, i.e.
``rfft2(u) / N**2``. The modes with ``n2 < 0`` are implied by Hermitian
symmetry and never stored; in sums over all wavevectors the columns
``0 < n2 < N/2`` therefore carry weight 2.
"""
from __future__ import annotations

import math
from functools import cached_property

import numpy as np
import scipy.fft as sfft


class FourierGrid:
    def __init__(self, N: int = 64, L: float = 2 * math.pi):
        if N < 8 or N & (N - 1):
            raise ValueError(f"N must be a power of two >= 8, got {N!r}")
        if not L > 0:
            raise ValueError("L must be positive")
        self.N = int(N)
        self.L = float(L)
        n1 = np.fft.fftfreq(N, 1.0 / N)
        n2 = np.arange(N // 2 + 1, dtype=float)
        self.n1 = n1[:, None]
        self.n2 = n2[None, :]
        k0 = 2 * math.pi / self.L
        self.kx = k0 * self.n1
        self.ky = k0 * self.n2
        self.k2 = self.kx ** 2 + self.ky ** 2

    def __repr__(self):
        return f"FourierGrid(N={self.N}, L={self.L!r})"

    def __eq__(self, other):
        return isinstance(other, FourierGrid) and (self.N, self.L) == (other.N, other.L)

    def __hash__(self):
        return hash((self.N, self.L))

    @property
    def shape(self):
        return (self.N, self.N // 2 + 1)

    @property
    def lambda1(self) -> float:
        """Smallest eigenvalue of the Stokes operator, ``(2 pi / L)^2``."""
        return (2 * math.pi / self.L) ** 2

    @cached_property
    def dealias(self) -> np.ndarray:
        """Two-thirds rule, with the mean mode removed."""
        cut = self.N / 3.0
        m = (np.abs(self.n1) <= cut) & (np.abs(self.n2) <= cut)
        m = m.copy()
        m[0, 0] = False
        return m

    @cached_property
    def weights(self) -> np.ndarray:
        w = np.full(self.shape, 2.0)
        w[:, 0] = 1.0
        w[:, -1] = 1.0
        return w

    @cached_property
    def k2_safe(self) -> np.ndarray:
        k2 = self.k2.copy()
        k2[0, 0] = 1.0
        return k2

    @cached_property
    def max_k2(self) -> float:
        """Largest ``|k|^2`` among retained modes."""
        return float(np.max(self.k2[self.dealias]))

    def coords(self):
        x = np.arange(self.N) * (self.L / self.N)
        return np.meshgrid(x, x, indexing="ij")

    def to_physical(self, uh):
        return sfft.irfft2(uh, s=(self.N, self.N), axes=(-2, -1)) * self.N ** 2

    def to_spectral(self, u):
        return sfft.rfft2(u, axes=(-2, -1)) / self.N ** 2

    def wavevector_sum(self, a) -> np.ndarray:
        """Sum of a real per-mode quantity over all wavevectors (both halves)."""
        return np.sum(self.weights * a, axis=(-2, -1))
