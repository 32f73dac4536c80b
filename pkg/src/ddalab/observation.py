"""Orthogonal observation projections diagonal in the state's basis.

Both observation operators of interest (the X component of the Lorenz
state, the Fourier modes with ``|k|^2 <= lambda``) are coordinate
projections, so an operator is fully described by a boolean mask: ``P``
keeps the masked entries, ``Q = I - P`` keeps the rest. The assimilation
update is then an exact assignment of observed entries.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class ObservationOp:
    mask: np.ndarray
    name: str = ""

    def __post_init__(self):
        object.__setattr__(self, "mask", np.asarray(self.mask, dtype=bool))

    def apply_P(self, x):
        return np.where(self.mask, x, 0)

    def apply_Q(self, x):
        return np.where(self.mask, 0, x)

    def insert(self, model, observed):
        """``Q model + P observed``, the impulsive update."""
        return np.where(self.mask, observed, model)

    @property
    def rank(self) -> int:
        return int(self.mask.sum())


def full_projection(shape, name="identity") -> ObservationOp:
    return ObservationOp(np.ones(shape, dtype=bool), name)


def zero_projection(shape, name="zero") -> ObservationOp:
    return ObservationOp(np.zeros(shape, dtype=bool), name)
