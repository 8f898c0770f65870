"""Finite model sets with nonnegative loss tables."""

from __future__ import annotations

import math
from typing import Iterable, Sequence

import numpy as np

from ._backend import kernels
from .empirical import Dataset, empirical_risk
from .errors import AlphabetMismatch, LengthMismatch, NegativeWeight, NonFiniteWeight, UnknownModel
from .measure import Alphabet, DiscreteMeasure


class LossModel:
    """Loss table ``loss[theta, i] = l(theta, z_i)`` over a finite model set.

    Entries may be ``+inf``; whether that is admissible depends on the
    reference measure and is checked by the operations that care.
    """

    __slots__ = ("alphabet", "models", "loss")

    def __init__(self, alphabet: Alphabet, models: Iterable[str] | Alphabet, loss):
        models = models if isinstance(models, Alphabet) else Alphabet(models)
        table = np.array(loss, dtype=np.float64, copy=True)
        if table.ndim != 2 or table.shape != (models.size, alphabet.size):
            raise LengthMismatch(
                f"loss table has shape {table.shape}, expected "
                f"({models.size}, {alphabet.size})"
            )
        if np.any(np.isnan(table)):
            raise NonFiniteWeight("loss entries must not be NaN")
        if np.any(table < 0):
            raise NegativeWeight("loss entries must be nonnegative")
        table.setflags(write=False)
        object.__setattr__(self, "alphabet", alphabet)
        object.__setattr__(self, "models", models)
        object.__setattr__(self, "loss", np.ascontiguousarray(table))

    def __setattr__(self, name, value):
        raise AttributeError("LossModel is immutable")

    def __repr__(self):
        return f"LossModel(models={list(self.models.points)}, alphabet={list(self.alphabet.points)})"

    @property
    def n_models(self) -> int:
        return self.models.size

    def model_index(self, label: str) -> int:
        try:
            return self.models.index(label)
        except AlphabetMismatch:
            raise UnknownModel(f"unknown model {label!r}") from None

    def row(self, theta: int) -> np.ndarray:
        if not (0 <= theta < self.models.size):
            raise UnknownModel(f"model index {theta} out of range")
        return self.loss[theta]


def _check(lm: LossModel, p: DiscreteMeasure):
    if p.alphabet != lm.alphabet:
        raise AlphabetMismatch("measure and loss model use different alphabets")


def expected_loss(lm: LossModel, theta: int, p: DiscreteMeasure) -> float:
    _check(lm, p)
    return kernels.expected_loss(p.weights, lm.row(theta))


def max_loss_on_support(lm: LossModel, theta: int, p: DiscreteMeasure) -> float:
    """Largest loss over points charged by ``p``; the a.s. bound of ``l``."""
    _check(lm, p)
    return float(lm.row(theta)[p.support].max())


def erm_minimizer(
    lm: LossModel, z: Dataset, lam: float = 0.0, reg: Sequence[float] | None = None
) -> int:
    """Exhaustive argmin of ``empirical_risk + lam * reg``; ties go to the lowest index."""
    if reg is None:
        reg = np.zeros(lm.n_models)
    reg = np.asarray(reg, dtype=np.float64)
    if reg.shape != (lm.n_models,):
        raise LengthMismatch(f"regularizer needs {lm.n_models} values, got {reg.size}")
    if lam < 0 or math.isnan(lam):
        raise NegativeWeight("regularization factor must be nonnegative")
    best, best_val = 0, math.inf
    for theta in range(lm.n_models):
        val = empirical_risk(lm, z, theta) + (lam * reg[theta] if lam else 0.0)
        if val < best_val:
            best, best_val = theta, val
    return best
