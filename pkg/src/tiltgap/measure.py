"""Probability measures on finite alphabets and their divergences."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from ._backend import kernels
from .errors import (
    AlphabetMismatch,
    DuplicateLabel,
    LengthMismatch,
    NegativeWeight,
    NonFiniteWeight,
    WeightOutOfRange,
    ZeroTotalMass,
)


@dataclass(frozen=True)
class Alphabet:
    """Ordered set of distinct point labels.

    Used both for data points (each label stands for a pair ``(x, y)``) and
    for finite model sets.
    """

    points: tuple[str, ...]
    _index: dict = field(init=False, repr=False, compare=False, hash=False)

    def __init__(self, points: Iterable[str]):
        pts = tuple(str(p) for p in points)
        if not pts:
            raise LengthMismatch("an alphabet needs at least one point")
        index = {p: i for i, p in enumerate(pts)}
        if len(index) != len(pts):
            dup = sorted({p for p in pts if pts.count(p) > 1})
            raise DuplicateLabel(f"alphabet labels must be unique, repeated: {dup}")
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "_index", index)

    @property
    def size(self) -> int:
        return len(self.points)

    def __len__(self):
        return len(self.points)

    def index(self, label: str) -> int:
        try:
            return self._index[label]
        except KeyError:
            raise AlphabetMismatch(f"unknown point label {label!r}") from None

    def label(self, i: int) -> str:
        return self.points[i]


DataAlphabet = Alphabet


class DiscreteMeasure:
    """A probability vector bound to an alphabet.

    Weights are copied, renormalized by their computed sum and frozen.
    """

    __slots__ = ("alphabet", "weights")

    def __init__(self, alphabet: Alphabet, weights, *, _trusted: bool = False):
        if _trusted:
            w = weights
        else:
            w = np.array(weights, dtype=np.float64, copy=True).reshape(-1)
            if w.shape[0] != alphabet.size:
                raise LengthMismatch(
                    f"{w.shape[0]} weights for an alphabet of size {alphabet.size}"
                )
            if not np.all(np.isfinite(w)):
                raise NonFiniteWeight("weights must be finite")
            if np.any(w < 0):
                i = int(np.flatnonzero(w < 0)[0])
                raise NegativeWeight(
                    f"weight of {alphabet.label(i)!r} is negative ({w[i]!r})"
                )
            total = w.sum()
            if total <= 0:
                raise ZeroTotalMass("weights sum to zero")
            w = w / total
        w.setflags(write=False)
        object.__setattr__(self, "alphabet", alphabet)
        object.__setattr__(self, "weights", w)

    def __setattr__(self, name, value):
        raise AttributeError("DiscreteMeasure is immutable")

    def __repr__(self):
        return f"DiscreteMeasure({list(self.weights)!r})"

    def __len__(self):
        return self.weights.shape[0]

    def __getitem__(self, i):
        return float(self.weights[i])

    @property
    def support(self) -> np.ndarray:
        """Indices carrying positive mass."""
        return np.flatnonzero(self.weights > 0)

    @classmethod
    def point_mass(cls, alphabet: Alphabet, i: int) -> "DiscreteMeasure":
        w = np.zeros(alphabet.size)
        w[i] = 1.0
        return cls(alphabet, w)

    @classmethod
    def uniform(cls, alphabet: Alphabet) -> "DiscreteMeasure":
        return cls(alphabet, np.ones(alphabet.size))


def new_measure(alphabet: Alphabet, weights: Sequence[float]) -> DiscreteMeasure:
    return DiscreteMeasure(alphabet, weights)


def _check_shared(p: DiscreteMeasure, q: DiscreteMeasure):
    if p.alphabet != q.alphabet:
        raise AlphabetMismatch("measures live on different alphabets")


def kl_divergence(p: DiscreteMeasure, q: DiscreteMeasure) -> float:
    """Relative entropy ``KL(p || q)`` in nats.

    Returns ``math.inf`` when ``p`` is not absolutely continuous with
    respect to ``q``.  Terms with ``p_i = 0`` contribute nothing.
    """
    _check_shared(p, q)
    return kernels.kl_sum(p.weights, q.weights)


def jeffreys_divergence(p: DiscreteMeasure, q: DiscreteMeasure) -> float:
    """Symmetrized relative entropy ``KL(p||q) + KL(q||p)``."""
    _check_shared(p, q)
    return kernels.kl_sum(p.weights, q.weights) + kernels.kl_sum(q.weights, p.weights)


def mix(p: DiscreteMeasure, q: DiscreteMeasure, w: float) -> DiscreteMeasure:
    """Convex combination ``w * p + (1 - w) * q``."""
    _check_shared(p, q)
    if not (0.0 <= w <= 1.0) or math.isnan(w):
        raise WeightOutOfRange(f"mixing weight {w!r} outside [0, 1]")
    if w == 1.0:
        return p
    if w == 0.0:
        return q
    return DiscreteMeasure(p.alphabet, w * p.weights + (1.0 - w) * q.weights)


def is_abs_continuous(p: DiscreteMeasure, q: DiscreteMeasure) -> bool:
    """True iff ``support(p)`` is contained in ``support(q)``."""
    _check_shared(p, q)
    return not bool(np.any((p.weights > 0) & (q.weights <= 0)))


def first_violation(p: DiscreteMeasure, q: DiscreteMeasure):
    """Label of the first point charged by ``p`` but not by ``q``, else None."""
    bad = np.flatnonzero((p.weights > 0) & (q.weights <= 0))
    return p.alphabet.label(int(bad[0])) if bad.size else None
