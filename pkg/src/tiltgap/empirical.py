"""Datasets, their types (empirical measures) and empirical risks."""

from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING, Iterable

import numpy as np

from ._backend import kernels
from .errors import AlphabetMismatch, LengthMismatch
from .measure import Alphabet, DiscreteMeasure

if TYPE_CHECKING:
    from .loss import LossModel


class Dataset:
    """A tuple of alphabet indices ``(z_1, ..., z_n)`` with ``n >= 1``."""

    __slots__ = ("alphabet", "entries")

    def __init__(self, alphabet: Alphabet, entries: Iterable[int]):
        e = np.array(list(entries), dtype=np.intp)
        if e.size == 0:
            raise LengthMismatch("a dataset needs at least one entry")
        if e.min() < 0 or e.max() >= alphabet.size:
            raise AlphabetMismatch(
                f"dataset index out of range for an alphabet of size {alphabet.size}"
            )
        e.setflags(write=False)
        object.__setattr__(self, "alphabet", alphabet)
        object.__setattr__(self, "entries", e)

    def __setattr__(self, name, value):
        raise AttributeError("Dataset is immutable")

    @classmethod
    def from_labels(cls, alphabet: Alphabet, labels: Iterable[str]) -> "Dataset":
        return cls(alphabet, [alphabet.index(l) for l in labels])

    @property
    def n(self) -> int:
        return int(self.entries.shape[0])

    def __len__(self):
        return self.n

    def __repr__(self):
        return f"Dataset({[self.alphabet.label(i) for i in self.entries]!r})"

    def labels(self) -> list[str]:
        return [self.alphabet.label(int(i)) for i in self.entries]


@dataclass(frozen=True)
class TypeMeasure:
    """Occurrence counts of a dataset; ``as_measure`` is ``counts / n``."""

    alphabet: Alphabet
    counts: tuple[int, ...]
    n: int

    @property
    def as_measure(self) -> DiscreteMeasure:
        w = np.array(self.counts, dtype=np.float64) / self.n
        return DiscreteMeasure(self.alphabet, w, _trusted=True)


def type_of(z: Dataset) -> TypeMeasure:
    counts = np.bincount(z.entries, minlength=z.alphabet.size)
    return TypeMeasure(z.alphabet, tuple(int(c) for c in counts), z.n)


def _check(lm: "LossModel", z: Dataset):
    if z.alphabet != lm.alphabet:
        raise AlphabetMismatch("dataset and loss model use different alphabets")


def empirical_risk(lm: "LossModel", z: Dataset, theta: int) -> float:
    """Average loss of model ``theta`` over the entries of ``z``."""
    _check(lm, z)
    row = lm.row(theta)
    return float(np.sum(row[z.entries])) / z.n


def risk_via_type(lm: "LossModel", z: Dataset, theta: int) -> float:
    """Empirical risk computed as the expected loss under the type of ``z``."""
    _check(lm, z)
    return kernels.expected_loss(type_of(z).as_measure.weights, lm.row(theta))


def aggregate(z1: Dataset, z2: Dataset) -> Dataset:
    """Concatenation ``(z1, z2)``; its type is the ``n1/(n1+n2)`` mix of the two types."""
    if z1.alphabet != z2.alphabet:
        raise AlphabetMismatch("cannot aggregate datasets over different alphabets")
    return Dataset(z1.alphabet, np.concatenate([z1.entries, z2.entries]))
