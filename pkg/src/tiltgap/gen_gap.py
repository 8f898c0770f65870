"""Generalization gaps and the Gibbs learning algorithm.

Learning algorithms are stored exhaustively: one conditional measure over
models per dataset of length ``n``, rows indexed by the lexicographic rank
of the dataset.  All dataset averages are exact enumerations under the
product data measure; there is no sampling anywhere.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass
from typing import Callable, Iterator

import numpy as np

from ._backend import kernels
from .empirical import Dataset, empirical_risk, type_of
from .errors import (
    AlphabetMismatch,
    EnumerationCapExceeded,
    InfiniteLautum,
    InfiniteLoss,
    LengthMismatch,
    NonPositiveLambda,
    NotAbsContinuous,
)
from .loss import LossModel, expected_loss
from .measure import Alphabet, DiscreteMeasure, kl_divergence
from .sensitivity import SensitivityReport, Term, _report, _require_ac, _require_finite
from .worst_case import WorstCaseTilt, tilt

DEFAULT_CAP = 10**6
CAP_ENV = "TILTGAP_ENUM_CAP"
ROW_TOL = 1e-12


def enumeration_cap() -> int:
    raw = os.environ.get(CAP_ENV)
    return int(raw) if raw else DEFAULT_CAP


def check_cap(k: int, n: int, cap: int | None = None) -> int:
    cap = enumeration_cap() if cap is None else cap
    count = k**n
    if count > cap:
        raise EnumerationCapExceeded(count, cap)
    return count


def dataset_rank(z: Dataset) -> int:
    """Lexicographic rank of ``z`` among datasets of its length."""
    k = z.alphabet.size
    r = 0
    for i in z.entries:
        r = r * k + int(i)
    return r


def dataset_at(alphabet: Alphabet, n: int, rank: int) -> Dataset:
    k = alphabet.size
    digits = []
    for _ in range(n):
        rank, d = divmod(rank, k)
        digits.append(d)
    return Dataset(alphabet, reversed(digits))


def iter_datasets(alphabet: Alphabet, n: int) -> Iterator[Dataset]:
    for r in range(alphabet.size**n):
        yield dataset_at(alphabet, n, r)


# -- pointwise gap -----------------------------------------------------------


def gen_gap(lm: LossModel, theta: int, pz: DiscreteMeasure, z: Dataset) -> float:
    """Population risk under ``pz`` minus training risk on ``z``."""
    if z.alphabet != lm.alphabet:
        raise AlphabetMismatch("dataset and loss model use different alphabets")
    pop = expected_loss(lm, theta, pz)
    emp = empirical_risk(lm, z, theta)
    if math.isinf(pop) or math.isinf(emp):
        raise InfiniteLoss("population or empirical risk is infinite")
    return pop - emp


def gap_decomposition_pz(
    lm: LossModel, theta: int, pz: DiscreteMeasure, z: Dataset, beta: float
) -> SensitivityReport:
    """Gap decomposed with the data measure itself as reference.

    ``beta (KL(P_z||P*) - KL(P_Z||P*) - KL(P_z||P_Z))`` where ``P*`` tilts
    ``P_Z``.
    """
    pt = type_of(z).as_measure
    _require_ac(pt, pz, "the type of the dataset")
    w = tilt(lm, theta, pz, beta)
    terms = [
        Term("KL(P_z||P*)", 1.0, kl_divergence(pt, w.measure)),
        Term("KL(P_Z||P*)", -1.0, kl_divergence(pz, w.measure)),
        Term("KL(P_z||P_Z)", -1.0, kl_divergence(pt, pz)),
    ]
    return _report(gen_gap(lm, theta, pz, z), w.beta, terms, pz)


def gap_decomposition_general(
    lm: LossModel, theta: int, pz: DiscreteMeasure, z: Dataset, w: WorstCaseTilt
) -> SensitivityReport:
    """Gap decomposed through an arbitrary feasible reference and tilt."""
    _require_finite(w)
    pt = type_of(z).as_measure
    _require_ac(pz, w.base, "P_Z")
    _require_ac(pt, w.base, "the type of the dataset")
    # same leading term order as gap_decomposition_pz: identical sums when P_S = P_Z
    terms = [
        Term("KL(P_z||P*)", 1.0, kl_divergence(pt, w.measure)),
        Term("KL(P_Z||P*)", -1.0, kl_divergence(pz, w.measure)),
        Term("KL(P_z||P_S)", -1.0, kl_divergence(pt, w.base)),
        Term("KL(P_Z||P_S)", 1.0, kl_divergence(pz, w.base)),
    ]
    return _report(gen_gap(lm, theta, pz, z), w.beta, terms, w.base)


# -- learning algorithms -----------------------------------------------------


class LearningAlgorithm:
    """Conditional measure over models for every dataset of length ``n``.

    ``table[r]`` is the measure for the dataset of lexicographic rank ``r``.
    """

    def __init__(self, lm: LossModel, n: int, table, cap: int | None = None):
        if n < 1:
            raise LengthMismatch("dataset length must be at least 1")
        count = check_cap(lm.alphabet.size, n, cap)
        t = np.ascontiguousarray(np.array(table, dtype=np.float64))
        if t.shape != (count, lm.n_models):
            raise LengthMismatch(
                f"kernel table has shape {t.shape}, expected ({count}, {lm.n_models})"
            )
        if np.any(~np.isfinite(t)) or np.any(t < 0):
            raise LengthMismatch("kernel rows must be finite and nonnegative")
        if np.any(np.abs(t.sum(axis=1) - 1.0) > ROW_TOL):
            raise LengthMismatch("every kernel row must sum to 1 within 1e-12")
        t.setflags(write=False)
        self.lm = lm
        self.n = n
        self.table = t
        self._risk = None

    @classmethod
    def from_function(
        cls, lm: LossModel, n: int, fn: Callable[[Dataset], "DiscreteMeasure | np.ndarray"],
        cap: int | None = None,
    ) -> "LearningAlgorithm":
        check_cap(lm.alphabet.size, n, cap)
        rows = []
        for z in iter_datasets(lm.alphabet, n):
            out = fn(z)
            w = out.weights if isinstance(out, DiscreteMeasure) else np.asarray(out, float)
            rows.append(w / w.sum())
        return cls(lm, n, rows, cap)

    @classmethod
    def data_independent(cls, lm: LossModel, n: int, q: DiscreteMeasure, cap: int | None = None):
        count = check_cap(lm.alphabet.size, n, cap)
        return cls(lm, n, np.tile(q.weights, (count, 1)), cap)

    @property
    def n_datasets(self) -> int:
        return self.table.shape[0]

    def conditional(self, z: Dataset | int) -> DiscreteMeasure:
        if isinstance(z, Dataset):
            if z.n != self.n:
                raise LengthMismatch(f"dataset length {z.n} differs from n={self.n}")
            if z.alphabet != self.lm.alphabet:
                raise AlphabetMismatch("dataset and algorithm use different alphabets")
            z = dataset_rank(z)
        return DiscreteMeasure(self.lm.models, self.table[z])

    def risk_table(self) -> np.ndarray:
        if self._risk is None:
            self._risk = kernels.risk_table(self.lm.loss, self.n)
        return self._risk


class GibbsAlgorithm(LearningAlgorithm):
    """Gibbs posterior ``dP/dQ (theta) = exp(-K_z(-1/lam) - L(z, theta) / lam)``.

    ``log_partitions[r]`` is ``K_{Q,z}(-1/lam) = log E_Q[exp(-L(z, .) / lam)]``
    for the dataset of rank ``r``.
    """

    def __init__(self, lm, n, table, prior, lam, log_partitions, risk, cap=None):
        super().__init__(lm, n, table, cap)
        self.prior = prior
        self.lam = lam
        self.log_partitions = log_partitions
        self._risk = risk


def gibbs_posterior(
    lm: LossModel, q: DiscreteMeasure, lam: float, n: int, cap: int | None = None
) -> GibbsAlgorithm:
    if q.alphabet != lm.models:
        raise AlphabetMismatch("prior must be a measure over the model set")
    if not lam > 0 or math.isinf(lam):
        raise NonPositiveLambda(f"lambda must be a positive finite number, got {lam!r}")
    if n < 1:
        raise LengthMismatch("dataset length must be at least 1")
    check_cap(lm.alphabet.size, n, cap)
    if np.any(np.isinf(lm.loss[q.support])):
        raise InfiniteLoss("losses must be finite for every model charged by the prior")
    risk = kernels.risk_table(lm.loss, n)
    with np.errstate(divide="ignore"):
        log_q = np.log(q.weights)
    table, logk = kernels.gibbs_table(risk, log_q, float(lam))
    logk.setflags(write=False)
    return GibbsAlgorithm(lm, n, table, q, float(lam), logk, risk, cap)


# -- averaged gaps and information measures ----------------------------------


def _check_data(alg: LearningAlgorithm, pz: DiscreteMeasure, cap):
    if pz.alphabet != alg.lm.alphabet:
        raise AlphabetMismatch("data measure and algorithm use different alphabets")
    check_cap(alg.lm.alphabet.size, alg.n, cap)


def expected_gap(alg: LearningAlgorithm, pz: DiscreteMeasure, z: Dataset) -> float:
    """Gap of ``z`` averaged over the models the algorithm draws from it."""
    cond = alg.conditional(z)
    total = 0.0
    for theta in cond.support:
        total += cond.weights[theta] * gen_gap(alg.lm, int(theta), pz, z)
    return total


def _sums(alg: LearningAlgorithm, pz: DiscreteMeasure, cap):
    _check_data(alg, pz, cap)
    lm = alg.lm
    charged = alg.table.max(axis=0) > 0
    if np.any(np.isinf(lm.loss[np.ix_(charged, pz.support)])):
        raise InfiniteLoss("a model the algorithm can select has infinite loss on the data support")
    pop = np.array([
        expected_loss(lm, t, pz) if charged[t] else 0.0 for t in range(lm.n_models)
    ])
    weights = kernels.product_weights(pz.weights, alg.n)
    marginal, gap = kernels.audit_sums(alg.table, weights, alg.risk_table(), pop)
    return weights, DiscreteMeasure(lm.models, marginal), gap


def doubly_expected_gap(alg: LearningAlgorithm, pz: DiscreteMeasure, cap: int | None = None) -> float:
    """Expected gap averaged over datasets drawn i.i.d. from ``pz``."""
    return _sums(alg, pz, cap)[2]


def model_marginal(alg: LearningAlgorithm, pz: DiscreteMeasure, cap: int | None = None) -> DiscreteMeasure:
    """``P_Theta = sum_z P_Z^n(z) P_{Theta|Z=z}``."""
    return _sums(alg, pz, cap)[1]


def _info(alg, pz, cap):
    weights, marginal, gap = _sums(alg, pz, cap)
    mutual, lautum = kernels.info_sums(alg.table, weights, marginal.weights)
    if math.isinf(mutual):
        raise NotAbsContinuous("a conditional charges a model outside the marginal support")
    return mutual, lautum, gap


def mutual_info(alg: LearningAlgorithm, pz: DiscreteMeasure, cap: int | None = None) -> float:
    """Average of ``KL(P_{Theta|Z=z} || P_Theta)`` over the product data measure."""
    return _info(alg, pz, cap)[0]


def lautum_info(
    alg: LearningAlgorithm, pz: DiscreteMeasure, cap: int | None = None, strict: bool = False
) -> float:
    """Average of ``KL(P_Theta || P_{Theta|Z=z})``.

    Infinite when some conditional misses part of the marginal support;
    ``strict=True`` turns that into :class:`InfiniteLautum`.
    """
    val = _info(alg, pz, cap)[1]
    if strict and math.isinf(val):
        raise InfiniteLautum("a conditional has smaller support than the model marginal")
    return val


@dataclass(frozen=True)
class GapAudit:
    doubly_expected_direct: float
    mutual_info: float
    lautum_info: float
    lam: float

    @property
    def information_side(self) -> float:
        return self.lam * (self.mutual_info + self.lautum_info)

    @property
    def identity_residual(self) -> float:
        return self.doubly_expected_direct - self.information_side


def gibbs_audit(g: GibbsAlgorithm, pz: DiscreteMeasure, cap: int | None = None) -> GapAudit:
    """Doubly-expected gap against ``lam * (mutual + lautum information)``."""
    mutual, lautum, gap = _info(g, pz, cap)
    if math.isinf(lautum):
        raise InfiniteLautum("a conditional has smaller support than the model marginal")
    return GapAudit(gap, mutual, lautum, g.lam)
