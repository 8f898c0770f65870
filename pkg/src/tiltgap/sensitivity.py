"""Closed-form decompositions of expected-loss and empirical-risk sensitivity.

Every function here returns a :class:`SensitivityReport` carrying the
definition-side value, the closed-form value and their difference, so that
callers decide what residual they tolerate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Literal

from .empirical import Dataset, type_of
from .errors import DegenerateBeta, InfiniteLoss, NotAbsContinuous
from .loss import LossModel, expected_loss
from .measure import (
    DiscreteMeasure,
    first_violation,
    jeffreys_divergence,
    kl_divergence,
    mix,
)
from .worst_case import WorstCaseTilt, tilt


@dataclass(frozen=True)
class Term:
    name: str
    coefficient: float
    value: float


@dataclass(frozen=True)
class SensitivityReport:
    g_direct: float
    g_closed_form: float
    residual: float
    terms: tuple[Term, ...]
    beta: float
    reference: DiscreteMeasure
    groups: dict = field(default_factory=dict)

    def recombine(self) -> float:
        return _combine(self.beta, self.terms)


def _combine(beta, terms):
    s = 0.0
    for t in terms:
        s += t.coefficient * t.value
    return beta * s


def _report(g_direct, beta, terms, reference, groups=None):
    terms = tuple(terms)
    closed = _combine(beta, terms)
    return SensitivityReport(
        g_direct, closed, g_direct - closed, terms, beta, reference, groups or {}
    )


def _require_ac(p: DiscreteMeasure, ref: DiscreteMeasure, what: str):
    bad = first_violation(p, ref)
    if bad is not None:
        raise NotAbsContinuous(
            f"{what} is not absolutely continuous w.r.t. the reference: "
            f"point {bad!r} has positive mass but zero reference mass",
            point=bad,
        )


def _require_finite(w: WorstCaseTilt):
    if w.degenerate:
        raise DegenerateBeta("the closed forms need a finite beta (gamma > 0)")


def g_functional(lm: LossModel, theta: int, p1: DiscreteMeasure, p2: DiscreteMeasure) -> float:
    """``E_{p1}[l] - E_{p2}[l]`` for model ``theta``."""
    e1 = expected_loss(lm, theta, p1)
    e2 = expected_loss(lm, theta, p2)
    if math.isinf(e1) or math.isinf(e2):
        raise InfiniteLoss("expected loss is infinite under one of the measures")
    return e1 - e2


def sensitivity_from_worst(lm: LossModel, w: WorstCaseTilt, p: DiscreteMeasure) -> SensitivityReport:
    """Change of expected loss from the worst case ``P*`` to ``p``.

    ``G(theta, p, P*) = beta (KL(p||P_S) - KL(p||P*) - KL(P*||P_S))``.
    """
    _require_finite(w)
    _require_ac(p, w.base, "P")
    terms = [
        Term("KL(P||P_S)", 1.0, kl_divergence(p, w.base)),
        Term("KL(P||P*)", -1.0, kl_divergence(p, w.measure)),
        Term("KL(P*||P_S)", -1.0, kl_divergence(w.measure, w.base)),
    ]
    return _report(g_functional(lm, w.theta, p, w.measure), w.beta, terms, w.base)


def jeffreys_gap(lm: LossModel, w: WorstCaseTilt) -> SensitivityReport:
    """``G(theta, P_S, P*) = -beta * (KL(P_S||P*) + KL(P*||P_S))``; never positive."""
    _require_finite(w)
    terms = [
        Term("KL(P_S||P*)", -1.0, kl_divergence(w.base, w.measure)),
        Term("KL(P*||P_S)", -1.0, kl_divergence(w.measure, w.base)),
    ]
    rep = _report(g_functional(lm, w.theta, w.base, w.measure), w.beta, terms, w.base)
    jd = jeffreys_divergence(w.base, w.measure)
    return SensitivityReport(
        rep.g_direct, rep.g_closed_form, rep.residual, rep.terms, rep.beta,
        rep.reference, {"jeffreys": jd},
    )


def sensitivity_closed_form(
    lm: LossModel, w: WorstCaseTilt, p1: DiscreteMeasure, p2: DiscreteMeasure
) -> SensitivityReport:
    """``G(theta, p1, p2)`` through any feasible reference/tilt pair.

    Each of the four terms involves only one of ``p1``, ``p2``.
    """
    _require_finite(w)
    _require_ac(p1, w.base, "P1")
    _require_ac(p2, w.base, "P2")
    terms = [
        Term("KL(P2||P*)", 1.0, kl_divergence(p2, w.measure)),
        Term("KL(P1||P*)", -1.0, kl_divergence(p1, w.measure)),
        Term("KL(P2||P_S)", -1.0, kl_divergence(p2, w.base)),
        Term("KL(P1||P_S)", 1.0, kl_divergence(p1, w.base)),
    ]
    return _report(g_functional(lm, w.theta, p1, p2), w.beta, terms, w.base)


def corollary3_specialization(
    lm: LossModel,
    theta: int,
    p1: DiscreteMeasure,
    p2: DiscreteMeasure,
    beta: float,
    direction: Literal["p1", "p2"] = "p2",
) -> SensitivityReport:
    """Three-term form obtained by using ``p1`` or ``p2`` itself as reference."""
    if direction == "p2":
        _require_ac(p1, p2, "P1")
        w = tilt(lm, theta, p2, beta)
        terms = [
            Term("KL(P2||P*)", 1.0, kl_divergence(p2, w.measure)),
            Term("KL(P1||P*)", -1.0, kl_divergence(p1, w.measure)),
            Term("KL(P1||P2)", 1.0, kl_divergence(p1, p2)),
        ]
    elif direction == "p1":
        _require_ac(p2, p1, "P2")
        w = tilt(lm, theta, p1, beta)
        terms = [
            Term("KL(P2||P*)", 1.0, kl_divergence(p2, w.measure)),
            Term("KL(P1||P*)", -1.0, kl_divergence(p1, w.measure)),
            Term("KL(P2||P1)", -1.0, kl_divergence(p2, p1)),
        ]
    else:
        raise ValueError(f"direction must be 'p1' or 'p2', got {direction!r}")
    return _report(g_functional(lm, theta, p1, p2), w.beta, terms, w.base)


def mixed_reference(p1: DiscreteMeasure, p2: DiscreteMeasure, weight: float = 0.5) -> DiscreteMeasure:
    """Reference dominating both measures, for pairs that are mutually singular."""
    return mix(p1, p2, weight)


def empirical_sensitivity(lm: LossModel, w: WorstCaseTilt, z1: Dataset, z2: Dataset) -> SensitivityReport:
    """``L(z1, theta) - L(z2, theta)`` decomposed through the types of the datasets.

    ``groups`` holds the two differences the decomposition splits into:
    distances of the types to the worst case, and to the reference.
    """
    t1 = type_of(z1).as_measure
    t2 = type_of(z2).as_measure
    rep = sensitivity_closed_form(lm, w, t1, t2)
    v = {t.name: t.value for t in rep.terms}
    groups = {
        "worst_case_distance": v["KL(P2||P*)"] - v["KL(P1||P*)"],
        "reference_distance": v["KL(P1||P_S)"] - v["KL(P2||P_S)"],
    }
    return SensitivityReport(
        rep.g_direct, rep.g_closed_form, rep.residual, rep.terms, rep.beta,
        rep.reference, groups,
    )
