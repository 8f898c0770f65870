"""Worst-case data-generating measure.

For a model ``theta``, a reference measure ``P_S`` and a relative-entropy
budget ``gamma``, the measure maximizing the expected loss under
``KL(P || P_S) <= gamma`` is the exponential tilt

    dP*/dP_S (z) = exp(l(theta, z) / beta - J(1 / beta)),
    J(t) = log sum_z P_S(z) exp(t * l(theta, z)),

with ``beta > 0`` chosen so that ``KL(P* || P_S) = gamma``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._backend import kernels
from .errors import (
    AlphabetMismatch,
    ConstantLossNonzeroGamma,
    DegenerateBeta,
    GammaInfeasible,
    InfeasibleTemperature,
    InfiniteLoss,
    InputError,
    NonConvergence,
    NonPositiveBeta,
)
from .loss import LossModel, expected_loss
from .measure import DiscreteMeasure, kl_divergence

#: losses this close to the maximum count as attaining it (rounded file input)
TIE_TOL = 1e-12
SOLVE_TOL = 1e-10
#: bisection keeps going past SOLVE_TOL until this close, or the bracket collapses
STOP_TOL = 1e-14
MAX_BRACKET = 200
MAX_BISECT = 200


@dataclass(frozen=True)
class WorstCaseTilt:
    """A solved tilt.  ``beta`` is ``math.inf`` for the identity (zero budget)."""

    base: DiscreteMeasure
    theta: int
    beta: float
    gamma: float
    measure: DiscreteMeasure
    log_partition: float

    @property
    def degenerate(self) -> bool:
        return math.isinf(self.beta)


def _check(lm: LossModel, base: DiscreteMeasure):
    if base.alphabet != lm.alphabet:
        raise AlphabetMismatch("reference measure and loss model use different alphabets")


def log_partition(lm: LossModel, theta: int, base: DiscreteMeasure, t: float) -> float:
    """``J(t) = log E_base[exp(t * loss)]``, max-shifted over the support.

    ``+inf`` exactly when ``t > 0`` and a support point has infinite loss.
    """
    _check(lm, base)
    return kernels.log_partition(base.weights, lm.row(theta), float(t))


def _identity(base, theta):
    return WorstCaseTilt(base, theta, math.inf, 0.0, base, 0.0)


def tilt(lm: LossModel, theta: int, base: DiscreteMeasure, beta: float) -> WorstCaseTilt:
    """Gibbs tilt of ``base`` at inverse temperature ``1 / beta``."""
    _check(lm, base)
    if not beta > 0:
        raise NonPositiveBeta(f"beta must be positive, got {beta!r}")
    if math.isinf(beta):
        return _identity(base, theta)
    row = lm.row(theta)
    inv = 1.0 / beta
    logz = kernels.log_partition(base.weights, row, inv)
    if math.isinf(logz):
        raise InfeasibleTemperature(
            f"log-partition is infinite at beta={beta!r}: "
            "a point in the reference support carries infinite loss"
        )
    w = kernels.tilt_weights(base.weights, row, inv, logz)
    measure = DiscreteMeasure(base.alphabet, w)
    return WorstCaseTilt(
        base, theta, float(beta), kl_divergence(measure, base), measure, logz
    )


def _support_losses(lm, theta, base):
    row = lm.row(theta)
    sup = base.support
    return sup, row[sup]


def gamma_sup(lm: LossModel, theta: int, base: DiscreteMeasure) -> float:
    """Supremum of attainable budgets, ``-log base(argmax loss)``.

    This is the limit of ``KL(P*_beta || base)`` as ``beta -> 0``; it is 0
    when the loss is constant on the support.
    """
    _check(lm, base)
    sup, vals = _support_losses(lm, theta, base)
    if np.any(np.isinf(vals)):
        raise InfiniteLoss("loss is infinite on the reference support")
    top = vals >= vals.max() - TIE_TOL
    if np.all(top):
        return 0.0
    return -math.log(float(np.sum(base.weights[sup[top]])))


def solve_beta(
    lm: LossModel, theta: int, base: DiscreteMeasure, gamma: float, tol: float = SOLVE_TOL
) -> WorstCaseTilt:
    """Tilt whose divergence from ``base`` equals ``gamma`` within ``tol``.

    ``beta -> KL(P*_beta || base)`` is continuous and strictly decreasing
    for non-constant loss, so ``beta`` is bracketed by doubling/halving from
    1 and then bisected on ``log beta``.
    """
    _check(lm, base)
    gamma = float(gamma)
    if not gamma >= 0 or math.isinf(gamma):
        raise InputError(f"gamma must be a finite nonnegative number, got {gamma!r}")
    if gamma == 0.0:
        return _identity(base, theta)
    _, vals = _support_losses(lm, theta, base)
    if np.any(np.isinf(vals)):
        raise InfeasibleTemperature(
            "no finite beta exists: the reference support carries infinite loss"
        )
    ceiling = gamma_sup(lm, theta, base)
    if ceiling == 0.0:
        raise ConstantLossNonzeroGamma(
            f"loss is constant on the reference support; only gamma=0 is attainable, got {gamma!r}"
        )
    if gamma >= ceiling:
        raise GammaInfeasible(gamma, ceiling)

    best = None

    def at(b):
        nonlocal best
        w = tilt(lm, theta, base, b)
        if best is None or abs(w.gamma - gamma) < abs(best.gamma - gamma):
            best = w
        return w

    def done(w):
        return abs(w.gamma - gamma) <= STOP_TOL

    w = at(1.0)
    if done(w):
        return w
    lo = hi = 1.0
    if w.gamma > gamma:
        for _ in range(MAX_BRACKET):
            hi *= 2.0
            w = at(hi)
            if done(w):
                return w
            if w.gamma < gamma:
                break
            lo = hi
        else:
            raise NonConvergence(f"could not bracket beta for gamma={gamma!r} from above")
    else:
        for _ in range(MAX_BRACKET):
            lo *= 0.5
            w = at(lo)
            if done(w):
                return w
            if w.gamma > gamma:
                break
            hi = lo
        else:
            raise NonConvergence(f"could not bracket beta for gamma={gamma!r} from below")

    # invariant: KL(lo) > gamma > KL(hi)
    log_lo, log_hi = math.log(lo), math.log(hi)
    for _ in range(MAX_BISECT):
        mid = 0.5 * (log_lo + log_hi)
        if mid in (log_lo, log_hi):
            break
        w = at(math.exp(mid))
        if done(w):
            return w
        if w.gamma > gamma:
            log_lo = mid
        else:
            log_hi = mid
    # bracket exhausted before reaching the stopping target; accept the contract tolerance
    if abs(best.gamma - gamma) <= tol:
        return best
    raise NonConvergence(
        f"bisection stalled at beta={best.beta!r} with "
        f"|KL - gamma| = {abs(best.gamma - gamma)!r} > {tol!r}"
    )


def lemma3_identities(w: WorstCaseTilt, lm: LossModel) -> tuple[float, float]:
    """Residuals of the two dual equalities for ``beta * J(1/beta)``.

    ``r1 = beta*J - (E_{P*}[l] - beta*KL(P* || P_S))`` and
    ``r2 = beta*J - (E_{P_S}[l] + beta*KL(P_S || P*))``.
    """
    if w.degenerate:
        raise DegenerateBeta("dual equalities need a finite beta")
    bj = w.beta * w.log_partition
    r1 = bj - (expected_loss(lm, w.theta, w.measure) - w.beta * kl_divergence(w.measure, w.base))
    r2 = bj - (expected_loss(lm, w.theta, w.base) + w.beta * kl_divergence(w.base, w.measure))
    return r1, r2
