"""Pure numpy fallback for :mod:`tiltgap._ckernels`.

Same signatures and the same per-element formulas.  Reductions use numpy's
own (deterministic) summation order, so results can differ from the
compiled kernels in the last bits but never between runs.
"""

import numpy as np


def _xlogratio(a, b):
    # a * log(a / b) for a, b > 0; the ratio overflows when b is subnormal
    with np.errstate(over="ignore"):
        r = a / b
    out = a * np.log(r)
    big = np.isinf(r)
    if np.any(big):
        out = np.where(big, a * (np.log(a) - np.log(b)), out)
    return out


def kl_sum(p, q):
    pos = p > 0.0
    if np.any(q[pos] <= 0.0):
        return np.inf
    return float(np.sum(_xlogratio(p[pos], q[pos])))


def expected_loss(p, row):
    pos = p > 0.0
    vals = row[pos]
    if np.any(np.isinf(vals)):
        return np.inf
    return float(np.sum(p[pos] * vals))


def log_partition(base, row, t):
    if t == 0.0:
        return 0.0
    pos = base > 0.0
    vals = row[pos]
    infinite = np.isinf(vals)
    if t > 0.0 and np.any(infinite):
        return np.inf
    a = np.log(base[pos][~infinite]) + t * vals[~infinite]
    if a.size == 0:
        return -np.inf
    mx = a.max()
    return float(mx + np.log(np.sum(np.exp(a - mx))))


def tilt_weights(base, row, inv_beta, logz):
    out = np.zeros_like(base)
    pos = base > 0.0
    out[pos] = np.exp(np.log(base[pos]) + row[pos] * inv_beta - logz)
    return out


def _digits(k, n):
    return np.unravel_index(np.arange(k**n), (k,) * n)


def risk_table(loss, n):
    m, k = loss.shape
    acc = np.zeros((k**n, m))
    for d in _digits(k, n):
        acc += loss[:, d].T
    return acc / n


def product_weights(pz, n):
    k = pz.shape[0]
    w = np.ones(k**n)
    for d in _digits(k, n):
        w *= pz[d]
    return w


def gibbs_table(risk, log_q, lam):
    on = np.isfinite(log_q)
    a = log_q[on][None, :] - risk[:, on] / lam
    mx = a.max(axis=1, keepdims=True)
    logk = mx[:, 0] + np.log(np.sum(np.exp(a - mx), axis=1))
    table = np.zeros_like(risk)
    table[:, on] = np.exp(a - logk[:, None])
    table /= table.sum(axis=1, keepdims=True)
    return table, logk


def audit_sums(table, weights, risk, pop):
    """Model marginal and doubly-expected gap in one pass over ranks."""
    live = weights > 0.0
    t, w = table[live], weights[live]
    terms = np.where(t > 0.0, t * (pop[None, :] - risk[live]), 0.0)
    marginal = np.sum(w[:, None] * t, axis=0)
    return marginal, float(np.sum(w * terms.sum(axis=1)))


def info_sums(table, weights, marginal):
    """Dataset-averaged KL(conditional || marginal) and KL(marginal || conditional)."""
    live = weights > 0.0
    t, w = table[live], weights[live]
    pm = np.broadcast_to(marginal, t.shape)
    inf_i = bool(np.any((t > 0.0) & (pm <= 0.0)))
    inf_l = bool(np.any((pm > 0.0) & (t <= 0.0)))
    both = (t > 0.0) & (pm > 0.0)
    ki = np.zeros(t.shape)
    kl = np.zeros(t.shape)
    ki[both] = _xlogratio(t[both], pm[both])
    kl[both] = _xlogratio(pm[both], t[both])
    ki, kl = ki.sum(axis=1), kl.sum(axis=1)
    mutual = np.inf if inf_i else float(np.sum(w * ki))
    lautum = np.inf if inf_l else float(np.sum(w * kl))
    return mutual, lautum
