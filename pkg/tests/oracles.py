"""Independent reference computations for the test suite.

Everything here is written directly from the defining formulas with
mpmath at 50 digits and plain loops; nothing is imported from tiltgap.
"""

import itertools

import mpmath as mp

mp.mp.dps = 50


def kl(p, q):
    s = mp.mpf(0)
    for pi, qi in zip(p, q):
        pi, qi = mp.mpf(pi), mp.mpf(qi)
        if pi == 0:
            continue
        if qi == 0:
            return mp.inf
        s += pi * mp.log(pi / qi)
    return s


def expect(p, row):
    return mp.fsum(mp.mpf(pi) * mp.mpf(li) for pi, li in zip(p, row) if pi > 0)


def log_partition(base, row, t):
    return mp.log(mp.fsum(mp.mpf(b) * mp.exp(mp.mpf(t) * mp.mpf(l)) for b, l in zip(base, row) if b > 0))


def tilt(base, row, beta):
    beta = mp.mpf(beta)
    raw = [mp.mpf(b) * mp.exp(mp.mpf(l) / beta) if b > 0 else mp.mpf(0) for b, l in zip(base, row)]
    z = mp.fsum(raw)
    return [r / z for r in raw]


def solve_beta(base, row, gamma):
    """Root of KL(tilt_beta || base) = gamma by mpmath's secant/bisection solver."""
    f = lambda lb: kl(tilt(base, row, mp.exp(lb)), base) - mp.mpf(gamma)
    return mp.exp(mp.findroot(f, (mp.mpf(-20), mp.mpf(20)), solver="anderson"))


def gibbs_enumeration(loss, pz, prior, lam, n):
    """Doubly-expected gap, mutual and lautum information by explicit loops."""
    lam = mp.mpf(lam)
    k, m = len(pz), len(loss)
    rows, weights = [], []
    for z in itertools.product(range(k), repeat=n):
        w = mp.mpf(1)
        for zi in z:
            w *= mp.mpf(pz[zi])
        emp = [mp.fsum(mp.mpf(loss[t][zi]) for zi in z) / n for t in range(m)]
        raw = [mp.mpf(prior[t]) * mp.exp(-emp[t] / lam) for t in range(m)]
        tot = mp.fsum(raw)
        rows.append(([r / tot for r in raw], emp))
        weights.append(w)
    pop = [expect(pz, loss[t]) for t in range(m)]
    marg = [mp.fsum(w * c[t] for w, (c, _) in zip(weights, rows)) for t in range(m)]
    gap = mp.fsum(
        w * mp.fsum(c[t] * (pop[t] - emp[t]) for t in range(m))
        for w, (c, emp) in zip(weights, rows)
    )
    mutual = mp.fsum(w * kl(c, marg) for w, (c, _) in zip(weights, rows))
    lautum = mp.fsum(w * kl(marg, c) for w, (c, _) in zip(weights, rows))
    return {"gap": gap, "mutual": mutual, "lautum": lautum, "marginal": marg,
            "conditionals": [c for c, _ in rows]}
