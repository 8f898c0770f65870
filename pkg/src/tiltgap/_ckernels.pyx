# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled inner loops.

Signatures mirror :mod:`tiltgap._pykernels` one for one.  Every sum runs in
ascending index order; reductions over dataset ranks use fixed-size blocks
whose partial sums are combined pairwise, so the result does not depend on
anything but the inputs.
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport exp, log, INFINITY, isinf

cnp.import_array()

cdef Py_ssize_t BLOCK = 1024


cdef inline double _xlogratio(double a, double b) noexcept nogil:
    # a * log(a / b) for a, b > 0; the ratio overflows when b is subnormal
    cdef double r = a / b
    if isinf(r):
        return a * (log(a) - log(b))
    return a * log(r)


cdef double _pairwise(double[::1] parts, Py_ssize_t lo, Py_ssize_t hi) noexcept nogil:
    if hi <= lo:
        return 0.0
    if hi - lo == 1:
        return parts[lo]
    cdef Py_ssize_t mid = lo + (hi - lo) // 2
    return _pairwise(parts, lo, mid) + _pairwise(parts, mid, hi)


def kl_sum(const double[::1] p, const double[::1] q):
    cdef Py_ssize_t i, k = p.shape[0]
    cdef double s = 0.0
    for i in range(k):
        if p[i] > 0.0:
            if q[i] <= 0.0:
                return INFINITY
            s += _xlogratio(p[i], q[i])
    return s


def expected_loss(const double[::1] p, const double[::1] row):
    cdef Py_ssize_t i, k = p.shape[0]
    cdef double s = 0.0
    for i in range(k):
        if p[i] > 0.0:
            if isinf(row[i]):
                return INFINITY
            s += p[i] * row[i]
    return s


def log_partition(const double[::1] base, const double[::1] row, double t):
    cdef Py_ssize_t i, k = base.shape[0]
    cdef double mx = -INFINITY, a, s = 0.0
    if t == 0.0:
        return 0.0
    for i in range(k):
        if base[i] > 0.0:
            if isinf(row[i]):
                if t > 0.0:
                    return INFINITY
                continue
            a = log(base[i]) + t * row[i]
            if a > mx:
                mx = a
    if isinf(mx):
        return -INFINITY
    for i in range(k):
        if base[i] > 0.0 and not isinf(row[i]):
            s += exp(log(base[i]) + t * row[i] - mx)
    return mx + log(s)


def tilt_weights(const double[::1] base, const double[::1] row, double inv_beta, double logz):
    cdef Py_ssize_t i, k = base.shape[0]
    out = np.zeros(k, dtype=np.float64)
    cdef double[::1] w = out
    for i in range(k):
        if base[i] > 0.0:
            w[i] = exp(log(base[i]) + row[i] * inv_beta - logz)
    return out


def risk_table(const double[:, ::1] loss, Py_ssize_t n):
    cdef Py_ssize_t m = loss.shape[0], k = loss.shape[1]
    cdef Py_ssize_t N = k ** n, r, t, th
    cdef double s
    out = np.empty((N, m), dtype=np.float64)
    cdef double[:, ::1] risk = out
    cdef Py_ssize_t[::1] digits = np.zeros(n, dtype=np.intp)
    for r in range(N):
        for th in range(m):
            s = 0.0
            for t in range(n):
                s += loss[th, digits[t]]
            risk[r, th] = s / n
        # odometer: last position varies fastest (lexicographic rank order)
        t = n - 1
        while t >= 0:
            digits[t] += 1
            if digits[t] < k:
                break
            digits[t] = 0
            t -= 1
    return out


def product_weights(const double[::1] pz, Py_ssize_t n):
    cdef Py_ssize_t k = pz.shape[0], N = k ** n, r, t
    cdef double w
    out = np.empty(N, dtype=np.float64)
    cdef double[::1] ws = out
    cdef Py_ssize_t[::1] digits = np.zeros(n, dtype=np.intp)
    for r in range(N):
        w = 1.0
        for t in range(n):
            w *= pz[digits[t]]
        ws[r] = w
        t = n - 1
        while t >= 0:
            digits[t] += 1
            if digits[t] < k:
                break
            digits[t] = 0
            t -= 1
    return out


def gibbs_table(const double[:, ::1] risk, const double[::1] log_q, double lam):
    cdef Py_ssize_t N = risk.shape[0], m = risk.shape[1], r, th
    cdef double mx, s, logk
    table = np.zeros((N, m), dtype=np.float64)
    logks = np.empty(N, dtype=np.float64)
    cdef double[:, ::1] tab = table
    cdef double[::1] lk = logks
    cdef double[::1] a = np.empty(m, dtype=np.float64)
    for r in range(N):
        mx = -INFINITY
        for th in range(m):
            if isinf(log_q[th]):
                continue
            a[th] = log_q[th] - risk[r, th] / lam
            if a[th] > mx:
                mx = a[th]
        s = 0.0
        for th in range(m):
            if not isinf(log_q[th]):
                s += exp(a[th] - mx)
        logk = mx + log(s)
        lk[r] = logk
        s = 0.0
        for th in range(m):
            if not isinf(log_q[th]):
                tab[r, th] = exp(a[th] - logk)
                s += tab[r, th]
        for th in range(m):
            tab[r, th] = tab[r, th] / s
    return table, logks


def audit_sums(const double[:, ::1] table, const double[::1] weights,
               const double[:, ::1] risk, const double[::1] pop):
    """Model marginal and doubly-expected gap in one pass over ranks."""
    cdef Py_ssize_t N = table.shape[0], m = table.shape[1], r, th, b, lo, hi
    cdef Py_ssize_t nb = (N + BLOCK - 1) // BLOCK
    cdef double g, acc
    gap_parts = np.zeros(nb, dtype=np.float64)
    marg_parts = np.zeros((m, nb), dtype=np.float64)
    cdef double[::1] gp = gap_parts
    cdef double[:, ::1] mp = marg_parts
    for b in range(nb):
        lo = b * BLOCK
        hi = min(lo + BLOCK, N)
        acc = 0.0
        for r in range(lo, hi):
            if weights[r] == 0.0:
                continue
            g = 0.0
            for th in range(m):
                if table[r, th] > 0.0:
                    g += table[r, th] * (pop[th] - risk[r, th])
                    mp[th, b] += weights[r] * table[r, th]
            acc += weights[r] * g
        gp[b] = acc
    marginal = np.empty(m, dtype=np.float64)
    for th in range(m):
        marginal[th] = _pairwise(mp[th], 0, nb)
    return marginal, _pairwise(gp, 0, nb)


def info_sums(const double[:, ::1] table, const double[::1] weights, const double[::1] marginal):
    """Dataset-averaged KL(conditional || marginal) and KL(marginal || conditional)."""
    cdef Py_ssize_t N = table.shape[0], m = table.shape[1], r, th, b, lo, hi
    cdef Py_ssize_t nb = (N + BLOCK - 1) // BLOCK
    cdef double acc_i, acc_l, ki, kl, c, pm
    cdef bint inf_i = False, inf_l = False
    mi_parts = np.zeros(nb, dtype=np.float64)
    la_parts = np.zeros(nb, dtype=np.float64)
    cdef double[::1] ip = mi_parts
    cdef double[::1] lp = la_parts
    for b in range(nb):
        lo = b * BLOCK
        hi = min(lo + BLOCK, N)
        acc_i = 0.0
        acc_l = 0.0
        for r in range(lo, hi):
            if weights[r] == 0.0:
                continue
            ki = 0.0
            kl = 0.0
            for th in range(m):
                c = table[r, th]
                pm = marginal[th]
                if c > 0.0:
                    if pm <= 0.0:
                        inf_i = True
                    else:
                        ki += _xlogratio(c, pm)
                if pm > 0.0:
                    if c <= 0.0:
                        inf_l = True
                    else:
                        kl += _xlogratio(pm, c)
            acc_i += weights[r] * ki
            acc_l += weights[r] * kl
        ip[b] = acc_i
        lp[b] = acc_l
    mutual = INFINITY if inf_i else _pairwise(ip, 0, nb)
    lautum = INFINITY if inf_l else _pairwise(lp, 0, nb)
    return mutual, lautum
