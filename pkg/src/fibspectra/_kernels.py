"""Compiled scalar kernels for the band engine.

A word is passed as flat arrays of segment lengths and potential values (the
concatenation of its letters' segments); the two letters are passed
separately for the trace recursion.
"""

import math

import numpy as np
from numba import njit

_SERIES = 1e-6


@njit(cache=True, nogil=True)
def cos_sinc(z, length):
    if abs(z) < _SERIES:
        w = -z * length * length
        c = 1 + w / 2 * (1 + w / 12 * (1 + w / 30 * (1 + w / 56)))
        s = length * (1 + w / 6 * (1 + w / 20 * (1 + w / 42 * (1 + w / 72))))
        return c, s
    if z > 0:
        k = math.sqrt(z)
        return math.cos(k * length), math.sin(k * length) / k
    kap = math.sqrt(-z)
    x = kap * length
    if x > 700.0:
        big = math.exp(700.0)
        return big, big / kap
    return math.cosh(x), math.sinh(x) / kap


@njit(cache=True, nogil=True)
def dirichlet_count(E, lens, vals):
    """Zeros in (0, L] of the solution with u(0) = 0, u'(0) = 1."""
    u = 0.0
    p = 1.0
    count = 0
    for i in range(lens.shape[0]):
        length = lens[i]
        z = E - vals[i]
        c, s = cos_sinc(z, length)
        u1 = c * u + s * p
        p1 = -z * s * u + c * p
        if z > 0:
            k = math.sqrt(z)
            phi = math.atan2(u, p / k)
            if phi < 0:
                phi += math.pi
            if phi >= math.pi:
                phi -= math.pi
            count += int(math.floor((k * length + phi) / math.pi))
        elif u != 0.0 and (u * u1 < 0 or u1 == 0.0):
            count += 1
        nrm = math.hypot(u1, p1)
        u = u1 / nrm
        p = p1 / nrm
    return count


@njit(cache=True, nogil=True)
def _piece(E, lens, vals):
    m00, m01, m10, m11 = 1.0, 0.0, 0.0, 1.0
    for i in range(lens.shape[0]):
        z = E - vals[i]
        c, s = cos_sinc(z, lens[i])
        a00, a01, a10, a11 = c, s, -z * s, c
        m00, m01, m10, m11 = (a00 * m00 + a01 * m10, a00 * m01 + a01 * m11,
                              a10 * m00 + a11 * m10, a10 * m01 + a11 * m11)
    return m00, m01, m10, m11


@njit(cache=True, nogil=True)
def _scale(m00, m01, m10, m11):
    s = max(abs(m00), abs(m01), abs(m10), abs(m11))
    if s == 0.0:
        s = 1.0
    return m00 / s, m01 / s, m10 / s, m11 / s, math.log(s)


_EPS = 2.220446049250313e-16
_LOG_EPS4 = math.log(4 * _EPS)


@njit(cache=True, nogil=True)
def _logaddexp3(a, b, c):
    m = max(a, b, c)
    return m + math.log(math.exp(a - m) + math.exp(b - m) + math.exp(c - m))


@njit(cache=True, nogil=True)
def word_trace_full(E, n, a_len, a_val, b_len, b_val):
    """Sign of x_n, log|x_n|, log of the largest matrix entry and log of the
    estimated absolute rounding error of x_n.

    The error estimate propagates relative errors through the product
    recursion; each product amplifies them by its cancellation factor
    (size of |P||C| over size of PC).
    """
    b00, b01, b10, b11, lb = _scale(*_piece(E, b_len, b_val))
    rb = _LOG_EPS4 + math.log(b_len.shape[0])
    if n == -1:
        h = 0.5 * (b00 + b11)
        lg = (math.log(abs(h)) if h != 0 else -np.inf) + lb
        return np.sign(h), lg, lb, rb + lb
    a00, a01, a10, a11, la = _scale(*_piece(E, a_len, a_val))
    ra = _LOG_EPS4 + math.log(a_len.shape[0])
    # prev = M_{j-1}, cur = M_j; M_{j+1} = prev @ cur
    p00, p01, p10, p11, lp, rp = b00, b01, b10, b11, lb, rb
    c00, c01, c10, c11, lc, rc = a00, a01, a10, a11, la, ra
    for _ in range(n):
        q00 = p00 * c00 + p01 * c10
        q01 = p00 * c01 + p01 * c11
        q10 = p10 * c00 + p11 * c10
        q11 = p10 * c01 + p11 * c11
        bound = max(abs(p00) * abs(c00) + abs(p01) * abs(c10),
                    abs(p00) * abs(c01) + abs(p01) * abs(c11),
                    abs(p10) * abs(c00) + abs(p11) * abs(c10),
                    abs(p10) * abs(c01) + abs(p11) * abs(c11))
        q00, q01, q10, q11, lq = _scale(q00, q01, q10, q11)
        rq = _logaddexp3(rp, rc, _LOG_EPS4) + math.log(bound) - lq
        lq += lp + lc
        p00, p01, p10, p11, lp, rp = c00, c01, c10, c11, lc, rc
        c00, c01, c10, c11, lc, rc = q00, q01, q10, q11, lq, rq
    h = 0.5 * (c00 + c11)
    if h == 0.0:
        return 0.0, -np.inf, lc, rc + lc
    return np.sign(h), math.log(abs(h)) + lc, lc, rc + lc


@njit(cache=True, nogil=True)
def trace_noise(E, n, a_len, a_val, b_len, b_val):
    return word_trace_full(E, n, a_len, a_val, b_len, b_val)[3]


@njit(cache=True, nogil=True)
def word_trace(E, n, a_len, a_val, b_len, b_val):
    """Sign and log|x_n| of the half-trace over S^n(a)."""
    sg, lg, _, _ = word_trace_full(E, n, a_len, a_val, b_len, b_val)
    return sg, lg


@njit(cache=True, nogil=True)
def count_array(E, lens, vals):
    out = np.empty(E.shape[0], dtype=np.int64)
    for i in range(E.shape[0]):
        out[i] = dirichlet_count(E[i], lens, vals)
    return out


@njit(cache=True, nogil=True)
def trace_array(E, n, a_len, a_val, b_len, b_val):
    sg = np.empty(E.shape[0])
    lg = np.empty(E.shape[0])
    for i in range(E.shape[0]):
        sg[i], lg[i] = word_trace(E[i], n, a_len, a_val, b_len, b_val)
    return sg, lg


@njit(cache=True, nogil=True)
def trace_cond_array(E, n, a_len, a_val, b_len, b_val):
    sg = np.empty(E.shape[0])
    lg = np.empty(E.shape[0])
    lc = np.empty(E.shape[0])
    ln = np.empty(E.shape[0])
    for i in range(E.shape[0]):
        sg[i], lg[i], lc[i], ln[i] = word_trace_full(E[i], n, a_len, a_val, b_len, b_val)
    return sg, lg, lc, ln


@njit(cache=True, nogil=True)
def bisect_count(lo, hi, target, square, lens, vals):
    """Per bracket, shrink to float resolution around count(s) >= target."""
    out_lo = lo.copy()
    out_hi = hi.copy()
    for i in range(lo.shape[0]):
        a = lo[i]
        b = hi[i]
        while True:
            mid = 0.5 * (a + b)
            if mid <= a or mid >= b:
                break
            E = mid * mid if square else mid
            if dirichlet_count(E, lens, vals) >= target[i]:
                b = mid
            else:
                a = mid
        out_lo[i] = a
        out_hi[i] = b
    return out_lo, out_hi


@njit(cache=True, nogil=True)
def _tr(s, square, n, a_len, a_val, b_len, b_val):
    E = s * s if square else s
    return word_trace(E, n, a_len, a_val, b_len, b_val)


@njit(cache=True, nogil=True)
def _tr_sure(s, square, n, a_len, a_val, b_len, b_val):
    """Like ``_tr`` but the log is 0 unless |x_n| > 1 beyond rounding noise."""
    E = s * s if square else s
    sg, lg, _, ln = word_trace_full(E, n, a_len, a_val, b_len, b_val)
    # |x| - 1 is about lg near 1; demand twice the estimated absolute error
    if lg <= 1e-15 or lg < 2 * math.exp(ln):
        return sg, 0.0
    return sg, lg


@njit(cache=True, nogil=True)
def _edge(out_pt, in_pt, tol, square, n, a_len, a_val, b_len, b_val):
    """Bisect between an outside and an inside point; returns the inside end."""
    while abs(in_pt - out_pt) > tol:
        mid = 0.5 * (in_pt + out_pt)
        if mid == in_pt or mid == out_pt:
            break
        _, lg = _tr(mid, square, n, a_len, a_val, b_len, b_val)
        if lg <= 1e-15:
            in_pt = mid
        else:
            out_pt = mid
    return in_pt


@njit(cache=True, nogil=True)
def bands_from_brackets(left, right, tol, square, n, a_len, a_val, b_len, b_val, noisy):
    """Locate the (at most one) band inside each bracket.

    status: 1 band found, 2 no band found although the endpoint signs gave
    no evidence either way, 3 rounding noise of x_n at an endpoint exceeds
    exp(noisy) so double precision cannot decide.
    """
    m = left.shape[0]
    lo_e = np.empty(m)
    hi_e = np.empty(m)
    status = np.zeros(m, dtype=np.int64)
    for i in range(m):
        a = left[i]
        b = right[i]
        ea = a * a if square else a
        eb = b * b if square else b
        sa, la, _, na = word_trace_full(ea, n, a_len, a_val, b_len, b_val)
        sb, lb, _, nb = word_trace_full(eb, n, a_len, a_val, b_len, b_val)
        if max(na, nb) > noisy:
            status[i] = 3
            continue
        in_a = la <= 1e-15
        in_b = lb <= 1e-15
        # a Dirichlet point can sit on the far edge of a gap, i.e. on the
        # neighbouring band; then the point just inside the bracket is outside
        # (only when the excess over 1 beats the rounding estimate)
        if in_a and b - a > 4 * tol:
            sp, lp = _tr_sure(a + 2 * tol, square, n, a_len, a_val, b_len, b_val)
            if lp > 0:
                in_a = False
                a = a + 2 * tol
                sa = sp
        if in_b and b - a > 4 * tol:
            sp, lp = _tr_sure(b - 2 * tol, square, n, a_len, a_val, b_len, b_val)
            if lp > 0:
                in_b = False
                b = b - 2 * tol
                sb = sp
        inner = 0.0
        found = False
        if in_a:
            inner = a
            found = True
        elif in_b:
            inner = b
            found = True
        elif sa != sb and sa != 0 and sb != 0:
            # walk the sign change down until a point with |x| <= 1 appears
            x, y = a, b
            while True:
                mid = 0.5 * (x + y)
                if mid <= x or mid >= y:
                    inner = mid
                    found = True
                    break
                sm, lm = _tr(mid, square, n, a_len, a_val, b_len, b_val)
                if lm <= 1e-15:
                    inner = mid
                    found = True
                    break
                if sm == sb:
                    y = mid
                else:
                    x = mid
        if not found:
            status[i] = 2
            continue
        status[i] = 1
        lo_e[i] = a if in_a else _edge(a, inner, tol, square, n, a_len, a_val, b_len, b_val)
        hi_e[i] = b if in_b else _edge(b, inner, tol, square, n, a_len, a_val, b_len, b_val)
    return lo_e, hi_e, status

