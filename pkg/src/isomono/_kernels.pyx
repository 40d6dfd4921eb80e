# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled transport kernel in double-double arithmetic.

Same algorithm and interface as ``_kernels_py``: Taylor steps along path
nodes, each series summed until two consecutive terms fall below the
working precision in every column. A double-double number is an unevaluated
sum ``hi + lo`` of two doubles, giving about 106 bits.
"""

import numpy as np
from libc.math cimport fma, fabs, sqrt, asin, cos, sin
from libc.stdlib cimport malloc, free

from .errors import StepFailure

cdef double RHO = 0.35
cdef int MAX_TERMS = 2000
cdef double EPS_DD = 4.93038065763132e-32  # 2**-104


cdef struct dd:
    double hi
    double lo

cdef struct cdd:
    dd re
    dd im


cdef inline dd two_sum(double a, double b) noexcept nogil:
    cdef dd r
    cdef double s = a + b
    cdef double bb = s - a
    r.hi = s
    r.lo = (a - (s - bb)) + (b - bb)
    return r

cdef inline dd quick_two_sum(double a, double b) noexcept nogil:
    cdef dd r
    cdef double s = a + b
    r.hi = s
    r.lo = b - (s - a)
    return r

cdef inline dd dd_add(dd x, dd y) noexcept nogil:
    cdef dd s = two_sum(x.hi, y.hi)
    cdef dd t = two_sum(x.lo, y.lo)
    s.lo += t.hi
    s = quick_two_sum(s.hi, s.lo)
    s.lo += t.lo
    return quick_two_sum(s.hi, s.lo)

cdef inline dd dd_neg(dd x) noexcept nogil:
    x.hi = -x.hi
    x.lo = -x.lo
    return x

cdef inline dd dd_mul(dd x, dd y) noexcept nogil:
    cdef double p = x.hi * y.hi
    cdef double e = fma(x.hi, y.hi, -p)
    e += x.hi * y.lo + x.lo * y.hi
    return quick_two_sum(p, e)

cdef inline dd dd_mul_d(dd x, double y) noexcept nogil:
    cdef double p = x.hi * y
    cdef double e = fma(x.hi, y, -p)
    e += x.lo * y
    return quick_two_sum(p, e)

cdef inline dd dd_div(dd x, dd y) noexcept nogil:
    cdef double q1 = x.hi / y.hi
    cdef dd r = dd_add(x, dd_neg(dd_mul_d(y, q1)))
    cdef double q2 = r.hi / y.hi
    r = dd_add(r, dd_neg(dd_mul_d(y, q2)))
    cdef double q3 = r.hi / y.hi
    cdef dd q = quick_two_sum(q1, q2)
    return dd_add(q, two_sum(q3, 0.0))

cdef inline dd dd_from(double a) noexcept nogil:
    cdef dd r
    r.hi = a
    r.lo = 0.0
    return r


cdef inline cdd c_from(double complex z) noexcept nogil:
    cdef cdd r
    r.re = dd_from(z.real)
    r.im = dd_from(z.imag)
    return r

cdef inline cdd c_zero() noexcept nogil:
    cdef cdd r
    r.re = dd_from(0.0)
    r.im = dd_from(0.0)
    return r

cdef inline cdd c_add(cdd x, cdd y) noexcept nogil:
    cdef cdd r
    r.re = dd_add(x.re, y.re)
    r.im = dd_add(x.im, y.im)
    return r

cdef inline cdd c_sub(cdd x, cdd y) noexcept nogil:
    cdef cdd r
    r.re = dd_add(x.re, dd_neg(y.re))
    r.im = dd_add(x.im, dd_neg(y.im))
    return r

cdef inline cdd c_mul(cdd x, cdd y) noexcept nogil:
    cdef cdd r
    r.re = dd_add(dd_mul(x.re, y.re), dd_neg(dd_mul(x.im, y.im)))
    r.im = dd_add(dd_mul(x.re, y.im), dd_mul(x.im, y.re))
    return r

cdef inline cdd c_mul_d(cdd x, double y) noexcept nogil:
    cdef cdd r
    r.re = dd_mul_d(x.re, y)
    r.im = dd_mul_d(x.im, y)
    return r

cdef inline cdd c_div(cdd x, cdd y) noexcept nogil:
    cdef dd den = dd_add(dd_mul(y.re, y.re), dd_mul(y.im, y.im))
    cdef cdd r
    r.re = dd_div(dd_add(dd_mul(x.re, y.re), dd_mul(x.im, y.im)), den)
    r.im = dd_div(dd_add(dd_mul(x.im, y.re), dd_neg(dd_mul(x.re, y.im))), den)
    return r

cdef inline double c_abs(cdd x) noexcept nogil:
    return sqrt(x.re.hi * x.re.hi + x.im.hi * x.im.hi)

cdef inline cdd c_diff(double complex a, double complex b) noexcept nogil:
    # a - b formed exactly
    cdef cdd r
    r.re = two_sum(a.real, -b.real)
    r.im = two_sum(a.imag, -b.imag)
    return r


cdef double pole_dist(double complex z, double complex[:] poles, int n) noexcept nogil:
    cdef double d = 1e300, t
    cdef int i
    for i in range(n):
        t = abs(z - poles[i])
        if t < d:
            d = t
    return d


cdef int taylor_step(cdd* Y, double complex c, cdd D, double complex[:] poles, cdd* A, int n, int p,
                     cdd* work, double eps) noexcept nogil:
    """One Taylor step from node ``c`` by ``D``; ``Y`` is overwritten. Returns the term count or -1."""
    cdef int i, j, m, a, b, e, k, pp = p * p
    # work layout: ds[n] | q[n+1] | r[n*n] | qh[n+1] | Qh[n*pp] | hist[(n+1)*pp] | total[pp] | tmp[n+1]
    cdef cdd* ds = work
    cdef cdd* q = ds + n
    cdef cdd* rr = q + (n + 1)
    cdef cdd* qh = rr + n * n
    cdef cdd* Qh = qh + (n + 1)
    cdef cdd* hist = Qh + n * pp
    cdef cdd* total = hist + (n + 1) * pp
    cdef cdd* tmp = total + pp
    cdef cdd acc, s, Dp, ONE = c_from(1.0)
    cdef cdd* U
    cdef cdd* new
    cdef double f, t, cn
    cdef double colnorm[64]
    cdef int small[64]
    cdef int deg, head, nh

    for i in range(n):
        ds[i] = c_diff(c, poles[i])
    # q(t) = prod (ds_i + t)
    q[0] = ONE
    deg = 0
    for i in range(n):
        q[deg + 1] = q[deg]
        for k in range(deg, 0, -1):
            q[k] = c_add(c_mul(q[k], ds[i]), q[k - 1])
        q[0] = c_mul(q[0], ds[i])
        deg += 1
    # r_i(t) = prod_{j != i} (ds_j + t), degree n-1
    for i in range(n):
        for k in range(n + 1):
            tmp[k] = c_zero()
        tmp[0] = ONE
        deg = 0
        for j in range(n):
            if j == i:
                continue
            tmp[deg + 1] = tmp[deg]
            for k in range(deg, 0, -1):
                tmp[k] = c_add(c_mul(tmp[k], ds[j]), tmp[k - 1])
            tmp[0] = c_mul(tmp[0], ds[j])
            deg += 1
        for k in range(n):
            rr[i * n + k] = tmp[k]
    # scaled coefficients
    Dp = ONE
    for m in range(n + 1):
        qh[m] = c_div(c_mul(q[m], Dp), q[0])
        Dp = c_mul(Dp, D)
    Dp = D
    for m in range(n):
        s = c_div(Dp, q[0])
        for a in range(pp):
            acc = c_zero()
            for i in range(n):
                acc = c_add(acc, c_mul(A[i * pp + a], rr[i * n + m]))
            Qh[m * pp + a] = c_mul(acc, s)
        Dp = c_mul(Dp, D)

    for a in range(pp):
        hist[a] = Y[a]
        total[a] = Y[a]
    for b in range(p):
        small[b] = 0
        colnorm[b] = 0.0
        for a in range(p):
            t = c_abs(Y[a * p + b])
            if t > colnorm[b]:
                colnorm[b] = t
    head = 0  # slot of u_k
    nh = n + 1
    k = 0
    while True:
        new = hist + ((head + 1) % nh) * pp
        # new = sum_m Qh_m u_{k-m}
        for a in range(p):
            for b in range(p):
                acc = c_zero()
                for m in range(n if n < k + 1 else k + 1):
                    U = hist + ((head - m + nh) % nh) * pp
                    for e in range(p):
                        acc = c_add(acc, c_mul(Qh[m * pp + a * p + e], U[e * p + b]))
                for m in range(1, (n if n < k + 1 else k + 1) + 1):
                    f = <double>(k + 1 - m)
                    if f == 0.0:
                        continue
                    U = hist + ((head - m + 1 + nh) % nh) * pp
                    acc = c_sub(acc, c_mul_d(c_mul(qh[m], U[a * p + b]), f))
                tmp[1 + a * p + b] = acc
        for a in range(pp):
            new[a] = c_mul(tmp[1 + a], c_div(ONE, c_from(<double>(k + 1))))
            total[a] = c_add(total[a], new[a])
        head = (head + 1) % nh
        k += 1
        done = 1
        for b in range(p):
            t = 0.0
            cn = colnorm[b]
            for a in range(p):
                if c_abs(new[a * p + b]) > t:
                    t = c_abs(new[a * p + b])
                if c_abs(total[a * p + b]) > cn:
                    cn = c_abs(total[a * p + b])
            if t <= eps * cn:
                small[b] += 1
            else:
                small[b] = 0
            if small[b] < 2:
                done = 0
        if done:
            for a in range(pp):
                Y[a] = total[a]
            return k
        if k > MAX_TERMS:
            return -1


def _nodes(int kind, seg, double complex z_start, double complex[:] poles):
    cdef int n = poles.shape[0]
    cdef list out = [z_start]
    cdef double complex a, b, w, z
    cdef double length, t, d, r, th0, th1, th, dth, sgn
    cdef bint full
    if kind == 0:
        a = seg[0]
        b = seg[1]
        length = abs(b - a)
        if length == 0.0:
            return out
        t = 0.0
        z = z_start
        while True:
            d = pole_dist(z, poles, n) if n else 1e300
            t += RHO * d / length
            if t >= 1.0:
                out.append(b)
                return out
            z = a + (b - a) * t
            out.append(z)
    w = seg[0]
    r = seg[1].real
    th0 = seg[2].real
    th1 = seg[2].imag
    full = fabs(fabs(th1 - th0) - 2.0 * 3.141592653589793) < 1e-12
    sgn = 1.0 if th1 >= th0 else -1.0
    th = th0
    z = z_start
    while True:
        d = pole_dist(z, poles, n) if n else 1e300
        dth = 2.0 * asin(min(RHO * d / (2.0 * r), 1.0))
        th += sgn * dth
        if sgn * (th - th1) >= 0.0:
            out.append(out[0] if full else w + r * (cos(th1) + 1j * sin(th1)))
            return out
        z = w + r * (cos(th) + 1j * sin(th))
        out.append(z)


def transport(kinds, segs, poles, residues, Y0, double tol):
    """Carry ``Y0`` along consecutive segments; returns ``(Y_hi, Y_lo, steps, terms)``."""
    if not tol > 0:
        raise ValueError("tol must be positive")
    cdef double complex[:] P = np.ascontiguousarray(poles, dtype=complex).reshape(-1)
    R = np.ascontiguousarray(residues, dtype=complex)
    Y0a = np.ascontiguousarray(Y0, dtype=complex)
    cdef double complex[:, :] S = np.ascontiguousarray(segs, dtype=complex).reshape(-1, 3)
    cdef int n = P.shape[0]
    cdef int p = Y0a.shape[0]
    cdef int pp = p * p
    cdef int i, a, b, k, steps = 0, terms = 0
    cdef double eps = tol if tol < EPS_DD else EPS_DD
    cdef double complex z, c0, c1
    cdef double complex[:, :, :] Rv
    cdef double complex[:, :] Yv = Y0a
    if p > 64:
        raise ValueError("matrix size above 64 is not supported")
    if n:
        Rv = R.reshape(n, p, p)
    cdef cdd* A = <cdd*> malloc(max(n, 1) * pp * sizeof(cdd))
    cdef cdd* Y = <cdd*> malloc(pp * sizeof(cdd))
    cdef int wsize = n + (n + 1) + n * n + (n + 1) + n * pp + (n + 1) * pp + pp + max(n + 1, pp + 1)
    cdef cdd* work = <cdd*> malloc(wsize * sizeof(cdd))
    cdef cdd D
    try:
        for i in range(n):
            for a in range(p):
                for b in range(p):
                    A[i * pp + a * p + b] = c_from(Rv[i, a, b])
        for a in range(p):
            for b in range(p):
                Y[a * p + b] = c_from(Yv[a, b])
        first = True
        for j in range(S.shape[0]):
            kind = int(kinds[j])
            seg = (S[j, 0], S[j, 1], S[j, 2])
            if first:
                z = seg[0] if kind == 0 else seg[0] + seg[1].real * np.exp(1j * seg[2].real)
                first = False
            nodes = _nodes(kind, seg, z, P)
            for i in range(len(nodes) - 1):
                c0 = nodes[i]
                c1 = nodes[i + 1]
                D = c_diff(c1, c0)
                k = taylor_step(Y, c0, D, P, A, n, p, work, eps)
                if k < 0:
                    raise StepFailure(f"Taylor series did not converge at z = {c0}")
                steps += 1
                terms += k
            z = nodes[len(nodes) - 1]
        hi = np.empty((p, p), dtype=complex)
        lo = np.empty((p, p), dtype=complex)
        for a in range(p):
            for b in range(p):
                hi[a, b] = Y[a * p + b].re.hi + 1j * Y[a * p + b].im.hi
                lo[a, b] = Y[a * p + b].re.lo + 1j * Y[a * p + b].im.lo
        return hi, lo, steps, terms
    finally:
        free(A)
        free(Y)
        free(work)
