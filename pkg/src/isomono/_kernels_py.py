"""Pure-Python transport kernel (fallback for the compiled ``_kernels``).

Continues a solution of ``dY/dz = P(z) Y`` with ``P(z) = sum_i A_i / (z - l_i)``
along line and arc segments by Taylor series. At a node ``c`` write
``q(t) = prod_i (c - l_i + t)`` and ``Q(t) = sum_i A_i prod_{j != i}(c - l_j + t)``,
so that ``q Y' = Q Y``. The scaled coefficients ``u_k = y_k D^k`` of the expansion
at ``c`` in the step ``D`` then satisfy a short recurrence, and the series is
summed until two consecutive terms fall below the working precision in every
column. Steps are at most ``RHO`` times the distance to the nearest pole.

Path nodes are doubles and every increment between nodes is formed exactly,
so a closed loop really returns to its starting node. Arithmetic runs in
``mpmath`` at 106 bits, the precision of the compiled double-double kernel.
"""

import math

import mpmath
import numpy as np

from .errors import StepFailure

LINE = 0
ARC = 1

RHO = 0.35
PREC_BITS = 106
MAX_TERMS = 2000


def _nodes(kind, seg, z_start, poles):
    """Path nodes from ``z_start`` to the end of the segment (doubles)."""
    out = [complex(z_start)]
    if kind == LINE:
        a, b = complex(seg[0]), complex(seg[1])
        length = abs(b - a)
        if length == 0.0:
            return out
        t = 0.0
        z = out[0]
        while True:
            d = float(np.min(np.abs(poles - z))) if len(poles) else math.inf
            t += RHO * d / length
            if t >= 1.0:
                out.append(b)
                return out
            z = a + (b - a) * t
            out.append(z)
    w = complex(seg[0])
    r = float(seg[1].real)
    th0, th1 = float(seg[2].real), float(seg[2].imag)
    full = abs(abs(th1 - th0) - 2.0 * math.pi) < 1e-12
    sgn = 1.0 if th1 >= th0 else -1.0
    th = th0
    z = out[0]
    while True:
        d = float(np.min(np.abs(poles - z))) if len(poles) else math.inf
        dth = 2.0 * math.asin(min(RHO * d / (2.0 * r), 1.0))
        th += sgn * dth
        if sgn * (th - th1) >= 0.0:
            out.append(out[0] if full else w + r * complex(math.cos(th1), math.sin(th1)))
            return out
        z = w + r * complex(math.cos(th), math.sin(th))
        out.append(z)


def _polymul_linear(coeffs, d):
    """Multiply a coefficient list (ascending) by ``d + t``."""
    out = [c * d for c in coeffs] + [mpmath.mpc(0)]
    for k, c in enumerate(coeffs):
        out[k + 1] += c
    return out


def _step(Y, c, D, poles, residues, p, eps):
    one = mpmath.mpc(1)
    n = len(poles)
    ds = [mpmath.mpc(c) - mpmath.mpc(w) for w in poles]
    q = [one]
    for d in ds:
        q = _polymul_linear(q, d)
    Dm = mpmath.mpc(D)
    q0 = q[0]
    # scaled coefficients: qh[m] = q_m D^m / q0, Qh[m] = Q_m D^(m+1) / q0
    qh = [None] + [q[m] * Dm ** m / q0 for m in range(1, n + 1)]
    Qh = []
    rs = []
    for i in range(n):
        r = [one]
        for j in range(n):
            if j != i:
                r = _polymul_linear(r, ds[j])
        rs.append(r)
    for m in range(n):
        s = Dm ** (m + 1) / q0
        Qh.append([[sum((residues[i][a][b] * rs[i][m] for i in range(n)), mpmath.mpc(0)) * s
                    for b in range(p)] for a in range(p)])
    hist = [Y]
    total = [row[:] for row in Y]
    small = [0] * p
    colnorm = [max(abs(Y[a][b]) for a in range(p)) for b in range(p)]
    k = 0
    while True:
        # u_{k+1} = (sum_m Qh_m u_{k-m} - sum_{m>=1} qh_m (k+1-m) u_{k+1-m}) / (k+1)
        new = [[mpmath.mpc(0)] * p for _ in range(p)]
        for m in range(min(n, k + 1)):
            U = hist[-1 - m]
            Qm = Qh[m]
            for a in range(p):
                for b in range(p):
                    new[a][b] += mpmath.fsum(Qm[a][e] * U[e][b] for e in range(p))
        for m in range(1, min(n, k + 1) + 1):
            U = hist[-m]
            f = qh[m] * (k + 1 - m)
            if f == 0:
                continue
            for a in range(p):
                for b in range(p):
                    new[a][b] -= f * U[a][b]
        inv = mpmath.mpf(1) / (k + 1)
        for a in range(p):
            for b in range(p):
                new[a][b] *= inv
                total[a][b] += new[a][b]
        k += 1
        hist.append(new)
        if len(hist) > n + 1:
            hist.pop(0)
        done = True
        for b in range(p):
            t = max(abs(new[a][b]) for a in range(p))
            cn = max(colnorm[b], max(abs(total[a][b]) for a in range(p)))
            small[b] = small[b] + 1 if t <= eps * cn else 0
            if small[b] < 2:
                done = False
        if done:
            return total, k
        if k > MAX_TERMS:
            raise StepFailure(f"Taylor series did not converge at z = {c}")


def transport(kinds, segs, poles, residues, Y0, tol):
    """Carry ``Y0`` along consecutive segments.

    Returns ``(Y_hi, Y_lo, steps, terms)``: the result split into a leading
    double part and a correction, the number of Taylor steps and the total
    number of series terms used.
    """
    if not tol > 0:
        raise ValueError("tol must be positive")
    poles = np.asarray(poles, dtype=complex)
    residues = np.asarray(residues, dtype=complex)
    p = residues.shape[1] if residues.ndim == 3 else np.asarray(Y0).shape[0]
    steps = terms = 0
    with mpmath.workprec(PREC_BITS):
        eps = min(mpmath.mpf(tol), mpmath.mpf(2) ** (-PREC_BITS + 2))
        A = [[[mpmath.mpc(complex(R[a, b])) for b in range(p)] for a in range(p)] for R in residues]
        Y0 = np.asarray(Y0, dtype=complex)
        Y = [[mpmath.mpc(complex(Y0[a, b])) for b in range(p)] for a in range(p)]
        segs = np.asarray(segs, dtype=complex).reshape(-1, 3)
        z = None
        for kind, seg in zip(kinds, segs):
            kind = int(kind)
            if z is None:
                z = complex(seg[0]) if kind == LINE else complex(seg[0] + seg[1].real * np.exp(1j * seg[2].real))
            nodes = _nodes(kind, seg, z, poles)
            for c, c1 in zip(nodes, nodes[1:]):
                D = mpmath.mpc(c1) - mpmath.mpc(c)
                Y, k = _step(Y, c, D, poles, A, p, eps)
                steps += 1
                terms += k
            z = nodes[-1]
        hi = np.empty((p, p), dtype=complex)
        lo = np.empty((p, p), dtype=complex)
        for a in range(p):
            for b in range(p):
                re, im = Y[a][b].real, Y[a][b].imag
                rh, ih = float(re), float(im)
                hi[a, b] = complex(rh, ih)
                lo[a, b] = complex(float(re - rh), float(im - ih))
    return hi, lo, steps, terms
