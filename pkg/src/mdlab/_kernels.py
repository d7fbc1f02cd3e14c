"""Compiled hot loops (numba).

All kernels are serial, allocation-free and nogil so the deterministic
block scheduler can run them from worker threads without changing any
result.  Fractional parts advance incrementally (one add + conditional
wrap per step); callers re-anchor them from exact integer arithmetic
every 2**16 steps, which keeps accumulated drift below ~1.5e-11.

Norm evaluations for the lattice minima are written once, here, in a
fixed operation order, so the enumeration fast path and the brute-force
oracle produce bit-identical candidate values.
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit

SEGMENT = 1 << 16

# count_* modes
MODE_Q = 0  # a < q*d1*d2 <= b and d1,d2 <= c
MODE_L = 1  # q*d1*d2 <= b
MODE_N = 2  # d1*d2 <= b


@njit(cache=True, nogil=True)
def count_segment(qstart, n, f1a, f2a, x1, x2, a, b, c, mode, retain, hits):
    """Count hits for q in [qstart, qstart+n); optionally record hit q's.

    f1a, f2a are the exact fractional parts of qstart*x1, qstart*x2.
    Returns (count, number_of_recorded_hits).
    """
    f1 = f1a
    f2 = f2a
    cnt = 0
    nh = 0
    for i in range(n):
        q = qstart + i
        if i > 0:
            f1 += x1
            if f1 >= 1.0:
                f1 -= 1.0
            f2 += x2
            if f2 >= 1.0:
                f2 -= 1.0
        d1 = f1 if f1 < 0.5 else 1.0 - f1
        d2 = f2 if f2 < 0.5 else 1.0 - f2
        hit = False
        if mode == MODE_Q:
            pr = q * d1 * d2
            hit = (pr > a) and (pr <= b) and (d1 <= c) and (d2 <= c)
        elif mode == MODE_L:
            hit = q * d1 * d2 <= b
        else:
            hit = d1 * d2 <= b
        if hit:
            cnt += 1
            if retain:
                hits[nh] = q
                nh += 1
    return cnt, nh


@njit(cache=True, nogil=True)
def hits_below_segment(qstart, n, f1a, f2a, x1, x2, thr, qs, vs, offset):
    """Record (q, q*d1*d2) for every q in the segment with product <= thr.

    Appends starting at ``offset``; returns the new offset, or -1 on
    buffer overflow.
    """
    f1 = f1a
    f2 = f2a
    k = offset
    for i in range(n):
        q = qstart + i
        if i > 0:
            f1 += x1
            if f1 >= 1.0:
                f1 -= 1.0
            f2 += x2
            if f2 >= 1.0:
                f2 -= 1.0
        d1 = f1 if f1 < 0.5 else 1.0 - f1
        d2 = f2 if f2 < 0.5 else 1.0 - f2
        pr = q * d1 * d2
        if pr <= thr:
            if k >= qs.size:
                return -1
            qs[k] = q
            vs[k] = pr
            k += 1
    return k


@njit(cache=True, nogil=True)
def frac_walk_segment(qstart, n, fa, x, out):
    """Incremental fractional parts of q*x for the drift spot-check."""
    f = fa
    for i in range(n):
        if i > 0:
            f += x
            if f >= 1.0:
                f -= 1.0
        out[i] = f


# ---------------------------------------------------------------------------
# Lattice minima for a(t) * { p + q(x + r e3) }
# ---------------------------------------------------------------------------


@njit(cache=True, nogil=True, inline="always")
def _vector_norm(p1, p2, q, x1, x2, r, et1, et2, iexp):
    # max(e^t1 |p1+q x1|, e^t2 |p2+q x2|, r |q| e^-(t1+t2)); fixed op order.
    v = r * abs(q) * iexp
    v1 = et1 * abs(p1 + q * x1)
    if v1 > v:
        v = v1
    v2 = et2 * abs(p2 + q * x2)
    if v2 > v:
        v = v2
    return v


@njit(cache=True, nogil=True, inline="always")
def _wedge_norm(m, w1, w2, x1, x2, es, rem1, rem2):
    # max(e^(t1+t2) |m + w1 x2 - w2 x1|, r e^-t2 |w1|, r e^-t1 |w2|).
    g = w1 * x2 - w2 * x1
    v = es * abs(m + g)
    v1 = rem1 * abs(w1)
    if v1 > v:
        v = v1
    v2 = rem2 * abs(w2)
    if v2 > v:
        v = v2
    return v


@njit(cache=True, nogil=True)
def s1_min(x1, x2, r, t1, t2, itercap):
    """Shortest nonzero vector of the flowed lattice in the sup norm.

    Returns (value, p1, p2, q, status); status 1 means the iteration cap
    was hit and the value is only an upper bound.  The canonical witness
    has q >= 0; ties resolve to the first candidate in scan order
    (q ascending, and the nearest-integer p at each q).
    """
    et1 = math.exp(t1)
    et2 = math.exp(t2)
    es = math.exp(t1 + t2)
    iexp = math.exp(-(t1 + t2))
    # q = 0: best integer vector is a unit vector on the slow axis.
    if t1 < t2:
        best = et1
        bp1, bp2, bq = 1, 0, 0
    else:
        best = et2
        bp1, bp2, bq = 0, 1, 0
    q = 1
    iters = 0
    while q <= best * es / r:
        iters += 1
        if iters > itercap:
            return best, bp1, bp2, bq, 1
        y1 = q * x1
        p1 = -int(math.floor(y1 + 0.5))
        y2 = q * x2
        p2 = -int(math.floor(y2 + 0.5))
        v = _vector_norm(p1, p2, q, x1, x2, r, et1, et2, iexp)
        if v < best:
            best = v
            bp1, bp2, bq = p1, p2, q
        q += 1
    return best, bp1, bp2, bq, 0


@njit(cache=True, nogil=True)
def s2_min(x1, x2, r, t1, t2, itercap):
    """Shortest nonzero wedge coefficient triple (m, w1, w2).

    Enumerates w over sup-norm shells in the canonical half-plane
    (w2 > 0, or w2 == 0 and w1 > 0) with m at the nearest integer;
    the w = 0 branch contributes (1, 0, 0).  Returns
    (value, m, w1, w2, status) with the same status/tie conventions
    as s1_min.
    """
    es = math.exp(t1 + t2)
    rem1 = r * math.exp(-t2)
    rem2 = r * math.exp(-t1)
    remt = r * math.exp(-max(t1, t2))
    best = es
    bm, bw1, bw2 = 1, 0, 0
    k = 1
    iters = 0
    while remt * k < best:
        # shell max(|w1|, w2) == k, canonical half-plane: 4k elements
        for idx in range(4 * k):
            if idx <= 2 * k:
                w1 = idx - k
                w2 = k
            elif idx <= 4 * k - 2:
                j = idx - (2 * k + 1)  # 0 .. 2k-3
                w2 = 1 + j // 2
                w1 = k if j % 2 == 0 else -k
            else:
                w1 = k
                w2 = 0
            iters += 1
            if iters > itercap:
                return best, bm, bw1, bw2, 1
            if rem1 * abs(w1) >= best or rem2 * w2 >= best:
                continue
            g = w1 * x2 - w2 * x1
            m = -int(math.floor(g + 0.5))
            v = _wedge_norm(m, w1, w2, x1, x2, es, rem1, rem2)
            if v < best:
                best = v
                bm, bw1, bw2 = m, w1, w2
        k += 1
    return best, bm, bw1, bw2, 0


@njit(cache=True, nogil=True)
def heights_batch(xs1, xs2, r, t1, t2, itercap, out):
    """Height 1/min(s1, s2, r) for a batch of base points; returns #cap-hits."""
    bad = 0
    for i in range(xs1.size):
        v1, _, _, _, st1 = s1_min(xs1[i], xs2[i], r, t1, t2, itercap)
        v2, _, _, _, st2 = s2_min(xs1[i], xs2[i], r, t1, t2, itercap)
        bad += st1 + st2
        m = v1
        if v2 < m:
            m = v2
        if r < m:
            m = r
        out[i] = 1.0 / m
    return bad


# ---------------------------------------------------------------------------
# Counting lattice points of a(t) * Lambda_{x,r} inside constraint sets
# ---------------------------------------------------------------------------


@njit(cache=True, nogil=True)
def siegel_count(
    x1,
    x2,
    r,
    t1,
    t2,
    bx1lo,
    bx1hi,
    bx2lo,
    bx2hi,
    ylo,
    yhi,
    use_product,
    plo,
    phi,
    shell_axis,
    shell_lo,
    shell_hi,
    shell_sign,
):
    """Exact count of nonzero flowed lattice points in a constraint set.

    The set is {(X1, X2, Y)} with X_i in a closed box range, Y in a closed
    range, optionally plo < |X1*X2|*Y <= phi, and optional shell
    constraints lo < v <= hi where v is X_axis, -X_axis or |X_axis|
    (sign +1 / -1 / 0).
    """
    et1 = math.exp(t1)
    et2 = math.exp(t2)
    iexp = math.exp(-(t1 + t2))
    y_of_q = r * iexp
    qlo = int(math.ceil(ylo / y_of_q))
    qhi = int(math.floor(yhi / y_of_q))
    count = 0
    nshell = shell_axis.size
    for q in range(qlo, qhi + 1):
        Y = y_of_q * q
        if Y < ylo or Y > yhi:
            continue
        lo1 = bx1lo / et1 - q * x1
        hi1 = bx1hi / et1 - q * x1
        p1a = int(math.ceil(lo1))
        p1b = int(math.floor(hi1))
        for p1 in range(p1a, p1b + 1):
            X1 = et1 * (p1 + q * x1)
            ok = True
            for si in range(nshell):
                if shell_axis[si] == 0:
                    sgn = shell_sign[si]
                    v = X1 if sgn > 0 else (-X1 if sgn < 0 else abs(X1))
                    if not (shell_lo[si] < v <= shell_hi[si]):
                        ok = False
                        break
            if not ok:
                continue
            lo2 = bx2lo / et2 - q * x2
            hi2 = bx2hi / et2 - q * x2
            p2a = int(math.ceil(lo2))
            p2b = int(math.floor(hi2))
            for p2 in range(p2a, p2b + 1):
                if q == 0 and p1 == 0 and p2 == 0:
                    continue
                X2 = et2 * (p2 + q * x2)
                ok2 = True
                for si in range(nshell):
                    if shell_axis[si] == 1:
                        sgn = shell_sign[si]
                        v = X2 if sgn > 0 else (-X2 if sgn < 0 else abs(X2))
                        if not (shell_lo[si] < v <= shell_hi[si]):
                            ok2 = False
                            break
                if not ok2:
                    continue
                if use_product:
                    pr = abs(X1 * X2) * Y
                    if not (plo < pr <= phi):
                        continue
                count += 1
    return count


@njit(cache=True, nogil=True)
def siegel_count_batch(
    xs1,
    xs2,
    r,
    t1,
    t2,
    bx1lo,
    bx1hi,
    bx2lo,
    bx2hi,
    ylo,
    yhi,
    use_product,
    plo,
    phi,
    shell_axis,
    shell_lo,
    shell_hi,
    shell_sign,
    out,
):
    for i in range(xs1.size):
        out[i] = siegel_count(
            xs1[i],
            xs2[i],
            r,
            t1,
            t2,
            bx1lo,
            bx1hi,
            bx2lo,
            bx2hi,
            ylo,
            yhi,
            use_product,
            plo,
            phi,
            shell_axis,
            shell_lo,
            shell_hi,
            shell_sign,
        )
