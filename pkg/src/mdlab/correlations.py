"""Shifted-lattice counting in rectangle unions and exact correlation sums.

The second moment of the counting function N_B(x) = |(Z^2 + x) ∩ B| along
two frequencies q1, q2 reduces, for coprime frequencies, to a finite sum
over k in Z^2 ∩ (q2 B1 - q1 B2) of exactly computable rectangle
intersection areas:

    ∫ N_{B1}(q1 x) N_{B2}(q2 x) dx = Σ_k (q1 q2)^-2 vol((q2 B1 - k) ∩ q1 B2).

On top of that sit the comparison kernels G and F_t and the double sum
Σ F_t(max(q1,q2)/gcd(q1,q2)) over a frequency window, evaluated exactly by
grouping pairs by gcd and counting coprime partners with a Möbius sieve.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import List, Sequence, Tuple

import numpy as np

from .domains import FlowTime

__all__ = [
    "Rect",
    "BoxSet2",
    "count_shifted",
    "correlation_exact",
    "correlation_quadrature",
    "correlation_bound_check",
    "aux_G",
    "aux_Ft",
    "aux_Ft_explicit",
    "lattice_count_box",
    "double_sum",
    "double_sum_naive",
    "DoubleSumResult",
    "sum_range",
]

Rect = Tuple[Tuple[float, float], Tuple[float, float]]  # ((xlo, xhi), (ylo, yhi))


@dataclass(frozen=True)
class BoxSet2:
    """A finite union of closed axis-aligned rectangles with disjoint interiors."""

    rects: Tuple[Rect, ...]

    def __init__(self, rects: Sequence[Rect]):
        rs = tuple(((float(x0), float(x1)), (float(y0), float(y1))) for (x0, x1), (y0, y1) in rects)
        for (x0, x1), (y0, y1) in rs:
            if not (x0 <= x1 and y0 <= y1) or not all(
                math.isfinite(v) for v in (x0, x1, y0, y1)
            ):
                raise ValueError(f"bad rectangle {((x0, x1), (y0, y1))}")
        for i in range(len(rs)):
            for j in range(i + 1, len(rs)):
                if _overlap_1d(rs[i][0], rs[j][0]) > 0 and _overlap_1d(rs[i][1], rs[j][1]) > 0:
                    raise ValueError("rectangles must have disjoint interiors")
        object.__setattr__(self, "rects", rs)

    @property
    def area(self) -> float:
        return sum((x1 - x0) * (y1 - y0) for (x0, x1), (y0, y1) in self.rects)

    def scaled(self, q: float) -> "BoxSet2":
        if q <= 0:
            raise ValueError("scale must be positive")
        return BoxSet2([((q * x0, q * x1), (q * y0, q * y1)) for (x0, x1), (y0, y1) in self.rects])

    def scaled_axes(self, sx: float, sy: float) -> "BoxSet2":
        return BoxSet2(
            [((sx * x0, sx * x1), (sy * y0, sy * y1)) for (x0, x1), (y0, y1) in self.rects]
        )

    def bounds(self) -> Rect:
        xs = [r[0] for r in self.rects]
        ys = [r[1] for r in self.rects]
        return (
            (min(x[0] for x in xs), max(x[1] for x in xs)),
            (min(y[0] for y in ys), max(y[1] for y in ys)),
        )

    def within(self, M: float) -> bool:
        (x0, x1), (y0, y1) = self.bounds()
        return -M <= x0 and x1 <= M and -M <= y0 and y1 <= M


def _overlap_1d(a: Tuple[float, float], b: Tuple[float, float]) -> float:
    return max(0.0, min(a[1], b[1]) - max(a[0], b[0]))


def count_shifted(B: BoxSet2, x: Tuple[float, float]) -> int:
    """|(Z^2 + x) ∩ B| by per-rectangle integer-range arithmetic."""
    x1, x2 = x
    total = 0
    for (xlo, xhi), (ylo, yhi) in B.rects:
        nx = math.floor(xhi - x1) - math.ceil(xlo - x1) + 1
        ny = math.floor(yhi - x2) - math.ceil(ylo - x2) + 1
        if nx > 0 and ny > 0:
            total += nx * ny
    return total


def correlation_exact(B1: BoxSet2, B2: BoxSet2, q1: int, q2: int) -> float:
    """∫_{[0,1)^2} N_{B1}(q1 x) N_{B2}(q2 x) dx for coprime q1, q2, exactly.

    The integer shift sum is separable per rectangle pair, so the value is
    a finite sum of products of clamped interval overlaps.
    """
    if q1 < 1 or q2 < 1:
        raise ValueError("q1, q2 must be positive integers")
    if math.gcd(q1, q2) != 1:
        raise ValueError("q1 and q2 must be coprime (divide by the gcd first)")
    total = 0.0
    for r in B1.rects:
        rx = (q2 * r[0][0], q2 * r[0][1])
        ry = (q2 * r[1][0], q2 * r[1][1])
        for s in B2.rects:
            sx = (q1 * s[0][0], q1 * s[0][1])
            sy = (q1 * s[1][0], q1 * s[1][1])
            total += _axis_shift_sum(rx, sx) * _axis_shift_sum(ry, sy)
    return total / (q1 * q2) ** 2


def _axis_shift_sum(r: Tuple[float, float], s: Tuple[float, float]) -> float:
    # sum over integers k of |(r - k) ∩ s|
    klo = math.ceil(r[0] - s[1])
    khi = math.floor(r[1] - s[0])
    if khi < klo:
        return 0.0
    k = np.arange(klo, khi + 1, dtype=np.float64)
    return float(
        np.sum(np.maximum(0.0, np.minimum(r[1] - k, s[1]) - np.maximum(r[0] - k, s[0])))
    )


def correlation_quadrature(B1: BoxSet2, B2: BoxSet2, q1: int, q2: int, nodes: int = 2048) -> float:
    """Midpoint-rule oracle for the correlation integral on a nodes^2 grid."""
    u = (np.arange(nodes, dtype=np.float64) + 0.5) / nodes

    def grid_counts(B: BoxSet2, q: int) -> np.ndarray:
        v = q * u
        total = np.zeros((nodes, nodes), dtype=np.float64)
        for (xlo, xhi), (ylo, yhi) in B.rects:
            nx = np.floor(xhi - v) - np.ceil(xlo - v) + 1.0
            ny = np.floor(yhi - v) - np.ceil(ylo - v) + 1.0
            np.maximum(nx, 0.0, out=nx)
            np.maximum(ny, 0.0, out=ny)
            total += np.outer(nx, ny)
        return total

    return float(np.mean(grid_counts(B1, q1) * grid_counts(B2, q2)))


# ---------------------------------------------------------------------------
# Comparison kernels
# ---------------------------------------------------------------------------


def lattice_count_box(u1: float, u2: float) -> int:
    """N(u) = |Z^2 ∩ [-u1,u1] x [-u2,u2]|."""
    if u1 < 0 or u2 < 0:
        raise ValueError("u must be nonnegative")
    return (2 * math.floor(u1) + 1) * (2 * math.floor(u2) + 1)


def aux_G(u1: float, u2: float) -> float:
    """Piecewise comparison kernel: 1, max-component, or product.

    1 when both components are < 1; max(u1, u2) when exactly the smaller
    is < 1; u1*u2 when both are >= 1.
    """
    if not (u1 > 0 and u2 > 0):
        raise ValueError("u must be positive")
    lo, hi = min(u1, u2), max(u1, u2)
    if hi < 1.0:
        return 1.0
    if lo < 1.0:
        return hi
    return u1 * u2


def aux_Ft(t: FlowTime, q: float, M: float) -> float:
    """F_t(q) = G(2Mq e^-t1, 2Mq e^-t2)/q^2 * e^-(t1+t2)."""
    if q < 1:
        raise ValueError("q must be >= 1")
    return (
        aux_G(2.0 * M * q * math.exp(-t.t1), 2.0 * M * q * math.exp(-t.t2))
        / q ** 2
        * math.exp(-t.total)
    )


def aux_Ft_explicit(t: FlowTime, q: float, M: float) -> float:
    """Branchwise form of F_t; must agree with aux_Ft on every branch."""
    if q < 1:
        raise ValueError("q must be >= 1")
    tf, tc = t.floor, t.ceil
    if q < math.exp(tf) / (2.0 * M):
        return math.exp(-t.total) / q ** 2
    if q < math.exp(tc) / (2.0 * M):
        return 2.0 * M * math.exp(-(2.0 * tf + tc)) / q
    return 4.0 * M ** 2 * math.exp(-2.0 * t.total)


def correlation_bound_check(
    D1: BoxSet2, D2: BoxSet2, t: FlowTime, q1: int, q2: int, M: float
) -> Tuple[float, float]:
    """(lhs, rhs) of the correlation bound for sets scaled by the flow.

    lhs = ∫ N_{D1_t}(q1 x) N_{D2_t}(q2 x) dx with D_t = diag(e^-t1, e^-t2) D,
    computed exactly after gcd reduction (integer scaling of the torus
    preserves the measure); rhs = F_t(max/gcd) * max(vol D1, vol D2).
    Requires t1 <= t2 and D_i within [-M, M]^2.
    """
    if t.t1 > t.t2:
        raise ValueError("this check is stated for t1 <= t2")
    if not (D1.within(M) and D2.within(M)):
        raise ValueError("sets must lie inside [-M, M]^2")
    s = math.gcd(q1, q2)
    q1r, q2r = q1 // s, q2 // s
    sx, sy = math.exp(-t.t1), math.exp(-t.t2)
    lhs = correlation_exact(D1.scaled_axes(sx, sy), D2.scaled_axes(sx, sy), q1r, q2r)
    rhs = aux_Ft(t, max(q1, q2) / s, M) * max(D1.area, D2.area)
    return lhs, rhs


# ---------------------------------------------------------------------------
# The auxiliary double sum, grouped exactly by gcd
# ---------------------------------------------------------------------------


def sum_range(gamma: float, delta: float) -> Tuple[int, int]:
    """Integer endpoints of a sum with fractional limits rounded inward."""
    return math.ceil(gamma), math.floor(delta)


@lru_cache(maxsize=8)
def _mobius_tables(n_max: int):
    """CSR table of squarefree divisors with Möbius signs, and Euler phi."""
    spf = np.arange(n_max + 1, dtype=np.int64)
    for i in range(2, int(math.isqrt(n_max)) + 1):
        if spf[i] == i:
            sl = spf[i * i :: i]
            np.minimum(sl, i, out=sl)
    phi = np.arange(n_max + 1, dtype=np.int64)
    divs: List[List[int]] = [[] for _ in range(n_max + 1)]
    mus: List[List[int]] = [[] for _ in range(n_max + 1)]
    divs[1] = [1]
    mus[1] = [1]
    primes_of = [[] for _ in range(n_max + 1)]
    for m in range(2, n_max + 1):
        mm = m
        ps = []
        while mm > 1:
            p = int(spf[mm])
            ps.append(p)
            while mm % p == 0:
                mm //= p
        primes_of[m] = ps
        d = [1]
        mu = [1]
        ph = m
        for p in ps:
            d += [x * p for x in d]
            mu += [-x for x in mu]
            ph = ph // p * (p - 1)
        divs[m] = d
        mus[m] = mu
        phi[m] = ph
    offsets = np.zeros(n_max + 2, dtype=np.int64)
    for m in range(1, n_max + 1):
        offsets[m + 1] = offsets[m] + len(divs[m])
    flat_d = np.empty(offsets[-1], dtype=np.int64)
    flat_mu = np.empty(offsets[-1], dtype=np.int64)
    for m in range(1, n_max + 1):
        flat_d[offsets[m] : offsets[m + 1]] = divs[m]
        flat_mu[offsets[m] : offsets[m + 1]] = mus[m]
    return offsets, flat_d, flat_mu, phi


def _coprime_counts_upto(ms: np.ndarray, L: int, tables) -> np.ndarray:
    """#{k in [1, L] : gcd(k, m) = 1} for each m in the contiguous array ms."""
    offsets, flat_d, flat_mu, _ = tables
    if L <= 0:
        return np.zeros(ms.size, dtype=np.int64)
    lo, hi = int(ms[0]), int(ms[-1])
    sl = slice(offsets[lo], offsets[hi + 1])
    contrib = flat_mu[sl] * (L // flat_d[sl])
    cuts = offsets[lo : hi + 2] - offsets[lo]
    sums = np.add.reduceat(contrib, cuts[:-1])
    return sums


@dataclass
class DoubleSumResult:
    value: float
    bound: float
    ratio: float
    n_terms: int
    q_range: Tuple[int, int]


def double_sum(
    t: FlowTime, alpha: float, beta: float, M: float, cap: float = 1e5
) -> DoubleSumResult:
    """Σ over q1, q2 in [alpha_t, beta_t] of F_t(max/gcd), with its bound.

    Hypotheses: 0 < alpha < beta <= M, alpha < 1, alpha_t >= 1, and
    beta_t <= cap.  Pairs are grouped by d = gcd and m = max/gcd; the
    number of ordered coprime pairs in [lo, hi]^2 with max = m is
    2*(phi-count) - [m == 1], evaluated by a Möbius sieve, so the grouped
    evaluation is exact term regrouping of the double loop.
    """
    if not (0 < alpha < beta <= M):
        raise ValueError("need 0 < alpha < beta <= M")
    if not alpha < 1:
        raise ValueError("need alpha < 1")
    es = math.exp(t.total)
    alpha_t, beta_t = alpha * es, beta * es
    if alpha_t < 1:
        raise ValueError("need alpha * e^(t1+t2) >= 1")
    if beta_t > cap:
        raise ValueError(f"beta_t = {beta_t} exceeds the cap {cap}")
    Qlo, Qhi = sum_range(alpha_t, beta_t)
    bound = math.exp(-t.total) + (beta - alpha) * max(1.0, math.log(beta / alpha)) * max(
        1.0, t.total
    )
    if Qhi < Qlo:
        return DoubleSumResult(0.0, bound, 0.0, 0, (Qlo, Qhi))

    # bucket the sieve size so sweeps share one cached table
    tables = _mobius_tables(max(1024, 1 << int(Qhi).bit_length()))
    phi = tables[3]
    tf, tc = t.floor, t.ceil
    thr1 = math.exp(tf) / (2.0 * M)
    thr2 = math.exp(tc) / (2.0 * M)
    c_low = math.exp(-t.total)
    c_mid = 2.0 * M * math.exp(-(2.0 * tf + tc))
    c_high = 4.0 * M ** 2 * math.exp(-2.0 * t.total)

    value = 0.0
    for d in range(1, Qhi + 1):
        lo = (Qlo + d - 1) // d
        hi = Qhi // d
        if hi < max(lo, 1):
            continue
        lo = max(lo, 1)
        ms = np.arange(lo, hi + 1, dtype=np.int64)
        below = _coprime_counts_upto(ms, lo - 1, tables)
        counts = 2 * (phi[lo : hi + 1] - below)
        if lo == 1:
            counts[0] -= 1  # (d, d) diagonal counted once
        mf = ms.astype(np.float64)
        F = np.where(
            mf < thr1,
            c_low / np.square(mf),
            np.where(mf < thr2, c_mid / mf, c_high),
        )
        value += float(np.dot(F, counts.astype(np.float64)))

    n_terms = (Qhi - Qlo + 1) ** 2
    return DoubleSumResult(value, bound, value / bound, n_terms, (Qlo, Qhi))


def double_sum_naive(t: FlowTime, alpha: float, beta: float, M: float, cap: float = 4000.0):
    """Direct double loop (oracle for the grouped evaluation)."""
    es = math.exp(t.total)
    Qlo, Qhi = sum_range(alpha * es, beta * es)
    if Qhi > cap:
        raise ValueError("range too large for the naive oracle")
    if Qhi < Qlo:
        return 0.0
    qs = np.arange(Qlo, Qhi + 1, dtype=np.int64)
    Q1, Q2 = np.meshgrid(qs, qs, indexing="ij")
    m = (np.maximum(Q1, Q2) // np.gcd(Q1, Q2)).astype(np.float64)
    tf, tc = t.floor, t.ceil
    thr1 = math.exp(tf) / (2.0 * M)
    thr2 = math.exp(tc) / (2.0 * M)
    F = np.where(
        m < thr1,
        math.exp(-t.total) / np.square(m),
        np.where(m < thr2, 2.0 * M * math.exp(-(2.0 * tf + tc)) / m, 4.0 * M ** 2 * math.exp(-2.0 * t.total)),
    )
    return float(np.sum(F))
