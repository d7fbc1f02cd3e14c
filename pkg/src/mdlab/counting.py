"""Exact solution counting and its lattice-point reformulation.

The counters walk q = 1..T with incrementally accumulated fractional
parts of q*x_i; every 2**16 steps the walk is re-anchored from exact
integer arithmetic (float64 values are dyadic rationals, so q*x mod 1
is computable exactly), which keeps drift below 1e-9 over any range.
``q`` itself is an integer throughout, so counts are exact.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

from . import _kernels
from .domains import Omega, ParamSchedule, Point3, Regime, Upsilon, validate_schedule

__all__ = [
    "TargetPoint",
    "CountReport",
    "count_Q",
    "count_L",
    "count_N_widmer",
    "weighted_sum",
    "hits_below",
    "lattice_points_in",
    "DEFAULT_T_CAP",
]

DEFAULT_T_CAP = 10 ** 9
SEGMENT = _kernels.SEGMENT
#: retain q_hits by default only up to this T
HITS_RETAIN_LIMIT = 10 ** 6


@dataclass(frozen=True)
class TargetPoint:
    """A target pair (x1, x2), reduced mod 1 into [0, 1)."""

    x1: float
    x2: float

    def __post_init__(self):
        if not (math.isfinite(self.x1) and math.isfinite(self.x2)):
            raise ValueError("coordinates must be finite")
        object.__setattr__(self, "x1", self.x1 - math.floor(self.x1))
        object.__setattr__(self, "x2", self.x2 - math.floor(self.x2))


@dataclass
class CountReport:
    count: int
    weighted_sum: float
    T: float
    params: Optional[ParamSchedule] = None
    q_hits: Optional[np.ndarray] = None
    elapsed_ns: int = 0

    def __post_init__(self):
        if self.q_hits is not None and len(self.q_hits) != self.count:
            raise ValueError("q_hits length disagrees with count")


def exact_frac(q: int, x: float) -> float:
    """Exact fractional part of q*x for float x in [0, 1), as a float."""
    num, den = x.as_integer_ratio()
    return ((q * num) % den) / den


def _check_T(T: float, cap: float) -> int:
    if T < 1:
        return 0
    if T > cap:
        raise ValueError(f"T={T!r} exceeds the configured cap {cap!r}")
    return int(math.floor(T))


def _run_count(x: TargetPoint, Tint: int, a: float, b: float, c: float, mode: int,
               retain: bool) -> Tuple[int, Optional[np.ndarray]]:
    buf = np.empty(SEGMENT, dtype=np.int64)
    chunks: List[np.ndarray] = []
    count = 0
    q = 1
    while q <= Tint:
        n = min(SEGMENT, Tint - q + 1)
        f1 = exact_frac(q, x.x1)
        f2 = exact_frac(q, x.x2)
        cnt, nh = _kernels.count_segment(q, n, f1, f2, x.x1, x.x2, a, b, c, mode, retain, buf)
        count += cnt
        if retain and nh:
            chunks.append(buf[:nh].copy())
        q += n
    hits = None
    if retain:
        hits = np.concatenate(chunks) if chunks else np.empty(0, dtype=np.int64)
    return count, hits


def count_Q(
    x: TargetPoint,
    s: ParamSchedule,
    retain_hits: Optional[bool] = None,
    cap: float = DEFAULT_T_CAP,
) -> CountReport:
    """Count 1 <= q <= T with a < q*||q x1||*||q x2|| <= b and ||q x_i|| <= c.

    The lower cut is exclusive (a = 0 means "product strictly positive")
    and the upper cut inclusive.
    """
    violations = validate_schedule(s, Regime.BASIC)
    if violations:
        raise ValueError("inadmissible schedule: " + "; ".join(violations))
    Tint = _check_T(s.T, cap)
    retain = (Tint <= HITS_RETAIN_LIMIT) if retain_hits is None else bool(retain_hits)
    t0 = time.perf_counter_ns()
    count, hits = _run_count(x, Tint, s.a, s.b, s.c, _kernels.MODE_Q, retain)
    dt = time.perf_counter_ns() - t0
    return CountReport(count, float(count), s.T, params=s, q_hits=hits, elapsed_ns=dt)


def count_L(
    x: TargetPoint,
    b: float,
    T: float,
    retain_hits: Optional[bool] = None,
    cap: float = DEFAULT_T_CAP,
) -> CountReport:
    """Count 1 <= q <= T with q*||q x1||*||q x2|| <= b (no caps, no lower cut)."""
    if b < 0:
        raise ValueError("b must be nonnegative")
    Tint = _check_T(T, cap)
    retain = (Tint <= HITS_RETAIN_LIMIT) if retain_hits is None else bool(retain_hits)
    t0 = time.perf_counter_ns()
    count, hits = _run_count(x, Tint, 0.0, b, 0.0, _kernels.MODE_L, retain)
    dt = time.perf_counter_ns() - t0
    return CountReport(count, float(count), T, q_hits=hits, elapsed_ns=dt)


def count_N_widmer(
    x: TargetPoint,
    b: float,
    T: float,
    retain_hits: Optional[bool] = None,
    cap: float = DEFAULT_T_CAP,
) -> CountReport:
    """Count 1 <= q <= T with ||q x1||*||q x2|| <= b."""
    if b < 0:
        raise ValueError("b must be nonnegative")
    Tint = _check_T(T, cap)
    retain = (Tint <= HITS_RETAIN_LIMIT) if retain_hits is None else bool(retain_hits)
    t0 = time.perf_counter_ns()
    count, hits = _run_count(x, Tint, 0.0, b, 0.0, _kernels.MODE_N, retain)
    dt = time.perf_counter_ns() - t0
    return CountReport(count, float(count), T, q_hits=hits, elapsed_ns=dt)


def weighted_sum(
    x: TargetPoint,
    s: ParamSchedule,
    h: Callable[[np.ndarray], np.ndarray],
    cap: float = DEFAULT_T_CAP,
) -> CountReport:
    """Sum h(q/T) over the hits of count_Q; with h == 1 this equals the count.

    h must be bounded on [0, 1]; it is applied to hit blocks in ascending-q
    order, so the accumulation order is deterministic.
    """
    violations = validate_schedule(s, Regime.BASIC)
    if violations:
        raise ValueError("inadmissible schedule: " + "; ".join(violations))
    Tint = _check_T(s.T, cap)
    h_vec = h if isinstance(h, np.vectorize) else np.vectorize(h, otypes=[np.float64])
    buf = np.empty(SEGMENT, dtype=np.int64)
    t0 = time.perf_counter_ns()
    count = 0
    wsum = 0.0
    all_hits: List[np.ndarray] = []
    retain = Tint <= HITS_RETAIN_LIMIT
    q = 1
    while q <= Tint:
        n = min(SEGMENT, Tint - q + 1)
        f1 = exact_frac(q, x.x1)
        f2 = exact_frac(q, x.x2)
        cnt, nh = _kernels.count_segment(
            q, n, f1, f2, x.x1, x.x2, s.a, s.b, s.c, _kernels.MODE_Q, True, buf
        )
        count += cnt
        if nh:
            vals = np.asarray(h_vec(buf[:nh] / s.T), dtype=np.float64)
            if not np.all(np.isfinite(vals)):
                raise ValueError("h takes non-finite values")
            wsum += float(vals.sum())
            if retain:
                all_hits.append(buf[:nh].copy())
        q += n
    dt = time.perf_counter_ns() - t0
    hits = np.concatenate(all_hits) if (retain and all_hits) else (
        np.empty(0, dtype=np.int64) if retain else None
    )
    return CountReport(count, wsum, s.T, params=s, q_hits=hits, elapsed_ns=dt)


def hits_below(
    x: TargetPoint, thr: float, T: float, cap: float = DEFAULT_T_CAP, max_hits: int = 1 << 16
) -> Tuple[np.ndarray, np.ndarray]:
    """All (q, q*||q x1||*||q x2||) with q <= T and product <= thr.

    Experiment building block: one pass yields prefix counts at every
    T' <= T and every threshold <= thr.
    """
    Tint = _check_T(T, cap)
    while True:
        qs = np.empty(max_hits, dtype=np.int64)
        vs = np.empty(max_hits, dtype=np.float64)
        k = 0
        q = 1
        overflow = False
        while q <= Tint:
            n = min(SEGMENT, Tint - q + 1)
            f1 = exact_frac(q, x.x1)
            f2 = exact_frac(q, x.x2)
            k = _kernels.hits_below_segment(q, n, f1, f2, x.x1, x.x2, thr, qs, vs, k)
            if k < 0:
                overflow = True
                break
            q += n
        if not overflow:
            return qs[:k].copy(), vs[:k].copy()
        max_hits *= 4


def lattice_points_in(dset, x: TargetPoint) -> List[Tuple[int, int, int]]:
    """All nonzero points of the lattice {(p + q x, q)} inside the set.

    Supports the hyperbolic strip and thin-strip sets (whose sections lie
    in |u_i| <= 1/2, so integer candidates per coordinate come from an
    interval of width <= 1).  Returns (p1, p2, q) triples sorted by
    (q, p1, p2).  Every candidate is confirmed with the exact membership
    predicate of the set.
    """
    if isinstance(dset, Omega):
        w = dset.params.c
        T = dset.params.T
    elif isinstance(dset, Upsilon):
        w = 0.5
        T = dset.params.T
    else:
        raise TypeError("lattice_points_in expects an Omega or Upsilon set")
    if w > 0.5:
        raise ValueError("coordinate cap exceeds the nearest-integer guarantee")
    Tint = int(math.floor(T))
    if Tint < 1:
        return []

    pts: List[Tuple[int, int, int]] = []
    chunk = 1 << 18
    for q0 in range(1, Tint + 1, chunk):
        q = np.arange(q0, min(q0 + chunk, Tint + 1), dtype=np.int64)
        y1 = q * x.x1
        y2 = q * x.x2
        r1 = np.floor(y1 + 0.5)
        r2 = np.floor(y2 + 0.5)
        u1 = y1 - r1
        u2 = y2 - r2
        cand = (np.abs(u1) <= w) & (np.abs(u2) <= w)
        if isinstance(dset, Omega):
            prod = q * np.abs(u1 * u2)
            cand &= (prod > dset.params.a) & (prod <= dset.params.b)
        else:
            prod = q * np.abs(u1 * u2)
            cand &= prod <= dset.params.a
        idx = np.nonzero(cand)[0]
        for i in idx:
            qi = int(q[i])
            p1 = -int(r1[i])
            p2 = -int(r2[i])
            if dset.contains(Point3(p1 + qi * x.x1, p2 + qi * x.x2, float(qi))):
                pts.append((p1, p2, qi))
        # width-1/2 sections admit a second integer exactly at |u| = 1/2
        if w == 0.5:
            for i in np.nonzero(cand & ((np.abs(u1) == 0.5) | (np.abs(u2) == 0.5)))[0]:
                qi = int(q[i])
                base1 = -int(r1[i])
                base2 = -int(r2[i])
                for d1 in (0, 1, -1):
                    for d2 in (0, 1, -1):
                        if d1 == 0 and d2 == 0:
                            continue
                        p1, p2 = base1 + d1, base2 + d2
                        if dset.contains(Point3(p1 + qi * x.x1, p2 + qi * x.x2, float(qi))):
                            pts.append((p1, p2, qi))
    return sorted(set(pts), key=lambda t: (t[2], t[0], t[1]))
