"""Successive-minima surrogates s1, s2, s3 and the lattice height function.

For the lattice {p + q(x + r e3)} flowed by a(t), the three minima are

  s1 = min sup-norm of a nonzero lattice vector,
  s2 = min sup-norm of a nonzero wedge of two lattice vectors,
  s3 = r  (the covolume coefficient; exact for this family),

and the height is 1/min(s1, s2, s3).  s1 is found by enumerating q with a
dynamically shrinking bound (the nearest integer p is optimal per
coordinate).  s2 is found by enumerating integer triples (m, w1, w2):
the wedge lattice is the integer span of e1^e2, e1^v3, e2^v3 with
v3 = x + r e3, and in rank 3 every wedge-lattice element is decomposable
as an actual pair wedge, so the triple enumeration is exhaustive.  That
reduction is validated against a pair-based brute-force oracle.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Tuple

import numpy as np

from . import _kernels
from .counting import TargetPoint
from .domains import Box, DeltaTn, FlowTime, Omega, Upsilon

__all__ = [
    "LatticeSpec",
    "WedgeCoeffs",
    "HeightReport",
    "s1",
    "s2",
    "height",
    "heights_on_points",
    "brute_force_minima",
    "siegel_indicator",
    "constraint_tuple",
    "IterationCapError",
]

DEFAULT_ITER_CAP = 10 ** 8


class IterationCapError(RuntimeError):
    """The enumeration exceeded its iteration cap."""


@dataclass(frozen=True)
class LatticeSpec:
    """The lattice {p + q(x + r e3) : p in Z^2, q in Z}."""

    x: TargetPoint
    r: float = 1.0

    def __post_init__(self):
        if not (self.r > 0 and math.isfinite(self.r)):
            raise ValueError(f"r must be positive, got {self.r}")

    @property
    def unimodular(self) -> bool:
        return self.r == 1.0


@dataclass(frozen=True)
class WedgeCoeffs:
    """Integer coordinates of a wedge: m*e1^e2 + w1*e1^v3 + w2*e2^v3."""

    m: int
    w1: int
    w2: int

    def __post_init__(self):
        if self.m == 0 and self.w1 == 0 and self.w2 == 0:
            raise ValueError("zero wedge")


@dataclass
class HeightReport:
    s1: float
    s2: float
    s3: float
    ht: float
    s1_witness: Tuple[int, int, int]  # (p1, p2, q)
    s2_witness: WedgeCoeffs


def s1(spec: LatticeSpec, t: FlowTime, itercap: int = DEFAULT_ITER_CAP):
    """Shortest flowed lattice vector; returns (value, (p1, p2, q))."""
    val, p1, p2, q, status = _kernels.s1_min(
        spec.x.x1, spec.x.x2, spec.r, t.t1, t.t2, itercap
    )
    if status:
        raise IterationCapError(f"s1 enumeration exceeded {itercap} iterations")
    return float(val), (int(p1), int(p2), int(q))


def s2(spec: LatticeSpec, t: FlowTime, itercap: int = DEFAULT_ITER_CAP):
    """Shortest flowed wedge; returns (value, WedgeCoeffs)."""
    val, m, w1, w2, status = _kernels.s2_min(
        spec.x.x1, spec.x.x2, spec.r, t.t1, t.t2, itercap
    )
    if status:
        raise IterationCapError(f"s2 enumeration exceeded {itercap} iterations")
    return float(val), WedgeCoeffs(int(m), int(w1), int(w2))


def height(spec: LatticeSpec, t: FlowTime, itercap: int = DEFAULT_ITER_CAP) -> HeightReport:
    """Assemble s1, s2, s3 = r and the height 1/min.

    Checks the uniform cap ht <= max(e^(t1+t2)/r, e^-min(t1,t2)), which
    holds for every base point in [0,1)^2.
    """
    v1, w1 = s1(spec, t, itercap)
    v2, w2 = s2(spec, t, itercap)
    v3 = spec.r
    ht = 1.0 / min(v1, v2, v3)
    cap = max(math.exp(t.total) / spec.r, math.exp(-t.floor))
    if ht > cap * (1.0 + 1e-12):
        raise AssertionError(
            f"height {ht} exceeds the uniform cap {cap} for {spec}, {t}"
        )
    return HeightReport(v1, v2, v3, ht, w1, w2)


def heights_on_points(
    x1: np.ndarray, x2: np.ndarray, r: float, t: FlowTime, itercap: int = DEFAULT_ITER_CAP
) -> np.ndarray:
    """Vectorized heights over base-point arrays (experiment hot path)."""
    out = np.empty(x1.size, dtype=np.float64)
    bad = _kernels.heights_batch(
        np.ascontiguousarray(x1, dtype=np.float64),
        np.ascontiguousarray(x2, dtype=np.float64),
        float(r),
        t.t1,
        t.t2,
        itercap,
        out,
    )
    if bad:
        raise IterationCapError(f"{bad} height evaluations hit the iteration cap")
    return out


# ---------------------------------------------------------------------------
# Brute-force oracle over bounded coefficient boxes
# ---------------------------------------------------------------------------


def brute_force_minima(spec: LatticeSpec, t: FlowTime, coeff_bound: int = 20):
    """Minima over vectors and vector-pair wedges with |p_i|, |q| <= bound.

    Upper bounds for the true minima; equal to them whenever the true
    witnesses are realizable inside the box.  The pair search is staged:
    per (q1, q2) the two coordinate pairs are filtered independently by
    their wedge component bounds before the joint (m, w) evaluation, so
    no decomposability assumption enters.  Candidate norms are evaluated
    with the same expressions as the fast path, so agreement is exact.
    """
    B = int(coeff_bound)
    if not (1 <= B <= 50):
        raise ValueError("coeff_bound must be in [1, 50]")
    x1, x2, r = spec.x.x1, spec.x.x2, spec.r
    t1, t2 = t.t1, t.t2
    et1, et2 = math.exp(t1), math.exp(t2)
    es = math.exp(t1 + t2)
    iexp = math.exp(-(t1 + t2))
    rem1 = r * math.exp(-t2)
    rem2 = r * math.exp(-t1)
    rng = np.arange(-B, B + 1, dtype=np.int64)

    # s1: all nonzero (p1, p2, q)
    P1, P2, Q = np.meshgrid(rng, rng, rng, indexing="ij")
    P1, P2, Q = P1.ravel(), P2.ravel(), Q.ravel()
    nz = (P1 != 0) | (P2 != 0) | (Q != 0)
    v = r * np.abs(Q) * iexp
    v = np.maximum(v, et1 * np.abs(P1 + Q * x1))
    v = np.maximum(v, et2 * np.abs(P2 + Q * x2))
    s1_val = float(v[nz].min())

    # s2: pairs (v1, v2), staged by coordinate.  The wedge norm is even
    # under flipping either vector and under swapping them, so q1, q2 can
    # be canonicalized to 0 <= q1 <= q2 (the p grids stay two-sided).
    best = es  # wedge of (e1, e2): (m, w) = (1, 0)
    pair_order = sorted(
        ((q1, q2) for q1 in range(B + 1) for q2 in range(q1, B + 1) if q2 > 0),
        key=lambda p: (p[0] + p[1], p),
    )
    for q1, q2 in pair_order:
        # w depends on the per-axis coordinate pair only
        W = q2 * rng[:, None] - q1 * rng[None, :]  # W[i, j] for (coord_v1, coord_v2)
        mask1 = rem1 * np.abs(W) < best
        if not mask1.any():
            continue
        mask2 = rem2 * np.abs(W) < best
        if not mask2.any():
            continue
        i1, j1 = np.nonzero(mask1)
        i2, j2 = np.nonzero(mask2)
        W1 = W[i1, j1].astype(np.float64)
        W2 = W[i2, j2].astype(np.float64)
        A1, B1 = rng[i1].astype(np.float64), rng[j1].astype(np.float64)
        A2, B2 = rng[i2].astype(np.float64), rng[j2].astype(np.float64)
        # chunk the join to bound memory
        chunk = max(1, (1 << 22) // max(1, W2.size))
        for lo in range(0, W1.size, chunk):
            hi = min(lo + chunk, W1.size)
            m = A1[lo:hi, None] * B2[None, :] - A2[None, :] * B1[lo:hi, None]
            g = W1[lo:hi, None] * x2 - W2[None, :] * x1
            vv = es * np.abs(m + g)
            vv = np.maximum(vv, rem1 * np.abs(W1[lo:hi, None]))
            vv = np.maximum(vv, rem2 * np.abs(W2[None, :]))
            degenerate = (m == 0) & (W1[lo:hi, None] == 0) & (W2[None, :] == 0)
            if degenerate.any():
                vv = np.where(degenerate, np.inf, vv)
            mn = float(vv.min())
            if mn < best:
                best = mn
    return s1_val, float(best)


# ---------------------------------------------------------------------------
# Siegel-type counting of flowed lattice points in a bounded set
# ---------------------------------------------------------------------------

_EMPTY_I = np.empty(0, dtype=np.int64)
_EMPTY_F = np.empty(0, dtype=np.float64)


def constraint_tuple(dset):
    """Flatten a domain set into the kernel's constraint parameters."""
    if isinstance(dset, Box):
        return (
            dset.x1_range[0], dset.x1_range[1],
            dset.x2_range[0], dset.x2_range[1],
            dset.y_range[0], dset.y_range[1],
            False, 0.0, 0.0,
            _EMPTY_I, _EMPTY_F, _EMPTY_F, _EMPTY_I,
        )
    if isinstance(dset, Omega):
        s = dset.params
        return (
            -s.c, s.c, -s.c, s.c, 1.0, s.T,
            True, s.a, s.b,
            _EMPTY_I, _EMPTY_F, _EMPTY_F, _EMPTY_I,
        )
    if isinstance(dset, Upsilon):
        s = dset.params
        return (
            -0.5, 0.5, -0.5, 0.5, 1.0, s.T,
            True, -1.0, s.a,
            _EMPTY_I, _EMPTY_F, _EMPTY_F, _EMPTY_I,
        )
    if isinstance(dset, DeltaTn):
        s = dset.params
        scale = math.exp(-(dset.n[0] + dset.n[1]))
        ce = s.c * math.exp(-1.0)
        return (
            -s.c, s.c, -s.c, s.c, scale, s.T * scale,
            True, s.a, s.b,
            np.array([0, 1], dtype=np.int64),
            np.array([ce, ce], dtype=np.float64),
            np.array([s.c, s.c], dtype=np.float64),
            np.array([0, 0], dtype=np.int64),
        )
    if hasattr(dset, "kernel_constraints"):
        return dset.kernel_constraints()
    raise TypeError(f"unsupported set for lattice counting: {type(dset)!r}")


def siegel_indicator(spec: LatticeSpec, t: FlowTime, dset) -> int:
    """Number of nonzero flowed lattice points inside the bounded set."""
    args = constraint_tuple(dset)
    return int(
        _kernels.siegel_count(spec.x.x1, spec.x.x2, spec.r, t.t1, t.t2, *args)
    )


def siegel_indicator_batch(
    x1: np.ndarray, x2: np.ndarray, r: float, t: FlowTime, dset
) -> np.ndarray:
    args = constraint_tuple(dset)
    out = np.empty(x1.size, dtype=np.int64)
    _kernels.siegel_count_batch(
        np.ascontiguousarray(x1, dtype=np.float64),
        np.ascontiguousarray(x2, dtype=np.float64),
        float(r),
        t.t1,
        t.t2,
        *args,
        out,
    )
    return out
