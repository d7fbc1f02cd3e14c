"""Decomposition of the hyperbolic strip into flow-translated shell tiles.

A point of the strip has unique shell indices n_i with
c*e^-(n_i+1) < |x_i| <= c*e^-n_i; flowing by a(n) moves it into the
top-shell tile whose y-range is [e^-(n1+n2), T*e^-(n1+n2)].  The index
band alpha <= n1+n2 < beta with alpha = ln(c^2/(b*e^2)),
beta = ln(T*c^2/a) captures every nonempty tile.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np

from .domains import DeltaTn, FlowTime, Omega, ParamSchedule, Point3, apply_flow
from .mc import map_blocks

__all__ = [
    "TileIndex",
    "band_endpoints",
    "index_set",
    "decompose",
    "decompose_batch",
    "verify_partition",
    "PartitionReport",
    "TessellationError",
]

TileIndex = Tuple[int, int]


class TessellationError(AssertionError):
    """A partition property failed; carries the witness point."""


def band_endpoints(s: ParamSchedule) -> Tuple[float, float]:
    """(alpha, beta) = (ln(c^2/(b e^2)), ln(T c^2 / a)); requires a > 0."""
    if s.a <= 0:
        raise ValueError("the index band is unbounded for a = 0")
    alpha = math.log(s.c ** 2 / (s.b * math.e ** 2))
    beta = math.log(s.T * s.c ** 2 / s.a)
    return alpha, beta


def index_set(s: ParamSchedule) -> List[TileIndex]:
    """All n in N_0^2 with alpha <= n1 + n2 < beta, sorted."""
    alpha, beta = band_endpoints(s)
    lo = max(0, math.ceil(alpha))
    hi = math.ceil(beta) - 1  # largest integer strictly below beta
    out: List[TileIndex] = []
    for ssum in range(lo, hi + 1):
        for n1 in range(ssum + 1):
            out.append((n1, ssum - n1))
    return out


def _shell_index(v: float, c: float) -> int:
    # largest n with |v| <= c e^-n, i.e. floor(ln(c/|v|)) nudged inclusive
    n = int(math.floor(math.log(c / v) + 1e-12))
    if n < 0:
        n = 0
    # correct the float-fragile floor against the defining inequalities
    while v > c * math.exp(-n):
        n -= 1
    while n + 1 <= 10 ** 6 and v <= c * math.exp(-(n + 1)):
        n += 1
    return n


def decompose(p: Point3, s: ParamSchedule) -> Optional[TileIndex]:
    """Shell index of p in the strip, or None if p is outside it.

    Postcondition (verified by the partition checker): flowing p by the
    returned index lands in the corresponding top-shell tile.
    """
    if not Omega(s).contains(p):
        return None
    n1 = _shell_index(abs(p.x1), s.c)
    n2 = _shell_index(abs(p.x2), s.c)
    return (n1, n2)


def decompose_batch(x1: np.ndarray, x2: np.ndarray, s: ParamSchedule):
    """Vectorized shell indices for points already known to lie in the strip."""
    c = s.c
    n1 = np.floor(np.log(c / np.abs(x1)) + 1e-12).astype(np.int64)
    n2 = np.floor(np.log(c / np.abs(x2)) + 1e-12).astype(np.int64)
    n1 = np.maximum(n1, 0)
    n2 = np.maximum(n2, 0)
    for n, v in ((n1, np.abs(x1)), (n2, np.abs(x2))):
        # shift down while above the shell top, up while below the shell bottom
        over = v > c * np.exp(-n.astype(np.float64))
        n[over] -= 1
        under = v <= c * np.exp(-(n.astype(np.float64) + 1.0))
        n[under] += 1
    return n1, n2


@dataclass
class PartitionReport:
    n_sampled: int
    n_in_strip: int
    n_checked_other_tiles: int
    tile_count: int
    band: Tuple[float, float]
    violations: List[dict] = field(default_factory=list)
    tiles_probed: int = 0
    tile_inclusion_hits: int = 0
    margin_indices_probed: int = 0

    @property
    def ok(self) -> bool:
        return not self.violations


def verify_partition(
    s: ParamSchedule,
    samples: int,
    seed: int,
    threads: int = 1,
    other_tiles: int = 8,
    raise_on_violation: bool = True,
    min_strip_points: Optional[int] = None,
) -> PartitionReport:
    """Sample the strip and check the tile-partition properties.

    Draws ``samples`` uniform bounding-box points and filters to the
    strip; when ``min_strip_points`` is set, keeps drawing further
    deterministic batches until that many strip points were checked.
    For each strip point: its shell index exists, lies in the index band,
    flowing by it lands in its tile, and flowing by other band indices
    does not (disjointness spot-check).  Additionally each nonempty tile
    is rejection-sampled and checked against the inclusion box
    [-c,c]^2 x (a/c^2, b e^2/c^2], and indices just outside the band are
    confirmed empty by rejection sampling.
    """
    omega = Omega(s)
    tiles = index_set(s)
    alpha, beta = band_endpoints(s)
    tile_arr = np.asarray(tiles, dtype=np.int64)
    report = PartitionReport(
        n_sampled=samples,
        n_in_strip=0,
        n_checked_other_tiles=0,
        tile_count=len(tiles),
        band=(alpha, beta),
    )
    c, T = s.c, s.T

    def job(i, rng, size):
        x1 = rng.uniform(-c, c, size=size)
        x2 = rng.uniform(-c, c, size=size)
        y = rng.uniform(1.0, T, size=size)
        keep = omega.contains_arrays(x1, x2, y)
        x1, x2, y = x1[keep], x2[keep], y[keep]
        if x1.size == 0:
            return 0, 0, []
        n1, n2 = decompose_batch(x1, x2, s)
        bad = []
        ssum = n1 + n2
        in_band = (ssum >= alpha) & (ssum < beta)
        scale = np.exp(ssum.astype(np.float64))
        X1 = np.exp(n1.astype(np.float64)) * x1
        X2 = np.exp(n2.astype(np.float64)) * x2
        Y = y / scale
        prod = np.abs(X1 * X2) * Y
        ce = c * math.exp(-1.0)
        member = (
            (prod > s.a)
            & (prod <= s.b)
            & (np.abs(X1) > ce)
            & (np.abs(X1) <= c)
            & (np.abs(X2) > ce)
            & (np.abs(X2) <= c)
            & (Y >= np.exp(-ssum.astype(np.float64)))
            & (Y <= T * np.exp(-ssum.astype(np.float64)))
        )
        for bad_i in np.nonzero(~(in_band & member))[0]:
            bad.append(
                {
                    "point": (float(x1[bad_i]), float(x2[bad_i]), float(y[bad_i])),
                    "index": (int(n1[bad_i]), int(n2[bad_i])),
                    "reason": "band" if not in_band[bad_i] else "tile-membership",
                }
            )
        # disjointness spot-check against `other_tiles` random other indices
        checked = 0
        if len(tiles) > 1:
            for k in range(other_tiles):
                pick = tile_arr[rng.integers(0, len(tile_arr), size=x1.size)]
                m1 = pick[:, 0].astype(np.float64)
                m2 = pick[:, 1].astype(np.float64)
                same = (pick[:, 0] == n1) & (pick[:, 1] == n2)
                Xm1 = np.exp(m1) * x1
                Xm2 = np.exp(m2) * x2
                Ym = y * np.exp(-(m1 + m2))
                prodm = np.abs(Xm1 * Xm2) * Ym
                memberm = (
                    (prodm > s.a)
                    & (prodm <= s.b)
                    & (np.abs(Xm1) > ce)
                    & (np.abs(Xm1) <= c)
                    & (np.abs(Xm2) > ce)
                    & (np.abs(Xm2) <= c)
                    & (Ym >= np.exp(-(m1 + m2)))
                    & (Ym <= T * np.exp(-(m1 + m2)))
                )
                clash = memberm & ~same
                checked += int(np.sum(~same))
                for bad_i in np.nonzero(clash)[0]:
                    bad.append(
                        {
                            "point": (float(x1[bad_i]), float(x2[bad_i]), float(y[bad_i])),
                            "index": (int(pick[bad_i, 0]), int(pick[bad_i, 1])),
                            "reason": "disjointness",
                        }
                    )
        return int(x1.size), checked, bad

    round_idx = 0
    while True:
        name = "tessellation" if round_idx == 0 else f"tessellation.{round_idx}"
        for n_in, checked, bad in map_blocks(job, samples, seed, name, threads):
            report.n_in_strip += n_in
            report.n_checked_other_tiles += checked
            report.violations.extend(bad)
        report.n_sampled = samples * (round_idx + 1)
        if min_strip_points is None or report.n_in_strip >= min_strip_points:
            break
        round_idx += 1
        if round_idx > 10000:
            raise RuntimeError("strip acceptance rate too low to reach the target")

    # tile-inclusion box check by rejection sampling each band tile
    rng = np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(0x7111,)))
    y_hi_box = s.b * math.e ** 2 / c ** 2
    y_lo_box = s.a / c ** 2
    shell_lo = c * math.exp(-1.0)
    for n in tiles:
        scale = math.exp(-(n[0] + n[1]))
        k = 0
        for _ in range(100):
            xx1 = rng.uniform(shell_lo, c, size=128) * rng.choice((-1.0, 1.0), size=128)
            xx2 = rng.uniform(shell_lo, c, size=128) * rng.choice((-1.0, 1.0), size=128)
            yy = rng.uniform(scale, T * scale, size=128)
            m = DeltaTn(s, n).contains_arrays(xx1, xx2, yy)
            if np.any(m):
                inside = (
                    (np.abs(xx1[m]) <= c)
                    & (np.abs(xx2[m]) <= c)
                    & (yy[m] > y_lo_box)
                    & (yy[m] <= y_hi_box)
                )
                if not np.all(inside):
                    bad_i = int(np.nonzero(~inside)[0][0])
                    report.violations.append(
                        {
                            "point": (
                                float(xx1[m][bad_i]),
                                float(xx2[m][bad_i]),
                                float(yy[m][bad_i]),
                            ),
                            "index": n,
                            "reason": "inclusion-box",
                        }
                    )
                k += int(np.sum(m))
            if k >= 32:
                break
        report.tiles_probed += 1
        report.tile_inclusion_hits += k

    # indices just outside the band must index empty tiles
    margin: List[TileIndex] = []
    hi = math.ceil(beta)
    for ssum in (hi, hi + 1):
        margin.extend((n1, ssum - n1) for n1 in range(0, ssum + 1, max(1, ssum // 8)))
    lo_band = math.ceil(alpha)
    for ssum in range(max(0, lo_band - 3), max(0, lo_band)):
        margin.extend((n1, ssum - n1) for n1 in range(ssum + 1))
    for n in margin:
        scale = math.exp(-(n[0] + n[1]))
        tile = DeltaTn(s, n)
        found = False
        for _ in range(10):
            xx1 = rng.uniform(c * math.exp(-1.0), c, size=1024) * rng.choice((-1.0, 1.0), 1024)
            xx2 = rng.uniform(c * math.exp(-1.0), c, size=1024) * rng.choice((-1.0, 1.0), 1024)
            yy = rng.uniform(scale, T * scale, size=1024)
            if np.any(tile.contains_arrays(xx1, xx2, yy)):
                found = True
                break
        if found:
            report.violations.append({"index": n, "reason": "nonempty-outside-band"})
        report.margin_indices_probed += 1

    if report.violations and raise_on_violation:
        raise TessellationError(f"partition violation: {report.violations[0]}")
    return report
