"""Sub-quadratic moment weight, dyadic interval covers, l1-annuli, and the
moment-to-almost-sure pipeline on finite synthetic families.

The weight theta_kappa(t) = t^2 / (ln(e + |t|))^(1+kappa) is convex,
even, increasing on [0, inf), dominated by t^2, and satisfies
theta(c t) <= c^2 theta(t) for c >= 1.  Those four properties are all the
pipeline uses: partial sums over dyadic index blocks control every prefix
sum through the binary-decomposition cover [0, N) = ⊔ I_{i,j}, and a
Chebyshev bound on the block-sum moments controls the measure of the
exceptional sets.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np

__all__ = [
    "theta",
    "theta_inverse",
    "dyadic_index_set",
    "dyadic_interval",
    "DyadicCover",
    "dyadic_cover",
    "annulus",
    "annulus_count",
    "SyntheticFamily",
    "make_synthetic_family",
    "MomentPipelineReport",
    "moment_pipeline",
]


def theta(kappa: float, t) -> "float | np.ndarray":
    """t^2 / (ln(e + |t|))^(1+kappa); accepts scalars or arrays."""
    if kappa <= 0:
        raise ValueError("kappa must be positive")
    t_arr = np.asarray(t, dtype=np.float64)
    out = np.square(t_arr) / np.log(math.e + np.abs(t_arr)) ** (1.0 + kappa)
    return float(out) if np.isscalar(t) or t_arr.ndim == 0 else out


def theta_inverse(kappa: float, u: float, tol: float = 1e-12) -> float:
    """Smallest t >= 0 with theta(t) >= u, by bisection."""
    if u <= 0:
        return 0.0
    hi = max(1.0, math.sqrt(u))
    while theta(kappa, hi) < u:
        hi *= 2.0
    lo = 0.0
    while hi - lo > tol * max(1.0, hi):
        mid = 0.5 * (lo + hi)
        if theta(kappa, mid) >= u:
            hi = mid
        else:
            lo = mid
    return hi


# ---------------------------------------------------------------------------
# Dyadic intervals
# ---------------------------------------------------------------------------


def dyadic_index_set(s: int) -> List[Tuple[int, int]]:
    """All (i, j) with 2^i (1 + j) < 2^s, i.e. I_{i,j} inside [0, 2^s)."""
    if s < 1:
        raise ValueError("s must be a positive integer")
    out = []
    for i in range(s):
        jmax = (1 << (s - i)) - 1  # j with 2^i (1+j) < 2^s
        for j in range(jmax):
            out.append((i, j))
    return out


def dyadic_interval(i: int, j: int) -> Tuple[int, int]:
    """[2^i j, 2^i (1+j)) as an integer pair."""
    return ((1 << i) * j, (1 << i) * (1 + j))


@dataclass
class DyadicCover:
    s: int
    N: int
    intervals: List[Tuple[int, int]]

    def validate(self) -> None:
        if len(self.intervals) > self.s:
            raise AssertionError(f"cover of {self.N} uses {len(self.intervals)} > s intervals")
        segs = sorted(dyadic_interval(i, j) for i, j in self.intervals)
        pos = 0
        gs = set(dyadic_index_set(self.s))
        for (i, j), (lo, hi) in zip(sorted(self.intervals, key=lambda ij: dyadic_interval(*ij)), segs):
            if (i, j) not in gs:
                raise AssertionError(f"index {(i, j)} outside the dyadic index set")
            if lo != pos:
                raise AssertionError(f"cover of {self.N} has a gap at {pos}")
            pos = hi
        if pos != self.N:
            raise AssertionError(f"cover of {self.N} ends at {pos}")


def dyadic_cover(N: int, s: int) -> DyadicCover:
    """Binary-decomposition cover of [0, N) by at most s dyadic intervals.

    Writing N = sum of decreasing powers 2^{n_1} > ... > 2^{n_p}, the
    partial sums split [0, N) into intervals [N_m, N_{m+1}) each of which
    is dyadic: [N_m, N_{m+1}) = I_{i, j} with i = n_{m+1} and
    j = N_m / 2^i.
    """
    if not (1 <= N < (1 << s)):
        raise ValueError(f"need 1 <= N < 2^s, got N={N}, s={s}")
    bits = [k for k in range(s) if N >> k & 1]  # ascending
    intervals = []
    pos = 0
    for k in reversed(bits):
        i = k
        j = pos >> k  # pos is a multiple of 2^k by construction
        intervals.append((i, j))
        pos += 1 << k
    return DyadicCover(s=s, N=N, intervals=intervals)


# ---------------------------------------------------------------------------
# l1-annuli
# ---------------------------------------------------------------------------


def annulus(alpha: float, beta: float) -> List[Tuple[int, int]]:
    """All (n1, n2) in N_0^2 with alpha <= n1 + n2 < beta (empty if alpha == beta)."""
    if alpha < 0 or beta < alpha:
        raise ValueError("need 0 <= alpha <= beta")
    out = []
    lo = max(0, math.ceil(alpha))
    hi = math.ceil(beta) - 1
    for ssum in range(lo, hi + 1):
        for n1 in range(ssum + 1):
            out.append((n1, ssum - n1))
    return out


def annulus_count(alpha: float, beta: float) -> int:
    """|annulus(alpha, beta)| in closed form: sum of (s+1) over band levels."""
    lo = max(0, math.ceil(alpha))
    hi = math.ceil(beta) - 1
    if hi < lo:
        return 0
    return (hi + 1) * (hi + 2) // 2 - lo * (lo + 1) // 2


# ---------------------------------------------------------------------------
# Moment pipeline on finite synthetic families
# ---------------------------------------------------------------------------


@dataclass
class SyntheticFamily:
    """Level sums A[l, y] = sum over n with n1+n2 = l of psi_n(y).

    The probability space is the uniform measure on ``n_points`` atoms;
    psi vanishes for levels >= beta_T.  Block sums S(alpha, beta) depend
    on the level sums only, which is what the pipeline consumes.
    """

    level_sums: np.ndarray  # shape (beta_T, n_points)
    beta_T: int
    kind: str = "pm1"

    @property
    def n_points(self) -> int:
        return self.level_sums.shape[1]

    def block_sum(self, alpha: int, beta: int) -> np.ndarray:
        """S(alpha, beta)(y) = sum over levels alpha <= l < beta."""
        a = max(0, alpha)
        b = min(self.beta_T, beta)
        if b <= a:
            return np.zeros(self.n_points)
        return self.level_sums[a:b].sum(axis=0)


def make_synthetic_family(
    beta_T: int = 64, n_points: int = 1024, seed: int = 0, kind: str = "pm1"
) -> SyntheticFamily:
    """Seeded families: 'pm1' (independent signs per index pair and atom),
    'zero', or 'concentrated' (one heavy annulus level)."""
    rng = np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(0x5C4D,)))
    levels = np.zeros((beta_T, n_points), dtype=np.float64)
    if kind == "pm1":
        for l in range(beta_T):
            signs = rng.integers(0, 2, size=(l + 1, n_points)) * 2 - 1
            levels[l] = signs.sum(axis=0)
    elif kind == "zero":
        pass
    elif kind == "concentrated":
        l0 = beta_T // 2
        levels[l0] = (l0 + 1) * (rng.integers(0, 2, size=n_points) * 2 - 1)
    else:
        raise ValueError(f"unknown family kind {kind!r}")
    return SyntheticFamily(level_sums=levels, beta_T=beta_T, kind=kind)


@dataclass
class MomentPipelineReport:
    beta_T: int
    kappa: float
    eps: float
    D_T: float
    moment_witness: Tuple[int, int]
    s_values: List[int] = field(default_factory=list)
    exceptional_measure: List[float] = field(default_factory=list)
    measure_bounds_C: List[float] = field(default_factory=list)
    conclusion_failures: int = 0
    p3_failures: int = 0
    witness: Optional[dict] = None

    @property
    def ok(self) -> bool:
        return self.conclusion_failures == 0 and self.p3_failures == 0

    @property
    def fitted_measure_C(self) -> float:
        return max(self.measure_bounds_C) if self.measure_bounds_C else 0.0


def moment_pipeline(
    family: SyntheticFamily, kappa: float = 1.0, eps: float = 0.5, s_max: Optional[int] = None
) -> MomentPipelineReport:
    """Run the dyadic-block argument exactly on a finite family.

    Measures D_T as the largest block-moment ratio
    mean theta(|S(alpha, beta)|) / |annulus(alpha, beta)| over all integer
    blocks, builds the exceptional sets

      Y_s = { y : sum over (i,j) of theta(S(I_{i,j})(y)) >= D_T s^(2+eps) 4^s },

    records their measures (times s^(1+eps), the fitted constants), and
    checks exactly on every complement point and every N < 2^s that

      theta(|S(0, N)(y)|) < D_T s^(3+eps) 4^s,

    together with the inverse-weight form |S| <= 8 sqrt(u) (ln+ u)^((1+kappa)/2)
    at u = D_T s^(3+eps) 4^s.
    """
    bT = family.beta_T
    nY = family.n_points
    prefix = np.vstack(
        [np.zeros(nY), np.cumsum(family.level_sums, axis=0)]
    )  # prefix[b] = S(0, b)

    D_T = 0.0
    witness_block = (0, 1)
    for a in range(bT):
        for b in range(a + 1, bT + 1):
            size = annulus_count(a, b)
            mom = float(np.mean(theta(kappa, np.abs(prefix[b] - prefix[a]))))
            ratio = mom / size
            if ratio > D_T:
                D_T = ratio
                witness_block = (a, b)
    if D_T == 0.0:
        D_T = 1e-300  # identically-zero family; bounds hold trivially

    if s_max is None:
        s_max = max(2, (bT - 1).bit_length())
    report = MomentPipelineReport(
        beta_T=bT, kappa=kappa, eps=eps, D_T=D_T, moment_witness=witness_block
    )
    for s in range(2, s_max + 1):
        gs = dyadic_index_set(s)
        stat = np.zeros(nY)
        for i, j in gs:
            lo, hi = dyadic_interval(i, j)
            stat += theta(kappa, np.abs(prefix[min(hi, bT)] - prefix[min(lo, bT)]))
        threshold = D_T * s ** (2.0 + eps) * 4.0 ** s
        exceptional = stat >= threshold
        measure = float(np.mean(exceptional))
        report.s_values.append(s)
        report.exceptional_measure.append(measure)
        report.measure_bounds_C.append(measure * s ** (1.0 + eps))
        good = ~exceptional
        if not np.any(good):
            continue
        cap = D_T * s ** (3.0 + eps) * 4.0 ** s
        inv_cap = 8.0 * math.sqrt(cap) * math.log(max(math.e, cap)) ** ((1.0 + kappa) / 2.0)
        for N in range(1, min(1 << s, bT + 1)):
            vals = np.abs(prefix[N][good])
            worst = float(vals.max()) if vals.size else 0.0
            if theta(kappa, worst) >= cap:
                report.conclusion_failures += 1
                if report.witness is None:
                    report.witness = {"s": s, "N": N, "value": worst, "cap": cap}
            if worst > inv_cap:
                report.p3_failures += 1
                if report.witness is None:
                    report.witness = {"s": s, "N": N, "value": worst, "inv_cap": inv_cap}
    return report
