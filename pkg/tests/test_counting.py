import math

import numpy as np
import pytest

from mdlab import _kernels
from mdlab.counting import (
    TargetPoint,
    count_L,
    count_N_widmer,
    count_Q,
    exact_frac,
    hits_below,
    lattice_points_in,
    weighted_sum,
)
from mdlab.domains import Omega, ParamSchedule, Upsilon

X_REF = TargetPoint(0.41421356, 0.73205081)
S_REF = ParamSchedule(a=0.0, b=0.2, c=0.49, T=10)


def brute_count_Q(x, s):
    hits = []
    for q in range(1, int(s.T) + 1):
        d1 = abs(q * x.x1 - round(q * x.x1))
        d2 = abs(q * x.x2 - round(q * x.x2))
        pr = q * d1 * d2
        if s.a < pr <= s.b and d1 <= s.c and d2 <= s.c:
            hits.append(q)
    return hits


class TestCountQ:
    def test_reference_example(self):
        rep = count_Q(X_REF, S_REF)
        assert rep.count == 6
        assert list(rep.q_hits) == [1, 2, 3, 4, 5, 7]

    def test_zero_target_positive_cut(self):
        s = ParamSchedule(a=0.01, b=0.1, c=0.4, T=1000)
        assert count_Q(TargetPoint(0.0, 0.0), s).count == 0

    def test_half_integer_target(self):
        # ||q/2|| is 0 or 1/2; products are 0 (excluded by a > 0) or
        # q/4 with coordinate 1/2 > c
        s = ParamSchedule(a=0.001, b=0.2, c=0.45, T=500)
        assert count_Q(TargetPoint(0.5, 0.5), s).count == 0

    def test_matches_brute_force(self):
        rng = np.random.default_rng(2)
        for _ in range(10):
            x = TargetPoint(rng.random(), rng.random())
            s = ParamSchedule(
                a=rng.uniform(0, 0.01), b=rng.uniform(0.02, 0.2), c=rng.uniform(0.2, 0.49),
                T=rng.integers(50, 2000),
            )
            rep = count_Q(x, s)
            assert list(rep.q_hits) == brute_count_Q(x, s)

    def test_inadmissible_schedule_rejected(self):
        with pytest.raises(ValueError):
            count_Q(X_REF, ParamSchedule(a=0.3, b=0.2, c=0.4, T=10))

    def test_cap(self):
        with pytest.raises(ValueError):
            count_Q(X_REF, ParamSchedule(a=0.0, b=0.1, c=0.4, T=1e7), cap=1e6)

    def test_hits_length_invariant(self):
        rep = count_Q(X_REF, S_REF, retain_hits=True)
        assert rep.count == len(rep.q_hits)


class TestCountL:
    def test_zero_target_counts_everything(self):
        assert count_L(TargetPoint(0.0, 0.0), 0.1, 1000).count == 1000

    def test_reference(self):
        assert count_L(X_REF, 0.2, 10).count == 6

    def test_large_b_counts_everything(self):
        # product <= q/4 <= T/4 <= b
        for T in (37, 100):
            assert count_L(X_REF, T / 4, T).count == T

    def test_monotone_in_b_and_T(self):
        rng = np.random.default_rng(3)
        x = TargetPoint(rng.random(), rng.random())
        counts_b = [count_L(x, b, 500).count for b in (0.01, 0.05, 0.1, 0.5)]
        assert counts_b == sorted(counts_b)
        counts_T = [count_L(x, 0.05, T).count for T in (100, 500, 2500)]
        assert counts_T == sorted(counts_T)


class TestCountN:
    def test_zero_target(self):
        assert count_N_widmer(TargetPoint(0.0, 0.0), 0.0, 100).count == 100

    def test_quarter_bound_counts_everything(self):
        assert count_N_widmer(X_REF, 0.25, 200).count == 200

    def test_golden_value(self):
        # frozen at the first verified run of the exhaustive loop
        rep = count_N_widmer(X_REF, 0.02, 10)
        assert rep.count == 1
        assert list(rep.q_hits) == [7]


class TestWeightedSum:
    def test_unit_weight_equals_count(self):
        rep = weighted_sum(X_REF, S_REF, lambda u: 1.0)
        assert rep.weighted_sum == rep.count == 6

    def test_zero_weight(self):
        assert weighted_sum(X_REF, S_REF, lambda u: 0.0).weighted_sum == 0.0

    def test_linear_weight(self):
        rep = weighted_sum(X_REF, S_REF, lambda u: u)
        assert rep.weighted_sum == pytest.approx((1 + 2 + 3 + 4 + 5 + 7) / 10, rel=1e-15)

    def test_nonfinite_weight_rejected(self):
        with pytest.raises(ValueError):
            weighted_sum(X_REF, S_REF, lambda u: float("inf"))


class TestEmulatedNoCap:
    def test_count_Q_equals_count_L_when_caps_never_bind(self):
        # c just under 1/2 and b < c^2: every solution of the product
        # inequality automatically has ||q x_i|| <= c, and a = 0 drops the
        # lower cut for irrational-like targets
        rng = np.random.default_rng(4)
        c = 0.4999999
        b = 0.2
        for _ in range(5):
            x = TargetPoint(rng.random(), rng.random())
            s = ParamSchedule(a=0.0, b=b, c=c, T=3000)
            assert count_Q(x, s).count == count_L(x, b, 3000).count


class TestIncrementalAccuracy:
    def test_drift_against_direct_fmod(self):
        x = 0.7320508075688772
        worst = 0.0
        out = np.empty(_kernels.SEGMENT, dtype=np.float64)
        q = 1
        while q <= 10 ** 6:
            n = min(_kernels.SEGMENT, 10 ** 6 - q + 1)
            _kernels.frac_walk_segment(q, n, exact_frac(q, x), x, out)
            qs = np.arange(q, q + n, dtype=np.float64)
            direct = np.mod(qs * x, 1.0)
            diff = np.abs(out[:n] - direct)
            diff = np.minimum(diff, 1.0 - diff)  # circular distance
            worst = max(worst, float(diff.max()))
            q += n
        assert worst < 1e-9

    def test_exact_frac_matches_integer_arithmetic(self):
        x = 0.41421356237309515
        num, den = x.as_integer_ratio()
        for q in (1, 17, 2 ** 16, 10 ** 9):
            assert exact_frac(q, x) == ((q * num) % den) / den


class TestLatticePoints:
    def test_bijection_reference(self):
        pts = lattice_points_in(Omega(S_REF), X_REF)
        assert len(pts) == 6
        assert [p[2] for p in pts] == [1, 2, 3, 4, 5, 7]

    def test_bijection_random(self):
        rng = np.random.default_rng(6)
        for _ in range(10):
            x = TargetPoint(rng.random(), rng.random())
            s = ParamSchedule(
                a=rng.uniform(0, 0.005), b=rng.uniform(0.01, 0.15),
                c=rng.uniform(0.2, 0.499), T=rng.integers(100, 3000),
            )
            assert len(lattice_points_in(Omega(s), x)) == count_Q(x, s).count

    def test_upsilon_zero_cut_irrational(self):
        s = ParamSchedule(a=0.0, b=0.1, c=0.4, T=100)
        assert lattice_points_in(Upsilon(s), TargetPoint(2 ** 0.5 - 1, 3 ** 0.5 - 1)) == []

    def test_upsilon_integer_target(self):
        s = ParamSchedule(a=0.0, b=0.1, c=0.4, T=10)
        pts = lattice_points_in(Upsilon(s), TargetPoint(0.0, 0.0))
        assert [p[2] for p in pts] == list(range(1, 11))

    def test_omega_zero_target_empty(self):
        s = ParamSchedule(a=0.01, b=0.1, c=0.4, T=100)
        assert lattice_points_in(Omega(s), TargetPoint(0.0, 0.0)) == []

    def test_points_satisfy_membership(self):
        from mdlab.domains import Point3, contains

        x = TargetPoint(0.30277563773199456, 0.8392867552141612)
        s = ParamSchedule(a=0.002, b=0.08, c=0.45, T=800)
        for p1, p2, q in lattice_points_in(Omega(s), x):
            assert contains(Omega(s), Point3(p1 + q * x.x1, p2 + q * x.x2, q))


def test_hits_below_prefix_counts():
    x = TargetPoint(0.5477225575051661, 0.31622776601683794)
    qs, vs = hits_below(x, 0.05, 20000)
    for T in (100, 2000, 20000):
        expect = count_L(x, 0.05, T).count
        assert int(np.sum(qs <= T)) == expect
    # tighter threshold from the same pass
    for thr in (0.01, 0.03):
        assert int(np.sum(vs <= thr)) == count_L(x, thr, 20000).count


def test_target_point_reduction():
    t = TargetPoint(1.75, -0.25)
    assert t.x1 == 0.75 and t.x2 == 0.75
