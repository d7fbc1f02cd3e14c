import math

import numpy as np
import pytest

from mdlab.counting import TargetPoint
from mdlab.domains import Box, DeltaTn, FlowTime, Omega, ParamSchedule
from mdlab.heights import (
    IterationCapError,
    LatticeSpec,
    WedgeCoeffs,
    brute_force_minima,
    height,
    heights_on_points,
    s1,
    s2,
    siegel_indicator,
    siegel_indicator_batch,
)

Z3 = LatticeSpec(TargetPoint(0.0, 0.0), 1.0)
T0 = FlowTime(0.0, 0.0)


class TestIntegerLattice:
    def test_minima(self):
        assert s1(Z3, T0)[0] == 1.0
        assert s2(Z3, T0)[0] == 1.0

    def test_witnesses(self):
        _, w1 = s1(Z3, T0)
        assert w1 in ((0, 1, 0), (1, 0, 0))
        _, w2 = s2(Z3, T0)
        assert (w2.m, w2.w1, w2.w2) == (1, 0, 0)

    def test_height_one(self):
        rep = height(Z3, T0)
        assert rep.ht == 1.0 and rep.s3 == 1.0

    def test_half_integer(self):
        rep = height(LatticeSpec(TargetPoint(0.5, 0.5), 1.0), T0)
        assert rep.s1 == 1.0 and rep.ht == 1.0


class TestExactIdentities:
    def test_s3_is_r(self):
        rng = np.random.default_rng(1)
        for _ in range(20):
            spec = LatticeSpec(TargetPoint(rng.random(), rng.random()), rng.uniform(0.3, 3))
            rep = height(spec, FlowTime(rng.uniform(0, 3), rng.uniform(0, 3)))
            assert rep.s3 == spec.r

    def test_lower_bounds_and_cap(self):
        rng = np.random.default_rng(2)
        for _ in range(300):
            r = float(rng.choice([0.5, 1.0, 2.0]))
            spec = LatticeSpec(TargetPoint(rng.random(), rng.random()), r)
            t = FlowTime(rng.uniform(0, 3), rng.uniform(0, 3))
            rep = height(spec, t)
            tot, tf = t.total, t.floor
            assert rep.s1 >= min(math.exp(tf), r * math.exp(-tot)) * (1 - 1e-12)
            assert rep.s2 >= min(r * math.exp(-tf), math.exp(tot)) * (1 - 1e-12)
            assert rep.ht <= max(math.exp(tot) / r, math.exp(-tf)) * (1 + 1e-12)

    def test_operator_norm_scaling(self):
        # an extra diagonal flow g = a(s) scales the height by at most
        # ||g^-1||_op = e^(s1+s2)
        rng = np.random.default_rng(3)
        for _ in range(40):
            spec = LatticeSpec(TargetPoint(rng.random(), rng.random()), 1.0)
            t = FlowTime(rng.uniform(0, 2), rng.uniform(0, 2))
            sft = FlowTime(rng.uniform(0, 1.5), rng.uniform(0, 1.5))
            ht_t = height(spec, t).ht
            ht_ts = height(spec, t + sft).ht
            assert ht_ts <= math.exp(sft.total) * ht_t * (1 + 1e-9)


class TestOracle:
    def test_trivial_bounds(self):
        assert brute_force_minima(Z3, T0, 2) == (1.0, 1.0)
        assert brute_force_minima(Z3, T0, 1) == (1.0, 1.0)

    def test_fast_equals_oracle_small_flows(self):
        rng = np.random.default_rng(4)
        for _ in range(12):
            spec = LatticeSpec(TargetPoint(rng.random(), rng.random()), rng.uniform(0.5, 2))
            t = FlowTime(rng.uniform(0, 1.5), rng.uniform(0, 1.5))
            v1 = s1(spec, t)[0]
            v2 = s2(spec, t)[0]
            o1, o2 = brute_force_minima(spec, t, 20)
            assert v1 == o1 and v2 == o2

    def test_fast_below_oracle_always(self):
        rng = np.random.default_rng(5)
        for _ in range(8):
            spec = LatticeSpec(TargetPoint(rng.random(), rng.random()), rng.uniform(0.5, 2))
            t = FlowTime(rng.uniform(0, 3), rng.uniform(0, 3))
            o1, o2 = brute_force_minima(spec, t, 12)
            assert s1(spec, t)[0] <= o1 + 1e-15
            assert s2(spec, t)[0] <= o2 + 1e-15

    def test_equality_when_witnesses_fit(self):
        rng = np.random.default_rng(6)
        for _ in range(15):
            spec = LatticeSpec(TargetPoint(rng.random(), rng.random()), rng.uniform(0.5, 2))
            t = FlowTime(rng.uniform(0, 2.5), rng.uniform(0, 2.5))
            v1, (p1, p2, q) = s1(spec, t)
            o1, _ = brute_force_minima(spec, t, 20)
            if max(abs(p1), abs(p2), abs(q)) <= 20:
                assert v1 == o1

    def test_bound_domain(self):
        with pytest.raises(ValueError):
            brute_force_minima(Z3, T0, 51)


class TestBatch:
    def test_matches_scalar(self):
        rng = np.random.default_rng(7)
        xs1 = rng.random(30)
        xs2 = rng.random(30)
        t = FlowTime(2.0, 1.0)
        hts = heights_on_points(xs1, xs2, 0.8, t)
        for i in range(0, 30, 7):
            rep = height(LatticeSpec(TargetPoint(xs1[i], xs2[i]), 0.8), t)
            assert hts[i] == rep.ht

    def test_iteration_cap(self):
        with pytest.raises(IterationCapError):
            s1(LatticeSpec(TargetPoint(0.1234, 0.9876), 1.0), FlowTime(4, 4), itercap=3)


class TestSiegelIndicator:
    def test_empty_box(self):
        assert siegel_indicator(Z3, T0, Box((0.2, 0.3), (0.2, 0.3), (0.2, 0.3))) == 0

    def test_integer_lattice_3x3(self):
        assert siegel_indicator(Z3, T0, Box((-1.5, 1.5), (-1.5, 1.5), (-1.5, 1.5))) == 26

    def test_against_direct_enumeration(self):
        rng = np.random.default_rng(8)
        for _ in range(10):
            x = TargetPoint(rng.random(), rng.random())
            spec = LatticeSpec(x, 1.0)
            s = ParamSchedule(a=0.002, b=0.08, c=0.45, T=60)
            t = FlowTime(0.0, 0.0)
            from mdlab.counting import lattice_points_in

            expect = len(lattice_points_in(Omega(s), x))
            assert siegel_indicator(spec, t, Omega(s)) == expect

    def test_flowed_tile_count_matches_unflowed_translate(self):
        # a(n) Lambda meets Delta_{T,n} exactly as Lambda meets a(n)^-1 Delta_{T,n}
        s = ParamSchedule(a=0.005, b=0.08, c=0.42, T=200)
        x = TargetPoint(0.30277563773199456, 0.8392867552141612)
        spec = LatticeSpec(x, 1.0)
        total = 0
        from mdlab.tessellation import index_set

        for n in index_set(s):
            total += siegel_indicator(spec, FlowTime(float(n[0]), float(n[1])), DeltaTn(s, n))
        assert total == siegel_indicator(spec, FlowTime(0.0, 0.0), Omega(s))

    def test_schmidt_type_bound(self):
        # counts in a fixed box are controlled by a fitted multiple of the height
        box = Box((-1.2, 1.2), (-1.2, 1.2), (0.5, 2.0))
        rng = np.random.default_rng(9)
        t = FlowTime(1.5, 0.5)
        xs1, xs2 = rng.random(400), rng.random(400)
        counts = siegel_indicator_batch(xs1, xs2, 1.0, t, box).astype(float)
        hts = heights_on_points(xs1, xs2, 1.0, t)
        C = float(np.max(counts / hts))
        xs1b, xs2b = rng.random(400), rng.random(400)
        counts_b = siegel_indicator_batch(xs1b, xs2b, 1.0, t, box).astype(float)
        hts_b = heights_on_points(xs1b, xs2b, 1.0, t)
        assert np.all(counts_b <= 2.0 * max(C, 1.0) * hts_b)

    def test_wedge_constructor_rejects_zero(self):
        with pytest.raises(ValueError):
            WedgeCoeffs(0, 0, 0)
