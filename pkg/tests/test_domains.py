import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mdlab.domains import (
    Box,
    DeltaTn,
    FlowTime,
    Omega,
    ParamSchedule,
    Point3,
    Regime,
    Upsilon,
    Xi,
    apply_flow,
    contains,
    validate_schedule,
)


class TestFlow:
    def test_identity(self):
        p = Point3(1.0, 2.0, 3.0)
        assert apply_flow(FlowTime(0, 0), p) == p

    def test_single_axis(self):
        q = apply_flow(FlowTime(1, 0), Point3(1, 1, 1))
        assert q.x1 == pytest.approx(math.e, rel=1e-15)
        assert q.x2 == 1.0
        assert q.y == pytest.approx(1 / math.e, rel=1e-15)

    def test_log_exact(self):
        q = apply_flow(FlowTime(math.log(2), math.log(3)), Point3(1, 1, 6))
        assert q.x1 == pytest.approx(2.0, rel=1e-12)
        assert q.x2 == pytest.approx(3.0, rel=1e-12)
        assert q.y == pytest.approx(1.0, rel=1e-12)

    def test_overflow_cap(self):
        with pytest.raises(OverflowError):
            apply_flow(FlowTime(400, 400), Point3(1, 1, 1))

    def test_floor_ceil(self):
        t = FlowTime(2.0, 0.5)
        assert t.floor == 0.5 and t.ceil == 2.0

    def test_negative_rejected(self):
        with pytest.raises(ValueError):
            FlowTime(-0.1, 0.0)

    @given(
        st.floats(0, 5),
        st.floats(0, 5),
        st.floats(-2, 2),
        st.floats(-2, 2),
        st.floats(0.1, 10),
    )
    @settings(max_examples=200, deadline=None)
    def test_product_preserved(self, t1, t2, x1, x2, y):
        p = Point3(x1, x2, y)
        q = apply_flow(FlowTime(t1, t2), p)
        assert q.x1 * q.x2 * q.y == pytest.approx(p.x1 * p.x2 * p.y, rel=1e-12, abs=1e-300)

    @given(st.floats(0, 3), st.floats(0, 3), st.floats(0, 3), st.floats(0, 3))
    @settings(max_examples=100, deadline=None)
    def test_composition(self, s1, s2, t1, t2):
        p = Point3(0.7, -1.3, 2.1)
        via_two = apply_flow(FlowTime(s1, s2), apply_flow(FlowTime(t1, t2), p))
        direct = apply_flow(FlowTime(s1, s2) + FlowTime(t1, t2), p)
        assert via_two.x1 == pytest.approx(direct.x1, rel=1e-12)
        assert via_two.x2 == pytest.approx(direct.x2, rel=1e-12)
        assert via_two.y == pytest.approx(direct.y, rel=1e-12)


class TestSchedule:
    def test_admissible(self):
        s = ParamSchedule(a=0.01, b=0.1, c=0.4, T=1e4)
        assert validate_schedule(s, Regime.BASIC) == []

    def test_order_violation(self):
        s = ParamSchedule(a=0.2, b=0.1, c=0.4, T=1e4)
        v = validate_schedule(s)
        assert len(v) == 1 and "a < b" in v[0]

    def test_counting_regime_violation(self):
        s = ParamSchedule(a=0.01, b=0.1, c=0.05, T=1e4)
        v = validate_schedule(s, Regime.THM_CNT)
        assert any("zeta*b <= c^2" in msg for msg in v)

    def test_counting_regime_pass(self):
        s = ParamSchedule(a=0.2, b=0.1 / 4, c=0.2, T=1e4, zeta=1.0, theta1=2.0, theta2=3.0)
        assert validate_schedule(s, Regime.THM_CNT) == []

    def test_constructor_domain(self):
        with pytest.raises(ValueError):
            ParamSchedule(a=-0.1, b=0.1, c=0.4, T=10)
        with pytest.raises(ValueError):
            ParamSchedule(a=0.0, b=0.1, c=0.4, T=0.5)


class TestMembership:
    def test_omega_inside(self):
        s = ParamSchedule(a=0.01, b=0.1, c=0.4, T=100)
        assert contains(Omega(s), Point3(0.2, 0.2, 1.5))  # product 0.06 in (0.01, 0.1]

    def test_omega_zero_product(self):
        s = ParamSchedule(a=0.01, b=0.1, c=0.4, T=100)
        assert not contains(Omega(s), Point3(0.0, 0.2, 1.5))

    def test_omega_boundaries(self):
        s = ParamSchedule(a=0.01, b=0.1, c=0.4, T=100)
        # upper product cut inclusive, lower exclusive
        assert contains(Omega(s), Point3(0.25, 0.4, 1.0))  # product exactly 0.1
        assert not contains(Omega(s), Point3(0.1, 0.1, 1.0))  # product exactly 0.01

    def test_xi_whole_square(self):
        for p in [Point3(1, 1, 0), Point3(-0.5, 0.3, 9)]:
            assert contains(Xi(1.0), p)
        assert contains(Xi(2.0), Point3(0.9, 0.9, 0))
        assert not contains(Xi(0.5), Point3(0.9, 0.9, 0))

    def test_upsilon(self):
        s = ParamSchedule(a=0.02, b=0.1, c=0.4, T=50)
        assert contains(Upsilon(s), Point3(0.1, 0.05, 4.0))  # product 0.02 <= a
        assert not contains(Upsilon(s), Point3(0.1, 0.05, 4.1))

    def test_delta_shells(self):
        s = ParamSchedule(a=0.001, b=0.1, c=0.4, T=100)
        tile = DeltaTn(s, (0, 0))
        assert contains(tile, Point3(0.4, 0.4, 0.5))
        assert not contains(tile, Point3(0.1, 0.4, 0.5))  # below the shell

    def test_omega_in_bounding_box(self):
        s = ParamSchedule(a=0.005, b=0.06, c=0.3, T=500)
        omega, box = Omega(s), Omega(s).bounding_box()
        rng = np.random.default_rng(5)
        pts = rng.uniform(-1, 1, size=(2000, 2)) * [s.c * 1.5, s.c * 1.5]
        ys = rng.uniform(0.5, s.T * 1.1, size=2000)
        for (x1, x2), y in zip(pts, ys):
            p = Point3(x1, x2, y)
            if contains(omega, p):
                assert contains(box, p)

    def test_array_membership_matches_scalar(self):
        s = ParamSchedule(a=0.01, b=0.1, c=0.45, T=30)
        rng = np.random.default_rng(11)
        x1 = rng.uniform(-0.5, 0.5, 500)
        x2 = rng.uniform(-0.5, 0.5, 500)
        y = rng.uniform(0.5, 35, 500)
        for dset in (Omega(s), Upsilon(s), DeltaTn(s, (1, 0)), Xi(0.3)):
            mask = dset.contains_arrays(x1, x2, y)
            for i in range(0, 500, 37):
                assert bool(mask[i]) == contains(dset, Point3(x1[i], x2[i], y[i]))
