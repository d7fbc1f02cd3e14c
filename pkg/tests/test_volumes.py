import math

import numpy as np
import pytest

from mdlab.domains import ParamSchedule
from mdlab.quadrature import adaptive_simpson
from mdlab.volumes import (
    RegimeError,
    VolumeReport,
    omega_section_area,
    omega_section_area_mc,
    omega_section_area_quad,
    omega_volume,
    omega_volume_mc,
    omega_volume_quad,
    upsilon_section_area,
    upsilon_section_area_quad,
    weighted_mean,
    weighted_mean_mc,
    weighted_mean_quad,
    xi_area,
    xi_area_difference_bound,
    xi_area_mc,
    xi_area_quad,
)


def random_admissible_schedules(n, seed=0, Tmax=1e4):
    rng = np.random.default_rng(seed)
    out = []
    while len(out) < n:
        c = rng.uniform(0.15, 0.49)
        b = rng.uniform(0.2, 1.0) * c * c
        a = rng.uniform(0.0, 0.8) * b
        T = rng.uniform(50, Tmax)
        out.append(ParamSchedule(a=a, b=b, c=c, T=T))
    return out


class TestXiArea:
    def test_whole_square(self):
        assert xi_area(1.0) == 4.0
        assert xi_area(2.0) == 4.0

    def test_value_and_quadrature(self):
        val = xi_area(0.1)
        assert val == pytest.approx(1.3210340371976184, rel=1e-12)
        assert val == pytest.approx(xi_area_quad(0.1), rel=1e-6)

    def test_rejects_nonpositive(self):
        with pytest.raises(ValueError):
            xi_area(0.0)

    def test_monotone_and_continuous_at_one(self):
        gs = np.linspace(0.001, 1.5, 300)
        vals = [xi_area(g) for g in gs]
        assert all(v2 >= v1 - 1e-14 for v1, v2 in zip(vals, vals[1:]))
        assert xi_area(1 - 1e-12) == pytest.approx(4.0, abs=1e-10)

    def test_difference_bound(self):
        bound = xi_area_difference_bound(0.1, 0.2)
        assert bound == pytest.approx(4 * math.log(10) * 0.1, rel=1e-12)
        assert xi_area(0.2) - xi_area(0.1) <= bound
        # both areas saturated
        assert xi_area_difference_bound(1.0, 2.0) == 0.0
        assert xi_area(2.0) - xi_area(1.0) == 0.0
        # tiny window still dominates
        b2 = xi_area_difference_bound(0.05, 0.051)
        assert 0 < xi_area(0.051) - xi_area(0.05) <= b2
        with pytest.raises(ValueError):
            xi_area_difference_bound(0.2, 0.1)


class TestSectionArea:
    def test_reference_value(self):
        s = ParamSchedule(a=0.01, b=0.1, c=0.5, T=1e4)
        val = omega_section_area(s, 10.0)
        assert val == pytest.approx(0.14266918932327904, rel=1e-12)
        assert val == pytest.approx(omega_section_area_quad(s, 10.0), rel=1e-5)

    def test_empty_strip(self):
        # a == b is outside the constructor domain for counting, but the
        # section formula collapses continuously; probe a ~ b instead
        s = ParamSchedule(a=0.1, b=0.1 + 1e-15, c=0.5, T=10)
        assert omega_section_area(s, 1.0) == pytest.approx(0.0, abs=1e-12)

    def test_zero_lower_cut(self):
        s = ParamSchedule(a=0.0, b=0.1, c=0.5, T=10)
        val = omega_section_area(s, 1.0)
        assert val == pytest.approx(0.766516292749662, rel=1e-12)
        assert val == pytest.approx(omega_section_area_quad(s, 1.0), rel=1e-6)

    def test_regime_error(self):
        s = ParamSchedule(a=0.01, b=0.3, c=0.4, T=10)
        with pytest.raises(RegimeError):
            omega_section_area(s, 2.0)
        # the quadrature oracle still works there
        assert omega_section_area_quad(s, 2.0) > 0

    def test_y_domain(self):
        s = ParamSchedule(a=0.01, b=0.02, c=0.3, T=10)
        with pytest.raises(ValueError):
            omega_section_area(s, 0.5)


class TestVolume:
    def test_volume_vs_quadrature(self):
        s = ParamSchedule(a=0.01, b=0.1, c=0.5, T=1e4)
        assert omega_volume(s) == pytest.approx(omega_volume_quad(s), rel=1e-6)

    def test_volume_at_T_e(self):
        c = 0.4
        b = c * c
        s = ParamSchedule(a=0.0, b=b, c=c, T=math.e)
        expect = 2 * b + 4 * (b * (1 + 2 * math.log(c)) - b * math.log(b))
        assert omega_volume(s) == pytest.approx(expect, rel=1e-12)

    def test_leading_term_dominates(self):
        b, c = 0.05, 0.4
        vols = []
        for T in (1e3, 1e6, 1e12):
            s = ParamSchedule(a=0.0, b=b, c=c, T=T)
            vols.append(omega_volume(s) / (2 * math.log(T) ** 2 * b))
        assert abs(vols[-1] - 1.0) < abs(vols[0] - 1.0)
        assert vols[-1] == pytest.approx(1.0, rel=0.2)

    def test_section_integrates_to_volume(self):
        for s in random_admissible_schedules(20, seed=3):
            if s.a == 0:
                continue
            integral = adaptive_simpson(
                lambda y: omega_section_area(s, y),
                1.0,
                s.T,
                tol=1e-10,
                points=[p for p in (s.a / s.c ** 2, s.b / s.c ** 2) if 1 < p < s.T],
                min_panels=8,
            )
            assert integral == pytest.approx(omega_volume(s), rel=1e-6)

    def test_volume_mc(self):
        s = ParamSchedule(a=0.01, b=0.1, c=0.5, T=1e3)
        est, err = omega_volume_mc(s, samples=200_000, seed=7)
        assert abs(est - omega_volume(s)) <= 3 * err


class TestWeightedMean:
    def test_constant_weight_collapses(self):
        s = ParamSchedule(a=0.01, b=0.1, c=0.5, T=1e3)
        assert weighted_mean(s, lambda u: 1.0) == pytest.approx(omega_volume(s), rel=1e-6)

    def test_zero_weight(self):
        s = ParamSchedule(a=0.01, b=0.1, c=0.5, T=100)
        assert weighted_mean(s, lambda u: 0.0) == 0.0

    def test_linear_weight_against_formula_free_quadrature(self):
        s = ParamSchedule(a=0.01, b=0.1, c=0.5, T=1e3)
        assert weighted_mean(s, lambda u: u) == pytest.approx(
            weighted_mean_quad(s, lambda u: u), rel=1e-6
        )

    def test_linear_weight_against_mc(self):
        s = ParamSchedule(a=0.01, b=0.1, c=0.5, T=1e3)
        est, err = weighted_mean_mc(s, lambda u: u, samples=300_000, seed=5)
        assert abs(est - weighted_mean(s, lambda u: u)) <= 3 * err

    def test_nodes_floor(self):
        s = ParamSchedule(a=0.01, b=0.1, c=0.5, T=100)
        with pytest.raises(ValueError):
            weighted_mean(s, lambda u: 1.0, nodes=16)

    def test_nonfinite_weight_rejected(self):
        s = ParamSchedule(a=0.01, b=0.1, c=0.5, T=100)
        with pytest.raises(ValueError):
            weighted_mean(s, lambda u: float("nan"))


class TestUpsilonSection:
    def test_saturated(self):
        s = ParamSchedule(a=0.25, b=0.3, c=0.4, T=10)
        assert upsilon_section_area(s, 1) == 1.0

    def test_values(self):
        s = ParamSchedule(a=0.025, b=0.3, c=0.4, T=10)
        assert upsilon_section_area(s, 1) == pytest.approx(0.3302585092994046, rel=1e-12)
        assert upsilon_section_area(s, 10) == pytest.approx(0.05605170185988091, rel=1e-12)
        assert upsilon_section_area(s, 1) == pytest.approx(
            upsilon_section_area_quad(s, 1), rel=1e-6
        )

    def test_q_domain(self):
        s = ParamSchedule(a=0.025, b=0.3, c=0.4, T=10)
        with pytest.raises(ValueError):
            upsilon_section_area(s, 0)


def test_volume_report_error_field():
    rep = VolumeReport(closed_form=2.0, oracle_value=2.5, method="Quadrature", samples_or_nodes=10)
    assert rep.abs_error == 0.5
    assert rep.to_dict()["method"] == "Quadrature"
