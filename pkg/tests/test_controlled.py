import math

import numpy as np
import pytest

from mdlab.controlled import (
    CONSTANT_CEILING,
    ControlKind,
    ControlledSpec,
    ConstraintSet3,
    DeltaSpec,
    Shell,
    classify,
    delta_set,
    in_Veps,
    perturbation_sandwich,
    sample_Veps,
    verify_sandwich,
)
from mdlab.domains import Point3

D_REF = DeltaSpec(a=0.05, b=0.2, u1m=0.3, u1p=0.5, u2m=0.3, u2p=0.5, gamma=0.1, delta=1.0)


class TestSpecs:
    def test_parameter_order_enforced(self):
        region = ConstraintSet3((-2, 2), (-2, 2), (0.2, 0.3))
        with pytest.raises(ValueError):
            ControlledSpec(eps=0.2, gamma=0.1, M=2.0, kind=ControlKind.TYPE_II, region=region)

    def test_delta_spec_validation(self):
        with pytest.raises(ValueError):
            DeltaSpec(a=0.2, b=0.1, u1m=0.3, u1p=0.5, u2m=0.3, u2p=0.5, gamma=0.1, delta=1.0)
        with pytest.raises(ValueError):
            DeltaSpec(a=0.05, b=0.2, u1m=0.3, u1p=0.6, u2m=0.3, u2p=0.5, gamma=0.1, delta=1.0)

    def test_delta_membership(self):
        dset = delta_set(D_REF)
        assert dset.contains(Point3(0.4, 0.4, 0.5))  # product 0.08 in (0.05, 0.2]
        assert not dset.contains(Point3(0.4, 0.4, 2.0))  # y out
        assert not dset.contains(Point3(0.2, 0.4, 0.5))  # below the shell


class TestClassify:
    def test_type_ii_slab(self):
        eps, gamma, M = 1e-3, 0.1, 2.0
        region = ConstraintSet3((-M, M), (-M, M), (gamma, gamma + eps))
        spec = ControlledSpec(eps=eps, gamma=gamma, M=M, kind=ControlKind.TYPE_II, region=region)
        rep = classify(spec)
        assert rep.structure_ok
        assert rep.fitted_C == pytest.approx(1.0, rel=1e-9)

    def test_type_i_hyperbolic_sliver(self):
        eps, gamma, M = 1e-3, 0.1, 2.0
        a = 0.05
        region = ConstraintSet3(
            (-0.6, 0.6), (-0.6, 0.6), (gamma, M), product=(a - eps * M * M, a)
        )
        spec = ControlledSpec(eps=eps, gamma=gamma, M=M, kind=ControlKind.TYPE_I, region=region)
        rep = classify(spec, seed=1)
        assert rep.structure_ok
        assert rep.fitted_C <= CONSTANT_CEILING

    def test_smaller_gamma_remark(self):
        # controlled at (eps, gamma) stays controlled at (eps, gamma') for
        # eps < gamma' < gamma with eps/gamma' < 1/e
        eps, gamma, M = 1e-3, 0.2, 2.0
        region = ConstraintSet3((-M, M), (-M, M), (gamma, gamma + 0.5 * eps))
        spec = ControlledSpec(eps=eps, gamma=gamma, M=M, kind=ControlKind.TYPE_II, region=region)
        for gp in (0.15, 0.05, 0.01):
            spec2 = ControlledSpec(
                eps=eps, gamma=gp, M=M, kind=ControlKind.TYPE_II, region=region
            )
            rep = classify(spec2)
            assert rep.structure_ok and rep.fitted_C <= CONSTANT_CEILING


class TestSandwich:
    def test_shell_count_and_kinds(self):
        sw = perturbation_sandwich(D_REF, 1e-4, 2.0)
        assert len(sw.shells) == 24
        kinds = [sp.kind for sp in sw.shells]
        assert kinds.count(ControlKind.TYPE_I) == 20
        assert kinds.count(ControlKind.TYPE_II) == 4

    def test_all_shells_classify(self):
        sw = perturbation_sandwich(D_REF, 5e-4, 2.0)
        for i, sp in enumerate(sw.shells):
            assert sp.eps == 5e-4 and sp.gamma == D_REF.gamma / 2 and sp.M == 3.0
            rep = classify(sp, section_probe=9, samples_per_section=2048, seed=i)
            assert rep.structure_ok, f"shell {i}"
            assert rep.fitted_C <= CONSTANT_CEILING, f"shell {i}: C = {rep.fitted_C}"

    def test_hypothesis_gate(self):
        with pytest.raises(ValueError):
            perturbation_sandwich(D_REF, 0.05, 2.0)  # eps above the cap
        with pytest.raises(ValueError):
            perturbation_sandwich(D_REF, 1e-4, 1.0)  # M must exceed 1

    def test_vanishing_eps_limit(self):
        # shell widths shrink linearly with eps
        for eps, scale in ((1e-3, 1.0), (1e-5, 0.01)):
            sw = perturbation_sandwich(D_REF, eps, 2.0)
            y_shell = sw.shells[10]  # a type II slab
            lo, hi = y_shell.region.y_range
            assert (hi - lo) == pytest.approx(eps * 2.0, rel=1e-9)

    def test_static_containments(self):
        rep = verify_sandwich(D_REF, 1e-3, 2.0, samples=20_000, n_g=4, seed=3)
        assert rep.ok, rep.witnesses[:2]
        assert rep.sym_diff_points > 0


class TestVeps:
    def test_identity(self):
        assert in_Veps(np.eye(3), 1e-9)

    def test_diagonal_inside(self):
        d = 1e-4 / 2
        g = np.diag([1 + d, 1.0, 1 / (1 + d)])
        assert in_Veps(g, 1e-4)

    def test_diagonal_outside(self):
        d = 2e-4
        g = np.diag([1 + d, 1.0, 1 / (1 + d)])
        assert not in_Veps(g, 1e-4)

    def test_rejects_non_unimodular(self):
        with pytest.raises(ValueError):
            in_Veps(np.diag([2.0, 1.0, 1.0]), 0.5)

    def test_sampler(self):
        rng = np.random.default_rng(5)
        for _ in range(5):
            g = sample_Veps(1e-3, rng)
            assert in_Veps(g, 1e-3)


def test_shell_sign_semantics():
    sh_pos = Shell(0, 0.3, 0.4, +1)
    sh_neg = Shell(0, 0.3, 0.4, -1)
    sh_abs = Shell(0, 0.3, 0.4, 0)
    region = ConstraintSet3((-1, 1), (-1, 1), (0, 1))
    for x1, expect in ((0.35, (True, False, True)), (-0.35, (False, True, True))):
        got = tuple(
            region.with_shell(sh).contains(Point3(x1, 0.0, 0.5))
            for sh in (sh_pos, sh_neg, sh_abs)
        )
        assert got == expect
