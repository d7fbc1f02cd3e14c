import math

import numpy as np
import pytest

from mdlab.domains import DeltaTn, FlowTime, Omega, ParamSchedule, Point3, apply_flow, contains
from mdlab.tessellation import (
    TessellationError,
    band_endpoints,
    decompose,
    decompose_batch,
    index_set,
    verify_partition,
)

S_REF = ParamSchedule(a=0.01, b=0.1, c=0.4, T=1e4)


class TestIndexSet:
    def test_small_band(self):
        # band [0, 3) via a schedule engineered to hit it exactly:
        # alpha = ln(c^2/(b e^2)) = 0 and beta = ln(T c^2/a) = 3
        c = 0.4
        b = c * c / math.e ** 2
        a = 0.01
        s = ParamSchedule(a=a, b=b, c=c, T=math.exp(3.0) * a / c ** 2)
        alpha, beta = band_endpoints(s)
        assert alpha == pytest.approx(0.0, abs=1e-12)
        assert beta == pytest.approx(3.0, abs=1e-12)
        tiles = set(index_set(s))
        assert tiles == {(0, 0), (0, 1), (1, 0), (0, 2), (1, 1), (2, 0)}

    def test_empty_band(self):
        # alpha >= beta: make T tiny and a close to c^2
        c = 0.4
        s = ParamSchedule(a=0.15, b=0.2, c=c, T=1.0)
        alpha, beta = band_endpoints(s)
        assert beta <= alpha
        assert index_set(s) == []

    def test_cardinality_formula(self):
        alpha, beta = band_endpoints(S_REF)
        lo = max(0, math.ceil(alpha))
        hi = math.ceil(beta) - 1
        expect = (hi + 1) * (hi + 2) // 2 - lo * (lo + 1) // 2
        assert len(index_set(S_REF)) == expect == 78

    def test_zero_lower_cut_rejected(self):
        with pytest.raises(ValueError):
            index_set(ParamSchedule(a=0.0, b=0.1, c=0.4, T=10))


class TestDecompose:
    def test_top_shell(self):
        p = Point3(0.4, 0.4, 0.5)  # |x_i| = c exactly; product 0.08 in (0.01, 0.1]
        assert decompose(p, S_REF) == (0, 0)

    def test_mixed_shell(self):
        x1 = 0.4 * math.exp(-1.5)
        x2 = 0.4 * math.exp(-0.2)
        y = 2.0  # product = 0.0292... * 2 in (0.01, 0.1]
        p = Point3(x1, x2, y)
        assert contains(Omega(S_REF), p)
        n = decompose(p, S_REF)
        assert n == (1, 0)
        assert contains(DeltaTn(S_REF, n), apply_flow(FlowTime(*n), p))

    def test_outside_strip(self):
        assert decompose(Point3(0.39, 0.39, 9000.0), S_REF) is None

    def test_boundary_shells(self):
        # |x| = c e^{-k} is the inclusive top of shell k
        for k in (1, 2, 5):
            v = 0.4 * math.exp(-float(k))
            y = 0.05 / (v * v)
            p = Point3(v, v, y)
            if not contains(Omega(S_REF), p):
                continue
            n = decompose(p, S_REF)
            assert n == (k, k)
            assert contains(DeltaTn(S_REF, n), apply_flow(FlowTime(*n), p))

    def test_batch_matches_scalar(self):
        rng = np.random.default_rng(8)
        pts = []
        while len(pts) < 200:
            x1, x2 = rng.uniform(-0.4, 0.4, 2)
            y = rng.uniform(1, S_REF.T)
            if contains(Omega(S_REF), Point3(x1, x2, y)):
                pts.append((x1, x2, y))
        arr = np.array(pts)
        n1, n2 = decompose_batch(arr[:, 0], arr[:, 1], S_REF)
        for i, (x1, x2, y) in enumerate(pts):
            assert (n1[i], n2[i]) == decompose(Point3(x1, x2, y), S_REF)


class TestVerifyPartition:
    def test_clean_run(self):
        rep = verify_partition(S_REF, 200_000, seed=11, min_strip_points=2000)
        assert rep.ok
        assert rep.n_in_strip >= 2000
        assert rep.tiles_probed == rep.tile_count
        assert rep.margin_indices_probed > 0

    def test_degenerate_near_empty_window(self):
        # a ~ b: strip almost empty, trivially consistent
        s = ParamSchedule(a=0.0999999, b=0.1, c=0.4, T=100)
        rep = verify_partition(s, 50_000, seed=2)
        assert rep.ok

    def test_report_shape(self):
        rep = verify_partition(S_REF, 50_000, seed=4)
        assert rep.band[0] < rep.band[1]
        assert rep.n_checked_other_tiles > 0
