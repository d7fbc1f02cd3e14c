"""Regularity classes for perturbation-stable sets, and the boundary-shell
sandwich for the six-inequality window family.

A set is *type I* at parameters (eps, gamma, M) when it lives in
[-M,M]^2 x (gamma, M] and every horizontal section has area at most a
constant times max(eps, -(eps/gamma)*ln(eps/gamma)); it is *type II*
when it lives in a vertical slab [-M,M]^2 x [alpha, beta] of width
beta - alpha = O(eps) with alpha >= gamma/2.

The window set

    Delta = { a < |x1 x2| y <= b,  u_i^- < |x_i| <= u_i^+,  gamma <= y <= delta }

is stable under operator-norm-eps perturbations g of the identity in the
following quantitative sense: inflating/deflating each inequality group
by eps*M (coordinates, y) or eps*M^2 (product) yields sets
Delta_eps^- subset Delta subset Delta_eps^+ with
g^-1 Delta sandwiched between them, and the two symmetric-difference
layers are covered by 24 explicit boundary shells, each controlled at
(eps, gamma/2, M+1).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import List, Optional, Tuple

import numpy as np

from .domains import Point3

__all__ = [
    "ControlKind",
    "Shell",
    "ConstraintSet3",
    "ControlledSpec",
    "DeltaSpec",
    "delta_set",
    "classify",
    "ClassifyReport",
    "perturbation_sandwich",
    "SandwichResult",
    "in_Veps",
    "sample_Veps",
    "verify_sandwich",
    "SandwichCheckReport",
    "CONSTANT_CEILING",
]

#: generous explicit ceiling making the section-bound claims falsifiable
CONSTANT_CEILING = 64.0


class ControlKind(Enum):
    TYPE_I = "I"
    TYPE_II = "II"


@dataclass(frozen=True)
class Shell:
    """lo < v <= hi where v is x_axis (sign +1), -x_axis (sign -1) or |x_axis| (0)."""

    axis: int
    lo: float
    hi: float
    sign: int = 0

    def value(self, x1, x2):
        v = x1 if self.axis == 0 else x2
        if self.sign > 0:
            return v
        if self.sign < 0:
            return -v
        return np.abs(v) if isinstance(v, np.ndarray) else abs(v)


@dataclass(frozen=True)
class ConstraintSet3:
    """Closed x-box times closed y-interval, cut by optional product window
    (plo < |x1 x2| y <= phi) and shell constraints."""

    x1_range: Tuple[float, float]
    x2_range: Tuple[float, float]
    y_range: Tuple[float, float]
    product: Optional[Tuple[float, float]] = None
    shells: Tuple[Shell, ...] = ()

    def contains(self, p: Point3) -> bool:
        if not (self.x1_range[0] <= p.x1 <= self.x1_range[1]):
            return False
        if not (self.x2_range[0] <= p.x2 <= self.x2_range[1]):
            return False
        if not (self.y_range[0] <= p.y <= self.y_range[1]):
            return False
        for sh in self.shells:
            v = sh.value(p.x1, p.x2)
            if not (sh.lo < v <= sh.hi):
                return False
        if self.product is not None:
            pr = abs(p.x1 * p.x2) * p.y
            if not (self.product[0] < pr <= self.product[1]):
                return False
        return True

    def contains_arrays(self, x1, x2, y):
        m = (
            (x1 >= self.x1_range[0])
            & (x1 <= self.x1_range[1])
            & (x2 >= self.x2_range[0])
            & (x2 <= self.x2_range[1])
            & (y >= self.y_range[0])
            & (y <= self.y_range[1])
        )
        for sh in self.shells:
            v = sh.value(x1, x2)
            m &= (v > sh.lo) & (v <= sh.hi)
        if self.product is not None:
            pr = np.abs(x1 * x2) * y
            m &= (pr > self.product[0]) & (pr <= self.product[1])
        return m

    def with_product(self, lo: float, hi: float) -> "ConstraintSet3":
        if self.product is not None:
            lo, hi = max(lo, self.product[0]), min(hi, self.product[1])
        return replace(self, product=(lo, hi))

    def with_y(self, lo: float, hi: float) -> "ConstraintSet3":
        return replace(self, y_range=(max(lo, self.y_range[0]), min(hi, self.y_range[1])))

    def with_shell(self, shell: Shell) -> "ConstraintSet3":
        return replace(self, shells=self.shells + (shell,))

    def kernel_constraints(self):
        """Constraint parameters for the compiled point-counting kernel."""
        if self.product is None:
            use_p, plo, phi = False, 0.0, 0.0
        else:
            use_p, plo, phi = True, self.product[0], self.product[1]
        n = len(self.shells)
        axis = np.array([sh.axis for sh in self.shells], dtype=np.int64).reshape(n)
        lo = np.array([sh.lo for sh in self.shells], dtype=np.float64).reshape(n)
        hi = np.array([sh.hi for sh in self.shells], dtype=np.float64).reshape(n)
        sg = np.array([sh.sign for sh in self.shells], dtype=np.int64).reshape(n)
        return (
            self.x1_range[0], self.x1_range[1],
            self.x2_range[0], self.x2_range[1],
            self.y_range[0], self.y_range[1],
            use_p, plo, phi,
            axis, lo, hi, sg,
        )


@dataclass(frozen=True)
class ControlledSpec:
    """A set together with the (eps, gamma, M) parameters it is controlled at."""

    eps: float
    gamma: float
    M: float
    kind: ControlKind
    region: ConstraintSet3

    def __post_init__(self):
        if not (0 < self.eps < self.gamma < self.M):
            raise ValueError(
                f"need 0 < eps < gamma < M, got eps={self.eps}, gamma={self.gamma}, M={self.M}"
            )

    @property
    def envelope(self) -> float:
        """Section-area envelope max(eps, -(eps/gamma)*ln(eps/gamma))."""
        ratio = self.eps / self.gamma
        return max(self.eps, -ratio * math.log(ratio))


@dataclass
class ClassifyReport:
    kind: ControlKind
    fitted_C: float
    envelope: float
    sup_section_area: float
    slab_width: Optional[float] = None
    structure_ok: bool = True
    notes: str = ""

    @property
    def within_ceiling(self) -> bool:
        return self.fitted_C <= CONSTANT_CEILING


def classify(
    spec: ControlledSpec,
    section_probe: int = 33,
    samples_per_section: int = 8192,
    seed: int = 0,
) -> ClassifyReport:
    """Estimate the smallest admissible constant for the declared kind.

    Type I: MC-estimates sup over probed y of the section area and divides
    by the envelope.  Type II: the constant is slab width / eps, and the
    slab floor alpha >= gamma/2 is checked structurally.
    """
    region = spec.region
    ylo, yhi = region.y_range
    if spec.kind is ControlKind.TYPE_II:
        width = yhi - ylo
        ok = ylo >= spec.gamma / 2
        return ClassifyReport(
            kind=spec.kind,
            fitted_C=width / spec.eps if spec.eps > 0 else math.inf,
            envelope=spec.eps,
            sup_section_area=math.nan,
            slab_width=width,
            structure_ok=ok,
            notes="" if ok else f"slab floor {ylo} below gamma/2 = {spec.gamma / 2}",
        )
    # type I: sections over the probed y grid
    ok = ylo >= spec.gamma * (1 - 1e-12) and yhi <= spec.M * (1 + 1e-12)
    rng = np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(0xC1A,)))
    x1lo, x1hi = region.x1_range
    x2lo, x2hi = region.x2_range
    box_area = (x1hi - x1lo) * (x2hi - x2lo)
    ys = np.linspace(ylo, yhi, section_probe)
    sup_area = 0.0
    for y in ys:
        xx1 = rng.uniform(x1lo, x1hi, size=samples_per_section)
        xx2 = rng.uniform(x2lo, x2hi, size=samples_per_section)
        yy = np.full(samples_per_section, y)
        frac = float(np.mean(region.contains_arrays(xx1, xx2, yy)))
        sup_area = max(sup_area, frac * box_area)
    env = spec.envelope
    return ClassifyReport(
        kind=spec.kind,
        fitted_C=sup_area / env,
        envelope=env,
        sup_section_area=sup_area,
        structure_ok=ok,
        notes="" if ok else "region leaves the type-I slab (gamma, M]",
    )


# ---------------------------------------------------------------------------
# The six-inequality window family and its perturbation sandwich
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DeltaSpec:
    """Parameters of the window set: product in (a, b], |x_i| in (u_i^-, u_i^+],
    y in [gamma, delta]."""

    a: float
    b: float
    u1m: float
    u1p: float
    u2m: float
    u2p: float
    gamma: float
    delta: float

    def __post_init__(self):
        if not (0 < self.a < self.b):
            raise ValueError("need 0 < a < b")
        if not (self.u1m < self.u1p <= 0.5 and self.u2m < self.u2p <= 0.5):
            raise ValueError("need u_i^- < u_i^+ <= 1/2")
        if not (0 < self.gamma < self.delta):
            raise ValueError("need 0 < gamma < delta")


def delta_set(d: DeltaSpec) -> ConstraintSet3:
    return ConstraintSet3(
        x1_range=(-d.u1p, d.u1p),
        x2_range=(-d.u2p, d.u2p),
        y_range=(d.gamma, d.delta),
        product=(d.a, d.b),
        shells=(Shell(0, d.u1m, d.u1p, 0), Shell(1, d.u2m, d.u2p, 0)),
    )


@dataclass
class SandwichResult:
    delta: ConstraintSet3
    delta_plus: ConstraintSet3
    delta_minus: ConstraintSet3
    shells: List[ControlledSpec]
    eps: float
    M: float


def perturbation_sandwich(d: DeltaSpec, eps: float, M: float) -> SandwichResult:
    """Inflate/deflate the window and build the 24 boundary shells.

    Requires M > 1, delta <= M and
    0 < eps < min(1/(2M), gamma/(2M), a/(M^2 + 1)).
    The shell split is: per side, 1 product-lower + 1 product-upper
    (type I), 4 coordinate-lower + 4 coordinate-upper half-shells
    (type I), and 1 y-lower + 1 y-upper slab (type II).
    """
    if not M > 1:
        raise ValueError("need M > 1")
    if d.delta > M or d.gamma > M:
        raise ValueError("need gamma < delta <= M")
    cap = min(1.0 / (2 * M), d.gamma / (2 * M), d.a / (M * M + 1))
    if not (0 < eps < cap):
        raise ValueError(f"need 0 < eps < {cap}, got {eps}")

    eM = eps * M
    eM2 = eps * M * M
    base = delta_set(d)
    plus = ConstraintSet3(
        x1_range=(-(d.u1p + eM), d.u1p + eM),
        x2_range=(-(d.u2p + eM), d.u2p + eM),
        y_range=(d.gamma - eM, d.delta + eM),
        product=(d.a - eM2, d.b + eM2),
        shells=(Shell(0, d.u1m - eM, d.u1p + eM, 0), Shell(1, d.u2m - eM, d.u2p + eM, 0)),
    )
    minus = ConstraintSet3(
        x1_range=(-(d.u1p - eM), d.u1p - eM),
        x2_range=(-(d.u2p - eM), d.u2p - eM),
        y_range=(d.gamma + eM, d.delta - eM),
        product=(d.a + eM2, d.b - eM2),
        shells=(Shell(0, d.u1m + eM, d.u1p - eM, 0), Shell(1, d.u2m + eM, d.u2p - eM, 0)),
    )

    g2 = d.gamma / 2.0
    M1 = M + 1.0
    shells: List[ControlledSpec] = []

    def add(kind: ControlKind, region: ConstraintSet3):
        shells.append(ControlledSpec(eps=eps, gamma=g2, M=M1, kind=kind, region=region))

    # layer Delta_eps^+ \ Delta: negate each window inequality inside Delta_eps^+
    add(ControlKind.TYPE_I, plus.with_product(d.a - eM2, d.a))
    add(ControlKind.TYPE_I, plus.with_product(d.b, d.b + eM2))
    for axis, um, up in ((0, d.u1m, d.u1p), (1, d.u2m, d.u2p)):
        for sign in (+1, -1):
            add(ControlKind.TYPE_I, plus.with_shell(Shell(axis, um - eM, um, sign)))
            add(ControlKind.TYPE_I, plus.with_shell(Shell(axis, up, up + eM, sign)))
    add(ControlKind.TYPE_II, plus.with_y(d.gamma - eM, d.gamma))
    add(ControlKind.TYPE_II, plus.with_y(d.delta, d.delta + eM))

    # layer Delta \ Delta_eps^-: negate each deflated inequality inside Delta
    add(ControlKind.TYPE_I, base.with_product(d.a, d.a + eM2))
    add(ControlKind.TYPE_I, base.with_product(d.b - eM2, d.b))
    for axis, um, up in ((0, d.u1m, d.u1p), (1, d.u2m, d.u2p)):
        for sign in (+1, -1):
            add(ControlKind.TYPE_I, base.with_shell(Shell(axis, um, um + eM, sign)))
            add(ControlKind.TYPE_I, base.with_shell(Shell(axis, up - eM, up, sign)))
    add(ControlKind.TYPE_II, base.with_y(d.gamma, d.gamma + eM))
    add(ControlKind.TYPE_II, base.with_y(d.delta - eM, d.delta))

    assert len(shells) == 24
    return SandwichResult(
        delta=base, delta_plus=plus, delta_minus=minus, shells=shells, eps=eps, M=M
    )


# ---------------------------------------------------------------------------
# Operator-norm perturbation ball
# ---------------------------------------------------------------------------


def _opnorm_inf(g: np.ndarray) -> float:
    return float(np.max(np.sum(np.abs(g), axis=1)))


def in_Veps(g: np.ndarray, eps: float) -> bool:
    """Both g and g^-1 within eps of the identity in the sup operator norm.

    Raises for matrices whose determinant is not 1 to 1e-9.
    """
    g = np.asarray(g, dtype=np.float64)
    if g.shape != (3, 3):
        raise ValueError("expected a 3x3 matrix")
    det = float(np.linalg.det(g))
    if abs(det - 1.0) > 1e-9:
        raise ValueError(f"matrix is not unimodular: det = {det}")
    gi = np.linalg.inv(g)
    eye = np.eye(3)
    return _opnorm_inf(g - eye) < eps and _opnorm_inf(gi - eye) < eps


def sample_Veps(eps: float, rng: np.random.Generator, max_tries: int = 1000) -> np.ndarray:
    """Random unimodular matrix in the eps-ball (diagonal-plus-small-noise)."""
    for _ in range(max_tries):
        g = np.eye(3) + rng.uniform(-eps / 4.0, eps / 4.0, size=(3, 3))
        det = float(np.linalg.det(g))
        if det <= 0:
            continue
        g = g / np.cbrt(det)
        det2 = float(np.linalg.det(g))
        if abs(det2 - 1.0) > 1e-9:
            # one Newton polish on the scale factor
            g = g / np.cbrt(det2)
        if in_Veps(g, eps):
            return g
    raise RuntimeError("could not sample the perturbation ball")


# ---------------------------------------------------------------------------
# Monte Carlo verification of the sandwich
# ---------------------------------------------------------------------------


@dataclass
class SandwichCheckReport:
    spec: DeltaSpec
    eps: float
    M: float
    samples: int
    n_g: int
    containment_violations: int = 0
    coverage_violations: int = 0
    sym_diff_points: int = 0
    witnesses: List[dict] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.containment_violations == 0 and self.coverage_violations == 0


def verify_sandwich(
    d: DeltaSpec,
    eps: float,
    M: float,
    samples: int = 10 ** 5,
    n_g: int = 10,
    seed: int = 0,
) -> SandwichCheckReport:
    """MC check of the sandwich containments and the 24-shell coverage.

    Samples the bounding box of the inflated window; checks
    minus subset Delta subset plus pointwise, then for each sampled
    perturbation g: g^-1 Delta between minus and plus, and
    (g^-1 Delta) symdiff Delta covered by the union of shells.
    """
    sw = perturbation_sandwich(d, eps, M)
    rep = SandwichCheckReport(spec=d, eps=eps, M=M, samples=samples, n_g=n_g)
    rng = np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(0x5A9D,)))
    plus = sw.delta_plus
    x1 = rng.uniform(plus.x1_range[0], plus.x1_range[1], size=samples)
    x2 = rng.uniform(plus.x2_range[0], plus.x2_range[1], size=samples)
    y = rng.uniform(plus.y_range[0], plus.y_range[1], size=samples)

    in_minus = sw.delta_minus.contains_arrays(x1, x2, y)
    in_delta = sw.delta.contains_arrays(x1, x2, y)
    in_plus = plus.contains_arrays(x1, x2, y)
    bad = (in_minus & ~in_delta) | (in_delta & ~in_plus)
    rep.containment_violations += int(np.sum(bad))
    for i in np.nonzero(bad)[0][:3]:
        rep.witnesses.append(
            {"point": (float(x1[i]), float(x2[i]), float(y[i])), "reason": "static-containment"}
        )

    pts = np.vstack([x1, x2, y])
    shell_masks = None
    for k in range(n_g):
        g = sample_Veps(eps, rng)
        gp = g @ pts
        in_ginv = sw.delta.contains_arrays(gp[0], gp[1], gp[2])  # p in g^-1 Delta
        bad_up = in_ginv & ~in_plus
        bad_dn = in_minus & ~in_ginv
        rep.containment_violations += int(np.sum(bad_up) + np.sum(bad_dn))
        sym = in_ginv ^ in_delta
        rep.sym_diff_points += int(np.sum(sym))
        if np.any(sym):
            if shell_masks is None:
                shell_masks = [sp.region.contains_arrays(x1, x2, y) for sp in sw.shells]
            covered = np.zeros(samples, dtype=bool)
            for m in shell_masks:
                covered |= m
            miss = sym & ~covered
            rep.coverage_violations += int(np.sum(miss))
            for i in np.nonzero(miss)[0][:3]:
                rep.witnesses.append(
                    {
                        "point": (float(x1[i]), float(x2[i]), float(y[i])),
                        "reason": "shell-coverage",
                        "g_index": k,
                    }
                )
    return rep
