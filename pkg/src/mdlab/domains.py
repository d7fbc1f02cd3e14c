"""Parameter schedules, the diagonal flow, and the domain sets of the model.

Everything here is a small immutable value object plus pure membership
predicates.  Boundary strictness is part of the contract: the hyperbolic
window is ``a < |x1*x2|*y <= b`` (lower cut exclusive, upper inclusive),
the coordinate cap is ``max(|x1|,|x2|) <= c``, shells are half-open on the
inside, and so on.  Ties at floating-point boundaries are resolved by the
literal comparison; for continuous sampling they occur on measure-zero
sets.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Optional, Union

import numpy as np

__all__ = [
    "FlowTime",
    "Point3",
    "ParamSchedule",
    "Regime",
    "Omega",
    "DeltaTn",
    "Upsilon",
    "Xi",
    "Box",
    "DomainSet",
    "contains",
    "apply_flow",
    "validate_schedule",
    "set_extended_precision",
]

#: Exponent magnitude cap for apply_flow; beyond this exp() is meaningless.
FLOW_EXPONENT_CAP = 500.0

# Optional extended-precision switch for membership near boundaries.
# Counting sums are integer-exact either way; only memberships at
# representable boundaries are sensitive, so float64 is the default.
_EXTENDED = False


def set_extended_precision(on: bool) -> None:
    """Evaluate membership inequalities in long double instead of float64."""
    global _EXTENDED
    _EXTENDED = bool(on)


def _f(x):
    return np.longdouble(x) if _EXTENDED else float(x)


@dataclass(frozen=True)
class FlowTime:
    """Exponent pair (t1, t2) of the diagonal flow diag(e^t1, e^t2, e^-(t1+t2))."""

    t1: float
    t2: float

    def __post_init__(self):
        if not (self.t1 >= 0.0 and self.t2 >= 0.0):
            raise ValueError(f"flow exponents must be nonnegative, got {self}")

    @property
    def floor(self) -> float:
        """Component minimum min(t1, t2)."""
        return min(self.t1, self.t2)

    @property
    def ceil(self) -> float:
        """Component maximum max(t1, t2)."""
        return max(self.t1, self.t2)

    @property
    def total(self) -> float:
        return self.t1 + self.t2

    def __add__(self, other: "FlowTime") -> "FlowTime":
        return FlowTime(self.t1 + other.t1, self.t2 + other.t2)


@dataclass(frozen=True)
class Point3:
    """A point (x1, x2, y) in R^2 x R."""

    x1: float
    x2: float
    y: float

    def __post_init__(self):
        if not (math.isfinite(self.x1) and math.isfinite(self.x2) and math.isfinite(self.y)):
            raise ValueError(f"non-finite point {self}")

    def as_tuple(self) -> tuple:
        return (self.x1, self.x2, self.y)


def apply_flow(t: FlowTime, p: Point3, exponent_cap: float = FLOW_EXPONENT_CAP) -> Point3:
    """Apply diag(e^t1, e^t2, e^-(t1+t2)) to p.

    The map has determinant one, so it preserves the product x1*x2*y.
    Raises OverflowError if any exponent magnitude exceeds ``exponent_cap``.
    """
    if max(abs(t.t1), abs(t.t2), abs(t.t1 + t.t2)) > exponent_cap:
        raise OverflowError(f"flow exponent exceeds cap {exponent_cap}: {t}")
    return Point3(
        math.exp(t.t1) * p.x1,
        math.exp(t.t2) * p.x2,
        math.exp(-(t.t1 + t.t2)) * p.y,
    )


@dataclass(frozen=True)
class ParamSchedule:
    """One slice (a_T, b_T, c_T) of a parameter schedule at threshold T.

    The constructor only checks that the numbers are in the admissible
    domain (positive, finite, T >= 1; a may be 0 meaning "no lower cut").
    The ordering constraints between them are reported by
    :func:`validate_schedule`, because callers legitimately build
    non-admissible schedules to probe them.
    """

    a: float
    b: float
    c: float
    T: float
    zeta: float = 1.0
    theta1: float = 1.0
    theta2: float = 1.0

    def __post_init__(self):
        for name in ("a", "b", "c", "T", "zeta", "theta1", "theta2"):
            v = getattr(self, name)
            if not math.isfinite(v):
                raise ValueError(f"{name} must be finite, got {v}")
        if self.a < 0:
            raise ValueError(f"a must be >= 0, got {self.a}")
        if self.b <= 0 or self.c <= 0 or self.zeta <= 0 or self.theta1 <= 0 or self.theta2 <= 0:
            raise ValueError("b, c, zeta, theta1, theta2 must be positive")
        if self.T < 1:
            raise ValueError(f"T must be >= 1, got {self.T}")

    @property
    def log_T(self) -> float:
        return math.log(self.T)


class Regime(Enum):
    """Which set of schedule constraints to enforce."""

    BASIC = "basic"
    THM_CNT = "thmcnt"


def validate_schedule(s: ParamSchedule, regime: Regime = Regime.BASIC) -> list:
    """Return the list of violated schedule inequalities (empty iff admissible).

    BASIC checks the standing assumptions 0 < a < b and c < 1/2.
    THM_CNT additionally checks a >= (ln T)^-theta1 and
    zeta*b <= c^2 <= (ln T)^theta2 * b.
    """
    violations = []
    if not s.a < s.b:
        violations.append(f"a < b violated: a={s.a!r}, b={s.b!r}")
    if not s.c < 0.5:
        violations.append(f"c < 1/2 violated: c={s.c!r}")
    if regime is Regime.THM_CNT:
        lnT = s.log_T
        if lnT <= 0:
            violations.append(f"T > 1 required for the counting regime: T={s.T!r}")
        else:
            if not s.a >= lnT ** (-s.theta1):
                violations.append(
                    f"a >= (ln T)^-theta1 violated: a={s.a!r}, bound={lnT ** (-s.theta1)!r}"
                )
            if not s.zeta * s.b <= s.c ** 2:
                violations.append(
                    f"zeta*b <= c^2 violated: zeta*b={s.zeta * s.b!r}, c^2={s.c ** 2!r}"
                )
            if not s.c ** 2 <= lnT ** s.theta2 * s.b:
                violations.append(
                    f"c^2 <= (ln T)^theta2 * b violated: c^2={s.c ** 2!r}, "
                    f"bound={lnT ** s.theta2 * s.b!r}"
                )
    return violations


# ---------------------------------------------------------------------------
# Domain sets
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Omega:
    """Hyperbolic strip: a < |x1*x2|*y <= b, max(|x1|,|x2|) <= c, 1 <= y <= T."""

    params: ParamSchedule

    def contains(self, p: Point3) -> bool:
        s = self.params
        x1, x2, y = _f(p.x1), _f(p.x2), _f(p.y)
        prod = abs(x1 * x2) * y
        return (
            _f(s.a) < prod <= _f(s.b)
            and max(abs(x1), abs(x2)) <= _f(s.c)
            and 1.0 <= y <= _f(s.T)
        )

    def contains_arrays(self, x1, x2, y):
        s = self.params
        prod = np.abs(x1 * x2) * y
        return (
            (prod > s.a)
            & (prod <= s.b)
            & (np.maximum(np.abs(x1), np.abs(x2)) <= s.c)
            & (y >= 1.0)
            & (y <= s.T)
        )

    def bounding_box(self) -> "Box":
        c, T = self.params.c, self.params.T
        return Box((-c, c), (-c, c), (1.0, T))


@dataclass(frozen=True)
class DeltaTn:
    """Top-shell tile: like Omega but |x_i| pinned to (c/e, c] and y scaled by e^-(n1+n2)."""

    params: ParamSchedule
    n: tuple

    def __post_init__(self):
        n1, n2 = self.n
        if n1 < 0 or n2 < 0 or n1 != int(n1) or n2 != int(n2):
            raise ValueError(f"tile index must be a pair of nonnegative integers, got {self.n}")

    def contains(self, p: Point3) -> bool:
        s = self.params
        scale = math.exp(-(self.n[0] + self.n[1]))
        x1, x2, y = _f(p.x1), _f(p.x2), _f(p.y)
        prod = abs(x1 * x2) * y
        ce = _f(s.c) * _f(math.exp(-1.0))
        return (
            _f(s.a) < prod <= _f(s.b)
            and ce < abs(x1) <= _f(s.c)
            and ce < abs(x2) <= _f(s.c)
            and _f(scale) <= y <= _f(s.T) * _f(scale)
        )

    def contains_arrays(self, x1, x2, y):
        s = self.params
        scale = math.exp(-(self.n[0] + self.n[1]))
        prod = np.abs(x1 * x2) * y
        ce = s.c * math.exp(-1.0)
        return (
            (prod > s.a)
            & (prod <= s.b)
            & (np.abs(x1) > ce)
            & (np.abs(x1) <= s.c)
            & (np.abs(x2) > ce)
            & (np.abs(x2) <= s.c)
            & (y >= scale)
            & (y <= s.T * scale)
        )

    def bounding_box(self) -> "Box":
        s = self.params
        scale = math.exp(-(self.n[0] + self.n[1]))
        return Box((-s.c, s.c), (-s.c, s.c), (scale, s.T * scale))


@dataclass(frozen=True)
class Upsilon:
    """Thin hyperbolic strip: |x1*x2|*y <= a, max(|x1|,|x2|) <= 1/2, 1 <= y <= T."""

    params: ParamSchedule

    def contains(self, p: Point3) -> bool:
        s = self.params
        x1, x2, y = _f(p.x1), _f(p.x2), _f(p.y)
        return (
            abs(x1 * x2) * y <= _f(s.a)
            and max(abs(x1), abs(x2)) <= 0.5
            and 1.0 <= y <= _f(s.T)
        )

    def contains_arrays(self, x1, x2, y):
        s = self.params
        return (
            (np.abs(x1 * x2) * y <= s.a)
            & (np.maximum(np.abs(x1), np.abs(x2)) <= 0.5)
            & (y >= 1.0)
            & (y <= s.T)
        )

    def bounding_box(self) -> "Box":
        return Box((-0.5, 0.5), (-0.5, 0.5), (1.0, self.params.T))


@dataclass(frozen=True)
class Xi:
    """Planar hyperbola neighborhood: x in [-1,1]^2 with |x1*x2| <= gamma (y ignored)."""

    gamma: float

    def __post_init__(self):
        if not self.gamma > 0:
            raise ValueError(f"gamma must be positive, got {self.gamma}")

    def contains(self, p: Point3) -> bool:
        x1, x2 = _f(p.x1), _f(p.x2)
        return abs(x1) <= 1.0 and abs(x2) <= 1.0 and abs(x1 * x2) <= _f(self.gamma)

    def contains_arrays(self, x1, x2, y=None):
        return (np.abs(x1) <= 1.0) & (np.abs(x2) <= 1.0) & (np.abs(x1 * x2) <= self.gamma)


@dataclass(frozen=True)
class Box:
    """Axis-aligned closed box (x1, x2, y ranges)."""

    x1_range: tuple
    x2_range: tuple
    y_range: tuple

    def __post_init__(self):
        for lo, hi in (self.x1_range, self.x2_range, self.y_range):
            if not (math.isfinite(lo) and math.isfinite(hi) and lo <= hi):
                raise ValueError(f"bad box range ({lo}, {hi})")

    def contains(self, p: Point3) -> bool:
        return (
            self.x1_range[0] <= p.x1 <= self.x1_range[1]
            and self.x2_range[0] <= p.x2 <= self.x2_range[1]
            and self.y_range[0] <= p.y <= self.y_range[1]
        )

    def contains_arrays(self, x1, x2, y):
        return (
            (x1 >= self.x1_range[0])
            & (x1 <= self.x1_range[1])
            & (x2 >= self.x2_range[0])
            & (x2 <= self.x2_range[1])
            & (y >= self.y_range[0])
            & (y <= self.y_range[1])
        )

    def bounding_box(self) -> "Box":
        return self

    @property
    def volume(self) -> float:
        return (
            (self.x1_range[1] - self.x1_range[0])
            * (self.x2_range[1] - self.x2_range[0])
            * (self.y_range[1] - self.y_range[0])
        )


DomainSet = Union[Omega, DeltaTn, Upsilon, Xi, Box]


def contains(dset: DomainSet, p: Point3) -> bool:
    """Exact membership with the defining boundary strictness of each set."""
    return dset.contains(p)
