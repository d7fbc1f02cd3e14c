"""Closed-form areas/volumes of the model sets and their independent oracles.

Every closed form here has two oracle routes that know nothing about the
formula: an adaptive-quadrature evaluation built from the raw set
definition (Fubini over one coordinate, interval lengths for the inner
one), and a seeded Monte Carlo estimate over the bounding box.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .domains import ParamSchedule
from .mc import MCAccumulator, map_blocks
from .quadrature import adaptive_simpson

__all__ = [
    "RegimeError",
    "VolumeReport",
    "xi_area",
    "xi_area_difference_bound",
    "omega_section_area",
    "omega_volume",
    "weighted_mean",
    "upsilon_section_area",
    "xi_area_quad",
    "omega_section_area_quad",
    "omega_volume_quad",
    "weighted_mean_quad",
    "upsilon_section_area_quad",
    "xi_area_mc",
    "omega_section_area_mc",
    "omega_volume_mc",
    "weighted_mean_mc",
]


class RegimeError(ValueError):
    """A closed form was requested outside its hypothesis window."""


@dataclass
class VolumeReport:
    """A closed form next to one oracle evaluation of the same quantity."""

    closed_form: float
    oracle_value: float
    method: str  # "Quadrature" | "MonteCarlo"
    samples_or_nodes: int
    stderr: Optional[float] = None
    abs_error: float = field(init=False)

    def __post_init__(self):
        self.abs_error = abs(self.closed_form - self.oracle_value)

    def to_dict(self) -> dict:
        out = {
            "closed_form": self.closed_form,
            "oracle_value": self.oracle_value,
            "abs_error": self.abs_error,
            "method": self.method,
            "samples_or_nodes": self.samples_or_nodes,
        }
        if self.stderr is not None:
            out["stderr"] = self.stderr
        return out


# ---------------------------------------------------------------------------
# Closed forms
# ---------------------------------------------------------------------------


def xi_area(gamma: float) -> float:
    """Area of {x in [-1,1]^2 : |x1*x2| <= gamma}.

    Equals 4*gamma*(1 - ln gamma) for gamma < 1 and exactly 4 for
    gamma >= 1 (the set is the whole square there, where the
    4*min(1, gamma*(1-ln gamma)) form would be wrong).
    """
    if not gamma > 0:
        raise ValueError(f"gamma must be positive, got {gamma}")
    if gamma >= 1.0:
        return 4.0
    return 4.0 * gamma * (1.0 - math.log(gamma))


def xi_area_difference_bound(g1: float, g2: float) -> float:
    """Mean-value bound 4*|ln min(1, g1)|*(g2 - g1) >= xi_area(g2) - xi_area(g1)."""
    if not (0 < g1 < g2):
        raise ValueError(f"need 0 < g1 < g2, got {g1}, {g2}")
    return 4.0 * abs(math.log(min(1.0, g1))) * (g2 - g1)


def _xlogx(v: float) -> float:
    # v*ln(v) extended by continuity to 0 at v = 0.
    return v * math.log(v) if v > 0.0 else 0.0


def _require_section_regime(s: ParamSchedule) -> None:
    if s.b > s.c ** 2:
        raise RegimeError(
            f"closed form requires b <= c^2 (got b={s.b!r}, c^2={s.c ** 2!r}); "
            "use the quadrature oracle outside this regime"
        )


def omega_section_area(s: ParamSchedule, y: float) -> float:
    """Area of the y-section of the hyperbolic strip, for b <= c^2.

    (4*ln(y)/y)*(b-a) + (4/y)*((b-a)*(1+2*ln c) - b*ln b + a*ln a),
    with a*ln a read as 0 when a = 0.
    """
    _require_section_regime(s)
    if not (1.0 <= y <= s.T):
        raise ValueError(f"y must lie in [1, T], got y={y!r}, T={s.T!r}")
    ba = s.b - s.a
    const = ba * (1.0 + 2.0 * math.log(s.c)) - _xlogx(s.b) + _xlogx(s.a)
    return (4.0 * math.log(y) / y) * ba + (4.0 / y) * const


def omega_volume(s: ParamSchedule) -> float:
    """Volume of the hyperbolic strip, for b <= c^2.

    2*(ln T)^2*(b-a) + 4*ln(T)*((b-a)*(1+2*ln c) - b*ln b + a*ln a);
    this is the y-integral of ``omega_section_area`` over [1, T].
    """
    _require_section_regime(s)
    lnT = s.log_T
    ba = s.b - s.a
    const = ba * (1.0 + 2.0 * math.log(s.c)) - _xlogx(s.b) + _xlogx(s.a)
    return 2.0 * lnT ** 2 * ba + 4.0 * lnT * const


def weighted_mean(s: ParamSchedule, h: Callable[[float], float], nodes: int = 256) -> float:
    """Integral over y in [1, T] of h(y/T) * section_area(y).

    Uses adaptive quadrature on top of the closed-form section area; with
    h == 1 on [0, 1] this collapses to ``omega_volume``.  ``nodes`` sets the
    initial uniform panel count (>= 64).
    """
    _require_section_regime(s)
    if nodes < 64:
        raise ValueError(f"nodes must be >= 64, got {nodes}")
    probe = np.linspace(0.0, 1.0, 257)
    vals = np.array([h(float(u)) for u in probe], dtype=float)
    if not np.all(np.isfinite(vals)):
        raise ValueError("h takes non-finite values on [0, 1]")

    def integrand(y: float) -> float:
        return h(y / s.T) * omega_section_area(s, y)

    # Section regime changes where the product window hits the coordinate cap.
    points = [p for p in (s.a / s.c ** 2, s.b / s.c ** 2) if 1.0 < p < s.T]
    n_panels = max(64, int(nodes)) // max(1, len(points) + 1)
    return adaptive_simpson(integrand, 1.0, s.T, tol=1e-10, points=points, min_panels=n_panels)


def upsilon_section_area(s: ParamSchedule, q: int) -> float:
    """Area of {x : |x1*x2| <= a/q, max |x_i| <= 1/2} = xi_area(4a/q)/4."""
    if q < 1:
        raise ValueError(f"q must be a positive integer, got {q}")
    if s.a == 0.0:
        return 0.0
    return xi_area(4.0 * s.a / q) / 4.0


# ---------------------------------------------------------------------------
# Quadrature oracles (built from the set definitions only)
# ---------------------------------------------------------------------------


def xi_area_quad(gamma: float, tol: float = 1e-10) -> float:
    """Quadrature of the xi set area: 4 * integral_0^1 min(1, gamma/u) du."""
    if not gamma > 0:
        raise ValueError(f"gamma must be positive, got {gamma}")
    g = min(gamma, 1.0)

    def f(u: float) -> float:
        return 1.0 if u <= g else g / u if gamma < 1.0 else 1.0

    return 4.0 * adaptive_simpson(f, 0.0, 1.0, tol=tol, points=[g], min_panels=8)


def omega_section_area_quad(s: ParamSchedule, y: float, tol: float = 1e-11) -> float:
    """Quadrature of the y-section area from the raw inequalities.

    Works in any regime (no b <= c^2 hypothesis): Fubini over x1 with the
    exact x2-interval length inside.
    """
    if y <= 0:
        raise ValueError("y must be positive")
    a, b, c = s.a, s.b, s.c

    def seg_len(u: float) -> float:
        if u <= 0.0:
            return 0.0
        hi = min(c, b / (y * u))
        lo = a / (y * u)
        return max(0.0, hi - lo)

    points = [p for p in (a / (y * c), b / (y * c)) if 0.0 < p < c]
    return 4.0 * adaptive_simpson(seg_len, 0.0, c, tol=tol, points=points, min_panels=8)


def omega_volume_quad(s: ParamSchedule, tol: float = 1e-9) -> float:
    """Quadrature of the strip volume from the raw inequalities.

    4 * integral over (u, v) in (0, c]^2 of |{y in [1, T] : a < u*v*y <= b}|,
    nested 1D adaptive with exact inner interval lengths.
    """
    a, b, c, T = s.a, s.b, s.c, s.T

    def inner(u: float) -> float:
        if u <= 0.0:
            return 0.0

        def y_len(v: float) -> float:
            if v <= 0.0:
                return 0.0
            uv = u * v
            hi = min(T, b / uv)
            lo = max(1.0, a / uv) if a > 0.0 else 1.0
            return max(0.0, hi - lo)

        pts = [p for p in (b / (u * T), b / u, a / (u * T), a / u if a > 0 else -1.0) if 0.0 < p < c]
        return adaptive_simpson(y_len, 0.0, c, tol=tol * 1e-3, points=pts, min_panels=4)

    pts_u = [p for p in (b / T, b, a / T, a) if 0.0 < p < c]
    return 4.0 * adaptive_simpson(inner, 0.0, c, tol=tol, points=pts_u, min_panels=4)


def weighted_mean_quad(
    s: ParamSchedule, h: Callable[[float], float], tol: float = 1e-10
) -> float:
    """Quadrature of integral h(y/T) * section_area(y) dy with the section
    area itself evaluated by quadrature (fully formula-free route)."""

    def integrand(y: float) -> float:
        return h(y / s.T) * omega_section_area_quad(s, y, tol=1e-12)

    points = [p for p in (s.a / s.c ** 2, s.b / s.c ** 2) if 1.0 < p < s.T]
    return adaptive_simpson(integrand, 1.0, s.T, tol=tol, points=points, min_panels=16)


def upsilon_section_area_quad(s: ParamSchedule, q: int, tol: float = 1e-10) -> float:
    """Quadrature of the thin-strip section area from its inequalities."""
    if s.a == 0.0:
        return 0.0
    thr = s.a / q

    def seg_len(u: float) -> float:
        if u <= 0.0:
            return 0.5
        return min(0.5, thr / u)

    split = min(0.5, thr / 0.5)
    return 4.0 * adaptive_simpson(seg_len, 0.0, 0.5, tol=tol, points=[split], min_panels=8)


# ---------------------------------------------------------------------------
# Monte Carlo oracles (seeded, blocked, thread-count invariant)
# ---------------------------------------------------------------------------


def _mc_indicator(name, seed, threads, samples, box_volume, sampler):
    acc = MCAccumulator()

    def job(i, rng, size):
        return sampler(rng, size)

    for n, tot, tot_sq in map_blocks(job, samples, seed, name, threads):
        acc.add_block_moments(n, tot, tot_sq)
    return box_volume * acc.mean, box_volume * acc.stderr


def xi_area_mc(gamma: float, samples: int = 10 ** 7, seed: int = 0, threads: int = 1):
    """MC estimate of the xi set area over [-1,1]^2; returns (estimate, stderr)."""

    def sampler(rng, size):
        x = rng.uniform(-1.0, 1.0, size=(size, 2))
        ind = (np.abs(x[:, 0] * x[:, 1]) <= gamma).astype(np.float64)
        return size, float(ind.sum()), float(ind.sum())  # indicator**2 == indicator

    return _mc_indicator("vol.xi", seed, threads, samples, 4.0, sampler)


def omega_section_area_mc(
    s: ParamSchedule, y: float, samples: int = 10 ** 6, seed: int = 0, threads: int = 1
):
    """MC estimate of the y-section area over [-c,c]^2; returns (estimate, stderr)."""
    c = s.c

    def sampler(rng, size):
        x = rng.uniform(-c, c, size=(size, 2))
        prod = np.abs(x[:, 0] * x[:, 1]) * y
        ind = ((prod > s.a) & (prod <= s.b)).astype(np.float64)
        return size, float(ind.sum()), float(ind.sum())

    return _mc_indicator(f"vol.section@{y!r}", seed, threads, samples, 4.0 * c * c, sampler)


def omega_volume_mc(s: ParamSchedule, samples: int = 10 ** 7, seed: int = 0, threads: int = 1):
    """MC estimate of the strip volume over [-c,c]^2 x [1,T]; (estimate, stderr)."""
    c, T = s.c, s.T
    box = 4.0 * c * c * (T - 1.0)

    def sampler(rng, size):
        x1 = rng.uniform(-c, c, size=size)
        x2 = rng.uniform(-c, c, size=size)
        y = rng.uniform(1.0, T, size=size)
        prod = np.abs(x1 * x2) * y
        ind = ((prod > s.a) & (prod <= s.b)).astype(np.float64)
        return size, float(ind.sum()), float(ind.sum())

    return _mc_indicator("vol.omega", seed, threads, samples, box, sampler)


def weighted_mean_mc(
    s: ParamSchedule,
    h: Callable[[np.ndarray], np.ndarray],
    samples: int = 10 ** 7,
    seed: int = 0,
    threads: int = 1,
):
    """MC estimate of integral h(y/T)*chi_Omega over the bounding box.

    ``h`` must accept numpy arrays (plain scalar callables are wrapped).
    Returns (estimate, stderr).
    """
    c, T = s.c, s.T
    box = 4.0 * c * c * (T - 1.0)
    h_vec = h if isinstance(h, np.vectorize) else np.vectorize(h, otypes=[np.float64])

    def sampler(rng, size):
        x1 = rng.uniform(-c, c, size=size)
        x2 = rng.uniform(-c, c, size=size)
        y = rng.uniform(1.0, T, size=size)
        prod = np.abs(x1 * x2) * y
        ind = (prod > s.a) & (prod <= s.b)
        vals = np.zeros(size, dtype=np.float64)
        if np.any(ind):
            vals[ind] = np.asarray(h_vec(y[ind] / T), dtype=np.float64)
        if not np.all(np.isfinite(vals)):
            raise ValueError("h takes non-finite values")
        return size, float(vals.sum()), float(np.square(vals).sum())

    return _mc_indicator("vol.weighted", seed, threads, samples, box, sampler)
