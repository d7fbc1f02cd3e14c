"""Adaptive Simpson quadrature used by the volume oracles.

Deliberately small and self-contained so the oracle side of every
closed-form-vs-quadrature check shares no code with the closed forms.
Integrands with known kinks (regime changes of a section) pass the kink
locations as explicit split points.
"""

from __future__ import annotations

import math
from typing import Callable, Iterable, Optional

__all__ = ["adaptive_simpson"]


def _simpson(f, a, fa, b, fb):
    m = 0.5 * (a + b)
    fm = f(m)
    return m, fm, (b - a) / 6.0 * (fa + 4.0 * fm + fb)


def _recurse(f, a, fa, b, fb, m, fm, whole, tol, depth):
    lm, flm, left = _simpson(f, a, fa, m, fm)
    rm, frm, right = _simpson(f, m, fm, b, fb)
    delta = left + right - whole
    if depth <= 0 or abs(delta) <= 15.0 * tol:
        return left + right + delta / 15.0
    return _recurse(f, a, fa, m, fm, lm, flm, left, tol / 2.0, depth - 1) + _recurse(
        f, m, fm, b, fb, rm, frm, right, tol / 2.0, depth - 1
    )


def adaptive_simpson(
    f: Callable[[float], float],
    a: float,
    b: float,
    tol: float = 1e-9,
    points: Optional[Iterable[float]] = None,
    max_depth: int = 48,
    min_panels: int = 1,
) -> float:
    """Integrate f on [a, b] to absolute tolerance ~tol per panel.

    ``points`` are interior split locations (kinks); ``min_panels`` forces an
    initial uniform subdivision of each piece, which guards against the
    classic Simpson blind spot on symmetric integrands.
    """
    if not (math.isfinite(a) and math.isfinite(b)):
        raise ValueError("integration bounds must be finite")
    if a == b:
        return 0.0
    if a > b:
        return -adaptive_simpson(f, b, a, tol=tol, points=points, max_depth=max_depth)

    knots = [a, b]
    for p in points or ():
        if a < p < b:
            knots.append(float(p))
    knots = sorted(set(knots))

    total = 0.0
    for lo, hi in zip(knots[:-1], knots[1:]):
        n = max(1, int(min_panels))
        step = (hi - lo) / n
        for i in range(n):
            x0 = lo + i * step
            x1 = x0 + step
            f0, f1 = f(x0), f(x1)
            m, fm, whole = _simpson(f, x0, f0, x1, f1)
            total += _recurse(f, x0, f0, x1, f1, m, fm, whole, tol, max_depth)
    return total
