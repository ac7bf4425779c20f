"""Root bracketing and refinement shared by the geometry modules."""

from __future__ import annotations

from typing import Callable

import numpy as np


def sign_change_brackets(t: np.ndarray, values: np.ndarray) -> list[tuple[float, float]]:
    """Intervals [t_i, t_{i+1}] on which ``values`` changes sign.

    Exact zeros on the grid are pushed to the interval on their right so a
    root sitting on a node is reported once.
    """
    sgn = np.sign(values)
    for i in range(len(sgn)):
        if sgn[i] == 0:
            sgn[i] = sgn[i - 1] if i > 0 and sgn[i - 1] != 0 else 1.0
    idx = np.nonzero(sgn[:-1] * sgn[1:] < 0)[0]
    return [(float(t[i]), float(t[i + 1])) for i in idx]


def bisect(fn: Callable[[float], float], a: float, b: float, width: float = 1e-10,
           fa: float | None = None) -> tuple[float, float]:
    """Shrink a sign-change bracket to the requested width."""
    fa = fn(a) if fa is None else fa
    while b - a > width:
        m = 0.5 * (a + b)
        fm = fn(m)
        if fm == 0.0:
            return m, m
        if np.sign(fm) == np.sign(fa):
            a, fa = m, fm
        else:
            b = m
    return a, b


def refine_root(fn: Callable[[float], float], dfn: Callable[[float], float] | None,
                a: float, b: float, width: float = 1e-10) -> float:
    """Bisection to ``width`` followed by one Newton polish kept inside the bracket."""
    lo, hi = bisect(fn, a, b, width)
    x = 0.5 * (lo + hi)
    if dfn is not None:
        d = dfn(x)
        if d != 0.0 and np.isfinite(d):
            y = x - fn(x) / d
            if lo - width <= y <= hi + width:
                x = y
    return float(x)


def golden_minimum(fn: Callable[[float], float], a: float, b: float,
                   tol: float = 1e-12, maxiter: int = 200) -> tuple[float, float]:
    """Golden-section search for a minimum of ``fn`` on [a, b]."""
    g = 0.5 * (np.sqrt(5.0) - 1.0)
    c = b - g * (b - a)
    d = a + g * (b - a)
    fc, fd = fn(c), fn(d)
    for _ in range(maxiter):
        if b - a < tol:
            break
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - g * (b - a)
            fc = fn(c)
        else:
            a, c, fc = c, d, fd
            d = a + g * (b - a)
            fd = fn(d)
    x = 0.5 * (a + b)
    return x, fn(x)


def bracketed_newton(fn: Callable[[np.ndarray], np.ndarray], dfn: Callable[[np.ndarray], np.ndarray],
                     lo, hi, tol: float = 1e-14, maxiter: int = 100) -> np.ndarray:
    """Vectorised Newton iteration safeguarded by the sign-change brackets [lo, hi].

    ``fn`` must change sign on every bracket; a Newton step leaving its
    bracket is replaced by the midpoint.
    """
    lo = np.array(lo, dtype=float)
    hi = np.array(hi, dtype=float)
    s_lo = np.sign(fn(lo))
    x = 0.5 * (lo + hi)
    for _ in range(maxiter):
        r = fn(x)
        done = (np.abs(r) <= tol) | (hi - lo < 1e-15)
        if np.all(done):
            break
        left = np.sign(r) == s_lo
        lo = np.where(left, x, lo)
        hi = np.where(left, hi, x)
        d = dfn(x)
        with np.errstate(divide="ignore", invalid="ignore"):
            xn = x - r / d
        bad = ~np.isfinite(xn) | (xn <= lo) | (xn >= hi)
        xn = np.where(bad, 0.5 * (lo + hi), xn)
        x = np.where(done, x, xn)
    return x
