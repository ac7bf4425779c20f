"""Angle function, parallel points, parallel-arc sets and pair continuation.

Tangent directions are handled through the continuous lift ``theta`` of the
tangent angle. Two parameters form a parallel pair when their lifts differ
by an integer multiple of pi. All level comparisons are done on the lift,
arc by arc, so the reduction modulo pi never has to be compared directly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .curve import (GRID, TWO_PI, FourierCurve, inflexion_points, rotation_number,
                    signed_curvature, tangent_angle_lift, turning_rate)
from .errors import ContinuationStall, OriginOnInflexion, TangentCoincidence
from .roots import bracketed_newton, refine_root

PI = math.pi
MAX_DPSI = PI / 256
COLLISION_TOL = 1e-9
LEVEL_TOL = 1e-10


def _wrap(a):
    return (np.asarray(a) + PI) % TWO_PI - PI


def opposite_curvature(curve: FourierCurve, s, t):
    """Curvature at f(t) for the local orientation opposite to the tangent at f(s).

    This is the sign convention under which a parallel pair (a, b) gives a
    singular equidistant point exactly when (1 - lam) k_a = lam k_b.
    For a circle and its antipodal pairs it returns +1/r.
    """
    da = curve.derivative(s, 1)
    db = curve.derivative(t, 1)
    same = np.sign((da * db).sum(-1))
    out = -same * signed_curvature(curve, t)
    return float(out) if np.ndim(out) == 0 else out


@dataclass(frozen=True)
class Extremum:
    t: float
    theta: float
    psi: float
    kind: str


@dataclass(frozen=True, eq=False)
class AngleFunction:
    """Lift of the tangent angle with its local extrema.

    ``grid_t``/``grid_theta`` sample the lift on [0, 2*pi]; ``origin`` is the
    base parameter, chosen away from inflexions.
    """

    curve: FourierCurve
    grid_t: np.ndarray
    grid_theta: np.ndarray
    origin: float
    rotation: int
    extrema: tuple[Extremum, ...]

    def theta(self, t):
        t = np.asarray(t, dtype=float)
        turns = np.floor(t / TWO_PI)
        tau = t - turns * TWO_PI
        base = np.interp(tau, self.grid_t, self.grid_theta)
        d1 = self.curve.derivative(tau, 1)
        raw = np.arctan2(d1[..., 1], d1[..., 0])
        out = base + _wrap(raw - base) + TWO_PI * self.rotation * turns
        return float(out) if out.ndim == 0 else out

    def psi(self, t):
        out = np.mod(self.theta(t), PI)
        return float(out) if np.ndim(out) == 0 else out

    def dtheta(self, t):
        return turning_rate(self.curve, t)

    @property
    def base_direction(self) -> np.ndarray:
        return self.curve.derivative(self.origin, 1)

    def pieces(self) -> list[tuple[float, float]]:
        """Parameter intervals on which the lift is strictly monotone."""
        if not self.extrema:
            return [(self.origin, self.origin + TWO_PI)]
        ts = [e.t for e in self.extrema]
        out = [(ts[i], ts[i + 1]) for i in range(len(ts) - 1)]
        out.append((ts[-1], ts[0] + TWO_PI))
        return out


def angle_function(curve: FourierCurve, samples: int = GRID) -> AngleFunction:
    """Lift the tangent angle and locate its extrema (the inflexions)."""
    grid_t, grid_theta = tangent_angle_lift(curve, samples)
    rot = rotation_number(curve, samples)
    infl = inflexion_points(curve, samples)
    pre = AngleFunction(curve, grid_t, grid_theta, 0.0, rot, ())
    extrema = []
    for p in infl:
        th = pre.theta(p.t)
        kind = "max" if p.slope_sign < 0 else "min"
        extrema.append(Extremum(p.t, th, th % PI, kind))
    origin = None
    for j in range(101):
        cand = j * TWO_PI / 101
        if all(min((cand - e.t) % TWO_PI, (e.t - cand) % TWO_PI) > 1e-6 for e in extrema):
            origin = cand
            break
    if origin is None:
        raise OriginOnInflexion("no parameter shift avoids an inflexion at the origin")
    return AngleFunction(curve, grid_t, grid_theta, origin, rot, tuple(extrema))


@dataclass(frozen=True)
class ParallelPoint:
    index: int
    t: float
    theta: float
    level: int
    turn: int
    is_extremum: bool


@dataclass(frozen=True)
class Arc:
    """Arc of M from point ``start`` to point ``end`` (indices into S_M).

    ``lo``/``hi`` name the endpoints where the angle equals the lower/upper
    level of the arc's angle interval.
    """

    index: int
    start: int
    end: int
    t0: float
    t1: float
    theta0: float
    theta1: float
    gap: int

    @property
    def rising(self) -> bool:
        return self.theta1 > self.theta0

    @property
    def lo(self) -> int:
        return self.start if self.rising else self.end

    @property
    def hi(self) -> int:
        return self.end if self.rising else self.start

    @property
    def theta_lo(self) -> float:
        return min(self.theta0, self.theta1)

    @property
    def t_lo(self) -> float:
        return self.t0 if self.rising else self.t1

    @property
    def t_hi(self) -> float:
        return self.t1 if self.rising else self.t0

    def label(self) -> str:
        return f"p{self.lo}p{self.hi}"


@dataclass(frozen=True)
class ArcSolution:
    arc: int
    u: np.ndarray
    t: np.ndarray


@dataclass(frozen=True, eq=False)
class ParallelStructure:
    """S_M, its marked points, the arcs between them and the sets of parallel arcs."""

    curve: FourierCurve
    angle: AngleFunction
    levels: np.ndarray
    points: tuple[ParallelPoint, ...]
    arcs: tuple[Arc, ...] = ()
    sets: tuple[tuple[int, ...], ...] = ()
    max_dpsi: float = MAX_DPSI
    max_dt: float = TWO_PI / 512
    _cache: dict = field(default_factory=dict, repr=False)

    @property
    def size(self) -> int:
        return len(self.points)

    @property
    def m(self) -> int:
        return len(self.points) // 2

    @property
    def params(self) -> np.ndarray:
        return np.array([p.t for p in self.points])

    def next_index(self, k: int) -> int:
        return (k + 1) % self.size

    def prev_index(self, k: int) -> int:
        return (k - 1) % self.size

    def wrap_min(self, k: int, l: int) -> int:
        """Index of the arc joining adjacent points k and l (wrap-around minimum)."""
        n = self.size
        if (k + 1) % n == l:
            return k
        if (l + 1) % n == k:
            return l
        raise ValueError(f"p{k} and p{l} are not adjacent")

    def wrap_max(self, k: int, l: int) -> int:
        return self.next_index(self.wrap_min(k, l))

    def is_extremum(self, k: int) -> bool:
        return self.points[k].is_extremum

    def arcs_at(self, k: int) -> tuple[int, int]:
        """The two arcs having p_k as an endpoint."""
        return (self.prev_index(k), k)

    def gap_bounds(self, gap: int) -> tuple[float, float]:
        lv = self.levels
        if len(lv) == 1:
            return float(lv[0]), float(lv[0] + PI)
        if gap < len(lv) - 1:
            return float(lv[gap]), float(lv[gap + 1])
        return float(lv[-1]), float(lv[0] + PI)

    def level_grid(self, gap: int) -> np.ndarray:
        """Common angle levels at which every arc of one set is sampled."""
        key = ("grid", gap)
        if key in self._cache:
            return self._cache[key]
        lo, hi = self.gap_bounds(gap)
        n = max(2, int(math.ceil((hi - lo) / self.max_dpsi)))
        parts = [np.linspace(lo, hi, n + 1)]
        for ai in self.sets[gap]:
            arc = self.arcs[ai]
            m = max(2, int(math.ceil(abs(arc.t1 - arc.t0) / self.max_dt)))
            ts = np.linspace(arc.t0, arc.t1, m + 1)[1:-1]
            parts.append(self.angle.theta(ts) - arc.theta_lo + lo)
        u = np.unique(np.clip(np.concatenate(parts), lo, hi))
        keep = np.concatenate([[True], np.diff(u) > 1e-12])
        u = u[keep]
        u[0], u[-1] = lo, hi
        self._cache[key] = u
        return u

    def arc_solution(self, ai: int) -> ArcSolution:
        key = ("arc", ai)
        if key in self._cache:
            return self._cache[key]
        arc = self.arcs[ai]
        lo, _ = self.gap_bounds(arc.gap)
        u = self.level_grid(arc.gap)
        t = solve_on_arc(self.angle, arc, arc.theta_lo + (u - lo))
        t[0], t[-1] = arc.t_lo, arc.t_hi
        sol = ArcSolution(ai, u, t)
        self._cache[key] = sol
        return sol

    def solve_at(self, ai: int, u: float) -> float:
        """Parameter on arc ``ai`` whose angle level is ``u``."""
        return float(self.solve_levels(ai, np.array([u]))[0])

    def solve_levels(self, ai: int, u: np.ndarray) -> np.ndarray:
        """Parameters on arc ``ai`` at the angle levels ``u`` (vectorised)."""
        arc = self.arcs[ai]
        lo, _ = self.gap_bounds(arc.gap)
        key = ("sample", ai)
        if key not in self._cache:
            self._cache[key] = arc_sample(self.angle, arc)
        u = np.atleast_1d(np.asarray(u, dtype=float))
        return solve_on_arc(self.angle, arc, arc.theta_lo + (u - lo), self._cache[key])


def arc_sample(angle: AngleFunction, arc: Arc) -> tuple[np.ndarray, np.ndarray]:
    """Dense sample (t, theta) of the lift along an arc, used by the predictor."""
    a, b = min(arc.t0, arc.t1), max(arc.t0, arc.t1)
    n = max(64, int(math.ceil((b - a) / (TWO_PI / 2048))))
    ts = np.linspace(a, b, n + 1)
    return ts, angle.theta(ts)


def solve_on_arc(angle: AngleFunction, arc: Arc, targets: np.ndarray,
                 sample: tuple[np.ndarray, np.ndarray] | None = None) -> np.ndarray:
    """Vectorised predictor-corrector for theta(t) = target on a monotone arc.

    The predictor inverts a dense monotone sample of the lift; the corrector
    is Newton's method safeguarded by bisection inside the sample bracket.
    """
    targets = np.atleast_1d(np.asarray(targets, dtype=float))
    ts, th = sample if sample is not None else arc_sample(angle, arc)
    n = len(ts) - 1
    sign = 1.0 if th[-1] >= th[0] else -1.0
    th_s = sign * th
    tg = sign * targets
    if np.any(np.diff(th_s) < 0):
        raise ContinuationStall(f"angle not monotone on arc {arc.index}")
    tol_edge = 1e-9
    if np.any(tg < th_s[0] - tol_edge) or np.any(tg > th_s[-1] + tol_edge):
        raise ContinuationStall(f"level outside the range of arc {arc.index}")
    tg = np.clip(tg, th_s[0], th_s[-1])
    idx = np.clip(np.searchsorted(th_s, tg) - 1, 0, n - 1)
    lo = ts[idx]
    hi = ts[idx + 1]
    x = np.interp(tg, th_s, ts)
    for _ in range(80):
        r = sign * angle.theta(x) - tg
        done = np.abs(r) <= LEVEL_TOL * 0.01
        if np.all(done | (hi - lo < 1e-15)):
            break
        lo = np.where(r < 0, x, lo)
        hi = np.where(r > 0, x, hi)
        d = sign * angle.dtheta(x)
        with np.errstate(divide="ignore", invalid="ignore"):
            xn = x - r / d
        bad = ~np.isfinite(xn) | (xn <= lo) | (xn >= hi)
        xn = np.where(bad, 0.5 * (lo + hi), xn)
        x = np.where(done, x, xn)
    r = np.abs(sign * angle.theta(x) - tg)
    if np.any(r > LEVEL_TOL):
        i = int(np.argmax(r))
        raise ContinuationStall(
            f"corrector failed on arc {arc.index} at level {targets[i]:.12f} (residual {r[i]:.2e})")
    return x


def parallel_points(angle: AngleFunction) -> ParallelStructure:
    """Sequence of parallel points: preimages of the extremal angle levels."""
    if angle.extrema:
        levels = sorted({e.psi for e in angle.extrema})
    else:
        levels = [angle.psi(angle.origin)]
    levels = np.array(levels)
    found: list[tuple[float, bool]] = [(e.t, True) for e in angle.extrema]
    if not angle.extrema:
        found.append((angle.origin, False))
    extremum_theta = {e.t: e.theta for e in angle.extrema}
    for a, b in angle.pieces():
        ta = angle.theta(a)
        tb = angle.theta(b)
        lo, hi = min(ta, tb), max(ta, tb)
        for lv in levels:
            j0 = math.ceil((lo - lv) / PI - 1e-12)
            j1 = math.floor((hi - lv) / PI + 1e-12)
            for j in range(j0, j1 + 1):
                target = lv + j * PI
                if abs(target - ta) < 1e-12 or abs(target - tb) < 1e-12:
                    continue
                fn = lambda x, g=target: angle.theta(x) - g
                r = refine_root(fn, angle.dtheta, a, b)
                found.append((r, False))
    origin = angle.origin
    found.sort(key=lambda p: (p[0] - origin) % TWO_PI)
    ts = [((t - origin) % TWO_PI) + origin for t, _ in found]
    for i in range(len(ts)):
        nxt = ts[(i + 1) % len(ts)] + (TWO_PI if i == len(ts) - 1 else 0.0)
        if len(ts) > 1 and nxt - ts[i] < COLLISION_TOL:
            raise TangentCoincidence(f"parallel points collide near t={ts[i]:.9f}")
    if len(ts) % 2:
        raise TangentCoincidence(f"odd number of parallel points ({len(ts)})")
    points = []
    for i, ((t_raw, is_ext), t) in enumerate(zip(found, ts)):
        th = extremum_theta.get(t_raw) if is_ext else None
        if th is None:
            th = angle.theta(t)
        else:
            th = th + TWO_PI * angle.rotation * round((t - t_raw) / TWO_PI)
        psi = th % PI
        d = np.abs(((psi - levels) + 0.5 * PI) % PI - 0.5 * PI)
        lv = int(np.argmin(d))
        turn = int(round((th - levels[lv]) / PI))
        points.append(ParallelPoint(i, float(t), float(th), lv, turn, is_ext))
    return ParallelStructure(angle.curve, angle, levels, tuple(points))


def parallel_arc_sets(structure: ParallelStructure) -> ParallelStructure:
    """Split M at S_M and group the arcs by their angle interval."""
    pts = structure.points
    n = len(pts)
    lv = structure.levels
    rot = structure.angle.rotation
    arcs = []
    for k in range(n):
        p, q = pts[k], pts[(k + 1) % n]
        t1 = q.t + (TWO_PI if k == n - 1 else 0.0)
        th1 = q.theta + (TWO_PI * rot if k == n - 1 else 0.0)
        mid = (p.theta + th1) / 2 % PI
        if len(lv) == 1:
            gap = 0
        else:
            gap = int(np.searchsorted(lv, mid)) - 1
            if gap < 0:
                gap = len(lv) - 1
        arcs.append(Arc(k, k, (k + 1) % n, p.t, t1, p.theta, th1, gap))
    gaps = 1 if len(lv) == 1 else len(lv)
    sets = tuple(tuple(a.index for a in arcs if a.gap == g) for g in range(gaps))
    out = ParallelStructure(structure.curve, structure.angle, lv, pts, tuple(arcs), sets,
                            structure.max_dpsi, structure.max_dt)
    for a in arcs:
        lo, hi = out.gap_bounds(a.gap)
        width = abs(a.theta1 - a.theta0)
        if abs(width - (hi - lo)) > 1e-7 or abs(((a.theta_lo - lo) / PI) - round((a.theta_lo - lo) / PI)) > 1e-7:
            raise TangentCoincidence(f"arc {a.label()} does not span its angle interval")
    return out


def parallel_structure(curve: FourierCurve, samples: int = GRID,
                       max_dpsi: float = MAX_DPSI, max_dt: float | None = None) -> ParallelStructure:
    """Angle function, S_M and parallel-arc sets in one call."""
    angle = angle_function(curve, samples)
    base = parallel_points(angle)
    base = ParallelStructure(base.curve, base.angle, base.levels, base.points,
                             max_dpsi=max_dpsi, max_dt=max_dt or TWO_PI / 512)
    return parallel_arc_sets(base)


@dataclass(frozen=True)
class ParallelPairing:
    """Sampled map s -> t(s) between two arcs of one parallel set."""

    source: int
    target: int
    u: np.ndarray
    s: np.ndarray
    t: np.ndarray
    tolerance: float = LEVEL_TOL

    def derivative(self, curve: FourierCurve) -> np.ndarray:
        """t'(s) from the implicit relation theta(s) = theta(t) + const."""
        return turning_rate(curve, self.s) / turning_rate(curve, self.t)


def pair_continuation(structure: ParallelStructure, source: int, target: int) -> ParallelPairing:
    """Pair arc ``source`` with arc ``target`` over their common angle interval."""
    a, b = structure.arcs[source], structure.arcs[target]
    if source == target:
        raise ValueError("an arc cannot be paired with itself")
    if a.gap != b.gap:
        raise ValueError(f"arcs {a.label()} and {b.label()} lie in different parallel sets")
    sa = structure.arc_solution(source)
    sb = structure.arc_solution(target)
    return ParallelPairing(source, target, sa.u, sa.t, sb.t)


def parallel_partners(curve: FourierCurve, t: float, angle: AngleFunction | None = None) -> list[float]:
    """All other parameters whose tangent is parallel to the tangent at ``t``."""
    angle = angle or angle_function(curve)
    target0 = angle.theta(t)
    out = []
    brackets: list[tuple[float, float, float]] = []
    for a, b in angle.pieces():
        ta, tb = angle.theta(a), angle.theta(b)
        lo, hi = min(ta, tb), max(ta, tb)
        j0 = math.ceil((lo - target0) / PI - 1e-12)
        j1 = math.floor((hi - target0) / PI + 1e-12)
        for j in range(j0, j1 + 1):
            g = target0 + j * PI
            if abs(g - ta) < 1e-13:
                out.append(a % TWO_PI)
            elif abs(g - tb) < 1e-13:
                out.append(b % TWO_PI)
            else:
                brackets.append((a, b, g))
    if brackets:
        lo_, hi_, g_ = (np.array(v) for v in zip(*brackets))
        roots = bracketed_newton(lambda x: angle.theta(x) - g_, angle.dtheta, lo_, hi_)
        out.extend(float(r) % TWO_PI for r in np.atleast_1d(roots))
    out.sort()
    res: list[float] = []
    t0 = t % TWO_PI
    for r in out:
        if min(abs(r - t0), TWO_PI - abs(r - t0)) < COLLISION_TOL:
            continue
        if res and min(abs(r - res[-1]), TWO_PI - abs(r - res[-1])) < COLLISION_TOL:
            continue
        res.append(r)
    if len(res) > 1 and TWO_PI - (res[-1] - res[0]) < COLLISION_TOL:
        res.pop()
    return res
