"""Smooth closed planar curves given by truncated trigonometric series.

A curve is

    x(t) = sum_k xc[k] cos(k t) + xs[k] sin(k t)
    y(t) = sum_k yc[k] cos(k t) + ys[k] sin(k t)

with period 2*pi. Derivatives of every order are evaluated term by term,
so curvature and its derivatives carry no finite-difference error.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import (DegenerateInflexion, InvalidInput, IrregularCurve,
                     LiftInconsistent, NonGeneric, NumericalFailure)
from .roots import refine_root, sign_change_brackets

TWO_PI = 2.0 * math.pi

REGULARITY_EPS = 1e-8
MAX_DEGREE = 64
GRID = 4096
EXTREMUM_TOL = 1e-6
PARALLEL_TOL = 1e-6
TOUCH_TOL = 1e-9


def _coeffs(values, name: str) -> np.ndarray:
    arr = np.asarray(values if values is not None else [], dtype=float).ravel()
    if not np.all(np.isfinite(arr)):
        raise InvalidInput(f"non-finite coefficient in {name}")
    return arr


@dataclass(frozen=True, eq=False)
class FourierCurve:
    """Closed curve from cosine/sine coefficients of x(t) and y(t).

    Index k of every array is harmonic k. The sine coefficient at index 0 is
    ignored. Construction rejects curves whose speed drops below
    ``REGULARITY_EPS`` on a dense sample.
    """

    xc: np.ndarray
    xs: np.ndarray
    yc: np.ndarray
    ys: np.ndarray
    label: str = ""
    max_degree: int = field(default=MAX_DEGREE, repr=False)

    def __post_init__(self) -> None:
        arrays = [_coeffs(getattr(self, n), n) for n in ("xc", "xs", "yc", "ys")]
        size = max(1, *(len(a) for a in arrays))
        if size - 1 > self.max_degree:
            raise InvalidInput(f"degree {size - 1} exceeds cap {self.max_degree}")
        padded = []
        for a in arrays:
            p = np.zeros(size)
            p[: len(a)] = a
            padded.append(p)
        padded[1][0] = 0.0
        padded[3][0] = 0.0
        for p in padded:
            p.flags.writeable = False
        for name, p in zip(("xc", "xs", "yc", "ys"), padded):
            object.__setattr__(self, name, p)
        object.__setattr__(self, "_k", np.arange(size, dtype=float))
        object.__setattr__(self, "_coef", {})
        t = np.linspace(0.0, TWO_PI, GRID, endpoint=False)
        speed = np.hypot(*self.derivative(t, 1).T)
        if speed.min() <= REGULARITY_EPS:
            raise IrregularCurve(f"curve speed {speed.min():.3e} below {REGULARITY_EPS}")

    @classmethod
    def from_complex(cls, coeffs: dict, label: str = "") -> "FourierCurve":
        """Curve z(t) = sum of c_k exp(i k t), keys k may be negative."""
        size = max(abs(int(k)) for k in coeffs) + 1
        xc, xs, yc, ys = (np.zeros(size) for _ in range(4))
        for k, c in coeffs.items():
            c = complex(c)
            a = abs(int(k))
            sgn = 1.0 if int(k) >= 0 else -1.0
            xc[a] += c.real
            yc[a] += c.imag
            xs[a] -= sgn * c.imag
            ys[a] += sgn * c.real
        return cls(xc, xs, yc, ys, label)

    @property
    def degree(self) -> int:
        return len(self.xc) - 1

    def derivative(self, t, order: int = 0) -> np.ndarray:
        """Exact ``order``-th derivative; returns shape (..., 2)."""
        t = np.asarray(t, dtype=float)
        coef = self._coef.get(order)
        if coef is None:
            scale = (self._k ** order if order else np.ones_like(self._k))[:, None]
            coef = (np.column_stack([self.xc, self.yc]) * scale,
                    np.column_stack([self.xs, self.ys]) * scale)
            self._coef[order] = coef
        phase = np.multiply.outer(t, self._k) + 0.5 * math.pi * order
        return np.cos(phase) @ coef[0] + np.sin(phase) @ coef[1]

    def __call__(self, t) -> np.ndarray:
        return self.derivative(t, 0)

    def derivatives(self, t, upto: int = 4) -> list[np.ndarray]:
        return [self.derivative(t, n) for n in range(upto + 1)]

    def reversed(self) -> "FourierCurve":
        """Same trace, opposite orientation (t -> -t)."""
        return FourierCurve(self.xc, -self.xs, self.yc, -self.ys, self.label)

    def transformed(self, matrix, offset=(0.0, 0.0)) -> "FourierCurve":
        """Image under the affine map p -> matrix @ p + offset."""
        a = np.asarray(matrix, dtype=float)
        xc = a[0, 0] * self.xc + a[0, 1] * self.yc
        yc = a[1, 0] * self.xc + a[1, 1] * self.yc
        xs = a[0, 0] * self.xs + a[0, 1] * self.ys
        ys = a[1, 0] * self.xs + a[1, 1] * self.ys
        xc = xc.copy()
        yc = yc.copy()
        xc[0] += offset[0]
        yc[0] += offset[1]
        return FourierCurve(xc, xs, yc, ys, self.label)

    def shifted(self, delta: float) -> "FourierCurve":
        """Reparametrise by t -> t + delta."""
        k = self._k
        c, s = np.cos(k * delta), np.sin(k * delta)
        return FourierCurve(self.xc * c + self.xs * s, self.xs * c - self.xc * s,
                            self.yc * c + self.ys * s, self.ys * c - self.yc * s,
                            self.label)

    def to_dict(self) -> dict:
        out = {"xc": self.xc.tolist(), "xs": self.xs.tolist(),
               "yc": self.yc.tolist(), "ys": self.ys.tolist()}
        if self.label:
            out["label"] = self.label
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "FourierCurve":
        if not isinstance(data, dict):
            raise InvalidInput("curve document must be a JSON object")
        missing = [k for k in ("xc", "xs", "yc", "ys") if k not in data]
        if missing:
            raise InvalidInput(f"curve document lacks {', '.join(missing)}")
        try:
            return cls(data["xc"], data["xs"], data["yc"], data["ys"],
                       str(data.get("label", "")))
        except (TypeError, ValueError) as exc:
            raise InvalidInput(str(exc)) from exc


def load_curve(path) -> FourierCurve:
    try:
        text = Path(path).read_text(encoding="utf-8")
        data = json.loads(text)
    except (OSError, UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise InvalidInput(f"cannot read curve file {path}: {exc}") from exc
    return FourierCurve.from_dict(data)


def save_curve(curve: FourierCurve, path) -> None:
    Path(path).write_text(json.dumps(curve.to_dict(), indent=2) + "\n", encoding="utf-8")


@dataclass(frozen=True)
class Jet:
    t: float
    position: np.ndarray
    d1: np.ndarray
    d2: np.ndarray
    d3: np.ndarray
    d4: np.ndarray
    kappa: float
    theta: float

    @property
    def tangent(self) -> np.ndarray:
        return self.d1 / np.linalg.norm(self.d1)

    @property
    def normal(self) -> np.ndarray:
        tx, ty = self.tangent
        return np.array([-ty, tx])


def _det(u: np.ndarray, v: np.ndarray) -> np.ndarray:
    return u[..., 0] * v[..., 1] - u[..., 1] * v[..., 0]


def evaluate_jet(curve: FourierCurve, t: float, theta: float | None = None) -> Jet:
    """Position, four derivatives and curvature at ``t``.

    ``theta`` is the caller's continuous tangent-angle lift; without one the
    principal value of the tangent direction is stored.
    """
    f = curve.derivatives(float(t), 4)
    speed = float(np.hypot(*f[1]))
    kappa = float(_det(f[1], f[2])) / speed ** 3
    if theta is None:
        theta = math.atan2(f[1][1], f[1][0])
    return Jet(float(t), f[0], f[1], f[2], f[3], f[4], kappa, float(theta))


def signed_curvature(curve: FourierCurve, t):
    d1, d2 = curve.derivative(t, 1), curve.derivative(t, 2)
    out = _det(d1, d2) / np.hypot(d1[..., 0], d1[..., 1]) ** 3
    return float(out) if np.ndim(out) == 0 else out


def curvature_derivative(curve: FourierCurve, t):
    """d(kappa)/dt with respect to the curve parameter."""
    d1, d2, d3 = (curve.derivative(t, n) for n in (1, 2, 3))
    sp2 = d1[..., 0] ** 2 + d1[..., 1] ** 2
    sp = np.sqrt(sp2)
    out = _det(d1, d3) / sp ** 3 - 3.0 * _det(d1, d2) * (d1 * d2).sum(-1) / sp ** 5
    return float(out) if np.ndim(out) == 0 else out


def turning_rate(curve: FourierCurve, t):
    """d(theta)/dt = kappa |f'|, the angle speed of the tangent."""
    d1, d2 = curve.derivative(t, 1), curve.derivative(t, 2)
    out = _det(d1, d2) / (d1[..., 0] ** 2 + d1[..., 1] ** 2)
    return float(out) if np.ndim(out) == 0 else out


def _turning_rate_slope(curve: FourierCurve, t: float) -> float:
    d1, d2, d3 = (curve.derivative(t, n) for n in (1, 2, 3))
    sp2 = float(d1 @ d1)
    return float(_det(d1, d3)) / sp2 - 2.0 * float(_det(d1, d2)) * float(d1 @ d2) / sp2 ** 2


def _turning_det(curve: FourierCurve, t: float) -> float:
    return float(_det(curve.derivative(t, 1), curve.derivative(t, 2)))


def _turning_det_slope(curve: FourierCurve, t: float) -> float:
    return float(_det(curve.derivative(t, 1), curve.derivative(t, 3)))


def tangent_angle_lift(curve: FourierCurve, samples: int = GRID) -> tuple[np.ndarray, np.ndarray]:
    """Continuous lift of the tangent direction on [0, 2*pi] (endpoint included).

    The grid is doubled until adjacent samples differ by less than pi/4.
    """
    n = samples
    while True:
        t = np.linspace(0.0, TWO_PI, n + 1)
        d1 = curve.derivative(t, 1)
        raw = np.arctan2(d1[:, 1], d1[:, 0])
        theta = np.unwrap(raw)
        if np.max(np.abs(np.diff(theta))) < 0.25 * math.pi:
            return t, theta
        if n >= 1 << 20:
            raise LiftInconsistent("tangent angle varies too fast to lift")
        n *= 2


def rotation_number(curve: FourierCurve, samples: int = GRID) -> int:
    _, theta = tangent_angle_lift(curve, samples)
    value = (theta[-1] - theta[0]) / TWO_PI
    r = round(value)
    if abs(value - r) >= 0.01:
        raise LiftInconsistent(f"tangent winding {value:.6f} is not an integer")
    return int(r)


@dataclass(frozen=True)
class InflexionPoint:
    t: float
    position: np.ndarray
    contact_order: int
    slope_sign: int


def inflexion_points(curve: FourierCurve, samples: int = GRID) -> list[InflexionPoint]:
    """Ordinary inflexions: simple zeros of the curvature on [0, 2*pi).

    Zeros are bracketed on a uniform grid, bisected to 1e-10 and polished by
    one Newton step. A zero whose angle function has second derivative below
    ``EXTREMUM_TOL``, or a near-touch of zero without a sign change, raises
    DegenerateInflexion.
    """
    t = np.linspace(0.0, TWO_PI, samples + 1)
    d1, d2 = curve.derivative(t, 1), curve.derivative(t, 2)
    det = _det(d1, d2)
    brackets = sign_change_brackets(t, det)
    # local minima of |det| that stay on one side of zero may hide a double
    # root or a pair of roots closer than the grid spacing
    mag = np.abs(det)
    slope = _det(d1, curve.derivative(t, 3))
    i = np.arange(1, samples)
    cand = i[(mag[i] <= mag[i - 1]) & (mag[i] <= mag[i + 1]) & (det[i - 1] * det[i + 1] > 0)
             & (det[i] * det[i - 1] > 0) & (slope[i - 1] * slope[i + 1] < 0)]
    for i in cand:
        a, b = t[i - 1], t[i + 1]
        c = refine_root(lambda x: _turning_det_slope(curve, x), None, a, b, 1e-13)
        dc = _turning_det(curve, c)
        speed2 = float(np.sum(curve.derivative(c, 1) ** 2))
        if abs(dc) / speed2 < TOUCH_TOL:
            raise DegenerateInflexion(f"curvature touches zero without crossing at t={c:.9f}")
        if np.sign(dc) != np.sign(det[i]):
            brackets.extend([(a, c), (c, b)])
    roots = []
    fn = lambda x: _turning_det(curve, x)
    dfn = lambda x: _turning_det_slope(curve, x)
    for a, b in sorted(brackets):
        r = refine_root(fn, dfn, a, b) % TWO_PI
        slope = _turning_rate_slope(curve, r)
        if abs(slope) < EXTREMUM_TOL:
            raise DegenerateInflexion(f"curvature zero at t={r:.9f} is not simple")
        roots.append((r, slope))
    roots.sort()
    out = []
    for r, slope in roots:
        if out and abs(r - out[-1].t) < 1e-9:
            continue
        out.append(InflexionPoint(r, curve(r), 2, int(np.sign(slope))))
    if len(out) > 1 and abs(out[0].t + TWO_PI - out[-1].t) < 1e-9:
        out.pop()
    if len(out) % 2:
        raise NumericalFailure(f"odd number of curvature zeros ({len(out)})")
    return out


@dataclass(frozen=True)
class GenericityReport:
    flags: tuple[str, ...]
    details: dict

    @property
    def generic(self) -> bool:
        return not self.flags


def _circ_dist(a: float, b: float, period: float) -> float:
    d = (a - b) % period
    return min(d, period - d)


def genericity_check(curve: FourierCurve, samples: int = GRID) -> GenericityReport:
    """Tolerance-based screen for the generic-position hypotheses."""
    from .parallelism import angle_function, parallel_partners, opposite_curvature

    flags: list[str] = []
    details: dict = {}
    try:
        infl = inflexion_points(curve, samples)
    except DegenerateInflexion as exc:
        return GenericityReport(("DegenerateInflexion",), {"DegenerateInflexion": str(exc)})
    details["inflexions"] = len(infl)
    try:
        angle = angle_function(curve, samples)
    except NonGeneric as exc:
        return GenericityReport((type(exc).__name__,), {type(exc).__name__: str(exc)})
    psis = [e.psi for e in angle.extrema]
    for i in range(len(psis)):
        for j in range(i + 1, len(psis)):
            if _circ_dist(psis[i], psis[j], math.pi) < EXTREMUM_TOL:
                flags.append("ExtremaShareLevel")
                details["ExtremaShareLevel"] = (angle.extrema[i].t, angle.extrema[j].t)
                break
        if flags:
            break
    for i in range(len(infl)):
        for j in range(i + 1, len(infl)):
            if _circ_dist(psis[i], psis[j], math.pi) < PARALLEL_TOL:
                flags.append("ParallelInflexionTangents")
                break
        if "ParallelInflexionTangents" in flags:
            break
    # non-extremal parallel points must not be tangent to another extremum
    for e in angle.extrema:
        for u in parallel_partners(curve, e.t, angle):
            if any(abs(u - o.t) < 1e-7 for o in angle.extrema):
                continue
            if abs(angle.dtheta(u)) < EXTREMUM_TOL:
                flags.append("ExtremumTangentToFlatPoint")
                break
    # a whole family of parallel pairs with curvature ratio one makes the
    # Wigner caustic degenerate (for instance central symmetry)
    probes = np.linspace(0.0, TWO_PI, 17)[:-1] + 0.1234
    hits = 0
    for s in probes:
        ks = signed_curvature(curve, s)
        if abs(ks) < 1e-9:
            continue
        for u in parallel_partners(curve, s, angle):
            kb = opposite_curvature(curve, s, u)
            if kb != 0.0 and abs(ks / kb - 1.0) < 1e-8:
                hits += 1
                break
    if hits == len(probes):
        flags.append("CentrallySymmetricDegenerate")
    return GenericityReport(tuple(flags), details)
