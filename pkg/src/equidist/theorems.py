"""Checks of the global statements about equidistants on concrete curves.

Every check appends machine-readable results to a :class:`VerificationReport`;
nothing here raises on a failed expectation.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from typing import Any

import numpy as np
from scipy.spatial import cKDTree

from .curve import (TWO_PI, FourierCurve, genericity_check, inflexion_points,
                    signed_curvature)
from .equidistant import (SINGULAR_ENDPOINT, Branch, branch_curvature, classify_onshell_endpoint,
                          css_curve, curvature_ratio_limit, curvature_sign_changes, detect_cusps, detect_inflexions,
                          full_equidistant, trace_branch)
from .errors import EquidistError, HypothesisViolated
from .gluing import LambdaClass, expected_arc_total, maximal_schemes, predict
from .parallelism import (ParallelStructure, opposite_curvature, parallel_partners,
                          parallel_structure, solve_on_arc)

PASS, FAIL, SKIP = "pass", "fail", "skip"


def _plain(value):
    if isinstance(value, (np.floating, np.integer)):
        return value.item()
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    if isinstance(value, dict):
        return {str(k): _plain(v) for k, v in value.items()}
    if isinstance(value, float) and not math.isfinite(value):
        return str(value)
    return value


@dataclass
class CheckResult:
    name: str
    expected: Any
    observed: Any
    status: str
    tolerance: float | None = None
    note: str = ""

    @property
    def passed(self) -> bool:
        return self.status != FAIL


@dataclass
class VerificationReport:
    checks: list[CheckResult] = field(default_factory=list)

    def add(self, name: str, expected, observed, ok: bool, tolerance: float | None = None,
            note: str = "") -> CheckResult:
        res = CheckResult(name, _plain(expected), _plain(observed), PASS if ok else FAIL,
                          tolerance, note)
        self.checks.append(res)
        return res

    def skip(self, name: str, note: str) -> None:
        self.checks.append(CheckResult(name, None, None, SKIP, None, note))

    def extend(self, other: "VerificationReport") -> "VerificationReport":
        self.checks.extend(other.checks)
        return self

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    @property
    def failures(self) -> list[CheckResult]:
        return [c for c in self.checks if c.status == FAIL]

    def get(self, name: str) -> CheckResult:
        return next(c for c in self.checks if c.name == name)

    def to_dict(self) -> dict:
        checks = sorted(self.checks, key=lambda c: c.name)
        counts = {s: sum(c.status == s for c in checks) for s in (PASS, FAIL, SKIP)}
        return {"passed": self.passed, "counts": counts, "checks": [asdict(c) for c in checks]}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    def summary(self) -> str:
        lines = []
        for c in sorted(self.checks, key=lambda c: c.name):
            lines.append(f"{c.status.upper():4}  {c.name}: expected {c.expected}, observed {c.observed}")
        d = self.to_dict()["counts"]
        lines.append(f"{d[PASS]} passed, {d[FAIL]} failed, {d[SKIP]} skipped")
        return "\n".join(lines)


def hausdorff(a: np.ndarray, b: np.ndarray) -> float:
    """Symmetric Hausdorff distance between two finite point sets."""
    a = a[np.all(np.isfinite(a), axis=1)]
    b = b[np.all(np.isfinite(b), axis=1)]
    da, _ = cKDTree(b).query(a)
    db, _ = cKDTree(a).query(b)
    return float(max(da.max(), db.max()))


def _structure(curve) -> ParallelStructure:
    return curve if isinstance(curve, ParallelStructure) else parallel_structure(curve)


def _points(branches: list[Branch]) -> np.ndarray:
    return np.concatenate([b.points for b in branches])


def _spacing(branches: list[Branch]) -> float:
    return max(b.node_spacing for b in branches)


def check_cusp_parity(curve: FourierCurve, lambdas=(0.2, 0.3, 0.4, 0.45), name: str = "curve",
                      report: VerificationReport | None = None) -> VerificationReport:
    """Cusp counts of a convex curve: odd for lam = 1/2, even otherwise, CSS odd and largest."""
    report = report or VerificationReport()
    gen = genericity_check(curve)
    if not gen.generic:
        report.skip(f"{name}/cusp_parity", f"non-generic curve: {', '.join(gen.flags)}")
        return report
    if gen.details.get("inflexions", 0):
        report.skip(f"{name}/cusp_parity", "curve is not convex")
        return report
    st = _structure(curve)
    half = sum(len(b.cusps) for b in full_equidistant(st, 0.5))
    report.add(f"{name}/half_cusps_odd_at_least_3", "odd >= 3", half, half % 2 == 1 and half >= 3)
    for lam in lambdas:
        count = sum(len(b.cusps) for b in full_equidistant(st, lam))
        report.add(f"{name}/generic_cusps_even/lambda={lam}", "even", count, count % 2 == 0)
    css = css_curve(st)
    n = len(css.cusps)
    report.add(f"{name}/css_cusps", f"odd >= max(3, {half})", n, n % 2 == 1 and n >= 3 and n >= half)
    return report


def _front_partner_points(branch: Branch, delta: float) -> np.ndarray:
    """Points delta P + (1 - delta) Q over parallel pairs of a traced front.

    The front keeps the tangent angle of M at its source point, so parallel
    nodes are found by interpolating the front at angle + pi.
    """
    angle = branch.structure.angle
    theta = np.asarray(angle.theta(branch.s), dtype=float)
    pts = branch.points
    keep = np.concatenate([[True], np.abs(np.diff(theta)) > 1e-13])
    theta, pts = theta[keep], pts[keep]
    d = np.diff(theta)
    if not (np.all(d > 0) or np.all(d < 0)):
        raise HypothesisViolated("front angle is not monotone; composition needs a convex curve")
    if d[0] < 0:
        theta, pts = theta[::-1], pts[::-1]
    span = theta[-1] - theta[0]
    if abs(span - TWO_PI) > 1e-9:
        raise HypothesisViolated(f"front turns by {span:.6f}, expected one full turn")
    base = theta[:-1] - theta[0]
    q = np.column_stack([np.interp(base + math.pi, base, pts[:-1, i], period=TWO_PI) for i in (0, 1)])
    return delta * pts[:-1] + (1.0 - delta) * q


def _equidistant_points(st: ParallelStructure, lam: float) -> tuple[np.ndarray, float]:
    if lam in (0.0, 1.0):
        t = np.linspace(0.0, TWO_PI, 4097)
        pts = st.curve(t)
        return pts, float(np.max(np.hypot(*np.diff(pts, axis=0).T)))
    branches = full_equidistant(st, lam, singularities=False)
    return _points(branches), _spacing(branches)


def check_composition(curve: FourierCurve, lam: float, delta: float, name: str = "curve",
                      report: VerificationReport | None = None) -> VerificationReport:
    """E_delta(E_lam(M)) against E_Lam(M), Lam = delta (1 - lam) + lam (1 - delta)."""
    report = report or VerificationReport()
    st = _structure(curve)
    if lam == 0.5:
        raise ValueError("composition is taken over a lam != 1/2 equidistant")
    (front,) = full_equidistant(st, lam, singularities=False)
    composed = _front_partner_points(front, delta)
    big = delta * (1.0 - lam) + lam * (1.0 - delta)
    if abs(big - round(big)) < 1e-12:
        big = float(round(big))
    target, spacing = _equidistant_points(st, big)
    tol = 5.0 * max(spacing, front.node_spacing)
    dist = hausdorff(composed, target)
    report.add(f"{name}/composition/lambda={lam},delta={delta:.6g}", f"< {tol:.3e}", dist, dist < tol, tol,
               note=f"Lambda={big:.6g}")
    return report


def check_reconstruction(curve: FourierCurve, lam: float, name: str = "curve",
                         report: VerificationReport | None = None) -> VerificationReport:
    """M recovered as E_delta(E_lam(M)) with delta = -lam / (1 - 2 lam)."""
    return check_composition(curve, lam, -lam / (1.0 - 2.0 * lam), f"{name}/reconstruction", report)


@dataclass(frozen=True)
class SingularIntervalPrediction:
    rho_min: float
    rho_max: float
    intervals: tuple[tuple[float, float], ...]
    side: str


def _in_arc(x: float, arc, tol: float = 1e-7) -> bool:
    a, b = arc
    width = (b - a) % TWO_PI
    return ((x - a) % TWO_PI) <= width + tol or ((x - a) % TWO_PI) >= TWO_PI - tol


def _unit_tangent(curve: FourierCurve, t: float) -> np.ndarray:
    d = curve.derivative(t, 1)
    return d / np.linalg.norm(d)


def curved_side(curve: FourierCurve, s: float, t: float) -> str:
    """'same' or 'different', from the centres of curvature at f(s) and of the translate at f(s)."""
    ta, tb = _unit_tangent(curve, s), _unit_tangent(curve, t)
    na, nb = np.array([-ta[1], ta[0]]), np.array([-tb[1], tb[0]])
    ka, kb = signed_curvature(curve, s), signed_curvature(curve, t)
    # signed distances of both centres from the tangent line at f(s)
    d_a = 1.0 / ka
    d_b = float(na @ nb) / kb
    return "same" if d_a * d_b > 0 else "different"


def singular_intervals(rho_min: float, rho_max: float, side: str) -> tuple[tuple[float, float], ...]:
    """Lambda intervals on which the two-arc equidistant must be singular."""
    inf = math.inf
    if side == "different":
        a, b = rho_min / (1 + rho_min), rho_max / (1 + rho_max)
        return ((a, b), (1 - b, 1 - a))
    if rho_min > 1:
        lo, hi = rho_max / (rho_max - 1), rho_min / (rho_min - 1)
        return ((lo, hi), (1 - hi, 1 - lo))
    if rho_min < 1 < rho_max:
        c = rho_max / (rho_max - 1)
        return ((-inf, 1 - c), (c, inf))
    return ()


def predict_singular_intervals(curve: FourierCurve, arc0, arc1, samples: int = 16) -> SingularIntervalPrediction:
    """Check the two-arc hypotheses and return the predicted singular lambda intervals.

    ``arc0`` and ``arc1`` are parameter intervals [start, end] of F0 and F1
    with f(arc0[i]), f(arc1[i]) parallel pairs.
    """
    s0, s1 = arc0
    t0, t1 = arc1
    for a, b in ((s0, t0), (s1, t1)):
        ta, tb = _unit_tangent(curve, a), _unit_tangent(curve, b)
        if abs(ta[0] * tb[1] - ta[1] * tb[0]) > 1e-8:
            raise HypothesisViolated("(i) arc endpoints are not parallel pairs")
    grid0 = s0 + ((s1 - s0) % TWO_PI) * np.linspace(0.0, 1.0, samples)
    k0 = signed_curvature(curve, grid0)
    if not (np.all(k0 > 0) or np.all(k0 < 0)):
        raise HypothesisViolated("(iii) curvature of F0 vanishes or changes sign")
    if abs(signed_curvature(curve, t0)) == 0 or abs(signed_curvature(curve, t1)) == 0:
        raise HypothesisViolated("(iii) F1 has zero curvature at an endpoint")
    grid1 = t0 + ((t1 - t0 + math.pi) % TWO_PI - math.pi) * np.linspace(0.0, 1.0, samples)
    for t in grid1:
        if not any(_in_arc(u, (min(s0, s1), max(s0, s1))) for u in parallel_partners(curve, t)):
            raise HypothesisViolated("(ii) a point of F1 has no parallel partner in F0")
    d1 = curve.derivative(grid0, 1)
    turn = np.sum(np.abs((np.diff(np.arctan2(d1[:, 1], d1[:, 0])) + math.pi) % TWO_PI - math.pi))
    if turn >= math.pi:
        raise HypothesisViolated("(iv) F0 turns by half a revolution or more")
    sides = {curved_side(curve, s0, t0), curved_side(curve, s1, t1)}
    if len(sides) != 1:
        raise HypothesisViolated("(v) endpoint pairs are curved on different kinds of sides")
    side = sides.pop()
    rhos = [abs(signed_curvature(curve, t0) / signed_curvature(curve, s0)),
            abs(signed_curvature(curve, t1) / signed_curvature(curve, s1))]
    lo, hi = min(rhos), max(rhos)
    return SingularIntervalPrediction(lo, hi, singular_intervals(lo, hi, side), side)


def check_singular_intervals(curve: FourierCurve, arc0, arc1, samples: int = 8, name: str = "curve",
                             report: VerificationReport | None = None) -> VerificationReport:
    """At ``samples`` lambdas inside every bounded predicted interval, a cusp comes from F0 x F1."""
    report = report or VerificationReport()
    pred = predict_singular_intervals(curve, arc0, arc1)
    report.add(f"{name}/singular_intervals/prediction", "intervals", pred.intervals, bool(pred.intervals),
               note=f"rho in [{pred.rho_min:.12g}, {pred.rho_max:.12g}], {pred.side} sides")
    st = _structure(curve)
    a0 = (min(arc0), max(arc0))
    a1 = (min(arc1), max(arc1))
    for lo, hi in pred.intervals:
        if not (math.isfinite(lo) and math.isfinite(hi)):
            continue
        for k in range(samples):
            lam = lo + (k + 0.5) / samples * (hi - lo)
            hits = 0
            for b in full_equidistant(st, lam):
                for c in b.cusps:
                    if (_in_arc(c.s, a0) and _in_arc(c.t, a1)) or (_in_arc(c.s, a1) and _in_arc(c.t, a0)):
                        hits += 1
            report.add(f"{name}/singular_intervals/lambda={lam:.6f}", ">= 1 cusp from F0 x F1", hits, hits >= 1)
    return report


def self_intersections(curve: FourierCurve, samples: int = 2048) -> list[tuple[float, float]]:
    """Parameter pairs (t1 < t2) of the transversal double points of the curve."""
    t = np.linspace(0.0, TWO_PI, samples + 1)
    p = curve(t)
    a, d = p[:-1], np.diff(p, axis=0)
    out = []
    for i in range(samples):
        j = np.arange(i + 2, samples)
        if i == 0:
            j = j[:-1]
        if not len(j):
            continue
        den = d[i, 0] * d[j, 1] - d[i, 1] * d[j, 0]
        r = a[j] - a[i]
        with np.errstate(divide="ignore", invalid="ignore"):
            u = (r[:, 0] * d[j, 1] - r[:, 1] * d[j, 0]) / den
            v = (r[:, 0] * d[i, 1] - r[:, 1] * d[i, 0]) / den
        hit = (u >= 0) & (u < 1) & (v >= 0) & (v < 1)
        for jj, uu, vv in zip(j[hit], u[hit], v[hit]):
            x = np.array([t[i] + uu * (t[1] - t[0]), t[jj] + vv * (t[1] - t[0])])
            for _ in range(20):
                f = curve(x[0]) - curve(x[1])
                jac = np.column_stack([curve.derivative(x[0], 1), -curve.derivative(x[1], 1)])
                step = np.linalg.solve(jac, f)
                x = x - step
                if np.max(np.abs(step)) < 1e-15:
                    break
            out.append((float(x[0] % TWO_PI), float(x[1] % TWO_PI)))
    return sorted(tuple(sorted(x)) for x in out)


def loops(curve: FourierCurve, samples: int = 2048) -> list[tuple[float, float]]:
    """Parameter intervals of the loops: simple sub-arcs closed up by a double point."""
    pts = self_intersections(curve, samples)
    out = []
    for a, b in pts:
        for lo, hi in ((a, b), (b, a + TWO_PI)):
            inner = [(c, d) for c, d in pts if (c, d) != (a, b)
                     and any(lo < x + k * TWO_PI < hi for x in (c, d) for k in (0, 1))]
            if not inner:
                out.append((lo, hi))
    return out


def _cusps_in(branches, interval) -> list[tuple[int, float, float]]:
    lo, hi = interval
    inside = lambda x: any(lo <= x + k * TWO_PI <= hi for k in (-1, 0, 1))
    return [(i, c.s, c.t) for i, b in enumerate(branches) for c in b.cusps if inside(c.s) and inside(c.t)]


def check_loop(curve: FourierCurve, interval, name: str = "loop",
               report: VerificationReport | None = None) -> VerificationReport:
    """The Wigner caustic of the loop f(interval) is singular."""
    report = report or VerificationReport()
    branches = full_equidistant(_structure(curve), 0.5)
    found = _cusps_in(branches, interval)
    report.add(f"{name}/loop_wigner_cusps", ">= 1", len(found), len(found) >= 1)
    return report


def check_rosette(curve: FourierCurve, n: int, name: str = "rosette", lam: float = 0.4,
                  report: VerificationReport | None = None) -> VerificationReport:
    """Branch counts, rotation numbers and cusp parities of a rosette with rotation number n."""
    report = report or VerificationReport()
    st = _structure(curve)
    report.add(f"{name}/rotation_number", n, st.angle.rotation, abs(st.angle.rotation) == n)
    half = full_equidistant(st, 0.5)
    gen = full_equidistant(st, lam)
    report.add(f"{name}/half_branches", n, len(half), len(half) == n)
    report.add(f"{name}/generic_branches", 2 * n - 1, len(gen), len(gen) == 2 * n - 1)
    rots = sorted(abs(b.rotation) for b in half)
    want = sorted([n / 2] + [float(n)] * (n - 1))
    report.add(f"{name}/half_rotations", want, rots, rots == want)
    grot = sorted(abs(b.rotation) for b in gen)
    report.add(f"{name}/generic_rotations", [float(n)] * (2 * n - 1), grot, all(r == n for r in grot))
    smooth = sum(1 for b in half if not b.cusps and not b.inflexions)
    report.add(f"{name}/half_nonvanishing_curvature_branches", f">= {n // 2}", smooth, smooth >= n // 2)
    odd = sum(1 for b in half if len(b.cusps) % 2)
    if n % 2 == 0:
        report.add(f"{name}/half_odd_cusp_branches", 0, odd, odd == 0)
    else:
        report.add(f"{name}/half_odd_cusp_branches", 1, odd, odd == 1)
    total = sum(len(b.cusps) for b in half)
    report.add(f"{name}/half_total_cusps", ">= 2", total, total >= 2)
    loop_branches = set()
    for interval in loops(st.curve):
        loop_branches.update(i for i, _, _ in _cusps_in(half, interval))
    report.add(f"{name}/loop_cusps_share_branch", "<= 1 branch", sorted(loop_branches), len(loop_branches) <= 1)
    return report


def check_wn(curve: FourierCurve, n: int, name: str = "wn", lam: float = 0.3,
             report: VerificationReport | None = None) -> VerificationReport:
    """Branch and inflexion counts of a curve with two inflexions and rotation number n."""
    report = report or VerificationReport()
    st = _structure(curve)
    half = full_equidistant(st, 0.5)
    gen = full_equidistant(st, lam)
    report.add(f"{name}/half_branches", n + 1, len(half), len(half) == n + 1)
    on_shell = [b for b in half if not b.closed]
    report.add(f"{name}/half_on_shell_branches", 1, len(on_shell), len(on_shell) == 1)
    report.add(f"{name}/generic_branches", 2 * n, len(gen), len(gen) == 2 * n)
    passing = sorted(len(b.inflexions) for b in gen if b.scheme.on_shell)
    others = sorted(len(b.inflexions) for b in gen if not b.scheme.on_shell)
    report.add(f"{name}/generic_on_shell_inflexions", [6], passing, passing == [6])
    report.add(f"{name}/generic_other_inflexions", [4] * (2 * n - 1), others, others == [4] * (2 * n - 1))
    for b in on_shell:
        k = len(b.inflexions)
        report.add(f"{name}/on_shell_inflexions_even", "even", k, k % 2 == 0)
    return report


def check_inflexion_counts(curve: FourierCurve, lam: float = 0.3, name: str = "curve",
                           report: VerificationReport | None = None) -> VerificationReport:
    """Total inflexions 2m - 2n (lam = 1/2) and 4m - 2n (generic lam); #S_M = 2m, 2n inflexions."""
    report = report or VerificationReport()
    st = _structure(curve)
    m2 = st.size
    n2 = len(st.angle.extrema)
    m, n = m2 // 2, n2 // 2
    infl_t = [e.t for e in st.angle.extrema]
    for lam_, want in ((0.5, 2 * m - 2 * n), (lam, 4 * m - 2 * n)):
        branches = full_equidistant(st, lam_)
        total = sum(len(b.inflexions) for b in branches)
        report.add(f"{name}/inflexions/lambda={lam_}", want, total, total == want, note=f"m={m}, n={n}")
        agree = all(len(b.inflexions) == curvature_sign_changes(b) for b in branches)
        report.add(f"{name}/inflexions_match_curvature_sign/lambda={lam_}", True, agree, agree)
        on_chord = True
        for b in branches:
            for p in b.inflexions:
                a, c = st.curve(p.s), st.curve(p.t)
                chord = c - a
                off = abs(chord[0] * (p.position - a)[1] - chord[1] * (p.position - a)[0])
                near = min(min(abs((x - y + math.pi) % TWO_PI - math.pi) for y in infl_t) for x in (p.s, p.t))
                on_chord &= off < 1e-9 and near < 1e-8
        report.add(f"{name}/inflexions_on_inflexion_chords/lambda={lam_}", True, on_chord, on_chord)
        for i, b in enumerate(branches):
            if b.closed:
                k = len(b.inflexions)
                report.add(f"{name}/closed_branch_inflexions_even/lambda={lam_}/branch={i}", "even", k, k % 2 == 0)
    return report


def onshell_parity(structure: ParallelStructure, branch: Branch) -> dict:
    """Endpoint classes, XOR prediction and observed cusp parity for an on-shell branch."""
    k, l = branch.endpoints
    tk, tl = structure.points[k].t, structure.points[l].t
    # the arc of M from f(tk) forward to f(tl) closes the branch
    first = classify_onshell_endpoint(structure.curve, tk, +1)
    second = classify_onshell_endpoint(structure.curve, tl, -1)
    xor = (first.kind == SINGULAR_ENDPOINT) != (second.kind == SINGULAR_ENDPOINT)
    width = (tl - tk) % TWO_PI
    inner = sum(1 for e in structure.angle.extrema if 1e-9 < (e.t - tk) % TWO_PI < width - 1e-9)
    return {"endpoints": (first.kind, second.kind), "odd_predicted": xor,
            "cusps": len(branch.cusps), "inner_inflexions": inner}


def check_onshell_parity(curve: FourierCurve, name: str = "curve",
                         report: VerificationReport | None = None) -> VerificationReport:
    """Cusp parity of each on-shell Wigner-caustic branch equals the XOR of its endpoint types."""
    report = report or VerificationReport()
    st = _structure(curve)
    branches = [b for b in full_equidistant(st, 0.5) if not b.closed]
    if not branches:
        report.skip(f"{name}/on_shell_parity", "no on-shell branch")
        return report
    for i, b in enumerate(branches):
        info = onshell_parity(st, b)
        odd = info["cusps"] % 2 == 1
        report.add(f"{name}/on_shell_parity/branch={i}", "odd" if info["odd_predicted"] else "even",
                   info["cusps"], odd == info["odd_predicted"], note="/".join(info["endpoints"]))
        report.add(f"{name}/on_shell_inner_inflexions_even/branch={i}", "even", info["inner_inflexions"],
                   info["inner_inflexions"] % 2 == 0)
    return report


def finite_difference_geometry(branch: Branch, h: float = 3e-4, stride: int = 1):
    """Node indices, tangent angle errors and curvatures from five-point central differences.

    The difference step is taken in the curve parameter of the point of the
    pair with the smaller curvature; its partner then moves smoothly and is
    found by continuation at the shifted level. Nodes whose shifted levels
    leave the level interval of their step are skipped, which also drops
    step junctions.
    """
    st = branch.structure
    curve, angle = st.curve, st.angle
    lam = branch.lam
    idx_all, ang_err, kappa_fd = [], [], []
    for k, (a, b, _) in enumerate(branch.scheme.steps):
        sel = np.nonzero((branch.step == k) & ~branch.boundary)[0][::stride]
        if not len(sel):
            continue
        lo, hi = st.gap_bounds(st.arcs[a].gap)
        for flat_a in (True, False):
            pick = sel[(np.abs(branch.kappa_a[sel]) <= np.abs(branch.kappa_b[sel])) == flat_a]
            if not len(pick):
                continue
            p = branch.s[pick] if flat_a else branch.t[pick]
            other = st.arcs[b] if flat_a else st.arcs[a]
            base = np.asarray(angle.theta(p), dtype=float)
            levels = [branch.u[pick] + np.asarray(angle.theta(p + j * h), dtype=float) - base
                      for j in (-2.0, -1.0, 1.0, 2.0)]
            inside = np.all([(lv > lo) & (lv < hi) for lv in levels], axis=0)
            pick, p = pick[inside], p[inside]
            if not len(pick):
                continue
            us = [levels[0][inside], levels[1][inside], branch.u[pick], levels[2][inside], levels[3][inside]]
            pos = []
            for j, u in zip((-2.0, -1.0, 0.0, 1.0, 2.0), us):
                q = solve_on_arc(angle, other, other.theta_lo + (u - lo))
                own, partner = curve(p + j * h), curve(q)
                pos.append(lam * own + (1.0 - lam) * partner if flat_a else lam * partner + (1.0 - lam) * own)
            m2, m1, p0, p1, p2 = pos
            d1 = (m2 - 8 * m1 + 8 * p1 - p2) / (12 * h)
            d2 = (-m2 + 16 * m1 - 30 * p0 + 16 * p1 - p2) / (12 * h * h)
            tang = curve.derivative(branch.s[pick], 1)
            cross = d1[:, 0] * tang[:, 1] - d1[:, 1] * tang[:, 0]
            dot = np.sum(d1 * tang, axis=1)
            ang = np.abs(np.arctan2(cross, dot))
            ang = np.minimum(ang, math.pi - ang)
            speed = np.hypot(d1[:, 0], d1[:, 1])
            idx_all.append(pick)
            ang_err.append(ang)
            kappa_fd.append((d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0]) / speed ** 3)
    if not idx_all:
        return np.zeros(0, int), np.zeros(0), np.zeros(0)
    order = np.argsort(np.concatenate(idx_all), kind="stable")
    return (np.concatenate(idx_all)[order], np.concatenate(ang_err)[order],
            np.concatenate(kappa_fd)[order])


def check_numerics(curve: FourierCurve, lam: float = 0.3, name: str = "curve", stride: int = 1,
                   report: VerificationReport | None = None) -> VerificationReport:
    """Branch curvature against finite differences, tangent parallelism, ratio limits at inflexions."""
    report = report or VerificationReport()
    st = _structure(curve)
    worst_rel, worst_ang = 0.0, 0.0
    for b in full_equidistant(st, lam):
        idx, ang, kfd = finite_difference_geometry(b, stride=stride)
        scale = np.abs(b.kappa_a[idx]) + np.abs(b.kappa_b[idx])
        regular = np.abs(b.margin[idx]) > 1e-2 * scale
        if np.any(regular):
            worst_ang = max(worst_ang, float(np.max(ang[regular])))
        away = regular & (np.abs(b.margin[idx]) > 5e-2 * scale)
        for i, kf in zip(idx[away], kfd[away]):
            ke = branch_curvature(b.node(int(i)))
            worst_rel = max(worst_rel, abs(abs(ke) - abs(kf)) / abs(ke))
    report.add(f"{name}/branch_curvature_vs_finite_difference/lambda={lam}", "< 1e-4", worst_rel,
               worst_rel < 1e-4, 1e-4)
    report.add(f"{name}/tangent_parallel/lambda={lam}", "< 1e-6 rad", worst_ang, worst_ang < 1e-6, 1e-6)
    for p in inflexion_points(st.curve):
        r = curvature_ratio_limit(st.curve, p.t)
        report.add(f"{name}/curvature_ratio_limit/t={p.t:.6f}", -1.0, r, abs(r + 1.0) < 1e-3, 1e-3)
    return report


def check_symmetric(curve: FourierCurve, name: str = "symmetric", lambdas=(0.2, 0.3, 0.4),
                    report: VerificationReport | None = None) -> VerificationReport:
    """Centrally symmetric curve: Wigner caustic is the centre, E_lam a scaled copy of M."""
    report = report or VerificationReport()
    st = _structure(curve)
    half = full_equidistant(st, 0.5, singularities=False)
    pts = _points(half)
    diam = float(np.max(np.ptp(pts, axis=0)))
    report.add(f"{name}/wigner_caustic_diameter", "< 1e-6", diam, diam < 1e-6, 1e-6)
    centre = pts.mean(axis=0)
    for lam in lambdas:
        scale = abs(2 * lam - 1)
        branches = full_equidistant(st, lam, singularities=False)
        dev = 0.0
        for b in branches:
            back = centre + (b.points - centre) / scale
            partner = st.curve(b.s)
            other = st.curve(b.t)
            dev = max(dev, float(np.max(np.minimum(np.hypot(*(back - partner).T), np.hypot(*(back - other).T)))))
        report.add(f"{name}/scaled_copy/lambda={lam}", "< 1e-8", dev, dev < 1e-8, 1e-8)
    return report


def check_circle(lambdas=(0.1, 0.2, 0.3, 0.4, 0.45, 0.7), name: str = "circle",
                 report: VerificationReport | None = None) -> VerificationReport:
    """Unit circle: E_lam is the circle of radius |2 lam - 1| with curvature 1/|2 lam - 1|."""
    report = report or VerificationReport()
    circle = FourierCurve([0, 1], [0, 0], [0, 0], [0, 1])
    st = parallel_structure(circle)
    for lam in lambdas:
        rad = abs(2 * lam - 1)
        bs = full_equidistant(st, lam, singularities=False)
        dev = max(float(np.max(np.abs(np.hypot(*b.points.T) - rad))) for b in bs)
        report.add(f"{name}/radius/lambda={lam}", rad, dev, dev < 1e-8, 1e-8, note="max radial deviation")
        kap = np.concatenate([np.abs(b.kappa_E[b.valid()]) for b in bs])
        rel = float(np.max(np.abs(kap - 1 / rad)) * rad)
        report.add(f"{name}/curvature/lambda={lam}", 1 / rad, rel, rel < 1e-8, 1e-8, note="relative error")
    return report


def check_lambda_symmetry(st: ParallelStructure, lam: float, name: str,
                          report: VerificationReport) -> None:
    a = _points(full_equidistant(st, lam, singularities=False))
    b = _points(full_equidistant(st, 1.0 - lam, singularities=False))
    d = hausdorff(a, b)
    report.add(f"{name}/lambda_symmetry/lambda={lam}", "< 1e-6", d, d < 1e-6, 1e-6)


def check_random(count: int = 100, seed: int = 7, lam: float = 0.3, degree: int = 6,
                 report: VerificationReport | None = None, parities: bool = True) -> VerificationReport:
    """Invariants on seeded random generic curves; every violation is recorded.

    With ``parities=False`` the per-branch cusp and inflexion parities are
    skipped, leaving the counting identities and the symmetry of E_lam.
    """
    from .fixtures import random_generic_curves

    report = report or VerificationReport()
    curves = random_generic_curves(count, seed, degree)
    violations: list[str] = []
    for i, curve in enumerate(curves):
        tag = f"random[{i}]"
        try:
            st = parallel_structure(curve)
            if st.size % 2:
                violations.append(f"{tag}: odd #S_M {st.size}")
            if len(st.angle.extrema) % 2:
                violations.append(f"{tag}: odd inflexion count")
            for kind, lam_ in ((LambdaClass.HALF, 0.5), (LambdaClass.GENERIC, lam)):
                schemes = maximal_schemes(st, kind)
                used = sum(len(s) for s in schemes)
                if used != expected_arc_total(st, kind):
                    violations.append(f"{tag}: arc accounting {kind.value}")
                for sc in schemes if parities else ():
                    br = trace_branch(st, sc, lam_)
                    detect_cusps(br)
                    detect_inflexions(br)
                    pred = predict(sc, st)
                    ncusp = len(br.cusps)
                    if pred.cusp_parity == "even" and ncusp % 2:
                        violations.append(f"{tag}: {kind.value} branch {sc.notation()} has {ncusp} cusps")
                    if pred.cusp_parity == "odd" and ncusp % 2 == 0:
                        violations.append(f"{tag}: {kind.value} branch {sc.notation()} has {ncusp} cusps")
                    if pred.cusp_parity is None:
                        info = onshell_parity(st, br)
                        if (ncusp % 2 == 1) != info["odd_predicted"]:
                            violations.append(f"{tag}: on-shell parity {info}")
                    if len(br.inflexions) != pred.inflexions:
                        violations.append(f"{tag}: inflexions {len(br.inflexions)} != {pred.inflexions}")
                    if len(br.inflexions) % 2:
                        violations.append(f"{tag}: odd inflexion count on {sc.notation()}")
            a = _points(full_equidistant(st, lam, singularities=False))
            b = _points(full_equidistant(st, 1.0 - lam, singularities=False))
            if hausdorff(a, b) >= 1e-6:
                violations.append(f"{tag}: E_lam != E_(1-lam)")
        except EquidistError as exc:
            violations.append(f"{tag}: {type(exc).__name__}: {exc}")
    report.add("random/violations", 0, len(violations), not violations,
               note="; ".join(violations[:10]))
    report.add("random/curves", count, len(curves), len(curves) == count, note=f"seed={seed}")
    return report


def verify_fixture(name: str, report: VerificationReport | None = None) -> VerificationReport:
    """Run the checks that apply to a named fixture."""
    from .fixtures import load_fixture

    report = report or VerificationReport()
    fx = load_fixture(name)
    c = fx.curve
    if name == "circle":
        check_circle(report=report)
        check_symmetric(c, name, report=report)
    elif name == "ellipse":
        check_symmetric(c, name, report=report)
    elif name == "perturbed_ellipse":
        st = parallel_structure(c)
        check_cusp_parity(c, name=name, report=report)
        for lam, delta in ((0.3, 0.3), (0.3, 0.5), (0.25, 0.4)):
            check_composition(st, lam, delta, name, report)
        check_reconstruction(st, 0.3, name, report)
        check_numerics(st, 0.3, name, report=report)
        check_lambda_symmetry(st, 0.3, name, report)
    elif name in ("c2", "c3", "c4"):
        check_rosette(c, int(fx.meta["rotation"]), name, report=report)
    elif name == "w1":
        st = parallel_structure(c)
        check_wn(st, int(fx.meta["rotation"]), name, report=report)
        check_inflexion_counts(st, name=name, report=report)
        check_onshell_parity(st, name, report)
        check_numerics(st, 0.3, name, report=report)
    elif name in ("onshell_odd", "eight_inflexions"):
        st = parallel_structure(c)
        check_inflexion_counts(st, name=name, report=report)
        check_onshell_parity(st, name, report)
    elif name == "degenerate_inflexion":
        flags = genericity_check(c).flags
        report.add(f"{name}/rejected", "DegenerateInflexion", list(flags), "DegenerateInflexion" in flags)
    elif name == "two_arc":
        check_singular_intervals(c, fx.meta["F0"], fx.meta["F1"], name=name, report=report)
    elif name == "loop":
        check_loop(c, fx.meta["loop"], name, report)
    return report
