"""Affine equidistants, their smooth branches and the centre symmetry set.

A branch is traced by walking the steps of a maximal glueing scheme; on
each step both arcs are sampled at the same tangent-angle levels, so the
node (s, t) is a parallel pair by construction and the branch point is
``lam * f(s) + (1 - lam) * f(t)``.

Curvatures of the partner point use the opposite-direction convention of
``parallelism.opposite_curvature``. With k_a = kappa(s) and k_b that
curvature, the singularity margin is g = (1 - lam) k_a - lam k_b and the
branch velocity is proportional to -g / (k_a k_b) times the tangent of M
at f(s). Cusps are the nodes where this velocity reverses.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .curve import TWO_PI, FourierCurve, curvature_derivative, signed_curvature, turning_rate
from .errors import AtCusp, DegenerateQuartic, LiftInconsistent, NumericalFailure, TangentialRoot
from .gluing import GlueingScheme, LambdaClass, lambda_class, maximal_schemes
from .parallelism import ParallelStructure, opposite_curvature, parallel_structure
from .roots import golden_minimum, refine_root

ZERO_CURVATURE = 1e-9
CUSP_WIDTH = 1e-10
TANGENTIAL_TOL = 1e-10
POLE_TOL = 1e-8
END_PROBES = 8
END_NOISE = 1e-10


@dataclass(frozen=True)
class BranchNode:
    s: float
    t: float
    position: np.ndarray
    tangent: np.ndarray
    kappa_a: float
    kappa_b: float
    lam: float

    @property
    def margin(self) -> float:
        return (1.0 - self.lam) * self.kappa_a - self.lam * self.kappa_b


def branch_curvature(node: BranchNode) -> float:
    """Curvature of the branch at a regular node, traced with f(s) moving forward."""
    g = node.margin
    if abs(g) < 1e-12:
        raise AtCusp(f"node (s={node.s:.6f}, t={node.t:.6f}) is singular")
    return node.kappa_a * abs(node.kappa_b) / abs(g)


@dataclass(frozen=True)
class Cusp:
    s: float
    t: float
    u: float
    step: int
    position: np.ndarray


@dataclass(frozen=True)
class BranchInflexion:
    node: int
    s: float
    t: float
    position: np.ndarray


@dataclass(eq=False)
class Branch:
    lam: float
    scheme: GlueingScheme
    structure: ParallelStructure
    u: np.ndarray
    s: np.ndarray
    t: np.ndarray
    step: np.ndarray
    boundary: np.ndarray
    points: np.ndarray
    kappa_a: np.ndarray
    kappa_b: np.ndarray
    closed: bool
    endpoints: tuple[int, ...] = ()
    cusps: list[Cusp] = field(default_factory=list)
    inflexions: list[BranchInflexion] = field(default_factory=list)
    rotation: float | None = None

    @property
    def margin(self) -> np.ndarray:
        return (1.0 - self.lam) * self.kappa_a - self.lam * self.kappa_b

    @property
    def kappa_E(self) -> np.ndarray:
        g = self.margin
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.where(np.abs(g) > 0, self.kappa_a * np.abs(self.kappa_b) / np.abs(g), np.inf)

    def node(self, i: int) -> BranchNode:
        d1 = self.structure.curve.derivative(self.s[i], 1)
        return BranchNode(float(self.s[i]), float(self.t[i]), self.points[i],
                          d1 / np.linalg.norm(d1), float(self.kappa_a[i]),
                          float(self.kappa_b[i]), self.lam)

    @property
    def node_spacing(self) -> float:
        return float(np.max(np.hypot(*np.diff(self.points, axis=0).T))) if len(self.points) > 1 else 0.0

    def valid(self) -> np.ndarray:
        return (np.abs(self.kappa_a) > ZERO_CURVATURE) & (np.abs(self.kappa_b) > ZERO_CURVATURE)


def _step_arrays(structure: ParallelStructure, step):
    a, b, d = step
    sa = structure.arc_solution(a)
    sb = structure.arc_solution(b)
    u, s, t = sa.u, sa.t, sb.t
    if d < 0:
        u, s, t = u[::-1], s[::-1], t[::-1]
    return u, s, t


def trace_branch(structure: ParallelStructure, scheme: GlueingScheme, lam: float) -> Branch:
    """Polyline of the branch of E_lam(M) described by ``scheme``."""
    if lam in (0.0, 1.0):
        raise ValueError("lambda must differ from 0 and 1")
    if scheme.kind is LambdaClass.HALF and lam != 0.5:
        raise ValueError("Wigner-caustic schemes need lambda = 1/2")
    curve = structure.curve
    us, ss, ts, steps, bnd = [], [], [], [], []
    for i, st in enumerate(scheme.steps):
        u, s, t = _step_arrays(structure, st)
        start = 0 if i == 0 else 1
        us.append(u[start:])
        ss.append(s[start:])
        ts.append(t[start:])
        steps.append(np.full(len(u) - start, i))
        flag = np.zeros(len(u) - start, dtype=bool)
        flag[-1] = True
        if i == 0:
            flag[0] = True
        bnd.append(flag)
    u = np.concatenate(us)
    s = np.concatenate(ss)
    t = np.concatenate(ts)
    pts = lam * curve(s) + (1.0 - lam) * curve(t)
    ka = signed_curvature(curve, s)
    kb = opposite_curvature(curve, s, t)
    endpoints = ()
    if not scheme.closed:
        endpoints = (scheme.pairs[0][0], scheme.pairs[-1][0])
    branch = Branch(lam, scheme, structure, u, s, t, np.concatenate(steps),
                    np.concatenate(bnd), pts, np.atleast_1d(ka), np.atleast_1d(kb),
                    scheme.closed, endpoints)
    branch.rotation = branch_rotation_number(branch) if scheme.closed else None
    return branch


def _velocity_dirs(branch: Branch) -> tuple[np.ndarray, np.ndarray]:
    """Unit directions of motion at valid nodes (and their indices)."""
    curve = branch.structure.curve
    ok = branch.valid() & (np.abs(branch.margin) > 0)
    idx = np.nonzero(ok)[0]
    d1 = curve.derivative(branch.s[idx], 1)
    tang = d1 / np.hypot(d1[:, 0], d1[:, 1])[:, None]
    dirs = np.array([branch.scheme.steps[k][2] for k in branch.step[idx]])
    sign = np.sign(-branch.margin[idx] * branch.kappa_a[idx] * branch.kappa_b[idx]) * dirs
    return tang * sign[:, None], idx


def _margin_at(structure: ParallelStructure, step, lam: float, u: float) -> tuple[float, float, float]:
    a, b, _ = step
    s = structure.solve_at(a, u)
    t = structure.solve_at(b, u)
    curve = structure.curve
    g = (1.0 - lam) * signed_curvature(curve, s) - lam * opposite_curvature(curve, s, t)
    return g, s, t


def _refine_cusp(branch: Branch, i: int, j: int) -> Cusp:
    structure, lam = branch.structure, branch.lam
    st = branch.scheme.steps[int(branch.step[i])]
    lo_u, hi_u = float(branch.u[i]), float(branch.u[j])
    wrapped = j < i
    if wrapped or branch.step[i] != branch.step[j]:
        # the flip straddles a step boundary (or the closing node); the margin
        # is continuous there, so keep the half on which it changes sign
        if wrapped:
            b_end = len(branch.u) - 1
        else:
            b_end = next(n for n in range(i, j + 1) if branch.boundary[n])
        g_i = branch.margin[i]
        g_b = _margin_at(structure, st, lam, float(branch.u[b_end]) * (1 - 1e-9) + lo_u * 1e-9)[0]
        if np.sign(g_i) != np.sign(g_b):
            hi_u = float(branch.u[b_end])
        else:
            st = branch.scheme.steps[int(branch.step[j])]
            glo, ghi = structure.gap_bounds(structure.arcs[st[0]].gap)
            lo_u = glo if st[2] > 0 else ghi
    return _bisect_margin(branch, st, lo_u, hi_u)


def _margins(structure: ParallelStructure, step, lam: float, u: np.ndarray):
    a, b, _ = step
    s = structure.solve_levels(a, u)
    t = structure.solve_levels(b, u)
    curve = structure.curve
    g = (1.0 - lam) * signed_curvature(curve, s) - lam * opposite_curvature(curve, s, t)
    return g, s, t


def _bisect_margin(branch: Branch, st, lo_u: float, hi_u: float, parts: int = 32) -> Cusp:
    """Shrink a sign change of the margin by repeated subdivision into ``parts`` pieces."""
    structure, lam = branch.structure, branch.lam
    a, b = min(lo_u, hi_u), max(lo_u, hi_u)
    while b - a > 1e-15:
        grid = np.linspace(a, b, parts + 1)
        g, s, t = _margins(structure, st, lam, grid)
        if abs(s[-1] - s[0]) < CUSP_WIDTH and abs(t[-1] - t[0]) < CUSP_WIDTH:
            break
        flips = np.nonzero(np.sign(g[1:]) != np.sign(g[0]))[0]
        if not len(flips):
            break
        k = int(flips[0])
        a, b = grid[k], grid[k + 1]
    u = 0.5 * (a + b)
    _, s, t = _margin_at(structure, st, lam, u)
    curve = structure.curve
    pos = lam * curve(s) + (1.0 - lam) * curve(t)
    return Cusp(s, t, u, int(branch.scheme.steps.index(st)), pos)


def _end_cusp(branch: Branch, inner: int, end: int) -> Cusp | None:
    """Margin root between the last valid node and an end point of an open branch.

    Both curvatures vanish at the end, so the margin is probed on a geometric
    grid towards it and abandoned once it sinks to the level of solver noise.
    """
    st = branch.scheme.steps[int(branch.step[end])]
    u_in, u_end = float(branch.u[inner]), float(branch.u[end])
    prev_u, prev_g = u_in, float(branch.margin[inner])
    for k in range(1, END_PROBES + 1):
        uk = u_end + (u_in - u_end) * 2.0 ** -k
        g = _margin_at(branch.structure, st, branch.lam, uk)[0]
        if abs(g) < END_NOISE:
            break
        if np.sign(g) != np.sign(prev_g):
            return _bisect_margin(branch, st, prev_u, uk)
        prev_u, prev_g = uk, g
    return None


def _check_tangential(branch: Branch) -> None:
    g = branch.margin
    scale = np.abs(branch.kappa_a) + np.abs(branch.kappa_b)
    ok = branch.valid()
    rel = np.where(ok, np.abs(g) / np.where(scale > 0, scale, 1.0), np.inf)
    n = len(g)
    for i in range(1, n - 1):
        if not (ok[i - 1] and ok[i] and ok[i + 1]):
            continue
        if branch.step[i - 1] != branch.step[i + 1]:
            continue
        if rel[i] > 1e-6 or rel[i] > rel[i - 1] or rel[i] > rel[i + 1]:
            continue
        if np.sign(g[i - 1]) != np.sign(g[i + 1]):
            continue
        st = branch.scheme.steps[int(branch.step[i])]
        lo, hi = sorted((float(branch.u[i - 1]), float(branch.u[i + 1])))

        def f(x):
            gg, s, t = _margin_at(branch.structure, st, branch.lam, x)
            sc = abs(signed_curvature(branch.structure.curve, s)) + abs(
                opposite_curvature(branch.structure.curve, s, t))
            return abs(gg) / sc

        _, val = golden_minimum(f, lo, hi, tol=1e-13)
        if val < TANGENTIAL_TOL:
            raise TangentialRoot(
                f"margin touches zero without crossing near s={branch.s[i]:.9f} (lambda={branch.lam})")


def detect_cusps(branch: Branch) -> list[Cusp]:
    """Cusps of the branch: reversals of the direction of motion."""
    _check_tangential(branch)
    dirs, idx = _velocity_dirs(branch)
    cusps = []
    for n in range(len(idx) - 1):
        if float(dirs[n] @ dirs[n + 1]) < 0:
            cusps.append(_refine_cusp(branch, int(idx[n]), int(idx[n + 1])))
    last = len(branch.u) - 1
    if branch.closed and len(idx) > 1 and idx[-1] != last and float(dirs[-1] @ dirs[0]) < 0:
        # the closing node itself was skipped, so compare across it
        cusps.append(_refine_cusp(branch, int(idx[-1]), int(idx[0])))
    if not branch.closed and len(idx):
        last_step = int(branch.step[last])
        if idx[0] != 0 and int(branch.step[idx[0]]) == int(branch.step[0]):
            c = _end_cusp(branch, int(idx[0]), 0)
            if c is not None:
                cusps.insert(0, c)
        if idx[-1] != last and int(branch.step[idx[-1]]) == last_step:
            c = _end_cusp(branch, int(idx[-1]), last)
            if c is not None:
                cusps.append(c)
    branch.cusps = cusps
    return cusps


def _traversal_curvature_sign(branch: Branch) -> tuple[np.ndarray, np.ndarray]:
    """Sign of det(v, v') along the branch, from kappa(s) and the motion of s."""
    ok = branch.valid() & (np.abs(branch.margin) > 0)
    ds = np.diff(branch.s)
    ds = (ds + math.pi) % TWO_PI - math.pi
    fwd = np.append(ds, ds[-1:]) if len(ds) else np.ones(1)
    back = np.insert(ds, 0, ds[:1]) if len(ds) else np.ones(1)
    # the motion of s is continuous at valid nodes, so either side will do
    motion = np.where(np.abs(fwd) > 0, np.sign(fwd), np.sign(back))
    idx = np.nonzero(ok)[0]
    return (np.sign(branch.kappa_a) * motion)[idx], idx


def detect_inflexions(branch: Branch) -> list[BranchInflexion]:
    """Branch inflexions: nodes whose parallel pair contains an inflexion of M."""
    structure = branch.structure
    out = []
    lastk = len(branch.s) - 1 if branch.closed else len(branch.s)
    for n in range(lastk):
        if not branch.boundary[n]:
            continue
        if not branch.closed and n in (0, len(branch.s) - 1):
            continue
        ext_a = abs(branch.kappa_a[n]) <= ZERO_CURVATURE
        ext_b = abs(branch.kappa_b[n]) <= ZERO_CURVATURE
        if ext_a or ext_b:
            out.append(BranchInflexion(n, float(branch.s[n]), float(branch.t[n]), branch.points[n]))
    branch.inflexions = out
    return out


def curvature_sign_changes(branch: Branch) -> int:
    """Sign changes of the traversal-signed curvature (independent inflexion count)."""
    sg, _ = _traversal_curvature_sign(branch)
    if branch.closed and len(sg):
        sg = np.append(sg, sg[0])
    return int(np.sum(sg[:-1] * sg[1:] < 0))


def branch_rotation_number(branch: Branch) -> float:
    """Winding of the transported normal n_M(f(s)) along a closed branch."""
    if not branch.closed:
        raise ValueError("rotation number needs a closed branch")
    d1 = branch.structure.curve.derivative(branch.s, 1)
    ang = np.arctan2(d1[:, 1], d1[:, 0])
    steps = np.diff(ang)
    steps = (steps + math.pi) % TWO_PI - math.pi
    value = float(np.sum(steps)) / TWO_PI
    r = round(2 * value) / 2
    if abs(value - r) > 0.01:
        raise LiftInconsistent(f"branch winding {value:.6f} is not a half-integer")
    return r


def full_equidistant(curve_or_structure, lam: float, singularities: bool = True) -> list[Branch]:
    """All branches of E_lam(M). For lam in {0, 1} the curve itself is returned."""
    structure = (curve_or_structure if isinstance(curve_or_structure, ParallelStructure)
                 else parallel_structure(curve_or_structure))
    curve = structure.curve
    if lam in (0.0, 1.0):
        s = np.linspace(0.0, TWO_PI, 2049)
        pts = curve(s)
        ka = signed_curvature(curve, s)
        dummy = GlueingScheme(LambdaClass.GENERIC, (), ((0, 0),), True, False, False)
        return [Branch(lam, dummy, structure, s, s, s, np.zeros(len(s), dtype=int),
                       np.zeros(len(s), dtype=bool), pts, ka, -ka, True,
                       rotation=float(structure.angle.rotation))]
    schemes = maximal_schemes(structure, lambda_class(lam))
    out = []
    for sc in schemes:
        br = trace_branch(structure, sc, lam)
        if singularities:
            detect_cusps(br)
            detect_inflexions(br)
        out.append(br)
    return out


def branch_polyline(branch: Branch) -> list[tuple]:
    """Rows (s, t, x, y, kappa_E, is_cusp, is_inflexion) with cusps as doubled nodes."""
    infl = {i.node for i in branch.inflexions}
    kE = branch.kappa_E
    rows = []
    cusps = sorted(branch.cusps, key=lambda c: (c.step, c.u if branch.scheme.steps[c.step][2] > 0 else -c.u))
    ci = 0
    for n in range(len(branch.s)):
        while ci < len(cusps) and n > 0 and branch.step[n] == cusps[ci].step and _passed(branch, n, cusps[ci]):
            c = cusps[ci]
            for _ in range(2):
                rows.append((c.s, c.t, float(c.position[0]), float(c.position[1]), math.inf, True, False))
            ci += 1
        rows.append((float(branch.s[n]), float(branch.t[n]), float(branch.points[n, 0]),
                     float(branch.points[n, 1]), float(kE[n]), False, n in infl))
    return rows


def _passed(branch: Branch, n: int, cusp: Cusp) -> bool:
    d = branch.scheme.steps[cusp.step][2]
    return (branch.u[n] - cusp.u) * d > 0


@dataclass(frozen=True)
class EndpointClass:
    kind: str
    limit: float
    closed_form: float
    ratio_limit: float


SINGULAR_ENDPOINT = "SINGULAR_ENDPOINT"
C1_REGULAR_ENDPOINT = "C1_REGULAR_ENDPOINT"


def graph_frame_derivatives(curve, s0: float) -> tuple[float, float]:
    """Third and fourth derivatives of y = F(x) in the tangent-normal frame at f(s0)."""
    d1, d2, d3, d4 = (np.asarray(curve.derivative(s0, n), dtype=float) for n in (1, 2, 3, 4))
    a1 = float(np.hypot(*d1))
    T = d1 / a1
    N = np.array([-T[1], T[0]])
    a2 = float(T @ d2)
    b3 = float(N @ d3)
    b4 = float(N @ d4)
    f3 = b3 / a1 ** 3
    f4 = b4 / a1 ** 4 - 6.0 * b3 * a2 / a1 ** 5
    return f3, f4


def _local_angle(curve, T0: np.ndarray, x) -> float:
    d1 = curve.derivative(x, 1)
    return math.atan2(T0[0] * d1[1] - T0[1] * d1[0], float(T0 @ d1))


def _partner_near(curve, s0: float, s: float, T0: np.ndarray) -> float:
    """Point across the inflexion s0 whose tangent is parallel to f'(s)."""
    target = _local_angle(curve, T0, s)
    h = abs(s - s0)
    side = -1.0 if s > s0 else 1.0
    a, b = sorted((s0 + side * 1e-3 * h, s0 + side * 4.0 * h))
    fn = lambda x: _local_angle(curve, T0, x) - target
    return refine_root(fn, lambda x: turning_rate(curve, x), a, b, 1e-15)


def _richardson(values: list[float]) -> float:
    """Extrapolate values with errors in powers of h, h halved each time."""
    d = list(values)
    for order in range(1, len(d)):
        d = [(2 ** order * d[i + 1] - d[i]) / (2 ** order - 1) for i in range(len(d) - 1)]
    return d[0]


def _ratio_samples(curve, s0: float, h: float) -> list[tuple[float, float]]:
    """(kappa ratio + 1) / x and the ratio itself at s0 + h / 2^k, k = 0..3."""
    d1 = np.asarray(curve.derivative(s0, 1), dtype=float)
    T0 = d1 / np.hypot(*d1)
    p0 = np.asarray(curve.derivative(s0, 0), dtype=float)
    out = []
    for k in range(4):
        s = s0 + h / 2 ** k
        t = _partner_near(curve, s0, s, T0)
        ratio = signed_curvature(curve, s) / signed_curvature(curve, t)
        x = float(T0 @ (np.asarray(curve.derivative(s, 0)) - p0))
        out.append(((ratio + 1.0) / x, ratio))
    return out


def curvature_ratio_limit(curve, s0: float, h: float = 2e-3) -> float:
    """Limit of kappa(s)/kappa(t(s)) at an ordinary inflexion s0 (t(s) the nearby partner)."""
    return _richardson([r for _, r in _ratio_samples(curve, s0, h)])


def classify_onshell_endpoint(curve, s0: float, side: int = 1, h: float = 2e-3) -> EndpointClass:
    """Type of the on-shell branch closed up by the arc of M leaving f(s0) towards ``side``.

    The one-sided limit of d/ds(kappa(s)/kappa(t(s))) is estimated from the
    pairing by Richardson extrapolation and checked against the closed form
    -2 F4 / (3 F3) of the local graph y = F(x) in the tangent-normal frame.
    Any object with ``derivative(t, order)`` up to order 4 is accepted.
    """
    f3, f4 = graph_frame_derivatives(curve, s0)
    if abs(f4) < 1e-8:
        raise DegenerateQuartic(f"fourth graph derivative {f4:.3e} vanishes at t={s0:.9f}")
    closed = -2.0 * f4 / (3.0 * f3)
    levels = _ratio_samples(curve, s0, h)
    limit = _richardson([q for q, _ in levels])
    ratio_limit = _richardson([r for _, r in levels])
    if np.sign(limit) != np.sign(closed):
        raise NumericalFailure(f"endpoint limit {limit:.6g} disagrees with closed form {closed:.6g}")
    kind = SINGULAR_ENDPOINT if side * limit > 0 else C1_REGULAR_ENDPOINT
    return EndpointClass(kind, limit, closed, ratio_limit)


@dataclass(eq=False)
class CssCurve:
    branches: list
    cusps: list
    poles: list
    endpoints: list
    degenerate: bool

    @property
    def points(self) -> np.ndarray:
        pts = [b["points"] for b in self.branches]
        return np.concatenate(pts) if pts else np.zeros((0, 2))


def _css_nodes(structure: ParallelStructure, s: np.ndarray, t: np.ndarray):
    curve = structure.curve
    a, b = curve(s), curve(t)
    ka = np.atleast_1d(signed_curvature(curve, s))
    kb = np.atleast_1d(opposite_curvature(curve, s, t))
    den = ka + kb
    with np.errstate(divide="ignore", invalid="ignore"):
        q = (ka[:, None] * a + kb[:, None] * b) / den[:, None]
    both = (np.abs(ka) <= ZERO_CURVATURE) & (np.abs(kb) <= ZERO_CURVATURE)
    q[both] = a[both]
    return q, ka, kb, a, b


def css_curvature(curve: FourierCurve, s, t):
    """Curvature of the centre symmetry set at the point built from the pair (s, t).

    Pole pairs (kappa_a + kappa_b near zero) give nan.
    """
    ka = np.atleast_1d(signed_curvature(curve, s))
    kb = np.atleast_1d(opposite_curvature(curve, s, t))
    d1a, d1b = curve.derivative(s, 1), curve.derivative(t, 1)
    dka = np.atleast_1d(curvature_derivative(curve, s)) / np.hypot(d1a[..., 0], d1a[..., 1])
    dkb = np.atleast_1d(curvature_derivative(curve, t)) / np.hypot(d1b[..., 0], d1b[..., 1])
    chord = np.atleast_2d(curve(s) - curve(t))
    ta = np.atleast_2d(d1a / np.hypot(d1a[..., 0], d1a[..., 1])[..., None])
    num = np.sign(kb) * (ka + kb) ** 3 * (chord[:, 0] * ta[:, 1] - chord[:, 1] * ta[:, 0])
    den = np.abs(kb ** 2 * dka - ka ** 2 * dkb) * np.hypot(chord[:, 0], chord[:, 1]) ** 3
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.where(den > 0, num / den, np.inf)
    out[np.abs(ka + kb) < POLE_TOL] = np.nan
    return float(out[0]) if np.ndim(s) == 0 else out


def css_curve(curve_or_structure) -> CssCurve:
    """Centre symmetry set from the point formula over every unordered parallel pair."""
    structure = (curve_or_structure if isinstance(curve_or_structure, ParallelStructure)
                 else parallel_structure(curve_or_structure))
    curve = structure.curve
    schemes = maximal_schemes(structure, LambdaClass.HALF)
    branches, cusps, poles, endpoints = [], [], [], []
    spread = 0.0
    for bi, sc in enumerate(schemes):
        br = trace_branch(structure, sc, 0.5)
        q, ka, kb, a, b = _css_nodes(structure, br.s, br.t)
        den = ka + kb
        pole = (np.abs(den) < POLE_TOL) & ~((np.abs(ka) <= ZERO_CURVATURE) & (np.abs(kb) <= ZERO_CURVATURE))
        q[pole] = np.nan
        for n in np.nonzero(pole)[0]:
            poles.append((bi, int(n)))
        if not sc.closed:
            endpoints.extend([(bi, 0), (bi, len(q) - 1)])
        # sign of d(ratio)/d(traversal) decides the direction of motion along the chord
        dka = curvature_derivative(curve, br.s) / np.hypot(*curve.derivative(br.s, 1).T)
        dkb = curvature_derivative(curve, br.t) / np.hypot(*curve.derivative(br.t, 1).T)
        numer = kb ** 2 * dka - ka ** 2 * dkb
        dirs = np.array([sc.steps[k][2] for k in br.step])
        ok = (np.abs(ka) > ZERO_CURVATURE) & (np.abs(kb) > ZERO_CURVATURE) & ~pole & (numer != 0)
        idx = np.nonzero(ok)[0]
        rate = np.sign(numer[idx]) * np.sign(ka[idx] * kb[idx]) * dirs[idx]
        motion = -(rate[:, None]) * (b[idx] - a[idx])
        qv = q[np.isfinite(q[:, 0])]
        flat = len(qv) == 0 or float(np.max(np.ptp(qv, axis=0))) < 1e-9
        spread = max(spread, 0.0 if flat else 1.0)
        flips = []
        for n in range(len(idx) - 1 if not flat else 0):
            if float(motion[n] @ motion[n + 1]) < 0:
                flips.append((int(idx[n]), int(idx[n + 1])))
        curv = np.full(len(q), np.nan)
        if len(idx):
            curv[idx] = css_curvature(curve, br.s[idx], br.t[idx])
        branches.append({"scheme": sc, "s": br.s, "t": br.t, "points": q, "curvature": curv})
        for i, j in flips:
            cusps.append(_refine_css_cusp(structure, br, i, j, bi))
    degenerate = spread < 1e-9
    if degenerate:
        cusps = []
    return CssCurve(branches, cusps, poles, endpoints, degenerate)


def _css_rate(structure: ParallelStructure, step, u: float) -> tuple[float, float, float]:
    a, b, d = step
    curve = structure.curve
    s = structure.solve_at(a, u)
    t = structure.solve_at(b, u)
    ka = signed_curvature(curve, s)
    kb = opposite_curvature(curve, s, t)
    dka = curvature_derivative(curve, s) / np.linalg.norm(curve.derivative(s, 1))
    dkb = curvature_derivative(curve, t) / np.linalg.norm(curve.derivative(t, 1))
    return kb ** 2 * dka - ka ** 2 * dkb, s, t


def _refine_css_cusp(structure: ParallelStructure, br: Branch, i: int, j: int, bi: int) -> dict:
    k = int(br.step[j])
    st = br.scheme.steps[k]
    lo_u, hi_u = sorted((float(br.u[i]), float(br.u[j])))
    if br.step[i] != br.step[j]:
        lo_u, hi_u = sorted((float(br.u[j - 1]), float(br.u[j])))
    fn = lambda x: _css_rate(structure, st, x)[0]
    if np.sign(fn(lo_u)) == np.sign(fn(hi_u)):
        u = 0.5 * (lo_u + hi_u)
    else:
        u = refine_root(fn, None, lo_u, hi_u, 1e-13)
    _, s, t = _css_rate(structure, st, u)
    q, *_ = _css_nodes(structure, np.array([s]), np.array([t]))
    return {"branch": bi, "s": s, "t": t, "position": q[0]}
