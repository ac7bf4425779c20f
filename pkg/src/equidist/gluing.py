"""Glueing schemes: how pairs of parallel arcs join into smooth branches.

Everything here is combinatorial. A *step* is an ordered pair of distinct
arcs from one parallel set together with a direction (``+1`` from the
lower angle level to the upper, ``-1`` back). A scheme is the sequence of
steps; its two rows are the sequences of S_M indices visited by each arc.

At a pair (k, l) the next step is forced:

* neither point an extremum: both rows cross onto the neighbouring arcs;
* p_k an extremum, k != l: the top row turns onto the other arc at p_k
  and the bottom row runs back along its arc (and symmetrically);
* k == l an extremum: the rows exchange arcs (a pass through the
  inflexion for lam != 1/2, an end point of the branch for lam = 1/2).
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from math import comb

from .errors import ArcAccountingMismatch, NonGenericBranching
from .parallelism import ParallelStructure

Step = tuple[int, int, int]


class LambdaClass(str, Enum):
    HALF = "HALF"
    GENERIC = "GENERIC"


def lambda_class(lam: float) -> LambdaClass:
    if lam in (0.0, 1.0):
        raise ValueError("lambda 0 and 1 give the curve itself")
    return LambdaClass.HALF if lam == 0.5 else LambdaClass.GENERIC


def _start_pair(structure: ParallelStructure, step: Step) -> tuple[int, int]:
    a, b, d = step
    A, B = structure.arcs[a], structure.arcs[b]
    return (A.lo, B.lo) if d > 0 else (A.hi, B.hi)


def _end_pair(structure: ParallelStructure, step: Step) -> tuple[int, int]:
    a, b, d = step
    A, B = structure.arcs[a], structure.arcs[b]
    return (A.hi, B.hi) if d > 0 else (A.lo, B.lo)


def _other_arc(structure: ParallelStructure, point: int, arc: int) -> int:
    first, second = structure.arcs_at(point)
    if first == second:
        raise NonGenericBranching("a single arc closes on itself")
    return second if arc == first else first


def _direction_from(structure: ParallelStructure, arc: int, point: int) -> int:
    A = structure.arcs[arc]
    return 1 if A.lo == point and A.hi != point else -1


def next_step(structure: ParallelStructure, step: Step) -> Step:
    """The unique step following ``step``."""
    a, b, d = step
    k, l = _end_pair(structure, step)
    ek, el = structure.is_extremum(k), structure.is_extremum(l)
    if k == l:
        if not ek:
            raise NonGenericBranching(f"rows meet at the non-extremal point p{k}")
        na, nb = b, a
    elif ek and el:
        raise NonGenericBranching(f"extrema p{k} and p{l} share an angle level")
    elif ek:
        na, nb = _other_arc(structure, k, a), b
    elif el:
        na, nb = a, _other_arc(structure, l, b)
    else:
        na, nb = _other_arc(structure, k, a), _other_arc(structure, l, b)
    da = _direction_from(structure, na, k)
    db = _direction_from(structure, nb, l)
    if da != db or structure.arcs[na].gap != structure.arcs[nb].gap or na == nb:
        raise NonGenericBranching(f"no consistent prolongation at (p{k}, p{l})")
    return (na, nb, da)


def _swap(step: Step) -> Step:
    return (step[1], step[0], step[2])


def _reverse(steps: list[Step]) -> list[Step]:
    return [(a, b, -d) for a, b, d in reversed(steps)]


def _key(step: Step, kind: LambdaClass) -> tuple[int, int]:
    a, b, _ = step
    if kind is LambdaClass.HALF:
        return (min(a, b), max(a, b))
    return (a, b)


@dataclass(frozen=True)
class GlueingScheme:
    """A glueing scheme as a list of steps plus derived rows of S_M indices."""

    kind: LambdaClass
    steps: tuple[Step, ...]
    pairs: tuple[tuple[int, int], ...]
    closed: bool
    on_shell: bool
    half_turn: bool

    @property
    def top(self) -> tuple[int, ...]:
        return tuple(k for k, _ in self.pairs)

    @property
    def bottom(self) -> tuple[int, ...]:
        return tuple(l for _, l in self.pairs)

    def notation(self) -> str:
        top = "-".join(f"p{k}" for k in self.top)
        bottom = "-".join(f"p{l}" for l in self.bottom)
        return f"{top} / {bottom}"

    def __len__(self) -> int:
        return len(self.steps)


def _pairs(structure: ParallelStructure, steps: list[Step], memo: dict | None = None) -> tuple[tuple[int, int], ...]:
    if memo is None:
        memo = {}
    out = [_start_pair(structure, steps[0])]
    for s in steps:
        if s not in memo:
            memo[s] = _end_pair(structure, s)
        out.append(memo[s])
    return tuple(out)


def _build(structure: ParallelStructure, steps: list[Step], kind: LambdaClass) -> GlueingScheme:
    pairs = _pairs(structure, steps)
    first, last = pairs[0], pairs[-1]
    on_shell_half = (kind is LambdaClass.HALF and first[0] == first[1]
                     and structure.is_extremum(first[0]) and last[0] == last[1])
    half_turn = kind is LambdaClass.HALF and not on_shell_half and last == (first[1], first[0]) and first != last
    closed = not on_shell_half
    if kind is LambdaClass.GENERIC:
        on_shell = any(k == l and structure.is_extremum(k) for k, l in pairs)
    else:
        on_shell = on_shell_half
    return GlueingScheme(kind, tuple(steps), pairs, closed, on_shell, half_turn)


def canonical(structure: ParallelStructure, scheme: GlueingScheme) -> GlueingScheme:
    """Lexicographically least equivalent form (rotation, reversal, row swap)."""
    kind = scheme.kind
    steps = list(scheme.steps)
    cands: list[list[Step]] = []
    swaps = (False, True) if kind is LambdaClass.HALF else (False,)
    if not scheme.closed:
        for rev in (False, True):
            base = _reverse(steps) if rev else steps
            for sw in swaps:
                cands.append([_swap(s) for s in base] if sw else base)
    else:
        cycle = steps + [_swap(s) for s in steps] if scheme.half_turn else steps
        n = len(cycle)
        take = len(steps)
        for rev in (False, True):
            base = _reverse(cycle) if rev else cycle
            for sw in swaps:
                seq = [_swap(s) for s in base] if sw else base
                for r in range(n):
                    cands.append((seq[r:] + seq[:r])[:take])
    memo: dict = {}
    best = min(cands, key=lambda c: (_pairs(structure, c, memo), c))
    return _build(structure, best, kind)


def prolong(scheme: GlueingScheme, structure: ParallelStructure) -> GlueingScheme:
    """Append the unique next pair to a non-maximal scheme."""
    if is_maximal(scheme, structure):
        raise ValueError("scheme is already maximal")
    steps = list(scheme.steps) + [next_step(structure, scheme.steps[-1])]
    return _build(structure, steps, scheme.kind)


def is_maximal(scheme: GlueingScheme, structure: ParallelStructure) -> bool:
    kind = scheme.kind
    first, last = scheme.pairs[0], scheme.pairs[-1]
    nxt = next_step(structure, scheme.steps[-1])
    if kind is LambdaClass.HALF:
        if last[0] == last[1] and structure.is_extremum(last[0]) and len(scheme.steps) > 0:
            if first[0] == first[1]:
                return True
        return _key(nxt, kind) == _key(scheme.steps[0], kind)
    return nxt == scheme.steps[0]


def scheme_from_pairs(structure: ParallelStructure, pairs, kind: LambdaClass) -> GlueingScheme:
    """Scheme with the given rows; arcs are resolved from adjacency.

    When the rows admit two steps (only possible for #S_M = 2) the rising one
    is used.
    """
    steps: list[Step] = []
    for (k0, l0), (k1, l1) in zip(pairs, pairs[1:]):
        cand_a = [a for a in structure.arcs_at(k0) if a in structure.arcs_at(k1)]
        cand_b = [b for b in structure.arcs_at(l0) if b in structure.arcs_at(l1)]
        if steps:
            pa, pb, _ = steps[-1]
            nxt = next_step(structure, steps[-1])
            if nxt[0] in cand_a and nxt[1] in cand_b:
                steps.append(nxt)
                continue
        options = []
        for a in set(cand_a):
            for b in set(cand_b):
                if a == b or structure.arcs[a].gap != structure.arcs[b].gap:
                    continue
                d = _direction_from(structure, a, k0)
                if d == _direction_from(structure, b, l0):
                    options.append((a, b, d))
        if not options:
            raise ValueError(f"pairs ({k0},{l0}) -> ({k1},{l1}) do not define a step")
        # with two parallel points the rows cannot tell the directions apart
        steps.append(min(options, key=lambda o: (-o[2], o[0], o[1])))
    return _build(structure, steps, kind)


def _all_keys(structure: ParallelStructure, kind: LambdaClass) -> list[tuple[int, int]]:
    keys = []
    for members in structure.sets:
        for a in members:
            for b in members:
                if a == b or (kind is LambdaClass.HALF and a > b):
                    continue
                keys.append((a, b))
    return sorted(keys)


def expected_arc_total(structure: ParallelStructure, kind: LambdaClass) -> int:
    total = sum(comb(len(s), 2) for s in structure.sets)
    return total if kind is LambdaClass.HALF else 2 * total


def maximal_schemes(structure: ParallelStructure, kind: LambdaClass | str) -> list[GlueingScheme]:
    """All maximal glueing schemes, each step of the arc-pair set used once.

    Inflexion-anchored schemes are grown first, then the remaining arc pairs
    are consumed in index order. Results are canonicalised and sorted.
    """
    kind = LambdaClass(kind)
    used: set[tuple[int, int]] = set()
    schemes: list[GlueingScheme] = []

    def grow(start: Step) -> None:
        steps = [start]
        keys = {_key(start, kind)}
        while True:
            scheme = _build(structure, steps, kind)
            if is_maximal(scheme, structure):
                break
            nxt = next_step(structure, steps[-1])
            k = _key(nxt, kind)
            if k in keys or k in used:
                raise ArcAccountingMismatch(f"arc pair {k} reached twice")
            keys.add(k)
            steps.append(nxt)
            if len(steps) > 4 * structure.size ** 2 + 8:
                raise ArcAccountingMismatch("prolongation does not terminate")
        used.update(keys)
        schemes.append(scheme)

    for p in structure.points:
        if not p.is_extremum:
            continue
        a, b = structure.arcs_at(p.index)
        d = _direction_from(structure, a, p.index)
        for start in ((a, b, d), (b, a, d)):
            if _key(start, kind) not in used:
                grow(start)
    for a, b in _all_keys(structure, kind):
        if (a, b) in used:
            continue
        grow((a, b, 1))
    total = sum(len(s) for s in schemes)
    expected = expected_arc_total(structure, kind)
    if total != expected or len(used) != len(_all_keys(structure, kind)):
        raise ArcAccountingMismatch(f"schemes use {total} arc pairs, expected {expected}")
    out = [canonical(structure, s) for s in schemes]
    out.sort(key=lambda s: (len(s.pairs), s.pairs))
    return out


@dataclass(frozen=True)
class BranchPrediction:
    rotation_class: str
    cusp_parity: str | None
    inflexions: int
    on_shell: bool
    endpoints: tuple[int, ...]


def predict(scheme: GlueingScheme, structure: ParallelStructure) -> BranchPrediction:
    """Combinatorial predictions for the branch traced from ``scheme``.

    Cusp parity of an on-shell Wigner-caustic branch depends on how its end
    points are classified and is reported as ``None`` here.
    """
    pairs = list(scheme.pairs)
    ends: tuple[int, ...] = ()
    if scheme.kind is LambdaClass.HALF and scheme.on_shell:
        ends = (pairs[0][0], pairs[-1][0])
        body = pairs[1:-1]
    else:
        body = pairs[:-1]
    infl = sum(1 for k, l in body if structure.is_extremum(k) or structure.is_extremum(l))
    if scheme.kind is LambdaClass.GENERIC:
        return BranchPrediction("integer", "even", infl, scheme.on_shell, ())
    if scheme.on_shell:
        return BranchPrediction("open", None, infl, True, ends)
    if scheme.half_turn:
        k, l = pairs[0]
        opposite = (structure.points[k].turn - structure.points[l].turn) % 2 == 1
        if opposite:
            return BranchPrediction("half-integer", "odd", infl, False, ())
    return BranchPrediction("integer", "even", infl, False, ())
