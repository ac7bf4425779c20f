"""Named test curves shipped with the package, and random generic curves.

Each fixture is a JSON document holding the Fourier coefficients plus any
derived data the checks need (arc intervals, loop parameters). The
documents are produced by :func:`build_documents`; ``python3 -m
equidist.fixtures`` rewrites them.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from .curve import TWO_PI, FourierCurve, genericity_check, signed_curvature
from .errors import EquidistError, InvalidInput
from .parallelism import angle_function, opposite_curvature, parallel_partners
from .roots import refine_root

FIXTURE_NAMES = (
    "circle", "ellipse", "perturbed_ellipse", "c2", "c3", "c4", "w1",
    "onshell_odd", "degenerate_inflexion", "eight_inflexions", "two_arc", "loop",
)


@dataclass(frozen=True)
class Fixture:
    name: str
    curve: FourierCurve
    meta: dict = field(default_factory=dict)


def rosette(n: int, b: float, label: str = "") -> FourierCurve:
    """z = exp(i n t) + b exp(i (n-1) t): positive curvature and rotation n for small b."""
    return FourierCurve.from_complex({n: 1.0, n - 1: b}, label or f"c{n}")


def _ratio(curve: FourierCurve, s: float, angle) -> tuple[float, float]:
    (t,) = parallel_partners(curve, s, angle)
    return abs(opposite_curvature(curve, s, t)) / abs(signed_curvature(curve, s)), t


def _two_arc_meta(curve: FourierCurve) -> dict:
    """Arc F0 on which the partner-to-point curvature ratio runs from 2 to 3."""
    angle = angle_function(curve)
    s = np.linspace(0.5 * math.pi, math.pi, 257)
    r = np.array([_ratio(curve, x, angle)[0] for x in s])
    ends = []
    for level in (2.0, 3.0):
        i = int(np.nonzero(np.diff(np.sign(r - level)))[0][0])
        root = refine_root(lambda x: _ratio(curve, x, angle)[0] - level, None, s[i], s[i + 1], 1e-14)
        ends.append(root)
    s0, s1 = ends
    t0, t1 = _ratio(curve, s0, angle)[1], _ratio(curve, s1, angle)[1]
    return {"F0": [s0, s1], "F1": [t0, t1], "side": "different"}


def _loop_meta(curve: FourierCurve) -> dict:
    """Parameters of the double point bounding the inner loop of a limacon-like rosette."""
    # the curve is symmetric under t -> -t (conjugation), so the double point is real
    y = lambda x: float(curve(x)[1])
    t1 = refine_root(y, None, 0.5 * math.pi + 0.1, math.pi - 1e-3, 1e-14)
    return {"loop": [t1, TWO_PI - t1]}


def build_documents() -> dict[str, dict]:
    """Coefficient documents for every named fixture."""
    docs: dict[str, dict] = {}

    def put(name, curve, **meta):
        doc = curve.to_dict()
        doc["label"] = name
        doc.update(meta)
        docs[name] = doc

    put("circle", FourierCurve([0, 1], [0, 0], [0, 0], [0, 1]))
    put("ellipse", FourierCurve([0, 2], [0, 0], [0, 0], [0, 1]))
    put("perturbed_ellipse", FourierCurve([0, 1, 0.06], [0, 0, 0], [0, 0, 0], [0, 1, -0.06]))
    put("c2", rosette(2, 1.5), rotation=2)
    put("c3", rosette(3, 1.2), rotation=3)
    put("c4", rosette(4, 1.1), rotation=4)
    put("w1", FourierCurve.from_complex({1: 1.0, 2: 0.35}), rotation=1)
    put("onshell_odd", FourierCurve.from_complex(
        {1: 1.0, 2: 0.35, -1: 0.0147 - 0.0448j, 3: 0.0407 - 0.0282j, -2: -0.0522 + 0.0046j}))
    put("degenerate_inflexion", FourierCurve.from_complex({1: 1.0, 2: 0.25}))
    put("eight_inflexions", FourierCurve.from_complex({1: 1.0, 5: 0.1, 2: 0.03, -2: 0.02}))
    egg = FourierCurve.from_complex({1: 1.0, 2: 0.23})
    put("two_arc", egg, **_two_arc_meta(egg))
    c2 = rosette(2, 1.5)
    put("loop", c2, **_loop_meta(c2))
    return docs


def _fixture_dir():
    return resources.files("equidist") / "fixtures"


def load_fixture(name: str) -> Fixture:
    if name not in FIXTURE_NAMES:
        raise InvalidInput(f"unknown fixture {name!r}; choose from {', '.join(FIXTURE_NAMES)}")
    doc = json.loads((_fixture_dir() / f"{name}.json").read_text(encoding="utf-8"))
    meta = {k: v for k, v in doc.items() if k not in ("xc", "xs", "yc", "ys", "label")}
    return Fixture(name, FourierCurve.from_dict(doc), meta)


def write_documents(directory: Path | None = None) -> list[Path]:
    directory = Path(directory) if directory else Path(str(_fixture_dir()))
    directory.mkdir(parents=True, exist_ok=True)
    out = []
    for name, doc in build_documents().items():
        path = directory / f"{name}.json"
        path.write_text(json.dumps(doc, indent=2) + "\n", encoding="utf-8")
        out.append(path)
    return out


def random_curve(rng: np.random.Generator, degree: int = 6) -> FourierCurve:
    """Random closed curve with coefficient magnitudes decaying like 1/k^2."""
    coeffs = {}
    for k in range(-degree, degree + 1):
        if k == 0:
            continue
        scale = 1.0 / (k * k)
        coeffs[k] = complex(*rng.normal(0.0, scale, 2))
    coeffs[1] = coeffs[1] + 1.5
    return FourierCurve.from_complex(coeffs, "random")


def random_generic_curves(count: int, seed: int, degree: int = 6, max_tries: int = 50):
    """``count`` curves passing the genericity screen, by seeded rejection sampling."""
    rng = np.random.default_rng(seed)
    out = []
    tries = 0
    while len(out) < count:
        tries += 1
        if tries > max_tries * count:
            raise RuntimeError("rejection sampling did not find enough generic curves")
        try:
            curve = random_curve(rng, degree)
            if genericity_check(curve).generic:
                out.append(curve)
        except EquidistError:
            continue
    return out


if __name__ == "__main__":
    for p in write_documents():
        print(p)
