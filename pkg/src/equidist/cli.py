"""Command-line front end.

Commands: ``compute`` (branches of E_lam as CSV/SVG/JSON), ``branches``
(glueing schemes with their predictions), ``css`` (centre symmetry set) and
``verify`` (theorem checks on fixtures or random curves).

Every option can also be set from the environment: ``EQUIDIST_LAMBDA``,
``EQUIDIST_SAMPLES``, ``EQUIDIST_OUT``, ``EQUIDIST_FORMAT``,
``EQUIDIST_SEED`` and ``EQUIDIST_TOL`` (whitespace separated ``key=val``).
"""

from __future__ import annotations

import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from contextlib import contextmanager
from dataclasses import dataclass, field
from pathlib import Path

import click
import numpy as np

from . import curve as curve_mod
from . import equidistant as eq_mod
from . import parallelism as par_mod
from .curve import GRID, TWO_PI, FourierCurve, genericity_check, load_curve
from .equidistant import branch_polyline, css_curve, full_equidistant
from .errors import EquidistError, InvalidInput, NonGeneric
from .gluing import LambdaClass, maximal_schemes, predict
from .parallelism import parallel_structure

FORMATS = ("svg", "csv", "json")

# --tol keys and the module constants they override for the duration of a run
TOLERANCES = {
    "cusp_width": (eq_mod, "CUSP_WIDTH"),
    "zero_curvature": (eq_mod, "ZERO_CURVATURE"),
    "tangential": (eq_mod, "TANGENTIAL_TOL"),
    "pole": (eq_mod, "POLE_TOL"),
    "end_noise": (eq_mod, "END_NOISE"),
    "level": (par_mod, "LEVEL_TOL"),
    "collision": (par_mod, "COLLISION_TOL"),
    "extremum": (curve_mod, "EXTREMUM_TOL"),
    "parallel": (curve_mod, "PARALLEL_TOL"),
}

CSV_COLUMNS = ("s", "t", "x", "y", "kappa_E", "is_cusp", "is_inflexion")
CSS_COLUMNS = ("s", "t", "x", "y", "curvature")

SVG_STYLE = (
    ".curve{fill:none;stroke:#222222;stroke-width:1.5}"
    ".branch{fill:none;stroke:#1f77b4;stroke-width:1.2}"
    ".css{fill:none;stroke:#2ca02c;stroke-width:1.2}"
    ".cusp{fill:#d62728;stroke:none}"
    ".inflexion{fill:#ff7f0e;stroke:none}"
    ".endpoint{fill:#9467bd;stroke:none}"
)


@dataclass
class RunConfig:
    command: str
    input: Path | None = None
    lambdas: tuple[float, ...] = ()
    samples: int = GRID
    out: Path | None = None
    formats: tuple[str, ...] = FORMATS
    seed: int = 7
    tol: dict[str, float] = field(default_factory=dict)

    def __post_init__(self) -> None:
        n = self.samples
        if n < 256 or n > 65536 or n & (n - 1):
            raise InvalidInput(f"--samples must be a power of two in [256, 65536], got {n}")
        for fmt in self.formats:
            if fmt not in FORMATS:
                raise InvalidInput(f"unknown format {fmt!r}; choose from {', '.join(FORMATS)}")
        for key in self.tol:
            if key not in TOLERANCES:
                raise InvalidInput(f"unknown tolerance {key!r}; choose from {', '.join(sorted(TOLERANCES))}")
        if self.command in ("compute", "branches"):
            for lam in self.lambdas:
                if not math.isfinite(lam) or lam in (0.0, 1.0):
                    raise InvalidInput(f"lambda must be finite and differ from 0 and 1, got {lam}")


@contextmanager
def tolerance_overrides(tol: dict[str, float]):
    saved = {}
    try:
        for key, value in tol.items():
            module, attr = TOLERANCES[key]
            saved[key] = getattr(module, attr)
            setattr(module, attr, value)
        yield
    finally:
        for key, value in saved.items():
            module, attr = TOLERANCES[key]
            setattr(module, attr, value)


def _num(x: float) -> str:
    """17 significant digits, enough for an exact round trip."""
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return f"{x:.17g}"


def _lam_tag(lam: float) -> str:
    return f"lam{lam:g}"


def _parse_lambdas(text: str) -> tuple[float, ...]:
    try:
        values = tuple(float(v) for v in text.split(",") if v.strip())
    except ValueError as exc:
        raise InvalidInput(f"bad --lambda list {text!r}") from exc
    if not values:
        raise InvalidInput("--lambda needs at least one value")
    return values


def _parse_tol(items) -> dict[str, float]:
    out = {}
    for item in items:
        for part in item.split():
            key, sep, value = part.partition("=")
            if not sep:
                raise InvalidInput(f"--tol expects key=val, got {part!r}")
            try:
                out[key.strip()] = float(value)
            except ValueError as exc:
                raise InvalidInput(f"--tol {key}: {value!r} is not a number") from exc
    return out


def _parse_formats(text: str) -> tuple[str, ...]:
    return tuple(f.strip().lower() for f in text.split(",") if f.strip())


def _generic_curve(path: Path, samples: int, allow_symmetric: bool = False) -> FourierCurve:
    curve = load_curve(path)
    report = genericity_check(curve, samples)
    flags = [f for f in report.flags if not (allow_symmetric and f == "CentrallySymmetricDegenerate")]
    if flags:
        raise NonGeneric(f"{path}: curve is not generic ({', '.join(flags)})")
    return curve


def _write_csv(path: Path, columns, rows) -> None:
    lines = [",".join(columns)]
    for row in rows:
        cells = []
        for v in row:
            if isinstance(v, (bool, np.bool_)):
                cells.append("1" if v else "0")
            else:
                cells.append(_num(float(v)))
        lines.append(",".join(cells))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def _split_finite(points: np.ndarray) -> list[np.ndarray]:
    """Runs of finite points; nan rows (poles) break a polyline."""
    ok = np.all(np.isfinite(points), axis=1)
    runs, cur = [], []
    for p, good in zip(points, ok):
        if good:
            cur.append(p)
        elif cur:
            runs.append(np.array(cur))
            cur = []
    if cur:
        runs.append(np.array(cur))
    return runs


def render_svg(curve_points: np.ndarray, polylines: list[tuple[str, np.ndarray]],
               markers: list[tuple[str, np.ndarray]], title: str = "") -> str:
    """SVG in math orientation (y up) framed by the bounding box plus a 5% margin."""
    pts = [curve_points] + [p for _, p in polylines] + [m[None, :] for _, m in markers]
    allp = np.concatenate([p[np.all(np.isfinite(p), axis=1)] for p in pts if len(p)])
    lo, hi = allp.min(axis=0), allp.max(axis=0)
    span = float(max(hi[0] - lo[0], hi[1] - lo[1], 1e-9))
    pad = 0.05 * span
    x0, y0 = float(lo[0]) - pad, float(lo[1]) - pad
    w, h = float(hi[0] - lo[0]) + 2 * pad, float(hi[1] - lo[1]) + 2 * pad
    r = 0.008 * span

    def path(p: np.ndarray) -> str:
        return " ".join(f"{x + 0.0:.9g},{0.0 - y:.9g}" for x, y in p)

    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" viewBox="{x0:.9g} {-(y0 + h):.9g} {w:.9g} {h:.9g}" '
        f'width="800" height="{800 * h / w:.6g}">',
        f"<style>{SVG_STYLE}</style>",
    ]
    if title:
        out.append(f"<title>{title}</title>")
    out.append(f'<polyline class="curve" vector-effect="non-scaling-stroke" points="{path(curve_points)}"/>')
    for cls, p in polylines:
        for run in _split_finite(p):
            out.append(f'<polyline class="{cls}" vector-effect="non-scaling-stroke" points="{path(run)}"/>')
    for cls, m in markers:
        out.append(f'<circle class="{cls}" cx="{m[0]:.9g}" cy="{0.0 - m[1]:.9g}" r="{r:.6g}"/>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def _curve_polyline(curve: FourierCurve, n: int = 1024) -> np.ndarray:
    return curve(np.linspace(0.0, TWO_PI, n + 1))


def _branch_summary(i: int, br) -> dict:
    return {
        "index": i,
        "scheme": br.scheme.notation(),
        "closed": bool(br.closed),
        "nodes": int(len(br.s)),
        "cusps": len(br.cusps),
        "inflexions": len(br.inflexions),
        "rotation": br.rotation,
        "endpoints": [int(e) for e in br.endpoints],
    }


def cmd_compute(cfg: RunConfig) -> dict:
    curve = _generic_curve(cfg.input, cfg.samples)
    st = parallel_structure(curve, cfg.samples)
    # per-lambda work is independent; results come back in input order
    with ThreadPoolExecutor(max_workers=min(len(cfg.lambdas), os.cpu_count() or 1)) as pool:
        results = list(pool.map(lambda lam: full_equidistant(st, lam), cfg.lambdas))
    stem = cfg.input.stem
    summary = {"input": str(cfg.input), "samples": cfg.samples, "parallel_points": st.size,
               "lambdas": []}
    files: list[Path] = []
    for lam, branches in zip(cfg.lambdas, results):
        entry = {"lambda": lam, "class": LambdaClass.HALF.value if lam == 0.5 else LambdaClass.GENERIC.value,
                 "branch_count": len(branches),
                 "cusps": sum(len(b.cusps) for b in branches),
                 "inflexions": sum(len(b.inflexions) for b in branches),
                 "branches": [_branch_summary(i, b) for i, b in enumerate(branches)]}
        summary["lambdas"].append(entry)
        if cfg.out is None:
            continue
        tag = _lam_tag(lam)
        if "csv" in cfg.formats:
            for i, b in enumerate(branches):
                p = cfg.out / f"{stem}_{tag}_branch{i}.csv"
                _write_csv(p, CSV_COLUMNS, branch_polyline(b))
                files.append(p)
        if "svg" in cfg.formats:
            polylines = [("branch", b.points) for b in branches]
            markers = [("cusp", np.asarray(c.position)) for b in branches for c in b.cusps]
            markers += [("inflexion", np.asarray(f.position)) for b in branches for f in b.inflexions]
            p = cfg.out / f"{stem}_{tag}.svg"
            p.write_text(render_svg(_curve_polyline(curve), polylines, markers, f"{stem} {tag}"),
                         encoding="utf-8")
            files.append(p)
    if cfg.out is not None and "json" in cfg.formats:
        p = cfg.out / f"{stem}_summary.json"
        p.write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n", encoding="utf-8")
        files.append(p)
    summary["files"] = [str(f) for f in files]
    return summary


def cmd_branches(cfg: RunConfig) -> dict:
    curve = _generic_curve(cfg.input, cfg.samples)
    st = parallel_structure(curve, cfg.samples)
    kinds = []
    for lam in cfg.lambdas:
        kind = LambdaClass.HALF if lam == 0.5 else LambdaClass.GENERIC
        if kind not in kinds:
            kinds.append(kind)
    out = {"input": str(cfg.input), "parallel_points": st.size,
           "extrema": [p.index for p in st.points if p.is_extremum], "schemes": {}}
    for kind in kinds:
        rows = []
        for sc in maximal_schemes(st, kind):
            pr = predict(sc, st)
            rows.append({"scheme": sc.notation(), "closed": sc.closed, "on_shell": sc.on_shell,
                         "rotation_class": pr.rotation_class, "cusp_parity": pr.cusp_parity,
                         "inflexions": pr.inflexions})
        out["schemes"][kind.value] = rows
    return out


def _format_branches(data: dict) -> str:
    lines = [f"#S_M = {data['parallel_points']}, extrema at "
             + (", ".join(f"p{k}" for k in data["extrema"]) or "none")]
    for kind, rows in data["schemes"].items():
        lines.append(f"{kind}: {len(rows)} scheme(s)")
        for r in rows:
            shape = "on-shell" if r["on_shell"] and not r["closed"] else ("closed" if r["closed"] else "open")
            parity = r["cusp_parity"] or "endpoint-dependent"
            lines.append(f"  {r['scheme']}  [{shape}; rotation {r['rotation_class']}; "
                         f"cusps {parity}; inflexions {r['inflexions']}]")
    return "\n".join(lines)


def cmd_css(cfg: RunConfig) -> dict:
    curve = _generic_curve(cfg.input, cfg.samples, allow_symmetric=True)
    st = parallel_structure(curve, cfg.samples)
    css = css_curve(st)
    stem = cfg.input.stem
    summary = {"input": str(cfg.input), "degenerate": css.degenerate, "branches": len(css.branches),
               "cusps": len(css.cusps), "poles": len(css.poles),
               "endpoints": [[int(b), int(n)] for b, n in css.endpoints]}
    if css.degenerate:
        centre = np.nanmean(css.points, axis=0)
        summary["centre"] = [float(centre[0]), float(centre[1])]
    files: list[Path] = []
    if cfg.out is not None:
        if "csv" in cfg.formats:
            for i, b in enumerate(css.branches):
                rows = [(s, t, q[0], q[1], k) for s, t, q, k in zip(b["s"], b["t"], b["points"], b["curvature"])]
                if css.degenerate:
                    rows = [(b["s"][0], b["t"][0], centre[0], centre[1], math.nan)]
                p = cfg.out / f"{stem}_css_branch{i}.csv"
                _write_csv(p, CSS_COLUMNS, rows)
                files.append(p)
        if "svg" in cfg.formats:
            polylines = [] if css.degenerate else [("css", b["points"]) for b in css.branches]
            markers = [("cusp", np.asarray(c["position"])) for c in css.cusps]
            if css.degenerate:
                markers.append(("cusp", centre))
            for bi, n in css.endpoints:
                markers.append(("endpoint", css.branches[bi]["points"][n]))
            p = cfg.out / f"{stem}_css.svg"
            p.write_text(render_svg(_curve_polyline(curve), polylines, markers, f"{stem} css"),
                         encoding="utf-8")
            files.append(p)
        if "json" in cfg.formats:
            p = cfg.out / f"{stem}_css_summary.json"
            p.write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n", encoding="utf-8")
            files.append(p)
    summary["files"] = [str(f) for f in files]
    return summary


def cmd_verify(cfg: RunConfig, fixtures: tuple[str, ...], random_count: int | None):
    from .fixtures import FIXTURE_NAMES
    from .theorems import VerificationReport, check_random, verify_fixture

    report = VerificationReport()
    names = FIXTURE_NAMES if "all" in fixtures else fixtures
    for name in names:
        if name not in FIXTURE_NAMES:
            raise InvalidInput(f"unknown fixture {name!r}; choose from all, {', '.join(FIXTURE_NAMES)}")
        verify_fixture(name, report)
    if random_count:
        check_random(random_count, cfg.seed, report=report)
    if cfg.out is not None:
        if "json" in cfg.formats:
            (cfg.out / "report.json").write_text(report.to_json() + "\n", encoding="utf-8")
        (cfg.out / "summary.txt").write_text(report.summary() + "\n", encoding="utf-8")
    return report


def _config(ctx: click.Context, command: str, input_path=None) -> RunConfig:
    o = ctx.obj
    cfg = RunConfig(command, Path(input_path) if input_path else None, o["lambdas"], o["samples"],
                    Path(o["out"]) if o["out"] else None, o["formats"], o["seed"], o["tol"])
    if cfg.out is not None:
        cfg.out.mkdir(parents=True, exist_ok=True)
    return cfg


def _run(fn):
    """Map package errors to exit codes 2/3/4 with a one-line message."""
    try:
        return fn()
    except EquidistError as exc:
        click.echo(f"error: {type(exc).__name__}: {exc}", err=True)
        sys.exit(exc.exit_code)


def _common(f):
    options = [
        click.option("--lambda", "lambdas", default="0.5", envvar="EQUIDIST_LAMBDA", show_default=True,
                     help="Comma separated lambda values."),
        click.option("--samples", default=GRID, type=int, envvar="EQUIDIST_SAMPLES", show_default=True,
                     help="Grid size N (power of two, 256..65536)."),
        click.option("--out", type=click.Path(file_okay=False), envvar="EQUIDIST_OUT",
                     help="Output directory; nothing is written without it."),
        click.option("--format", "formats", default="svg,csv,json", envvar="EQUIDIST_FORMAT",
                     show_default=True, help="Comma separated subset of svg,csv,json."),
        click.option("--seed", default=7, type=int, envvar="EQUIDIST_SEED", show_default=True,
                     help="Seed for randomized verification."),
        click.option("--tol", multiple=True, envvar="EQUIDIST_TOL",
                     help=f"Tolerance override key=val; keys: {', '.join(sorted(TOLERANCES))}."),
    ]
    for opt in reversed(options):
        f = opt(f)
    return f


def _store(ctx: click.Context, lambdas, samples, out, formats, seed, tol) -> None:
    ctx.ensure_object(dict)
    ctx.obj.update(lambdas=_parse_lambdas(lambdas), samples=samples, out=out,
                   formats=_parse_formats(formats), seed=seed, tol=_parse_tol(tol))


@click.group()
@click.version_option(package_name="artifact")
def main() -> None:
    """Affine equidistants, Wigner caustic and centre symmetry set of closed curves."""


@main.command()
@click.argument("input_path", type=click.Path(dir_okay=False))
@_common
@click.pass_context
def compute(ctx, input_path, **opts):
    """Trace every branch of E_lam for each requested lambda."""
    def run():
        _store(ctx, **opts)
        cfg = _config(ctx, "compute", input_path)
        with tolerance_overrides(cfg.tol):
            summary = cmd_compute(cfg)
        click.echo(json.dumps(summary, indent=2, sort_keys=True))
    _run(run)


@main.command()
@click.argument("input_path", type=click.Path(dir_okay=False))
@_common
@click.option("--json", "as_json", is_flag=True, help="Print JSON instead of text.")
@click.pass_context
def branches(ctx, input_path, as_json, **opts):
    """List maximal glueing schemes in two-row notation with their predictions."""
    def run():
        _store(ctx, **opts)
        cfg = _config(ctx, "branches", input_path)
        with tolerance_overrides(cfg.tol):
            data = cmd_branches(cfg)
        if cfg.out is not None and "json" in cfg.formats:
            (cfg.out / f"{cfg.input.stem}_branches.json").write_text(
                json.dumps(data, indent=2, sort_keys=True) + "\n", encoding="utf-8")
        click.echo(json.dumps(data, indent=2, sort_keys=True) if as_json else _format_branches(data))
    _run(run)


@main.command()
@click.argument("input_path", type=click.Path(dir_okay=False))
@_common
@click.pass_context
def css(ctx, input_path, **opts):
    """Centre symmetry set with cusps, poles and end points."""
    def run():
        _store(ctx, **opts)
        cfg = _config(ctx, "css", input_path)
        with tolerance_overrides(cfg.tol):
            summary = cmd_css(cfg)
        click.echo(json.dumps(summary, indent=2, sort_keys=True))
    _run(run)


@main.command()
@click.option("--fixtures", "fixture_set", type=click.Choice(["all"]), help="Run every named fixture.")
@click.option("--fixture", "fixture_names", multiple=True, help="Run one named fixture (repeatable).")
@click.option("--random", "random_count", type=int, help="Number of random generic curves.")
@_common
@click.pass_context
def verify(ctx, fixture_set, fixture_names, random_count, **opts):
    """Check the global theorems; prints a summary and a JSON report, exits 1 on failure."""
    def run():
        _store(ctx, **opts)
        cfg = _config(ctx, "verify")
        names = ("all",) if fixture_set else tuple(fixture_names)
        if not names and not random_count:
            raise InvalidInput("nothing to verify: give --fixtures all, --fixture NAME or --random K")
        with tolerance_overrides(cfg.tol):
            report = cmd_verify(cfg, names, random_count)
        click.echo(report.summary(), err=True)
        click.echo(report.to_json())
        return report
    report = _run(run)
    sys.exit(0 if report.passed else 1)


if __name__ == "__main__":
    main()
