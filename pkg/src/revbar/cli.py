"""Command-line entry point: ``revbar <subcommand> ...``.

Exit codes: 0 on success or passing report, 1 when a reproduction check
fails, 2 on usage errors (bad flags or parameters).
"""

from __future__ import annotations

import csv
import inspect
import io
import json
import logging
import math
import sys
from typing import Optional

import click
import numpy as np

from .bottleneck import bottleneck_distance, matching_feasible
from .constructions import (
    BulkedSphereParams,
    MultiBulkedParams,
    embed_A,
    embed_L,
    embed_Q,
    family_profile,
)
from .loop_barcode import class_table, infer_barcode, provenance, reparametrize
from .persistence_core import Barcode
from .profiles import ProfileFunction
from .reproduce import EXAMPLES, run_example
from .revolution_geodesics import census_class_alpha, parallel_circles
from .svg import barcode_plot, line_plot

log = logging.getLogger(__name__)

FAMILIES = ("torus", "bulked_sphere", "multi_bulked")


def _dumps(payload) -> str:
    return json.dumps(payload, sort_keys=True, indent=2) + "\n"


def _emit(text: str, out: Optional[str]) -> None:
    if out:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        click.echo(text, nl=False)


def _floats(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise click.BadParameter(f"expected comma-separated numbers, got {text!r}") from None


def common_options(fn):
    fn = click.option("--format", "fmt", type=click.Choice(["json", "csv", "svg"]), default=None, help="Output format.")(fn)
    fn = click.option("--out", type=click.Path(dir_okay=False, writable=True), default=None, help="Write output here instead of stdout.")(fn)
    fn = click.option("--seed", type=int, default=0, show_default=True)(fn)
    fn = click.option("--grid", type=click.IntRange(min=2), default=10_000, show_default=True, help="Sample count for ratio and plot grids.")(fn)
    fn = click.option("--ode-tol", type=float, default=1e-10, show_default=True)(fn)
    fn = click.option("--tol", type=float, default=1e-9, show_default=True, help="Quadrature tolerance.")(fn)
    return fn


def family_options(fn):
    fn = click.option("--from-file", type=click.Path(exists=True, dir_okay=False), default=None, help="Profile JSON instead of a family.")(fn)
    fn = click.option("--smooth", is_flag=True, help="Smooth the corners of the sphere families.")(fn)
    fn = click.option("--tau", type=float, default=0.05, show_default=True)(fn)
    fn = click.option("--xs", type=str, default=None, help="Comma-separated bulk parameters (multi_bulked).")(fn)
    fn = click.option("--x", type=float, default=0.0, show_default=True)(fn)
    fn = click.option("--n", type=click.IntRange(min=1), default=1, show_default=True)(fn)
    fn = click.option("--copies", type=click.IntRange(min=1), default=1, show_default=True)(fn)
    fn = click.option("--eps", type=float, default=0.0, show_default=True)(fn)
    fn = click.option("--m", type=float, default=2.0, show_default=True)(fn)
    fn = click.option("--k", type=float, default=1.0, show_default=True)(fn)
    fn = click.argument("family", required=False, type=click.Choice(FAMILIES))(fn)
    return fn


def _family_params(family, k, m, eps, copies, n, x, xs, tau, smooth) -> dict:
    if family == "torus":
        return {"k": k, "m": m, "eps": eps, "copies": copies}
    if family == "bulked_sphere":
        return {"n": n, "x": x, "smooth": smooth}
    if xs is None:
        raise click.UsageError("multi_bulked needs --xs")
    return {"n": n, "xs": _floats(xs), "tau": tau, "smooth": smooth}


def _load_profile(family, from_file, **params) -> ProfileFunction:
    if from_file:
        with open(from_file, encoding="utf-8") as fh:
            return ProfileFunction.from_json(fh.read())
    if family is None:
        raise click.UsageError("give a FAMILY or --from-file")
    try:
        return family_profile(family, **_family_params(family, **params))
    except ValueError as exc:
        raise click.UsageError(str(exc)) from None


def _default_threshold(family, n, x, xs, tau) -> Optional[float]:
    if family == "bulked_sphere":
        return BulkedSphereParams(n, x).threshold
    if family == "multi_bulked" and xs:
        vals = _floats(xs)
        return MultiBulkedParams(len(vals), n, vals, tau).threshold
    return None


@click.group()
@click.option("-v", "--verbose", count=True, help="Log progress to stderr.")
def cli(verbose: int) -> None:
    """Barcodes, bottleneck distances and closed geodesics of revolution surfaces."""
    logging.basicConfig(level=logging.WARNING - 10 * min(verbose, 2), stream=sys.stderr)


@cli.command()
@family_options
@common_options
def profile(family, k, m, eps, copies, n, x, xs, tau, smooth, from_file, tol, ode_tol, grid, seed, out, fmt):
    """Expand a profile family into JSON, CSV samples or an SVG plot of r and r'."""
    prof = _load_profile(family, from_file, k=k, m=m, eps=eps, copies=copies, n=n, x=x, xs=xs, tau=tau, smooth=smooth)
    fmt = fmt or "json"
    if fmt == "json":
        _emit(prof.to_json() + "\n", out)
        return
    ls = np.linspace(prof.lo, prof.hi, min(grid, 2000))
    r, dr = prof.value(ls), prof.deriv(ls)
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["l", "r", "dr"])
        w.writerows((f"{a:.12g}", f"{b:.12g}", f"{c:.12g}") for a, b, c in zip(ls, r, dr))
        _emit(buf.getvalue(), out)
    else:
        _emit(line_plot(ls, [r, dr], ["r", "r'"], title=prof.name or (family or "profile")), out)


def _geodesic_row(g) -> dict:
    return {
        "ident": g.ident,
        "kind": g.kind,
        "energy": g.energy,
        "length": g.length,
        "homotopy": list(g.homotopy),
        "index": g.index,
        "nullity": g.nullity,
        "clairaut_C": g.clairaut_C,
        "location": g.location,
    }


@cli.command()
@family_options
@common_options
def geodesics(family, k, m, eps, copies, n, x, xs, tau, smooth, from_file, tol, ode_tol, grid, seed, out, fmt):
    """Census of closed geodesics: parallel circles plus oscillating ones on tori."""
    prof = _load_profile(family, from_file, k=k, m=m, eps=eps, copies=copies, n=n, x=x, xs=xs, tau=tau, smooth=smooth)
    try:
        if prof.kind == "periodic":
            found = census_class_alpha(prof, tol=tol)
        else:
            found = parallel_circles(prof)
    except ValueError as exc:
        raise click.UsageError(str(exc)) from None
    rows = sorted((_geodesic_row(g) for g in found), key=lambda d: (d["energy"], d["ident"]))
    fmt = fmt or "json"
    if fmt == "json":
        _emit(_dumps({"profile": prof.name, "geodesics": rows}), out)
    elif fmt == "csv":
        buf = io.StringIO()
        fields = ["ident", "kind", "energy", "length", "homotopy", "index", "nullity", "clairaut_C", "location"]
        w = csv.DictWriter(buf, fieldnames=fields, lineterminator="\n")
        w.writeheader()
        for row in rows:
            w.writerow({**row, "homotopy": " ".join(map(str, row["homotopy"]))})
        _emit(buf.getvalue(), out)
    else:
        raise click.UsageError("geodesics supports json and csv")


@cli.command()
@family_options
@click.option("--class", "klass", type=click.Choice(["alpha", "pt"]), default="alpha", show_default=True)
@click.option("--degree", type=click.IntRange(min=0), default=None, help="Keep one degree only.")
@click.option(
    "--param", "param", type=click.Choice(["energy", "length", "log"]), default="energy", show_default=True,
    help="Parametrization of the bar endpoints.",
)
@click.option("--threshold", type=float, default=None, help="Energy truncation; defaults to the family's neck threshold.")
@common_options
def barcode(family, k, m, eps, copies, n, x, xs, tau, smooth, from_file, klass, degree, param, threshold, tol, ode_tol, grid, seed, out, fmt):
    """Energy barcode of a profile in a free homotopy class."""
    prof = _load_profile(family, from_file, k=k, m=m, eps=eps, copies=copies, n=n, x=x, xs=xs, tau=tau, smooth=smooth)
    if threshold is None:
        threshold = _default_threshold(family, n, x, xs, tau)
    try:
        tab = class_table(prof, klass, threshold, tol)
        code = infer_barcode(tab)
        if degree is not None:
            code = code.in_degree(degree)
        if param != "energy":
            code = reparametrize(code, f"energy->{param}")
    except ValueError as exc:
        raise click.UsageError(str(exc)) from None
    fmt = fmt or "json"
    if fmt == "svg":
        _emit(barcode_plot(code, title=f"{prof.name} class {klass}", axis=param), out)
    elif fmt == "json":
        payload = json.loads(code.to_json())
        payload["provenance"] = [{"energy": e, "sources": src} for e, src in provenance(tab).items()]
        if tab.unresolved:
            payload["unresolved"] = list(tab.unresolved)
        _emit(_dumps(payload), out)
    else:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["degree", "birth", "death"])
        for b in code:
            w.writerow([b.degree, repr(b.birth), "inf" if b.death is None else repr(b.death)])
        _emit(buf.getvalue(), out)


def _read_barcode(path: str) -> Barcode:
    try:
        with open(path, encoding="utf-8") as fh:
            return Barcode.from_json(fh.read())
    except (ValueError, KeyError, TypeError) as exc:
        raise click.UsageError(f"{path}: not a barcode file ({exc})") from None


def _bar_json(b) -> dict:
    return b.to_dict()


@cli.command()
@click.argument("b1", type=click.Path(exists=True, dir_okay=False))
@click.argument("b2", type=click.Path(exists=True, dir_okay=False))
@click.option("--witness", is_flag=True, help="Also print an optimal matching.")
@click.option("--out", type=click.Path(dir_okay=False, writable=True), default=None)
def bottleneck(b1, b2, witness, out):
    """Bottleneck distance between two barcode JSON files."""
    B1, B2 = _read_barcode(b1), _read_barcode(b2)
    d = bottleneck_distance(B1, B2)
    payload: dict = {"distance": d if math.isfinite(d) else "inf"}
    if witness and math.isfinite(d):
        mt = matching_feasible(B1, B2, d)
        payload["witness"] = {
            "pairs": [[_bar_json(p), _bar_json(q)] for p, q in mt.pairs],
            "erased1": [_bar_json(b) for b in mt.erased1],
            "erased2": [_bar_json(b) for b in mt.erased2],
            "cost": mt.cost(),
        }
    _emit(_dumps(payload), out)


@cli.command()
@click.argument("vector")
@click.option("--against", default=None, help="Second vector; prints the distance ratios.")
@click.option("--out", type=click.Path(dir_okay=False, writable=True), default=None)
def embed(vector, against, out):
    """Image of VECTOR (comma-separated) under L and Q."""
    x = np.array(_floats(vector))
    if x.size == 0:
        raise click.UsageError("empty vector")
    payload: dict = {"N": int(x.size), "x": x.tolist(), "L": embed_L(x).tolist(), "Q": embed_Q(x).tolist()}
    if against is not None:
        y = np.array(_floats(against))
        if y.shape != x.shape:
            raise click.UsageError("vectors differ in length")
        N = x.size
        d = float(np.max(np.abs(x - y)))
        dL = float(np.max(np.abs(embed_L(x) - embed_L(y))))
        u, v = np.abs(embed_L(x)), np.abs(embed_L(y))
        dA = float(np.max(np.abs(embed_A(u) - embed_A(v))))
        du = float(np.max(np.abs(u - v)))
        dQ = float(np.max(np.abs(embed_Q(x) - embed_Q(y))))
        slack = 1e-12 * max(1.0, d)
        payload["report"] = {
            "d": d,
            "dL": dL,
            "dQ": dQ,
            "L_chain": bool(0.5 * d - slack <= dL <= d + slack),
            "A_chain": bool(0.5 * du - slack <= dA <= 2 * N * du + slack),
            "Q_chain": bool(0.25 * d - slack <= dQ <= 2 * N * d + slack),
        }
    _emit(_dumps(payload), out)


def _coerce(name: str, raw: str, default):
    try:
        if isinstance(default, bool):
            return raw.lower() in ("1", "true", "yes")
        if isinstance(default, int):
            return int(raw)
        if isinstance(default, float):
            return float(raw)
        if isinstance(default, tuple):
            if default and isinstance(default[0], tuple):
                vals = _floats(raw)
                return tuple(zip(vals[::2], vals[1::2]))
            if default and isinstance(default[0], int):
                return tuple(int(v) for v in raw.split(","))
            return _floats(raw)
    except ValueError:
        raise click.UsageError(f"bad value for --{name}: {raw!r}") from None
    return raw


def _example_kwargs(name: str, args: list[str]) -> dict:
    sig = inspect.signature(EXAMPLES[name])
    kwargs = {}
    it = iter(args)
    for flag in it:
        if not flag.startswith("--"):
            raise click.UsageError(f"unexpected argument {flag!r}")
        key, _, raw = flag[2:].partition("=")
        key = key.replace("-", "_")
        if key not in sig.parameters:
            allowed = ", ".join(f"--{p}" for p in sig.parameters)
            raise click.UsageError(f"{name} takes {allowed}; got --{key}")
        if not raw:
            raw = next(it, None)
            if raw is None:
                raise click.UsageError(f"--{key} needs a value")
        kwargs[key] = _coerce(key, raw, sig.parameters[key].default)
    return kwargs


@cli.command(context_settings={"ignore_unknown_options": True, "allow_extra_args": True})
@click.argument("example", type=click.Choice(sorted(EXAMPLES)))
@click.option("--format", "fmt", type=click.Choice(["text", "json"]), default="text", show_default=True)
@click.option("--out", type=click.Path(dir_okay=False, writable=True), default=None, help="Also write the JSON report here.")
@click.pass_context
def reproduce(ctx, example, fmt, out):
    """Run a named reproduction; extra "--key value" flags go to the example."""
    kwargs = _example_kwargs(example, ctx.args)
    try:
        rep = run_example(example, **kwargs)
    except ValueError as exc:
        raise click.UsageError(str(exc)) from None
    text = _dumps(rep.to_dict())
    if out:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)
    click.echo(text if fmt == "json" else "\n".join(rep.lines()), nl=fmt != "json")
    ctx.exit(0 if rep.passed else 1)


def main(argv: Optional[list[str]] = None) -> None:
    cli.main(args=argv, prog_name="revbar")


if __name__ == "__main__":
    main()
