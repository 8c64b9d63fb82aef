"""Numerical reproductions of the bound checks, shared by the CLI and the tests.

Each example returns a :class:`Report` of named checks with the numbers that
went into them. A report passes when every check passes.
"""

from __future__ import annotations

import functools
import itertools
import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .bottleneck import lower_bound_opt_matching
from .constructions import (
    BulkedSphereParams,
    MultiBulkedParams,
    bulked_sphere_profile,
    comparison_constants,
    embed_A,
    embed_L,
    embed_Q,
    metric_dominates,
    multi_bulked_profile,
    profile_ratio,
    rbm_upper_bound,
    torus_profile,
    volume_and_diameter,
)
from .loop_barcode import class_barcode, stability_chain_check
from .persistence_core import Bar, Barcode, exist_geodesic_windows
from .revolution_geodesics import census_class_alpha, find_well, theta_shift

__all__ = [
    "Check",
    "Report",
    "EXAMPLES",
    "run_example",
    "workers",
    "torus_example_1_8",
    "theta_closed_form",
    "lemma_1_9",
    "bulked_lower_bound",
    "multibulked_lower_bound",
    "upper_bounds",
    "exist_geodesic_1_6",
    "embedding_7_3",
    "expected_torus_barcode",
]


@dataclass(frozen=True)
class Check:
    name: str
    passed: bool
    detail: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"name": self.name, "passed": self.passed, "detail": _plain(self.detail)}


@dataclass
class Report:
    example: str
    checks: list[Check] = field(default_factory=list)
    elapsed: float = 0.0

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def add(self, name: str, passed: bool, **detail) -> None:
        self.checks.append(Check(name, bool(passed), detail))

    def to_dict(self) -> dict:
        return {
            "example": self.example,
            "passed": self.passed,
            "elapsed_s": round(self.elapsed, 3),
            "checks": [c.to_dict() for c in self.checks],
        }

    def lines(self) -> list[str]:
        out = [f"{'PASS' if self.passed else 'FAIL'} {self.example} ({self.elapsed:.2f} s)"]
        for c in self.checks:
            nums = ", ".join(f"{k}={_short(v)}" for k, v in c.detail.items())
            out.append(f"  {'ok  ' if c.passed else 'FAIL'} {c.name}: {nums}")
        return out


def _short(v) -> str:
    if isinstance(v, float):
        return f"{v:.10g}"
    return str(v)


def _plain(v):
    if isinstance(v, dict):
        return {str(k): _plain(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_plain(x) for x in v]
    if isinstance(v, (np.floating, np.integer)):
        return v.item()
    if isinstance(v, float) and math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return v


def workers() -> int:
    """Thread cap from ``REVBAR_THREADS`` (default: CPU count)."""
    raw = os.environ.get("REVBAR_THREADS")
    if raw:
        try:
            return max(1, int(raw))
        except ValueError:
            raise ValueError(f"REVBAR_THREADS must be an integer, got {raw!r}") from None
    return os.cpu_count() or 1


def _pmap(fn: Callable, items: Sequence) -> list:
    if workers() == 1 or len(items) < 2:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers()) as pool:
        return list(pool.map(fn, items))


def _timed(fn):
    @functools.wraps(fn)
    def wrapper(*args, **kwargs) -> Report:
        t0 = time.perf_counter()
        report = fn(*args, **kwargs)
        report.elapsed = time.perf_counter() - t0
        return report

    return wrapper


# --- torus barcode ------------------------------------------------------------


def expected_torus_barcode(E_min: float, E_max: float, copies: int) -> Barcode:
    """Barcode of ``copies`` stacked tori: all finite bars equal ``[E_min, E_max)``."""
    extra = copies - 1
    bars = [Bar(E_min, None, 0), Bar(E_min, None, 1), Bar(E_max, None, 1), Bar(E_max, None, 2)]
    bars += [Bar(E_min, E_max, 0)] * extra + [Bar(E_min, E_max, 1)] * extra
    return Barcode(bars)


@_timed
def torus_example_1_8(k: float = 1.0, m: float = 2.0, eps: float = 0.01, ns: Sequence[int] = (1, 3), tol: float = 1e-9) -> Report:
    """Barcode of the class winding around the axis for ``n`` stacked tori."""
    rep = Report("torus_example_1_8")
    E_min_ref = 2 * math.pi**2 / (k + m)
    E_max_ref = 2 * math.pi**2 / m
    for n in ns:
        F = torus_profile(k, m, eps, copies=n)
        code = class_barcode(F, "alpha", tol=tol)
        energies = sorted({b.birth for b in code})
        E_min, E_max = energies[0], energies[-1]
        rep.add(
            f"n={n} structure",
            code == expected_torus_barcode(E_min, E_max, n),
            bars=len(code),
            finite=sum(1 for b in code if b.death is not None),
        )
        rel_min = abs(E_min - E_min_ref) / E_min_ref
        rel_max = abs(E_max - E_max_ref) / E_max_ref
        rep.add(f"n={n} E_min", rel_min <= 1e-2, E_min=E_min, reference=E_min_ref, rel_err=rel_min)
        rep.add(f"n={n} E_max", rel_max <= 1e-6, E_max=E_max, reference=E_max_ref, rel_err=rel_max)
    return rep


# --- rotation integral ----------------------------------------------------------


def _band_grid(lo: float, hi: float, n: int) -> np.ndarray:
    k = np.arange(n)
    return lo + (hi - lo) * 0.5 * (1 - np.cos((k + 0.5) * np.pi / n))


@_timed
def theta_closed_form(pairs: Sequence[tuple[float, float]] = ((1, 2), (1, 1.5), (4, 9)), points: int = 50, tol: float = 1e-9) -> Report:
    """Rotation integral of the unsmoothed torus against its closed form."""
    rep = Report("theta_closed_form")
    for k, m in pairs:
        F = torus_profile(k, m)
        Cs = _band_grid(1 / (k + m), 1 / m, points)
        num = np.array([theta_shift(F, c, tol) for c in Cs])
        exact = math.pi / math.sqrt(k) * (1 / Cs + m)
        err = float(np.max(np.abs(num - exact) / exact))
        rep.add(f"k={k:g} m={m:g} closed form", err <= 1e-6, max_rel_err=err)
        if math.sqrt(k) < m:
            rep.add(f"k={k:g} m={m:g} min > 2pi", float(num.min()) > 2 * math.pi, min_theta=float(num.min()))
    return rep


@_timed
def lemma_1_9(k: float = 1.0, m: float = 2.0, eps: float = 0.01, points: int = 50, tol: float = 1e-9) -> Report:
    """Only the two parallel circles close up in the class for the smoothed torus."""
    rep = Report("lemma_1_9")
    F = torus_profile(k, m, eps)
    census = census_class_alpha(F, tol)
    kinds = sorted(g.kind for g in census)
    rep.add("census is the two circles", kinds == ["parallel_circle", "parallel_circle"], census=[g.ident for g in census])
    well = find_well(F)
    lo, hi = well.band(F)
    Cs = _band_grid(lo, hi, points)
    theta = min(theta_shift(F, c, tol, well) for c in Cs)
    rep.add("min theta over grid > 2pi", theta > 2 * math.pi, min_theta=theta, two_pi=2 * math.pi)
    if census:
        idx = {g.ident.split("@")[0]: g.index for g in census}
        rep.add("indices", idx.get("circle[min]") == 0 and idx.get("circle[max]") == 1, **idx)
    return rep


# --- bulked spheres ------------------------------------------------------------------


@_timed
def bulked_lower_bound(n: int = 2, xs: Sequence[float] = (0.0, 0.5, 1.0, 2.0), slack: float = 0.05, grid: int = 10_000) -> Report:
    """Stability chain and opt-matching bound for pairs of bulked spheres."""
    rep = Report("bulked_lower_bound")
    threshold = BulkedSphereParams(n).threshold
    profiles = {x: bulked_sphere_profile(BulkedSphereParams(n, x)) for x in xs}
    pairs = [(x, y) for x, y in itertools.combinations(xs, 2)]

    def one(pair):
        x, y = pair
        return pair, stability_chain_check(profiles[x], profiles[y], "pt", 1, threshold, grid)

    for (x, y), r in _pmap(one, pairs):
        gap = abs(x - y)
        ok = 0.5 * gap - slack <= r.lower <= r.upper + 1e-12 and abs(r.upper - gap) <= 1e-9
        rep.add(f"x={x:g} y={y:g} chain", ok, lower=r.lower, upper=r.upper, half_gap=0.5 * gap)
        if x > 0 and y > 0:
            bound = lower_bound_opt_matching(r.barcode1, r.barcode2, 1)
            ok = bound is not None and abs(bound - 0.5 * gap) <= 1e-9 and bound <= r.lower + 1e-12
            rep.add(f"x={x:g} y={y:g} opt-matching", ok, bound=bound, bottleneck=r.lower)
    return rep


@_timed
def multibulked_lower_bound(N: int = 2, n: int = 2, trials: int = 4, seed: int = 0, tau: float = 0.05, grid: int = 4_000) -> Report:
    """Necks placed by ``Q``: the opt-matching bound recovers ``|Q(x) - Q(y)|_inf / 2``."""
    rep = Report("multibulked_lower_bound")
    rng = np.random.default_rng(seed)
    for t in range(trials):
        x, y = rng.uniform(-2, 2, size=(2, N))
        qx, qy = embed_Q(x), embed_Q(y)
        px = MultiBulkedParams(2 * N, n, tuple(qx), tau)
        py = MultiBulkedParams(2 * N, n, tuple(qy), tau)
        rx, ry = multi_bulked_profile(px), multi_bulked_profile(py)
        r = stability_chain_check(rx, ry, "alpha", 1, px.threshold, grid)
        bound = lower_bound_opt_matching(r.barcode1, r.barcode2, 2 * N)
        q_gap = float(np.max(np.abs(qx - qy)))
        x_gap = float(np.max(np.abs(x - y)))
        ok = (
            bound is not None
            and abs(bound - 0.5 * q_gap) <= 1e-9
            and bound <= r.lower + 1e-12
            and r.lower <= r.upper + 1e-12
            and abs(r.upper - q_gap) <= 1e-9
            and x_gap / 8 <= bound + 1e-12
        )
        rep.add(f"trial {t}", ok, bound=bound, bottleneck=r.lower, upper=r.upper, x_gap_over_8=x_gap / 8)
    return rep


@_timed
def upper_bounds(n: int = 2, pairs: Sequence[tuple[float, float]] = ((0, 0.5), (0.5, 2), (1, 1.3)), area_n: int = 6, grid: int = 10_000) -> Report:
    """Ratio law, dominance and area/diameter for the bulked families."""
    rep = Report("upper_bounds")
    for x, y in pairs:
        rx = bulked_sphere_profile(BulkedSphereParams(n, x))
        ry = bulked_sphere_profile(BulkedSphereParams(n, y))
        C = profile_ratio(rx, ry, grid)
        gap = abs(x - y)
        rep.add(f"ratio x={x:g} y={y:g}", abs(C - math.exp(gap)) <= 1e-9 * math.exp(gap), ratio=C, expected=math.exp(gap))
        rep.add(f"rbm x={x:g} y={y:g}", abs(rbm_upper_bound(rx, ry, grid) - 2 * gap) <= 1e-9, expected=2 * gap)
        dom = metric_dominates(rx, ry, math.exp(2 * gap), grid) and metric_dominates(ry, rx, math.exp(2 * gap), grid)
        rep.add(f"dominance x={x:g} y={y:g}", dom)
    xs, ys = (0.5, 1.0), (0.5, 2.0)
    mx = multi_bulked_profile(MultiBulkedParams(2, n, xs))
    my = multi_bulked_profile(MultiBulkedParams(2, n, ys))
    gap = max(abs(a - b) for a, b in zip(xs, ys))
    ub = rbm_upper_bound(mx, my, grid)
    rep.add("multi-bulked rbm", abs(ub - 2 * gap) <= 1e-9, value=ub, expected=2 * gap)
    ad = volume_and_diameter(bulked_sphere_profile(BulkedSphereParams(area_n, 0.0)))
    rep.add(f"area n={area_n}", abs(ad.area - 1) < 1e-3, area=ad.area)
    rep.add(f"diameter n={area_n}", ad.diameter_upper <= 100, diameter_upper=ad.diameter_upper)
    return rep


# --- existence windows ------------------------------------------------------------------


def _window_check(rep: Report, label: str, g1, g2, tol: float, grid: int) -> None:
    C1, C2 = comparison_constants(g1, g2, grid)
    dom = metric_dominates(g1, g2, C1, grid) and metric_dominates(g2, g1, C2, grid)
    rep.add(f"{label} constants", dom, C1=C1, C2=C2)
    code = class_barcode(g1, "alpha", tol=tol)
    energies = [g.energy for g in census_class_alpha(g2, tol)]
    pred = exist_geodesic_windows(code, C1, C2)
    misses = [
        (w.bar.birth, w.endpoint)
        for w in pred.windows
        if not any(w.contains(e, rel_tol=1e-12) for e in energies)
    ]
    rep.add(f"{label} windows", not misses and bool(pred.windows), windows=len(pred.windows), misses=misses)


@_timed
def exist_geodesic_1_6(k: float = 1.0, m: float = 2.0, eps: float = 0.01, scale: float = 1.1, m2: float = 2.2, copies: Sequence[int] = (1, 3), tol: float = 1e-9, grid: int = 10_000) -> Report:
    """Every predicted energy window holds a closed geodesic of the second metric."""
    rep = Report("exist_geodesic_1_6")
    for n in copies:
        g1 = torus_profile(k, m, eps, n)
        _window_check(rep, f"n={n} scaled by {scale:g}", g1, g1.scaled(scale), tol, grid)
        _window_check(rep, f"n={n} m={m2:g}", g1, torus_profile(k, m2, eps, n), tol, grid)
    return rep


# --- embeddings ------------------------------------------------------------------------------


@_timed
def embedding_7_3(N: int = 3, trials: int = 100_000, seed: int = 0) -> Report:
    """Bi-Lipschitz bounds of ``L``, ``A`` and ``Q`` on random pairs."""
    rep = Report("embedding_7_3")
    rng = np.random.default_rng(seed)
    spread = rng.choice([0.1, 1.0, 10.0], size=(trials, 1))
    x = rng.normal(size=(trials, N)) * spread
    y = rng.normal(size=(trials, N)) * spread
    # exercise sign changes and near-equal pairs too
    y[: trials // 10] = x[: trials // 10] + 1e-3 * rng.normal(size=(trials // 10, N))
    d = np.max(np.abs(x - y), axis=1)
    tol = 1e-12 * np.maximum(1.0, d)

    dL = np.max(np.abs(embed_L(x) - embed_L(y)), axis=1)
    bad_L = int(np.sum((dL < 0.5 * d - tol) | (dL > d + tol)))
    rep.add("L chain", bad_L == 0, violations=bad_L, trials=trials)

    # A on the nonnegative orthant of dimension 2N
    u = np.abs(rng.normal(size=(trials, 2 * N))) * spread
    v = np.abs(rng.normal(size=(trials, 2 * N))) * spread
    du = np.max(np.abs(u - v), axis=1)
    dA = np.max(np.abs(embed_A(u) - embed_A(v)), axis=1)
    tolA = 1e-12 * np.maximum(1.0, dA)
    bad_A = int(np.sum((dA < 0.5 * du - tolA) | (dA > 2 * N * du + tolA)))
    rep.add("A chain", bad_A == 0, violations=bad_A, trials=trials)

    qx, qy = embed_Q(x), embed_Q(y)
    dQ = np.max(np.abs(qx - qy), axis=1)
    tolQ = 1e-12 * np.maximum(1.0, dQ)
    bad_Q = int(np.sum((dQ < 0.25 * d - tolQ) | (dQ > 2 * N * d + tolQ)))
    rep.add("Q chain", bad_Q == 0, violations=bad_Q, trials=trials)

    inside = bool(np.all(qx >= 0) and np.all(np.diff(qx, axis=1) >= 0))
    rep.add("Q lands in the monotone cone", inside)
    return rep


EXAMPLES: dict[str, Callable[..., Report]] = {
    "torus_example_1_8": torus_example_1_8,
    "lemma_1_9": lemma_1_9,
    "bulked_lower_bound": bulked_lower_bound,
    "multibulked_lower_bound": multibulked_lower_bound,
    "upper_bounds": upper_bounds,
    "exist_geodesic_1_6": exist_geodesic_1_6,
    "embedding_7_3": embedding_7_3,
}


def run_example(name: str, **kwargs) -> Report:
    try:
        fn = EXAMPLES[name]
    except KeyError:
        raise ValueError(f"unknown example {name!r}; choose from {sorted(EXAMPLES)}") from None
    return fn(**kwargs)
