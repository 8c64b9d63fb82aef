"""Loop-space barcodes in a fixed free homotopy class, assembled from a geodesic census.

Every nondegenerate closed geodesic of index ``k`` contributes two generators,
in degrees ``k`` and ``k + 1``, at its energy. A generator is the left endpoint
of a bar in its own degree or the right endpoint of a bar one degree lower.
:func:`infer_barcode` enumerates every consistent assignment.
"""

from __future__ import annotations

import itertools
import math
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Optional, Sequence

from .bottleneck import bottleneck_distance
from .constructions import rbm_upper_bound
from .persistence_core import Bar, Barcode
from .profiles import ProfileFunction
from .revolution_geodesics import ClosedGeodesic, census_class_alpha, parallel_circles

__all__ = [
    "Generator",
    "GeneratorTable",
    "DegenerateGeodesicError",
    "InfeasibleGeneratorsError",
    "AmbiguousBarcodeError",
    "build_generators",
    "infer_barcode",
    "reparametrize",
    "torus_alpha_table",
    "neck_table",
    "class_table",
    "provenance",
    "class_barcode",
    "StabilityReport",
    "stability_chain_check",
    "TORUS_ALPHA_RANKS",
]

#: Ranks of the loop-space homology of the torus in a nontrivial class.
TORUS_ALPHA_RANKS = {0: 1, 1: 2, 2: 1}


class DegenerateGeodesicError(ValueError):
    def __init__(self, geodesic: ClosedGeodesic):
        super().__init__(f"degenerate or unindexed geodesic below threshold: {geodesic.ident}")
        self.geodesic = geodesic


class InfeasibleGeneratorsError(ValueError):
    """No assignment of generators to bar endpoints meets the constraints."""


class AmbiguousBarcodeError(ValueError):
    """Several barcodes are consistent with the generator table."""

    def __init__(self, solutions: Sequence[Barcode], forced: Barcode, unresolved: Sequence["Generator"]):
        super().__init__(f"{len(solutions)} consistent barcodes; {len(unresolved)} generators unresolved")
        self.solutions = list(solutions)
        self.forced = forced
        self.unresolved = list(unresolved)


@dataclass(frozen=True)
class Generator:
    degree: int
    filtration: float
    source: str
    forced_left: bool = False


@dataclass(frozen=True)
class GeneratorTable:
    """Generators of the filtered Morse-Bott complex in one homotopy class.

    ``threshold`` marks a truncated table: generators at or above it are
    unknown and bars still alive there are cut off at it.
    """

    entries: tuple[Generator, ...]
    klass: str
    ranks: Mapping[int, int] = field(default_factory=dict)
    threshold: Optional[float] = None
    unresolved: tuple[str, ...] = ()

    def by_degree(self) -> dict[int, list[Generator]]:
        out: dict[int, list[Generator]] = defaultdict(list)
        for g in self.entries:
            out[g.degree].append(g)
        return dict(out)


def build_generators(
    census: Iterable[ClosedGeodesic],
    klass: str,
    ranks: Optional[Mapping[int, int]] = None,
    threshold: Optional[float] = None,
    forced_left: Iterable[str] = (),
) -> GeneratorTable:
    """Two generators per geodesic; the point class adds the height-function pair at 0.

    With a ``threshold`` only geodesics of smaller energy are used and only
    they need to be nondegenerate. ``forced_left`` names geodesics whose upper
    generator is known to be a cycle.
    """
    forced = set(forced_left)
    entries: list[Generator] = []
    if klass == "pt":
        entries.append(Generator(0, 0.0, "constant-loops:min"))
        entries.append(Generator(2, 0.0, "constant-loops:max"))
    for g in census:
        if threshold is not None and not g.energy < threshold:
            continue
        if g.nullity != 0 or g.index is None:
            raise DegenerateGeodesicError(g)
        entries.append(Generator(g.index, g.energy, g.ident))
        entries.append(Generator(g.index + 1, g.energy, g.ident, g.ident in forced))
    return GeneratorTable(tuple(entries), klass, dict(ranks or {}), threshold)


# --- inference ---------------------------------------------------------------


def _distributions(total: int, caps: Sequence[int]):
    """All ways to write ``total`` as a sum bounded termwise by ``caps``."""
    if not caps:
        if total == 0:
            yield ()
        return
    head, rest = caps[0], caps[1:]
    room = sum(rest)
    for k in range(max(0, total - room), min(head, total) + 1):
        for tail in _distributions(total - k, rest):
            yield (k,) + tail


def _pairings(lefts: Counter, rights: Counter):
    """Every way to close right endpoints against strictly smaller left endpoints.

    Yields ``(finite_pairs, remaining_lefts)`` with pairs as a Counter of
    ``(left, right)``.
    """
    right_levels = sorted(rights)

    def rec(i: int, avail: Counter, pairs: Counter):
        if i == len(right_levels):
            yield pairs, avail
            return
        level = right_levels[i]
        options = sorted(v for v in avail if v < level and avail[v] > 0)
        caps = [avail[v] for v in options]
        for split in _distributions(rights[level], caps):
            nxt_avail = avail.copy()
            nxt_pairs = pairs.copy()
            for v, k in zip(options, split):
                if k:
                    nxt_avail[v] -= k
                    nxt_pairs[(v, level)] += k
            yield from rec(i + 1, +nxt_avail, nxt_pairs)

    yield from rec(0, +lefts, Counter())


def _solutions(tab: GeneratorTable) -> list[Barcode]:
    threshold = tab.threshold
    gens = [g for g in tab.entries if threshold is None or g.filtration < threshold]
    groups: dict[tuple[int, float], list[Generator]] = defaultdict(list)
    for g in gens:
        groups[(g.degree, g.filtration)].append(g)
    keys = sorted(groups)
    free = [0 if d == 0 else sum(1 for g in groups[(d, f)] if not g.forced_left) for d, f in keys]
    degrees = sorted({d for d, _ in keys} | {d - 1 for d, _ in keys if d > 0} | set(tab.ranks))
    found: dict[tuple, Barcode] = {}
    for split in itertools.product(*(range(c + 1) for c in free)):
        lefts: dict[int, Counter] = defaultdict(Counter)
        rights: dict[int, Counter] = defaultdict(Counter)  # keyed by the degree of the bar they close
        for (d, f), r in zip(keys, split):
            lefts[d][f] += len(groups[(d, f)]) - r
            if r:
                rights[d - 1][f] += r
        per_degree: list[list[tuple[Counter, Counter]]] = []
        ok = True
        for d in degrees:
            options = []
            for pairs, rest in _pairings(lefts[d], rights[d]):
                if sum(pairs.values()) != sum(rights[d].values()):
                    continue
                if threshold is None and sum(rest.values()) != tab.ranks.get(d, 0):
                    continue
                options.append((pairs, rest))
            if not options:
                ok = False
                break
            per_degree.append(options)
        if not ok:
            continue
        for combo in itertools.product(*per_degree):
            bars: list[Bar] = []
            for d, (pairs, rest) in zip(degrees, combo):
                for (a, b), k in pairs.items():
                    bars.extend([Bar(a, b, d)] * k)
                for a, k in rest.items():
                    if threshold is None:
                        bars.extend([Bar(a, None, d)] * k)
                    else:
                        bars.extend([Bar(a, threshold, d)] * k)
            code = Barcode(bars, threshold)
            found.setdefault(code.bars, code)
    return list(found.values())


def infer_barcode(tab: GeneratorTable) -> Barcode:
    """The unique barcode consistent with the generators, ranks and forced cycles.

    Without a threshold, each degree must carry exactly ``ranks[d]`` infinite
    bars. With one, unpaired left endpoints become bars ending at the
    threshold. Raises :class:`InfeasibleGeneratorsError` when nothing fits and
    :class:`AmbiguousBarcodeError` when several barcodes fit.
    """
    solutions = _solutions(tab)
    if not solutions:
        raise InfeasibleGeneratorsError(
            f"no barcode for {len(tab.entries)} generators with ranks {dict(tab.ranks)}"
        )
    if len(solutions) == 1:
        return solutions[0]
    common = Counter(solutions[0].bars)
    for s in solutions[1:]:
        common &= Counter(s.bars)
    forced = Barcode(common.elements(), tab.threshold)
    covered = Counter()
    for b in forced:
        covered[(b.degree, b.birth)] += 1
        if b.death is not None and (tab.threshold is None or b.death < tab.threshold):
            covered[(b.degree + 1, b.death)] += 1
    unresolved = []
    for g in tab.entries:
        key = (g.degree, g.filtration)
        if covered[key] > 0:
            covered[key] -= 1
        else:
            unresolved.append(g)
    raise AmbiguousBarcodeError(solutions, forced, unresolved)


# --- reparametrisation ---------------------------------------------------------------

_FORWARD = {
    ("energy", "length"): lambda v: math.sqrt(2.0 * v),
    ("length", "log"): math.log,
    ("length", "energy"): lambda v: v * v / 2.0,
    ("log", "length"): math.exp,
}
_ORDER = ("energy", "length", "log")


def _converter(src: str, dst: str):
    if src not in _ORDER or dst not in _ORDER:
        raise ValueError(f"unknown parametrisation {src!r} -> {dst!r}")
    i, j = _ORDER.index(src), _ORDER.index(dst)
    step = 1 if j > i else -1
    chain = [_FORWARD[(_ORDER[k], _ORDER[k + step])] for k in range(i, j, step)]

    def convert(v: float) -> float:
        for f in chain:
            if f is math.log and v <= 0:
                raise ValueError(f"nonpositive endpoint {v} has no logarithm")
            v = f(v)
        return v

    return convert


def reparametrize(B: Barcode, mode: str) -> Barcode:
    """Apply a monotone change of filtration, e.g. ``"energy->length"`` or ``"energy->log"``.

    Energy ``E`` corresponds to length ``a = sqrt(2E)`` and log-length ``ln a``.
    """
    try:
        src, dst = (s.strip() for s in mode.replace("→", "->").split("->"))
    except ValueError:
        raise ValueError(f"mode must look like 'energy->length', got {mode!r}") from None
    f = _converter(src, dst)
    bars = [Bar(f(b.birth), None if b.death is None else f(b.death), b.degree) for b in B]
    threshold = None if B.threshold is None else f(B.threshold)
    return Barcode(bars, threshold)


# --- family tables ------------------------------------------------------------------


def torus_alpha_table(profile: ProfileFunction, threshold: Optional[float] = None, tol: float = 1e-9) -> GeneratorTable:
    """Generators in the class winding once around the rotation axis of a torus."""
    census = census_class_alpha(profile, tol)
    return build_generators(census, "alpha", TORUS_ALPHA_RANKS, threshold)


def _neck_circles(profile: ProfileFunction, threshold: float) -> list[ClosedGeodesic]:
    out = []
    for g in parallel_circles(profile):
        if g.energy < threshold:
            if g.index != 0 or g.nullity != 0:
                raise DegenerateGeodesicError(g)
            out.append(g)
    return out


def neck_table(profile: ProfileFunction, threshold: float, klass: str) -> GeneratorTable:
    """Truncated table for necks below ``threshold``.

    ``klass="pt"`` (sphere): constant loops plus both orientations of each
    neck circle, first iterates only. ``klass="alpha"`` (chain of necks):
    one orientation per neck. Upper generators are cycles in both cases.
    """
    necks = _neck_circles(profile, threshold)
    census: list[ClosedGeodesic] = []
    unresolved: list[str] = []
    for g in necks:
        if klass == "pt":
            for sign in (+1, -1):
                census.append(_relabel(g, f"{g.ident}^{sign:+d}"))
            m = 2
            while m * m * g.energy < threshold:
                unresolved.extend([f"{g.ident}^{m:+d}", f"{g.ident}^{-m:+d}"])
                m += 1
        elif klass == "alpha":
            census.append(g)
        else:
            raise ValueError(f"unknown class {klass!r}")
    tab = build_generators(census, klass, None, threshold, forced_left=[g.ident for g in census])
    return GeneratorTable(tab.entries, klass, {}, threshold, tuple(unresolved))


def _relabel(g: ClosedGeodesic, ident: str) -> ClosedGeodesic:
    return ClosedGeodesic(g.kind, g.energy, g.length, g.homotopy, g.index, g.nullity, g.clairaut_C, ident, g.location)


def class_table(
    profile: ProfileFunction, klass: str, threshold: Optional[float] = None, tol: float = 1e-9
) -> GeneratorTable:
    """Generator table of ``profile`` in the given class.

    Periodic profiles use the torus rules; capped and open profiles need a
    truncation threshold and use the neck rules.
    """
    if profile.kind == "periodic":
        return torus_alpha_table(profile, threshold, tol)
    if threshold is None:
        raise ValueError("neck barcodes need a truncation threshold")
    return neck_table(profile, threshold, klass)


def provenance(tab: GeneratorTable) -> dict[float, list[str]]:
    """Sources of the generators at each filtration level."""
    out: dict[float, list[str]] = defaultdict(list)
    for g in tab.entries:
        out[g.filtration].append(g.source)
    return {k: sorted(set(v)) for k, v in sorted(out.items())}


def class_barcode(
    profile: ProfileFunction,
    klass: str,
    threshold: Optional[float] = None,
    degree: Optional[int] = None,
    tol: float = 1e-9,
) -> Barcode:
    """Energy barcode of ``profile`` in the given class, optionally one degree only."""
    code = infer_barcode(class_table(profile, klass, threshold, tol))
    return code if degree is None else code.in_degree(degree)


# --- stability chain ---------------------------------------------------------------


@dataclass(frozen=True)
class StabilityReport:
    lower: float
    upper: float
    barcode1: Barcode
    barcode2: Barcode

    @property
    def slack(self) -> float:
        return self.upper - self.lower

    @property
    def ok(self) -> bool:
        return self.lower <= self.upper + 1e-12 * max(1.0, abs(self.upper))


def stability_chain_check(
    r1: ProfileFunction,
    r2: ProfileFunction,
    klass: str,
    degree: int,
    threshold: Optional[float] = None,
    grid: int = 10_000,
    tol: float = 1e-9,
) -> StabilityReport:
    """Compare the log-barcode bottleneck distance with half the metric upper bound.

    ``lower`` is the bottleneck distance between the (truncated) degree
    barcodes in log-length parametrisation; ``upper`` is ``ln C`` from the
    profile ratios.
    """
    b1 = reparametrize(class_barcode(r1, klass, threshold, degree, tol), "energy->log")
    b2 = reparametrize(class_barcode(r2, klass, threshold, degree, tol), "energy->log")
    lower = bottleneck_distance(b1, b2)
    upper = 0.5 * rbm_upper_bound(r1, r2, grid)
    return StabilityReport(lower, upper, b1, b2)
