"""Finitely presented persistence modules over the two-element field.

A module is stored as a direct sum of interval modules ``k_[birth, death)``.
Infinite deaths are tagged with ``None`` rather than a float sentinel.
"""

from __future__ import annotations

import json
import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Optional, Sequence

import numpy as np

__all__ = [
    "Bar",
    "Barcode",
    "FinitePM",
    "PMorphism",
    "Window",
    "GeodesicWindow",
    "WindowPrediction",
    "interval_morphism_exists",
    "shift",
    "compose",
    "identity",
    "comparison_map",
    "shifted_morphism",
    "bar_window",
    "exist_geodesic_windows",
    "bars_from_pairs",
]


def _death_key(death: Optional[float]) -> float:
    return math.inf if death is None else death


@dataclass(frozen=True)
class Bar:
    """Half-open interval ``[birth, death)`` in a fixed homological degree."""

    birth: float
    death: Optional[float] = None
    degree: int = 0

    def __post_init__(self) -> None:
        if not math.isfinite(self.birth):
            raise ValueError(f"birth must be finite, got {self.birth!r}")
        if self.death is not None:
            if math.isnan(self.death) or math.isinf(self.death):
                raise ValueError("use death=None for an infinite bar")
            if not self.death > self.birth:
                raise ValueError(f"zero or negative length bar [{self.birth}, {self.death})")
        if self.degree < 0:
            raise ValueError("degree must be nonnegative")
        object.__setattr__(self, "birth", float(self.birth))
        if self.death is not None:
            object.__setattr__(self, "death", float(self.death))

    @property
    def is_infinite(self) -> bool:
        return self.death is None

    @property
    def length(self) -> float:
        return math.inf if self.death is None else self.death - self.birth

    def contains(self, t: float) -> bool:
        return self.birth <= t < _death_key(self.death)

    def sort_key(self) -> tuple[int, float, float]:
        return (self.degree, self.birth, _death_key(self.death))

    def shifted(self, amount: float) -> "Bar":
        """Translate both endpoints down by ``amount``."""
        death = None if self.death is None else self.death - amount
        return Bar(self.birth - amount, death, self.degree)

    def to_dict(self) -> dict:
        return {"degree": self.degree, "birth": self.birth, "death": self.death}

    def __repr__(self) -> str:
        end = "inf" if self.death is None else repr(self.death)
        return f"Bar([{self.birth!r}, {end}), deg={self.degree})"


@dataclass(frozen=True)
class Barcode:
    """Finite multiset of bars, kept in canonical (degree, birth, death) order.

    ``threshold`` is set on truncated barcodes: a bar whose death equals the
    threshold is only known to die at or after it.
    """

    bars: tuple[Bar, ...] = ()
    threshold: Optional[float] = None

    def __init__(self, bars: Iterable[Bar] = (), threshold: Optional[float] = None):
        object.__setattr__(self, "bars", tuple(sorted(bars, key=Bar.sort_key)))
        object.__setattr__(self, "threshold", threshold)

    def __iter__(self) -> Iterator[Bar]:
        return iter(self.bars)

    def __len__(self) -> int:
        return len(self.bars)

    def degrees(self) -> list[int]:
        return sorted({b.degree for b in self.bars})

    def in_degree(self, degree: int) -> "Barcode":
        return Barcode((b for b in self.bars if b.degree == degree), self.threshold)

    def infinite_count(self, degree: int) -> int:
        return sum(1 for b in self.bars if b.degree == degree and b.death is None)

    def multiplicities(self) -> Counter:
        return Counter(self.bars)

    def rank(self, t: float, degree: int) -> int:
        return sum(1 for b in self.bars if b.degree == degree and b.contains(t))

    def to_json(self) -> str:
        payload: dict = {"bars": [b.to_dict() for b in self.bars]}
        if self.threshold is not None:
            payload["threshold"] = self.threshold
        return json.dumps(payload, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "Barcode":
        payload = json.loads(text)
        bars = [Bar(item["birth"], item["death"], int(item["degree"])) for item in payload["bars"]]
        return cls(bars, payload.get("threshold"))


@dataclass(frozen=True)
class FinitePM:
    """Direct sum of interval modules, one per summand."""

    summands: tuple[Bar, ...] = ()

    def __init__(self, summands: Iterable[Bar] = ()):
        object.__setattr__(self, "summands", tuple(summands))

    def __len__(self) -> int:
        return len(self.summands)

    def rank(self, t: float) -> int:
        return sum(1 for s in self.summands if s.contains(t))

    def barcode(self) -> Barcode:
        return Barcode(self.summands)


def interval_morphism_exists(a: float, b: Optional[float], c: float, d: Optional[float]) -> bool:
    """Whether a nonzero morphism ``k_[a,b) -> k_[c,d)`` exists.

    The condition is ``c <= a < d <= b`` with ``None`` standing for infinity.
    The middle inequality is strict since ``[a, d)`` is the support of the map.
    """
    bb = _death_key(b)
    dd = _death_key(d)
    return c <= a and a < dd and dd <= bb


def _legal(src: Bar, tgt: Bar) -> bool:
    return interval_morphism_exists(src.birth, src.death, tgt.birth, tgt.death)


def shift(module: FinitePM, amount: float) -> FinitePM:
    """Shift ``M[A]``: every summand ``[x, y)`` becomes ``[x - A, y - A)``."""
    if amount < 0:
        raise ValueError("shift amount must be nonnegative")
    return FinitePM(s.shifted(amount) for s in module.summands)


def _legality_mask(source: FinitePM, target: FinitePM) -> np.ndarray:
    mask = np.zeros((len(target), len(source)), dtype=np.uint8)
    for i, t in enumerate(target.summands):
        for j, s in enumerate(source.summands):
            mask[i, j] = _legal(s, t)
    return mask


@dataclass(frozen=True, eq=False)
class PMorphism:
    """Morphism between interval sums stored as its 0/1 pattern.

    Entry ``(i, j)`` is one when source summand ``j`` maps by the canonical
    nonzero interval morphism into target summand ``i``.
    """

    source: FinitePM
    target: FinitePM
    matrix: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        mat = np.array(self.matrix, dtype=np.uint8) % 2
        if mat.size == 0:
            mat = mat.reshape(len(self.target), len(self.source))
        if mat.shape != (len(self.target), len(self.source)):
            raise ValueError(
                f"matrix shape {mat.shape} does not match "
                f"(target={len(self.target)}, source={len(self.source)})"
            )
        illegal = mat & (1 - _legality_mask(self.source, self.target))
        if illegal.any():
            i, j = map(int, np.argwhere(illegal)[0])
            raise ValueError(
                f"no nonzero morphism from {self.source.summands[j]} to {self.target.summands[i]}"
            )
        mat.setflags(write=False)
        object.__setattr__(self, "matrix", mat)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, PMorphism):
            return NotImplemented
        return (
            self.source == other.source
            and self.target == other.target
            and np.array_equal(self.matrix, other.matrix)
        )

    def __hash__(self) -> int:
        return hash((self.source, self.target, self.matrix.tobytes()))

    def evaluate(self, t: float) -> np.ndarray:
        """Matrix of ``f^t`` in the bases of summands alive at ``t``."""
        rows = [i for i, s in enumerate(self.target.summands) if s.contains(t)]
        cols = [j for j, s in enumerate(self.source.summands) if s.contains(t)]
        return self.matrix[np.ix_(rows, cols)]


def compose(g: PMorphism, f: PMorphism) -> PMorphism:
    """``g o f`` over the two-element field.

    Entries whose endpoints admit no nonzero morphism vanish: the composite of
    two canonical maps is zero exactly when its own pattern entry is illegal.
    """
    if f.target != g.source:
        if len(f.target) != len(g.source):
            raise ValueError(
                f"shape mismatch: f has {len(f.target)} targets, g has {len(g.source)} sources"
            )
        raise ValueError("f.target and g.source are different modules")
    product = (g.matrix.astype(np.int64) @ f.matrix.astype(np.int64)) % 2
    product = product.astype(np.uint8) & _legality_mask(f.source, g.target)
    return PMorphism(f.source, g.target, product)


def identity(module: FinitePM) -> PMorphism:
    return PMorphism(module, module, np.eye(len(module), dtype=np.uint8))


def comparison_map(module: FinitePM, delta: float) -> PMorphism:
    """The map ``M -> M[delta]``; summands shorter than ``delta`` die."""
    target = shift(module, delta)
    diag = [1 if s.length > delta else 0 for s in module.summands]
    return PMorphism(module, target, np.diag(np.array(diag, dtype=np.uint8)))


def shifted_morphism(f: PMorphism, amount: float) -> PMorphism:
    """``f[A]`` has the same pattern between the shifted modules."""
    return PMorphism(shift(f.source, amount), shift(f.target, amount), f.matrix)


@dataclass(frozen=True)
class Window:
    """Box for the endpoints ``[c, d)`` of a bar; ``d_lo is None`` asks for an infinite bar."""

    c_lo: float
    c_hi: float
    d_lo: Optional[float]
    d_hi: Optional[float]

    def contains(self, bar: Bar) -> bool:
        if not self.c_lo <= bar.birth <= self.c_hi:
            return False
        if self.d_lo is None:
            return bar.death is None
        return bar.death is not None and self.d_lo <= bar.death <= self.d_hi


def bar_window(a: float, b: Optional[float], A: float, B: float) -> Optional[Window]:
    """Where a bar of ``W`` must sit if ``[a, b)`` survives ``V -> W[A] -> V[A+B]``.

    Returns ``None`` when ``b - a <= A + B``. For an infinite bar the death
    coordinate is pinned to infinity.
    """
    if A < 0 or B < 0:
        raise ValueError("A and B must be nonnegative")
    if b is not None and not b > a:
        raise ValueError("need a < b")
    if b is not None and not (b - a > A + B):
        return None
    if b is None:
        return Window(a - B, a + A, None, None)
    return Window(a - B, a + A, b - B, b + A)


@dataclass(frozen=True)
class GeodesicWindow:
    bar: Bar
    endpoint: str  # "birth" or "death"
    lo: float
    hi: float

    def contains(self, energy: float, rel_tol: float = 0.0) -> bool:
        slack = rel_tol * max(abs(self.lo), abs(self.hi))
        return self.lo - slack <= energy <= self.hi + slack


@dataclass(frozen=True)
class WindowPrediction:
    windows: tuple[GeodesicWindow, ...]
    skipped: tuple[Bar, ...]


def exist_geodesic_windows(barcode: Barcode, C1: float, C2: float) -> WindowPrediction:
    """Energy windows guaranteed to contain closed geodesics of a second metric.

    For ``(1/C1) g1 <= g2 <= C2 g1`` each bar ``[x, y)`` of ``g1`` with
    ``y / x > C1 C2`` yields windows ``[x/C1, C2 x]`` and ``[y/C1, C2 y]``.
    Infinite bars yield the first window only. Bars starting at a nonpositive
    energy carry no information and are skipped.
    """
    if C1 <= 0 or C2 <= 0 or C1 * C2 < 1:
        raise ValueError("need positive C1, C2 with C1*C2 >= 1")
    windows: list[GeodesicWindow] = []
    skipped: list[Bar] = []
    for bar in barcode:
        x = bar.birth
        if x <= 0:
            skipped.append(bar)
            continue
        if bar.death is None:
            windows.append(GeodesicWindow(bar, "birth", x / C1, C2 * x))
            continue
        y = bar.death
        if y / x > C1 * C2:
            windows.append(GeodesicWindow(bar, "birth", x / C1, C2 * x))
            windows.append(GeodesicWindow(bar, "death", y / C1, C2 * y))
        else:
            skipped.append(bar)
    return WindowPrediction(tuple(windows), tuple(skipped))


def bars_from_pairs(pairs: Sequence[tuple[float, Optional[float]]], degree: int = 0) -> list[Bar]:
    """Convenience constructor used by tests and the CLI."""
    return [Bar(b, d, degree) for b, d in pairs]
