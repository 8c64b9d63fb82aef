"""Piecewise closed-form profile functions for surfaces of revolution.

A profile is a list of segments over a partition of its domain. Each segment
knows its value and first two derivatives in closed form. Two charts are
supported:

``ambient``
    metric ``(1 + r'(l)^2) dl^2 + r(l)^2 dtheta^2`` (graph of ``r`` rotated in R^3)
``arclength``
    metric ``dX^2 + F(X)^2 dtheta^2`` (``X`` is meridian arclength)

``metric_scale`` multiplies the whole metric by a constant.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from typing import ClassVar, Optional, Sequence, Union

import numpy as np
from numpy.polynomial import Polynomial
from scipy import integrate, optimize

ArrayLike = Union[float, np.ndarray]

__all__ = [
    "Piece",
    "Poly",
    "Arc",
    "RecipSqrt",
    "DLinear",
    "ProfileFunction",
    "ArclengthChart",
    "piece_from_dict",
]

_QUAD = dict(epsabs=0.0, epsrel=1e-12, limit=200)


class Piece:
    """One closed-form segment on ``[lo, hi]``."""

    kind: ClassVar[str] = ""
    lo: float
    hi: float

    def value(self, l: ArrayLike) -> ArrayLike:
        raise NotImplementedError

    def deriv(self, l: ArrayLike) -> ArrayLike:
        raise NotImplementedError

    def deriv2(self, l: ArrayLike) -> ArrayLike:
        raise NotImplementedError

    def deriv3(self, l: ArrayLike) -> ArrayLike:
        raise NotImplementedError

    def critical_points(self) -> list[float]:
        raise NotImplementedError

    def mapped(self, a: float, b: float, s: float) -> "Piece":
        """Segment of ``l -> s * r((l - b) / a)`` over the image of ``[lo, hi]``."""
        raise NotImplementedError

    def params(self) -> dict:
        raise NotImplementedError

    def to_dict(self) -> dict:
        return {"type": self.kind, "range": [self.lo, self.hi], "params": self.params()}

    def _image(self, a: float, b: float) -> tuple[float, float]:
        u, v = b + a * self.lo, b + a * self.hi
        return (u, v) if u <= v else (v, u)

    # Meridian length and area density; subclasses override where closed forms exist.
    def meridian_length(self, a: float, b: float) -> float:
        f = lambda l: math.sqrt(1.0 + float(self.deriv(l)) ** 2)
        return integrate.quad(f, a, b, **_QUAD)[0]

    def area(self, a: float, b: float) -> float:
        def f(l):
            r = float(self.value(l))
            return r * math.sqrt(1.0 + float(self.deriv(l)) ** 2)

        return 2 * math.pi * integrate.quad(f, a, b, **_QUAD)[0]


@dataclass(frozen=True)
class Poly(Piece):
    """Polynomial in the local variable ``l - origin``."""

    kind: ClassVar[str] = "poly"
    lo: float
    hi: float
    origin: float
    coeffs: tuple[float, ...]
    _poly: Polynomial = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "coeffs", tuple(float(c) for c in self.coeffs))
        object.__setattr__(self, "_poly", Polynomial(self.coeffs))

    def value(self, l):
        return self._poly(np.asarray(l, dtype=float) - self.origin)

    def deriv(self, l):
        return self._poly.deriv(1)(np.asarray(l, dtype=float) - self.origin)

    def deriv2(self, l):
        return self._poly.deriv(2)(np.asarray(l, dtype=float) - self.origin)

    def deriv3(self, l):
        return self._poly.deriv(3)(np.asarray(l, dtype=float) - self.origin)

    def critical_points(self) -> list[float]:
        d = self._poly.deriv(1)
        if d.degree() < 1 or not np.any(d.coef):
            return []
        span = self.hi - self.lo
        out = []
        for root in d.roots():
            if abs(root.imag) > 1e-12 * max(1.0, abs(root.real)):
                continue
            x = root.real + self.origin
            if self.lo - 1e-9 * span <= x <= self.hi + 1e-9 * span:
                out.append(min(max(x, self.lo), self.hi))
        return out

    def mapped(self, a, b, s):
        lo, hi = self._image(a, b)
        coeffs = [s * c / a**i for i, c in enumerate(self.coeffs)]
        return Poly(lo, hi, b + a * self.origin, tuple(coeffs))

    def params(self):
        return {"origin": self.origin, "coeffs": list(self.coeffs)}


@dataclass(frozen=True)
class Arc(Piece):
    """Circular arc ``sqrt(R^2 - (l - center)^2)``."""

    kind: ClassVar[str] = "arc"
    lo: float
    hi: float
    center: float
    radius: float

    def value(self, l):
        u = np.asarray(l, dtype=float) - self.center
        # factored form avoids cancellation near the ends of the arc
        return np.sqrt(np.maximum((self.radius - u) * (self.radius + u), 0.0))

    def deriv(self, l):
        u = np.asarray(l, dtype=float) - self.center
        with np.errstate(divide="ignore"):
            return -u / self.value(l)

    def deriv2(self, l):
        with np.errstate(divide="ignore"):
            return -(self.radius**2) / self.value(l) ** 3

    def deriv3(self, l):
        u = np.asarray(l, dtype=float) - self.center
        with np.errstate(divide="ignore"):
            return -3 * self.radius**2 * u / self.value(l) ** 5

    def critical_points(self):
        return [self.center] if self.lo <= self.center <= self.hi else []

    def mapped(self, a, b, s):
        if not math.isclose(s, abs(a), rel_tol=1e-15):
            raise ValueError("an arc stays an arc only under similarities (s = |a|)")
        lo, hi = self._image(a, b)
        return Arc(lo, hi, b + a * self.center, abs(a) * self.radius)

    def params(self):
        return {"center": self.center, "radius": self.radius}

    def _angle(self, l: float) -> float:
        return math.asin(max(-1.0, min(1.0, (l - self.center) / self.radius)))

    def meridian_length(self, a, b):
        return self.radius * (self._angle(b) - self._angle(a))

    def area(self, a, b):
        # r * sqrt(1 + r'^2) is identically the radius on a circle
        return 2 * math.pi * self.radius * (b - a)


@dataclass(frozen=True)
class RecipSqrt(Piece):
    """``1 / sqrt(k (l - center)^2 + m)``."""

    kind: ClassVar[str] = "recip_sqrt"
    lo: float
    hi: float
    k: float
    m: float
    center: float = 0.0

    def _q(self, l):
        u = np.asarray(l, dtype=float) - self.center
        return u, self.k * u * u + self.m

    def value(self, l):
        _, q = self._q(l)
        return q**-0.5

    def deriv(self, l):
        u, q = self._q(l)
        return -self.k * u * q**-1.5

    def deriv2(self, l):
        u, q = self._q(l)
        return self.k * (2 * self.k * u * u - self.m) * q**-2.5

    def deriv3(self, l):
        u, q = self._q(l)
        return 3 * self.k**2 * u * (3 * self.m - 2 * self.k * u * u) * q**-3.5

    def critical_points(self):
        return [self.center] if self.lo <= self.center <= self.hi else []

    def mapped(self, a, b, s):
        lo, hi = self._image(a, b)
        return RecipSqrt(lo, hi, self.k / (a * a * s * s), self.m / (s * s), b + a * self.center)

    def params(self):
        return {"k": self.k, "m": self.m, "center": self.center}


@dataclass(frozen=True)
class DLinear(Piece):
    """Segment whose derivative is linear, from slope ``s0`` at ``lo`` to ``s1`` at ``hi``."""

    kind: ClassVar[str] = "dlinear"
    lo: float
    hi: float
    r0: float
    s0: float
    s1: float

    def value(self, l):
        u = np.asarray(l, dtype=float) - self.lo
        w = self.hi - self.lo
        return self.r0 + self.s0 * u + (self.s1 - self.s0) * u * u / (2 * w)

    def deriv(self, l):
        u = np.asarray(l, dtype=float) - self.lo
        return self.s0 + (self.s1 - self.s0) * u / (self.hi - self.lo)

    def deriv2(self, l):
        return np.zeros_like(np.asarray(l, dtype=float)) + (self.s1 - self.s0) / (self.hi - self.lo)

    def deriv3(self, l):
        return np.zeros_like(np.asarray(l, dtype=float))

    def critical_points(self):
        if self.s0 == self.s1:
            return []
        x = self.lo + (self.hi - self.lo) * self.s0 / (self.s0 - self.s1)
        return [x] if self.lo <= x <= self.hi else []

    def mapped(self, a, b, s):
        lo, hi = self._image(a, b)
        start = self.lo if a > 0 else self.hi
        end = self.hi if a > 0 else self.lo
        return DLinear(lo, hi, s * float(self.value(start)), s / a * float(self.deriv(start)), s / a * float(self.deriv(end)))

    def params(self):
        return {"r0": self.r0, "s0": self.s0, "s1": self.s1}

    def meridian_length(self, a, b):
        # integral of sqrt(1 + p^2) with p linear in l
        slope = (self.s1 - self.s0) / (self.hi - self.lo)
        if slope == 0:
            return (b - a) * math.sqrt(1 + self.s0**2)
        prim = lambda p: 0.5 * (p * math.sqrt(1 + p * p) + math.asinh(p))
        return (prim(float(self.deriv(b))) - prim(float(self.deriv(a)))) / slope


_PIECE_TYPES = {cls.kind: cls for cls in (Poly, Arc, RecipSqrt, DLinear)}


def piece_from_dict(item: dict) -> Piece:
    cls = _PIECE_TYPES[item["type"]]
    lo, hi = item["range"]
    params = dict(item["params"])
    if cls is Poly:
        params["coeffs"] = tuple(params["coeffs"])
    return cls(lo, hi, **params)


@dataclass(frozen=True)
class ProfileFunction:
    """Piecewise profile of a surface of revolution.

    ``kind`` is ``"periodic"`` (torus), ``"capped"`` (sphere: the profile
    vanishes at both ends) or ``"open"``. ``smoothing`` lists declared
    intervals where corners were rounded off.
    """

    pieces: tuple[Piece, ...]
    kind: str = "open"
    chart: str = "ambient"
    metric_scale: float = 1.0
    smoothing: tuple[tuple[float, float], ...] = ()
    name: str = ""
    _lows: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        if self.kind not in ("periodic", "capped", "open"):
            raise ValueError(f"unknown profile kind {self.kind!r}")
        if self.chart not in ("ambient", "arclength"):
            raise ValueError(f"unknown chart {self.chart!r}")
        if not self.pieces:
            raise ValueError("a profile needs at least one piece")
        pieces = tuple(sorted(self.pieces, key=lambda p: p.lo))
        for p, q in zip(pieces, pieces[1:]):
            scale = max(abs(p.hi), abs(q.lo), q.hi - q.lo, 1e-300)
            if abs(p.hi - q.lo) > 1e-12 * scale:
                raise ValueError(f"gap between pieces at {p.hi} and {q.lo}")
        object.__setattr__(self, "pieces", pieces)
        object.__setattr__(self, "smoothing", tuple(tuple(w) for w in self.smoothing))
        object.__setattr__(self, "_lows", np.array([p.lo for p in pieces]))

    # --- geometry of the domain -------------------------------------------
    @property
    def lo(self) -> float:
        return self.pieces[0].lo

    @property
    def hi(self) -> float:
        return self.pieces[-1].hi

    @property
    def period(self) -> Optional[float]:
        return self.hi - self.lo if self.kind == "periodic" else None

    def breakpoints(self) -> list[float]:
        return [p.lo for p in self.pieces] + [self.hi]

    def _locate(self, l: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        l = np.asarray(l, dtype=float)
        if self.kind == "periodic":
            l = self.lo + np.mod(l - self.lo, self.hi - self.lo)
        else:
            span = self.hi - self.lo
            if np.any(l < self.lo - 1e-12 * span) or np.any(l > self.hi + 1e-12 * span):
                raise ValueError(f"point outside the domain [{self.lo}, {self.hi}]")
            l = np.clip(l, self.lo, self.hi)
        idx = np.clip(np.searchsorted(self._lows, l, side="right") - 1, 0, len(self.pieces) - 1)
        return l, idx

    def _evaluate(self, l: ArrayLike, method: str) -> ArrayLike:
        scalar = np.ndim(l) == 0
        pts, idx = self._locate(np.atleast_1d(l))
        out = np.empty_like(pts)
        for i in np.unique(idx):
            mask = idx == i
            out[mask] = getattr(self.pieces[i], method)(pts[mask])
        return float(out[0]) if scalar else out

    def value(self, l: ArrayLike) -> ArrayLike:
        return self._evaluate(l, "value")

    def deriv(self, l: ArrayLike) -> ArrayLike:
        return self._evaluate(l, "deriv")

    def deriv2(self, l: ArrayLike) -> ArrayLike:
        return self._evaluate(l, "deriv2")

    def deriv3(self, l: ArrayLike) -> ArrayLike:
        return self._evaluate(l, "deriv3")

    __call__ = value

    def piece_at(self, l: float) -> Piece:
        _, idx = self._locate(np.atleast_1d(l))
        return self.pieces[int(idx[0])]

    def critical_points(self, tol: float = 1e-10) -> list[float]:
        """Points where the derivative vanishes, deduplicated (modulo the period)."""
        raw = []
        for p in self.pieces:
            raw.extend(p.critical_points())
        raw.sort()
        span = self.hi - self.lo
        out: list[float] = []
        for x in raw:
            if self.kind == "periodic" and abs(x - self.hi) <= tol * span:
                x = self.lo
            if any(abs(x - y) <= tol * span for y in out):
                continue
            out.append(x)
        return sorted(out)

    def metric_tensor(self, l: float) -> tuple[float, float]:
        """Diagonal entries ``(g_ll, g_thetatheta)`` of the metric at ``l``."""
        r = self.value(l)
        if self.chart == "arclength":
            g11 = 1.0
        else:
            g11 = 1.0 + self.deriv(l) ** 2
        return (self.metric_scale * g11, self.metric_scale * r * r)

    def scaled(self, c: float) -> "ProfileFunction":
        """The same profile carrying the metric multiplied by ``c``."""
        if c <= 0:
            raise ValueError("metric scale must be positive")
        return replace(self, metric_scale=self.metric_scale * c)

    # --- serialisation -------------------------------------------------------
    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "kind": self.kind,
            "chart": self.chart,
            "metric_scale": self.metric_scale,
            "smoothing": [list(w) for w in self.smoothing],
            "segments": [p.to_dict() for p in self.pieces],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)

    @classmethod
    def from_dict(cls, payload: dict) -> "ProfileFunction":
        return cls(
            tuple(piece_from_dict(s) for s in payload["segments"]),
            kind=payload.get("kind", "open"),
            chart=payload.get("chart", "ambient"),
            metric_scale=payload.get("metric_scale", 1.0),
            smoothing=tuple(tuple(w) for w in payload.get("smoothing", ())),
            name=payload.get("name", ""),
        )

    @classmethod
    def from_json(cls, text: str) -> "ProfileFunction":
        return cls.from_dict(json.loads(text))

    # --- transformations -------------------------------------------------------
    def mapped(self, a: float, b: float, s: float, **changes) -> "ProfileFunction":
        """Profile of ``l -> s * r((l - b) / a)``."""
        pieces = tuple(p.mapped(a, b, s) for p in self.pieces)
        smoothing = tuple(tuple(sorted((b + a * u, b + a * v))) for u, v in self.smoothing)
        return replace(self, pieces=pieces, smoothing=smoothing, **changes)

    def grid(self, n: int, extra: Sequence[float] = ()) -> np.ndarray:
        """Uniform grid joined with breakpoints, critical points and ``extra``."""
        pts = np.linspace(self.lo, self.hi, max(int(n), 2))
        pts = np.concatenate([pts, self.breakpoints(), self.critical_points(), np.asarray(extra, dtype=float)])
        return np.unique(np.clip(pts, self.lo, self.hi))


class ArclengthChart:
    """Change of variable between the ambient coordinate ``x`` and arclength ``X``.

    For an ambient profile ``X(x)`` integrates ``sqrt(1 + f'^2)``. For an
    arclength profile ``x(X)`` integrates ``sqrt(1 - F'^2)``, which needs
    ``|F'| < 1``. The origin is ``0`` when it lies in the domain.
    """

    def __init__(self, profile: ProfileFunction, origin: Optional[float] = None):
        self.profile = profile
        if origin is None:
            origin = 0.0 if profile.lo <= 0.0 <= profile.hi else profile.lo
        self.origin = origin

    def _integrand(self, t: float) -> float:
        d = float(self.profile.deriv(t))
        if self.profile.chart == "ambient":
            return math.sqrt(1.0 + d * d)
        if abs(d) >= 1.0:
            raise ValueError(f"|F'| >= 1 at X={t}; no ambient chart")
        return math.sqrt(1.0 - d * d)

    def _forward(self, t: float) -> float:
        """Integral from the origin to ``t`` in the profile's own coordinate."""
        if t == self.origin:
            return 0.0
        a, b, sign = (self.origin, t, 1.0) if t > self.origin else (t, self.origin, -1.0)
        total = 0.0
        for p in self.profile.pieces:
            u, v = max(a, p.lo), min(b, p.hi)
            if v <= u:
                continue
            if self.profile.chart == "ambient":
                total += p.meridian_length(u, v)
            else:
                total += integrate.quad(self._integrand, u, v, **_QUAD)[0]
        return sign * total

    def _inverse(self, target: float) -> float:
        lo, hi = self.profile.lo, self.profile.hi
        f = lambda t: self._forward(t) - target
        return optimize.brentq(f, lo, hi, xtol=1e-15 * max(1.0, hi - lo), rtol=1e-15, maxiter=200)

    @property
    def T(self) -> float:
        """Arclength from the origin to the upper end of the domain."""
        end = self.profile.hi
        return self._forward(end) if self.profile.chart == "ambient" else end - self.origin

    def X_of_x(self, x: float) -> float:
        if self.profile.chart == "ambient":
            return self._forward(x)
        return self._inverse(x)

    def x_of_X(self, X: float) -> float:
        if self.profile.chart == "ambient":
            return self._inverse(X)
        return self._forward(X)
