"""Explicit metric families and the comparison machinery between them."""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np
from scipy import integrate, optimize

from .profiles import Arc, DLinear, Piece, Poly, ProfileFunction, RecipSqrt

__all__ = [
    "torus_profile",
    "BulkedSphereParams",
    "bulked_sphere_profile",
    "MultiBulkedParams",
    "multi_bulked_profile",
    "family_profile",
    "smooth_corners",
    "profile_ratio",
    "metric_dominates",
    "comparison_constants",
    "rbm_upper_bound",
    "volume_and_diameter",
    "AreaDiameter",
    "embed_L",
    "embed_A",
    "embed_Q",
]


# --- torus ------------------------------------------------------------------


def _torus_cap(k: float, m: float, eps: float) -> tuple[float, float, float, float]:
    """Cubic on ``[1 - eps, 1]`` (local variable ``u``) joining ``F0`` with zero slope at 1.

    Its derivative is the quadratic that matches ``F0'`` and ``F0''`` at
    ``1 - eps`` and vanishes at ``1``.
    """
    base = RecipSqrt(-1.0, 1.0, k, m)
    x0 = 1.0 - eps
    f0 = float(base.value(x0))
    d1 = float(base.deriv(x0))
    d2 = float(base.deriv2(x0))
    c = -(d1 + d2 * eps) / eps**2
    return (f0, d1, d2 / 2, c / 3)


def torus_profile(k: float, m: float, eps: float = 0.0, copies: int = 1) -> ProfileFunction:
    """Periodic profile ``F(X) = 1 / sqrt(k X^2 + m)`` on ``[-1, 1]`` in the arclength chart.

    With ``eps > 0`` the corner at ``X = +-1`` is rounded off on windows of
    width ``eps`` so that the minimum becomes a smooth critical point.
    ``copies`` glues that many periods end to end.
    """
    if k <= 0 or m <= 0:
        raise ValueError("k and m must be positive")
    if not 0 <= eps < 1:
        raise ValueError("eps must lie in [0, 1)")
    if copies < 1:
        raise ValueError("copies must be at least 1")
    if eps == 0:
        cell = [RecipSqrt(-1.0, 1.0, k, m)]
        windows: list[tuple[float, float]] = []
    else:
        f0, a1, a2, a3 = _torus_cap(k, m, eps)
        cell = [
            Poly(-1.0, -1.0 + eps, -1.0 + eps, (f0, -a1, a2, -a3)),
            RecipSqrt(-1.0 + eps, 1.0 - eps, k, m),
            Poly(1.0 - eps, 1.0, 1.0 - eps, (f0, a1, a2, a3)),
        ]
        windows = [(-1.0, -1.0 + eps), (1.0 - eps, 1.0)]
    pieces: list[Piece] = []
    smoothing = []
    for j in range(copies):
        pieces.extend(p.mapped(1.0, 2.0 * j, 1.0) for p in cell)
        smoothing.extend((u + 2.0 * j, v + 2.0 * j) for u, v in windows)
    return ProfileFunction(
        tuple(pieces),
        kind="periodic",
        chart="arclength",
        smoothing=tuple(smoothing),
        name=f"torus(k={k:g},m={m:g},eps={eps:g},copies={copies})",
    )


# --- corner smoothing ---------------------------------------------------------


def _restrict(piece: Piece, lo: float, hi: float) -> Piece:
    if isinstance(piece, DLinear):
        return DLinear(lo, hi, float(piece.value(lo)), float(piece.deriv(lo)), float(piece.deriv(hi)))
    return replace(piece, lo=lo, hi=hi)


def _window_poly(profile: ProfileFunction, a: float, b: float) -> Poly:
    """Degree-7 replacement on ``[a, b]`` whose derivative is a degree-6 polynomial.

    The derivative matches the old first three derivatives at both ends and
    has the same integral, so the value matches at both ends too.
    """
    w = b - a
    ends = []
    for x, side in ((a, -1), (b, +1)):
        # evaluate on the side facing away from the window
        if side < 0:
            piece = next(p for p in profile.pieces if p.lo < x <= p.hi)
        else:
            piece = next(p for p in profile.pieces if p.lo <= x < p.hi)
        ends.append(
            (float(piece.value(x)), float(piece.deriv(x)), float(piece.deriv2(x)), float(piece.deriv3(x)))
        )
    (v0, d0, e0, f0), (v1, d1, e1, f1) = ends
    # derivative P(t) = sum c_i t^i, t = (l - a) / w in [0, 1]
    M = np.zeros((7, 7))
    rhs = np.zeros(7)
    for i in range(7):
        M[0, i] = 1.0 if i == 0 else 0.0
        M[1, i] = 1.0
        M[2, i] = i if i == 1 else 0.0
        M[3, i] = i
        M[4, i] = 2.0 if i == 2 else 0.0
        M[5, i] = i * (i - 1)
        M[6, i] = 1.0 / (i + 1)
    rhs[:] = [d0, d1, e0 * w, e1 * w, f0 * w * w, f1 * w * w, (v1 - v0) / w]
    c = np.linalg.solve(M, rhs)
    coeffs = [v0] + [c[i] * w / (i + 1) / w ** (i + 1) for i in range(7)]
    return Poly(a, b, a, tuple(coeffs))


def smooth_corners(profile: ProfileFunction, windows: Sequence[tuple[float, float]]) -> ProfileFunction:
    """Replace the profile on each window by a polynomial that joins it to third order.

    Windows must not overlap and must each contain at most one breakpoint.
    """
    windows = sorted(windows)
    for (a0, b0), (a1, b1) in zip(windows, windows[1:]):
        if b0 > a1:
            raise ValueError("smoothing windows overlap")
    replacements = [_window_poly(profile, a, b) for a, b in windows]
    pieces: list[Piece] = []
    for p in profile.pieces:
        cuts = [(p.lo, p.hi)]
        for a, b in windows:
            nxt = []
            for u, v in cuts:
                if b <= u or a >= v:
                    nxt.append((u, v))
                    continue
                if u < a:
                    nxt.append((u, a))
                if b < v:
                    nxt.append((b, v))
            cuts = nxt
        pieces.extend(_restrict(p, u, v) for u, v in cuts if v > u)
    pieces.extend(replacements)
    return replace(profile, pieces=tuple(pieces), smoothing=tuple(profile.smoothing) + tuple(windows))


# --- bulked sphere ----------------------------------------------------------------


@dataclass(frozen=True)
class BulkedSphereParams:
    """Sharpness ``n`` and family coordinate ``x`` with every derived constant."""

    n: int
    x: float = 0.0

    def __post_init__(self) -> None:
        if int(self.n) != self.n or self.n < 1:
            raise ValueError("n must be a positive integer")
        if not self.x >= 0 or math.isinf(self.x):
            raise ValueError("x must be finite and nonnegative")

    @property
    def A(self) -> float:
        return math.sqrt(1.0 / (8.0 * math.pi))

    @property
    def B(self) -> float:
        return 10.0**-self.n * self.A

    @property
    def Bp(self) -> float:
        return 10.0 ** (-2 * self.n) * self.A

    @property
    def delta0(self) -> float:
        t = 10.0**self.n
        return math.sqrt(math.pi / 8) / (2 * t + 1) * (3 - 1 / (t * t)) / math.sqrt(2 * t - 1)

    @property
    def h(self) -> float:
        return 3 * self.delta0 / (2 * math.pi)

    @property
    def h_x(self) -> float:
        return self.delta0 / (2 * math.pi) * math.exp(-self.x)

    @property
    def s_x(self) -> float:
        return 2 * (self.h - self.h_x) / self.Bp

    @property
    def s_min(self) -> float:
        return 2 * self.delta0 / (math.pi * self.Bp)

    @property
    def K_slope(self) -> float:
        A, B = self.A, self.B
        return (A - B) / math.sqrt(2 * A * B - B * B)

    @property
    def q_x(self) -> float:
        B, Bp = self.B, self.Bp
        return (self.s_min * (B - Bp) + self.K_slope * Bp - self.s_x * Bp) / (B - Bp)

    @property
    def neck_energy(self) -> float:
        """Energy of the neck circle, ``delta0^2 e^{-2x} / 2``."""
        return (2 * math.pi * self.h_x) ** 2 / 2

    @property
    def threshold(self) -> float:
        """Truncation level ``delta0^2 / 2`` for the loop barcodes."""
        return self.delta0**2 / 2

    def smoothing_windows(self) -> list[tuple[float, float]]:
        w = 1e-3 * self.Bp
        B, Bp = self.B, self.Bp
        right = [(Bp - w, Bp + w), (2 * Bp - w, 2 * Bp + w), (B - 2 * w, B)]
        return sorted(right + [(-v, -u) for u, v in right])


def _bulked_right_half(p: BulkedSphereParams) -> list[Piece]:
    A, B, Bp = p.A, p.B, p.Bp
    mid = p.h + Bp * (p.s_x + p.q_x) / 2
    return [
        DLinear(Bp, 2 * Bp, p.h, p.s_x, p.q_x),
        DLinear(2 * Bp, B, mid, p.q_x, p.K_slope),
        Arc(B, 2 * A, A, A),
    ]


def bulked_sphere_profile(p: BulkedSphereParams, smooth: bool = False) -> ProfileFunction:
    """Even profile on ``[-2A, 2A]``: two round caps joined through a thin neck at 0."""
    right = _bulked_right_half(p)
    left = [q.mapped(-1.0, 0.0, 1.0) for q in right]
    center = Poly(-p.Bp, p.Bp, 0.0, (p.h_x, 0.0, (p.h - p.h_x) / p.Bp**2))
    profile = ProfileFunction(
        tuple(left + [center] + right),
        kind="capped",
        chart="ambient",
        name=f"bulked_sphere(n={p.n},x={p.x:g})",
    )
    if smooth:
        profile = smooth_corners(profile, p.smoothing_windows())
    return profile


# --- multi-bulked chain -------------------------------------------------------------


@dataclass(frozen=True)
class MultiBulkedParams:
    """Chain of spheres with ``N`` necks; ``xs`` must be nondecreasing and nonnegative."""

    N: int
    n: int
    xs: tuple[float, ...]
    tau: float = 0.05
    E_min: float = 1.0

    def __post_init__(self) -> None:
        object.__setattr__(self, "xs", tuple(float(v) for v in self.xs))
        if self.N < 1 or len(self.xs) != self.N:
            raise ValueError(f"need exactly N={self.N} neck coordinates")
        if any(v < 0 for v in self.xs) or any(a > b for a, b in zip(self.xs, self.xs[1:])):
            raise ValueError("xs must be nonnegative and nondecreasing")
        if not 0 < self.tau:
            raise ValueError("tau must be positive")

    @property
    def A_N(self) -> float:
        return self.tau / self.N

    @property
    def scale(self) -> float:
        """Similarity ratio between one neck and the bulked sphere neck."""
        return self.A_N / BulkedSphereParams(self.n).A

    @property
    def B_N(self) -> float:
        return 10.0**-self.n * self.A_N

    @property
    def delta0_N(self) -> float:
        return BulkedSphereParams(self.n).delta0 * self.tau * math.sqrt(8 * math.pi) / self.N

    def neck_positions(self) -> list[float]:
        return [(2 * k - 1) * self.A_N for k in range(1, self.N + 1)]

    def neck_energies(self) -> list[float]:
        return [(self.delta0_N * math.exp(-x)) ** 2 / 2 for x in self.xs]

    @property
    def threshold(self) -> float:
        return self.delta0_N**2 / 2


def _hermite_connector(tau: float, R: float) -> tuple[float, float, float, float]:
    """Cubic from height ``tau`` with zero slope at 0 onto the circle of radius ``R`` at ``R/2``."""
    w = R / 2
    v1 = math.sqrt(R * R - w * w)
    d1 = -w / v1
    c3 = (d1 * w - 2 * (v1 - tau)) / w**3
    c2 = (3 * (v1 - tau) - d1 * w) / w**2
    return (tau, 0.0, c2, c3)


def multi_bulked_profile(p: MultiBulkedParams, smooth: bool = False) -> ProfileFunction:
    """Open profile on ``[0, 2 tau]`` replacing a cylinder of radius ``tau`` by ``N`` necks."""
    AN, BN, s = p.A_N, p.B_N, p.scale
    L = 2 * p.tau
    coeffs = _hermite_connector(p.tau, AN)
    pieces: list[Piece] = [Poly(0.0, AN / 2, 0.0, coeffs)]
    smoothing: list[tuple[float, float]] = []
    left_end = AN / 2
    for k, (t, x) in enumerate(zip(p.neck_positions(), p.xs)):
        pieces.append(Arc(left_end, t - BN, t - AN, AN))
        neck = bulked_sphere_profile(BulkedSphereParams(p.n, x), smooth=smooth)
        for q in neck.pieces:
            if isinstance(q, Arc):
                continue
            pieces.append(q.mapped(s, t, s))
        smoothing.extend((t + s * u, t + s * v) for u, v in neck.smoothing)
        left_end = t + BN
    pieces.append(Arc(left_end, L - AN / 2, L, AN))
    c0, c1, c2, c3 = coeffs
    pieces.append(Poly(L - AN / 2, L, L, (c0, -c1, c2, -c3)))
    xs = ",".join(f"{v:g}" for v in p.xs)
    return ProfileFunction(
        tuple(pieces),
        kind="open",
        chart="ambient",
        smoothing=tuple(smoothing),
        name=f"multi_bulked(N={p.N},n={p.n},xs=[{xs}],tau={p.tau:g})",
    )


def family_profile(family: str, **params) -> ProfileFunction:
    """Expand a named family into its profile."""
    if family == "torus":
        return torus_profile(
            float(params.get("k", 1.0)),
            float(params.get("m", 2.0)),
            float(params.get("eps", 0.0)),
            int(params.get("copies", 1)),
        )
    if family == "bulked_sphere":
        return bulked_sphere_profile(
            BulkedSphereParams(int(params.get("n", 1)), float(params.get("x", 0.0))),
            smooth=bool(params.get("smooth", False)),
        )
    if family == "multi_bulked":
        xs = tuple(params["xs"])
        mp = MultiBulkedParams(len(xs), int(params.get("n", 1)), xs, float(params.get("tau", 0.05)))
        return multi_bulked_profile(mp, smooth=bool(params.get("smooth", False)))
    raise ValueError(f"unknown family {family!r}")


# --- metric comparison -------------------------------------------------------------


def _ratio(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """``a / b`` with ``0/0 = 1`` (and equal values giving exactly 1)."""
    a = np.abs(np.asarray(a, dtype=float))
    b = np.abs(np.asarray(b, dtype=float))
    out = np.empty_like(a)
    same = a == b
    out[same] = 1.0
    rest = ~same
    with np.errstate(divide="ignore", invalid="ignore"):
        out[rest] = a[rest] / b[rest]
    return out


def _common_cells(r1: ProfileFunction, r2: ProfileFunction) -> list[tuple[float, float]]:
    if r1.chart != r2.chart:
        raise ValueError("profiles must use the same chart")
    lo, hi = r1.lo, r1.hi
    span = hi - lo
    if abs(r2.lo - lo) > 1e-12 * span or abs(r2.hi - hi) > 1e-12 * span:
        raise ValueError("profiles must share a domain")
    cuts = np.unique(np.array(r1.breakpoints() + r2.breakpoints()))
    cuts = cuts[(cuts >= lo) & (cuts <= hi)]
    return [(float(a), float(b)) for a, b in zip(cuts, cuts[1:]) if b > a]


def _sup_terms(r1: ProfileFunction, r2: ProfileFunction, l: np.ndarray) -> np.ndarray:
    """Pointwise ``max(r1/r2, |r1'|/|r2'|)`` (the derivative part floored at 1).

    In the arclength chart ``g_XX`` is the same for both, so only values count.
    """
    vals = _ratio(r1.value(l), r2.value(l))
    if r1.chart == "arclength":
        return np.maximum(vals, 1.0)
    ders = _ratio(r1.deriv(l), r2.deriv(l))
    return np.maximum(vals, np.maximum(ders, 1.0))


def _refine(f, u: float, v: float) -> float:
    """Local maximum of ``f`` on ``[u, v]``, searched in an offset variable.

    Bounded Brent scales its tolerance with ``|x|``; working in ``x - u``
    keeps it proportional to the bracket instead.
    """
    res = optimize.minimize_scalar(
        lambda d: -f(u + d), bounds=(0.0, v - u), method="bounded", options={"xatol": 1e-6 * (v - u)}
    )
    return float(-res.fun)


def _sup_of(f_vec, r1: ProfileFunction, r2: ProfileFunction, grid: int) -> tuple[float, float]:
    """Supremum of a pointwise quantity over a per-cell grid plus critical points."""
    cells = _common_cells(r1, r2)
    per_cell = max(16, int(grid) // max(1, len(cells)))
    special = np.array(r1.critical_points() + r2.critical_points(), dtype=float)
    best, where = -math.inf, r1.lo
    for a, b in cells:
        # stay strictly inside so each piece is evaluated on its own cell
        pad = 1e-12 * (b - a)
        pts = np.linspace(a + pad, b - pad, per_cell)
        inside = special[(special > a) & (special < b)]
        pts = np.sort(np.concatenate([pts, inside, [a, b]]))
        vals = f_vec(pts)
        i = int(np.argmax(vals))
        if vals[i] > best:
            best, where = float(vals[i]), float(pts[i])
        if not math.isfinite(vals[i]):
            continue
        u, v = pts[max(i - 1, 0)], pts[min(i + 1, len(pts) - 1)]
        if v > u:
            val = _refine(lambda t: float(f_vec(np.array([t]))[0]), float(u), float(v))
            if val > best:
                best = val
    return best, where


def _sup_ratio(r1: ProfileFunction, r2: ProfileFunction, grid: int) -> tuple[float, float]:
    """Supremum of :func:`_sup_terms` and where it is attained."""
    return _sup_of(lambda l: _sup_terms(r1, r2, l), r1, r2, grid)


def profile_ratio(r1: ProfileFunction, r2: ProfileFunction, grid: int = 10_000) -> float:
    """Smallest ``C`` from pointwise profile and slope ratios with ``C^-2 g2 <= g1 <= C^2 g2``.

    Ratios use ``0/0 = 1``. Constant metric factors enter as their square
    roots. Returns ``inf`` where exactly one of the two quantities vanishes.
    """
    c12, _ = _sup_ratio(r1, r2, grid)
    c21, _ = _sup_ratio(r2, r1, grid)
    s = r1.metric_scale / r2.metric_scale
    return max(math.sqrt(s) * c12, c21 / math.sqrt(s))


def _pointwise_excess(r1: ProfileFunction, r2: ProfileFunction, l: np.ndarray) -> np.ndarray:
    """Pointwise ``max`` of the entries of ``g1 / g2`` in the diagonal frame."""
    s = r1.metric_scale / r2.metric_scale
    v = _ratio(r1.value(l), r2.value(l)) ** 2
    if r1.chart == "arclength":
        d = np.ones_like(v)
    else:
        d = _ratio(1 + r1.deriv(l) ** 2, 1 + r2.deriv(l) ** 2)
    return s * np.maximum(v, d)


def _sup_excess(r1: ProfileFunction, r2: ProfileFunction, grid: int) -> float:
    return _sup_of(lambda l: _pointwise_excess(r1, r2, l), r1, r2, grid)[0]


def metric_dominates(r1: ProfileFunction, r2: ProfileFunction, C: float, grid: int = 10_000, rel_tol: float = 1e-12) -> bool:
    """Whether ``g1 <= C g2``: ``r1^2 <= C r2^2`` and ``1 + r1'^2 <= C (1 + r2'^2)`` pointwise."""
    if C <= 0:
        raise ValueError("C must be positive")
    return _sup_excess(r1, r2, grid) <= C * (1 + rel_tol)


def comparison_constants(g1: ProfileFunction, g2: ProfileFunction, grid: int = 10_000) -> tuple[float, float]:
    """``(C1, C2)`` with ``g1 / C1 <= g2 <= C2 g1``, each at least one."""
    C1 = max(1.0, _sup_excess(g1, g2, grid))
    C2 = max(1.0, _sup_excess(g2, g1, grid))
    return C1, C2


def rbm_upper_bound(r1: ProfileFunction, r2: ProfileFunction, grid: int = 10_000) -> float:
    """``ln C^2`` with ``C`` from :func:`profile_ratio` (identity diffeomorphism only)."""
    return 2.0 * math.log(profile_ratio(r1, r2, grid))


# --- area and diameter ----------------------------------------------------------------


@dataclass(frozen=True)
class AreaDiameter:
    area: float
    diameter_upper: float
    meridian_length: float


def volume_and_diameter(r: ProfileFunction) -> AreaDiameter:
    """Area by per-piece quadrature and a diameter bound from explicit paths.

    Capped surfaces: two meridian arcs through one pole. Periodic and open
    surfaces: a meridian stretch plus half a parallel at the widest point.
    """
    if r.chart == "ambient":
        area = sum(p.area(p.lo, p.hi) for p in r.pieces)
        meridian = sum(p.meridian_length(p.lo, p.hi) for p in r.pieces)
    else:
        area = 2 * math.pi * sum(integrate.quad(lambda t: float(p.value(t)), p.lo, p.hi, epsrel=1e-12)[0] for p in r.pieces)
        meridian = r.hi - r.lo
    widest = float(np.max(r.value(r.grid(2000))))
    if r.kind == "capped":
        bound = meridian
    elif r.kind == "periodic":
        bound = meridian / 2 + math.pi * widest
    else:
        bound = meridian + math.pi * widest
    s = r.metric_scale
    return AreaDiameter(s * area, math.sqrt(s) * bound, math.sqrt(s) * meridian)


# --- embeddings -------------------------------------------------------------------------


def embed_L(x: Sequence[float]) -> np.ndarray:
    """L-shaped embedding of ``R^N`` into ``[0, inf)^{2N}`` with corner at ``(1, 1)``.

    Works row-wise on arrays of shape ``(..., N)``.
    """
    x = np.asarray(x, dtype=float)
    first = np.where(x < 0, 1.0, 1.0 + x)
    second = np.where(x < 0, 1.0 - x, 1.0)
    return np.stack([first, second], axis=-1).reshape(*x.shape[:-1], 2 * x.shape[-1])


def embed_A(x: Sequence[float]) -> np.ndarray:
    """Partial sums; maps the nonnegative orthant onto nondecreasing vectors."""
    return np.cumsum(np.asarray(x, dtype=float), axis=-1)


def embed_Q(x: Sequence[float]) -> np.ndarray:
    return embed_A(embed_L(x))
