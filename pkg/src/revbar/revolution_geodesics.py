"""Geodesic flow, rotation integral, closed-geodesic census and Jacobi analysis.

Coordinates are ``(X, theta)`` with metric ``dX^2 + F(X)^2 dtheta^2``. On the
unit level ``p_X^2 + C / F^2 = 1`` where ``C = p_theta^2`` is the squared
Clairaut constant.
"""

from __future__ import annotations

import cmath
import logging
import math
import warnings
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy import integrate, optimize
from scipy.linalg import expm

from .profiles import ArclengthChart, ProfileFunction

log = logging.getLogger(__name__)

__all__ = [
    "FlowState",
    "Trajectory",
    "FlowIntegrationError",
    "Well",
    "ClosedGeodesic",
    "JacobiReport",
    "metric_tensor",
    "integrate_flow",
    "clairaut_constant",
    "find_well",
    "turning_points",
    "theta_shift",
    "oscillation_period",
    "flow_oscillation",
    "classify_clairaut_level",
    "parallel_circles",
    "census_class_alpha",
    "jacobi_parallel",
    "poincare_matrix",
]


class FlowIntegrationError(RuntimeError):
    """The ODE solver gave up, typically where the profile tends to zero."""


# --- X-chart access ---------------------------------------------------------


class _XView:
    """``F`` and ``F'`` as functions of arclength, whatever the profile's chart."""

    def __init__(self, profile: ProfileFunction):
        self.profile = profile
        self._chart = None if profile.chart == "arclength" else ArclengthChart(profile)

    def F(self, X: float) -> float:
        if self._chart is None:
            return float(self.profile.value(X))
        return float(self.profile.value(self._chart.x_of_X(X)))

    def dF(self, X: float) -> float:
        if self._chart is None:
            return float(self.profile.deriv(X))
        d = float(self.profile.deriv(self._chart.x_of_X(X)))
        return d / math.sqrt(1.0 + d * d)

    def dF_many(self, X: np.ndarray) -> np.ndarray:
        if self._chart is None:
            return np.asarray(self.profile.deriv(X), dtype=float)
        return np.array([self.dF(float(v)) for v in X])

    def joins(self) -> tuple[list[float], Optional[float]]:
        """Piece boundaries in the ``X`` chart, with the period when there is one."""
        prof = self.profile
        pts = prof.breakpoints() if prof.kind == "periodic" else prof.breakpoints()[1:-1]
        if self._chart is not None:
            pts = [self._chart.X_of_x(x) for x in pts]
        if prof.kind != "periodic":
            return pts, None
        period = pts[-1] - pts[0]
        return pts[:-1], period


def metric_tensor(profile: ProfileFunction, X: float) -> tuple[float, float]:
    """``(g_XX, g_thetatheta) = (1, F(X)^2)`` in arclength coordinates."""
    view = _XView(profile)
    if profile.chart == "arclength":
        profile._locate(np.atleast_1d(X))  # domain check
    F = view.F(X)
    return (profile.metric_scale, profile.metric_scale * F * F)


# --- flow ---------------------------------------------------------------------


@dataclass(frozen=True)
class FlowState:
    X: float
    theta: float
    p_X: float
    p_theta: float

    def hamiltonian(self, profile: ProfileFunction) -> float:
        F = _XView(profile).F(self.X)
        return 0.5 * (self.p_X**2 + self.p_theta**2 / F**2)

    @classmethod
    def unit(cls, profile: ProfileFunction, X: float, C: float, theta: float = 0.0, sign: float = 1.0) -> "FlowState":
        """Unit-speed state at ``X`` with ``p_theta = sqrt(C)``."""
        F = _XView(profile).F(X)
        rest = 1.0 - C / F**2
        if rest < -1e-12:
            raise ValueError(f"C={C} exceeds F(X)^2={F * F} at X={X}")
        if abs(rest) <= 4 * np.finfo(float).eps:
            rest = 0.0  # on a parallel circle; sqrt would inflate the roundoff
        return cls(X, theta, math.copysign(math.sqrt(max(rest, 0.0)), sign), math.sqrt(C))


@dataclass(frozen=True)
class Trajectory:
    t: np.ndarray
    X: np.ndarray
    theta: np.ndarray
    p_X: np.ndarray
    p_theta: float

    def state(self, i: int) -> FlowState:
        return FlowState(float(self.X[i]), float(self.theta[i]), float(self.p_X[i]), self.p_theta)

    def energy_error(self, profile: ProfileFunction) -> float:
        """Largest ``|H - 1/2|`` over the stored samples."""
        F = np.array([_XView(profile).F(x) for x in self.X]) if profile.chart != "arclength" else profile.value(self.X)
        H = 0.5 * (self.p_X**2 + self.p_theta**2 / F**2)
        return float(np.max(np.abs(H - 0.5)))

    def clairaut_drift(self, profile: ProfileFunction) -> float:
        values = [clairaut_constant(profile, self.state(i)) for i in range(len(self.t))]
        return float(np.max(np.abs(np.array(values) - self.p_theta)))


def _rhs(view: _XView, p_theta: float) -> Callable:
    C = p_theta * p_theta

    def rhs(t, y):
        X, _, pX = y
        F = view.F(X)
        if not F > 0:
            raise FlowIntegrationError(f"profile vanishes at X={X}")
        dF = view.dF(X)
        return [pX, p_theta / (F * F), C * dF / F**3]

    return rhs


class _PiecewiseSolution:
    """Dense output and event times gathered over several solver runs."""

    def __init__(self, runs, n_events: int):
        self._runs = [(r.t[0], r.t[-1], r.sol) for r in runs]
        self.t_events = [np.concatenate([r.t_events[i] for r in runs]) if runs else np.array([]) for i in range(n_events)]

    def sol(self, t: float) -> np.ndarray:
        for lo, hi, dense in self._runs:
            if t <= hi:
                return dense(t)
        return self._runs[-1][2](t)


def _join_event(X0: float, period: Optional[float]) -> Callable:
    if period is None:
        event = lambda t, y: y[0] - X0
    else:
        event = lambda t, y: math.sin(math.pi * (y[0] - X0) / period)
    event.terminal = True
    return event


def integrate_flow(
    profile: ProfileFunction,
    state0: FlowState,
    t_end: float,
    tol: float = 1e-10,
    events=None,
    max_step: float = math.inf,
):
    """Integrate the unit-level Hamiltonian system from ``state0``.

    Uses an explicit Dormand-Prince 8(5,3) scheme with relative tolerance
    ``tol / 100``, which keeps ``|H - 1/2|`` within ``10 tol``. The solver is
    restarted whenever ``X`` crosses a piece boundary: the profile is only
    finitely smooth there and a step straddling a join defeats the error
    estimate. Returns the trajectory, or ``(trajectory, solution)`` when
    ``events`` are given; ``solution`` has ``t_events`` and a dense ``sol``.
    """
    H0 = state0.hamiltonian(profile)
    if abs(H0 - 0.5) > tol:
        raise ValueError(f"initial state is not unit speed: H = {H0}")
    view = _XView(profile)
    rhs = _rhs(view, state0.p_theta)
    user = list(events or [])
    pts, period = view.joins()
    joins = [_join_event(x, period) for x in pts]
    t, y, skip = 0.0, [state0.X, state0.theta, state0.p_X], None
    runs = []
    while True:
        active = [j for i, j in enumerate(joins) if i != skip]
        sol = integrate.solve_ivp(
            rhs,
            (t, t_end),
            y,
            method="DOP853",
            rtol=tol / 100,
            atol=tol / 1000,
            events=user + active or None,
            dense_output=events is not None,
            max_step=max_step,
        )
        if sol.status < 0:
            raise FlowIntegrationError(
                f"integration stopped at t={sol.t[-1]:.6g}, X={sol.y[0, -1]:.6g}: {sol.message}"
            )
        if sol.t_events is None:
            sol.t_events = []
        runs.append(sol)
        if sol.status != 1:
            break
        hit = next(i for i in range(len(user), len(user) + len(active)) if sol.t_events[i].size)
        t = float(sol.t_events[hit][-1])
        # the interpolant at the event comes from a step across the join; redo the last stretch
        tail = integrate.solve_ivp(
            rhs, (sol.t[-2], t), sol.y[:, -2], method="DOP853", rtol=tol / 100, atol=tol / 1000
        )
        y = tail.y[:, -1]
        sol.y[:, -1] = y
        skip = joins.index(active[hit - len(user)])
    ts = np.concatenate([r.t if k == 0 else r.t[1:] for k, r in enumerate(runs)])
    ys = np.concatenate([r.y if k == 0 else r.y[:, 1:] for k, r in enumerate(runs)], axis=1)
    traj = Trajectory(ts, ys[0], ys[1], ys[2], state0.p_theta)
    if events is None:
        return traj
    return traj, _PiecewiseSolution(runs, len(user))


def clairaut_constant(profile: ProfileFunction, state: FlowState) -> float:
    """``F cos(phi)`` with ``phi`` the angle between the velocity and the parallel."""
    F = _XView(profile).F(state.X)
    theta_dot = state.p_theta / (F * F)
    speed = math.sqrt(state.p_X**2 + (F * theta_dot) ** 2)
    return F * F * theta_dot / speed


# --- rotation integral ----------------------------------------------------


@dataclass(frozen=True)
class Well:
    """Stretch of the profile between two minima around one maximum."""

    left: float
    top: float
    right: float

    def band(self, profile: ProfileFunction) -> tuple[float, float]:
        """Open interval of Clairaut levels giving oscillations inside the well."""
        view = _XView(profile)
        low = max(view.F(self.left), view.F(self.right))
        return (low * low, view.F(self.top) ** 2)


def _classified_critical_points(profile: ProfileFunction) -> list[tuple[float, str]]:
    out = []
    for x in map(float, profile.critical_points()):
        d2 = float(profile.deriv2(x))
        if d2 < 0:
            out.append((x, "max"))
        elif d2 > 0:
            out.append((x, "min"))
        else:
            out.append((x, "flat"))
    return out


def _wells(profile: ProfileFunction) -> list[Well]:
    crit = _classified_critical_points(profile)
    if profile.chart != "arclength":
        raise ValueError("wells are computed in the arclength chart")
    maxima = [x for x, k in crit if k == "max"]
    minima = [x for x, k in crit if k == "min"]
    wells = []
    for top in maxima:
        if profile.kind == "periodic":
            P = profile.period
            cands = minima + [m - P for m in minima] + [m + P for m in minima]
        else:
            cands = list(minima)
        left = max((m for m in cands if m < top), default=None)
        right = min((m for m in cands if m > top), default=None)
        # Without a smooth minimum the domain ends bound the well.
        if left is None:
            left = profile.lo
        if right is None:
            right = profile.hi
        wells.append(Well(left, top, right))
    return wells


def find_well(profile: ProfileFunction, top: Optional[float] = None) -> Well:
    """The well around the maximum ``top`` (default: the highest maximum)."""
    wells = _wells(profile)
    if not wells:
        raise ValueError("profile has no local maximum")
    if top is None:
        return max(wells, key=lambda w: float(profile.value(w.top)))
    return min(wells, key=lambda w: abs(w.top - top))


def turning_points(profile: ProfileFunction, C: float, well: Optional[Well] = None) -> tuple[float, float]:
    """Solve ``F(X) = sqrt(C)`` on both monotone branches of the well."""
    well = well or find_well(profile)
    lo_C, hi_C = well.band(profile)
    if not lo_C < C < hi_C:
        raise ValueError(f"C={C} outside the admissible band ({lo_C}, {hi_C})")
    view = _XView(profile)
    target = math.sqrt(C)
    g = lambda X: view.F(X) - target
    span = well.right - well.left
    kw = dict(xtol=1e-15 * max(1.0, span), rtol=1e-15, maxiter=500)
    try:
        left = optimize.brentq(g, well.left, well.top, **kw)
        right = optimize.brentq(g, well.top, well.right, **kw)
    except ValueError as exc:
        raise ValueError(
            f"no sign change for F = sqrt({C}) on [{well.left}, {well.top}] or [{well.top}, {well.right}]"
        ) from exc
    return left, right


def _turning_integral(profile: ProfileFunction, C: float, well: Optional[Well], weight: str, tol: float) -> float:
    """Integral of ``w(X) / sqrt(F^2 - C)`` between the turning points.

    The substitution ``X = mid + half * sin(u)`` removes the inverse square
    root at both ends.
    """
    well = well or find_well(profile)
    a, b = turning_points(profile, C, well)
    mid, half = 0.5 * (a + b), 0.5 * (b - a)
    view = _XView(profile)
    if weight == "theta":
        w = lambda F: math.sqrt(C) / F
    else:
        w = lambda F: F

    def limit(X):
        F = view.F(X)
        slope = abs(view.dF(X))
        return w(F) * math.sqrt(half / (F * slope))

    end_left, end_right = limit(a), limit(b)

    root = math.sqrt(C)
    nodes, weights = np.polynomial.legendre.leggauss(8)

    def excess(X, h, end):
        # F(X) - sqrt(C) as an integral of F' from the nearer turning point;
        # the direct difference cancels badly when the band is narrow.
        if abs(h) > 0.02 * half:
            return view.F(X) - root
        s = end + 0.5 * h * (nodes + 1.0)
        return 0.5 * h * float(weights @ view.dF_many(s))

    def f(u):
        X = mid + half * math.sin(u)
        F = view.F(X)
        c2 = math.cos(u) ** 2
        if u >= 0:
            h, end = -half * c2 / (1.0 + math.sin(u)), b
        else:
            h, end = half * c2 / (1.0 - math.sin(u)), a
        gap = excess(X, h, end) * (F + root)
        if gap <= 0.0:
            return end_left if u < 0 else end_right
        return w(F) * half * math.cos(u) / math.sqrt(gap)

    shifts = (-profile.period, 0.0, profile.period) if profile.period else (0.0,)
    points = [
        math.asin((x + sh - mid) / half)
        for x in profile.breakpoints()
        for sh in shifts
        if a < x + sh < b
    ]
    with warnings.catch_warnings():
        # A roundoff notice only means machine precision was reached first.
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        value, _ = integrate.quad(
            f, -math.pi / 2, math.pi / 2, points=sorted(set(points)) or None, epsabs=0.0, epsrel=tol / 10, limit=400
        )
    return 2.0 * value


def theta_shift(profile: ProfileFunction, C: float, tol: float = 1e-9, well: Optional[Well] = None) -> float:
    """Net advance of ``theta`` over one full ``X``-oscillation at level ``C``.

    ``Theta(C) = 2 sqrt(C) * int dX / (F sqrt(F^2 - C))`` between the turning points.
    """
    return _turning_integral(profile, C, well, "theta", tol)


def oscillation_period(profile: ProfileFunction, C: float, tol: float = 1e-9, well: Optional[Well] = None) -> float:
    """Time (arclength) of one full ``X``-oscillation at level ``C``."""
    return _turning_integral(profile, C, well, "time", tol)


@dataclass(frozen=True)
class Oscillation:
    theta_shift: float
    period: float
    trajectory: Trajectory


def flow_oscillation(profile: ProfileFunction, C: float, tol: float = 1e-10, well: Optional[Well] = None) -> Oscillation:
    """Measure one oscillation by integrating the flow from the top of the well.

    Independent of :func:`theta_shift`: no turning points or quadrature are
    used, only the ODE and a crossing event.
    """
    well = well or find_well(profile)
    X0 = well.top
    state0 = FlowState.unit(profile, X0, C)

    def crossing(t, y):
        return y[0] - X0

    crossing.direction = 1.0
    horizon = 8.0 * (well.right - well.left) + 1.0
    for _ in range(12):
        traj, sol = integrate_flow(profile, state0, horizon, tol, events=[crossing], max_step=horizon / 50)
        hits = [t for t in sol.t_events[0] if t > 1e-6 * horizon]
        if hits:
            t1 = hits[0]
            y1 = sol.sol(t1)
            mask = traj.t < t1
            t_all = np.append(traj.t[mask], t1)
            cut = Trajectory(
                t_all,
                np.append(traj.X[mask], y1[0]),
                np.append(traj.theta[mask], y1[1]),
                np.append(traj.p_X[mask], y1[2]),
                traj.p_theta,
            )
            return Oscillation(float(y1[1] - state0.theta), float(t1), cut)
        horizon *= 2
    raise FlowIntegrationError(f"no return to X={X0} for C={C}")


def classify_clairaut_level(profile: ProfileFunction, C: float, well: Optional[Well] = None, rel: float = 1e-12) -> str:
    """Phase-portrait case of level ``C`` relative to the well.

    Returns ``"circle"``, ``"oscillation"``, ``"heteroclinic"`` or ``"winding"``.
    """
    well = well or find_well(profile)
    lo, hi = well.band(profile)
    if math.isclose(C, hi, rel_tol=rel):
        return "circle"
    if math.isclose(C, lo, rel_tol=rel):
        return "heteroclinic"
    if lo < C < hi:
        return "oscillation"
    if 0 <= C < lo:
        return "winding"
    raise ValueError(f"C={C} exceeds the maximum of F^2")


# --- closed geodesics -------------------------------------------------------


@dataclass(frozen=True)
class JacobiReport:
    K: float
    eigenvalues: tuple[complex, complex]
    index: int
    nullity: int
    hyperbolic: bool

    @property
    def degenerate(self) -> bool:
        return self.nullity > 0


def poincare_matrix(K: float) -> np.ndarray:
    """Time-one map of ``J'' + K J = 0`` on ``(J, J')``."""
    return expm(np.array([[0.0, 1.0], [-K, 0.0]]))


def jacobi_parallel(profile: ProfileFunction, at: float, m_iterate: int = 1, tol: float = 1e-10) -> JacobiReport:
    """Linearised return map, index and nullity of the parallel circle at ``at``.

    With ``K = -4 pi^2 r r''`` for the circle run once on ``[0, 1]``, the
    ``m``-th iterate has ``K_m = m^2 K``. Negative ``K`` is hyperbolic with
    index zero. Positive ``K`` is elliptic; its index is the odd number among
    ``c`` and ``c + 1``, ``c`` counting conjugate points in ``(0, 1)``.
    """
    if m_iterate < 1:
        raise ValueError("m_iterate must be a positive integer")
    r = float(profile.value(at))
    slope = float(profile.deriv(at))
    scale = max(abs(r), 1e-300)
    if abs(slope) > tol * max(1.0, abs(float(profile.deriv2(at))) * scale):
        raise ValueError(f"not a critical point: derivative {slope} at {at}")
    r2 = float(profile.deriv2(at))
    K1 = -4.0 * math.pi**2 * r * r2
    K = m_iterate**2 * K1
    if K < 0:
        mu = math.sqrt(-K)
        return JacobiReport(K, (complex(math.exp(mu)), complex(math.exp(-mu))), 0, 0, True)
    if K == 0:
        return JacobiReport(K, (1 + 0j, 1 + 0j), 0, 1, False)
    omega = math.sqrt(K)
    turns = omega / (2 * math.pi)
    eig = (cmath.exp(1j * omega), cmath.exp(-1j * omega))
    conj = math.ceil(omega / math.pi - 1e-12) - 1
    if abs(turns - round(turns)) <= 1e-12 * max(1.0, turns):
        # every orthogonal Jacobi field closes up
        return JacobiReport(K, eig, conj, 2, False)
    index = conj if conj % 2 == 1 else conj + 1
    return JacobiReport(K, eig, index, 0, False)


@dataclass(frozen=True)
class ClosedGeodesic:
    """A closed geodesic parametrised with constant speed on ``[0, 1]``."""

    kind: str
    energy: float
    length: float
    homotopy: tuple[int, int]
    index: Optional[int]
    nullity: Optional[int]
    clairaut_C: float
    ident: str
    location: Optional[float] = None

    def __post_init__(self) -> None:
        if not math.isclose(self.energy, self.length**2 / 2, rel_tol=1e-12):
            raise ValueError("energy must equal length^2 / 2")

    @property
    def nondegenerate(self) -> bool:
        return self.nullity == 0


def _circle(profile: ProfileFunction, x: float, ident: str) -> ClosedGeodesic:
    r = float(profile.value(x))
    length = 2 * math.pi * r * math.sqrt(profile.metric_scale)
    jac = jacobi_parallel(profile, x)
    return ClosedGeodesic(
        "parallel_circle", length**2 / 2, length, (1, 0), jac.index, jac.nullity, r * r, ident, x
    )


def parallel_circles(profile: ProfileFunction) -> list[ClosedGeodesic]:
    """One geodesic per critical point of the profile (its parallel circle)."""
    out = []
    for x, kind in _classified_critical_points(profile):
        if float(profile.value(x)) <= 0:
            continue
        out.append(_circle(profile, x, f"circle[{kind}]@{x:.12g}"))
    return out


def _theta_grid(profile: ProfileFunction, well: Well, n: int, tol: float) -> tuple[np.ndarray, np.ndarray]:
    lo, hi = well.band(profile)
    # Chebyshev nodes crowd the ends of the open band without touching them.
    k = np.arange(n)
    C = lo + (hi - lo) * 0.5 * (1 - np.cos((k + 0.5) * np.pi / n))
    theta = np.array([theta_shift(profile, c, tol, well) for c in C])
    return C, theta


def census_class_alpha(profile: ProfileFunction, tol: float = 1e-9, grid: int = 48) -> list[ClosedGeodesic]:
    """Closed geodesics winding once around the rotation axis.

    Returns every parallel circle plus, inside each well, the oscillating
    geodesics that close after ``j`` oscillations (``Theta(C) = 2 pi / j``).
    Oscillating geodesics come in rotation families and are reported with
    nullity one and unknown index.
    """
    if profile.kind != "periodic" or profile.chart != "arclength":
        raise ValueError("census needs a periodic profile in the arclength chart")
    crit = _classified_critical_points(profile)
    if any(k == "flat" for _, k in crit):
        raise ValueError("degenerate critical point of the profile")
    if not any(k == "min" for _, k in crit):
        raise ValueError("profile has no smooth minimum; smooth its corners first")
    out = parallel_circles(profile)
    for well in _wells(profile):
        C, theta = _theta_grid(profile, well, grid, tol)
        j_max = int(math.floor(2 * math.pi / np.min(theta))) if np.min(theta) < 2 * math.pi else 0
        for j in range(1, j_max + 1):
            target = 2 * math.pi / j
            diff = theta - target
            for i in range(len(C) - 1):
                if diff[i] == 0 or diff[i] * diff[i + 1] < 0:
                    root = C[i] if diff[i] == 0 else optimize.brentq(
                        lambda c: theta_shift(profile, c, tol, well) - target, C[i], C[i + 1], xtol=1e-14
                    )
                    period = oscillation_period(profile, root, tol, well)
                    length = j * period * math.sqrt(profile.metric_scale)
                    out.append(
                        ClosedGeodesic(
                            "oscillating", length**2 / 2, length, (1, 0), None, 1, root,
                            f"oscillating[j={j}]@C={root:.12g}", well.top,
                        )
                    )
    return sorted(out, key=lambda g: (g.energy, g.ident))
