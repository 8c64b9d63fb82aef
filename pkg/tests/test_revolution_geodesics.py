import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import circle_index, jacobi_eigenvalues, torus_energies, torus_oscillation_period, torus_theta
from revbar.constructions import torus_profile
from revbar.profiles import Poly, ProfileFunction
from revbar.revolution_geodesics import (
    ClosedGeodesic,
    FlowState,
    census_class_alpha,
    clairaut_constant,
    classify_clairaut_level,
    find_well,
    flow_oscillation,
    integrate_flow,
    jacobi_parallel,
    metric_tensor,
    oscillation_period,
    parallel_circles,
    poincare_matrix,
    theta_shift,
    turning_points,
)

F0 = torus_profile(1, 2)
F_EPS = torus_profile(1, 2, 0.01)


def neck(r0=1.0, r2=1.0):
    """Open profile ``r0 + r2 l^2 / 2`` with a minimum at zero."""
    return ProfileFunction((Poly(-1.0, 1.0, 0.0, (r0, 0.0, r2 / 2)),))


@pytest.mark.parametrize("X, expected", [(0.0, (1.0, 0.5)), (1.0, (1.0, 1 / 3))])
def test_metric_tensor_torus(X, expected):
    assert metric_tensor(F0, X) == pytest.approx(expected, rel=1e-14)


def test_metric_tensor_cylinder_and_domain():
    cyl = ProfileFunction((Poly(-1, 1, 0, (1.0,)),), chart="arclength")
    assert metric_tensor(cyl, 0.7) == (1.0, 1.0)
    with pytest.raises(ValueError):
        metric_tensor(cyl, 3.0)


def test_meridian_flow():
    traj = integrate_flow(F0, FlowState.unit(F0, 0.2, 0.0), 1.5)
    assert np.all(traj.theta == 0.0)
    assert np.allclose(traj.X, 0.2 + traj.t, atol=1e-9)


def test_parallel_circle_flow():
    C = 0.5
    traj = integrate_flow(F0, FlowState.unit(F0, 0.0, C), 10.0)
    assert np.max(np.abs(traj.X)) < 1e-12
    assert np.allclose(traj.theta, traj.t * math.sqrt(C) / 0.5, rtol=1e-9)


def test_harmonic_oscillation_matches_closed_form():
    C, k, m = 0.4, 1.0, 2.0
    lam = math.sqrt((1 / C - m) / k)
    traj = integrate_flow(F0, FlowState.unit(F0, -lam, C), 12.0)
    expected = -lam * np.cos(math.sqrt(C * k) * traj.t)
    assert np.max(np.abs(traj.X - expected)) < 1e-6


def test_flow_requires_unit_speed():
    with pytest.raises(ValueError):
        integrate_flow(F0, FlowState(0.0, 0.0, 2.0, 0.0), 1.0)


@settings(max_examples=15, deadline=None)
@given(st.floats(-0.9, 0.9), st.floats(0.0, 0.33), st.sampled_from([1.0, -1.0]))
def test_flow_invariants(X0, C, sign):
    state = FlowState.unit(F_EPS, X0, min(C, float(F_EPS.value(X0)) ** 2), sign=sign)
    traj = integrate_flow(F_EPS, state, 8.0)
    assert traj.energy_error(F_EPS) <= 1e-9
    assert traj.clairaut_drift(F_EPS) <= 1e-6


@pytest.mark.parametrize(
    "state, expected",
    [(FlowState(0.0, 0.0, 0.0, math.sqrt(0.5)), math.sqrt(0.5)), (FlowState(0.3, 0.0, 1.0, 0.0), 0.0)],
    ids=["circle", "meridian"],
)
def test_clairaut_constant_cases(state, expected):
    assert clairaut_constant(F0, state) == pytest.approx(expected, abs=1e-15)


def test_theta_shift_known_value():
    assert theta_shift(F0, 0.4) == pytest.approx(4.5 * math.pi, rel=1e-9)


@pytest.mark.parametrize("k, m", [(1, 2), (1, 1.5), (4, 9), (2, 3)])
@pytest.mark.parametrize("frac", [0.001, 0.1, 0.5, 0.9, 0.999])
def test_theta_shift_closed_form(k, m, frac):
    F = torus_profile(k, m)
    lo, hi = 1 / (k + m), 1 / m
    C = lo + frac * (hi - lo)
    assert theta_shift(F, C) == pytest.approx(torus_theta(k, m, C), rel=1e-9)
    assert theta_shift(F, C) > 2 * math.pi * m / math.sqrt(k)


@pytest.mark.parametrize("C", [0.34, 0.4, 0.45, 0.49])
def test_oscillation_period_closed_form(C):
    assert oscillation_period(F0, C) == pytest.approx(torus_oscillation_period(1.0, C), rel=1e-9)


def test_theta_shift_outside_band():
    with pytest.raises(ValueError):
        theta_shift(F0, 0.6)
    with pytest.raises(ValueError):
        theta_shift(F0, 0.2)


def test_turning_points_symmetric():
    a, b = turning_points(F0, 0.4)
    assert a == pytest.approx(-b, abs=1e-14)
    assert b == pytest.approx(math.sqrt(0.5), rel=1e-13)


@pytest.mark.parametrize("C", [0.34, 0.37, 0.42, 0.47])
def test_flow_reproduces_theta_shift(C):
    osc = flow_oscillation(F_EPS, C)
    assert osc.theta_shift == pytest.approx(theta_shift(F_EPS, C), abs=1e-5)
    assert osc.period == pytest.approx(oscillation_period(F_EPS, C), abs=1e-5)
    assert osc.trajectory.energy_error(F_EPS) <= 1e-8
    assert osc.trajectory.clairaut_drift(F_EPS) <= 1e-6


def test_classify_levels():
    lo, hi = find_well(F_EPS).band(F_EPS)
    assert classify_clairaut_level(F_EPS, hi) == "circle"
    assert classify_clairaut_level(F_EPS, 0.5 * (lo + hi)) == "oscillation"
    assert classify_clairaut_level(F_EPS, lo) == "heteroclinic"
    assert classify_clairaut_level(F_EPS, 0.5 * lo) == "winding"
    with pytest.raises(ValueError):
        classify_clairaut_level(F_EPS, 1.1 * hi)


def test_phase_portrait_behaviour():
    lo, hi = find_well(F_EPS).band(F_EPS)
    # winding: X keeps moving in one direction
    wind = integrate_flow(F_EPS, FlowState.unit(F_EPS, 0.0, 0.5 * lo), 10.0)
    assert np.all(np.diff(wind.X) > 0)
    # oscillation: X stays between the turning points
    C = 0.5 * (lo + hi)
    a, b = turning_points(F_EPS, C)
    osc = integrate_flow(F_EPS, FlowState.unit(F_EPS, 0.0, C), 20.0)
    assert a - 1e-8 <= osc.X.min() and osc.X.max() <= b + 1e-8
    assert osc.X.min() < a + 1e-3 and osc.X.max() > b - 1e-3


def test_hyperbolic_neck_circle():
    rep = jacobi_parallel(neck(), 0.0)
    assert rep.K == pytest.approx(-4 * math.pi**2)
    assert rep.hyperbolic and rep.index == 0 and rep.nullity == 0
    assert rep.eigenvalues[0].real == pytest.approx(math.exp(2 * math.pi), rel=1e-12)
    assert rep.eigenvalues[0].real == pytest.approx(535.491655524764, rel=1e-12)
    assert rep.eigenvalues[1].real == pytest.approx(0.00186744273170799, rel=1e-12)


@pytest.mark.parametrize("m", [1, 2, 3, 4, 5])
def test_hyperbolic_iterates_have_index_zero(m):
    rep = jacobi_parallel(neck(), 0.0, m_iterate=m)
    assert rep.index == 0 and rep.hyperbolic
    assert rep.eigenvalues[0].real * rep.eigenvalues[1].real == pytest.approx(1.0, rel=1e-12)


@pytest.mark.parametrize("K", [-4 * math.pi**2, -1.0, 0.5, 3.0, 20.0, 50.0])
def test_poincare_matrix_eigenvalues(K):
    # expm route against the closed form
    ev = np.linalg.eigvals(poincare_matrix(K))
    expected = jacobi_eigenvalues(K)
    assert sorted(ev, key=lambda z: (z.real, z.imag)) == pytest.approx(
        sorted(expected, key=lambda z: (z.real, z.imag)), rel=1e-9
    )
    P = poincare_matrix(K)
    # the determinant cancels products of entries of size |P|
    assert np.linalg.det(P) == pytest.approx(1.0, abs=8 * np.finfo(float).eps * np.max(np.abs(P)) ** 2)


@settings(max_examples=100)
@given(st.floats(0.01, 3.0), st.floats(-3.0, 3.0).filter(lambda v: abs(v) > 1e-3), st.integers(1, 6))
def test_index_matches_oracle(r0, r2, m):
    rep = jacobi_parallel(neck(r0, r2), 0.0, m_iterate=m)
    K = -4 * math.pi**2 * r0 * r2 * m * m
    if K > 0 and abs(math.sqrt(K) / (2 * math.pi) - round(math.sqrt(K) / (2 * math.pi))) < 1e-9:
        return
    assert rep.index == circle_index(K)
    assert rep.nullity == 0


def test_degenerate_elliptic_circle():
    # sqrt(K) = 2 pi exactly when r0 * r2 = -1
    rep = jacobi_parallel(neck(1.0, -1.0), 0.0)
    assert rep.nullity == 2 and rep.degenerate


def test_torus_max_circle_is_elliptic_index_one():
    F, F2 = float(F0.value(0.0)), float(F0.deriv2(0.0))
    assert 0 < -F * F2 < 1
    rep = jacobi_parallel(F0, 0.0)
    assert not rep.hyperbolic and rep.index == 1 and rep.nullity == 0


def test_jacobi_refuses_non_critical_point():
    with pytest.raises(ValueError):
        jacobi_parallel(F0, 0.4)
    with pytest.raises(ValueError):
        jacobi_parallel(neck(), 0.0, m_iterate=0)


def test_closed_geodesic_energy_length():
    with pytest.raises(ValueError):
        ClosedGeodesic("parallel_circle", 1.0, 1.0, (1, 0), 0, 0, 1.0, "bad")


def test_parallel_circles_sit_at_critical_points():
    circles = parallel_circles(F_EPS)
    assert sorted(g.location for g in circles) == [-1.0, 0.0]
    for g in circles:
        assert g.length == pytest.approx(2 * math.pi * float(F_EPS.value(g.location)), rel=1e-15)


def test_census_smoothed_torus():
    census = census_class_alpha(F_EPS)
    assert [g.ident for g in census] == ["circle[min]@-1", "circle[max]@0"]
    e_min, e_max = torus_energies(1, 2)
    assert census[0].energy == pytest.approx(e_min, rel=1e-2)
    assert census[1].energy == pytest.approx(e_max, rel=1e-12)
    assert (census[0].index, census[1].index) == (0, 1)


def test_census_finds_designed_oscillation():
    F = torus_profile(9, 2, 0.01)
    census = census_class_alpha(F)
    osc = [g for g in census if g.kind == "oscillating"]
    assert len(osc) == 1
    C = osc[0].clairaut_C
    # closed form on the unsmoothed band: (pi/3)(1/C + 2) = 2 pi
    assert C == pytest.approx(0.25, rel=1e-9)
    assert osc[0].length == pytest.approx(torus_oscillation_period(9, 0.25), rel=1e-9)
    # closure checked independently by the flow
    assert flow_oscillation(F, C).theta_shift == pytest.approx(2 * math.pi, abs=1e-6)


def test_census_needs_periodic_profile():
    with pytest.raises(ValueError):
        census_class_alpha(neck())
    with pytest.raises(ValueError):
        census_class_alpha(F0)  # no smooth minimum without the caps
