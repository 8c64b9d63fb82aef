"""End-to-end acceptance checks, one test per criterion.

The summary hook in ``conftest.py`` prints a PASS/FAIL line for each.
"""

import itertools
import math
import time

import numpy as np
import pytest

from oracles import (
    brute_bottleneck,
    jacobi_eigenvalues,
    stability_lower,
    torus_energies,
    torus_theta,
)
from revbar.bottleneck import (
    bottleneck_distance,
    exhaustive_interleaving_threshold,
    lower_bound_opt_matching,
    matching_feasible,
)
from revbar.constructions import (
    BulkedSphereParams,
    bulked_sphere_profile,
    embed_Q,
    profile_ratio,
    rbm_upper_bound,
    torus_profile,
    volume_and_diameter,
)
from revbar.loop_barcode import stability_chain_check
from revbar.persistence_core import (
    Bar,
    Barcode,
    FinitePM,
    PMorphism,
    bar_window,
    comparison_map,
    compose,
    interval_morphism_exists,
    shift,
)
from revbar.reproduce import embedding_7_3, exist_geodesic_1_6, theta_closed_form, torus_example_1_8
from revbar.revolution_geodesics import (
    FlowState,
    find_well,
    flow_oscillation,
    integrate_flow,
    jacobi_parallel,
    theta_shift,
)
from revbar.profiles import Poly, ProfileFunction


def _random_barcode(rng, max_bars=6, degrees=(0, 1)):
    bars = []
    for deg in degrees:
        for _ in range(int(rng.integers(0, max_bars + 1))):
            a = int(rng.integers(0, 17)) / 2
            if rng.random() < 0.2:
                bars.append(Bar(a, None, deg))
            else:
                bars.append(Bar(a, a + int(rng.integers(1, 13)) / 2, deg))
    return Barcode(bars)


def test_criterion_01_torus_barcode():
    rep = torus_example_1_8(k=1.0, m=2.0, eps=0.01, ns=(1, 3))
    assert rep.passed, rep.lines()
    assert rep.elapsed < 5.0
    e_min_ref, e_max_ref = torus_energies(1, 2)
    details = {c.name: c.detail for c in rep.checks}
    for n in (1, 3):
        assert abs(details[f"n={n} E_min"]["E_min"] - e_min_ref) <= 1e-2 * e_min_ref
        assert abs(details[f"n={n} E_max"]["E_max"] - e_max_ref) <= 1e-6 * e_max_ref


def test_criterion_02_theta_closed_form():
    rep = theta_closed_form(pairs=((1, 2), (1, 1.5), (4, 9)), points=50)
    assert rep.passed, rep.lines()
    assert rep.elapsed < 2.0
    # spot check against the independent oracle
    for k, m in ((1, 2), (1, 1.5), (4, 9)):
        F = torus_profile(k, m)
        for C in np.linspace(1 / (k + m), 1 / m, 7)[1:-1]:
            assert theta_shift(F, C) == pytest.approx(torus_theta(k, m, C), rel=1e-6)
            if math.sqrt(k) < m:
                assert theta_shift(F, C) > 2 * math.pi


def test_criterion_03_flow_cross_check():
    F = torus_profile(1, 2, 0.01)
    lo, hi = find_well(F).band(F)
    for frac in (0.05, 0.3, 0.6, 0.95):
        C = lo + frac * (hi - lo)
        osc = flow_oscillation(F, C)
        assert osc.theta_shift == pytest.approx(theta_shift(F, C), abs=1e-5)
        assert osc.trajectory.energy_error(F) <= 1e-8
        assert osc.trajectory.clairaut_drift(F) <= 1e-6
    rng = np.random.default_rng(3)
    for _ in range(8):
        X0 = rng.uniform(-0.9, 0.9)
        C = min(rng.uniform(0, hi), float(F.value(X0)) ** 2)
        traj = integrate_flow(F, FlowState.unit(F, X0, C, sign=rng.choice([-1.0, 1.0])), 10.0)
        assert traj.energy_error(F) <= 1e-8
        assert traj.clairaut_drift(F) <= 1e-6


def test_criterion_04_jacobi_index():
    neck = ProfileFunction((Poly(-1.0, 1.0, 0.0, (1.0, 0.0, 0.5)),))
    rep = jacobi_parallel(neck, 0.0)
    big, small = sorted((ev.real for ev in rep.eigenvalues), reverse=True)
    assert big == pytest.approx(math.exp(2 * math.pi), rel=1e-10)
    assert small == pytest.approx(math.exp(-2 * math.pi), rel=1e-10)
    assert sorted(abs(z) for z in jacobi_eigenvalues(-4 * math.pi**2)) == pytest.approx(sorted([big, small]), rel=1e-10)
    for m in range(1, 6):
        assert jacobi_parallel(neck, 0.0, m_iterate=m).index == 0
    torus = torus_profile(1, 2)
    product = -float(torus.value(0.0)) * float(torus.deriv2(0.0))
    assert 0 < product < 1
    top = jacobi_parallel(torus, 0.0)
    assert not top.hyperbolic and top.index == 1


def test_criterion_05_bottleneck_oracle():
    rng = np.random.default_rng(5)
    start = time.perf_counter()
    for _ in range(500):
        B1, B2 = _random_barcode(rng), _random_barcode(rng)
        assert abs(bottleneck_distance(B1, B2) - brute_bottleneck(B1, B2)) <= 1e-12 or (
            bottleneck_distance(B1, B2) == brute_bottleneck(B1, B2) == math.inf
        )
    assert time.perf_counter() - start < 30.0


def test_criterion_06_opt_matching_soundness():
    rng = np.random.default_rng(6)
    qualifying = 0
    while qualifying < 500:
        B1 = _random_barcode(rng, degrees=(1,))
        B2 = _random_barcode(rng, degrees=(1,))
        n = int(rng.integers(1, 4))
        if min(len(B1), len(B2)) < n:
            continue
        bound = lower_bound_opt_matching(B1, B2, n)
        if bound is None:
            continue
        qualifying += 1
        d = bottleneck_distance(B1, B2)
        assert bound <= d + 1e-12
        # every case of the argument is strict unless the endpoints agree
        assert bound == 0 or bound < d
    # all chosen bars matched among themselves: the bottleneck is the full gap
    B1 = Barcode([Bar(0, 10, 1), Bar(1, 10, 1)])
    B2 = Barcode([Bar(3, 10, 1), Bar(1, 10, 1)])
    bound = lower_bound_opt_matching(B1, B2, 2)
    d = bottleneck_distance(B1, B2)
    witness = matching_feasible(B1, B2, d)
    assert not witness.erased1 and not witness.erased2
    assert d == 2 * bound == 2.0
    # the stated half-gap bound is attained when the left endpoints agree
    same = Barcode([Bar(0, 5, 1), Bar(2, None, 1)])
    assert lower_bound_opt_matching(same, same, 2) == bottleneck_distance(same, same) == 0.0


def _random_module(rng, k, infinite):
    bars = [Bar(0.5 * int(rng.integers(0, 9)), None) for _ in range(infinite)]
    for _ in range(k - infinite):
        a = 0.5 * int(rng.integers(0, 9))
        bars.append(Bar(a, a + 0.5 * int(rng.integers(1, 9))))
    return FinitePM(bars)


def test_criterion_07_isometry():
    rng = np.random.default_rng(7)
    for _ in range(200):
        k1, k2 = int(rng.integers(0, 5)), int(rng.integers(0, 5))
        inf = int(rng.integers(0, min(k1, k2) + 1))
        M1, M2 = _random_module(rng, k1, inf), _random_module(rng, k2, inf)
        e = exhaustive_interleaving_threshold(M1, M2)
        d = bottleneck_distance(M1.barcode(), M2.barcode())
        assert abs(e - d) <= 1e-9


def _legal_patterns(src, tgt):
    legal = [
        (i, j)
        for i, t in enumerate(tgt.summands)
        for j, s in enumerate(src.summands)
        if interval_morphism_exists(s.birth, s.death, t.birth, t.death)
    ]
    for bits in itertools.product((0, 1), repeat=len(legal)):
        mat = np.zeros((len(tgt), len(src)), dtype=np.uint8)
        for (i, j), b in zip(legal, bits):
            mat[i, j] = b
        yield PMorphism(src, tgt, mat)


def test_criterion_08_bar_witness():
    rng = np.random.default_rng(8)
    triangles = failures = 0
    while triangles < 200:
        A, B = 0.5 * int(rng.integers(0, 3)), 0.5 * int(rng.integers(0, 3))
        a = 0.5 * int(rng.integers(0, 5))
        b = a + A + B + 0.5 * int(rng.integers(1, 6))
        V = FinitePM([Bar(a, b)] + [Bar(0.5 * int(rng.integers(0, 8)), None)] * int(rng.integers(0, 2)))
        # W: a perturbed copy of the long bar plus random extras
        c = a + 0.5 * int(rng.integers(-3, 4))
        wb = [Bar(c, max(c + 0.5, b + 0.5 * int(rng.integers(-3, 4))))]
        for _ in range(int(rng.integers(0, 3))):
            c = 0.5 * int(rng.integers(0, 8))
            wb.append(Bar(c, None) if rng.random() < 0.3 else Bar(c, c + 0.5 * int(rng.integers(1, 8))))
        W = FinitePM(wb)
        WA, VAB = shift(W, A), shift(V, A + B)
        target = comparison_map(V, A + B)
        window = bar_window(a, b, A, B)
        assert window is not None
        found = 0
        for f in _legal_patterns(V, WA):
            for g in _legal_patterns(WA, VAB):
                if compose(g, f) == target:
                    found += 1
                    if not any(window.contains(w) for w in W.summands):
                        failures += 1
                if found >= 5:
                    break
            if found >= 5:
                break
        triangles += found
    assert failures == 0


def test_criterion_09_profile_laws():
    rng = np.random.default_rng(9)
    cache = {}

    def prof(x):
        if x not in cache:
            cache[x] = bulked_sphere_profile(BulkedSphereParams(2, x))
        return cache[x]

    for _ in range(50):
        x, y = (round(float(v), 6) for v in rng.uniform(0, 3, size=2))
        assert profile_ratio(prof(x), prof(y), grid=2000) == pytest.approx(math.exp(abs(x - y)), rel=1e-9)
    p = BulkedSphereParams(2)
    pts = np.linspace(p.B, 2 * p.A, 500)[1:-1]
    pts = np.concatenate([pts, -pts])
    for x in (0.5, 1.0, 2.0):
        assert np.array_equal(prof(x).value(pts), prof(0.0).value(pts))
    assert abs(volume_and_diameter(bulked_sphere_profile(BulkedSphereParams(6))).area - 1) < 1e-3


def test_criterion_10_embedding_bounds():
    start = time.perf_counter()
    for N in (1, 2, 3):
        rep = embedding_7_3(N=N, trials=100_000, seed=N)
        assert rep.passed, rep.lines()
        assert all(c.detail.get("violations", 0) == 0 for c in rep.checks)
    assert time.perf_counter() - start < 10.0
    q = embed_Q(np.random.default_rng(10).normal(size=(1000, 3)) * 5)
    assert np.all(q >= 0) and np.all(np.diff(q, axis=1) >= 0)


def test_criterion_11_stability_chain():
    xs = (0.0, 0.5, 1.0, 2.0)
    profiles = {x: bulked_sphere_profile(BulkedSphereParams(2, x)) for x in xs}
    threshold = BulkedSphereParams(2).threshold
    for x, y in itertools.combinations(xs, 2):
        rep = stability_chain_check(profiles[x], profiles[y], "pt", 1, threshold, grid=4000)
        gap = abs(x - y)
        assert 0.5 * gap - 0.05 <= rep.lower <= gap + 1e-12
        assert rep.upper == pytest.approx(gap, abs=1e-9)
        assert 0.5 * rbm_upper_bound(profiles[x], profiles[y], grid=4000) == pytest.approx(gap, abs=1e-9)
        assert rep.lower == pytest.approx(stability_lower(x, y), abs=1e-9)


def test_criterion_12_existence_windows():
    rep = exist_geodesic_1_6(k=1.0, m=2.0, eps=0.01, scale=1.1, m2=2.2, copies=(1, 3))
    assert rep.passed, rep.lines()
    windows = [c for c in rep.checks if c.name.endswith("windows")]
    assert len(windows) == 4
    assert all(c.detail["misses"] == [] and c.detail["windows"] > 0 for c in windows)
