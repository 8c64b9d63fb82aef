import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from oracles import stability_lower, torus_energies
from revbar.constructions import BulkedSphereParams, bulked_sphere_profile, torus_profile
from revbar.loop_barcode import (
    AmbiguousBarcodeError,
    DegenerateGeodesicError,
    Generator,
    GeneratorTable,
    InfeasibleGeneratorsError,
    build_generators,
    class_barcode,
    class_table,
    infer_barcode,
    neck_table,
    provenance,
    reparametrize,
    stability_chain_check,
)
from revbar.persistence_core import Bar, Barcode
from revbar.revolution_geodesics import ClosedGeodesic


@pytest.fixture(scope="module")
def torus_tables():
    return {n: class_table(torus_profile(1, 2, 0.01, n), "alpha") for n in (1, 3)}


def _table(gens, ranks, threshold=None):
    return GeneratorTable(tuple(Generator(d, f, f"g{i}") for i, (d, f) in enumerate(gens)), "alpha", ranks, threshold)


@pytest.mark.parametrize("n", [1, 3])
def test_torus_table_sources(torus_tables, n):
    tab = torus_tables[n]
    assert len(tab.entries) == 4 * n
    prov = provenance(tab)
    e_min, e_max = sorted(prov)
    assert len(prov[e_min]) == n and all(s.startswith("circle[min]") for s in prov[e_min])
    assert len(prov[e_max]) == n and all(s.startswith("circle[max]") for s in prov[e_max])
    assert e_max == pytest.approx(torus_energies(1, 2)[1], rel=1e-12)
    assert e_min == pytest.approx(torus_energies(1, 2)[0], rel=1e-2)


@pytest.mark.parametrize("n", [1, 3])
def test_torus_barcode_has_equal_finite_bars(torus_tables, n):
    code = infer_barcode(torus_tables[n])
    e_min, e_max = sorted(provenance(torus_tables[n]))
    finite = [b for b in code if b.death is not None]
    assert set(finite) <= {Bar(e_min, e_max, 0), Bar(e_min, e_max, 1)}
    assert len(finite) == 2 * (n - 1)
    infinite = sorted((b.degree, b.birth) for b in code if b.death is None)
    assert infinite == [(0, e_min), (1, e_min), (1, e_max), (2, e_max)]


def test_class_barcode_selects_degree():
    code = class_barcode(torus_profile(1, 2, 0.01), "alpha", degree=1)
    assert {b.degree for b in code} == {1} and len(code) == 2


def test_infeasible_ranks():
    with pytest.raises(InfeasibleGeneratorsError):
        infer_barcode(_table([(0, 1.0), (1, 2.0)], {0: 2}))
    with pytest.raises(InfeasibleGeneratorsError):
        infer_barcode(_table([(1, 1.0)], {0: 1}))


def test_ambiguous_pairing_is_reported():
    # [1,3) + [2,inf) and [2,3) + [1,inf) both fit
    with pytest.raises(AmbiguousBarcodeError) as info:
        infer_barcode(_table([(0, 1.0), (0, 2.0), (1, 3.0)], {0: 1}))
    err = info.value
    assert len(err.solutions) == 2
    assert {g.filtration for g in err.unresolved} == {1.0, 2.0, 3.0}


def test_unique_pairing_and_truncation():
    assert infer_barcode(_table([(0, 1.0), (1, 2.0), (0, 3.0)], {0: 1})) == Barcode([Bar(1, 2), Bar(3, None)])
    truncated = infer_barcode(_table([(0, 1.0), (0, 2.0)], {}, threshold=5.0))
    assert truncated == Barcode([Bar(1, 5), Bar(2, 5)], threshold=5.0)


def test_degenerate_geodesic_rejected():
    g = ClosedGeodesic("parallel_circle", 2.0, 2.0, (1, 0), 1, 2, 1.0, "flat")
    with pytest.raises(DegenerateGeodesicError):
        build_generators([g], "alpha", {0: 1})
    # above the threshold it is ignored
    assert build_generators([g], "alpha", {}, threshold=1.0).entries == ()


def test_point_class_adds_constant_loops():
    tab = build_generators([], "pt", {0: 1, 2: 1})
    assert [(g.degree, g.filtration) for g in tab.entries] == [(0, 0.0), (2, 0.0)]


@pytest.mark.parametrize(
    "mode, birth",
    [("energy->length", 2.0), ("energy->log", math.log(2.0)), ("energy → length", 2.0)],
)
def test_reparametrize_examples(mode, birth):
    out = reparametrize(Barcode([Bar(2.0, 8.0), Bar(2.0, None, 1)], threshold=8.0), mode)
    assert out.bars[0].birth == pytest.approx(birth, rel=1e-15)
    assert out.bars[-1].death is None


@given(
    st.lists(
        st.tuples(st.floats(0.01, 50), st.floats(0.01, 50), st.integers(0, 2)).filter(lambda t: t[0] != t[1]),
        max_size=6,
    )
)
def test_reparametrize_roundtrip(triples):
    code = Barcode([Bar(min(a, b), max(a, b), d) for a, b, d in triples])
    back = reparametrize(reparametrize(code, "energy->log"), "log->energy")
    assert len(back) == len(code)
    for p, q in zip(back, code):
        assert p.birth == pytest.approx(q.birth, rel=1e-12)
        assert p.death == pytest.approx(q.death, rel=1e-12)


def test_reparametrize_errors():
    with pytest.raises(ValueError):
        reparametrize(Barcode([Bar(0.0, 1.0)]), "energy->log")
    with pytest.raises(ValueError):
        reparametrize(Barcode(), "energy")
    with pytest.raises(ValueError):
        reparametrize(Barcode(), "energy->area")


def test_neck_table_point_class():
    p = BulkedSphereParams(2, 0.5)
    tab = neck_table(bulked_sphere_profile(p), p.threshold, "pt")
    sources = provenance(tab)
    assert sources[0.0] == ["constant-loops:max", "constant-loops:min"]
    (neck,) = [e for e in sources if e > 0]
    assert neck == pytest.approx(p.neck_energy, rel=1e-12)
    assert len(sources[neck]) == 2
    code = infer_barcode(tab).in_degree(1)
    assert code.bars == (Bar(neck, p.threshold, 1),) * 2


def test_neck_table_needs_threshold_and_class():
    r = bulked_sphere_profile(BulkedSphereParams(1))
    with pytest.raises(ValueError):
        class_table(r, "pt")
    with pytest.raises(ValueError):
        neck_table(r, 1.0, "beta")


@pytest.mark.parametrize("x, y", [(0.0, 0.5), (0.0, 2.0), (0.5, 1.0), (0.5, 2.0), (1.0, 2.0)])
def test_stability_chain_matches_oracle(x, y):
    p = BulkedSphereParams(2)
    rx = bulked_sphere_profile(BulkedSphereParams(2, x))
    ry = bulked_sphere_profile(BulkedSphereParams(2, y))
    rep = stability_chain_check(rx, ry, "pt", 1, p.threshold, grid=4000)
    assert rep.lower == pytest.approx(stability_lower(x, y), abs=1e-9)
    assert rep.upper == pytest.approx(abs(x - y), abs=1e-9)
    assert rep.ok and 0.5 * abs(x - y) - 0.05 <= rep.lower
