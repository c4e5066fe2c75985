"""End-to-end acceptance checks, one marker per criterion.

The terminal summary prints one PASS/FAIL line per criterion.  These are
the slow tests; select them with ``pytest tests/test_acceptance.py``.
"""
import math
import random
import time
import zlib
from fractions import Fraction as F

import pytest

from iwasawa_cf.algebra import C, Scalar
from iwasawa_cf.cli import render_svg
from iwasawa_cf.experiments import (
    GAUSS_KUZMIN_ONE, ExperimentConfig, convergence_stats, cylinder_cells, denominator_gap, digit_frequency,
    horoball_disjointness_probe, inversion_height_check, skew_product_check, tail_experiment,
)
from iwasawa_cf.geodesic import calibrate_constants, compute_marking, random_markable_geodesic, \
    verify_marking_properties
from iwasawa_cf.lattice import Digit, all_presets, get_preset, properness_check
from iwasawa_cf.modular import (
    IOTA, GroupWord, Rep2, canonical_form, find_central_symmetries, mod_q_symmetry_search, representation,
)
from iwasawa_cf.space import (
    HalfSpacePoint, IwasawaPoint, cygan_distance, cygan_distance4, gauge, gauge4, invert_point,
)

PRESETS = all_presets()
PROPER = [p for p in PRESETS if properness_check(p)[0]]


def _spaces():
    seen = {}
    for p in PRESETS:
        key = (p.params.kind.tag, p.params.n, p.inversion.tag)
        seen.setdefault(key, (p.params, p.inversion))
    return seen


SPACES = _spaces()


def _random_point(params, rng, w=None):
    d = params.kind.dim

    def q():
        return F(rng.randint(-36, 36), rng.randint(1, 12))

    z = [Scalar(params.kind, [q() for _ in range(d)]) for _ in range(params.n)]
    t = Scalar(params.kind, [F(0)] + [q() for _ in range(d - 1)]) if d > 1 else Scalar.zero(params.kind)
    if w is None:
        return IwasawaPoint(z, t)
    return HalfSpacePoint(z, t + Scalar.one(params.kind).scale(w))


def _nonzero(params, rng, w=None):
    while True:
        p = _random_point(params, rng, w)
        if w is not None or not p.is_origin():
            return p


def _rel(a, b):
    return abs(a - b) / max(abs(b), 1e-300)


# 1 -------------------------------------------------------------------------

@pytest.mark.criterion(1, "inversion identities, exact and float, boundary and mixed")
@pytest.mark.parametrize("key", sorted(SPACES), ids=lambda k: f"{k[0]}{k[1]}-{k[2]}")
def test_inversion_identities(key, record_property):
    params, inv = SPACES[key]
    rng = random.Random(zlib.crc32(repr(key).encode()))
    t0 = time.perf_counter()
    pairs = 10_000
    worst = 0.0
    for i in range(pairs):
        h, k = _nonzero(params, rng), _nonzero(params, rng)
        ih, ik = invert_point(inv, h), invert_point(inv, k)
        assert gauge4(ih) * gauge4(h) == 1
        assert cygan_distance4(ih, ik) * gauge4(h) * gauge4(k) == cygan_distance4(h, k)
        hf, kf = h.to_float(), k.to_float()
        ihf, ikf = invert_point(inv, hf), invert_point(inv, kf)
        worst = max(worst, _rel(gauge(ihf), 1 / gauge(hf)),
                    _rel(cygan_distance(ihf, ikf), cygan_distance(hf, kf) / (gauge(hf) * gauge(kf))))
    # one endpoint in the upper half-space, the other on the boundary
    for i in range(pairs):
        h = _nonzero(params, rng, w=F(rng.randint(1, 40), rng.randint(1, 12)))
        k = _nonzero(params, rng)
        ih, ik = invert_point(inv, h), invert_point(inv, k)
        assert gauge4(ih) * gauge4(h) == 1
        assert cygan_distance4(ih, ik) * gauge4(h) * gauge4(k) == cygan_distance4(h, k)
    elapsed = time.perf_counter() - t0
    record_property("detail", f"{key[0]}{key[1]}-{key[2]} float rel {worst:.1e} in {elapsed:.0f}s")
    assert worst < 1e-9
    assert elapsed < 60


# 2 -------------------------------------------------------------------------

@pytest.mark.criterion(2, "golden word identities")
def test_golden_words():
    ni = get_preset("nearest_integer_plus")
    a = lambda p, *c: Digit(p.make_point([F(v) for v in c]))
    w = GroupWord((IOTA, a(ni, 1), IOTA, a(ni, -1), IOTA, a(ni, 1)))
    assert canonical_form(w, ni).matrix == ((1, 0), (0, 0), (0, 0), (-1, 0))
    hu = get_preset("hurwitz")
    rep = Rep2.standard(-1, 4)
    M = canonical_form(GroupWord((IOTA, a(hu, 0, 1), IOTA, a(hu, 0, -1), IOTA, a(hu, 0, 1))), rep=rep).matrix
    assert rep.is_diagonal(M) and rep.rotation_multiplier(M) == (-1, 0)
    he = get_preset("heisenberg")
    w = GroupWord((IOTA, Digit(IwasawaPoint.make(C, [0], (0, 1)))) * 3)
    rn = representation(he)
    M = canonical_form(w, rep=rn).as_matrix(rn)
    # diag(-i, 1, -i) times the scalar i
    assert M.is_diagonal() and [M.rows[k][k].coords for k in range(3)] == [(1, 0), (0, 1), (1, 0)]


# 3 -------------------------------------------------------------------------

CENSUS = [("nearest_integer_plus", 12, 3, 1), ("hurwitz", 12, 3, 1), ("heisenberg", 8, 1, 3),
          ("backwards", 12, 3, 0), ("folded_hurwitz", 12, 2, 0), ("rosen(3)", 12, 3, 0), ("rosen(4)", 12, 3, 0),
          ("rosen(5)", 12, 3, 0), ("j_hurwitz", 12, 3, 0)]


@pytest.fixture(scope="module")
def census_clock():
    return {"total": 0.0}


@pytest.mark.criterion(3, "central symmetry census and mod-4 exclusion")
@pytest.mark.parametrize("name,length,bound,expected", CENSUS, ids=[c[0] for c in CENSUS])
def test_symmetry_census(name, length, bound, expected, census_clock, record_property):
    t0 = time.perf_counter()
    rep = find_central_symmetries(get_preset(name), length, bound)
    census_clock["total"] += time.perf_counter() - t0
    rots = [s for s in rep.rotations if not s.dilation]
    assert len(rots) == expected, rep.summary()
    if name in ("nearest_integer_plus", "hurwitz"):
        assert rots[0].multiplier == (-1, 0)
    if not expected:
        assert f"none found up to length {length}" in rep.summary()
    if name == "j_hurwitz":
        assert mod_q_symmetry_search(get_preset("j_hurwitz"), 4)["verdict"] == "excluded"
        record_property("detail", f"census {census_clock['total']:.0f}s")
    assert census_clock["total"] < 600


# 4 -------------------------------------------------------------------------

@pytest.mark.criterion(4, "properness census and radii")
def test_properness_census(record_property):
    wrong = [p.name for p in PRESETS if properness_check(p)[0] != p.table_proper]
    assert wrong == []
    by = {p.name: p for p in PRESETS}
    assert abs(float(by["heisenberg"].radius()) - 2 ** -0.25) < 1e-12
    assert by["heisenberg_quaternionic"].radius4() == 1
    for n in (1, 2, 3, 4):
        assert by[f"real3d({n})"].radius4() == F(n, 4) ** 2
    record_property("detail", f"{len(PRESETS)} presets, {len(PROPER)} proper")


# 5 -------------------------------------------------------------------------

@pytest.mark.criterion(5, "convergence on every proper preset")
@pytest.mark.parametrize("name", [p.name for p in PROPER])
def test_convergence(name, record_property):
    t0 = time.perf_counter()
    rep = convergence_stats(ExperimentConfig(name, 1000, 40, 0, 1e-8), exact_samples=1000)
    elapsed = time.perf_counter() - t0
    s = rep.summary
    assert s["exact_terminated"] == s["exact_recovered"] == 1000
    assert s["fraction_below_tol"] >= 0.99
    assert s["median_step_ratio"] < 0.9
    if elapsed > 120:
        record_property("detail", f"{name} {elapsed:.0f}s")
    assert elapsed < 300


# 6 -------------------------------------------------------------------------

@pytest.mark.criterion(6, "denominator gap")
def test_hurwitz_denominator_gap(record_property):
    s = denominator_gap(ExperimentConfig("hurwitz", 1000, 40, seed=0)).summary
    assert s["min_norm"] == 1 and s["zero_denominators"] == 0
    record_property("detail", f"hurwitz min over m>=1 is {s['min_norm_positive_index']}")


@pytest.mark.criterion(6, "denominator gap")
def test_all_presets_have_positive_denominator_bound():
    low = {}
    for p in PRESETS:
        s = denominator_gap(ExperimentConfig(p.name, 100, 20, seed=0)).summary
        low[p.name] = s["min_norm_positive_index"]
    assert all(v is not None and v > 0 for v in low.values()), low


# 7 -------------------------------------------------------------------------

@pytest.mark.criterion(7, "digit frequencies")
def test_regular_digit_one(record_property):
    t0 = time.perf_counter()
    s = digit_frequency(ExperimentConfig("regular", 100_000, 100, seed=0)).summary
    assert s["total"] == 10 ** 7
    assert abs(s["frequency_1"] - 0.41504) < 0.005
    assert abs(GAUSS_KUZMIN_ONE - math.log2(4 / 3)) < 1e-15
    record_property("detail", f"f1 = {s['frequency_1']:.5f}")
    assert time.perf_counter() - t0 < 600


@pytest.mark.criterion(7, "digit frequencies")
def test_hurwitz_conjugation_symmetry(record_property):
    s = digit_frequency(ExperimentConfig("hurwitz", 5000, 40, seed=0)).summary
    record_property("detail", f"hurwitz conj max z {s['conj_max_z']:.2f}")
    assert s["conj_max_z"] < 3


# 8 -------------------------------------------------------------------------

@pytest.mark.criterion(8, "tail equivalence")
@pytest.mark.parametrize("name", ["folded_hurwitz", "folded_nearest_integer"])
def test_tail_equivalence(name):
    rep = tail_experiment(ExperimentConfig(name, 200, 80, seed=0, backend="exact"), window=50, max_word=6)
    assert rep.summary["success_rate"] == 1.0, rep.records[:3]


# 9 -------------------------------------------------------------------------

@pytest.mark.criterion(9, "skew product")
def test_skew_product(record_property):
    s = skew_product_check("hurwitz", 10_000, 0).summary
    assert s["mismatches"] == 0 and s["identity_mismatches"] == 0 and s["non_bijective"] == 0
    record_property("detail", f"{s['checked']} checked, {s['exceptional_skipped']} skipped")


# 10 ------------------------------------------------------------------------

@pytest.mark.criterion(10, "geodesic marking")
@pytest.mark.parametrize("name", ["nearest_integer_minus", "rosen(5)"])
def test_marking(name, record_property):
    t0 = time.perf_counter()
    preset = get_preset(name)
    consts = calibrate_constants(preset)
    rng = random.Random(0)
    gaps, residual, bad = [], 0.0, {}
    for _ in range(100):
        g, plus = random_markable_geodesic(preset, consts, rng)
        mk = compute_marking(preset, g, plus, consts, max_blocks=10)
        r = verify_marking_properties(mk, preset)
        gaps.append(r["min_gap"])
        residual = max(residual, r["equivariance_residual"])
        for key in ("wall_violations", "h1_violations", "cusp_violations", "intersection_violations",
                    "spotter_order_violations"):
            bad[key] = bad.get(key, 0) + r[key]
    elapsed = time.perf_counter() - t0
    record_property("detail", f"{name} min gap {min(gaps):.3f}, h0 {consts.h0:.1f}, {elapsed:.0f}s")
    assert min(gaps) > 0
    assert sum(bad.values()) == 0, bad
    assert residual < 1e-6
    assert elapsed < 600


# 11 ------------------------------------------------------------------------

FIGURES = ["hurwitz", "hurwitz_alpha(3/10)", "folded_hurwitz", "hurwitz_tetris"]


@pytest.mark.criterion(11, "cylinder figures")
@pytest.mark.parametrize("name", FIGURES)
def test_cylinder_figure(name, record_property):
    grid = cylinder_cells(name, 1024)
    assert grid.unlabeled_fraction < 0.01
    svg = render_svg(grid, title=name)
    assert svg == render_svg(cylinder_cells(name, 1024), title=name)
    record_property("detail", f"{name} unlabeled {grid.unlabeled_fraction:.4f}")


# 12 ------------------------------------------------------------------------

@pytest.mark.criterion(12, "horoball probe")
@pytest.mark.parametrize("name", ["nearest_integer_plus", "hurwitz", "heisenberg", "hurwitz_quaternionic"])
def test_inverted_horoball_height(name):
    for r in inversion_height_check(get_preset(name)):
        assert r["exact"] and r["sampled_max"] <= r["top"]


@pytest.mark.criterion(12, "horoball probe")
def test_hurwitz_horoball_constant(record_property):
    s = horoball_disjointness_probe(get_preset("hurwitz"), max_len=8, digit_bound=2).summary
    assert s["max_C"] == 1
    assert s["overlaps"] == 0
    record_property("detail", f"family {s['family']}, {s['checked']} pairs at C0 = {s['C0']}")
