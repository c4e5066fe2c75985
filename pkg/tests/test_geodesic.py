import math
import random
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from iwasawa_cf.algebra import sqrt_exact
from iwasawa_cf.cf import CFAlgorithm, expand
from iwasawa_cf.geodesic import (
    Horoball, RealMobius, Unmarkable, Wall, calibrate_constants, compute_marking, crossing_analytic,
    geodesic_from_endpoints, hyperbolic_distance, random_markable_geodesic, sphere_intersections,
    verify_marking_properties,
)
from iwasawa_cf.lattice import get_preset

NIM = get_preset("nearest_integer_minus")


@pytest.fixture(scope="module")
def constants():
    return calibrate_constants(NIM, ensemble=1000, c_max=1.0, h3_samples=200)


def test_semicircle_and_unit_speed():
    g = geodesic_from_endpoints(-1.0, 1.0)
    x, y = g.point_at(0.0)
    assert abs(x[0]) < 1e-15 and abs(y - 1) < 1e-15
    assert abs(hyperbolic_distance(g.point_at(0.0), g.point_at(1.0)) - 1) < 1e-10


@settings(max_examples=60, deadline=None)
@given(a=st.floats(-5, 5), b=st.floats(-5, 5), t=st.floats(-6, 6), s=st.floats(-6, 6))
def test_unit_speed_property(a, b, t, s):
    if abs(a - b) < 1e-3:
        return
    g = geodesic_from_endpoints(a, b)
    assert hyperbolic_distance(g.point_at(t), g.point_at(s)) == pytest.approx(abs(t - s), abs=1e-7)


def test_vertical_geodesic_meets_sphere_once():
    g = geodesic_from_endpoints(math.inf, 0.0)
    ts = sphere_intersections(g)
    assert len(ts) == 1 and abs(ts[0]) < 1e-9
    h = g.half_space_point(ts[0])
    assert abs(h.w.coords[0] - 1) < 1e-9


def test_small_arc_misses_sphere():
    assert sphere_intersections(geodesic_from_endpoints(-0.1, 0.1)) == []


@pytest.mark.parametrize("ends", [(-3.0, 2.5), (-1.5, 4.0), (2.0, -2.2)])
def test_crossing_count_parity_and_grid_stability(ends):
    g = geodesic_from_endpoints(*ends)
    coarse = sphere_intersections(g, step=1e-3)
    fine = sphere_intersections(g, step=5e-4)
    assert len(coarse) == len(fine) and len(coarse) % 2 == 0
    assert np.allclose(coarse, fine, atol=1e-9)


def test_analytic_crossing_matches_root_finder():
    g = geodesic_from_endpoints(-3.0, 0.4)
    assert sphere_intersections(g)[-1] == pytest.approx(crossing_analytic(g), abs=1e-9)


def test_mobius_basics():
    M = RealMobius(2.0, 1.0, 1.0, 1.0)
    z = 0.3 + 0.7j
    assert M.inverse()(M(z)) == pytest.approx(z)
    assert RealMobius(0.0, -1.0, 1.0, 0.0)(1j) == pytest.approx(1j)


def test_horoball_top_and_containment():
    b = Horoball(2.0, RealMobius(0.0, -1.0, 1.0, 0.0))
    assert b.top() == pytest.approx(0.5)
    assert list(b.contains(np.array([0.7j, 0.71j]))) == [True, False]
    with pytest.raises(ValueError):
        Horoball(0.0)
    with pytest.raises(ValueError):
        Wall(1.5)


def test_calibrated_constants(constants):
    assert constants.epsilon == pytest.approx(0.5)
    assert 0 < constants.h2 < 1 and 0 < constants.h1 <= constants.h2
    assert constants.h0 > 1


def test_improper_preset_refused():
    with pytest.raises(ValueError):
        calibrate_constants(get_preset("backwards"), ensemble=10)


def test_constant_digit_gives_one_block_per_digit(constants):
    x = (-5 + sqrt_exact(21)) / 2
    g, plus = random_markable_geodesic(NIM, constants, random.Random(3), plus=x)
    mk = compute_marking(NIM, g, plus, constants, max_blocks=8, max_digits=30)
    assert mk.indices[:6] == [0, 1, 2, 3, 4, 5]


def test_rational_endpoint_is_unmarkable(constants):
    g, plus = random_markable_geodesic(NIM, constants, random.Random(3), plus=Fraction(5, 12))
    with pytest.raises(Unmarkable):
        compute_marking(NIM, g, plus, constants)


def test_marking_properties(constants):
    rng = random.Random(7)
    for _ in range(5):
        g, plus = random_markable_geodesic(NIM, constants, rng)
        mk = compute_marking(NIM, g, plus, constants, max_blocks=6)
        assert mk.indices[0] == 0 and mk.times[0] == 0
        assert all(b > a for a, b in zip(mk.indices, mk.indices[1:]))
        assert min(mk.gaps) > 0
        # digits recorded in the marking are the CF digits of the endpoint
        exp = expand(CFAlgorithm(NIM), NIM.make_point([plus]), len(mk.digits))
        assert [d.translation for d in exp.digits] == [d.translation for d in mk.digits[:len(exp.digits)]]
        rep = verify_marking_properties(mk, NIM)
        for key in ("wall_violations", "h1_violations", "cusp_violations", "intersection_violations",
                    "spotter_order_violations"):
            assert rep[key] == 0, (key, rep)
        assert rep["equivariance_residual"] < 1e-6


def test_shifted_marking_drops_one_block(constants):
    g, plus = random_markable_geodesic(NIM, constants, random.Random(11))
    mk = compute_marking(NIM, g, plus, constants, max_blocks=6)
    nxt = mk.frames[1]
    shifted_plus = _iterate(plus, mk.indices[1])
    mk2 = compute_marking(NIM, nxt, shifted_plus, constants, max_blocks=5, check_start=False)
    t1 = mk.times[1]
    for a, b in zip(mk2.times[1:4], mk.times[2:5]):
        assert a == pytest.approx(b - t1, abs=1e-6)


def _iterate(plus, i):
    exp = expand(CFAlgorithm(NIM), NIM.make_point([plus]), i)
    return exp.iterates[i].real_coords()[0]
