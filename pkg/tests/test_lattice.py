import random
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from iwasawa_cf.algebra import mat_mul, sqrt_exact
from iwasawa_cf.lattice import (
    PRESET_NAMES, all_presets, contains, digit_to_matrix, floor_map, get_preset, parse_preset_id, properness_check,
)
from iwasawa_cf.space import MoebiusMap, mobius_apply

PRESETS = all_presets()
BY_NAME = {p.name: p for p in PRESETS}
F = Fraction


def test_floor_examples():
    ni = get_preset("nearest_integer_plus")
    assert floor_map(ni, ni.make_point([F(12, 5)])).translation == ni.make_point([2])
    assert floor_map(ni, ni.make_point([F(1, 5)])).is_identity()
    fh = get_preset("folded_hurwitz")
    d = floor_map(fh, fh.make_point([F(2, 5), F(3, 10)]))
    assert d.rotation is not None and not d.rotation.is_identity()
    assert d.translation.is_origin()


def test_half_open_conventions():
    ni = get_preset("nearest_integer_plus")
    assert contains(ni, ni.make_point([F(-1, 2)]))
    assert not contains(ni, ni.make_point([F(1, 2)]))
    hu = get_preset("hurwitz")
    assert not contains(hu, hu.make_point([F(1, 2), F(1, 2)]))
    assert contains(hu, hu.make_point([F(-1, 2), F(-1, 2)]))


@pytest.mark.parametrize("preset", PRESETS, ids=[p.name for p in PRESETS])
def test_origin_in_domain(preset):
    if preset.origin_in_K:
        assert preset.contains(preset.origin())


@pytest.mark.parametrize("preset", PRESETS, ids=[p.name for p in PRESETS])
def test_floor_tiles_space(preset):
    rng = random.Random(11)
    dim = len(preset.z_flat(preset.origin())) + len(preset.t_flat(preset.origin()))
    m = len(preset.z_flat(preset.origin()))
    for _ in range(60):
        v = [F(rng.randint(-400, 400), rng.randint(7, 97)) for _ in range(dim)]
        x = preset.make_point(v[:m], v[m:])
        d = floor_map(preset, x)
        assert preset.contains(d.apply_inverse(x))


@pytest.mark.parametrize("preset", PRESETS, ids=[p.name for p in PRESETS])
def test_floor_recovers_digit(preset):
    # floor(a(x)) = a for x in K and a a lattice digit, away from the overlap set
    rng = random.Random(5)
    digits = preset.lattice_digits(1 if preset.params.real_dim > 4 else 2)
    for _ in range(25):
        x = preset.sample(rng, "exact", 997)
        if preset.margin(x) < 1e-9:
            continue
        a = rng.choice(digits)
        y = a.apply(x)
        assert floor_map(preset, y) == a


def test_radius_values():
    assert BY_NAME["heisenberg"].radius4() == F(1, 2)
    assert abs(float(BY_NAME["heisenberg"].radius()) - 2 ** -0.25) < 1e-12
    assert BY_NAME["heisenberg_quaternionic"].radius4() == 1
    for n in (1, 2, 3, 4):
        assert BY_NAME[f"real3d({n})"].radius4() == F(n, 4) ** 2
    assert BY_NAME["hurwitz"].radius4() == F(1, 4)


@pytest.mark.parametrize("preset", PRESETS, ids=[p.name for p in PRESETS])
def test_properness_matches_catalog(preset):
    ok, margin = properness_check(preset)
    assert ok == preset.table_proper
    assert (margin > 0) == ok


def test_translation_matrix_value():
    p = get_preset("nearest_integer_plus")
    M = digit_to_matrix(p, p.translation_digit(p.make_point([1])))
    r2 = sqrt_exact(2)
    assert [[s.coords[0] for s in row] for row in M.rows] == [[1, 0, 0], [r2, 1, 0], [1, r2, 1]]


@pytest.mark.parametrize("name", ["hurwitz", "heisenberg", "folded_hurwitz", "hurwitz_quaternionic"])
def test_digit_matrices_compose(name):
    preset = BY_NAME[name]
    rng = random.Random(3)
    digits = preset.lattice_digits(2) + [d for d in preset.lattice_digits(1)]
    for _ in range(10):
        a, b = rng.choice(digits), rng.choice(digits)
        x = preset.sample(rng, "exact", 31)
        Ma, Mb = digit_to_matrix(preset, a), digit_to_matrix(preset, b)
        assert mobius_apply(MoebiusMap(mat_mul(Ma, Mb)), x) == a.apply(b.apply(x))
        assert mobius_apply(MoebiusMap(Ma), x) == a.apply(x)


def test_octonion_lattice_digits_have_real_matrices():
    # the E8 preset lives in real 8-space, so its digits are real 10x10 matrices
    o = BY_NAME["octonionic"]
    rng = random.Random(0)
    for _ in range(5):
        d = rng.choice(o.lattice_digits(1))
        x = o.sample(rng, "exact", 17)
        assert mobius_apply(MoebiusMap(digit_to_matrix(o, d)), x) == d.apply(x)


def test_preset_ids():
    assert parse_preset_id("rosen(5)") == ("rosen", ("5",))
    assert get_preset("rosen(5)").name == get_preset("rosen", 5).name
    with pytest.raises((KeyError, ValueError)):
        get_preset("no_such_preset")
    assert "hurwitz" in PRESET_NAMES


@settings(max_examples=50, deadline=None)
@given(st.fractions(min_value=-50, max_value=50, max_denominator=1000))
def test_nearest_integer_floor_is_rounding(x):
    ni = BY_NAME["nearest_integer_plus"]
    d = floor_map(ni, ni.make_point([x]))
    r = ni.z_flat(d.translation)[0]
    assert F(-1, 2) <= x - r < F(1, 2)
