import random
from fractions import Fraction as F

import pytest
from hypothesis import given, settings, strategies as st

from iwasawa_cf.cf import (
    CFAlgorithm, NotInDomain, convergent_error, convergent_word, denominator, expand, gauss_step, normalize,
    tail_equal,
)
from iwasawa_cf.lattice import get_preset
from iwasawa_cf.space import cygan_distance

NI = CFAlgorithm(get_preset("nearest_integer_plus"))
HU = CFAlgorithm(get_preset("hurwitz"))


def pt(alg, *coords):
    return alg.preset.make_point([F(c) for c in coords])


def test_gauss_step_values():
    assert gauss_step(NI, NI.preset.origin()) == (None, NI.preset.origin())
    d, y = gauss_step(NI, pt(NI, F(5, 12)))
    assert d.translation == pt(NI, 2) and y == pt(NI, F(2, 5))
    d, y = gauss_step(HU, pt(HU, F(2, 5), F(1, 5)))
    assert d.translation == pt(HU, 2, -1) and y.is_origin()


def test_gauss_step_rejects_points_outside():
    with pytest.raises(NotInDomain):
        gauss_step(NI, pt(NI, 3))


def test_expansion_values():
    exp = expand(NI, pt(NI, F(5, 12)))
    assert [NI.preset.z_flat(d.translation)[0] for d in exp.digits] == [2, 3, -2]
    assert exp.terminated and not exp.truncated
    assert convergent_word(NI, exp.digits, 3)(NI.preset.origin()) == pt(NI, F(5, 12))
    exp = expand(HU, pt(HU, F(2, 5), F(1, 5)))
    assert [d.translation for d in exp.digits] == [pt(HU, 2, -1)]
    exp = expand(NI, NI.preset.origin())
    assert exp.digits == [] and exp.terminated


def test_normalize_splits_off_a0():
    a0, x = normalize(NI, pt(NI, F(17, 5)))
    assert a0.translation == pt(NI, 3) and x == pt(NI, F(2, 5))


def test_truncation_flag():
    exp = expand(NI, pt(NI, F(5, 12)), max_digits=1)
    assert len(exp.digits) == 1 and exp.truncated and not exp.terminated


def test_identity_convergent():
    M = convergent_word(NI, [], 0)
    x = pt(NI, F(1, 7))
    assert M(x) == x


@pytest.mark.parametrize("name", ["nearest_integer_minus", "hurwitz", "folded_hurwitz", "heisenberg",
                                  "hurwitz_quaternionic", "rosen(5)", "octonionic", "real3d(3)"])
def test_reconstruction_of_iterates(name):
    alg = CFAlgorithm(get_preset(name))
    rng = random.Random(2)
    for _ in range(6):
        x = alg.preset.sample(rng, "exact", 60)
        exp = expand(alg, x, 30)
        for i in range(len(exp.digits) + 1):
            M = convergent_word(alg, exp.digits, i)
            assert M(exp.iterates[i]) == x
            assert M.inverse_apply(x) == exp.iterates[i]


@pytest.mark.parametrize("name", ["hurwitz", "heisenberg", "hurwitz_quaternionic", "folded_heisenberg"])
def test_matrix_route_matches_words(name):
    alg = CFAlgorithm(get_preset(name))
    rng = random.Random(4)
    x = alg.preset.sample(rng, "exact", 40)
    exp = expand(alg, x, 8)
    M = convergent_word(alg, exp.digits)
    for _ in range(5):
        y = alg.preset.sample(rng, "exact", 20)
        assert M.matrix_apply(y) == M(y)


def test_finite_expansion_has_zero_error():
    x = pt(HU, F(3, 11), F(-2, 13))
    exp = expand(HU, x)
    assert exp.terminated
    assert convergent_error(HU, x, len(exp.digits), exp) == 0


def test_hurwitz_denominators_are_gaussian_integers():
    rng = random.Random(8)
    for _ in range(20):
        x = HU.preset.sample(rng, "exact", 50)
        exp = expand(HU, x, 10)
        for m in range(len(exp.digits) + 1):
            q = denominator(HU, exp.digits, m)
            assert all(F(c).denominator == 1 for c in q.coords)
            assert q.norm_sq() >= 1


def test_float_errors_decay():
    alg = CFAlgorithm(get_preset("hurwitz"), "float")
    rng = random.Random(1)
    ratios = []
    for _ in range(30):
        x = alg.preset.sample(rng)
        exp = expand(alg, x, 12)
        errs = [cygan_distance(convergent_word(alg, exp.digits, i)(alg.preset.origin("float")), x)
                for i in range(1, len(exp.digits) + 1)]
        ratios += [b / a for a, b in zip(errs, errs[1:]) if a > 1e-13]
    ratios.sort()
    assert ratios[len(ratios) // 2] < 1


def test_tail_equal_examples():
    seq = [1, 2, 3, 4, 5, 6, 7, 8, 9, 10]
    assert tail_equal(seq, seq, 5) == (0, 0)
    assert tail_equal(seq, seq[3:], 5) == (3, 0)
    assert tail_equal([1, 2, 3], [4, 5, 6], 2) is None


@settings(max_examples=60, deadline=None)
@given(st.fractions(min_value=F(-1, 2), max_value=F(1, 2), max_denominator=10 ** 6).filter(lambda v: v < F(1, 2)))
def test_rationals_terminate_and_reconstruct(v):
    x = pt(NI, v)
    exp = expand(NI, x, 200)
    assert exp.terminated
    assert convergent_word(NI, exp.digits)(NI.preset.origin()) == x
