import math
import random

import numpy as np
import pytest

from iwasawa_cf.cf import CFAlgorithm, gauss_step
from iwasawa_cf.experiments import (
    GAUSS_KUZMIN_ONE, ExperimentConfig, convergence_stats, cylinder_cells, denominator_gap, digit_frequency,
    horoball_disjointness_probe, inversion_height_check, regular_gauss_digits, sample_rng, skew_product_check,
    tail_experiment,
)
from iwasawa_cf.lattice import get_preset


def test_gauss_kuzmin_oracle():
    assert GAUSS_KUZMIN_ONE == pytest.approx(math.log2(4 / 3), abs=1e-15)
    # integrate the Gauss density over [1/2, 1) independently
    xs = np.linspace(0.5, 1.0, 200001)
    mass = np.trapezoid(1 / ((1 + xs) * math.log(2)), xs)
    assert mass == pytest.approx(0.41503749927884, abs=1e-9)


def test_regular_frequency_small():
    rep = digit_frequency(ExperimentConfig("regular", 2000, 100, seed=1))
    assert abs(rep.summary["frequency_1"] - GAUSS_KUZMIN_ONE) < 0.01
    assert "external calibration" in rep.summary["target_label"]


def test_regular_digits_are_positive_integers():
    counts, total, drops = regular_gauss_digits(1000, seed=0, orbits=100)
    assert counts[0] == 0 and counts.sum() == total >= 1000 and drops == 0


def test_reports_are_reproducible():
    cfg = ExperimentConfig("hurwitz", 40, 30, seed=5)
    assert digit_frequency(cfg).to_json() == digit_frequency(cfg).to_json()
    assert cfg.digest() == ExperimentConfig("hurwitz", 40, 30, seed=5).digest()
    assert sample_rng(3, 4).random() == sample_rng(3, 4).random()


def test_tallies_sum_to_samples():
    rep = digit_frequency(ExperimentConfig("hurwitz", 50, 40, seed=2))
    assert sum(rep.tallies.values()) == rep.summary["total"]
    assert rep.flags["drop_rate"] < 1e-3


def test_folded_digits_use_known_rotations():
    rep = digit_frequency(ExperimentConfig("folded_hurwitz", 50, 40, seed=2))
    assert rep.summary["rotations_in_set"]


def test_convergence_small():
    rep = convergence_stats(ExperimentConfig("hurwitz", 60, 40, seed=0), exact_samples=20)
    s = rep.summary
    assert s["fraction_below_tol"] >= 0.99 and s["median_step_ratio"] < 0.9
    assert s["exact_recovered"] == s["exact_terminated"] == 20


def test_denominator_gap_small():
    rep = denominator_gap(ExperimentConfig("hurwitz", 40, 20, seed=0))
    assert rep.summary["min_norm"] == 1
    assert rep.summary["min_norm_positive_index"] == 2
    assert rep.summary["zero_denominators"] == 0


def test_octonion_denominators_are_bounded_below():
    rep = denominator_gap(ExperimentConfig("octonionic", 10, 10, seed=0))
    assert rep.summary["min_norm_positive_index"] >= 1


def test_cylinder_labels_hurwitz():
    grid = cylinder_cells("hurwitz", 128)
    assert grid.unlabeled_fraction < 0.01
    assert grid.label_at(0.4, 0.2) == "2-1i"
    # labels agree with the Gauss step at pixel centres
    alg = CFAlgorithm(get_preset("hurwitz"), "float")
    rng = random.Random(0)
    for _ in range(200):
        r, c = rng.randrange(128), rng.randrange(128)
        lab = grid.labels[r, c]
        if lab < 0:
            continue
        x, y = grid.pixel_center(r, c)
        d, _ = gauss_step(alg, alg.preset.make_point([x, y]))
        k = grid.keys[lab]
        assert tuple(int(round(v)) for v in d.translation.real_coords()) == (k[1], k[2])


def test_cells_shrink_toward_zero():
    grid = cylinder_cells("hurwitz", 256)
    rad = math.sqrt(0.5)
    rows, cols = np.nonzero(grid.labels >= 0)
    for r, c in zip(rows[::7], cols[::7]):
        _, k1, k2 = grid.keys[grid.labels[r, c]]
        a = math.hypot(k1, k2)
        if a < 3:
            continue
        x, y = grid.pixel_center(r, c)
        assert math.hypot(x, y) <= 1 / (a - rad) + 1e-12


def test_cylinder_needs_planar_slice():
    with pytest.raises(ValueError):
        cylinder_cells("heisenberg", 16)
    with pytest.raises(ValueError):
        cylinder_cells("quaternionic", 16)
    g = cylinder_cells("heisenberg", 24, t_slice=0.1)
    assert g.labels.shape == (24, 24)


def test_tail_experiment_small():
    rep = tail_experiment(ExperimentConfig("folded_nearest_integer", 10, 80, seed=0, backend="exact"),
                          window=50, max_word=6)
    assert rep.summary["success_rate"] == 1.0


def test_skew_product_small():
    rep = skew_product_check("hurwitz", 300, 1)
    s = rep.summary
    assert s["mismatches"] == 0 and s["identity_mismatches"] == 0 and s["non_bijective"] == 0
    assert s["checked"] + s["exceptional_skipped"] == 300


def test_inversion_height():
    for r in inversion_height_check(get_preset("hurwitz")):
        assert r["exact"] and r["top"] == 1 / r["h"]
        assert r["sampled_max"] <= r["top"]


def test_horoball_probe_small():
    rep = horoball_disjointness_probe(get_preset("hurwitz"), max_len=4, digit_bound=1, family_size=60)
    assert rep.summary["max_C"] == 1 and rep.summary["overlaps"] == 0


@pytest.mark.parametrize("name", ["octonionic", "folded_hurwitz", "real3d(3)", "rosen(5)"])
def test_vectorised_errors_match_scalar_route(name, monkeypatch):
    from iwasawa_cf import experiments as E
    from iwasawa_cf.cf import expand as cf_expand
    preset = get_preset(name)
    alg = CFAlgorithm(preset, "float")
    x = preset.sample(random.Random(3), "float")
    exp = cf_expand(CFAlgorithm(preset, "exact"), E._exact_copy(preset, x), 30)
    fast = E._errors_by_inversion(alg, exp)
    monkeypatch.setattr(E, "_errors_real", lambda *a: None)
    slow = E._errors_by_inversion(alg, exp)
    assert fast == pytest.approx(slow, rel=1e-12)
