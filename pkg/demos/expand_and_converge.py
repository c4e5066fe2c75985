"""Expand a few points with different algorithms and watch the convergents close in.

    python3 demos/expand_and_converge.py
"""
import random
from fractions import Fraction

from iwasawa_cf.cf import CFAlgorithm, convergent_word, expand
from iwasawa_cf.experiments import ExperimentConfig, convergence_stats
from iwasawa_cf.lattice import get_preset
from iwasawa_cf.space import cygan_distance


def show(name, coords, t=()):
    preset = get_preset(name)
    alg = CFAlgorithm(preset)
    x = preset.make_point(coords, list(t))
    exp = expand(alg, x, 12)
    print(f"{name}: x = {x}")
    for i, d in enumerate(exp.digits, 1):
        c = convergent_word(alg, exp.digits, i)(preset.origin())
        print(f"  a_{i} = {d.translation}   M_{i}(0) = {c}")
    print("  terminated" if exp.terminated else "  (truncated)")


show("nearest_integer_plus", [Fraction(5, 12)])
show("hurwitz", [Fraction(2, 5), Fraction(1, 5)])
show("heisenberg", [Fraction(1, 7), Fraction(-2, 9)], [Fraction(1, 11)])

# an irrational point: errors shrink geometrically
preset = get_preset("hurwitz")
alg = CFAlgorithm(preset, "float")
x = preset.sample(random.Random(1))
exp = expand(alg, x, 10)
print("hurwitz, float sample:")
for i in range(1, len(exp.digits) + 1):
    err = cygan_distance(convergent_word(alg, exp.digits, i)(preset.origin("float")), x)
    print(f"  i={i:2d}  d(M_i(0), x) = {err:.3e}")

rep = convergence_stats(ExperimentConfig("hurwitz", 200, 40, seed=0), exact_samples=50)
print("hurwitz, 200 samples:", {k: rep.summary[k] for k in ("fraction_below_tol", "median_step_ratio")})
