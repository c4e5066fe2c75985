"""Digit statistics: the regular CF against Gauss-Kuzmin, and Hurwitz digit symmetry.

    python3 demos/gauss_kuzmin.py
"""
import math

from iwasawa_cf.experiments import ExperimentConfig, digit_frequency

rep = digit_frequency(ExperimentConfig("regular", 100_000, 100, seed=0))
print("regular CF, 10^7 digits")
for d in range(1, 6):
    f = rep.tallies.get(str(d), 0) / rep.summary["total"]
    exact = -math.log2(1 - 1 / (d + 1) ** 2)
    print(f"  P(a = {d}) = {f:.5f}   Gauss-Kuzmin {exact:.5f}")

rep = digit_frequency(ExperimentConfig("hurwitz", 2000, 40, seed=0))
print("hurwitz, most frequent digits:", list(rep.tallies.items())[:8])
print("largest z-score between a digit and its conjugate:", round(rep.summary["conj_max_z"], 2))
