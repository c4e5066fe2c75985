"""Cut a geodesic into cusp-excursion blocks, one per group of CF digits.

    python3 demos/marking_a_geodesic.py
"""
import random

from iwasawa_cf.geodesic import calibrate_constants, compute_marking, random_markable_geodesic, \
    verify_marking_properties
from iwasawa_cf.lattice import get_preset

preset = get_preset("nearest_integer_minus")
consts = calibrate_constants(preset, ensemble=2000, c_max=1.0, h3_samples=500)
print("constants:", consts)

rng = random.Random(4)
g, plus = random_markable_geodesic(preset, consts, rng)
mk = compute_marking(preset, g, plus, consts, max_blocks=8)
print("forward endpoint:", plus)
for j in range(1, len(mk.indices)):
    lo, hi = mk.indices[j - 1], mk.indices[j]
    digits = [str(preset.z_flat(d.translation)[0]) for d in mk.digits[lo:hi]]
    print(f"  block {j}: t = {mk.times[j]:8.4f}  digits {' '.join(digits)}")

rep = verify_marking_properties(mk, preset)
rep.pop("intersection_detail", None)
print("checks:", rep)
