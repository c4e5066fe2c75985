"""Search short words for hidden rotations fixing 0 and infinity.

A rotation inside the modular group means the digit lattice is not the
whole stabiliser of infinity, so the algorithm is incomplete.  Folding the
rotation into the digit set repairs that.

    python3 demos/symmetry_hunt.py
"""
from iwasawa_cf.lattice import get_preset
from iwasawa_cf.modular import find_central_symmetries, mod_q_symmetry_search

for name, length, bound in [("nearest_integer_plus", 8, 2), ("hurwitz", 8, 2), ("heisenberg", 6, 1),
                            ("backwards", 10, 3), ("folded_hurwitz", 8, 2)]:
    rep = find_central_symmetries(get_preset(name), length, bound)
    print(rep.summary())
    for s in rep.rotations[:3]:
        print(f"    {s.word}  ->  multiplier {s.multiplier}")

# no word search can prove absence; reduction mod 4 can
print("j_hurwitz mod 4:", mod_q_symmetry_search(get_preset("j_hurwitz"), 4)["verdict"])
