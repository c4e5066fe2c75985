"""Draw the first-digit cylinders of four Hurwitz-type algorithms as SVG.

    python3 demos/hurwitz_cylinders.py [resolution] [outdir]
"""
import pathlib
import sys

from iwasawa_cf.cli import render_svg
from iwasawa_cf.experiments import cylinder_cells

res = int(sys.argv[1]) if len(sys.argv) > 1 else 400
out = pathlib.Path(sys.argv[2] if len(sys.argv) > 2 else "cylinders")
out.mkdir(exist_ok=True)

for name in ["hurwitz", "hurwitz_alpha(3/10)", "folded_hurwitz", "hurwitz_tetris"]:
    grid = cylinder_cells(name, res)
    path = out / f"{name.replace('(', '_').replace(')', '').replace('/', '-')}.svg"
    path.write_text(render_svg(grid, title=name))
    # cells pile up toward the origin, where 1/z is large
    print(f"{name:22s} {len(grid.legend):5d} cells  unlabeled {grid.unlabeled_fraction:.4f}  -> {path}")
