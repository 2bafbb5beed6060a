"""
Rotation sets of the three worked cocycles at reduced size.

    python3 demos/rotation_sets.py [outdir]

Writes an SVG per estimate and prints its shape diagnostics.
"""

import os
import sys

import numpy as np

from rotsets import geom
from rotsets.cocycle import Cocycle
from rotsets.report import emit_plot
from rotsets.rotation import default_plan, estimate_mz, per_word_rotation_set
from rotsets.shift import PeriodicWord
from rotsets.torusmap import invert, mz_square, paper_f0, paper_f1


def show(name, est, out):
    s = est.summary()
    print(f"{name:>16}: {s['points']:7d} points  connected={s['is_connected']}  "
          f"defect={s['convexity_defect']:.3f}  half-n drift={s['hausdorff_to_half_n'] or 0:.4f}")
    emit_plot(est, os.path.join(out, f"{name}.svg"))


def main(out):
    os.makedirs(out, exist_ok=True)

    # the shear/translation pair: rotation set of 0^(k-1) 1 collapses to a point
    c = Cocycle([paper_f0(), paper_f1()])
    for k in (1, 2, 4, 8):
        est = per_word_rotation_set(c, PeriodicWord((0,) * (k - 1) + (1,)), K=2000, grid=8)
        print(f"word 0^{k - 1}1: centre {est.cloud.mean(axis=0).round(4)}  expected (0, {np.sqrt(2) / k:.4f})")
    show("shear_word0", per_word_rotation_set(c, PeriodicWord((0,)), K=2000, grid=16), out)

    # the square map and its inverse: two unit squares meeting at the origin
    pair = estimate_mz(Cocycle([mz_square(), invert(mz_square())]), default_plan(2, n_max=100, base_grid=16))
    show("mz_pair", pair, out)
    box = geom.sample_box((0, 0), (1, 1), 0.02)
    print(f"{'':>16}  distance to the two squares: {geom.hausdorff(pair.cloud, np.vstack([box, -box])):.3f}")

    show("mz_square", estimate_mz(Cocycle([mz_square()]), default_plan(1, n_max=100, base_grid=16)), out)


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else "demo_out")
