"""
Pseudo-orbits of the conservative double shear: coverage times, a
connector, and splices mixing a +x and a +y push cycle.

    python3 demos/pseudo_orbits.py
"""

import numpy as np

from rotsets.pseudo import (Policy, PseudoOrbit, PseudoSystem, coverage_bound, find_connector,
                            is_valid, splice_periodic)
from rotsets.torusmap import double_shear


def push_orbit(sys, direction, steps):
    pol = Policy("constant", direction, 1.0)
    pts, ws = [np.full(2, 0.5 / sys.grid)], []
    for step in range(steps):
        w = pol.perturbations(sys.eps, 1, step)[0]
        pts.append(np.mod(sys.g(pts[-1]) + w, 1.0))
        ws.append(w)
    return PseudoOrbit(np.array(pts), np.array(ws))


def main():
    sys = PseudoSystem(double_shear(0.3), 0.05, 128)
    rng = np.random.default_rng(0)
    print("coverage steps from random starts:", [coverage_bound(sys, p, 2000) for p in rng.random((5, 2))])

    a, b = rng.random(2), rng.random(2)
    orb = find_connector(sys, a, b, 500)
    print(f"connector {a.round(3)} -> {b.round(3)}: {orb.steps} steps, valid={is_valid(sys, orb)}")

    ox, oy = push_orbit(sys, (1, 0), 128), push_orbit(sys, (0, 1), 128)
    vx, vy = ox.rotation_vector(sys.g), oy.rotation_vector(sys.g)
    print(f"push vectors: +x {vx.round(4)}  +y {vy.round(4)}")
    for k in range(5):
        res = splice_periodic(sys, ox, oy, k, 4, 500)
        target = k / 4 * vx + (1 - k / 4) * vy
        print(f"  mix {k}/4: {res.vector.round(4)}  target {target.round(4)}  "
              f"steps {res.total_steps}  connectors {res.connector_steps}")


if __name__ == "__main__":
    main()
