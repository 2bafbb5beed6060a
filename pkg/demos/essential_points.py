"""
Essential/inessential classification at a coarse grid for three cocycles,
plus displacement probes.

    python3 demos/essential_points.py
"""

from rotsets.cocycle import Cocycle
from rotsets.essential import classify_points, displacement_probe
from rotsets.shift import PeriodicWord, RandomWord
from rotsets.torusmap import ProductShear, Translation, identity, invert, mz_square


def main():
    N = 32
    cases = {
        "identity": Cocycle([identity()]),
        "translation": Cocycle([Translation((0.318, 0.0))]),
        "product shears": Cocycle([ProductShear(0.2), ProductShear(0.1)]),
    }
    for name, c in cases.items():
        fr = classify_points(c, N, 2 / N).fractions()
        print(f"{name:>15}: " + "  ".join(f"{k}={v:.3f}" for k, v in fr.items()))
    words = [PeriodicWord((0,)), PeriodicWord((0, 1)), RandomWord(1)]
    print("probe, product shears (n=2000):",
          round(displacement_probe(cases["product shears"], words, 8, 2000), 4))
    print("probe, mz pair (n=1000):",
          round(displacement_probe(Cocycle([mz_square(), invert(mz_square())]), words, 8, 1000), 1))


if __name__ == "__main__":
    main()
