import numpy as np
import pytest

from rotsets.cocycle import Cocycle
from rotsets.essential import (ESSENTIAL, INESSENTIAL, classify_points, displacement_probe, fill_set,
                               forward_closure, is_essential_set, is_essential_tiled, torus_components)
from rotsets.gridset import GridSet, ring, sampled_image
from rotsets.shift import PeriodicWord, RandomWord
from rotsets.torusmap import ProductShear, Translation, identity, invert, mz_square

N = 64
_c = (np.arange(N) + 0.5) / N
X, Y = np.meshgrid(_c, _c, indexing="ij")


def band():
    return GridSet(N, np.abs(Y - 0.5) < 0.1)


def disk(center=(0.5, 0.5), r=0.2):
    return GridSet.ball(N, center, r)


def diagonal():
    return GridSet(N, np.abs(np.mod(Y - X + 0.5, 1.0) - 0.5) < 0.05)


def test_essential_examples():
    assert is_essential_set(band())
    assert not is_essential_set(disk())
    assert is_essential_set(diagonal())
    assert not is_essential_set(GridSet.empty(N))
    assert is_essential_set(GridSet.full(N))


def test_disk_across_the_seam_is_inessential():
    assert not is_essential_set(disk((0.0, 0.0), 0.2))


def test_slope_two_loop():
    # the (1, 2) curve needs more than a 3x3 tiling to close up in one tile
    line = np.abs(np.mod(Y - 2 * X + 0.5, 1.0) - 0.5) < 0.04
    assert is_essential_set(GridSet(N, line))


@pytest.mark.parametrize("seed", range(6))
def test_holonomy_agrees_with_tiled_oracle(seed):
    rng = np.random.default_rng(seed)
    for density in (0.3, 0.45, 0.55, 0.6):
        occ = rng.random((24, 24)) < density
        assert is_essential_set(GridSet(24, occ)) == is_essential_tiled(GridSet(24, occ))


@pytest.mark.parametrize("s", [band, disk, diagonal], ids=["band", "disk", "diagonal"])
def test_essentiality_translation_invariant(s):
    occ = s().occupancy
    for shift in [(5, 0), (0, 17), (31, 40)]:
        assert is_essential_set(GridSet(N, np.roll(occ, shift, axis=(0, 1)))) == is_essential_set(s())


def test_torus_components_counts():
    two = disk((0.25, 0.25), 0.1) | disk((0.75, 0.75), 0.1)
    comp, ess = torus_components(two.occupancy)
    assert len(ess) == 2 and not ess.any()
    comp, ess = torus_components(band().occupancy)
    assert len(ess) == 1 and ess.all()


def test_fill_examples():
    assert fill_set(band()) == band()
    assert fill_set(~disk()).is_full()
    two = disk((0.25, 0.25), 0.1) | disk((0.75, 0.75), 0.1)
    assert fill_set(two) == two
    ring_set = disk(r=0.3) & ~disk(r=0.15)
    assert fill_set(ring_set) == disk(r=0.3) | ring_set


@pytest.mark.parametrize("s", [band, disk, diagonal], ids=["band", "disk", "diagonal"])
def test_fill_idempotent_and_extensive(s):
    f = fill_set(s())
    assert s() <= f
    assert fill_set(f) == f


def test_closure_identity():
    seed = disk(r=0.1)
    out, conv = forward_closure(Cocycle([identity()]), seed, cap=10)
    assert conv and out == ring(seed)


def test_closure_irrational_translation_is_band():
    c = Cocycle([Translation((0.318, 0.0))])
    seed = GridSet.ball(128, (0.5, 0.5), 4 / 128)
    out, conv = forward_closure(c, seed, cap=500)
    assert conv and is_essential_set(out)
    # oracle: many translated copies of the ball
    rng = np.random.default_rng(0)
    ang = rng.random(400) * 2 * np.pi
    rad = 4 / 128 * np.sqrt(rng.random(400))
    pts = np.array([0.5, 0.5]) + rad[:, None] * np.column_stack([np.cos(ang), np.sin(ang)])
    for k in range(0, 10_000, 97):
        assert out.contains_points(pts + [0.318 * k, 0.0]).all()
    assert not out.contains_points([[0.5, 0.1]]).any()


def test_closure_product_shear_confined():
    c = Cocycle([ProductShear(0.2)])
    seed = GridSet.ball(64, (0.5, 0.7), 0.05)
    out, conv = forward_closure(c, seed, cap=500)
    assert conv and not is_essential_set(out)
    cols = np.flatnonzero(out.occupancy.any(axis=1))
    rows = np.flatnonzero(out.occupancy.any(axis=0))
    # stays off the fixed line x = 0 and within the ball's y-extent (plus the final ring)
    assert cols.min() > 0
    assert (rows / 64).min() >= 0.7 - 0.05 - 2 / 64 and (rows / 64).max() <= 0.7 + 0.05 + 2 / 64


def test_closure_fixpoint_and_monotone():
    c = Cocycle([ProductShear(0.2), ProductShear(0.1)])
    small = GridSet.ball(64, (0.4, 0.3), 0.05)
    big = GridSet.ball(64, (0.4, 0.3), 0.08)
    a, conv = forward_closure(c, small, cap=500)
    b, _ = forward_closure(c, big, cap=500)
    assert conv and small <= a and a <= b
    # one more round of images adds nothing beyond the final ring
    inner, _ = forward_closure(c, small, cap=500)
    core = GridSet(64, inner.occupancy)
    for m in c.maps:
        img = sampled_image(m, core, 4)
        assert img <= ring(core)


def test_closure_cap():
    with pytest.raises(ValueError):
        forward_closure(Cocycle([identity()]), disk(), cap=0)
    _, conv = forward_closure(Cocycle([Translation((0.318, 0.0))]), GridSet.ball(128, (0.5, 0.5), 0.03), cap=2)
    assert not conv


def test_classify_small_maps():
    ident = classify_points(Cocycle([identity()]), 16, 2 / 16)
    assert (ident.labels == INESSENTIAL).all()
    trans = classify_points(Cocycle([Translation((0.318, 0.0))]), 16, 2 / 16)
    assert (trans.labels == ESSENTIAL).all()
    assert trans.fractions()["essential"] == 1.0
    assert trans.to_pgm().startswith("P2\n16 16\n")
    with pytest.raises(ValueError):
        classify_points(Cocycle([identity()]), 16, 1 / 16)


def test_classify_undecided_when_cap_hit():
    cm = classify_points(Cocycle([Translation((0.2, 0.0))]), 16, 2 / 16, cap=1)
    assert cm.fractions()["undecided"] == 1.0


def test_displacement_probe():
    words = [PeriodicWord((0,)), PeriodicWord((0, 1)), RandomWord(3)]
    assert displacement_probe(Cocycle([identity(), identity()]), words, 4, 50) == 0.0
    assert displacement_probe(Cocycle([ProductShear(0.2), ProductShear(0.1)]), words, 8, 300) <= 1.0
    mz = Cocycle([mz_square(), invert(mz_square())])
    assert displacement_probe(mz, [PeriodicWord((0,))], 4, 100) == pytest.approx(100 * np.sqrt(2))
    with pytest.raises(ValueError):
        displacement_probe(mz, words, 4, 0)
