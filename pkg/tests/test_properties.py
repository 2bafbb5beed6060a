import numpy as np
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st

from rotsets import geom
from rotsets.cocycle import Cocycle
from rotsets.essential import fill_set, is_essential_set, is_essential_tiled
from rotsets.gridset import GridSet, dilate_eps, grid_image
from rotsets.pseudo import PseudoSystem, find_connector, is_valid, theta_forward_sequence, verify_orbit
from rotsets.rotation import canonical_cloud, reduce_word
from rotsets.torusmap import (Compose, HShear, ProductShear, Translation, VShear, check_equivariance,
                              invert)

coef = st.floats(-0.5, 0.5, allow_nan=False)
unit = st.floats(0, 1, allow_nan=False)

leaves = st.one_of(
    st.builds(lambda a, b: Translation((a, b)), st.floats(-3, 3), st.floats(-3, 3)),
    st.builds(HShear, coef, unit, coef),
    st.builds(VShear, coef, unit, coef),
    st.builds(ProductShear, st.floats(-0.3, 0.3)),
)


def _extend(children):
    return st.one_of(
        st.lists(children, min_size=1, max_size=3).map(lambda ms: Compose(tuple(ms))),
        children.map(invert),
    )


map_trees = st.recursive(leaves, _extend, max_leaves=6)
points = st.lists(st.tuples(st.floats(-2, 2), st.floats(-2, 2)), min_size=1, max_size=20).map(np.array)
PROFILE = settings(max_examples=60, deadline=None, suppress_health_check=[HealthCheck.too_slow])


@PROFILE
@given(map_trees, st.integers(0, 10_000))
def test_equivariance_on_random_trees(m, seed):
    assert check_equivariance(m, samples=20, seed=seed) <= 1e-9


@PROFILE
@given(map_trees, points)
def test_inverse_round_trip_on_random_trees(m, p):
    inv = invert(m)
    assert np.abs(inv(m(p)) - p).max() <= 1e-9
    assert np.abs(m(inv(p)) - p).max() <= 1e-9
    assert invert(inv) == m


@PROFILE
@given(st.lists(map_trees, min_size=1, max_size=3), st.data())
def test_cocycle_identity(maps, data):
    c = Cocycle(maps)
    m = data.draw(st.integers(0, 15))
    n = data.draw(st.integers(0, 15))
    syms = np.array(data.draw(st.lists(st.integers(0, len(maps) - 1), min_size=m + n, max_size=m + n)),
                    dtype=np.int64)
    p = np.array([data.draw(st.tuples(unit, unit))])
    whole = c.advance(syms[None, :], p, [m + n])[0]
    mid = c.advance(syms[None, :n], p, [n])[0]
    tail = c.advance(syms[None, n:], mid, [m])[0]
    assert np.abs(whole - tail).max() <= 1e-9


@PROFILE
@given(map_trees, st.lists(st.integers(0, 1), max_size=30), st.tuples(unit, unit))
def test_word_reduction_identity(phi, word, p):
    c = Cocycle([phi, invert(phi)])
    p = np.array([p])
    syms = np.array(word, dtype=np.int64)[None, :]
    got = c.advance(syms, p, [len(word)])[0]
    red = reduce_word(c, word)
    want = p.copy()
    for s in red:
        want = c.maps[s](want)
    assert np.abs(got - want).max() <= 1e-9


grids = st.integers(4, 20).flatmap(
    lambda n: st.lists(st.booleans(), min_size=n * n, max_size=n * n).map(
        lambda bits: GridSet(n, np.array(bits).reshape(n, n))))


@PROFILE
@given(grids)
def test_fill_idempotent_and_extensive(s):
    f = fill_set(s)
    assert s <= f
    assert fill_set(f) == f


@PROFILE
@given(grids, st.integers(0, 19), st.integers(0, 19))
def test_essential_invariant_under_cell_translation(s, di, dj):
    moved = GridSet(s.resolution, np.roll(s.occupancy, (di, dj), axis=(0, 1)))
    assert is_essential_set(moved) == is_essential_set(s)
    assert is_essential_set(s) == is_essential_tiled(s)


@settings(max_examples=15, deadline=None)
@given(map_trees, st.tuples(unit, unit), st.integers(1, 4))
def test_theta_step_rule_exact(g, p, k):
    sys = PseudoSystem(g, 0.1, 32)
    seq = theta_forward_sequence(sys, p, k)
    for a, b in zip(seq, seq[1:]):
        assert b == dilate_eps(grid_image(sys.g, a, sys.subsamples), sys.eps)


@settings(max_examples=15, deadline=None)
@given(map_trees, st.tuples(unit, unit), st.tuples(unit, unit))
def test_connectors_pointwise_valid(g, a, b):
    sys = PseudoSystem(g, 0.08, 48)
    try:
        orb = find_connector(sys, a, b, 300)
    except RuntimeError:
        return
    err, cons = verify_orbit(sys, orb)
    assert err < sys.eps and cons < 1e-9 and is_valid(sys, orb)


@PROFILE
@given(points, st.randoms(use_true_random=False))
def test_canonical_cloud_order_free(p, rnd):
    perm = list(range(len(p)))
    rnd.shuffle(perm)
    assert np.array_equal(canonical_cloud(p)[0], canonical_cloud(p[perm])[0])


@PROFILE
@given(points)
def test_hull_contains_cloud(p):
    h = geom.convex_hull(p)
    assert geom.hull_contains(h, p, tol=1e-7).all()
