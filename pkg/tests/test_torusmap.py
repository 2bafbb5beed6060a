import numpy as np
import pytest

from rotsets.torusmap import (Compose, HShear, Inverse, ProductShear, SpecError, Translation, VShear,
                              bump, check_equivariance, displacement, double_shear, from_spec,
                              identity, invert, lipschitz_estimate, mz_square, paper_f0, paper_f1,
                              to_spec)

ALL_MAPS = [
    Translation((0.3, -1.7)),
    HShear(0.4, 0.1, 0.2),
    VShear(-0.7, 0.3, 0.0),
    ProductShear(0.2),
    ProductShear(-0.3),
    mz_square(),
    double_shear(0.3),
    Compose((ProductShear(0.1), Translation((0.5, 0.5)), HShear(1.0))),
    Inverse(ProductShear(0.25)),
]


def test_bump_range_and_values():
    t = np.linspace(-2, 2, 1001)
    s = bump(t)
    assert s.min() >= 0 and s.max() <= 1
    assert bump(0.0) == pytest.approx(0.0)
    assert bump(0.5) == pytest.approx(1.0)


def test_translation_example():
    assert np.allclose(Translation((0.5, 0.0))([0.25, 0.25]), [0.75, 0.25])


def test_paper_maps():
    assert np.allclose(paper_f0()([0.0, 0.25]), [1.0, 0.25])
    assert np.allclose(paper_f1()([0.1, 0.2]), [0.1, 0.2 + np.sqrt(2)])


def test_mz_square_fixed_points_and_displacements():
    m = mz_square()
    expect = {(0.0, 0.0): (0, 0), (0.5, 0.5): (1, 1), (0.0, 0.5): (1, 0), (0.5, 0.0): (0, 1)}
    for p, d in expect.items():
        assert np.allclose(displacement(m, p), d, atol=1e-12)


def test_identity():
    p = np.random.default_rng(0).random((10, 2))
    assert np.array_equal(identity()(p), p)


@pytest.mark.parametrize("m", ALL_MAPS, ids=lambda m: type(m).__name__)
def test_equivariance(m):
    assert check_equivariance(m, samples=200, seed=3) <= 1e-9


@pytest.mark.parametrize("m", ALL_MAPS, ids=lambda m: type(m).__name__)
def test_inverse_round_trip(m):
    p = np.random.default_rng(1).uniform(-2, 2, (500, 2))
    inv = invert(m)
    assert np.abs(inv(m(p)) - p).max() <= 1e-9
    assert np.abs(m(inv(p)) - p).max() <= 1e-9


@pytest.mark.parametrize("m", ALL_MAPS, ids=lambda m: type(m).__name__)
def test_invert_is_involution(m):
    assert invert(invert(m)) == m


def test_product_shear_bounds():
    with pytest.raises(ValueError):
        ProductShear(0.31)
    ProductShear(0.3)


def test_product_shear_fixes_lines():
    m = ProductShear(0.3)
    y = np.linspace(0, 1, 50)
    line = np.column_stack([np.zeros_like(y), y])
    assert np.array_equal(m(line), line)
    x = np.linspace(0, 1, 50)
    assert np.array_equal(m(np.column_stack([x, np.zeros_like(x)]))[:, 0], x)


def test_displacement_independent_of_lift():
    m = mz_square()
    p = np.random.default_rng(2).random((20, 2))
    assert np.allclose(displacement(m, p), displacement(m, p + [3, -2]), atol=1e-12)


def test_point_shape_checked():
    with pytest.raises(ValueError):
        mz_square()(np.zeros(3))


def test_compose_order():
    # first element acts first
    m = Compose((Translation((0.0, 0.25)), HShear(1.0)))
    assert np.allclose(m([0.0, 0.0]), [1.0, 0.25])


def test_lipschitz_of_translation_is_one():
    assert lipschitz_estimate(Translation((0.3, 0.1))) == pytest.approx(1.0, abs=1e-6)


@pytest.mark.parametrize("m", ALL_MAPS, ids=lambda m: type(m).__name__)
def test_spec_round_trip(m):
    back = from_spec(to_spec(m))
    p = np.random.default_rng(4).random((30, 2))
    assert np.allclose(back(p), m(p), atol=0, rtol=0)


def test_spec_errors_name_the_field():
    with pytest.raises(SpecError, match="unknown map type at cocycle.maps\\[0\\]"):
        from_spec({"type": "hsheer", "a": 1.0}, "cocycle.maps[0]")
    with pytest.raises(SpecError):
        from_spec({"type": "product_shear", "a": 0.5})
    with pytest.raises(SpecError):
        from_spec([1, 2])


def test_named_spec_maps():
    assert from_spec({"type": "named", "name": "mz_square"}) == mz_square()
