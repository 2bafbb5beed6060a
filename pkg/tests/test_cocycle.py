import numpy as np
import pytest

from rotsets.cocycle import Cocycle, iterate, orbit_rho_tail, rho_n
from rotsets.shift import PeriodicWord, RandomWord
from rotsets.torusmap import HShear, Translation, invert, mz_square, paper_f0, paper_f1


def paper():
    return Cocycle([paper_f0(), paper_f1()])


def test_rho_n_translation_examples():
    c = Cocycle([Translation((0.5, 0.0)), Translation((0.0, 0.5))])
    w = PeriodicWord((0, 1))
    assert np.allclose(rho_n(c, w, [0.1, 0.2], 10), [0.25, 0.25], atol=1e-14)
    assert np.allclose(rho_n(c, PeriodicWord((0,)), [0.3, 0.9], 7), [0.5, 0.0], atol=1e-14)


def test_rho_n_rejects_zero():
    with pytest.raises(ValueError, match="undefined average"):
        rho_n(paper(), PeriodicWord((0,)), [0, 0], 0)


def test_iterate_matches_manual_composition():
    c = paper()
    w = RandomWord(2)
    p = np.array([0.3, 0.7])
    traj = iterate(c, w, p, 25)
    q = p.copy()
    for i, s in enumerate(w.symbols(25)):
        assert np.allclose(traj[i], q, atol=0, rtol=0)
        q = c.maps[s](q)
    assert np.allclose(traj[-1], q, atol=0, rtol=0)


def test_cocycle_identity():
    # f^{m+n}_x(p) = f^m_{sigma^n x}(f^n_x(p))
    c = paper()
    w = RandomWord(11, (0.4, 0.6))
    rng = np.random.default_rng(0)
    for m, n in [(1, 1), (3, 5), (20, 13)]:
        p = rng.random(2)
        whole = c.advance(w.symbols(m + n)[None, :], p[None, :], [m + n])[0, 0]
        mid = c.advance(w.symbols(n)[None, :], p[None, :], [n])[0, 0]
        tail = c.advance(w.symbols(m, start=n)[None, :], mid[None, :], [m])[0, 0]
        assert np.abs(whole - tail).max() <= 1e-9


def test_partner_detection():
    phi = mz_square()
    c = Cocycle([phi, invert(phi)])
    assert c.partner.tolist() == [1, 0] and c.cancels
    assert not paper().cancels
    assert not Cocycle([phi, invert(phi)], cancel_inverses=False).cancels


def test_cancellation_matches_reduced_word():
    phi = mz_square()
    c = Cocycle([phi, invert(phi)])
    # 0 1 1 0 0 1 0 reduces to 0
    syms = np.array([[0, 1, 1, 0, 0, 1, 0]])
    p = np.array([[0.123, 0.456]])
    got = c.advance(syms, p, [7])[0]
    assert np.abs(got - phi(p)).max() <= 1e-12


def test_cancellation_agrees_with_plain_on_short_words():
    phi = HShear(0.3, 0.1)
    c = Cocycle([phi, invert(phi)])
    plain = Cocycle([phi, invert(phi)], cancel_inverses=False)
    syms = RandomWord(4).symbols(30)[None, :].repeat(5, axis=0)
    starts = np.random.default_rng(1).random((5, 2))
    a = c.advance(syms, starts, range(31))
    b = plain.advance(syms, starts, range(31))
    assert np.abs(a - b).max() <= 1e-9


def test_advance_validation():
    c = paper()
    with pytest.raises(ValueError):
        c.advance(np.zeros((2, 3), dtype=int), np.zeros((3, 2)), [1])
    with pytest.raises(ValueError):
        c.advance(np.full((1, 3), 2), np.zeros((1, 2)), [1])
    with pytest.raises(ValueError):
        c.advance(np.zeros((1, 3), dtype=int), np.zeros((1, 2)), [4])


def test_equivariance_checked_on_construction():
    class Bad(Translation):
        def _forward(self, p):
            return p + 0.01 * p ** 2

    with pytest.raises(ValueError, match="equivariance"):
        Cocycle([Bad((0.0, 0.0))])
    with pytest.raises(TypeError):
        Cocycle([lambda p: p])


def test_orbit_rho_tail():
    c = Cocycle([Translation((0.2, 0.0))])
    cl = orbit_rho_tail(c, PeriodicWord((0,)), [0.5, 0.5], 100)
    assert cl.shape == (11, 2)
    assert np.allclose(cl, [0.2, 0.0])
    with pytest.raises(ValueError):
        orbit_rho_tail(c, PeriodicWord((0,)), [0, 0], 5)


def test_max_excursion_matches_trajectory():
    for c in (paper(), Cocycle([mz_square(), invert(mz_square())])):
        syms = np.stack([RandomWord(s).symbols(40) for s in range(6)])
        starts = np.random.default_rng(5).random((6, 2))
        traj = c.advance(syms, starts, range(1, 41))
        expect = np.linalg.norm(traj - starts[None], axis=2).max(axis=0)
        assert np.allclose(c.max_excursion(syms, starts), expect, atol=1e-12)
