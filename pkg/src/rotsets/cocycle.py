"""
Locally constant cocycles F(x, p) = (sigma(x), f_{x_0}(p)) and their lifts.

All trajectories live in the universal cover; torus reduction happens only
where a torus point is explicitly required.

When two fibre maps are structural inverses of each other (``{phi,
invert(phi)}``), adjacent inverse pairs in a word are cancelled exactly
instead of being evaluated.  The composed map is the same; evaluating
``phi^-1(phi(p))`` step by step on a chaotic fibre amplifies round-off by
roughly an order of magnitude per step, which destroys any rotation
estimate built from long words.
"""

import numpy as np

from .torusmap import LiftedMap, check_equivariance, invert

EQUIVARIANCE_TOL = 1e-9
# bytes of trajectory history kept per chunk when cancelling inverse pairs
_HISTORY_BUDGET = 64 * 2**20


class Cocycle:
    """
    Table ``symbol -> LiftedMap``.

    Parameters
    ----------
    maps : sequence of LiftedMap
        Fibre map for each symbol; the alphabet size is ``len(maps)``.
    cancel_inverses : bool
        Cancel adjacent inverse pairs exactly (see module docstring).
    check : bool
        Verify integer-translation equivariance of every map on construction.
    """

    def __init__(self, maps, cancel_inverses=True, check=True):
        maps = tuple(maps)
        if not maps:
            raise ValueError("a cocycle needs at least one map")
        for i, m in enumerate(maps):
            if not isinstance(m, LiftedMap):
                raise TypeError(f"maps[{i}] is not a LiftedMap")
            if check:
                err = check_equivariance(m, samples=16, seed=i)
                if err > EQUIVARIANCE_TOL:
                    raise ValueError(f"maps[{i}] fails equivariance by {err:.3g}")
        self.maps = maps
        partner = np.full(len(maps), -1, dtype=np.int64)
        if cancel_inverses:
            inverses = [invert(m) for m in maps]
            for i, inv in enumerate(inverses):
                for j, m in enumerate(maps):
                    if inv == m:
                        partner[i] = j
                        break
        self.partner = partner
        self.cancels = bool((partner >= 0).any())

    def __len__(self):
        return len(self.maps)

    def __repr__(self):
        return f"Cocycle({list(self.maps)!r})"

    def _apply(self, sym, pts):
        """Apply maps[sym[r]] to row r of pts."""
        out = np.empty_like(pts)
        for a, m in enumerate(self.maps):
            mask = sym == a
            if mask.all():
                return m(pts)
            if mask.any():
                out[mask] = m(pts[mask])
        return out

    def advance(self, symbols, starts, record):
        """
        Batched forward iteration.

        Parameters
        ----------
        symbols : int array, shape (rows, n)
            Word prefix for each row.
        starts : float array, shape (rows, 2)
            Lifted starting points.
        record : sequence of int
            Step counts (0..n) at which positions are returned.

        Returns
        -------
        numpy.ndarray, shape (len(record), rows, 2)
        """
        symbols = np.asarray(symbols, dtype=np.int64)
        starts = np.asarray(starts, dtype=float).reshape(-1, 2)
        rows, n = symbols.shape
        if rows != len(starts):
            raise ValueError("symbols and starts disagree on the number of rows")
        record = [int(r) for r in record]
        if any(r < 0 or r > n for r in record):
            raise ValueError("record steps must lie in 0..n")
        if symbols.size and (symbols.min() < 0 or symbols.max() >= len(self.maps)):
            raise ValueError("symbol outside the cocycle alphabet")
        out = np.empty((len(record), rows, 2))
        if rows == 0:
            return out
        if not self.cancels:
            self._advance_plain(symbols, starts, record, out)
            return out
        chunk = max(1, _HISTORY_BUDGET // (16 * (n + 1)))
        for lo in range(0, rows, chunk):
            hi = min(rows, lo + chunk)
            self._advance_cancelling(symbols[lo:hi], starts[lo:hi], record, out[:, lo:hi])
        return out

    def _advance_plain(self, symbols, starts, record, out, on_step=None):
        wanted = {}
        for k, r in enumerate(record):
            wanted.setdefault(r, []).append(k)
        p = starts.copy()
        for k in wanted.get(0, []):
            out[k] = p
        for step in range(symbols.shape[1]):
            p = self._apply(symbols[:, step], p)
            for k in wanted.get(step + 1, []):
                out[k] = p
            if on_step is not None:
                on_step(p)

    def _advance_cancelling(self, symbols, starts, record, out, on_step=None):
        rows, n = symbols.shape
        wanted = {}
        for k, r in enumerate(record):
            wanted.setdefault(r, []).append(k)
        hist = np.empty((n + 1, rows, 2))
        stack = np.full((n + 1, rows), -1, dtype=np.int64)
        hist[0] = starts
        depth = np.zeros(rows, dtype=np.int64)
        idx = np.arange(rows)
        p = starts.copy()
        for k in wanted.get(0, []):
            out[k] = p
        for step in range(n):
            sym = symbols[:, step]
            top = stack[depth, idx]
            cancel = (depth > 0) & (self.partner[sym] == top)
            push = ~cancel
            if cancel.any():
                depth[cancel] -= 1
                p[cancel] = hist[depth[cancel], idx[cancel]]
            if push.any():
                p[push] = self._apply(sym[push], p[push])
                depth[push] += 1
                hist[depth[push], idx[push]] = p[push]
                stack[depth[push], idx[push]] = sym[push]
            for k in wanted.get(step + 1, []):
                out[k] = p
            if on_step is not None:
                on_step(p)

    def max_excursion(self, symbols, starts):
        """Per row, max over 1 <= n <= len of |f^n_x(p) - p| in the cover."""
        symbols = np.asarray(symbols, dtype=np.int64)
        starts = np.asarray(starts, dtype=float).reshape(-1, 2)
        rows, n = symbols.shape
        best = np.zeros(rows)
        if rows == 0 or n == 0:
            return best
        dummy = np.empty((0, rows, 2))
        if not self.cancels:
            def track(p):
                np.maximum(best, np.linalg.norm(p - starts, axis=1), out=best)

            self._advance_plain(symbols, starts, [], dummy, track)
            return best
        chunk = max(1, _HISTORY_BUDGET // (16 * (n + 1)))
        for lo in range(0, rows, chunk):
            hi = min(rows, lo + chunk)
            part = best[lo:hi]

            def track(p, s0=starts[lo:hi], part=part):
                np.maximum(part, np.linalg.norm(p - s0, axis=1), out=part)

            self._advance_cancelling(symbols[lo:hi], starts[lo:hi], [], dummy[:, lo:hi], track)
        return best

    def iterate(self, word, p, n):
        """Lifted trajectory p_0 = p, p_{i+1} = f_{x_i}(p_i); length n + 1."""
        if n < 0:
            raise ValueError("n must be >= 0")
        syms = word.symbols(n)[None, :]
        return self.advance(syms, np.asarray(p, dtype=float)[None, :], range(n + 1))[:, 0, :]

    def rho_n(self, word, p, n):
        """Time-n averaged displacement (f^n_x(p) - p) / n."""
        if n <= 0:
            raise ValueError("undefined average: n must be >= 1")
        p = np.asarray(p, dtype=float)
        end = self.advance(word.symbols(n)[None, :], p[None, :], [n])[0, 0]
        return (end - p) / n

    def orbit_rho_tail(self, word, p, n_max, tail_fraction=0.1):
        """
        rho_n(x, p) for every n in the last ``tail_fraction`` of 1..n_max:
        a finite stand-in for the accumulation points of (rho_n).
        """
        if n_max < 10:
            raise ValueError("n_max must be >= 10")
        if not 0 < tail_fraction <= 1:
            raise ValueError("tail_fraction must lie in (0, 1]")
        n_min = max(1, int(np.ceil((1.0 - tail_fraction) * n_max)))
        ns = np.arange(n_min, n_max + 1)
        p = np.asarray(p, dtype=float)
        ends = self.advance(word.symbols(n_max)[None, :], p[None, :], ns)[:, 0, :]
        return (ends - p) / ns[:, None]


def iterate(c, word, p, n):
    return c.iterate(word, p, n)


def rho_n(c, word, p, n):
    return c.rho_n(word, p, n)


def orbit_rho_tail(c, word, p, n_max, tail_fraction=0.1):
    return c.orbit_rho_tail(word, p, n_max, tail_fraction)
