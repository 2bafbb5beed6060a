"""
Grid topology on the torus: forward closures of neighbourhoods under a
cocycle, essentiality of grid sets, Fill, point classification and
displacement probes.

Essentiality is decided exactly at grid resolution.  Cells are joined by
4-connectivity inside the fundamental domain; every wrap-around adjacency
becomes an edge carrying the integer translate it crosses.  A set is
essential iff some component has nonzero holonomy, i.e. two lifts of the
same cell are connected in the plane.
"""

from collections import deque
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .gridset import GridSet, erode_by_ball, ring, sampled_image, subsamples_for, to_pgm

INESSENTIAL, ESSENTIAL, UNDECIDED = 0, 1, 2
DEFAULT_CAP = 500
_FIRST_CHECK = 32

_FOUR = ndimage.generate_binary_structure(2, 1)


def grid_image(m, s, subsamples):
    """Outer approximation of m(s): subsamples^2 points per cell, then one ring."""
    if subsamples < 2:
        raise ValueError("subsamples must be >= 2")
    return ring(sampled_image(m, s, subsamples))


def _wrap_edges(occ, labels):
    """(u, v, dx, dy) for adjacencies across the domain boundary; labels are 1-based."""
    edges = []
    right, left = labels[-1, :], labels[0, :]
    both = (right > 0) & (left > 0)
    edges += [(int(u), int(v), 1, 0) for u, v in zip(right[both], left[both])]
    top, bottom = labels[:, -1], labels[:, 0]
    both = (top > 0) & (bottom > 0)
    edges += [(int(u), int(v), 0, 1) for u, v in zip(top[both], bottom[both])]
    return edges


def torus_components(occ):
    """
    Components of an occupancy grid on the torus.

    Returns
    -------
    comp : int array (N, N)
        -1 outside the set, else a torus component id (0-based).
    essential : bool array
        Per component: does it contain a non-contractible loop.
    """
    occ = np.asarray(occ, dtype=bool)
    labels, n = ndimage.label(occ, structure=_FOUR)
    adj = [[] for _ in range(n + 1)]
    for u, v, dx, dy in set(_wrap_edges(occ, labels)):
        adj[u].append((v, dx, dy))
        adj[v].append((u, -dx, -dy))
    pot = {}
    root_of = np.zeros(n + 1, dtype=np.int64)
    essential = []
    for start in range(1, n + 1):
        if start in pot:
            continue
        cid = len(essential)
        bad = False
        pot[start] = (0, 0)
        root_of[start] = cid
        queue = deque([start])
        while queue:
            u = queue.popleft()
            pu = pot[u]
            for v, dx, dy in adj[u]:
                want = (pu[0] + dx, pu[1] + dy)
                if v not in pot:
                    pot[v] = want
                    root_of[v] = cid
                    queue.append(v)
                elif pot[v] != want:
                    bad = True
        essential.append(bad)
    comp = np.where(labels > 0, root_of[labels], -1)
    return comp, np.array(essential, dtype=bool)


def is_essential_set(s):
    """True iff some torus component of s carries a non-contractible loop."""
    occ = s.occupancy if isinstance(s, GridSet) else np.asarray(s, dtype=bool)
    if not occ.any():
        return False
    if occ.all():
        return True
    return bool(torus_components(occ)[1].any())


def is_essential_tiled(s):
    """
    Reference check on a 3x3 tiling of the domain: essential iff some planar
    component holds two copies of the same cell.  Misses loops that need a
    wider tiling; used only to cross-check ``is_essential_set``.
    """
    occ = s.occupancy if isinstance(s, GridSet) else np.asarray(s, dtype=bool)
    N = occ.shape[0]
    if not occ.any():
        return False
    labels, _ = ndimage.label(np.tile(occ, (3, 3)), structure=_FOUR)
    blocks = [labels[a * N:(a + 1) * N, b * N:(b + 1) * N] for a in range(3) for b in range(3)]
    centre = blocks[4]
    for k, blk in enumerate(blocks):
        if k != 4 and np.any((centre > 0) & (centre == blk)):
            return True
    return False


def fill_set(s):
    """s together with every inessential torus component of its complement."""
    comp, essential = torus_components(~s.occupancy)
    occ = s.occupancy.copy()
    if len(essential):
        inessential = np.flatnonzero(~essential)
        occ |= np.isin(comp, inessential)
    return GridSet(s.resolution, occ)


def forward_closure(c, seed, cap=DEFAULT_CAP, subsamples=None, stop=None):
    """
    Closure of ``seed`` under the generators of a locally constant cocycle.

    Sampled images (no per-round dilation) of newly added cells are merged
    until nothing new appears or ``cap`` rounds pass; the result is then
    dilated by one ring.  For a locally constant cocycle the union of all
    iterates over all words is exactly this generator closure.

    ``stop(U)`` may end the iteration early (returning converged=False).

    Returns
    -------
    (GridSet, converged)
    """
    if cap < 1:
        raise ValueError("cap must be >= 1")
    if subsamples is None:
        subsamples = max(subsamples_for(m) for m in c.maps)
    N = seed.resolution
    occ = seed.occupancy.copy()
    frontier = np.argwhere(occ)
    converged = False
    for _ in range(cap):
        new = np.zeros_like(occ)
        for m in c.maps:
            new |= sampled_image(m, GridSet(N, occ), subsamples, cells=frontier).occupancy
        new &= ~occ
        if not new.any():
            converged = True
            break
        occ |= new
        frontier = np.argwhere(new)
        if stop is not None and stop(occ):
            break
    return ring(GridSet(N, occ)), converged


def _closure_fixpoint(c, seed, cap, subsamples, stop):
    """Like forward_closure but returns the undilated set as well."""
    N = seed.resolution
    occ = seed.occupancy.copy()
    frontier = np.argwhere(occ)
    for r in range(1, cap + 1):
        new = np.zeros_like(occ)
        for m in c.maps:
            new |= sampled_image(m, GridSet(N, occ), subsamples, cells=frontier).occupancy
        new &= ~occ
        if not new.any():
            return occ, True, False
        occ |= new
        frontier = np.argwhere(new)
        # checks cost more than a round, so only long closures get them
        if r >= _FIRST_CHECK and r & (r - 1) == 0 and stop(occ):
            return occ, False, True
    return occ, False, False


@dataclass
class ClassificationMap:
    resolution: int
    labels: np.ndarray
    ball_radius: float
    cap: int

    def fractions(self):
        n = self.labels.size
        return {
            "inessential": float((self.labels == INESSENTIAL).sum() / n),
            "essential": float((self.labels == ESSENTIAL).sum() / n),
            "undecided": float((self.labels == UNDECIDED).sum() / n),
        }

    def to_pgm(self):
        return to_pgm(self.labels)

    def summary(self):
        return {"resolution": self.resolution, "ball_radius": self.ball_radius,
                "cap": self.cap, **self.fractions()}


def classify_points(c, base_resolution, ball_radius, cap=DEFAULT_CAP, subsamples=None):
    """
    Label every cell centre as essential / inessential / undecided.

    The closure of the ball around each centre is computed, but two monotone
    shortcuts avoid most of the work without changing any label:

    * if a converged inessential fixpoint F contains the ball of a cell,
      that cell's closure stays inside F, so it is inessential;
    * if a growing closure contains the ball of a cell already known to be
      essential, it contains that cell's essential closure.
    """
    N = int(base_resolution)
    if ball_radius < 2.0 / N:
        raise ValueError("ball_radius must be >= 2 / base_resolution")
    if subsamples is None:
        subsamples = max(subsamples_for(m) for m in c.maps)
    labels = np.full((N, N), -1, dtype=np.int8)
    known_essential = np.zeros((N, N), dtype=bool)

    def stop(occ):
        if is_essential_set(ring(GridSet(N, occ))):
            return True
        if known_essential.any():
            inner = erode_by_ball(GridSet(N, occ), ball_radius).occupancy
            return bool((inner & known_essential).any())
        return False

    for i in range(N):
        for j in range(N):
            if labels[i, j] >= 0:
                continue
            seed = GridSet.ball(N, ((i + 0.5) / N, (j + 0.5) / N), ball_radius)
            occ, converged, stopped = _closure_fixpoint(c, seed, cap, subsamples, stop)
            if stopped:
                labels[i, j] = ESSENTIAL
                known_essential[i, j] = True
            elif converged:
                if is_essential_set(ring(GridSet(N, occ))):
                    labels[i, j] = ESSENTIAL
                    known_essential[i, j] = True
                else:
                    labels[i, j] = INESSENTIAL
                    inside = erode_by_ball(GridSet(N, occ), ball_radius).occupancy
                    labels[inside & (labels < 0)] = INESSENTIAL
            elif is_essential_set(ring(GridSet(N, occ))):
                labels[i, j] = ESSENTIAL
                known_essential[i, j] = True
            else:
                labels[i, j] = UNDECIDED
    return ClassificationMap(N, labels.astype(np.int64), float(ball_radius), int(cap))


def displacement_probe(c, words, base_grid, n_max):
    """max |f^n_x(p) - p| over words, base lattice points and 1 <= n <= n_max."""
    from .rotation import torus_lattice

    if n_max < 1:
        raise ValueError("n_max must be >= 1")
    starts = torus_lattice(base_grid)
    worst = 0.0
    for w in words:
        sym = np.repeat(w.symbols(n_max)[None, :], len(starts), axis=0)
        worst = max(worst, float(c.max_excursion(sym, starts).max()))
    return worst
