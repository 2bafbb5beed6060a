"""
Occupancy grids on the torus.

Cell ``(i, j)`` is ``[i/N, (i+1)/N) x [j/N, (j+1)/N)`` and is stored at
``occupancy[i, j]``, so the first array axis is x.  All neighbourhood
operations wrap around.
"""

from dataclasses import dataclass

import numpy as np
from scipy import ndimage


@dataclass(eq=False)
class GridSet:
    resolution: int
    occupancy: np.ndarray

    def __post_init__(self):
        occ = np.asarray(self.occupancy, dtype=bool)
        N = int(self.resolution)
        if N < 1 or occ.shape != (N, N):
            raise ValueError(f"occupancy must be {N}x{N}, got {occ.shape}")
        self.resolution = N
        self.occupancy = occ

    @classmethod
    def empty(cls, N):
        return cls(N, np.zeros((N, N), dtype=bool))

    @classmethod
    def full(cls, N):
        return cls(N, np.ones((N, N), dtype=bool))

    @classmethod
    def from_points(cls, N, points):
        occ = np.zeros((N, N), dtype=bool)
        i, j = cell_of(points, N)
        occ[i, j] = True
        return cls(N, occ)

    @classmethod
    def ball(cls, N, center, radius):
        """Cells meeting the closed Euclidean disk (torus metric)."""
        center = np.mod(np.asarray(center, dtype=float), 1.0)
        lo = np.arange(N) / N
        # distance from the centre coordinate to each cell interval, wrapped
        dx = _interval_distance(center[0], lo, 1.0 / N)
        dy = _interval_distance(center[1], lo, 1.0 / N)
        occ = dx[:, None] ** 2 + dy[None, :] ** 2 <= radius ** 2
        return cls(N, occ)

    def __eq__(self, other):
        return (isinstance(other, GridSet) and self.resolution == other.resolution
                and np.array_equal(self.occupancy, other.occupancy))

    def __or__(self, other):
        _same(self, other)
        return GridSet(self.resolution, self.occupancy | other.occupancy)

    def __and__(self, other):
        _same(self, other)
        return GridSet(self.resolution, self.occupancy & other.occupancy)

    def __invert__(self):
        return GridSet(self.resolution, ~self.occupancy)

    def __le__(self, other):
        _same(self, other)
        return bool(np.all(other.occupancy | ~self.occupancy))

    def count(self):
        return int(self.occupancy.sum())

    def is_full(self):
        return bool(self.occupancy.all())

    def is_empty(self):
        return not self.occupancy.any()

    def cells(self):
        return np.argwhere(self.occupancy)

    def centers(self):
        return (self.cells() + 0.5) / self.resolution

    def contains_points(self, points):
        i, j = cell_of(points, self.resolution)
        return self.occupancy[i, j]

    def copy(self):
        return GridSet(self.resolution, self.occupancy.copy())


def _same(a, b):
    if a.resolution != b.resolution:
        raise ValueError("grid resolutions differ")


def _interval_distance(c, lo, width):
    d = np.maximum(np.maximum(lo - c, c - (lo + width)), 0.0)
    d_plus = np.maximum(np.maximum(lo + 1.0 - c, c - (lo + 1.0 + width)), 0.0)
    d_minus = np.maximum(np.maximum(lo - 1.0 - c, c - (lo - 1.0 + width)), 0.0)
    return np.minimum(d, np.minimum(d_plus, d_minus))


def cell_of(points, N):
    p = np.mod(np.asarray(points, dtype=float).reshape(-1, 2), 1.0)
    idx = np.floor(p * N).astype(np.int64)
    # mod can return exactly 1.0 for tiny negative inputs
    idx = np.clip(idx, 0, N - 1)
    return idx[:, 0], idx[:, 1]


def ring(s):
    """Dilate by one ring of cells (8-neighbourhood), wrapping."""
    return GridSet(s.resolution, ndimage.maximum_filter(s.occupancy, size=3, mode="wrap"))


def ball_footprint(radius, N):
    """
    Cell offsets whose squares come within ``radius`` of the origin cell:
    the minimal square-to-square distance for offset (di, dj) is
    hypot(max(|di| - 1, 0), max(|dj| - 1, 0)) / N.
    """
    r = int(np.floor(radius * N)) + 1
    k = np.arange(-r, r + 1)
    gap = np.maximum(np.abs(k) - 1, 0) / N
    return gap[:, None] ** 2 + gap[None, :] ** 2 <= radius ** 2


def dilate_eps(s, eps):
    """All cells within Euclidean distance eps of an occupied cell."""
    fp = ball_footprint(eps, s.resolution)
    if fp.shape[0] > s.resolution:
        # the footprint wraps onto itself; fall back to an FFT-free loop
        return _dilate_large(s, fp)
    return GridSet(s.resolution, ndimage.maximum_filter(s.occupancy, footprint=fp, mode="wrap"))


def _dilate_large(s, fp):
    N = s.resolution
    r = fp.shape[0] // 2
    out = np.zeros_like(s.occupancy)
    for di, dj in np.argwhere(fp) - r:
        out |= np.roll(s.occupancy, (di, dj), axis=(0, 1))
    return GridSet(N, out)


def erode_by_ball(s, radius):
    """Cells c whose seed ball (cells meeting B(center(c), radius)) lies in s."""
    N = s.resolution
    seed = GridSet.ball(N, (0.5 / N, 0.5 / N), radius).occupancy
    offs = np.argwhere(seed)
    offs = np.where(offs > N // 2, offs - N, offs)
    out = s.occupancy.copy()
    for di, dj in offs:
        out &= np.roll(s.occupancy, (-di, -dj), axis=(0, 1))
    return GridSet(N, out)


def subsample_offsets(subsamples):
    """Sub-cell sample positions in units of one cell, centred in sub-cells."""
    t = (np.arange(subsamples) + 0.5) / subsamples
    u, v = np.meshgrid(t, t, indexing="ij")
    return np.column_stack([u.ravel(), v.ravel()])


def sampled_image(m, s, subsamples, cells=None):
    """
    Cells hit by the images of ``subsamples^2`` points per occupied cell
    (no dilation).  ``cells`` restricts the sources to the given (k, 2)
    index array.
    """
    N = s.resolution
    if cells is None:
        cells = s.cells()
    out = np.zeros((N, N), dtype=bool)
    if len(cells) == 0:
        return GridSet(N, out)
    offs = subsample_offsets(subsamples)
    # chunk so the point array stays modest for dense sets
    per = max(1, 2**20 // len(offs))
    for lo in range(0, len(cells), per):
        pts = (cells[lo:lo + per, None, :] + offs[None, :, :]).reshape(-1, 2) / N
        i, j = cell_of(m(pts), N)
        out[i, j] = True
    return GridSet(N, out)


def grid_image(m, s, subsamples):
    """Outer approximation of m(s): sampled image dilated by one ring."""
    if subsamples < 2:
        raise ValueError("subsamples must be >= 2")
    return ring(sampled_image(m, s, subsamples))


def subsamples_for(m, safety=1.25, minimum=2):
    """
    Sub-grid size making ``grid_image`` a true outer approximation.

    Sub-cell centres are within h / (s sqrt 2) of any point of a cell of
    side h, so images are within L h / (s sqrt 2) of a sampled image; the
    one-ring dilation covers distance h.  Hence s >= L / sqrt 2 suffices,
    with L a (sampled, so inflated by ``safety``) Lipschitz constant.
    """
    from .torusmap import lipschitz_estimate

    L = safety * lipschitz_estimate(m)
    return max(minimum, int(np.ceil(L / np.sqrt(2.0))))


def to_pgm(labels):
    """
    Plain-text graymap of an integer label grid; the top row is the largest
    y so the picture matches the usual axes.
    """
    labels = np.asarray(labels)
    N = labels.shape[0]
    top = int(labels.max()) if labels.size else 0
    rows = [" ".join(str(int(v)) for v in labels[:, j]) for j in range(N - 1, -1, -1)]
    return f"P2\n{labels.shape[0]} {labels.shape[1]}\n{max(top, 2)}\n" + "\n".join(rows) + "\n"


def from_pgm(text):
    tokens = text.split()
    if not tokens or tokens[0] != "P2":
        raise ValueError("not a plain graymap")
    w, h = int(tokens[1]), int(tokens[2])
    vals = np.array([int(t) for t in tokens[4:]], dtype=np.int64)
    if len(vals) != w * h:
        raise ValueError("graymap size mismatch")
    grid = vals.reshape(h, w)[::-1].T
    return grid
