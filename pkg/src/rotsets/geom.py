"""
Planar geometry for rotation-vector point clouds.

Clouds are ``(n, 2)`` float arrays; polygons are ``(k, 2)`` arrays of
vertices in counterclockwise order.  Degenerate hulls (one or two distinct
points) are legal polygons.
"""

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components
from scipy.spatial import ConvexHull, QhullError, cKDTree

TOL = 1e-9


def as_cloud(points):
    cloud = np.asarray(points, dtype=float).reshape(-1, 2)
    if not np.all(np.isfinite(cloud)):
        raise ValueError("non-finite coordinates in point cloud")
    return cloud


def _pack(keys):
    """Row-wise unique id for a (n, 2) array of nonnegative integer cell keys."""
    return keys[:, 0] * (int(keys[:, 1].max()) + 1) + keys[:, 1]


def _cross(o, a, b):
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])


def convex_hull(points):
    """
    Convex hull by Andrew's monotone chain.

    Collinear and duplicate points are dropped, so the returned vertices are
    in strictly convex position, counterclockwise, starting from the
    lexicographically smallest point.

    Parameters
    ----------
    points : array_like, shape (n, 2)

    Returns
    -------
    numpy.ndarray, shape (k, 2)
        Hull vertices, ``1 <= k <= n``.
    """
    cloud = as_cloud(points)
    if len(cloud) == 0:
        raise ValueError("empty input")
    pts = np.unique(_prefilter(cloud), axis=0)  # sorted lexicographically
    if len(pts) <= 2:
        return pts
    pts_list = [tuple(p) for p in pts]

    # exact orientation here; the tolerance is a distance, applied below
    lower = []
    for p in pts_list:
        while len(lower) >= 2 and _cross(lower[-2], lower[-1], p) <= 0.0:
            lower.pop()
        lower.append(p)
    upper = []
    for p in reversed(pts_list):
        while len(upper) >= 2 and _cross(upper[-2], upper[-1], p) <= 0.0:
            upper.pop()
        upper.append(p)
    hull = lower[:-1] + upper[:-1]
    if len(hull) <= 1:
        return np.array([pts_list[0], pts_list[-1]], dtype=float)
    return np.array(_drop_near_collinear(hull), dtype=float)


def _drop_near_collinear(hull):
    # remove vertices within TOL of the segment joining their neighbours,
    # then restart the ring at the lexicographically smallest vertex
    k, clean = 0, 0
    while len(hull) > 2 and clean < len(hull):
        k %= len(hull)
        u, v, w = hull[k - 1], hull[k], hull[(k + 1) % len(hull)]
        if _segment_distance(np.array([v]), np.array(u), np.array(w))[0] <= TOL:
            del hull[k]
            k, clean = max(k - 1, 0), 0
        else:
            k, clean = k + 1, clean + 1
    start = hull.index(min(hull))
    return hull[start:] + hull[:start]


def _prefilter(pts):
    # Qhull finds the candidate vertices quickly; the chain above then applies
    # the collinearity tolerance and fixes the vertex order.  Flat or tiny
    # inputs make Qhull fail, and for those the two extremes along the
    # principal direction already span the hull.
    if len(pts) < 64:
        return pts
    try:
        idx = ConvexHull(pts).vertices
    except QhullError:
        centred = pts - pts.mean(axis=0)
        direction = np.linalg.svd(centred, full_matrices=False)[2][0]
        proj = centred @ direction
        spread = np.abs(centred @ np.array([-direction[1], direction[0]])).max()
        if spread > TOL:
            return pts
        idx = [int(np.argmin(proj)), int(np.argmax(proj))]
    return pts[np.sort(np.asarray(idx))]


def hull_contains(hull, points, tol=TOL):
    """Boolean mask of points inside or on a convex polygon (within tol)."""
    hull = as_cloud(hull)
    pts = as_cloud(points)
    if len(hull) == 1:
        return np.linalg.norm(pts - hull[0], axis=1) <= tol
    if len(hull) == 2:
        return _segment_distance(pts, hull[0], hull[1]) <= tol
    inside = np.ones(len(pts), dtype=bool)
    for k in range(len(hull)):
        a, b = hull[k], hull[(k + 1) % len(hull)]
        edge = b - a
        cr = edge[0] * (pts[:, 1] - a[1]) - edge[1] * (pts[:, 0] - a[0])
        inside &= cr >= -tol * max(1.0, np.hypot(*edge))
    return inside


def _segment_distance(pts, a, b):
    d = b - a
    dd = d @ d
    if dd == 0.0:
        # endpoints equal up to underflow
        return np.linalg.norm(pts - a, axis=1)
    t = np.clip(((pts - a) @ d) / dd, 0.0, 1.0)
    return np.linalg.norm(pts - (a + t[:, None] * d), axis=1)


def polygon_area(poly):
    poly = as_cloud(poly)
    if len(poly) < 3:
        return 0.0
    x, y = poly[:, 0], poly[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1)))


def hausdorff(a, b):
    """Symmetric Hausdorff distance between two finite point sets."""
    a = as_cloud(a)
    b = as_cloud(b)
    if len(a) == 0 or len(b) == 0:
        raise ValueError("empty input")
    d_ab = cKDTree(b).query(a)[0].max()
    d_ba = cKDTree(a).query(b)[0].max()
    return float(max(d_ab, d_ba))


def directed_distance(a, b):
    """max over points of ``a`` of the distance to the set ``b``."""
    a = as_cloud(a)
    b = as_cloud(b)
    if len(a) == 0 or len(b) == 0:
        raise ValueError("empty input")
    return float(cKDTree(b).query(a)[0].max())


def eps_components(points, eps, stop_when_connected=False):
    """
    Component labels of the graph joining points at distance <= eps.

    Points are bucketed into square cells of side ``eps / sqrt(2)``; every
    cell is a clique, so only pairs of distinct cells (at most two cells
    apart) need an explicit nearest-neighbour query.  A union-find over
    cells skips queries between cells already known to be joined, which
    keeps dense clouds cheap.

    Returns
    -------
    labels : numpy.ndarray of int, shape (n,)
        Labels ``0..k-1`` numbered by first occurrence.  With
        ``stop_when_connected`` the labels are only meaningful when a single
        component is found.
    """
    cloud = as_cloud(points)
    if eps <= 0:
        raise ValueError("eps must be positive")
    if len(cloud) == 0:
        raise ValueError("empty input")
    side = eps / np.sqrt(2.0) * (1.0 - 1e-12)
    keys = np.floor((cloud - cloud.min(axis=0)) / side).astype(np.int64)
    _, first, inverse = np.unique(_pack(keys), return_index=True, return_inverse=True)
    cells = keys[first]
    inverse = inverse.ravel()
    n_cells = len(cells)
    if n_cells == 1:
        return np.zeros(len(cloud), dtype=np.int64)

    order = np.argsort(inverse, kind="stable")
    starts = np.searchsorted(inverse[order], np.arange(n_cells + 1))
    members = [order[starts[c]:starts[c + 1]] for c in range(n_cells)]
    lookup = {tuple(c): i for i, c in enumerate(cells)}

    parent = list(range(n_cells))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    trees = {}

    def tree(c):
        if c not in trees:
            trees[c] = cKDTree(cloud[members[c]])
        return trees[c]

    offsets = [(di, dj) for di in range(-2, 3) for dj in range(-2, 3) if (di, dj) > (0, 0)]
    components = n_cells
    for u in range(n_cells):
        cu = cells[u]
        for di, dj in offsets:
            v = lookup.get((cu[0] + di, cu[1] + dj))
            if v is None:
                continue
            ru, rv = find(u), find(v)
            if ru == rv:
                continue
            small, big = (u, v) if len(members[u]) <= len(members[v]) else (v, u)
            dist = tree(big).query(cloud[members[small]], distance_upper_bound=eps * (1 + 1e-12))[0]
            if np.isfinite(dist).any():
                parent[ru] = rv
                components -= 1
                if components == 1 and stop_when_connected:
                    return np.zeros(len(cloud), dtype=np.int64)
    roots = np.array([find(i) for i in range(n_cells)])
    _, first, label = np.unique(roots[inverse], return_index=True, return_inverse=True)
    # renumber by first occurrence so labels do not depend on cell ordering
    rank = np.argsort(np.argsort(first))
    return rank[label.ravel()].astype(np.int64)


def eps_connected(points, eps):
    """True iff the graph joining points at distance <= eps is connected."""
    cloud = as_cloud(points)
    if len(cloud) <= 1:
        if len(cloud) == 0:
            raise ValueError("empty input")
        return True
    return bool(eps_components(cloud, eps, stop_when_connected=True).max() == 0)


def eps_connected_bruteforce(points, eps):
    """Reference implementation via all pairs within eps; quadratic in the worst case."""
    cloud = as_cloud(points)
    if len(cloud) <= 1:
        return True
    pairs = cKDTree(cloud).query_pairs(eps, output_type="ndarray")
    n = len(cloud)
    graph = coo_matrix((np.ones(len(pairs)), (pairs[:, 0], pairs[:, 1])), shape=(n, n))
    return connected_components(graph, directed=False)[0] == 1


def diameter(points):
    hull = convex_hull(points)
    if len(hull) == 1:
        return 0.0
    diff = hull[:, None, :] - hull[None, :, :]
    return float(np.sqrt((diff ** 2).sum(-1)).max())


def probe_grid(hull, spacing):
    """Grid points of the given spacing lying inside (or on) a convex polygon."""
    hull = as_cloud(hull)
    lo, hi = hull.min(axis=0), hull.max(axis=0)
    xs = np.arange(lo[0], hi[0] + 0.5 * spacing, spacing)
    ys = np.arange(lo[1], hi[1] + 0.5 * spacing, spacing)
    gx, gy = np.meshgrid(xs, ys, indexing="ij")
    grid = np.column_stack([gx.ravel(), gy.ravel()])
    return grid[hull_contains(hull, grid)]


def convexity_defect(points, probe_spacing):
    """
    Largest distance from a probe point inside the hull to the cloud.

    Probes lie on a ``probe_spacing`` grid clipped to the convex hull.
    Zero for degenerate hulls and, up to sampling resolution, for clouds
    that densely fill their hull.
    """
    cloud = as_cloud(points)
    if len(cloud) < 3:
        raise ValueError("convexity defect needs at least 3 points")
    if probe_spacing <= 0:
        raise ValueError("probe_spacing must be positive")
    hull = convex_hull(cloud)
    if len(hull) < 3 or abs(polygon_area(hull)) <= TOL:
        return 0.0
    probes = np.vstack([probe_grid(hull, probe_spacing), hull])
    return float(cKDTree(cloud).query(probes)[0].max())


def thin(points, resolution):
    """Keep the first point of every ``resolution``-sized square cell."""
    cloud = as_cloud(points)
    if len(cloud) == 0 or resolution <= 0:
        return cloud
    keys = np.floor((cloud - cloud.min(axis=0)) / resolution).astype(np.int64)
    _, first = np.unique(_pack(keys), return_index=True)
    return cloud[np.sort(first)]


def median_nn_spacing(points):
    cloud = as_cloud(points)
    if len(cloud) < 2:
        return 0.0
    d = cKDTree(cloud).query(cloud, k=2)[0][:, 1]
    return float(np.median(d))


def sample_box(lo, hi, spacing):
    """Closed grid sample of an axis-aligned box; handy for target sets."""
    xs = np.linspace(lo[0], hi[0], int(round((hi[0] - lo[0]) / spacing)) + 1)
    ys = np.linspace(lo[1], hi[1], int(round((hi[1] - lo[1]) / spacing)) + 1)
    gx, gy = np.meshgrid(xs, ys, indexing="ij")
    return np.column_stack([gx.ravel(), gy.ravel()])
