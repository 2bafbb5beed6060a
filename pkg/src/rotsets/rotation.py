"""
Rotation-set estimators for locally constant cocycles.

``estimate_mz`` samples the sets D_n = {rho_n(x, p)} over a plan of words
and base points and takes the union over the upper half of the plan's
``n_list`` as a finite surrogate of the lim sup.  ``per_word_rotation_set``
handles one periodic word by iterating the composed map along its period,
and ``periodic_union`` collects those over all periodic words up to a
given period.

Every cloud is canonicalised (sorted, de-duplicated at 1e-6) so results
do not depend on evaluation order or thread count.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree

from . import geom
from .shift import BlockWord, PeriodicWord, RandomWord, periodic_words_upto
from .torusmap import Compose, identity

DEDUP_RESOLUTION = 1e-6
# diagnostics run at no finer than diameter / SCALE_DIVISIONS
SCALE_DIVISIONS = 100
CONNECTIVITY_FLOOR = 1e-3
# gap-directed refinement: targets per round, pool kept per target,
# candidates per pool member and step, search steps, jitter shrink factor
REFINE_TARGETS = 64
REFINE_CELLS = 16
REFINE_POOL = 8
REFINE_CANDIDATES = 16
REFINE_STEPS = 20
REFINE_SHRINK = 0.6
# bridging: sources per minor component, bisection depth and chain length
BRIDGE_SOURCES = 4
BISECT_DEPTH = 52
BISECT_POINTS = 4096
_MIN_BLOCK = 256


def torus_lattice(G):
    """
    G x G base points on the torus, one per grid cell.

    Row ``j`` is shifted in x and column ``i`` in y by a sub-cell offset,
    so each coordinate projection has about G^2/2 distinct values instead of
    G.  For even G the offsets repeat with period G/2, which keeps the
    half-period points {0, 1/2}^2 on the lattice.

    Returns
    -------
    numpy.ndarray, shape (G*G, 2)
        Points in [0, 1)^2, ordered with the x index slowest.
    """
    if G < 1:
        raise ValueError("grid must be >= 1")
    k = np.arange(G)
    if G % 2 == 0:
        half = G // 2
        offset = (k % half) / (half * G)
    else:
        offset = k / (G * G)
    i, j = np.meshgrid(k, k, indexing="ij")
    x = i / G + offset[j]
    y = j / G + offset[i]
    return np.column_stack([x.ravel(), y.ravel()])


@dataclass
class SamplingPlan:
    """
    Words, base lattice and time horizons for D_n sampling.

    ``refine_rounds`` > 0 enables gap-directed refinement: extra base points
    are searched near existing samples whose rotation vectors lie closest to
    uncovered parts of the current hull.  Every added point is a genuine
    rho_n value of a plan word, so refinement only densifies the sample.
    """

    base_grid: int
    words: list
    n_list: list
    refine_rounds: int = 0
    seed: int = 0

    def __post_init__(self):
        self.words = list(self.words)
        self.n_list = [int(n) for n in self.n_list]
        if self.base_grid < 1:
            raise ValueError("base_grid must be >= 1")
        if not self.words:
            raise ValueError("plan needs at least one word")
        if not self.n_list or any(n < 1 for n in self.n_list):
            raise ValueError("n_list must be nonempty with n >= 1")
        if any(b <= a for a, b in zip(self.n_list, self.n_list[1:])):
            raise ValueError("n_list must be strictly increasing")
        if self.refine_rounds < 0:
            raise ValueError("refine_rounds must be >= 0")

    @property
    def tail(self):
        """Upper half of n_list (the middle entry included for odd lengths)."""
        return self.n_list[len(self.n_list) // 2:]

    def halved(self):
        """Same plan restricted to n <= n_max / 2, or None if that is empty."""
        ns = [n for n in self.n_list if 2 * n <= self.n_list[-1]]
        if not ns:
            return None
        return SamplingPlan(self.base_grid, self.words, ns, self.refine_rounds, self.seed)


def default_plan(alphabet_size=2, n_max=200, base_grid=32, max_period=6, seeds_per_bias=16,
                 refine_rounds=4, seed=0):
    """
    Mixed word plan: all periodic words up to ``max_period`` (capped so the
    count stays near 200), block words alternating runs of two symbols, and
    biased random words.  Uniform random words alone concentrate symbol
    frequencies and under-sample the extremes.

    n_list is n_max / 8, n_max / 4, n_max / 2, n_max; the estimate uses the
    last two.  Four rounds of gap-directed refinement are on by default:
    lattice sampling misses orbits that linger near parabolic fixed points,
    and those carry the extreme rotation vectors.
    """
    words = []
    period = max_period
    while period > 1 and alphabet_size ** period > 200:
        period -= 1
    words += periodic_words_upto(alphabet_size, period)
    runs = (1, 2, 5, 10, 25, 50)
    for a in range(alphabet_size):
        for b in range(alphabet_size):
            if a == b:
                continue
            for ra in runs:
                for rb in runs:
                    if ra != rb or ra == 1:
                        words.append(BlockWord(((a, ra), (b, rb))))
    biases = [k / 10 for k in range(1, 10)]
    counter = 0
    for q in biases:
        for _ in range(seeds_per_bias):
            for a in range(alphabet_size):
                bias = np.full(alphabet_size, (1.0 - q) / max(1, alphabet_size - 1))
                bias[a] = q
                if alphabet_size == 1:
                    bias = np.ones(1)
                bias = tuple(bias / bias.sum())
                words.append(RandomWord(seed * 1_000_003 + counter, bias))
                counter += 1
                if alphabet_size == 2:
                    break
    if alphabet_size == 1:
        words = [PeriodicWord((0,))]
    n_list = sorted({max(1, n_max // 8), max(1, n_max // 4), max(1, n_max // 2), n_max})
    return SamplingPlan(base_grid, words, n_list, refine_rounds, seed)


@dataclass
class RotSetEstimate:
    """
    Rotation-vector cloud with hull and shape diagnostics.

    ``meta`` (optional) holds one row ``(n, word_id, base_x, base_y)`` per
    cloud point.  The diagnostics are recomputed by ``from_cloud``; build
    new estimates rather than mutating ``cloud``.
    """

    cloud: np.ndarray
    hull: np.ndarray
    n_used: tuple
    connectivity_eps: float
    is_connected: bool
    convexity_defect: float
    hausdorff_to_half_n: float
    meta: np.ndarray = field(default=None, repr=False)
    n_samples: int = 0

    @classmethod
    def from_cloud(cls, cloud, n_used=(), half_cloud=None, meta=None):
        n_samples = len(geom.as_cloud(cloud))
        cloud, meta = canonical_cloud(cloud, meta)
        hull = geom.convex_hull(cloud)
        eps = connectivity_scale(cloud)
        if eps > 0:
            connected = geom.eps_connected(cloud, eps)
        else:
            connected = True
        if len(cloud) >= 3 and eps > 0:
            defect = geom.convexity_defect(cloud, eps)
        else:
            defect = 0.0
        if half_cloud is not None and len(half_cloud):
            h_half = geom.hausdorff(cloud, half_cloud)
        else:
            h_half = float("nan")
        return cls(cloud, hull, tuple(int(n) for n in n_used), float(eps), bool(connected),
                   float(defect), float(h_half), meta, n_samples)

    def summary(self):
        return {
            "points": int(len(self.cloud)),
            "samples_before_dedup": int(self.n_samples),
            "hull_vertices": [[float(x), float(y)] for x, y in self.hull],
            "n_used": list(self.n_used),
            "connectivity_eps": self.connectivity_eps,
            "is_connected": self.is_connected,
            "convexity_defect": self.convexity_defect,
            "hausdorff_to_half_n": None if np.isnan(self.hausdorff_to_half_n) else self.hausdorff_to_half_n,
        }


def canonical_cloud(cloud, meta=None):
    """Sort lexicographically and drop points equal at 1e-6 resolution (smallest kept)."""
    cloud = geom.as_cloud(cloud)
    if len(cloud) == 0:
        raise ValueError("empty input")
    key = np.round(cloud / DEDUP_RESOLUTION).astype(np.int64)
    # exact coordinates break remaining ties, so the kept representative
    # does not depend on input order
    cols = [cloud[:, 1], cloud[:, 0], key[:, 1], key[:, 0]]
    if meta is not None:
        meta = np.asarray(meta, dtype=float)
        cols = cols[:2] + [meta[:, k] for k in range(meta.shape[1] - 1, -1, -1)] + cols[2:]
    order = np.lexsort(cols)
    key = key[order]
    keep = np.ones(len(order), dtype=bool)
    keep[1:] = np.any(key[1:] != key[:-1], axis=1)
    sel = order[keep]
    return cloud[sel], (meta[sel] if meta is not None else None)


def connectivity_scale(cloud):
    """
    Twice the median nearest-neighbour spacing, measured on the cloud
    thinned to diameter/100 so that dense clusters do not shrink the scale
    below what the sparse parts of the sample can resolve.  Never below
    ``CONNECTIVITY_FLOOR``: clouds that are a point up to round-off and
    finite-K error should not split into specks.
    """
    if len(cloud) < 2:
        return 0.0
    diam = geom.diameter(cloud)
    if diam == 0:
        return 0.0
    sparse = geom.thin(cloud, diam / SCALE_DIVISIONS)
    if len(sparse) < 2:
        sparse = cloud
    return max(2.0 * geom.median_nn_spacing(sparse), CONNECTIVITY_FLOOR)


def advance_rows(c, symbols, starts, record, threads=1):
    """``c.advance`` split into contiguous row blocks across threads; same result."""
    rows = len(starts)
    if not threads or threads <= 1 or rows < 2 * _MIN_BLOCK:
        return c.advance(symbols, starts, record)
    parts = min(threads, rows // _MIN_BLOCK)
    edges = np.linspace(0, rows, parts + 1).astype(int)

    def job(k):
        lo, hi = edges[k], edges[k + 1]
        return c.advance(symbols[lo:hi], starts[lo:hi], record)

    with ThreadPoolExecutor(max_workers=parts) as pool:
        blocks = list(pool.map(job, range(parts)))
    return np.concatenate(blocks, axis=1)


def _symbol_table(words, n_max):
    return np.stack([w.symbols(n_max) for w in words])


def _evaluate(c, table, meta, threads):
    """rho_n for rows of meta = (n, word_id, base_x, base_y), grouped by n."""
    out = np.empty((len(meta), 2))
    for n in np.unique(meta[:, 0]):
        sel = np.flatnonzero(meta[:, 0] == n)
        n = int(n)
        bases = meta[sel, 2:4]
        sym = table[meta[sel, 1].astype(np.int64), :n]
        end = advance_rows(c, sym, bases, [n], threads)[0]
        out[sel] = (end - bases) / n
    return out


def _lattice_meta(plan, ns):
    starts = torus_lattice(plan.base_grid)
    W, P = len(plan.words), len(starts)
    n_col = np.repeat(np.asarray(ns, dtype=float), W * P)
    w_col = np.tile(np.repeat(np.arange(W, dtype=float), P), len(ns))
    b = np.tile(starts, (len(ns) * W, 1))
    return np.column_stack([n_col, w_col, b])


def sample_Dn(c, plan, n, threads=1, with_meta=False):
    """{rho_n(w, p) : w in plan.words, p in the base lattice}, in plan order."""
    if n not in plan.n_list:
        raise ValueError(f"n={n} is not in the plan's n_list")
    table = _symbol_table(plan.words, n)
    meta = _lattice_meta(plan, [n])
    cloud = _evaluate(c, table, meta, threads)
    return (cloud, meta) if with_meta else cloud


def _local_search(c, plan, table, targets, ccloud, cmeta, key, threads):
    """
    Shrinking random search over base points toward each target.

    The pool for a target starts as its nearest cloud samples; candidates
    keep the word and n of their pool member.  Returns every evaluated
    (value, meta) pair.
    """
    tree = cKDTree(ccloud)
    T = len(targets)
    pool = min(REFINE_POOL, len(ccloud))
    src = tree.query(targets, k=pool)[1].reshape(T, pool)
    pool_meta = cmeta[src]
    pool_val = ccloud[src]
    sigma = 0.5 / plan.base_grid
    added_v, added_m = [], []
    for step in range(REFINE_STEPS):
        rng = np.random.default_rng([plan.seed, *key, step])
        jitter = sigma * rng.standard_normal((T, pool, REFINE_CANDIDATES, 2))
        cand = np.repeat(pool_meta[:, :, None, :], REFINE_CANDIDATES, axis=2)
        cand[..., 2:4] = np.mod(cand[..., 2:4] + jitter, 1.0)
        cand = cand.reshape(-1, 4)
        vals = _evaluate(c, table, cand, threads)
        added_v.append(vals)
        added_m.append(cand)
        all_m = np.concatenate([pool_meta, cand.reshape(T, -1, 4)], axis=1)
        all_v = np.concatenate([pool_val, vals.reshape(T, -1, 2)], axis=1)
        dist = np.linalg.norm(all_v - targets[:, None, :], axis=2)
        keep = np.argsort(dist, axis=1, kind="stable")[:, :pool]
        pool_meta = np.take_along_axis(all_m, keep[:, :, None], axis=1)
        pool_val = np.take_along_axis(all_v, keep[:, :, None], axis=1)
        sigma *= REFINE_SHRINK
    return added_v, added_m


def _gap_targets(ccloud, plan, r):
    hull = geom.convex_hull(ccloud)
    if len(hull) < 3:
        return None
    diam = geom.diameter(ccloud)
    spacing = max(connectivity_scale(ccloud), diam / (2 * SCALE_DIVISIONS))
    probes = geom.probe_grid(hull, spacing)
    if len(probes) == 0:
        return None
    d = cKDTree(ccloud).query(probes)[0]
    gaps = probes[d > spacing]
    if len(gaps) == 0:
        return None
    # one target per coarse cell so unreachable pockets cannot absorb the
    # whole budget
    targets = geom.thin(gaps, diam / REFINE_CELLS)
    if len(targets) > REFINE_TARGETS:
        pick = np.random.default_rng([plan.seed, 0, r]).choice(len(targets), REFINE_TARGETS, replace=False)
        targets = targets[np.sort(pick)]
    return targets


def _bisect_chain(c, table, meta_a, meta_b, gap, threads):
    """
    Values along the base-point segment between two samples of the same
    (word, n), with midpoints inserted until consecutive values are closer
    than ``gap`` or the segment reaches double-precision resolution.
    """
    n, w = meta_a[0], meta_a[1]
    a = meta_a[2:4]
    step = np.mod(meta_b[2:4] - a + 0.5, 1.0) - 0.5
    ts = np.array([0.0, 1.0])
    one = np.array([[n, w, 0.0, 0.0]])
    vals = _evaluate(c, table, np.vstack([meta_a, meta_b]), threads)
    new_m, new_v = [], []
    for _ in range(BISECT_DEPTH):
        jump = np.linalg.norm(np.diff(vals, axis=0), axis=1)
        wide = np.flatnonzero((jump >= gap) & (np.diff(ts) > 1e-15))
        if len(wide) == 0 or len(ts) > BISECT_POINTS:
            break
        mids = 0.5 * (ts[wide] + ts[wide + 1])
        m = np.repeat(one, len(mids), axis=0)
        m[:, 2:4] = np.mod(a + mids[:, None] * step, 1.0)
        v = _evaluate(c, table, m, threads)
        new_m.append(m)
        new_v.append(v)
        ts = np.insert(ts, wide + 1, mids)
        vals = np.insert(vals, wide + 1, v, axis=0)
    return new_v, new_m


def _bridge(c, plan, table, ccloud, cmeta, eps, threads):
    """Bisection chains from minor eps-components toward the largest one."""
    labels = geom.eps_components(ccloud, eps)
    if labels.max() == 0:
        return None
    sizes = np.bincount(labels)
    main = int(np.argmax(sizes))
    in_main = labels == main
    # periodic base-point trees for each (n, word) present in the main part
    keys = cmeta[:, :2]
    trees = {}
    added_v, added_m = [], []
    others = [k for k in np.argsort(-sizes, kind="stable") if k != main][:REFINE_TARGETS]
    for k in others:
        idx = np.flatnonzero(labels == k)[:BRIDGE_SOURCES]
        for i in idx:
            key = (cmeta[i, 0], cmeta[i, 1])
            if key not in trees:
                sel = np.flatnonzero(in_main & (keys[:, 0] == key[0]) & (keys[:, 1] == key[1]))
                trees[key] = (sel, cKDTree(cmeta[sel, 2:4], boxsize=1.0) if len(sel) else None)
            sel, tree = trees[key]
            if tree is None:
                continue
            j = sel[tree.query(np.mod(cmeta[i, 2:4], 1.0))[1]]
            v, m = _bisect_chain(c, table, cmeta[i], cmeta[j], 0.5 * eps, threads)
            added_v += v
            added_m += m
    return added_v, added_m


def refine_gaps(c, plan, table, cloud, meta, threads=1):
    """
    Gap-directed refinement of a sampled cloud.

    Each of ``plan.refine_rounds`` rounds places probes on a grid inside
    the current hull, takes probes far from the cloud as targets (one per
    coarse cell), and runs a shrinking random local search over base
    points around the samples nearest each target (same word, same n).
    Up to as many further rounds then bisect base-point segments from
    each minor eps-component toward a main-component sample of the same
    word and n; rho_n is continuous in the base point, so the chain of
    values closes the gap unless the map stretches it below double
    precision.  These rounds stop once the cloud is connected.  Every evaluated candidate joins the cloud; targets need
    not be reachable.
    """
    for r in range(plan.refine_rounds):
        ccloud, cmeta = canonical_cloud(cloud, meta)
        targets = _gap_targets(ccloud, plan, r)
        if targets is None:
            break
        vals, metas = _local_search(c, plan, table, targets, ccloud, cmeta, (0, r), threads)
        cloud = np.vstack([cloud] + vals)
        meta = np.vstack([meta] + metas)
    for r in range(plan.refine_rounds):
        ccloud, cmeta = canonical_cloud(cloud, meta)
        eps = connectivity_scale(ccloud)
        if eps <= 0:
            break
        found = _bridge(c, plan, table, ccloud, cmeta, eps, threads)
        if found is None:
            break
        vals, metas = found
        if not vals:
            break
        cloud = np.vstack([cloud] + vals)
        meta = np.vstack([meta] + metas)
    return cloud, meta


def sample_union(c, plan, ns, threads=1):
    """Union of D_n over ``ns`` (after refinement), as (cloud, meta)."""
    table = _symbol_table(plan.words, max(ns))
    meta = _lattice_meta(plan, ns)
    cloud = _evaluate(c, table, meta, threads)
    return refine_gaps(c, plan, table, cloud, meta, threads)


def estimate_mz(c, plan, threads=1):
    """
    Union of D_n over the upper half of ``plan.n_list``.

    ``hausdorff_to_half_n`` compares against the same construction run on
    the plan restricted to n <= n_max / 2.
    """
    ns = plan.tail
    cloud, meta = sample_union(c, plan, ns, threads)
    half = plan.halved()
    half_cloud = None
    if half is not None:
        half_cloud = canonical_cloud(sample_union(c, half, half.tail, threads)[0])[0]
    return RotSetEstimate.from_cloud(cloud, ns, half_cloud, meta)


def reduce_word(c, symbols):
    """Free reduction of a symbol sequence by the cocycle's inverse pairs."""
    out = []
    for s in symbols:
        s = int(s)
        if out and c.partner[s] == out[-1]:
            out.pop()
        else:
            out.append(s)
    return out


def cyclic_reduce(c, symbols):
    out = reduce_word(c, symbols)
    while len(out) >= 2 and c.partner[out[0]] == out[-1]:
        out = out[1:-1]
    return out


def composed_map(c, symbols):
    """Lift of f_{x_{n-1}} o ... o f_{x_0} as a single LiftedMap."""
    syms = [int(s) for s in symbols]
    if not syms:
        return identity()
    return Compose(tuple(c.maps[s] for s in syms))


def per_word_rotation_set(c, word, K=10_000, grid=16):
    """
    Rotation vectors of the composed period map g = f^n_x, scaled by 1/n.

    Returns ``(g^K(p) - p) / (K n)`` over the base lattice; the tail
    diagnostic compares with K // 2.  Words are freely reduced (and
    cyclically, which only conjugates g) before composing.
    """
    if K < 1:
        raise ValueError("K must be >= 1")
    if not isinstance(word, PeriodicWord):
        raise TypeError("per_word_rotation_set needs a PeriodicWord")
    n = word.period
    syms = cyclic_reduce(c, word.symbols_) if c.cancels else list(word.symbols_)
    g = composed_map(c, syms)
    starts = torus_lattice(grid)
    p = starts.copy()
    half_k = K // 2
    half = None
    for k in range(1, K + 1):
        p = g(p)
        if k == half_k:
            half = (p - starts) / (half_k * n)
    cloud = (p - starts) / (K * n)
    meta = np.column_stack([np.full(len(starts), float(K * n)), np.zeros(len(starts)), starts])
    half_cloud = canonical_cloud(half)[0] if half is not None else None
    return RotSetEstimate.from_cloud(cloud, (K * n,), half_cloud, meta)


def direct_rotation_sample(g, points, K):
    """(g^K(p) - p) / K by plain iteration of one map; an independent check."""
    points = np.asarray(points, dtype=float)
    p = points.copy()
    for _ in range(K):
        p = g(p)
    return (p - points) / K


def periodic_union(c, max_period, K=10_000, grid=16):
    """Union of per-word rotation sets over all periodic words up to max_period."""
    if max_period < 1:
        raise ValueError("max_period must be >= 1")
    words = periodic_words_upto(len(c), max_period)
    clouds, metas = [], []
    halves = []
    for wi, w in enumerate(words):
        est = per_word_rotation_set(c, w, K, grid)
        clouds.append(est.cloud)
        m = est.meta.copy()
        m[:, 1] = wi
        metas.append(m)
        if est.hausdorff_to_half_n == est.hausdorff_to_half_n:
            halves.append(est.hausdorff_to_half_n)
    est = RotSetEstimate.from_cloud(np.vstack(clouds), (K,), None, np.vstack(metas))
    est.hausdorff_to_half_n = float(max(halves)) if halves else float("nan")
    return est, words


@dataclass
class InclusionReport:
    max_violation: float
    worst_point: tuple
    n_points: int
    tol: float

    @property
    def passed(self):
        return self.max_violation <= self.tol


def inclusion_check(clouds, mz, tol=0.05):
    """
    Distance of every orbit-tail rotation vector to the MZ cloud.

    ``clouds`` is one (n, 2) array or a list of them; ``mz`` a
    RotSetEstimate or a raw cloud.
    """
    if isinstance(clouds, np.ndarray):
        clouds = [clouds]
    pts = np.vstack([geom.as_cloud(cl) for cl in clouds])
    ref = mz.cloud if isinstance(mz, RotSetEstimate) else geom.as_cloud(mz)
    if len(pts) == 0 or len(ref) == 0:
        raise ValueError("empty input")
    d = cKDTree(ref).query(pts)[0]
    k = int(np.argmax(d))
    return InclusionReport(float(d[k]), tuple(float(v) for v in pts[k]), int(len(pts)), float(tol))
