"""
Epsilon pseudo-orbits of a single lifted map g.

A pseudo-orbit is the orbit of the cocycle F(x, p) = (sigma(x), g(p) + x_0)
over the alphabet of perturbations |x_0| < eps.  This module provides grid
reachability sets (Theta), coverage times, BFS connectors between points,
the splice of two periodic pseudo-orbits into one with a prescribed mix of
rotation vectors, and a sampled pseudo-orbit rotation set.

Naming: ``theta_forward(p, k)`` holds points reachable FROM p in exactly k
steps, ``theta_backward(p, k)`` the points that reach p in k steps.

Orbits are stored as torus points plus perturbations; the lift
displacement of a step is ``g(p_i) - p_i + w_i`` evaluated at the torus
point, so long orbits never re-simulate and never drift.
"""

from dataclasses import dataclass, field

import numpy as np

from . import geom
from .gridset import (GridSet, cell_of, dilate_eps, grid_image, subsamples_for)
from .rotation import RotSetEstimate, torus_lattice
from .shift import uniform_hash
from .torusmap import LiftedMap, invert

# perturbations live in the open eps-ball; this is the margin kept inside it
MARGIN = 0.999


class UnreachableError(RuntimeError):
    """No pseudo-orbit found within the step cap."""


def torus_delta(v):
    """Smallest representative of v mod Z^2 (ties toward the smaller value)."""
    v = np.asarray(v, dtype=float)
    return v - np.ceil(v - 0.5)


def torus_distance(a, b):
    return np.linalg.norm(torus_delta(np.asarray(a) - np.asarray(b)), axis=-1)


@dataclass
class PseudoSystem:
    g: LiftedMap
    eps: float
    grid: int
    subsamples: int = None

    def __post_init__(self):
        if not isinstance(self.g, LiftedMap):
            raise TypeError("g must be a LiftedMap")
        if not self.eps > 0:
            raise ValueError("eps must be positive")
        if self.grid < 1:
            raise ValueError("grid must be >= 1")
        if self.eps <= np.sqrt(2.0) / self.grid:
            raise ValueError(f"eps={self.eps} must exceed the cell diagonal sqrt(2)/{self.grid}")
        invert(self.g)  # raises for non-invertible nodes
        if self.subsamples is None:
            self.subsamples = max(subsamples_for(self.g), subsamples_for(invert(self.g)))

    @property
    def g_inv(self):
        return invert(self.g)


@dataclass
class PseudoOrbit:
    """
    Torus points p_0..p_m and perturbations w_0..w_{m-1} with
    p_{i+1} = g(p_i) + w_i mod Z^2.
    """

    points: np.ndarray
    perturbations: np.ndarray = field(default=None)

    def __post_init__(self):
        self.points = np.mod(np.asarray(self.points, dtype=float).reshape(-1, 2), 1.0)
        if self.perturbations is None:
            self.perturbations = np.zeros((0, 2))
        self.perturbations = np.asarray(self.perturbations, dtype=float).reshape(-1, 2)
        if len(self.points) != len(self.perturbations) + 1:
            raise ValueError("need exactly one more point than perturbations")

    @property
    def start(self):
        return self.points[0]

    @property
    def end(self):
        return self.points[-1]

    @property
    def steps(self):
        return len(self.perturbations)

    def displacement(self, g):
        """Total lift displacement sum(g(p_i) - p_i + w_i)."""
        if self.steps == 0:
            return np.zeros(2)
        return (g.displacement(self.points[:-1]) + self.perturbations).sum(axis=0)

    def rotation_vector(self, g):
        if self.steps == 0:
            raise ValueError("undefined average for a length-0 orbit")
        return self.displacement(g) / self.steps

    def is_closed(self, tol=1e-12):
        return bool(torus_distance(self.start, self.end) <= tol)

    def then(self, other):
        """Concatenate; ``other`` must start where this orbit ends."""
        if torus_distance(self.end, other.start) > 1e-9:
            raise ValueError("orbits do not meet")
        return PseudoOrbit(np.vstack([self.points, other.points[1:]]),
                           np.vstack([self.perturbations, other.perturbations]))

    def repeat(self, k):
        if k < 0:
            raise ValueError("repeat count must be >= 0")
        if k == 0:
            return PseudoOrbit(self.points[:1])
        if not self.is_closed(1e-9):
            raise ValueError("only closed orbits can be repeated")
        pts = np.vstack([np.tile(self.points[:-1], (k, 1)), self.points[-1:]])
        return PseudoOrbit(pts, np.tile(self.perturbations, (k, 1)))


def verify_orbit(sys, orbit):
    """
    Pointwise check in the cover.

    Returns ``(max_step_error, max_consistency)``: the largest torus distance
    |p_{i+1} - g(p_i)| (must stay below eps) and the largest mismatch
    between the stored points and g(p_i) + w_i (round-off only).
    """
    if orbit.steps == 0:
        return 0.0, 0.0
    gp = sys.g(orbit.points[:-1])
    step = torus_distance(orbit.points[1:], gp)
    consistency = torus_distance(orbit.points[1:], gp + orbit.perturbations)
    return float(step.max()), float(consistency.max())


def is_valid(sys, orbit):
    err, cons = verify_orbit(sys, orbit)
    norms = np.linalg.norm(orbit.perturbations, axis=1) if orbit.steps else np.zeros(1)
    return bool(err < sys.eps and norms.max() < sys.eps and cons < 1e-9)


# grid reachability

def _step_forward(sys, s):
    return dilate_eps(grid_image(sys.g, s, sys.subsamples), sys.eps)


def _step_backward(sys, s):
    # q reaches p' in one step iff g(q) lies within eps of p', so dilate
    # first and then pull back
    return grid_image(sys.g_inv, dilate_eps(s, sys.eps), sys.subsamples)


def theta_forward_sequence(sys, p, k):
    """Theta^{+,0..k}(p) as a list of GridSets."""
    if k < 0:
        raise ValueError("k must be >= 0")
    cur = GridSet.from_points(sys.grid, p)
    out = [cur]
    for _ in range(k):
        cur = _step_forward(sys, cur)
        out.append(cur)
    return out


def theta_forward(sys, p, k):
    """Cells reachable from p by an eps-pseudo-orbit in exactly k steps (outer approximation)."""
    return theta_forward_sequence(sys, p, k)[-1]


def theta_backward(sys, p, k):
    """Cells from which p is reachable in exactly k steps (outer approximation)."""
    if k < 0:
        raise ValueError("k must be >= 0")
    cur = GridSet.from_points(sys.grid, p)
    for _ in range(k):
        cur = _step_backward(sys, cur)
    return cur


def coverage_bound(sys, p, k_cap):
    """
    Smallest k <= k_cap with the union of Theta^{+,j}(p), j <= k, equal to
    the whole grid; None when not covered by k_cap.
    """
    if k_cap < 1:
        raise ValueError("k_cap must be >= 1")
    cur = GridSet.from_points(sys.grid, p)
    union = cur.copy()
    if union.is_full():
        return 0
    for k in range(1, k_cap + 1):
        nxt = _step_forward(sys, cur)
        union = union | nxt
        if union.is_full():
            return k
        if nxt == cur:
            return None
        cur = nxt
    return None


# connectors

def _window(sys):
    r = int(np.ceil(sys.eps * sys.grid)) + 1
    k = np.arange(-r, r + 1)
    di, dj = np.meshgrid(k, k, indexing="ij")
    return np.column_stack([di.ravel(), dj.ravel()])


def find_connector(sys, start, target, k_cap):
    """
    Breadth-first search for a pseudo-orbit from ``start`` to ``target``.

    Nodes are grid cells represented by one concrete point.  An edge
    q -> c exists when cell c comes within ``MARGIN * eps`` of g(q); the
    point of c nearest g(q) then represents c, so every emitted step is
    valid by construction (it is re-verified anyway).  Using nearest points
    rather than cell centres lets each step reach every cell the grid
    reachability sets count.  The final
    step lands exactly on ``target``.

    Raises
    ------
    UnreachableError
        If no orbit of at most ``k_cap`` steps is found.
    """
    if k_cap < 1:
        raise ValueError("k_cap must be >= 1")
    N = sys.grid
    start = np.mod(np.asarray(start, dtype=float), 1.0)
    target = np.mod(np.asarray(target, dtype=float), 1.0)
    if torus_distance(start, target) == 0.0:
        return PseudoOrbit(start[None, :])
    reach = MARGIN * sys.eps
    window = _window(sys)

    parent = np.full((N, N), -1, dtype=np.int64)  # flat index of parent cell
    rep = np.zeros((N, N, 2))
    si, sj = cell_of(start, N)
    visited = np.zeros((N, N), dtype=bool)
    visited[si[0], sj[0]] = True
    rep[si[0], sj[0]] = start
    frontier = np.array([[si[0], sj[0]]])
    for depth in range(1, k_cap + 1):
        pts = rep[frontier[:, 0], frontier[:, 1]]
        images = sys.g(pts)
        hit = torus_distance(images, target) < reach
        if hit.any():
            f = int(np.flatnonzero(hit)[0])
            return _assemble(sys, parent, rep, frontier[f], target)
        base = np.floor(np.mod(images, 1.0) * N).astype(np.int64)
        cand = (base[:, None, :] + window[None, :, :]) % N  # (F, W, 2)
        # nearest point of each candidate cell to the image, kept strictly
        # inside the cell
        to_centre = torus_delta((cand + 0.5) / N - images[:, None, :])
        half = 0.5 / N * (1.0 - 1e-6)
        step = np.clip(0.0, to_centre - half, to_centre + half)
        ok = np.linalg.norm(step, axis=2) < reach
        src = np.repeat(np.arange(len(frontier)), len(window)).reshape(ok.shape)
        cand, src, step = cand[ok], src[ok], step[ok]
        fresh = ~visited[cand[:, 0], cand[:, 1]]
        cand, src, step = cand[fresh], src[fresh], step[fresh]
        if len(cand) == 0:
            break
        flat = cand[:, 0] * N + cand[:, 1]
        _, first = np.unique(flat, return_index=True)
        first = np.sort(first)  # frontier order, then window order
        cand, src, step = cand[first], src[first], step[first]
        visited[cand[:, 0], cand[:, 1]] = True
        parent[cand[:, 0], cand[:, 1]] = frontier[src, 0] * N + frontier[src, 1]
        rep[cand[:, 0], cand[:, 1]] = np.mod(images[src] + step, 1.0)
        frontier = cand
    raise UnreachableError(f"unreachable within k_cap={k_cap}")


def _assemble(sys, parent, rep, last_cell, target):
    N = sys.grid
    chain = [tuple(last_cell)]
    while parent[chain[-1]] >= 0:
        flat = parent[chain[-1]]
        chain.append((flat // N, flat % N))
    chain.reverse()
    pts = [rep[c] for c in chain] + [target]
    pts = np.array(pts)
    w = torus_delta(pts[1:] - sys.g(pts[:-1]))
    orbit = PseudoOrbit(pts, w)
    if not is_valid(sys, orbit):
        raise AssertionError("connector failed pointwise verification")
    return orbit


def close_loop(sys, orbit, k_cap):
    """Append a connector from the orbit's end back to its start."""
    if orbit.is_closed():
        return orbit
    return orbit.then(find_connector(sys, orbit.end, orbit.start, k_cap))


@dataclass
class SpliceResult:
    orbit: PseudoOrbit
    vector: np.ndarray
    total_steps: int
    connector_steps: int
    connector_displacement: np.ndarray
    formula_vector: np.ndarray


def splice_periodic(sys, orbit_a, orbit_b, a, b, k_cap):
    """
    Periodic pseudo-orbit mixing two cycles in proportion a : (b - a).

    Both orbits are closed into cycles (connectors back to their starts if
    needed).  The result runs a * M_B copies of cycle A and (b - a) * M_A
    copies of cycle B; when both counts are positive and the cycles start at
    different points, connectors A.start -> B.start and back are inserted
    once.  The returned vector is total lift displacement / total steps,
    computed from the trajectory; ``formula_vector`` is the same quantity
    from the bookkeeping identity (a M_B w_A + (b-a) M_A w_B + connectors)
    / steps.
    """
    a, b = int(a), int(b)
    if not (0 <= a <= b and b >= 1):
        raise ValueError("need 0 <= a <= b and b >= 1")
    cyc_a = close_loop(sys, orbit_a, k_cap)
    cyc_b = close_loop(sys, orbit_b, k_cap)
    ma, mb = cyc_a.steps, cyc_b.steps
    if ma == 0 or mb == 0:
        raise ValueError("cycles must have at least one step")
    wa, wb = cyc_a.displacement(sys.g), cyc_b.displacement(sys.g)
    na, nb = a * mb, (b - a) * ma
    conn_disp = np.zeros(2)
    conn_steps = 0
    if nb == 0:
        orbit = cyc_a.repeat(na)
    elif na == 0:
        orbit = cyc_b.repeat(nb)
    else:
        orbit = cyc_a.repeat(na)
        if torus_distance(cyc_a.start, cyc_b.start) > 1e-12:
            there = find_connector(sys, cyc_a.start, cyc_b.start, k_cap)
            back = find_connector(sys, cyc_b.start, cyc_a.start, k_cap)
            conn_disp = there.displacement(sys.g) + back.displacement(sys.g)
            conn_steps = there.steps + back.steps
            orbit = orbit.then(there).then(cyc_b.repeat(nb)).then(back)
        else:
            orbit = orbit.then(cyc_b.repeat(nb))
    total = orbit.steps
    vector = orbit.displacement(sys.g) / total
    formula = (na * wa + nb * wb + conn_disp) / total
    return SpliceResult(orbit, vector, total, conn_steps, conn_disp, formula)


# sampled pseudo-orbit rotation set

@dataclass(frozen=True)
class Policy:
    """
    Perturbation rule.  ``kind`` is "none", "constant" (fixed direction,
    norm ``scale * MARGIN * eps``) or "random" (uniform in the ball of
    radius ``MARGIN * eps``, keyed by seed, start index and step).
    """

    kind: str
    direction: tuple = (1.0, 0.0)
    scale: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.kind not in ("none", "constant", "random"):
            raise ValueError(f"unknown policy type {self.kind!r}")
        if self.kind == "constant":
            d = np.asarray(self.direction, dtype=float)
            if d.shape != (2,) or not np.linalg.norm(d) > 0:
                raise ValueError("constant policy needs a nonzero direction")
            if not 0 <= self.scale <= 1:
                raise ValueError("scale must lie in [0, 1]")

    def perturbations(self, eps, rows, step):
        """(rows, 2) perturbations for one step."""
        if self.kind == "none":
            return np.zeros((rows, 2))
        r = MARGIN * eps
        if self.kind == "constant":
            d = np.asarray(self.direction, dtype=float)
            return np.tile(self.scale * r * d / np.linalg.norm(d), (rows, 1))
        counter = np.arange(rows, dtype=np.uint64) * np.uint64(1 << 32) + np.uint64(step)
        u = uniform_hash(self.seed, counter, stream=1)
        v = uniform_hash(self.seed, counter, stream=2)
        rad = r * np.sqrt(u)
        ang = 2.0 * np.pi * v
        return np.column_stack([rad * np.cos(ang), rad * np.sin(ang)])


def policy_from_spec(spec, path="policy"):
    from .torusmap import SpecError

    if not isinstance(spec, dict):
        raise SpecError("policy spec must be an object", path)
    kind = spec.get("type")
    try:
        if kind == "none":
            return Policy("none")
        if kind == "constant":
            return Policy("constant", tuple(spec.get("direction", (1.0, 0.0))), float(spec.get("scale", 1.0)))
        if kind == "random":
            return Policy("random", seed=int(spec.get("seed", 0)))
    except (TypeError, ValueError) as exc:
        raise SpecError(str(exc), path) from exc
    raise SpecError("unknown policy type", path)


def default_policies(directions=32, scales=(1.0, 0.8, 0.6, 0.4, 0.2), random_seeds=4):
    out = [Policy("none")]
    for s in scales:
        for k in range(directions):
            ang = 2.0 * np.pi * k / directions
            out.append(Policy("constant", (float(np.cos(ang)), float(np.sin(ang))), s))
    out += [Policy("random", seed=k) for k in range(random_seeds)]
    return out


@dataclass
class PseudoPlan:
    base_grid: int
    policies: list
    n_list: list
    splices: list = field(default_factory=list)  # (a, b) pairs

    def __post_init__(self):
        self.n_list = [int(n) for n in self.n_list]
        if self.base_grid < 1 or not self.policies or not self.n_list:
            raise ValueError("plan needs base_grid >= 1, policies and n_list")
        if any(b <= a for a, b in zip(self.n_list, self.n_list[1:])):
            raise ValueError("n_list must be strictly increasing")

    @property
    def tail(self):
        return self.n_list[len(self.n_list) // 2:]


def default_pseudo_plan(base_grid=8, n_max=128):
    return PseudoPlan(base_grid, default_policies(), [n_max // 4, n_max // 2, n_max],
                      [(a, 4) for a in range(5)])


def policy_rho(sys, policy, starts, ns):
    """rho_n of perturbed lifted orbits for each n in ns; shape (len(ns), P, 2)."""
    ns = list(ns)
    p = np.asarray(starts, dtype=float).copy()
    p0 = p.copy()
    out = np.empty((len(ns), len(p), 2))
    want = {n: k for k, n in enumerate(ns)}
    for step in range(1, max(ns) + 1):
        p = sys.g(p) + policy.perturbations(sys.eps, len(p), step - 1)
        if step in want:
            out[want[step]] = (p - p0) / step
    return out


def _splice_vectors(sys, plan, k_cap):
    """
    Rotation vectors of spliced cycles built from the two extreme constant
    pushes along +x and +y, closed at a common base point.
    """
    if not plan.splices:
        return np.zeros((0, 2))
    m = max(plan.n_list)
    p0 = np.zeros(2) + 0.5 / sys.grid
    cycles = []
    for d in ((1.0, 0.0), (0.0, 1.0)):
        pol = Policy("constant", d, 1.0)
        pts = [p0]
        ws = []
        for step in range(m):
            w = pol.perturbations(sys.eps, 1, step)[0]
            pts.append(np.mod(sys.g(pts[-1]) + w, 1.0))
            ws.append(w)
        cycles.append(PseudoOrbit(np.array(pts), np.array(ws)))
    out = []
    for a, b in plan.splices:
        out.append(splice_periodic(sys, cycles[0], cycles[1], a, b, k_cap).vector)
    return np.array(out)


def pseudo_rotset(sys, plan=None, k_cap=500):
    """
    Sampled rotation set of the pseudo-orbit cocycle.

    Union over the upper half of ``plan.n_list`` of rho_n for every policy
    and base point, plus the vectors of the requested splices.
    """
    if plan is None:
        plan = default_pseudo_plan()
    starts = torus_lattice(plan.base_grid)
    ns = sorted(set(plan.tail) | {n for n in plan.n_list if 2 * n <= plan.n_list[-1]})
    tail, half_tail = plan.tail, [n for n in plan.n_list if 2 * n <= plan.n_list[-1]]
    half_tail = half_tail[len(half_tail) // 2:]
    clouds, metas, halves = [], [], []
    for pi, pol in enumerate(plan.policies):
        rho = policy_rho(sys, pol, starts, ns)
        for k, n in enumerate(ns):
            if n in tail:
                clouds.append(rho[k])
                metas.append(np.column_stack([np.full(len(starts), n), np.full(len(starts), pi), starts]))
            if n in half_tail:
                halves.append(rho[k])
    spliced = _splice_vectors(sys, plan, k_cap)
    if len(spliced):
        clouds.append(spliced)
        metas.append(np.column_stack([np.zeros(len(spliced)), np.full(len(spliced), -1.0),
                                      np.full((len(spliced), 2), np.nan)]))
    cloud = np.vstack(clouds)
    meta = np.vstack(metas)
    half = np.vstack(halves) if halves else None
    return RotSetEstimate.from_cloud(cloud, tail, half, meta)


def closed_ball_sample(center, radius, spacing):
    """Grid sample of a closed disk plus its boundary circle."""
    box = geom.sample_box(np.asarray(center) - radius, np.asarray(center) + radius, spacing)
    inside = box[np.linalg.norm(box - center, axis=1) <= radius]
    k = max(8, int(np.ceil(2 * np.pi * radius / spacing)))
    ang = 2 * np.pi * np.arange(k) / k
    rim = np.asarray(center) + radius * np.column_stack([np.cos(ang), np.sin(ang)])
    return np.vstack([inside, rim])
