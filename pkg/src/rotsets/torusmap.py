"""
Lifts of torus homeomorphisms isotopic to the identity.

A lifted map is a small immutable expression tree over closed-form
primitives.  Every node evaluates on arrays of shape ``(..., 2)`` in the
universal cover and commutes with integer translations by construction.

>>> m = mz_square()
>>> m([0.5, 0.5])
array([1.5, 1.5])
"""

from dataclasses import dataclass

import numpy as np

TWO_PI = 2.0 * np.pi
PRODUCT_SHEAR_MAX = 0.3


class SpecError(ValueError):
    """Malformed map/word/config specification; ``path`` locates the field."""

    def __init__(self, message, path=""):
        self.path = path
        super().__init__(f"{message} at {path}" if path else message)


def _points(p):
    arr = np.asarray(p, dtype=float)
    if arr.shape[-1] != 2:
        raise ValueError(f"expected points with trailing dimension 2, got shape {arr.shape}")
    return arr


def bump(t):
    """s(t) = 1/2 - cos(2 pi t)/2, the [0, 1]-valued periodic bump."""
    return 0.5 - 0.5 * np.cos(TWO_PI * t)


class LiftedMap:
    """Base class; subclasses implement ``_forward`` and ``_backward``."""

    def __call__(self, p):
        p = _points(p)
        return self._forward(p)

    def inverse_eval(self, p):
        return self._backward(_points(p))

    def displacement(self, p):
        p = _points(p)
        return self._forward(p) - p

    def inverse(self):
        return invert(self)


@dataclass(frozen=True)
class Translation(LiftedMap):
    v: tuple

    def __post_init__(self):
        v = tuple(float(c) for c in self.v)
        if len(v) != 2 or not all(np.isfinite(v)):
            raise ValueError("translation vector must be two finite reals")
        object.__setattr__(self, "v", v)

    def _forward(self, p):
        return p + np.asarray(self.v)

    def _backward(self, p):
        return p - np.asarray(self.v)


@dataclass(frozen=True)
class HShear(LiftedMap):
    """(x, y) -> (x + offset + a sin(2 pi (y + phase)), y)."""

    a: float
    phase: float = 0.0
    offset: float = 0.0

    def _shift(self, y):
        return self.offset + self.a * np.sin(TWO_PI * (y + self.phase))

    def _forward(self, p):
        out = p.copy()
        out[..., 0] += self._shift(p[..., 1])
        return out

    def _backward(self, p):
        out = p.copy()
        out[..., 0] -= self._shift(p[..., 1])
        return out


@dataclass(frozen=True)
class VShear(LiftedMap):
    """(x, y) -> (x, y + offset + a sin(2 pi (x + phase)))."""

    a: float
    phase: float = 0.0
    offset: float = 0.0

    def _shift(self, x):
        return self.offset + self.a * np.sin(TWO_PI * (x + self.phase))

    def _forward(self, p):
        out = p.copy()
        out[..., 1] += self._shift(p[..., 0])
        return out

    def _backward(self, p):
        out = p.copy()
        out[..., 1] -= self._shift(p[..., 0])
        return out


@dataclass(frozen=True)
class ProductShear(LiftedMap):
    """(x, y) -> (x + a s(x) s(y), y); a homeomorphism for |a| <= 0.3."""

    a: float

    def __post_init__(self):
        if not abs(self.a) <= PRODUCT_SHEAR_MAX:
            raise ValueError(f"ProductShear needs |a| <= {PRODUCT_SHEAR_MAX}, got {self.a}")

    def _forward(self, p):
        out = p.copy()
        out[..., 0] += self.a * bump(p[..., 0]) * bump(p[..., 1])
        return out

    def _backward(self, p):
        # x -> x + c s(x) is strictly increasing for |c| <= 0.3, and its
        # inverse is bracketed by [x' - max(c, 0), x' - min(c, 0)].
        target = p[..., 0]
        c = self.a * bump(p[..., 1])
        lo = target - np.maximum(c, 0.0)
        hi = target - np.minimum(c, 0.0)
        x = target - 0.5 * c
        for _ in range(100):
            f = x + c * bump(x) - target
            df = 1.0 + c * np.pi * np.sin(TWO_PI * x)
            lo = np.where(f < 0, x, lo)
            hi = np.where(f > 0, x, hi)
            step = x - f / df
            bad = (step <= lo) | (step >= hi)
            new = np.where(bad, 0.5 * (lo + hi), step)
            if np.all(np.abs(new - x) <= 1e-15 * np.maximum(1.0, np.abs(x))):
                x = new
                break
            x = new
        out = p.copy()
        out[..., 0] = x
        return out


@dataclass(frozen=True)
class Compose(LiftedMap):
    """Applies ``maps`` left to right: the first element acts first."""

    maps: tuple

    def __post_init__(self):
        maps = tuple(self.maps)
        if not maps:
            raise ValueError("Compose needs at least one map")
        for m in maps:
            if not isinstance(m, LiftedMap):
                raise TypeError(f"Compose element is not a LiftedMap: {m!r}")
        object.__setattr__(self, "maps", maps)

    def _forward(self, p):
        for m in self.maps:
            p = m._forward(p)
        return p

    def _backward(self, p):
        for m in reversed(self.maps):
            p = m._backward(p)
        return p


@dataclass(frozen=True)
class Inverse(LiftedMap):
    of: LiftedMap

    def __post_init__(self):
        if not isinstance(self.of, LiftedMap):
            raise TypeError(f"Inverse wraps a LiftedMap, got {self.of!r}")

    def _forward(self, p):
        return self.of._backward(p)

    def _backward(self, p):
        return self.of._forward(p)


def invert(m):
    """
    Closed-form inverse, normalised so that ``invert(invert(m)) == m``.

    Translations and sine shears invert to primitives of the same kind,
    compositions reverse, and ``ProductShear`` is wrapped in ``Inverse``.
    """
    if isinstance(m, Translation):
        return Translation((-m.v[0], -m.v[1]))
    if isinstance(m, HShear):
        return HShear(-m.a, m.phase, -m.offset)
    if isinstance(m, VShear):
        return VShear(-m.a, m.phase, -m.offset)
    if isinstance(m, Compose):
        return Compose(tuple(invert(k) for k in reversed(m.maps)))
    if isinstance(m, Inverse):
        return m.of
    if isinstance(m, ProductShear):
        return Inverse(m)
    raise TypeError(f"cannot invert {type(m).__name__}")


def evaluate(m, p):
    return m(p)


def displacement(m, p):
    """f(p) - p; independent of which lift of the torus point is used."""
    return m.displacement(p)


def check_equivariance(m, samples=100, seed=0):
    """max |f(p + v) - f(p) - v| over random p and v in {-2..2}^2."""
    if samples < 1:
        raise ValueError("samples must be >= 1")
    rng = np.random.default_rng(seed)
    p = rng.uniform(-3.0, 3.0, size=(samples, 2))
    base = m(p)
    worst = 0.0
    for vx in range(-2, 3):
        for vy in range(-2, 3):
            v = np.array([vx, vy], dtype=float)
            err = np.abs(m(p + v) - base - v).max()
            worst = max(worst, float(err))
    return worst


def lipschitz_estimate(m, samples=2000, seed=0, h=1e-6):
    """Crude max operator-norm of the Jacobian over random torus points."""
    rng = np.random.default_rng(seed)
    p = rng.random((samples, 2))
    jx = (m(p + [h, 0.0]) - m(p - [h, 0.0])) / (2 * h)
    jy = (m(p + [0.0, h]) - m(p - [0.0, h])) / (2 * h)
    jac = np.stack([jx, jy], axis=-1)
    return float(np.linalg.norm(jac, ord=2, axis=(1, 2)).max())


# named constructions

def paper_f0():
    """(x, y) -> (x + sin(2 pi y), y)."""
    return HShear(1.0, 0.0, 0.0)


def paper_f1():
    """(x, y) -> (x, y + sqrt 2)."""
    return Translation((0.0, np.sqrt(2.0)))


def mz_square():
    """
    Horizontal then vertical bump shear, each displacing by s(.) in [0, 1].

    Fixed points on the torus at (0, 0), (1/2, 1/2), (0, 1/2), (1/2, 0)
    carry displacements (0, 0), (1, 1), (1, 0), (0, 1), so the rotation
    set of this lift is the unit square.
    """
    return Compose((HShear(0.5, -0.25, 0.5), VShear(0.5, -0.25, 0.5)))


def double_shear(a=0.3):
    """Zero-mean horizontal then vertical sine shear; area preserving."""
    return Compose((HShear(a, 0.0, 0.0), VShear(a, 0.0, 0.0)))


def identity():
    return Translation((0.0, 0.0))


# spec (de)serialisation

def to_spec(m):
    if isinstance(m, Translation):
        return {"type": "translation", "v": [m.v[0], m.v[1]]}
    if isinstance(m, HShear):
        return {"type": "hshear", "a": m.a, "phase": m.phase, "offset": m.offset}
    if isinstance(m, VShear):
        return {"type": "vshear", "a": m.a, "phase": m.phase, "offset": m.offset}
    if isinstance(m, ProductShear):
        return {"type": "product_shear", "a": m.a}
    if isinstance(m, Compose):
        return {"type": "compose", "maps": [to_spec(k) for k in m.maps]}
    if isinstance(m, Inverse):
        return {"type": "inverse", "of": to_spec(m.of)}
    raise TypeError(f"cannot serialise {type(m).__name__}")


def _number(spec, key, path, default=None):
    if key not in spec:
        if default is None:
            raise SpecError(f"missing field '{key}'", path)
        return default
    val = spec[key]
    if isinstance(val, bool) or not isinstance(val, (int, float)) or not np.isfinite(val):
        raise SpecError(f"field '{key}' must be a finite number", f"{path}.{key}")
    return float(val)


_NAMED = {
    "paper_f0": paper_f0,
    "paper_f1": paper_f1,
    "mz_square": mz_square,
    "double_shear": double_shear,
    "identity": identity,
}


def from_spec(spec, path="map"):
    """
    Build a map from its JSON tree.

    ``{"type": "named", "name": "mz_square"}`` is accepted as a shortcut
    for the built-in constructions.
    """
    if not isinstance(spec, dict):
        raise SpecError("map spec must be an object", path)
    kind = spec.get("type")
    try:
        if kind == "translation":
            v = spec.get("v")
            if not isinstance(v, (list, tuple)) or len(v) != 2:
                raise SpecError("field 'v' must be a pair of numbers", f"{path}.v")
            return Translation(tuple(_number({"v": c}, "v", f"{path}.v[{i}]") for i, c in enumerate(v)))
        if kind in ("hshear", "vshear"):
            cls = HShear if kind == "hshear" else VShear
            return cls(_number(spec, "a", path), _number(spec, "phase", path, 0.0),
                       _number(spec, "offset", path, 0.0))
        if kind == "product_shear":
            return ProductShear(_number(spec, "a", path))
        if kind == "compose":
            maps = spec.get("maps")
            if not isinstance(maps, list) or not maps:
                raise SpecError("field 'maps' must be a nonempty list", f"{path}.maps")
            return Compose(tuple(from_spec(s, f"{path}.maps[{i}]") for i, s in enumerate(maps)))
        if kind == "inverse":
            if "of" not in spec:
                raise SpecError("missing field 'of'", path)
            return invert(from_spec(spec["of"], f"{path}.of"))
        if kind == "named":
            name = spec.get("name")
            if name not in _NAMED:
                raise SpecError(f"unknown named map {name!r}", f"{path}.name")
            return _NAMED[name]()
    except SpecError:
        raise
    except (ValueError, TypeError) as exc:
        raise SpecError(str(exc), path) from exc
    raise SpecError("unknown map type", path)
