"""
Forward symbol sequences over a finite alphabet.

Streams are immutable descriptors; ``symbols(n)`` materialises a prefix
and ``symbol_at(i)`` reads one coordinate without building the prefix.
Random streams hash ``(seed, i)`` with SplitMix64, so any coordinate is
reproducible in isolation.
"""

from dataclasses import dataclass
from itertools import product

import numpy as np

from .torusmap import SpecError

_M64 = np.uint64(0xFFFFFFFFFFFFFFFF)
_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_C1 = np.uint64(0xBF58476D1CE4E5B9)
_C2 = np.uint64(0x94D049BB133111EB)


def splitmix64(x):
    """SplitMix64 finaliser on a uint64 array (wrapping arithmetic)."""
    z = np.asarray(x, dtype=np.uint64) + _GOLDEN
    z = (z ^ (z >> np.uint64(30))) * _C1
    z = (z ^ (z >> np.uint64(27))) * _C2
    return z ^ (z >> np.uint64(31))


def uniform_hash(seed, counter, stream=0):
    """Deterministic uniforms in [0, 1) keyed by (seed, stream, counter)."""
    counter = np.asarray(counter, dtype=np.uint64)
    with np.errstate(over="ignore"):
        key = splitmix64(np.uint64(seed % 2**64) ^ splitmix64(np.uint64(stream % 2**64)))
        z = splitmix64(key ^ splitmix64(counter))
    return (z >> np.uint64(11)).astype(np.float64) * (1.0 / 2**53)


class WordStream:
    def symbols(self, n, start=0):
        raise NotImplementedError

    def symbol_at(self, i):
        if i < 0:
            raise ValueError("only forward coordinates i >= 0 exist")
        return int(self.symbols(1, start=i)[0])

    def count(self, n, target):
        if n < 0:
            raise ValueError("n must be >= 0")
        return int(np.count_nonzero(self.symbols(n) == target))

    @property
    def alphabet_size(self):
        raise NotImplementedError


@dataclass(frozen=True)
class PeriodicWord(WordStream):
    symbols_: tuple

    def __post_init__(self):
        syms = tuple(int(s) for s in self.symbols_)
        if not syms:
            raise ValueError("periodic word must be nonempty")
        if min(syms) < 0:
            raise ValueError("symbols must be nonnegative")
        object.__setattr__(self, "symbols_", syms)

    @property
    def period(self):
        return len(self.symbols_)

    @property
    def alphabet_size(self):
        return max(self.symbols_) + 1

    def symbols(self, n, start=0):
        idx = (start + np.arange(n)) % self.period
        return np.asarray(self.symbols_, dtype=np.int64)[idx]

    def rotate(self, k):
        k %= self.period
        return PeriodicWord(self.symbols_[k:] + self.symbols_[:k])

    def __repr__(self):
        return "PeriodicWord(" + "".join(map(str, self.symbols_)) + ")" if self.alphabet_size <= 10 \
            else f"PeriodicWord({list(self.symbols_)})"


@dataclass(frozen=True)
class RandomWord(WordStream):
    """Independent symbols with probabilities ``bias``, keyed by (seed, i)."""

    seed: int
    bias: tuple = (0.5, 0.5)

    def __post_init__(self):
        bias = tuple(float(b) for b in self.bias)
        if not bias or min(bias) < 0 or abs(sum(bias) - 1.0) > 1e-12:
            raise ValueError(f"bias must be nonnegative and sum to 1, got {bias}")
        object.__setattr__(self, "bias", bias)
        object.__setattr__(self, "seed", int(self.seed))

    @property
    def alphabet_size(self):
        return len(self.bias)

    def symbols(self, n, start=0):
        u = uniform_hash(self.seed, start + np.arange(n, dtype=np.uint64))
        cum = np.cumsum(self.bias)[:-1]
        return np.searchsorted(cum, u, side="right").astype(np.int64)


@dataclass(frozen=True)
class BlockWord(WordStream):
    """Runs ``[(symbol, length), ...]`` repeated forever."""

    runs: tuple

    def __post_init__(self):
        runs = tuple((int(s), int(r)) for s, r in self.runs)
        if not runs or any(r <= 0 for _, r in runs) or any(s < 0 for s, _ in runs):
            raise ValueError("block runs must be nonempty with positive lengths")
        object.__setattr__(self, "runs", runs)

    @property
    def period(self):
        return sum(r for _, r in self.runs)

    @property
    def alphabet_size(self):
        return max(s for s, _ in self.runs) + 1

    def symbols(self, n, start=0):
        cycle = np.repeat([s for s, _ in self.runs], [r for _, r in self.runs])
        return cycle[(start + np.arange(n)) % len(cycle)].astype(np.int64)


def symbol_at(stream, i):
    return stream.symbol_at(i)


def count_symbols(stream, n, target):
    return stream.count(n, target)


def is_proper_power(word):
    n = len(word)
    for d in range(1, n):
        if n % d == 0 and word == word[:d] * (n // d):
            return True
    return False


def periodic_words_upto(alphabet_size, max_period):
    """
    Every word of length 1..max_period that is not a repetition of a
    shorter word.  Cyclic rotations are kept as distinct words.
    """
    if alphabet_size < 1 or max_period < 1:
        raise ValueError("alphabet_size and max_period must be >= 1")
    out = []
    for n in range(1, max_period + 1):
        for w in product(range(alphabet_size), repeat=n):
            if not is_proper_power(w):
                out.append(PeriodicWord(w))
    return out


def to_spec(w):
    if isinstance(w, PeriodicWord):
        return {"type": "periodic", "symbols": list(w.symbols_)}
    if isinstance(w, RandomWord):
        return {"type": "random", "seed": w.seed, "bias": list(w.bias)}
    if isinstance(w, BlockWord):
        return {"type": "block", "runs": [list(r) for r in w.runs]}
    raise TypeError(f"cannot serialise {type(w).__name__}")


def from_spec(spec, path="word"):
    if not isinstance(spec, dict):
        raise SpecError("word spec must be an object", path)
    kind = spec.get("type")
    try:
        if kind == "periodic":
            syms = spec.get("symbols")
            if not isinstance(syms, list) or not all(isinstance(s, int) and not isinstance(s, bool) for s in syms):
                raise SpecError("field 'symbols' must be a list of integers", f"{path}.symbols")
            return PeriodicWord(tuple(syms))
        if kind == "random":
            seed = spec.get("seed")
            if not isinstance(seed, int) or isinstance(seed, bool):
                raise SpecError("field 'seed' must be an integer", f"{path}.seed")
            bias = spec.get("bias", [0.5, 0.5])
            if not isinstance(bias, list):
                raise SpecError("field 'bias' must be a list", f"{path}.bias")
            return RandomWord(seed, tuple(bias))
        if kind == "block":
            runs = spec.get("runs")
            if not isinstance(runs, list) or not all(isinstance(r, list) and len(r) == 2 for r in runs):
                raise SpecError("field 'runs' must be a list of [symbol, length] pairs", f"{path}.runs")
            return BlockWord(tuple(tuple(r) for r in runs))
    except SpecError:
        raise
    except (ValueError, TypeError) as exc:
        raise SpecError(str(exc), path) from exc
    raise SpecError("unknown word type", path)
