"""Bipartite instances, hidden realizations, matchings and their file format."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Mapping

import numpy as np


class InstanceError(ValueError):
    """Raised for malformed instances, realizations or instance files."""


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class BipartiteInstance:
    """Known information: vertex counts and a weight for every left-right pair."""

    weights: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        if w.ndim != 2:
            raise InstanceError(f"weights must be a 2-d matrix, got shape {w.shape}")
        object.__setattr__(self, "weights", _frozen(w))

    @property
    def n_left(self) -> int:
        return self.weights.shape[0]

    @property
    def n_right(self) -> int:
        return self.weights.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self.weights.shape

    def scaled(self, c: float) -> "BipartiteInstance":
        return BipartiteInstance(self.weights * c)

    def __eq__(self, other):
        if not isinstance(other, BipartiteInstance):
            return NotImplemented
        return self.shape == other.shape and np.array_equal(self.weights, other.weights)

    __hash__ = None


def validate_instance(instance: BipartiteInstance) -> list[str]:
    """Return the list of violations; an empty list means the instance is valid."""
    w = instance.weights
    problems = []
    if w.shape[0] < 1:
        problems.append("zero dimension: n_left must be >= 1")
    if w.shape[1] < 1:
        problems.append("zero dimension: n_right must be >= 1")
    for u, v in zip(*np.nonzero(~np.isfinite(w))):
        problems.append(f"non-finite weight at ({u},{v})")
    with np.errstate(invalid="ignore"):
        negative = np.nonzero(w < 0)
    for u, v in zip(*negative):
        problems.append(f"negative weight at ({u},{v})")
    return problems


def check_instance(instance: BipartiteInstance) -> BipartiteInstance:
    problems = validate_instance(instance)
    if problems:
        raise InstanceError("; ".join(problems))
    return instance


# -- realizations ------------------------------------------------------------

class Realization:
    """The hidden edge set, or the law it is drawn from.

    Only the probe environment reads a realization; algorithms see the
    ``BipartiteInstance`` alone.
    """

    kind: str
    shape: tuple[int, int]

    def sample(self, rng: np.random.Generator) -> np.ndarray:
        """Draw one full boolean edge-presence matrix for a trial."""
        raise NotImplementedError

    @property
    def is_stochastic(self) -> bool:
        return True


@dataclass(frozen=True, eq=False)
class Adversarial(Realization):
    edges: np.ndarray
    kind: str = field(default="adversarial", init=False)

    def __post_init__(self):
        e = np.asarray(self.edges)
        if e.ndim != 2:
            raise InstanceError("edge bits must be a 2-d matrix")
        if e.dtype != bool:
            if not np.all((e == 0) | (e == 1)):
                raise InstanceError("edge bits must be 0 or 1")
            e = e.astype(bool)
        object.__setattr__(self, "edges", _frozen(e))

    @property
    def shape(self):
        return self.edges.shape

    @property
    def is_stochastic(self) -> bool:
        return False

    def sample(self, rng=None) -> np.ndarray:
        return self.edges.copy()

    def __eq__(self, other):
        return isinstance(other, Adversarial) and np.array_equal(self.edges, other.edges)

    __hash__ = None


@dataclass(frozen=True, eq=False)
class IndependentBernoulli(Realization):
    """Each pair (u, v) carries an edge independently with probability probs[u, v]."""

    probs: np.ndarray
    kind: str = field(default="bernoulli", init=False)

    def __post_init__(self):
        p = np.asarray(self.probs, dtype=float)
        if p.ndim != 2:
            raise InstanceError("probabilities must be a 2-d matrix")
        if not np.all((p >= 0.0) & (p <= 1.0)):
            raise InstanceError("probability out of range [0, 1]")
        object.__setattr__(self, "probs", _frozen(p))

    @property
    def shape(self):
        return self.probs.shape

    def sample(self, rng: np.random.Generator) -> np.ndarray:
        return rng.random(self.probs.shape) < self.probs

    def __eq__(self, other):
        return isinstance(other, IndependentBernoulli) and np.array_equal(self.probs, other.probs)

    __hash__ = None


@dataclass(frozen=True, eq=False)
class JointSampler(Realization):
    """Arbitrarily correlated edges: ``draw(rng)`` returns a whole bit matrix."""

    draw: Callable[[np.random.Generator], np.ndarray]
    shape: tuple[int, int]
    kind: str = field(default="joint", init=False)

    def sample(self, rng: np.random.Generator) -> np.ndarray:
        bits = np.asarray(self.draw(rng), dtype=bool)
        if bits.shape != tuple(self.shape):
            raise InstanceError(f"joint sampler returned shape {bits.shape}, expected {self.shape}")
        return bits


def perfectly_correlated(shape: tuple[int, int], p: float = 0.5,
                         support: np.ndarray | None = None) -> JointSampler:
    """One coin for the whole graph: with probability p every pair in
    ``support`` (default: all pairs) is an edge, otherwise none is."""
    if not 0.0 <= p <= 1.0:
        raise InstanceError("probability out of range [0, 1]")
    mask = np.ones(shape, dtype=bool) if support is None else np.asarray(support, dtype=bool)
    mask = _frozen(mask)

    def draw(rng):
        return mask.copy() if rng.random() < p else np.zeros(shape, dtype=bool)

    return JointSampler(draw, tuple(shape))


# -- matchings ---------------------------------------------------------------

@dataclass(frozen=True)
class Matching:
    pairs: frozenset
    total_weight: float

    @classmethod
    def from_pairs(cls, instance: BipartiteInstance, pairs: Iterable[tuple[int, int]]) -> "Matching":
        pairs = sorted((int(u), int(v)) for u, v in pairs)
        lefts = [u for u, _ in pairs]
        rights = [v for _, v in pairs]
        if len(set(lefts)) != len(lefts) or len(set(rights)) != len(rights):
            raise InstanceError(f"not a matching: {pairs}")
        total = math.fsum(instance.weights[u, v] for u, v in pairs)
        return cls(frozenset(pairs), total)

    @classmethod
    def from_mates(cls, instance: BipartiteInstance, left_mate: np.ndarray) -> "Matching":
        return cls.from_pairs(instance, ((u, v) for u, v in enumerate(left_mate) if v >= 0))

    def __len__(self):
        return len(self.pairs)

    def sorted_pairs(self) -> list[tuple[int, int]]:
        return sorted(self.pairs)

    def left_mates(self, n_left: int) -> np.ndarray:
        mate = np.full(n_left, -1, dtype=np.int64)
        for u, v in self.pairs:
            mate[u] = v
        return mate

    def right_mates(self, n_right: int) -> np.ndarray:
        mate = np.full(n_right, -1, dtype=np.int64)
        for u, v in self.pairs:
            mate[v] = u
        return mate


@dataclass(frozen=True, eq=False)
class GainShares:
    alpha_left: np.ndarray
    alpha_right: np.ndarray

    def total(self) -> float:
        return math.fsum(self.alpha_left) + math.fsum(self.alpha_right)


# -- generators --------------------------------------------------------------

WEIGHT_DISTRIBUTIONS = ("uniform", "constant", "exponential", "integer")


def _draw_weights(rng, shape, dist: Mapping | str):
    if isinstance(dist, str):
        dist = {"kind": dist}
    kind = dist.get("kind", "uniform")
    if kind == "uniform":
        lo, hi = dist.get("low", 0.0), dist.get("high", 1.0)
        if not (0 <= lo <= hi) or not math.isfinite(hi):
            raise InstanceError(f"invalid uniform weight range [{lo}, {hi}]")
        return rng.uniform(lo, hi, size=shape)
    if kind == "constant":
        value = dist.get("value", 1.0)
        if not (math.isfinite(value) and value >= 0):
            raise InstanceError(f"invalid constant weight {value}")
        return np.full(shape, float(value))
    if kind == "exponential":
        scale = dist.get("scale", 1.0)
        if not (math.isfinite(scale) and scale > 0):
            raise InstanceError(f"invalid exponential scale {scale}")
        return rng.exponential(scale, size=shape)
    if kind == "integer":
        lo, hi = dist.get("low", 1), dist.get("high", 10)
        if not (0 <= lo <= hi):
            raise InstanceError(f"invalid integer weight range [{lo}, {hi}]")
        return rng.integers(lo, hi, size=shape, endpoint=True).astype(float)
    raise InstanceError(f"unknown weight distribution {kind!r}")


def generate_random(n_left: int, n_right: int, weights: Mapping | str = "uniform",
                    p: float = 0.5, seed: int = 0) -> tuple[BipartiteInstance, Adversarial]:
    """Random i.i.d. weights and a fixed edge set with each pair present w.p. p."""
    if n_left < 1 or n_right < 1:
        raise InstanceError("n_left and n_right must be >= 1")
    if not 0.0 <= p <= 1.0:
        raise InstanceError("probability out of range [0, 1]")
    rng = np.random.default_rng(seed)
    w = _draw_weights(rng, (n_left, n_right), weights)
    bits = rng.random((n_left, n_right)) < p
    return BipartiteInstance(w), Adversarial(bits)


def generate_upper_triangular(n: int) -> tuple[BipartiteInstance, Adversarial]:
    """Unit weights, edge (i, j) present iff i <= j."""
    if n < 1:
        raise InstanceError("n must be >= 1")
    return BipartiteInstance(np.ones((n, n))), Adversarial(np.triu(np.ones((n, n), dtype=bool)))


def blocking_instance() -> tuple[BipartiteInstance, Adversarial]:
    """2x2 unit weights with edges {(0,0), (0,1), (1,0)}; Ranking averages 1.5 against an optimum of 2."""
    return BipartiteInstance(np.ones((2, 2))), Adversarial(np.array([[1, 1], [1, 0]], dtype=bool))


# -- file I/O ----------------------------------------------------------------

def instance_to_dict(instance: BipartiteInstance, realization: Realization) -> dict:
    if tuple(realization.shape) != instance.shape:
        raise InstanceError("realization shape does not match instance")
    doc = {
        "n_left": instance.n_left,
        "n_right": instance.n_right,
        "weights": instance.weights.tolist(),
    }
    if isinstance(realization, Adversarial):
        doc["realization"] = {"type": "adversarial", "edges": realization.edges.astype(int).tolist()}
    elif isinstance(realization, IndependentBernoulli):
        doc["realization"] = {"type": "bernoulli", "probs": realization.probs.tolist()}
    else:
        raise InstanceError(f"realization of kind {realization.kind!r} cannot be serialized")
    return doc


def _matrix(rows, name, n_left, n_right):
    if not isinstance(rows, list) or len(rows) != n_left:
        raise InstanceError(f"dimension mismatch: {name} must have {n_left} rows")
    for i, row in enumerate(rows):
        if not isinstance(row, list) or len(row) != n_right:
            raise InstanceError(f"dimension mismatch: {name} row {i} must have {n_right} entries")
        for x in row:
            if isinstance(x, bool) or not isinstance(x, (int, float)):
                raise InstanceError(f"malformed {name} entry {x!r} in row {i}")
    return np.array(rows, dtype=float).reshape(n_left, n_right)


def instance_from_dict(doc: dict) -> tuple[BipartiteInstance, Realization]:
    if not isinstance(doc, dict):
        raise InstanceError("malformed instance file: top level must be an object")
    try:
        n_left, n_right = doc["n_left"], doc["n_right"]
        real = doc["realization"]
        weights = doc["weights"]
    except KeyError as exc:
        raise InstanceError(f"malformed instance file: missing field {exc.args[0]!r}") from None
    if not (isinstance(n_left, int) and isinstance(n_right, int)) or n_left < 1 or n_right < 1:
        raise InstanceError("malformed instance file: n_left and n_right must be positive integers")
    instance = check_instance(BipartiteInstance(_matrix(weights, "weights", n_left, n_right)))
    if not isinstance(real, dict):
        raise InstanceError("malformed instance file: realization must be an object")
    kind = real.get("type")
    if kind == "adversarial":
        bits = _matrix(real.get("edges"), "edges", n_left, n_right)
        return instance, Adversarial(bits)
    if kind == "bernoulli":
        return instance, IndependentBernoulli(_matrix(real.get("probs"), "probs", n_left, n_right))
    raise InstanceError(f"malformed instance file: unknown realization type {kind!r}")


def write_instance(path, instance: BipartiteInstance, realization: Realization) -> None:
    Path(path).write_text(json.dumps(instance_to_dict(instance, realization)) + "\n")


def read_instance(path) -> tuple[BipartiteInstance, Realization]:
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise InstanceError(f"malformed instance file: {exc}") from None
    return instance_from_dict(doc)
