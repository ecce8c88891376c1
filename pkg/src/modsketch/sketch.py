"""Linear sketches over F2, Z_p and general finite abelian groups.

A deterministic sketch is a small linear projection plus a dense
post-processing table; a randomized sketch is a finite, exactly weighted
distribution over deterministic ones.  Sketches can be evaluated offline,
maintained online through update streams, measured exactly or by Monte
Carlo, and serialized to a versioned JSON text format.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from .algebra import GroupSpec, SubgroupEnum, dot_f2
from .fourier import DenseFunction
from .seeding import derived_rng

__all__ = [
    "LinearJuntaF2",
    "ZpJunta",
    "HInvariantSketch",
    "RandomizedSketch",
    "SketchState",
    "Distribution",
    "eval_sketch",
    "bernoulli_round",
    "apply_stream",
    "success_probability",
    "approx_error",
    "serialize_sketch",
    "deserialize_sketch",
    "POST_TABLE_LIMIT",
]

POST_TABLE_LIMIT = 1 << 20
EXACT_EVAL_LIMIT = 1 << 24  # support size x input space for exact measurement


def _check_post_size(size: int):
    if size > POST_TABLE_LIMIT:
        raise ValueError(f"post-processing table of size {size} exceeds the cap")


@dataclass(frozen=True)
class LinearJuntaF2:
    """g(x) = post[(l_1(x), ..., l_k(x))] with l_j(x) = <rows[j], x> over F2.

    Rows are packed ints; the post table is indexed by the k-bit sketch
    value (bit j = l_j(x)).  Outputs may be binary ints or [0,1] floats.
    """

    n: int
    rows: tuple[int, ...]
    post: tuple

    def __post_init__(self):
        _check_post_size(1 << len(self.rows))
        if len(self.post) != 1 << len(self.rows):
            raise ValueError("post table must have size 2^k")
        if any(not 0 <= r < (1 << self.n) for r in self.rows):
            raise ValueError("row out of range")

    @property
    def k(self) -> int:
        return len(self.rows)

    @property
    def cost(self) -> int:
        return len(self.rows)

    def sketch_value(self, x: int) -> int:
        z = 0
        for j, row in enumerate(self.rows):
            z |= dot_f2(row, x) << j
        return z

    def eval(self, x: int):
        return self.post[self.sketch_value(x)]

    def sketch_values_all(self) -> np.ndarray:
        """Sketch value of every input (vectorized)."""
        xs = np.arange(1 << self.n, dtype=np.uint64)
        z = np.zeros(1 << self.n, dtype=np.int64)
        for j, row in enumerate(self.rows):
            z |= ((np.bitwise_count(xs & np.uint64(row)) & 1) << j).astype(np.int64)
        return z

    def eval_all(self) -> np.ndarray:
        return np.asarray(self.post)[self.sketch_values_all()]


@dataclass(frozen=True)
class ZpJunta:
    """g(x) = post[(l_1(x), ..., l_k(x))] with linear forms over Z_p."""

    n: int
    p: int
    rows: tuple[tuple[int, ...], ...]
    post: tuple

    def __post_init__(self):
        _check_post_size(self.p ** len(self.rows))
        if len(self.post) != self.p ** len(self.rows):
            raise ValueError("post table must have size p^k")
        for row in self.rows:
            if len(row) != self.n or any(not 0 <= c < self.p for c in row):
                raise ValueError("malformed row")

    @property
    def k(self) -> int:
        return len(self.rows)

    @property
    def cost(self) -> int:
        return len(self.rows)

    @property
    def group(self) -> GroupSpec:
        return GroupSpec.cyclic_power(self.p, self.n)

    def sketch_value(self, coords: Sequence[int]) -> tuple[int, ...]:
        return tuple(
            sum(r * c for r, c in zip(row, coords)) % self.p for row in self.rows
        )

    def _post_index(self, value: Sequence[int]) -> int:
        idx = 0
        for v in reversed(value):
            idx = idx * self.p + v
        return idx

    def eval(self, coords: Sequence[int]):
        return self.post[self._post_index(self.sketch_value(coords))]


@dataclass(frozen=True, eq=False)
class HInvariantSketch:
    """A function constant on every coset of a subgroup H.

    post is indexed by coset id (see SubgroupEnum.coset_ids); the linear
    complexity is the number of cosets |G/H|.
    """

    subgroup: SubgroupEnum
    post: tuple

    def __post_init__(self):
        _check_post_size(self.subgroup.n_cosets)
        if len(self.post) != self.subgroup.n_cosets:
            raise ValueError("post table must have one entry per coset")

    @property
    def group(self) -> GroupSpec:
        return self.subgroup.spec

    @property
    def complexity(self) -> int:
        return self.subgroup.n_cosets

    def eval(self, x: int):
        return self.post[self.subgroup.coset_ids()[x]]

    def eval_all(self) -> np.ndarray:
        return np.asarray(self.post)[self.subgroup.coset_ids()]


Sketch = LinearJuntaF2 | ZpJunta | HInvariantSketch


def _input_index(sketch: Sketch, x) -> int | Sequence[int]:
    """Normalize an input (index, BitVec/GroupVec, coords) per sketch kind."""
    if isinstance(sketch, LinearJuntaF2):
        if hasattr(x, "bits"):
            return x.bits
        return int(x)
    if isinstance(sketch, ZpJunta):
        if hasattr(x, "coords"):
            return x.coords
        if isinstance(x, (int, np.integer)):
            return sketch.group.decode(int(x))
        return x
    if hasattr(x, "index"):
        return x.index
    return int(x)


def eval_sketch(sketch: Sketch, x):
    """Evaluate a deterministic sketch on an input (dimension-checked)."""
    arg = _input_index(sketch, x)
    if isinstance(sketch, LinearJuntaF2):
        if not 0 <= arg < 1 << sketch.n:
            raise ValueError(f"input {arg} out of range for n={sketch.n}")
    elif isinstance(sketch, ZpJunta):
        if len(arg) != sketch.n or any(not 0 <= c < sketch.p for c in arg):
            raise ValueError("input coordinates do not match the sketch shape")
    elif not 0 <= arg < sketch.group.size:
        raise ValueError(f"input index {arg} outside the group")
    return sketch.eval(arg)


def eval_sketch_all(sketch: Sketch) -> np.ndarray:
    """Dense output vector over the whole input group."""
    if isinstance(sketch, ZpJunta):
        group = sketch.group
        return np.array([sketch.eval(group.decode(x)) for x in range(group.size)])
    return sketch.eval_all()


@dataclass
class RandomizedSketch:
    """Finite distribution over deterministic sketches with exact weights."""

    entries: list[tuple[Fraction, Sketch]]
    seed: int = 0
    error_budget: float | None = None

    def __post_init__(self):
        total = sum(w for w, _ in self.entries)
        if total != 1:
            raise ValueError(f"weights must sum to 1 exactly, got {total}")
        if any(w < 0 for w, _ in self.entries):
            raise ValueError("negative weight")

    @classmethod
    def uniform_mixture(cls, sketches: Sequence[Sketch], seed: int = 0) -> "RandomizedSketch":
        w = Fraction(1, len(sketches))
        return cls([(w, s) for s in sketches], seed=seed)

    @classmethod
    def deterministic(cls, sketch: Sketch, seed: int = 0) -> "RandomizedSketch":
        return cls([(Fraction(1), sketch)], seed=seed)

    def sample(self, rng) -> Sketch:
        u = Fraction(rng.getrandbits(64), 1 << 64)
        acc = Fraction(0)
        for w, s in self.entries:
            acc += w
            if u < acc:
                return s
        return self.entries[-1][1]


def bernoulli_round(sketch: Sketch, seed: int = 0) -> Sketch:
    """Fix the internal randomness of a [0,1]-valued sketch.

    Each post-table bucket z independently becomes 1 with probability
    post[z], drawn from a seeded stream, yielding a binary sketch of the
    same shape; averaging over seeds recovers the original table.
    """
    rng = derived_rng(seed, "bernoulli-round")
    post = tuple(
        1 if rng.random() < float(v) else 0 for v in sketch.post
    )
    if isinstance(sketch, LinearJuntaF2):
        return LinearJuntaF2(sketch.n, sketch.rows, post)
    if isinstance(sketch, ZpJunta):
        return ZpJunta(sketch.n, sketch.p, sketch.rows, post)
    return HInvariantSketch(sketch.subgroup, post)


class SketchState:
    """Online state of one sketch under a stream of updates (single writer)."""

    def __init__(self, sketch: Sketch):
        self.sketch = sketch
        self.updates = 0
        if isinstance(sketch, LinearJuntaF2):
            self._z = 0
            cols = []
            for i in range(sketch.n):
                mask = 0
                for j, row in enumerate(sketch.rows):
                    if (row >> i) & 1:
                        mask |= 1 << j
                cols.append(mask)
            self._cols = cols
        elif isinstance(sketch, ZpJunta):
            self._vec = [0] * sketch.k
        else:
            self._q = 0  # coset id of the accumulated input
            self._qadd = sketch.subgroup.quotient_add_table()
            self._unit_cosets = sketch.subgroup.coset_ids()

    @property
    def n(self) -> int:
        if isinstance(self.sketch, HInvariantSketch):
            return self.sketch.group.n
        return self.sketch.n

    def apply(self, coordinate: int, increment: int):
        if not 0 <= coordinate < self.n:
            raise IndexError(f"coordinate {coordinate} out of range")
        self.updates += 1
        sk = self.sketch
        if isinstance(sk, LinearJuntaF2):
            if increment & 1:
                self._z ^= self._cols[coordinate]
        elif isinstance(sk, ZpJunta):
            for j, row in enumerate(sk.rows):
                self._vec[j] = (self._vec[j] + row[coordinate] * increment) % sk.p
        else:
            spec = sk.group
            delta = spec.encode(
                tuple(
                    increment % m if j == coordinate else 0
                    for j, m in enumerate(spec.moduli)
                )
            )
            self._q = int(self._qadd[self._q, self._unit_cosets[delta]])

    def values(self):
        """The maintained linear image of the accumulated input."""
        if isinstance(self.sketch, LinearJuntaF2):
            return self._z
        if isinstance(self.sketch, ZpJunta):
            return tuple(self._vec)
        return self._q

    def output(self):
        sk = self.sketch
        if isinstance(sk, LinearJuntaF2):
            return sk.post[self._z]
        if isinstance(sk, ZpJunta):
            return sk.post[sk._post_index(tuple(self._vec))]
        return sk.post[self._q]


def apply_stream(sketch: Sketch, updates: Iterable[tuple[int, int]]) -> SketchState:
    """Run a sequence of (coordinate, increment) updates through a sketch."""
    state = SketchState(sketch)
    for coord, inc in updates:
        state.apply(coord, inc)
    return state


@dataclass(eq=False)
class Distribution:
    """A probability distribution over group elements (dense weights)."""

    group: GroupSpec
    probs: np.ndarray
    name: str = "custom"

    def __post_init__(self):
        self.probs = np.asarray(self.probs, dtype=np.float64)
        if self.probs.shape != (self.group.size,):
            raise ValueError("probability vector must have length |G|")
        if np.any(self.probs < -1e-15):
            raise ValueError("negative probability")
        s = float(self.probs.sum())
        if abs(s - 1.0) > 1e-9:
            raise ValueError(f"probabilities sum to {s}, not 1")

    @classmethod
    def uniform(cls, group: GroupSpec) -> "Distribution":
        return cls(group, np.full(group.size, 1.0 / group.size), name="uniform")

    @classmethod
    def from_weights(cls, group: GroupSpec, weights) -> "Distribution":
        w = np.asarray(weights, dtype=np.float64)
        return cls(group, w / w.sum(), name="weighted")

    def sample(self, rng, count: int = 1) -> list[int]:
        return rng.choices(range(self.group.size), weights=self.probs, k=count)

    def mean(self, values: np.ndarray) -> float:
        return float(np.dot(self.probs, values))


def _sketch_group(sketch: Sketch) -> GroupSpec:
    if isinstance(sketch, LinearJuntaF2):
        return GroupSpec.boolean(sketch.n)
    return sketch.group


def _support(rsk: RandomizedSketch | Sketch) -> list[tuple[Fraction, Sketch]]:
    if isinstance(rsk, RandomizedSketch):
        return rsk.entries
    return [(Fraction(1), rsk)]


def success_probability(
    rsk: RandomizedSketch | Sketch,
    f: DenseFunction,
    mode: str = "exact",
    D: Distribution | None = None,
    samples: int = 10000,
    seed: int = 0,
):
    """Per-input probability that the sketch output equals f.

    exact mode enumerates the declared support and returns exact rationals
    (one Fraction per input), or their D-weighted mean if D is given.
    montecarlo mode samples sketches and returns (estimates, standard
    errors) as arrays, or scalars under D.
    """
    entries = _support(rsk)
    group = _sketch_group(entries[0][1])
    if f.group != group:
        raise ValueError("function group does not match the sketch")
    target = f.real_values()
    if not np.all(np.isin(target, (0.0, 1.0))):
        raise ValueError("success probability needs a binary target; use approx_error")

    if mode == "exact":
        if len(entries) * group.size > EXACT_EVAL_LIMIT:
            raise ValueError("support x input space too large for exact mode")
        per_x = [Fraction(0)] * group.size
        for w, sk in entries:
            out = eval_sketch_all(sk)
            agree = out == target
            for x in np.nonzero(agree)[0]:
                per_x[int(x)] += w
        if D is None:
            return per_x
        return float(np.dot(D.probs, [float(p) for p in per_x]))

    if mode != "montecarlo":
        raise ValueError(f"unknown mode {mode!r}")
    rng = derived_rng(seed, "success-mc")
    counts = np.zeros(group.size, dtype=np.int64)
    rsk_obj = rsk if isinstance(rsk, RandomizedSketch) else RandomizedSketch.deterministic(rsk)
    for _ in range(samples):
        sk = rsk_obj.sample(rng)
        counts += eval_sketch_all(sk) == target
    est = counts / samples
    stderr = np.sqrt(np.maximum(est * (1 - est), 1e-300) / samples)
    if D is None:
        return est, stderr
    return float(np.dot(D.probs, est)), float(np.dot(D.probs, stderr))


def approx_error(
    rsk: RandomizedSketch | Sketch,
    f: DenseFunction,
    mode: str = "exact",
    D: Distribution | None = None,
    samples: int = 10000,
    seed: int = 0,
):
    """E |g(x) - f(x)|^2 per input (max over x), or its D-weighted mean.

    Both the sketch outputs and f must take values in [0, 1].
    """
    entries = _support(rsk)
    group = _sketch_group(entries[0][1])
    target = f.real_values()
    if np.any(target < -1e-12) or np.any(target > 1 + 1e-12):
        raise ValueError("f must take values in [0, 1]")

    if mode == "exact":
        if len(entries) * group.size > EXACT_EVAL_LIMIT:
            raise ValueError("support x input space too large for exact mode")
        per_x = np.zeros(group.size, dtype=np.float64)
        for w, sk in entries:
            out = np.asarray(eval_sketch_all(sk), dtype=np.float64)
            if np.any(out < -1e-12) or np.any(out > 1 + 1e-12):
                raise ValueError("sketch outputs must lie in [0, 1]")
            per_x += float(w) * (out - target) ** 2
    elif mode == "montecarlo":
        rng = derived_rng(seed, "error-mc")
        rsk_obj = rsk if isinstance(rsk, RandomizedSketch) else RandomizedSketch.deterministic(rsk)
        per_x = np.zeros(group.size, dtype=np.float64)
        for _ in range(samples):
            sk = rsk_obj.sample(rng)
            out = np.asarray(eval_sketch_all(sk), dtype=np.float64)
            per_x += (out - target) ** 2
        per_x /= samples
    else:
        raise ValueError(f"unknown mode {mode!r}")

    if D is None:
        return float(np.max(per_x))
    return float(np.dot(D.probs, per_x))


_FORMAT = "modsketch.sketch"
_VERSION = 1


def _sketch_to_dict(sk: Sketch) -> dict:
    if isinstance(sk, LinearJuntaF2):
        return {
            "kind": "linear-junta-f2",
            "n": sk.n,
            "rows": list(sk.rows),
            "post": list(sk.post),
        }
    if isinstance(sk, ZpJunta):
        return {
            "kind": "zp-junta",
            "n": sk.n,
            "p": sk.p,
            "rows": [list(r) for r in sk.rows],
            "post": list(sk.post),
        }
    return {
        "kind": "h-invariant",
        "moduli": list(sk.group.moduli),
        "subgroup": list(sk.subgroup.elements),
        "post": list(sk.post),
    }


def _sketch_from_dict(d: dict) -> Sketch:
    kind = d["kind"]
    if kind == "linear-junta-f2":
        return LinearJuntaF2(d["n"], tuple(d["rows"]), tuple(d["post"]))
    if kind == "zp-junta":
        return ZpJunta(
            d["n"], d["p"], tuple(tuple(r) for r in d["rows"]), tuple(d["post"])
        )
    if kind == "h-invariant":
        spec = GroupSpec(d["moduli"])
        return HInvariantSketch(SubgroupEnum(spec, d["subgroup"]), tuple(d["post"]))
    raise ValueError(f"unknown sketch kind {kind!r}")


def serialize_sketch(sk: Sketch | RandomizedSketch) -> str:
    """Versioned JSON text form of a sketch (round-trips exactly)."""
    if isinstance(sk, RandomizedSketch):
        body = {
            "kind": "randomized",
            "seed": sk.seed,
            "entries": [
                {"weight": f"{w.numerator}/{w.denominator}", "sketch": _sketch_to_dict(s)}
                for w, s in sk.entries
            ],
        }
    else:
        body = _sketch_to_dict(sk)
    return json.dumps({"format": _FORMAT, "version": _VERSION, **body}, indent=2)


def deserialize_sketch(text: str) -> Sketch | RandomizedSketch:
    d = json.loads(text)
    if d.get("format") != _FORMAT:
        raise ValueError("not a sketch file")
    if d.get("version") != _VERSION:
        raise ValueError(f"unsupported sketch format version {d.get('version')}")
    if d["kind"] == "randomized":
        entries = []
        for e in d["entries"]:
            num, den = e["weight"].split("/")
            entries.append((Fraction(int(num), int(den)), _sketch_from_dict(e["sketch"])))
        return RandomizedSketch(entries, seed=d.get("seed", 0))
    return _sketch_from_dict(d)
