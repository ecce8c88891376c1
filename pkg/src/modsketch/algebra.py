"""Exact linear algebra over F2 and arithmetic in finite abelian groups.

F2 vectors are packed into Python ints (bit i = coordinate i), so all F2
arithmetic is exact integer work.  General group elements live in
Z_{m1} x ... x Z_{mn} and are addressed either as coordinate tuples or as
mixed-radix indices (coordinate 0 is the fastest-varying digit).

Everything here is immutable after construction and safe to share.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

__all__ = [
    "BitVec",
    "GroupSpec",
    "GroupVec",
    "SubspaceF2",
    "SubgroupEnum",
    "CharacterIndex",
    "dot_f2",
    "rank_basis",
    "orthogonal_complement",
    "coset_rep",
    "max_independent_subset",
    "char_eval",
    "subgroup_from_elements",
]


def dot_f2(a: int, b: int) -> int:
    """Inner product of two packed F2 vectors."""
    return (a & b).bit_count() & 1


@dataclass(frozen=True)
class BitVec:
    """An element of F2^n, packed into an int (bit i = coordinate i)."""

    bits: int
    n: int

    def __post_init__(self):
        if self.n < 0 or not 0 <= self.bits < (1 << self.n):
            raise ValueError(f"bits {self.bits:#x} out of range for n={self.n}")

    def __add__(self, other: "BitVec") -> "BitVec":
        if self.n != other.n:
            raise ValueError("dimension mismatch")
        return BitVec(self.bits ^ other.bits, self.n)

    __xor__ = __add__
    __sub__ = __add__

    def __getitem__(self, i: int) -> int:
        return (self.bits >> i) & 1

    def weight(self) -> int:
        return self.bits.bit_count()

    def to_tuple(self) -> tuple[int, ...]:
        return tuple((self.bits >> i) & 1 for i in range(self.n))

    @classmethod
    def from_coords(cls, coords: Sequence[int]) -> "BitVec":
        bits = 0
        for i, c in enumerate(coords):
            if c & 1:
                bits |= 1 << i
        return cls(bits, len(coords))


class GroupSpec:
    """Descriptor of Z_{m1} x ... x Z_{mn}; doubles as its own dual group.

    Elements are addressed by mixed-radix index: index = sum_j a_j * stride_j
    with stride_0 = 1.  For the all-2 ("boolean") case the index coincides
    with the packed F2 bitmask.
    """

    __slots__ = (
        "moduli",
        "n",
        "size",
        "exponent",
        "strides",
        "_char_tables",
        "_coords",
    )

    def __init__(self, moduli: Sequence[int]):
        moduli = tuple(int(m) for m in moduli)
        if not moduli:
            raise ValueError("need at least one coordinate")
        if any(m < 2 for m in moduli):
            raise ValueError("all moduli must be >= 2")
        self.moduli = moduli
        self.n = len(moduli)
        size = 1
        strides = []
        for m in moduli:
            strides.append(size)
            size *= m
        self.size = size
        self.strides = tuple(strides)
        self.exponent = math.lcm(*moduli)
        self._char_tables = None
        self._coords = None

    @classmethod
    def boolean(cls, n: int) -> "GroupSpec":
        return cls((2,) * n)

    @classmethod
    def cyclic_power(cls, p: int, n: int) -> "GroupSpec":
        """Z_p^n."""
        return cls((p,) * n)

    @property
    def is_boolean(self) -> bool:
        return all(m == 2 for m in self.moduli)

    def __eq__(self, other) -> bool:
        return isinstance(other, GroupSpec) and self.moduli == other.moduli

    def __hash__(self) -> int:
        return hash(self.moduli)

    def __repr__(self) -> str:
        if self.is_boolean:
            return f"GroupSpec.boolean({self.n})"
        return f"GroupSpec({list(self.moduli)})"

    def encode(self, coords: Sequence[int]) -> int:
        if len(coords) != self.n:
            raise ValueError("coordinate count mismatch")
        idx = 0
        for c, m, s in zip(coords, self.moduli, self.strides):
            idx += (c % m) * s
        return idx

    def decode(self, index: int) -> tuple[int, ...]:
        if not 0 <= index < self.size:
            raise ValueError(f"index {index} out of range")
        out = []
        for m in self.moduli:
            out.append(index % m)
            index //= m
        return tuple(out)

    def add(self, i: int, j: int) -> int:
        """Index of the group sum of elements i and j."""
        idx = 0
        for m, s in zip(self.moduli, self.strides):
            idx += ((i % m + j % m) % m) * s
            i //= m
            j //= m
        return idx

    def neg(self, i: int) -> int:
        idx = 0
        for m, s in zip(self.moduli, self.strides):
            idx += ((m - i % m) % m) * s
            i //= m
        return idx

    def sub(self, i: int, j: int) -> int:
        return self.add(i, self.neg(j))

    def coords_matrix(self) -> np.ndarray:
        """All elements as a (size, n) int64 coordinate matrix (cached)."""
        if self._coords is None:
            cols = []
            idx = np.arange(self.size, dtype=np.int64)
            for m, s in zip(self.moduli, self.strides):
                cols.append((idx // s) % m)
            self._coords = np.stack(cols, axis=1)
            self._coords.setflags(write=False)
        return self._coords

    def encode_matrix(self, coords: np.ndarray) -> np.ndarray:
        """Vectorized mixed-radix encoding of a (k, n) coordinate array."""
        moduli = np.asarray(self.moduli, dtype=np.int64)
        strides = np.asarray(self.strides, dtype=np.int64)
        return ((coords % moduli) * strides).sum(axis=1)

    def char_table(self, j: int) -> np.ndarray:
        """Roots of unity exp(2*pi*i*k/m_j) for coordinate j."""
        if self._char_tables is None:
            tables = []
            for m in self.moduli:
                tables.append(
                    np.exp(2j * np.pi * np.arange(m) / m).astype(np.complex128)
                )
            self._char_tables = tuple(tables)
        return self._char_tables[j]

    def unit_updates(self, index: int) -> list[tuple[int, int]]:
        """Stream updates (coordinate, increment) encoding one element,
        coordinates ascending, one update per nonzero coordinate."""
        out = []
        for j, m in enumerate(self.moduli):
            a = index % m
            index //= m
            if a:
                out.append((j, a))
        return out


@dataclass(frozen=True)
class GroupVec:
    """An element of a finite abelian group, in mixed-radix coordinates."""

    coords: tuple[int, ...]
    spec: GroupSpec

    def __post_init__(self):
        if len(self.coords) != self.spec.n:
            raise ValueError("coordinate count mismatch")
        if any(not 0 <= c < m for c, m in zip(self.coords, self.spec.moduli)):
            raise ValueError("coordinate out of range")

    @property
    def index(self) -> int:
        return self.spec.encode(self.coords)

    @classmethod
    def from_index(cls, index: int, spec: GroupSpec) -> "GroupVec":
        return cls(spec.decode(index), spec)

    def __add__(self, other: "GroupVec") -> "GroupVec":
        if self.spec != other.spec:
            raise ValueError("group mismatch")
        coords = tuple(
            (a + b) % m
            for a, b, m in zip(self.coords, other.coords, self.spec.moduli)
        )
        return GroupVec(coords, self.spec)

    def __neg__(self) -> "GroupVec":
        coords = tuple((m - a) % m for a, m in zip(self.coords, self.spec.moduli))
        return GroupVec(coords, self.spec)

    def __sub__(self, other: "GroupVec") -> "GroupVec":
        return self + (-other)


# A character of G is indexed by a group element gamma of the (isomorphic)
# dual group: gamma(x) = prod_j exp(2*pi*i*gamma_j*x_j/m_j).
CharacterIndex = GroupVec


def char_eval(gamma: GroupVec, x: GroupVec) -> complex:
    """Evaluate the character indexed by gamma at x (unit modulus)."""
    if gamma.spec != x.spec:
        raise ValueError("group mismatch")
    spec = gamma.spec
    out = complex(1.0)
    for j, (g, a) in enumerate(zip(gamma.coords, x.coords)):
        out *= spec.char_table(j)[(g * a) % spec.moduli[j]]
    return out


def char_eval_index(spec: GroupSpec, gamma: int, x: int) -> complex:
    """char_eval on mixed-radix indices; exact phase arithmetic mod lcm."""
    m = spec.exponent
    phase = 0
    for mj in spec.moduli:
        phase += (m // mj) * (gamma % mj) * (x % mj)
        gamma //= mj
        x //= mj
    return cmath.exp(2j * cmath.pi * (phase % m) / m)


@dataclass(frozen=True)
class SubspaceF2:
    """A subspace of F2^n given by a reduced row-echelon basis.

    Basis rows are packed ints sorted by pivot (lowest set bit) ascending;
    each pivot coordinate appears in exactly one row, so reduction against
    the basis is a deterministic normal form.
    """

    n: int
    basis: tuple[int, ...]

    @property
    def dim(self) -> int:
        return len(self.basis)

    def reduce(self, x: int) -> int:
        """Normal form of x modulo the subspace (canonical coset member)."""
        for row in self.basis:
            if x & (row & -row):
                x ^= row
        return x

    def contains(self, x: int) -> bool:
        return self.reduce(x) == 0

    def elements(self) -> list[int]:
        """All 2^dim members (for desk-scale dims only)."""
        out = [0]
        for row in self.basis:
            out += [v ^ row for v in out]
        return sorted(out)


def rank_basis(rows: Iterable[int | BitVec], n: int | None = None) -> SubspaceF2:
    """Reduced echelon basis of the span of the given F2 row vectors.

    Accepts packed ints (n required) or BitVec values (n inferred).
    """
    packed: list[int] = []
    for r in rows:
        if isinstance(r, BitVec):
            if n is None:
                n = r.n
            elif r.n != n:
                raise ValueError("dimension mismatch among rows")
            packed.append(r.bits)
        else:
            packed.append(int(r))
    if n is None:
        raise ValueError("dimension n required when rows are packed ints")
    if any(not 0 <= r < (1 << n) for r in packed):
        raise ValueError("row out of range for given dimension")

    basis: list[int] = []  # kept with distinct pivots (lowest set bits)
    for v in packed:
        for b in basis:
            if v & (b & -b):
                v ^= b
        if v:
            # clear the new pivot from existing rows to stay fully reduced
            p = v & -v
            basis = [b ^ v if b & p else b for b in basis]
            basis.append(v)
    basis.sort(key=lambda b: b & -b)
    return SubspaceF2(n, tuple(basis))


def orthogonal_complement(space: SubspaceF2) -> SubspaceF2:
    """The subspace of all vectors orthogonal (mod 2) to the given one."""
    n = space.n
    pivots = [(row & -row).bit_length() - 1 for row in space.basis]
    pivot_set = set(pivots)
    comp: list[int] = []
    for j in range(n):
        if j in pivot_set:
            continue
        v = 1 << j
        for row, p in zip(space.basis, pivots):
            if (row >> j) & 1:
                v |= 1 << p
        comp.append(v)
    return rank_basis(comp, n)


def coset_rep(space: SubspaceF2, x: int | BitVec) -> int:
    """Canonical representative of x + V; equal reps iff same coset."""
    if isinstance(x, BitVec):
        x = x.bits
    return space.reduce(x)


def max_independent_subset(
    vectors: Sequence[int | BitVec],
    weights: Sequence[float],
    n: int | None = None,
) -> list[int]:
    """Greedy maximal linearly independent subset, heaviest first.

    Ties are broken lexicographically on the coordinate sequence
    (coordinate 0 first).  Returns packed ints in selection order; the
    output spans the same space as the input.
    """
    if len(vectors) != len(weights):
        raise ValueError("weights length must match vectors")
    packed = []
    for v in vectors:
        if isinstance(v, BitVec):
            if n is None:
                n = v.n
            packed.append(v.bits)
        else:
            packed.append(int(v))
    if n is None:
        raise ValueError("dimension n required when vectors are packed ints")

    def lex_key(bits: int) -> tuple[int, ...]:
        return tuple((bits >> i) & 1 for i in range(n))

    order = sorted(
        range(len(packed)), key=lambda i: (-weights[i], lex_key(packed[i]))
    )
    chosen: list[int] = []
    basis: list[int] = []
    for i in order:
        v = packed[i]
        w = v
        for b in basis:
            if w & (b & -b):
                w ^= b
        if w:
            p = w & -w
            basis = [b ^ w if b & p else b for b in basis]
            basis.append(w)
            chosen.append(v)
    return chosen


class SubgroupEnum:
    """A subgroup of a finite abelian group as an explicit element list."""

    __slots__ = ("spec", "elements", "_member_set", "_coset_ids", "_n_cosets")

    def __init__(self, spec: GroupSpec, elements: Iterable[int]):
        self.spec = spec
        self.elements = tuple(sorted(set(int(e) for e in elements)))
        if not self.elements or self.elements[0] != 0:
            raise ValueError("subgroup must contain the identity")
        self._member_set = frozenset(self.elements)
        self._coset_ids = None
        self._n_cosets = None

    def __len__(self) -> int:
        return len(self.elements)

    def __contains__(self, index: int) -> bool:
        return index in self._member_set

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, SubgroupEnum)
            and self.spec == other.spec
            and self.elements == other.elements
        )

    def __hash__(self) -> int:
        return hash((self.spec, self.elements))

    def verify_closed(self) -> bool:
        """Exhaustive closure check (addition and negation), vectorized."""
        spec = self.spec
        members = np.zeros(spec.size, dtype=bool)
        idx = np.asarray(self.elements, dtype=np.int64)
        members[idx] = True
        coords = spec.coords_matrix()[idx]
        if not members[spec.encode_matrix(-coords)].all():
            return False
        return all(
            members[spec.encode_matrix(coords + spec.coords_matrix()[a])].all()
            for a in self.elements
        )

    def generators(self) -> list[int]:
        """A small generating set, found by greedy closure growth."""
        gens: list[int] = []
        closure = {0}
        for e in self.elements:
            if e in closure:
                continue
            gens.append(e)
            frontier = list(closure)
            for c in frontier:
                v = self.spec.add(c, e)
                while v not in closure:
                    closure.add(v)
                    v = self.spec.add(v, e)
        return gens

    @property
    def n_cosets(self) -> int:
        self.coset_ids()
        return self._n_cosets

    def coset_ids(self) -> np.ndarray:
        """Map every group element index to a coset id in [0, |G|/|H|).

        Coset ids are assigned in increasing order of the smallest element
        of the coset, so id 0 is the subgroup itself.
        """
        if self._coset_ids is None:
            spec = self.spec
            ids = np.full(spec.size, -1, dtype=np.int64)
            members = np.asarray(self.elements, dtype=np.int64)
            member_coords = spec.coords_matrix()[members]
            next_id = 0
            for x in range(spec.size):
                if ids[x] != -1:
                    continue
                shifted = spec.encode_matrix(member_coords + spec.coords_matrix()[x])
                ids[shifted] = next_id
                next_id += 1
            ids.setflags(write=False)
            self._coset_ids = ids
            self._n_cosets = next_id
        return self._coset_ids

    def quotient_add_table(self) -> np.ndarray:
        """Addition table of the quotient group on coset ids."""
        ids = self.coset_ids()
        reps = [int(np.argmax(ids == q)) for q in range(self.n_cosets)]
        table = np.empty((self.n_cosets, self.n_cosets), dtype=np.int64)
        for a, ra in enumerate(reps):
            for b, rb in enumerate(reps):
                table[a, b] = ids[self.spec.add(ra, rb)]
        return table


def subgroup_from_elements(spec: GroupSpec, elements: Iterable[int]) -> SubgroupEnum:
    """Build a SubgroupEnum after verifying closure exhaustively."""
    sub = SubgroupEnum(spec, elements)
    if not sub.verify_closed():
        raise ValueError("element set is not closed under the group operation")
    return sub


def subgroup_generated(spec: GroupSpec, generators: Iterable[int]) -> SubgroupEnum:
    """Closure of a generator list (desk scale: closure fits in memory)."""
    closure = {0}
    for g in generators:
        frontier = list(closure)
        for c in frontier:
            v = spec.add(c, g)
            while v not in closure:
                closure.add(v)
                v = spec.add(v, g)
    return SubgroupEnum(spec, closure)


def density(count: int, size: int) -> Fraction:
    """Exact density |A|/|G| as a rational."""
    return Fraction(count, size)
