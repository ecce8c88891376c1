"""Fourier analysis on F2^n and finite abelian groups.

Conventions: for f on G, the coefficient at character gamma is
fhat(gamma) = E_x f(x) * conj(gamma(x)), so the point mass |G|*1_{0} has
all-ones spectrum and f(x) = sum_gamma fhat(gamma) * gamma(x).
Convolution is (f*g)(x) = E_y f(y) g(x-y), hence hat(f*g) = fhat * ghat.

The fast path is a hand-rolled Walsh-Hadamard butterfly for all-2 moduli
and per-coordinate FFTs (numpy) for general mixed-radix groups.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from .algebra import GroupSpec, SubgroupEnum, SubspaceF2, max_independent_subset

__all__ = [
    "DenseFunction",
    "Spectrum",
    "NormalizedIndicator",
    "transform",
    "inverse_transform",
    "normalized_indicator",
    "convolve",
    "averaged_shift",
    "mixing_gap",
    "chang_sum",
    "is_dissociated",
    "extract_dissociated",
    "annihilator",
    "dual_annihilator_mask",
    "TransformLimitError",
    "DissociationLimitError",
    "ChangBoundError",
    "MixingBoundError",
]

TRANSFORM_SIZE_LIMIT = 1 << 20
DISSOCIATED_DEFAULT_LIMIT = 16
_MITM_THRESHOLD = 12
CHANG_DEFAULT_CONSTANT = 8.0


class TransformLimitError(ValueError):
    pass


class DissociationLimitError(ValueError):
    pass


class ChangBoundError(AssertionError):
    pass


class MixingBoundError(AssertionError):
    pass


@dataclass(eq=False)
class DenseFunction:
    """A function on a finite abelian group, stored densely by index."""

    group: GroupSpec
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values)
        if self.values.shape != (self.group.size,):
            raise ValueError("value array must have length |G|")

    @classmethod
    def from_callable(cls, group: GroupSpec, fn, dtype=np.float64) -> "DenseFunction":
        return cls(group, np.array([fn(x) for x in range(group.size)], dtype=dtype))

    @classmethod
    def constant(cls, group: GroupSpec, value: float = 1.0) -> "DenseFunction":
        return cls(group, np.full(group.size, value, dtype=np.float64))

    @classmethod
    def point_mass(cls, group: GroupSpec, at: int = 0) -> "DenseFunction":
        """The normalized point mass |G| * 1_{x=at} (all-ones spectrum at 0)."""
        v = np.zeros(group.size, dtype=np.float64)
        v[at] = group.size
        return cls(group, v)

    def real_values(self, tol: float = 1e-9) -> np.ndarray:
        if np.iscomplexobj(self.values):
            if np.max(np.abs(self.values.imag), initial=0.0) > tol:
                raise ValueError("function has a non-negligible imaginary part")
            return self.values.real.copy()
        return self.values


@dataclass(eq=False)
class Spectrum:
    """Fourier coefficients indexed by the (mixed-radix) dual group."""

    group: GroupSpec
    coeffs: np.ndarray

    def __post_init__(self):
        self.coeffs = np.asarray(self.coeffs, dtype=np.complex128)
        if self.coeffs.shape != (self.group.size,):
            raise ValueError("coefficient array must have length |G|")

    def energy(self) -> float:
        """sum |fhat(gamma)|^2; equals E|f|^2 by Parseval."""
        return float(np.sum(np.abs(self.coeffs) ** 2))


def _fwht(values: np.ndarray) -> np.ndarray:
    """In-place-style fast Walsh-Hadamard transform (unnormalized)."""
    a = np.array(values, copy=True)
    size = a.shape[0]
    h = 1
    while h < size:
        a = a.reshape(-1, 2, h)
        top = a[:, 0, :].copy()
        a[:, 0, :] = top + a[:, 1, :]
        a[:, 1, :] = top - a[:, 1, :]
        a = a.reshape(size)
        h *= 2
    return a


def _check_size(group: GroupSpec):
    if group.size > TRANSFORM_SIZE_LIMIT:
        raise TransformLimitError(
            f"|G| = {group.size} exceeds the transform limit {TRANSFORM_SIZE_LIMIT}"
        )


def transform(f: DenseFunction) -> Spectrum:
    """Fourier transform; butterfly over F2^n, mixed-radix FFT otherwise."""
    _check_size(f.group)
    group = f.group
    if group.is_boolean:
        coeffs = _fwht(f.values.astype(np.complex128)) / group.size
    else:
        shape = group.moduli[::-1]  # coordinate 0 is the fastest-varying axis
        grid = f.values.astype(np.complex128).reshape(shape)
        coeffs = np.fft.fftn(grid).reshape(group.size) / group.size
    return Spectrum(group, coeffs)


def inverse_transform(spectrum: Spectrum) -> DenseFunction:
    """Inverse of transform(); returns a complex-valued DenseFunction."""
    _check_size(spectrum.group)
    group = spectrum.group
    if group.is_boolean:
        values = _fwht(spectrum.coeffs.astype(np.complex128))
    else:
        shape = group.moduli[::-1]
        grid = spectrum.coeffs.reshape(shape)
        values = np.fft.ifftn(grid).reshape(group.size) * group.size
    return DenseFunction(group, values)


@dataclass(eq=False)
class NormalizedIndicator:
    """phi_A = (|G|/|A|) * 1_A, normalized so phihat(0) = 1."""

    group: GroupSpec
    members: np.ndarray  # boolean bitmap over element indices

    def __post_init__(self):
        self.members = np.asarray(self.members, dtype=bool)
        if self.members.shape != (self.group.size,):
            raise ValueError("membership bitmap must have length |G|")
        self._count = int(np.count_nonzero(self.members))
        if self._count == 0:
            raise ValueError("indicator of the empty set is undefined")
        self._spectrum = None

    @property
    def count(self) -> int:
        return self._count

    @property
    def density(self) -> Fraction:
        return Fraction(self._count, self.group.size)

    def phi(self) -> DenseFunction:
        values = np.where(self.members, self.group.size / self._count, 0.0)
        return DenseFunction(self.group, values)

    def spectrum(self) -> Spectrum:
        if self._spectrum is None:
            self._spectrum = transform(self.phi())
        return self._spectrum


def normalized_indicator(
    group: GroupSpec, members: Iterable[int] | np.ndarray
) -> NormalizedIndicator:
    """Normalized indicator of a non-empty subset (indices or bool bitmap)."""
    arr = np.asarray(members)
    if arr.dtype == bool and arr.shape == (group.size,):
        bitmap = arr.copy()
    else:
        bitmap = np.zeros(group.size, dtype=bool)
        bitmap[np.asarray(list(members), dtype=np.int64)] = True
    return NormalizedIndicator(group, bitmap)


def convolve(f: DenseFunction, g: DenseFunction) -> DenseFunction:
    """(f*g)(x) = E_y f(y) g(x-y), computed by spectral product."""
    if f.group != g.group:
        raise ValueError("group mismatch")
    fh = transform(f).coeffs
    gh = transform(g).coeffs
    return inverse_transform(Spectrum(f.group, fh * gh))


def dual_annihilator_mask(
    group: GroupSpec, invariant: SubspaceF2 | SubgroupEnum
) -> np.ndarray:
    """Boolean mask over dual indices gamma with gamma(h) = 1 for all h in H.

    This is exactly the support of the spectrum of phi_H.  Computed by exact
    integer arithmetic, not by transform.
    """
    if isinstance(invariant, SubspaceF2):
        if not group.is_boolean or group.n != invariant.n:
            raise ValueError("subspace dimension does not match the group")
        gammas = np.arange(group.size, dtype=np.uint64)
        mask = np.ones(group.size, dtype=bool)
        for row in invariant.basis:
            parity = np.bitwise_count(gammas & np.uint64(row)) & 1
            mask &= parity == 0
        return mask
    if invariant.spec != group:
        raise ValueError("subgroup does not live in the given group")
    m = group.exponent
    weights = np.asarray([m // mj for mj in group.moduli], dtype=np.int64)
    coords = group.coords_matrix()
    mask = np.ones(group.size, dtype=bool)
    for g in invariant.generators():
        gc = coords[g] * weights
        mask &= (coords @ gc) % m == 0
    return mask


def averaged_shift(
    indicators: Sequence[NormalizedIndicator],
    f: DenseFunction,
    invariant: SubspaceF2 | SubgroupEnum | None = None,
) -> DenseFunction:
    """E[f(x - y_1 - ... - y_N + v)] as a function of x.

    y_i is uniform on the i-th set and v uniform on the invariant subgroup
    (omitted if None).  Computed as the convolution of f with the normalized
    indicators via one spectral product.
    """
    group = f.group
    prod = transform(f).coeffs.copy()
    for ind in indicators:
        if ind.group != group:
            raise ValueError("indicator group mismatch")
        prod *= ind.spectrum().coeffs
    if invariant is not None:
        prod *= dual_annihilator_mask(group, invariant)
    return inverse_transform(Spectrum(group, prod))


def mixing_gap(
    indicators: Sequence[NormalizedIndicator],
    invariant: SubspaceF2 | SubgroupEnum,
    hp: DenseFunction,
    check_players: int | None = None,
    tol: float = 1e-9,
) -> float:
    """Largest deviation the invariant shift can cause to a shift average.

    Returns max over x of |E[hp(x - sum y_i)] - E[hp(x - sum y_i + v)]|
    with y_i uniform on the given sets and v uniform on the invariant
    subgroup.  (Over F2 the signs are immaterial; over general groups this
    subtracted-shift orientation is the one the sketch compiler consumes.)

    If check_players=N is given, asserts the bound |G| * 2^(-N/8); this is
    guaranteed when the invariant structure annihilates the joint heavy
    spectrum of the sets, as built by the compiler.
    """
    group = hp.group
    if np.max(np.abs(np.abs(hp.values) - 1.0)) > 1e-6:
        raise ValueError("hp must take unit-modulus values")
    prod = transform(hp).coeffs.copy()
    for ind in indicators:
        if ind.group != group:
            raise ValueError("indicator group mismatch")
        prod *= ind.spectrum().coeffs
    keep = ~dual_annihilator_mask(group, invariant)
    diff = inverse_transform(Spectrum(group, prod * keep))
    gap = float(np.max(np.abs(diff.values)))
    if check_players is not None:
        bound = group.size * 2.0 ** (-check_players / 8.0)
        if gap > bound + tol:
            raise MixingBoundError(
                f"mixing gap {gap:.6g} exceeds |G|*2^(-N/8) = {bound:.6g}"
            )
    return gap


def chang_sum(
    indicator: NormalizedIndicator,
    gammas: Sequence[int],
    check: bool = False,
    constant: float = CHANG_DEFAULT_CONSTANT,
    tol: float = 1e-9,
) -> float:
    """sum over gamma of |phihat_A(gamma)|^2 for the given dual indices.

    The caller guarantees gammas are linearly independent (F2) or
    dissociated (general); with check=True the value is asserted against
    constant * log2(1/density).  Base-2 logs throughout.
    """
    coeffs = indicator.spectrum().coeffs
    idx = np.asarray(list(gammas), dtype=np.int64)
    total = float(np.sum(np.abs(coeffs[idx]) ** 2)) if idx.size else 0.0
    if check:
        bound = constant * math.log2(1 / indicator.density)
        if total > bound + tol:
            raise ChangBoundError(
                f"spectral sum {total:.6g} exceeds {constant} * log2(1/alpha) = {bound:.6g}"
            )
    return total


def _signed_combination_sums(
    spec: GroupSpec, coords: np.ndarray
) -> dict[int, tuple[bool, bool]]:
    """All {-1,0,1}-combination sums of the given dual rows.

    Returns index -> (reachable by the all-zero combination, reachable by
    some nonzero combination).
    """
    k = coords.shape[0]
    sums: dict[int, tuple[bool, bool]] = {0: (True, False)}
    for i in range(k):
        row = coords[i]
        nxt: dict[int, tuple[bool, bool]] = {}
        for idx, (zero, nonzero) in sums.items():
            base = spec.decode(idx)
            for a in (-1, 0, 1):
                c = tuple(
                    (b + a * r) % m for b, r, m in zip(base, row, spec.moduli)
                )
                j = spec.encode(c)
                z, nz = nxt.get(j, (False, False))
                if a == 0:
                    nxt[j] = (z or zero, nz or nonzero)
                else:
                    nxt[j] = (z, nz or zero or nonzero)
        sums = nxt
    return sums


def is_dissociated(spec: GroupSpec, gammas: Sequence[int]) -> bool:
    """No nontrivial {-1,0,1}-combination of the dual elements sums to zero.

    Exhaustive 3^k enumeration, split meet-in-the-middle above k=12.
    Over F2 this coincides with linear independence.
    """
    k = len(gammas)
    if k == 0:
        return True
    coords = np.stack([np.asarray(spec.decode(g), dtype=np.int64) for g in gammas])
    if k <= _MITM_THRESHOLD:
        sums = _signed_combination_sums(spec, coords)
        _, nonzero_hits_zero = sums.get(0, (False, False))
        return not nonzero_hits_zero
    half = k // 2
    left = _signed_combination_sums(spec, coords[:half])
    right = _signed_combination_sums(spec, coords[half:])
    for idx, (r_zero, r_nonzero) in right.items():
        neg = spec.neg(idx)
        if neg not in left:
            continue
        l_zero, l_nonzero = left[neg]
        if r_nonzero and (l_zero or l_nonzero):
            return False
        if r_zero and l_nonzero:
            return False
    return True


def extract_dissociated(
    spec: GroupSpec,
    gammas: Sequence[int],
    weights: Sequence[float],
    limit: int = DISSOCIATED_DEFAULT_LIMIT,
) -> list[int]:
    """Greedy maximal dissociated subset, heaviest first (lex tie-break).

    Raises DissociationLimitError if the greedy set would grow beyond the
    enumeration limit.  Over F2 the result provably equals the greedy
    maximal independent subset, and this is asserted.
    """
    if len(gammas) != len(weights):
        raise ValueError("weights length must match gammas")
    order = sorted(
        range(len(gammas)),
        key=lambda i: (-weights[i], spec.decode(gammas[i])),
    )
    chosen: list[int] = []
    for i in order:
        cand = chosen + [gammas[i]]
        if len(cand) > limit:
            raise DissociationLimitError(
                f"dissociated set would exceed the enumeration limit {limit}"
            )
        if is_dissociated(spec, cand):
            chosen.append(gammas[i])
    if spec.is_boolean:
        independent = max_independent_subset(
            list(gammas), list(weights), n=spec.n
        )
        assert chosen == independent, "F2 dissociated/independent greedy mismatch"
    return chosen


def annihilator(spec: GroupSpec, gammas: Sequence[int]) -> SubgroupEnum:
    """The subgroup of all x with gamma(x) = 1 for every listed character.

    Exact enumeration: gamma(x) = 1 iff sum_j (m/m_j) gamma_j x_j = 0 mod m.
    """
    _check_size(spec)
    m = spec.exponent
    weights = np.asarray([m // mj for mj in spec.moduli], dtype=np.int64)
    coords = spec.coords_matrix()
    mask = np.ones(spec.size, dtype=bool)
    for g in gammas:
        gc = np.asarray(spec.decode(g), dtype=np.int64) * weights
        mask &= (coords @ gc) % m == 0
    return SubgroupEnum(spec, np.nonzero(mask)[0].tolist())
