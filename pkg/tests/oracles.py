"""Independent brute-force oracles for the test suite.

Everything here recomputes expected values from definitions, using plain
loops or defining sums, and deliberately avoids the library's fast paths
(butterflies, spectral products, packed-int elimination, hash trees) so a
bug cannot cancel between the implementation and its check.
"""

from __future__ import annotations

import cmath
from fractions import Fraction

import numpy as np


def naive_rank(rows: list[list[int]]) -> int:
    """Row reduction on 0/1 lists (no bit packing)."""
    mat = [list(r) for r in rows]
    if not mat:
        return 0
    n_cols = len(mat[0])
    rank = 0
    pivot_row = 0
    for col in range(n_cols):
        pivot = None
        for r in range(pivot_row, len(mat)):
            if mat[r][col] == 1:
                pivot = r
                break
        if pivot is None:
            continue
        mat[pivot_row], mat[pivot] = mat[pivot], mat[pivot_row]
        for r in range(len(mat)):
            if r != pivot_row and mat[r][col] == 1:
                mat[r] = [(a + b) % 2 for a, b in zip(mat[r], mat[pivot_row])]
        rank += 1
        pivot_row += 1
        if pivot_row == len(mat):
            break
    return rank


def mask_to_list(mask: int, n: int) -> list[int]:
    return [(mask >> i) & 1 for i in range(n)]


def naive_rank_masks(masks, n: int) -> int:
    return naive_rank([mask_to_list(m, n) for m in masks])


def group_decode(moduli, index: int) -> tuple[int, ...]:
    out = []
    for m in moduli:
        out.append(index % m)
        index //= m
    return tuple(out)


def group_encode(moduli, coords) -> int:
    idx = 0
    stride = 1
    for c, m in zip(coords, moduli):
        idx += (c % m) * stride
        stride *= m
    return idx


def group_add(moduli, i: int, j: int) -> int:
    a, b = group_decode(moduli, i), group_decode(moduli, j)
    return group_encode(moduli, [x + y for x, y in zip(a, b)])


def group_neg(moduli, i: int) -> int:
    a = group_decode(moduli, i)
    return group_encode(moduli, [-x for x in a])


def group_sub(moduli, i: int, j: int) -> int:
    return group_add(moduli, i, group_neg(moduli, j))


def char_value(moduli, gamma: int, x: int) -> complex:
    """Defining product of per-coordinate roots of unity."""
    g, a = group_decode(moduli, gamma), group_decode(moduli, x)
    out = complex(1.0)
    for gj, aj, m in zip(g, a, moduli):
        out *= cmath.exp(2j * cmath.pi * gj * aj / m)
    return out


def naive_dft(moduli, values) -> np.ndarray:
    """The defining double sum fhat(g) = E_x f(x) conj(g(x)).

    Builds explicit character rows from the definition (blocked so the
    |G| x |G| matrix never fully materializes at the largest sizes).
    """
    size = len(values)
    vals = np.asarray(values, dtype=np.complex128)
    coords = np.stack(
        [np.asarray(group_decode(moduli, x), dtype=np.float64) for x in range(size)]
    )
    out = np.empty(size, dtype=np.complex128)
    block = 256
    mod = np.asarray(moduli, dtype=np.float64)
    for start in range(0, size, block):
        stop = min(start + block, size)
        g = coords[start:stop]  # (b, n)
        phases = (g / mod) @ coords.T  # (b, size) of sum_j g_j x_j / m_j
        chars = np.exp(-2j * np.pi * phases)
        out[start:stop] = chars @ vals / size
    return out


def naive_inverse_dft(moduli, coeffs) -> np.ndarray:
    size = len(coeffs)
    cf = np.asarray(coeffs, dtype=np.complex128)
    out = np.empty(size, dtype=np.complex128)
    for x in range(size):
        out[x] = sum(
            cf[g] * char_value(moduli, g, x) for g in range(size)
        )
    return out


def naive_wht(values) -> np.ndarray:
    """Defining sum over F2^n with (-1)^<x, gamma> characters."""
    size = len(values)
    out = np.zeros(size, dtype=np.float64)
    vals = np.asarray(values, dtype=np.float64)
    for g in range(size):
        acc = 0.0
        for x in range(size):
            sign = -1.0 if bin(x & g).count("1") % 2 else 1.0
            acc += vals[x] * sign
        out[g] = acc / size
    return out


def naive_convolve(moduli, f, g) -> np.ndarray:
    """(f*g)(x) = E_y f(y) g(x - y), plain double loop."""
    size = len(f)
    out = np.zeros(size, dtype=np.complex128)
    for x in range(size):
        acc = 0.0 + 0.0j
        for y in range(size):
            acc += f[y] * g[group_sub(moduli, x, y)]
        out[x] = acc / size
    return out


def coset_partition(basis_masks, n: int) -> dict[int, int]:
    """Map each x in F2^n to the smallest member of x + V (brute force)."""
    members = [0]
    for b in basis_masks:
        members += [v ^ b for v in members]
    rep = {}
    for x in range(1 << n):
        rep[x] = min(x ^ v for v in members)
    return rep


def exhaustive_annihilator(moduli, gammas) -> list[int]:
    """Elements where every listed character equals 1 (unit tolerance)."""
    size = 1
    for m in moduli:
        size *= m
    out = []
    for x in range(size):
        if all(abs(char_value(moduli, g, x) - 1.0) < 1e-9 for g in gammas):
            out.append(x)
    return out


def is_dissociated_bruteforce(moduli, gammas) -> bool:
    """Direct 3^k scan of all signed combinations."""
    import itertools

    k = len(gammas)
    zero = 0
    for coeffs in itertools.product((-1, 0, 1), repeat=k):
        if all(c == 0 for c in coeffs):
            continue
        acc = zero
        for c, g in zip(coeffs, gammas):
            if c == 1:
                acc = group_add(moduli, acc, g)
            elif c == -1:
                acc = group_sub(moduli, acc, g)
        if acc == 0:
            return False
    return True


def stepwise_shift_distribution(moduli, member_lists, subgroup_elements=None):
    """Distribution of -(y_1 + ... + y_N) + v by iterated naive convolution.

    member_lists are element-index lists; returns a float probability
    vector.  Matches the library's subtracted-shift orientation: the
    distribution returned is that of the value added to x inside
    E[h(x - sum y_i + v)].
    """
    size = 1
    for m in moduli:
        size *= m
    dist = np.zeros(size)
    dist[0] = 1.0
    for members in member_lists:
        nxt = np.zeros(size)
        w = 1.0 / len(members)
        for s in range(size):
            if dist[s] == 0.0:
                continue
            for y in members:
                nxt[group_sub(moduli, s, y)] += dist[s] * w
        dist = nxt
    if subgroup_elements is not None:
        nxt = np.zeros(size)
        w = 1.0 / len(subgroup_elements)
        for s in range(size):
            if dist[s] == 0.0:
                continue
            for v in subgroup_elements:
                nxt[group_add(moduli, s, v)] += dist[s] * w
        dist = nxt
    return dist


def shift_average_oracle(moduli, member_lists, h, subgroup_elements=None) -> np.ndarray:
    """E[h(x - sum y_i + v)] for every x, from the stepwise distribution."""
    size = len(h)
    dist = stepwise_shift_distribution(moduli, member_lists, subgroup_elements)
    out = np.zeros(size, dtype=np.complex128)
    for x in range(size):
        acc = 0.0 + 0.0j
        for s in range(size):
            if dist[s]:
                acc += dist[s] * h[group_add(moduli, x, s)]
        out[x] = acc
    return out


def prg_expand_tree(base: int, hashes, mul) -> list[int]:
    """Full 2^d-block expansion of the hash tree, recursively.

    Level-j hashes act on the second half at level j, so the hash with the
    smallest level is composed last.
    """

    def expand(x: int, level: int) -> list[int]:
        if level == 0:
            return [x]
        a, c = hashes[level - 1]
        return expand(x, level - 1) + expand(mul(a, x) ^ c, level - 1)

    return expand(base, len(hashes))


def accumulate_stream(n: int, p: int, updates) -> list[int]:
    """Offline fold of an update stream into the input vector."""
    x = [0] * n
    for coord, inc in updates:
        x[coord] = (x[coord] + inc) % p
    return x


def transcript_frequencies(protocol, n_tail_players: int) -> dict[tuple, Fraction]:
    """Exhaustive exact transcript distribution over all input tuples.

    Enumerates every tuple of (N+1) player inputs and counts the messages
    of the first N players; x_{N+1} is included in the enumeration even
    though the transcript ignores it, so the denominator is |G|^(N+1).
    """
    size = protocol.group.size
    total = size**protocol.n_players
    counts: dict[tuple, int] = {}
    import itertools

    for inputs in itertools.product(range(size), repeat=protocol.n_players):
        messages, _ = protocol.run(list(inputs), 0)
        key = tuple(messages[: protocol.n_players - 1])
        counts[key] = counts.get(key, 0) + 1
    return {k: Fraction(v, total) for k, v in counts.items()}
