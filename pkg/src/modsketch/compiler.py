"""Constructive reduction from one-way protocols to linear sketches.

Given a protocol for the additive lift of f and a distribution D over
inputs, the pipeline (i) fixes a good randomness tape, (ii) samples and
exactly verifies a transcript of the first N players, (iii) collects the
per-player consistent input sets and their joint heavy spectrum,
(iv) builds the invariant structure (orthogonal subspace over F2, or the
annihilator subgroup of a maximal dissociated set in general), and
(v) averages the tail function into a low-cost junta, derandomizing by a
weighted argmax per sketch bucket.  Every inequality used along the way is
checked exactly on the actual run and recorded in the report.

A minimax boosting loop (multiplicative weights over inputs) upgrades the
per-distribution juntas into one distribution-free randomized sketch.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .algebra import GroupSpec, SubgroupEnum, SubspaceF2, max_independent_subset, rank_basis, orthogonal_complement
from .fourier import (
    DenseFunction,
    NormalizedIndicator,
    annihilator,
    averaged_shift,
    chang_sum,
    extract_dissociated,
    mixing_gap,
)
from .protocol import BroadcastProtocol, StreamFSM, Transcript, fsm_to_players
from .sketch import Distribution, HInvariantSketch, LinearJuntaF2, RandomizedSketch
from .seeding import derive_seed, derived_rng

__all__ = [
    "ReductionConfig",
    "PlayerSets",
    "TailFunction",
    "InvariantStructure",
    "ReductionReport",
    "ReduceResult",
    "CompilerError",
    "TranscriptSearchError",
    "InvariantViolation",
    "VARIANTS",
    "sample_and_select_transcript",
    "heavy_set",
    "build_invariant_structure",
    "build_junta",
    "reduce",
    "approx_encode",
    "conversion_bounds",
    "minimax_boost",
]

VARIANTS = ("exact_f2", "approx_f2", "exact_group", "approx_group")
BOUNDARY_TOL = 1e-9


class CompilerError(Exception):
    def __init__(self, stage: str, message: str):
        self.stage = stage
        super().__init__(f"[{stage}] {message}")


class TranscriptSearchError(CompilerError):
    def __init__(self, message: str, best=None):
        self.best = best
        super().__init__("transcript-search", message)


class InvariantViolation(CompilerError, AssertionError):
    pass


@dataclass
class ReductionConfig:
    """Knobs for one reduction run.

    players is N; the pipeline internally runs N+1 players, with the extra
    player providing the tail function.  delta defaults to
    min(2^-N, 1e-4); the transcript-probability threshold is
    delta * 2^(-c*N), compared exactly in rational arithmetic.
    """

    players: int
    transcript_trials: int = 64
    delta: Fraction | None = None
    target_q: float | None = None
    target_eps: float | None = None
    seed: int = 0
    r_tape_exhaustive_limit: int = 1 << 16
    r_tape_samples: int = 256
    r_eval_samples: int = 256
    dissociated_limit: int = 16
    chang_constant: float = 8.0

    def __post_init__(self):
        if self.players < 1:
            raise ValueError("need at least one player")
        if self.transcript_trials < 0:
            raise ValueError("negative trial budget")
        if self.delta is not None and not 0 < self.delta < 1:
            raise ValueError("delta must lie in (0, 1)")

    def resolved_delta(self) -> Fraction:
        if self.delta is not None:
            return Fraction(self.delta) if not isinstance(self.delta, Fraction) else self.delta
        return min(Fraction(1, 2**self.players), Fraction(1, 10**4))

    def threshold_warnings(self, group: GroupSpec) -> list[str]:
        """Warnings when N is below the mixing threshold the analysis wants."""
        out = []
        need = 10 * group.n * math.log2(group.exponent)
        if self.players < need:
            kind = "10*n" if group.is_boolean else "10*n*log2(m)"
            out.append(
                f"N={self.players} is below the {kind} = {need:g} mixing threshold; "
                "bounds are still checked exactly but may fail"
            )
        return out


@dataclass
class PlayerSets:
    """Per-player consistent input sets for a fixed transcript."""

    indicators: list[NormalizedIndicator]
    densities: list[Fraction]
    heavy: list[int] | None = None  # filled by heavy_set

    @property
    def joint_probability(self) -> Fraction:
        p = Fraction(1)
        for d in self.densities:
            p *= d
        return p


@dataclass
class TailFunction:
    """The last player's output as a function of its own input."""

    h: DenseFunction

    def signed(self) -> DenseFunction:
        """(-1)^h for binary h."""
        vals = self.h.real_values()
        return DenseFunction(self.h.group, 1.0 - 2.0 * vals)

    def exponential(self) -> DenseFunction:
        """e^(-i h) for [0,1]-valued h."""
        vals = self.h.real_values()
        return DenseFunction(self.h.group, np.exp(-1j * vals))


@dataclass
class SelectedTranscript:
    transcript: Transcript
    player_sets: PlayerSets
    tail: TailFunction
    r_star: int
    trials_used: int
    candidates_evaluated: int
    rejected_condition_i: int


@dataclass
class InvariantStructure:
    """The sketch-defining structure extracted from the heavy spectrum."""

    kind: str  # "subspace" or "subgroup"
    generators: list[int]  # dual indices, greedy order
    invariant: SubspaceF2 | SubgroupEnum
    bucket_ids: np.ndarray
    n_buckets: int

    @property
    def cost(self) -> int:
        return len(self.generators)

    @property
    def complexity(self) -> int:
        return self.n_buckets


@dataclass
class ReductionReport:
    variant: str
    group_moduli: tuple[int, ...]
    players: int
    message_bits: int
    delta: Fraction
    seed: int
    r_star: int
    transcript: tuple[int, ...]
    transcript_probability: Fraction
    transcript_quality: float
    quality_kind: str
    densities: list[Fraction]
    heavy_count: int
    heavy_set_size: int
    heavy_set_members: list[int]
    generators: list[int]
    invariant_structure: dict
    cost: int
    complexity: int
    mixing_gap: float
    quality: float
    tolerance: float
    checks: dict = field(default_factory=dict)
    warnings: list = field(default_factory=list)
    timings: dict = field(default_factory=dict)
    trials_used: int = 0
    candidates_evaluated: int = 0

    def to_dict(self) -> dict:
        def enc(v):
            if isinstance(v, Fraction):
                return f"{v.numerator}/{v.denominator}"
            if isinstance(v, (np.floating, np.integer)):
                return v.item()
            if isinstance(v, dict):
                return {k: enc(x) for k, x in v.items()}
            if isinstance(v, (list, tuple)):
                return [enc(x) for x in v]
            return v

        return {k: enc(v) for k, v in self.__dict__.items()}


@dataclass
class ReduceResult:
    sketch: LinearJuntaF2 | HInvariantSketch
    report: ReductionReport


def _as_protocol(source, n_players: int, group: GroupSpec) -> BroadcastProtocol:
    if isinstance(source, StreamFSM):
        protocol = fsm_to_players(source, n_players)
    elif isinstance(source, BroadcastProtocol):
        protocol = source
    elif callable(source):
        protocol = source(n_players)
    else:
        raise TypeError("protocol source must be an FSM, a protocol, or a builder")
    if protocol.n_players != n_players:
        raise ValueError(
            f"protocol has {protocol.n_players} players; this run needs {n_players}"
        )
    if protocol.group != group:
        raise ValueError("protocol input group does not match the function")
    return protocol


def _sample_inputs(group: GroupSpec, D: Distribution, n_uniform: int, rng):
    """Draw x ~ D and uniform x_1..x_N; the extra player gets x - sum(x_i)."""
    x = D.sample(rng, 1)[0]
    xs = [rng.randrange(group.size) for _ in range(n_uniform)]
    acc = 0
    for xi in xs:
        acc = group.add(acc, xi)
    xs.append(group.sub(x, acc))
    return x, xs


def _protocol_quality_estimate(
    protocol: BroadcastProtocol,
    f: DenseFunction,
    D: Distribution,
    r: int,
    samples: int,
    rng,
    mode: str,
) -> float:
    """Monte Carlo distributional quality of the protocol under one tape."""
    n_uniform = protocol.n_players - 1
    fv = f.real_values()
    good = 0.0
    for _ in range(samples):
        x, xs = _sample_inputs(protocol.group, D, n_uniform, rng)
        _, out = protocol.run(xs, r)
        if mode == "exact":
            good += 1.0 if out == fv[x] else 0.0
        else:
            good -= abs(float(out) - fv[x]) ** 2
    return good / samples


def _select_r_star(protocol, f, D, cfg, mode) -> int:
    if protocol.randomness_bits == 0:
        return 0
    rng = derived_rng(cfg.seed, "r-star")
    space = 1 << protocol.randomness_bits
    if space <= cfg.r_tape_exhaustive_limit:
        tapes = range(space)
    else:
        tapes = [rng.getrandbits(protocol.randomness_bits) for _ in range(cfg.r_tape_samples)]
    best_r, best_val = 0, -math.inf
    for r in tapes:
        val = _protocol_quality_estimate(
            protocol, f, D, r, cfg.r_eval_samples, rng, mode
        )
        if val > best_val:
            best_r, best_val = r, val
    return best_r


def _evaluate_candidate(
    protocol: BroadcastProtocol,
    messages: tuple,
    r_star: int,
    f: DenseFunction,
    D: Distribution,
    threshold: Fraction,
    mode: str,
):
    """Exact per-transcript accounting: sets A_i, prod of densities against
    the probability threshold, the tail function, and the conditional
    quality via spectral products.  Returns None if condition (i) fails."""
    group = protocol.group
    n = protocol.n_players - 1
    indicators = []
    densities = []
    prob = Fraction(1)
    for i in range(n):
        fn = protocol.msg_fns[i]
        prev = tuple(messages[:i])
        members = np.fromiter(
            (fn(x, prev, r_star) == messages[i] for x in range(group.size)),
            dtype=bool,
            count=group.size,
        )
        ind = NormalizedIndicator(group, members)
        indicators.append(ind)
        densities.append(ind.density)
        prob *= ind.density
    if prob < threshold:
        return None

    tail_fn = protocol.msg_fns[n]
    h_vals = np.asarray(
        [tail_fn(t, tuple(messages), r_star) for t in range(group.size)],
        dtype=np.float64,
    )
    if mode == "exact":
        if not np.all(np.isin(h_vals, (0.0, 1.0))):
            raise CompilerError(
                "transcript-search", "exact mode needs a binary tail function"
            )
    else:
        if np.any(h_vals < -1e-12) or np.any(h_vals > 1 + 1e-12):
            raise CompilerError(
                "transcript-search", "approximating tail must take values in [0,1]"
            )
        h_vals = np.clip(h_vals, 0.0, 1.0)
    h = DenseFunction(group, h_vals)
    fv = f.real_values()

    shifted = averaged_shift(indicators, h).real_values(tol=1e-7)
    if mode == "exact":
        per_x = fv * shifted + (1.0 - fv) * (1.0 - shifted)
        quality = float(np.dot(D.probs, per_x))
    else:
        shifted_sq = averaged_shift(indicators, DenseFunction(group, h_vals**2)).real_values(tol=1e-7)
        per_x = shifted_sq - 2.0 * fv * shifted + fv**2
        quality = float(np.dot(D.probs, per_x))
    ps = PlayerSets(indicators, densities)
    return prob, quality, ps, TailFunction(h)


def sample_and_select_transcript(
    protocol: BroadcastProtocol,
    f: DenseFunction,
    D: Distribution,
    cfg: ReductionConfig,
    mode: str = "exact",
) -> SelectedTranscript:
    """Sample transcripts of the first N players, verify the probability
    condition exactly for each distinct candidate, and keep the best
    conditional quality.

    Exact mode maximizes the conditional success and requires it to reach
    target_q - delta; approx mode minimizes the conditional squared error
    and requires (target_eps + delta) / (1 - delta).  Raises
    TranscriptSearchError (carrying the best candidate) otherwise.
    """
    if cfg.transcript_trials < 1:
        raise TranscriptSearchError("transcript_trials must be at least 1")
    group = protocol.group
    n = protocol.n_players - 1
    delta = cfg.resolved_delta()
    threshold = delta * Fraction(1, 2 ** (protocol.message_bits * n))
    r_star = _select_r_star(protocol, f, D, cfg, mode)
    rng = derived_rng(cfg.seed, "transcripts")

    seen: set[tuple] = set()
    best = None  # (quality key, prob, quality, ps, tail, messages)
    rejected = 0
    trials = 0
    for trials in range(1, cfg.transcript_trials + 1):
        _, xs = _sample_inputs(group, D, n, rng)
        messages, _ = protocol.run(xs, r_star)
        key = tuple(messages[:n])
        if key in seen:
            continue
        seen.add(key)
        res = _evaluate_candidate(protocol, key, r_star, f, D, threshold, mode)
        if res is None:
            rejected += 1
            continue
        prob, quality, ps, tail = res
        score = quality if mode == "exact" else -quality
        if best is None or score > best[0]:
            best = (score, prob, quality, ps, tail, key)
        if mode == "exact" and quality >= 1.0 - 1e-12:
            break
        if mode == "approx" and quality <= 1e-12:
            break

    if best is None:
        raise TranscriptSearchError(
            f"no transcript met the probability threshold in {trials} trials "
            f"({rejected} rejected)"
        )
    _, prob, quality, ps, tail, key = best
    if mode == "exact":
        gate = cfg.target_q is not None and quality < cfg.target_q - float(delta) - BOUNDARY_TOL
        gate_msg = f"best conditional success {quality:.6g} < q - delta"
    else:
        bound = (cfg.target_eps + float(delta)) / (1 - float(delta)) if cfg.target_eps is not None else None
        gate = bound is not None and quality > bound + BOUNDARY_TOL
        gate_msg = f"best conditional error {quality:.6g} > (eps + delta)/(1 - delta)"
    if gate:
        raise TranscriptSearchError(
            gate_msg + f" after {len(seen)} candidates",
            best=Transcript(key, prob, quality, "success" if mode == "exact" else "sq_error"),
        )
    transcript = Transcript(
        key, prob, quality, "success" if mode == "exact" else "sq_error"
    )
    return SelectedTranscript(
        transcript, ps, tail, r_star, trials, len(seen), rejected
    )


def heavy_set(
    player_sets: PlayerSets, message_bits: int, tol: float = BOUNDARY_TOL
) -> tuple[list[int], np.ndarray, np.ndarray]:
    """The high-density player set B and the jointly heavy spectrum S.

    B keeps players of density >= 2^(-2(c+1)) (inclusive, exact rational
    comparison); S keeps dual indices whose spectral energy summed over B
    reaches |B|/2 (inclusive with float tolerance).  Returns
    (B, S indices, per-gamma energy weights).
    """
    thresh = Fraction(1, 2 ** (2 * (message_bits + 1)))
    B = [i for i, d in enumerate(player_sets.densities) if d >= thresh]
    player_sets.heavy = B
    group = player_sets.indicators[0].group if player_sets.indicators else None
    if group is None:
        raise ValueError("empty player sets")
    weights = np.zeros(group.size, dtype=np.float64)
    for i in B:
        weights += np.abs(player_sets.indicators[i].spectrum().coeffs) ** 2
    S = np.nonzero(weights >= len(B) / 2 - tol)[0]
    return B, S, weights


def build_invariant_structure(
    group: GroupSpec,
    S: Sequence[int],
    weights: np.ndarray,
    kind: str,
    dissociated_limit: int = 16,
) -> InvariantStructure:
    """Span the heavy spectrum and return the structure the junta lives on.

    Over F2: a greedy max-weight independent subset of S spans U; the
    sketch buckets are the sign patterns against those generators (cosets
    of the orthogonal subspace).  Over general groups: a greedy max-weight
    dissociated subset, whose annihilator subgroup H defines the buckets
    as cosets of H.
    """
    s_list = [int(g) for g in S]
    w_list = [float(weights[g]) for g in s_list]
    if kind == "subspace":
        gens = max_independent_subset(s_list, w_list, n=group.n)
        space = rank_basis(gens, group.n)
        invariant = orthogonal_complement(space)
        xs = np.arange(group.size, dtype=np.uint64)
        bucket = np.zeros(group.size, dtype=np.int64)
        for j, g in enumerate(gens):
            bucket |= ((np.bitwise_count(xs & np.uint64(g)) & 1) << j).astype(np.int64)
        return InvariantStructure("subspace", gens, invariant, bucket, 1 << len(gens))
    if kind != "subgroup":
        raise ValueError(f"unknown structure kind {kind!r}")
    gens = extract_dissociated(group, s_list, w_list, limit=dissociated_limit)
    sub = annihilator(group, gens)
    bucket = sub.coset_ids()
    return InvariantStructure("subgroup", gens, sub, np.asarray(bucket), sub.n_cosets)


@dataclass
class JuntaResult:
    sketch: LinearJuntaF2 | HInvariantSketch
    w: np.ndarray
    quality: float
    coset_deviation: float


def _bucket_reduce(bucket_ids: np.ndarray, n_buckets: int, values: np.ndarray):
    """(sum, min, max) of values per bucket."""
    sums = np.zeros(n_buckets, dtype=np.float64)
    np.add.at(sums, bucket_ids, values)
    mins = np.full(n_buckets, np.inf)
    maxs = np.full(n_buckets, -np.inf)
    np.minimum.at(mins, bucket_ids, values)
    np.maximum.at(maxs, bucket_ids, values)
    return sums, mins, maxs


def build_junta(
    tail: TailFunction,
    player_sets: PlayerSets,
    structure: InvariantStructure,
    D: Distribution,
    f: DenseFunction,
    mode: str = "exact",
) -> JuntaResult:
    """Average the tail over the player sets and the invariant shift, check
    bucket-constancy, and emit the deterministic sketch.

    w(x) = E[h(x - y_1 - ... - y_N + v)] is constant on sketch buckets by
    construction; exact mode derandomizes by picking per bucket the output
    maximizing D-weighted agreement with f (ties resolved by rounding w),
    which weakly dominates averaging over Bernoulli roundings.  Approx mode
    keeps the [0,1]-valued bucket averages as the post table.
    """
    group = f.group
    w_fn = averaged_shift(player_sets.indicators, tail.h, structure.invariant)
    w = w_fn.real_values(tol=1e-7)
    _, mins, maxs = _bucket_reduce(structure.bucket_ids, structure.n_buckets, w)
    deviation = float(np.max(maxs - mins)) if structure.n_buckets else 0.0
    if deviation > 1e-9:
        raise InvariantViolation(
            "build-junta", f"averaged tail varies by {deviation:.3g} within a bucket"
        )
    if np.min(w) < -1e-9 or np.max(w) > 1 + 1e-9:
        raise InvariantViolation("build-junta", "averaged tail escapes [0,1]")
    w = np.clip(w, 0.0, 1.0)
    order = np.argsort(structure.bucket_ids, kind="stable")
    first = order[np.searchsorted(structure.bucket_ids[order], np.arange(structure.n_buckets))]
    bucket_w = w[first]

    fv = f.real_values()
    if mode == "exact":
        agree1, _, _ = _bucket_reduce(
            structure.bucket_ids, structure.n_buckets, D.probs * fv
        )
        agree0, _, _ = _bucket_reduce(
            structure.bucket_ids, structure.n_buckets, D.probs * (1.0 - fv)
        )
        post = np.where(
            agree1 > agree0, 1, np.where(agree0 > agree1, 0, (bucket_w >= 0.5).astype(int))
        )
        out = post[structure.bucket_ids]
        quality = float(np.dot(D.probs, (out == fv).astype(np.float64)))
        post_values = tuple(int(v) for v in post)
    else:
        post = bucket_w
        out = post[structure.bucket_ids]
        quality = float(np.dot(D.probs, (out - fv) ** 2))
        post_values = tuple(float(v) for v in post)

    if structure.kind == "subspace":
        sketch = LinearJuntaF2(group.n, tuple(structure.generators), post_values)
    else:
        sketch = HInvariantSketch(structure.invariant, post_values)
    return JuntaResult(sketch, w, quality, deviation)


def approx_encode(values: np.ndarray) -> np.ndarray:
    """Unit-circle encoding e^(i*value) of [0,1]-valued data."""
    arr = np.asarray(values, dtype=np.float64)
    if np.any(arr < 0) or np.any(arr > 1):
        raise ValueError("values must lie in [0, 1]")
    return np.exp(1j * arr)


def conversion_bounds(z: float) -> tuple[float, float]:
    """The sandwich (1 - z^2/2, 1 - z^2/3) around cos(z), valid on [-1,1]."""
    if not -1.0 <= z <= 1.0:
        raise ValueError("bound holds on [-1, 1] only")
    lo, hi = 1 - z * z / 2, 1 - z * z / 3
    c = math.cos(z)
    assert lo - 1e-12 <= c <= hi + 1e-12, "cosine sandwich violated"
    return lo, hi


def _record(checks: dict, name: str, lhs, rhs, ok: bool, stage: str):
    checks[name] = {"lhs": lhs, "rhs": rhs, "ok": bool(ok)}
    if not ok:
        raise InvariantViolation(stage, f"{name}: {lhs} vs {rhs}")


def reduce(
    protocol_source,
    f: DenseFunction,
    D: Distribution | None,
    cfg: ReductionConfig,
    variant: str = "exact_f2",
) -> ReduceResult:
    """Run the whole pipeline and exactly verify every inequality it uses.

    Exact variants emit a binary sketch whose D-success is checked against
    q - tol and against the transfer bound b(pi) - mixing_gap; approx
    variants emit a [0,1]-valued sketch whose D-squared-error is checked
    against the conversion chain and 2*eps + tol.  All intermediate
    quantities land in the report.
    """
    if variant not in VARIANTS:
        raise ValueError(f"variant must be one of {VARIANTS}")
    mode = "exact" if variant.startswith("exact") else "approx"
    kind = "subspace" if variant.endswith("_f2") else "subgroup"
    group = f.group
    if kind == "subspace" and not group.is_boolean:
        raise ValueError("F2 variants need an all-2 group")
    if D is None:
        D = Distribution.uniform(group)
    if D.group != group:
        raise ValueError("distribution group mismatch")

    timings: dict[str, float] = {}
    t0 = time.perf_counter()
    protocol = _as_protocol(protocol_source, cfg.players + 1, group)
    n, c = cfg.players, protocol.message_bits
    delta = cfg.resolved_delta()
    warnings = cfg.threshold_warnings(group)

    sel = sample_and_select_transcript(protocol, f, D, cfg, mode)
    timings["transcript"] = time.perf_counter() - t0
    checks: dict = {}
    _record(
        checks,
        "transcript-probability",
        str(sel.transcript.a),
        f"{delta}*2^-{c * n}",
        sel.transcript.a >= delta * Fraction(1, 2 ** (c * n)),
        "transcript-search",
    )

    t1 = time.perf_counter()
    B, S, weights = heavy_set(sel.player_sets, c)
    _record(checks, "heavy-majority", len(B), f">= {n}/2", 2 * len(B) >= n, "heavy-set")
    structure = build_invariant_structure(
        group, S, weights, kind, cfg.dissociated_limit
    )
    timings["structure"] = time.perf_counter() - t1
    if kind == "subspace":
        _record(
            checks,
            "cost-bound",
            structure.cost,
            32 * (c + 1),
            structure.cost <= 32 * (c + 1),
            "structure",
        )
    else:
        _record(
            checks,
            "complexity-bound",
            structure.complexity,
            group.exponent ** structure.cost,
            structure.complexity <= group.exponent**structure.cost,
            "structure",
        )
    for i in B:
        chang_sum(
            sel.player_sets.indicators[i],
            structure.generators,
            check=True,
            constant=cfg.chang_constant,
        )
    checks["chang-per-player"] = {
        "lhs": f"max spectral sum over {len(B)} heavy players",
        "rhs": f"{cfg.chang_constant}*log2(1/alpha_i)",
        "ok": True,
    }

    t2 = time.perf_counter()
    tail_view = sel.tail.signed() if mode == "exact" else sel.tail.exponential()
    gap = mixing_gap(sel.player_sets.indicators, structure.invariant, tail_view)
    heavy_bound = group.size * 2.0 ** (-len(B) / 4)
    _record(checks, "mixing-heavy-bound", gap, heavy_bound, gap <= heavy_bound + BOUNDARY_TOL, "mixing")
    player_bound = group.size * 2.0 ** (-n / 8)
    _record(
        checks,
        "mixing-player-bound",
        gap,
        player_bound,
        gap <= player_bound + BOUNDARY_TOL,
        "mixing",
    )
    timings["mixing"] = time.perf_counter() - t2

    t3 = time.perf_counter()
    junta = build_junta(sel.tail, sel.player_sets, structure, D, f, mode)
    timings["junta"] = time.perf_counter() - t3
    checks["coset-constancy"] = {
        "lhs": junta.coset_deviation,
        "rhs": 1e-9,
        "ok": True,
    }

    tol = max(group.size * 2.0 ** (-n / 8), 10 * float(delta))
    b = sel.transcript.b
    if mode == "exact":
        _record(
            checks,
            "quality-transfer",
            junta.quality,
            b - gap,
            junta.quality >= b - gap - BOUNDARY_TOL,
            "quality",
        )
        if cfg.target_q is not None:
            _record(
                checks,
                "success-budget",
                junta.quality,
                cfg.target_q - tol,
                junta.quality >= cfg.target_q - tol - BOUNDARY_TOL,
                "quality",
            )
    else:
        fv = f.real_values()
        out = np.asarray(junta.sketch.eval_all(), dtype=np.float64)
        chain = 3.0 * (1.0 - float(np.dot(D.probs, np.cos(fv - out))))
        _record(
            checks,
            "error-conversion-chain",
            junta.quality,
            chain,
            junta.quality <= chain + BOUNDARY_TOL,
            "quality",
        )
        transfer = 1.5 * b + 3.0 * gap
        _record(
            checks,
            "error-transfer",
            junta.quality,
            transfer,
            junta.quality <= transfer + BOUNDARY_TOL,
            "quality",
        )
        if cfg.target_eps is not None:
            _record(
                checks,
                "error-budget",
                junta.quality,
                2 * cfg.target_eps + tol,
                junta.quality <= 2 * cfg.target_eps + tol + BOUNDARY_TOL,
                "quality",
            )

    report = ReductionReport(
        variant=variant,
        group_moduli=group.moduli,
        players=n,
        message_bits=c,
        delta=delta,
        seed=cfg.seed,
        r_star=sel.r_star,
        transcript=sel.transcript.messages,
        transcript_probability=sel.transcript.a,
        transcript_quality=b,
        quality_kind=sel.transcript.quality_kind,
        densities=list(sel.player_sets.densities),
        heavy_count=len(B),
        heavy_set_size=int(len(S)),
        heavy_set_members=[int(g) for g in S[:4096]],
        generators=list(structure.generators),
        invariant_structure=(
            {
                "kind": "subspace",
                "dim": structure.invariant.dim,
                "basis": list(structure.invariant.basis),
            }
            if kind == "subspace"
            else {
                "kind": "subgroup",
                "order": len(structure.invariant),
                "generators": structure.invariant.generators(),
            }
        ),
        cost=structure.cost,
        complexity=structure.complexity,
        mixing_gap=gap,
        quality=junta.quality,
        tolerance=tol,
        checks=checks,
        warnings=warnings,
        timings=timings,
        trials_used=sel.trials_used,
        candidates_evaluated=sel.candidates_evaluated,
    )
    return ReduceResult(junta.sketch, report)


@dataclass
class BoostResult:
    mixture: RandomizedSketch
    min_success: Fraction
    per_x_success: list[Fraction]
    round_reports: list[ReductionReport]
    weight_sums: list[float]


def minimax_boost(
    f: DenseFunction,
    protocol_source,
    cfg: ReductionConfig,
    rounds: int,
    variant: str = "exact_f2",
    eta: float | None = None,
) -> BoostResult:
    """Multiplicative-weights loop over inputs: repeatedly reduce against
    the current hardest distribution, downweight inputs the new junta gets
    right, and return the uniform mixture of the collected juntas with its
    exact per-input success profile."""
    if rounds < 1:
        raise ValueError("need at least one round")
    group = f.group
    if group.size > 1 << 16:
        raise ValueError("input space too large for exact boosting")
    fv = f.real_values()
    if not np.all(np.isin(fv, (0.0, 1.0))):
        raise ValueError("boosting needs a binary target function")
    if eta is None:
        eta = min(0.5, math.sqrt(math.log(group.size) / rounds))

    weights = np.full(group.size, 1.0 / group.size)
    sketches = []
    corrects = np.zeros(group.size, dtype=np.int64)
    reports = []
    weight_sums = []
    for t in range(rounds):
        D_t = Distribution(group, weights / weights.sum(), name=f"boost-round-{t}")
        round_cfg = ReductionConfig(
            players=cfg.players,
            transcript_trials=cfg.transcript_trials,
            delta=cfg.delta,
            target_q=cfg.target_q,
            target_eps=cfg.target_eps,
            seed=derive_seed(cfg.seed, f"boost-{t}"),
            r_tape_exhaustive_limit=cfg.r_tape_exhaustive_limit,
            r_tape_samples=cfg.r_tape_samples,
            r_eval_samples=cfg.r_eval_samples,
            dissociated_limit=cfg.dissociated_limit,
            chang_constant=cfg.chang_constant,
        )
        res = reduce(protocol_source, f, D_t, round_cfg, variant)
        sketches.append(res.sketch)
        reports.append(res.report)
        out = np.asarray(res.sketch.eval_all())
        correct = (out == fv).astype(np.float64)
        corrects += correct.astype(np.int64)
        weights = weights * np.exp(-eta * correct)
        weights = weights / weights.sum()
        s = float(weights.sum())
        weight_sums.append(s)
        if abs(s - 1.0) > 1e-12:
            raise InvariantViolation("boost", f"weights sum to {s}, not 1")

    per_x = [Fraction(int(cx), rounds) for cx in corrects]
    mixture = RandomizedSketch.uniform_mixture(sketches, seed=cfg.seed)
    return BoostResult(mixture, min(per_x), per_x, reports, weight_sums)
