"""One-way broadcasting / streaming protocol models and simulators.

A protocol has N players speaking once, in order; player i sees the
shared randomness, its own input and all earlier messages, and the last
message is the protocol output.  A streaming protocol is the special case
where player i only reads message i-1; a small-space streaming algorithm
becomes such a protocol by passing its state along the chain.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Sequence

from .algebra import GroupSpec
from .fourier import DenseFunction

__all__ = [
    "BroadcastProtocol",
    "StreamFSM",
    "Transcript",
    "AdditiveFunction",
    "streaming_table_fn",
    "run_broadcast",
    "fsm_to_players",
    "additive_lift",
    "run_smp",
    "smp_from_linear_sketch",
]

# A message function maps (input index, previous messages, randomness tape)
# to a c-bit int; the last player's function returns the protocol output
# (binary int, or a [0,1] float for approximating protocols).
MessageFn = Callable[[int, tuple, int], int | float]


def streaming_table_fn(table) -> MessageFn:
    """Message function from a dense table indexed [input, previous message].

    This is the lookup-table representation for exhaustive analysis; player
    one reads column 0.  Structured protocols use named builders instead
    (see the zoo registry).
    """
    return lambda x, prev, r: table[x][prev[-1] if prev else 0]


@dataclass(frozen=True)
class BroadcastProtocol:
    """N ordered players with c-bit messages; the last message is the output."""

    group: GroupSpec
    n_players: int
    message_bits: int
    msg_fns: tuple[MessageFn, ...]
    randomness_bits: int = 0
    streaming: bool = False
    name: str = ""

    def __post_init__(self):
        if len(self.msg_fns) != self.n_players:
            raise ValueError("need one message function per player")
        if self.n_players < 1:
            raise ValueError("need at least one player")

    def run(self, inputs: Sequence[int], r: int = 0):
        """Returns (messages, output); messages are the first N-1 entries
        plus the output as the last one."""
        if len(inputs) != self.n_players:
            raise ValueError(
                f"protocol has {self.n_players} players, got {len(inputs)} inputs"
            )
        messages: list = []
        limit = 1 << self.message_bits
        for i, (fn, x) in enumerate(zip(self.msg_fns, inputs)):
            m = fn(x, tuple(messages), r)
            if i < self.n_players - 1 and not 0 <= int(m) < limit:
                raise ValueError(
                    f"player {i} message {m} does not fit in {self.message_bits} bits"
                )
            messages.append(m)
        return tuple(messages), messages[-1]


def run_broadcast(protocol: BroadcastProtocol, inputs: Sequence[int], r: int = 0):
    """Simulate one protocol execution; returns (messages, output)."""
    return protocol.run(inputs, r)


@dataclass(frozen=True)
class Transcript:
    """A fixed message sequence of the first N players with its exact
    probability a = prod(densities) and conditional quality b."""

    messages: tuple[int, ...]
    a: Fraction
    b: float
    quality_kind: str = "success"  # or "sq_error"

    def __post_init__(self):
        if not 0 < self.a <= 1:
            raise ValueError("transcript probability must be in (0, 1]")
        if not -1e-9 <= self.b <= 1 + 1e-9:
            raise ValueError("conditional quality must lie in [0, 1]")


@dataclass(frozen=True)
class StreamFSM:
    """A deterministic small-space streaming algorithm over one group input.

    step(state, coordinate, increment) -> state consumes single-coordinate
    updates; emit(state) is the output map.  The space budget is
    ceil(log2(n_states)) bits.
    """

    group: GroupSpec
    n_states: int
    initial: int
    step: Callable[[int, int, int], int]
    emit: Callable[[int], int | float]
    name: str = ""

    @property
    def state_bits(self) -> int:
        return max((self.n_states - 1).bit_length(), 1)

    def run_input(self, state: int, x: int) -> int:
        """Feed the updates encoding one group element (coordinates
        ascending, one update per nonzero coordinate)."""
        for coord, inc in self.group.unit_updates(x):
            state = self.step(state, coord, inc)
        return state

    def run_stream(self, updates) -> int:
        state = self.initial
        for coord, inc in updates:
            state = self.step(state, coord, inc)
        return state


def fsm_to_players(fsm: StreamFSM, n_players: int, max_state_bits: int | None = None) -> BroadcastProtocol:
    """Lift a streaming algorithm to an N-player streaming protocol.

    Player i decodes the previous message as the machine state, replays the
    updates encoding its own input, and forwards the new state; the last
    player applies the output map instead.
    """
    c = fsm.state_bits
    if max_state_bits is not None and c > max_state_bits:
        raise ValueError(
            f"FSM needs {c} state bits, over the declared budget {max_state_bits}"
        )

    def middle(x: int, prev: tuple, r: int) -> int:
        state = prev[-1] if prev else fsm.initial
        return fsm.run_input(state, x)

    def last(x: int, prev: tuple, r: int):
        state = prev[-1] if prev else fsm.initial
        return fsm.emit(fsm.run_input(state, x))

    fns = tuple([middle] * (n_players - 1) + [last])
    return BroadcastProtocol(
        group=fsm.group,
        n_players=n_players,
        message_bits=c,
        msg_fns=fns,
        randomness_bits=0,
        streaming=True,
        name=f"state-passing({fsm.name or 'fsm'})",
    )


@dataclass(frozen=True, eq=False)
class AdditiveFunction:
    """F(x_1, ..., x_N) = f(x_1 + ... + x_N) on the base group."""

    base: DenseFunction
    arity: int

    def evaluate(self, inputs: Sequence[int]):
        if len(inputs) != self.arity:
            raise ValueError(f"expected {self.arity} inputs")
        spec = self.base.group
        acc = 0
        for x in inputs:
            acc = spec.add(acc, x)
        return self.base.values[acc]

    __call__ = evaluate


def additive_lift(f: DenseFunction, n_players: int) -> AdditiveFunction:
    if n_players < 1:
        raise ValueError("need at least one player")
    return AdditiveFunction(f, n_players)


def run_smp(
    players: Sequence[Callable[[int, int], object]],
    coordinator: Callable[[tuple, int], object],
    inputs: Sequence[int],
    r: int = 0,
):
    """Simultaneous-message game: players send one message each to a
    coordinator who sees them all at once and produces the output."""
    if len(players) != len(inputs):
        raise ValueError("arity mismatch")
    messages = tuple(fn(x, r) for fn, x in zip(players, inputs))
    return coordinator(messages, r)


def smp_from_linear_sketch(sketch, n_players: int):
    """SMP protocol computing an additive function from a linear sketch.

    Each player sends the sketch image of its own input; the coordinator
    sums the images (linearity) and applies the post-processing table.
    Returns (players, coordinator, total_communication_bits).
    """
    from .sketch import LinearJuntaF2, ZpJunta

    if isinstance(sketch, LinearJuntaF2):
        def player(x: int, r: int) -> int:
            return sketch.sketch_value(x)

        def coordinator(messages: tuple, r: int):
            acc = 0
            for m in messages:
                acc ^= m
            return sketch.post[acc]

        bits = n_players * sketch.k
    elif isinstance(sketch, ZpJunta):
        p = sketch.p

        def player(x, r: int):
            coords = sketch.group.decode(x) if isinstance(x, int) else x
            return sketch.sketch_value(coords)

        def coordinator(messages: tuple, r: int):
            acc = [0] * sketch.k
            for m in messages:
                acc = [(a + v) % p for a, v in zip(acc, m)]
            return sketch.post[sketch._post_index(tuple(acc))]

        bits = n_players * sketch.k * max((p - 1).bit_length(), 1)
    else:
        raise TypeError("SMP lowering needs a linear junta (F2 or Z_p)")
    return [player] * n_players, coordinator, bits
