"""Registry of benchmark functions, protocols and streaming machines.

Functions are dense tables over their input group; protocols are families
parameterized by the player count so the compiler can instantiate N+1
players.  Everything is addressed by string name plus integer parameters,
which is what the CLI exposes.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .algebra import GroupSpec
from .fourier import DenseFunction
from .protocol import BroadcastProtocol, StreamFSM, fsm_to_players

__all__ = [
    "ProtocolFamily",
    "zoo_function",
    "zoo_protocol",
    "zoo_fsm",
    "zoo_list",
    "UnknownZooEntry",
]


class UnknownZooEntry(KeyError):
    pass


ZOO_GROUP_LIMIT = 1 << 20


def _check_scale(size: int):
    """Reject oversized instances before any dense table is allocated."""
    if size > ZOO_GROUP_LIMIT:
        raise ValueError(
            f"|G| = {size} exceeds the desk-scale limit {ZOO_GROUP_LIMIT}"
        )


@dataclass(frozen=True)
class ProtocolFamily:
    """A protocol builder parameterized by the number of players."""

    group: GroupSpec
    message_bits: int
    build: Callable[[int], BroadcastProtocol]
    name: str

    def __call__(self, n_players: int) -> BroadcastProtocol:
        return self.build(n_players)


def _parity(n: int) -> DenseFunction:
    _check_scale(1 << n)
    group = GroupSpec.boolean(n)
    xs = np.arange(group.size, dtype=np.uint64)
    return DenseFunction(group, (np.bitwise_count(xs) & 1).astype(np.float64))


def _junta_parity(n: int, mask: int) -> DenseFunction:
    _check_scale(1 << n)
    group = GroupSpec.boolean(n)
    xs = np.arange(group.size, dtype=np.uint64)
    vals = (np.bitwise_count(xs & np.uint64(mask)) & 1).astype(np.float64)
    return DenseFunction(group, vals)


def _dictator(n: int, i: int = 0) -> DenseFunction:
    if not 0 <= i < n:
        raise ValueError("dictator coordinate out of range")
    return _junta_parity(n, 1 << i)


def _majority(n: int) -> DenseFunction:
    _check_scale(1 << n)
    group = GroupSpec.boolean(n)
    xs = np.arange(group.size, dtype=np.uint64)
    vals = (2 * np.bitwise_count(xs) >= n).astype(np.float64)
    return DenseFunction(group, vals)


def _mod_p_sum_zero(n: int, p: int) -> DenseFunction:
    _check_scale(p ** n)
    group = GroupSpec.cyclic_power(p, n)
    sums = group.coords_matrix().sum(axis=1) % p
    return DenseFunction(group, (sums == 0).astype(np.float64))


def _two_parity_blend(
    n: int, a: int, b: int, w1: float = 0.3, w2: float = 0.2
) -> DenseFunction:
    """0.5 + w1*(-1)^<a,x> + w2*(-1)^<b,x>, a [0,1]-valued test target."""
    if w1 < 0 or w2 < 0 or w1 + w2 > 0.5:
        raise ValueError("need w1, w2 >= 0 with w1 + w2 <= 1/2")
    _check_scale(1 << n)
    group = GroupSpec.boolean(n)
    xs = np.arange(group.size, dtype=np.uint64)
    sa = 1.0 - 2.0 * (np.bitwise_count(xs & np.uint64(a)) & 1)
    sb = 1.0 - 2.0 * (np.bitwise_count(xs & np.uint64(b)) & 1)
    return DenseFunction(group, 0.5 + w1 * sa + w2 * sb)


def _parity_chain(n: int, mask: int | None = None) -> ProtocolFamily:
    group = GroupSpec.boolean(n)
    m = (1 << n) - 1 if mask is None else mask

    def msg(x: int, prev: tuple, r: int) -> int:
        acc = prev[-1] if prev else 0
        return acc ^ ((x & m).bit_count() & 1)

    def build(n_players: int) -> BroadcastProtocol:
        return BroadcastProtocol(
            group=group,
            n_players=n_players,
            message_bits=1,
            msg_fns=(msg,) * n_players,
            streaming=True,
            name=f"parity-chain(mask={m:#x})",
        )

    return ProtocolFamily(group, 1, build, "parity-chain")


def _running_sum_fsm(n: int, p: int) -> StreamFSM:
    group = GroupSpec.cyclic_power(p, n)
    return StreamFSM(
        group=group,
        n_states=p,
        initial=0,
        step=lambda s, coord, inc: (s + inc) % p,
        emit=lambda s: int(s == 0),
        name=f"running-sum-mod-{p}",
    )


def _running_sum_protocol(n: int, p: int) -> ProtocolFamily:
    fsm = _running_sum_fsm(n, p)
    return ProtocolFamily(
        fsm.group,
        fsm.state_bits,
        lambda n_players: fsm_to_players(fsm, n_players),
        "running-sum-mod-p",
    )


def _constant_protocol(n: int, value: int = 0, p: int = 2) -> ProtocolFamily:
    group = GroupSpec.boolean(n) if p == 2 else GroupSpec.cyclic_power(p, n)

    def msg(x: int, prev: tuple, r: int) -> int:
        return 0

    def last(x: int, prev: tuple, r: int) -> int:
        return value

    def build(n_players: int) -> BroadcastProtocol:
        return BroadcastProtocol(
            group=group,
            n_players=n_players,
            message_bits=1,
            msg_fns=(msg,) * (n_players - 1) + (last,),
            streaming=True,
            name=f"constant({value})",
        )

    return ProtocolFamily(group, 1, build, "constant")


def _two_parity_blend_chain(
    n: int, a: int, b: int, w1: float = 0.3, w2: float = 0.2, levels: int = 5
) -> ProtocolFamily:
    """2-bit chain carrying both masked parities; the tail reconstructs the
    blend and snaps it to a uniform grid, so the protocol's squared error
    is the exact quantization error."""
    if levels < 2:
        raise ValueError("need at least 2 quantization levels")
    group = GroupSpec.boolean(n)

    def msg(x: int, prev: tuple, r: int) -> int:
        acc = prev[-1] if prev else 0
        pa = (acc & 1) ^ ((x & a).bit_count() & 1)
        pb = ((acc >> 1) & 1) ^ ((x & b).bit_count() & 1)
        return pa | (pb << 1)

    def last(x: int, prev: tuple, r: int) -> float:
        z = msg(x, prev, r)
        value = 0.5 + w1 * (1 - 2 * (z & 1)) + w2 * (1 - 2 * ((z >> 1) & 1))
        return round(value * (levels - 1)) / (levels - 1)

    def build(n_players: int) -> BroadcastProtocol:
        return BroadcastProtocol(
            group=group,
            n_players=n_players,
            message_bits=2,
            msg_fns=(msg,) * (n_players - 1) + (last,),
            streaming=True,
            name="two-parity-blend-chain",
        )

    return ProtocolFamily(group, 2, build, "two-parity-blend-chain")


def _state_passing_protocol(fsm: str, **fsm_params) -> ProtocolFamily:
    """Lift any registered streaming machine into a protocol family."""
    machine = zoo_fsm(fsm, **fsm_params)
    return ProtocolFamily(
        machine.group,
        machine.state_bits,
        lambda n_players: fsm_to_players(machine, n_players),
        f"state-passing({fsm})",
    )


FUNCTIONS = {
    "parity": (_parity, "n"),
    "dictator": (_dictator, "n, i=0"),
    "junta-parity": (_junta_parity, "n, mask"),
    "majority": (_majority, "n"),
    "mod-p-sum-zero": (_mod_p_sum_zero, "n, p"),
    "two-parity-blend": (_two_parity_blend, "n, a, b, w1=0.3, w2=0.2"),
}

PROTOCOLS = {
    "parity-chain": (_parity_chain, "n, mask=None"),
    "running-sum-mod-p": (_running_sum_protocol, "n, p"),
    "constant": (_constant_protocol, "n, value=0, p=2"),
    "two-parity-blend-chain": (
        _two_parity_blend_chain,
        "n, a, b, w1=0.3, w2=0.2, levels=5",
    ),
    "state-passing": (_state_passing_protocol, "fsm, **fsm_params"),
}

FSMS = {
    "running-sum": (_running_sum_fsm, "n, p"),
}


def zoo_function(name: str, **params) -> DenseFunction:
    if name not in FUNCTIONS:
        raise UnknownZooEntry(f"unknown function {name!r}; see zoo-list")
    return FUNCTIONS[name][0](**params)


def zoo_protocol(name: str, **params) -> ProtocolFamily:
    if name not in PROTOCOLS:
        raise UnknownZooEntry(f"unknown protocol {name!r}; see zoo-list")
    return PROTOCOLS[name][0](**params)


def zoo_fsm(name: str, **params) -> StreamFSM:
    if name not in FSMS:
        raise UnknownZooEntry(f"unknown FSM {name!r}; see zoo-list")
    return FSMS[name][0](**params)


def zoo_list() -> dict:
    return {
        "functions": {k: sig for k, (_, sig) in FUNCTIONS.items()},
        "protocols": {k: sig for k, (_, sig) in PROTOCOLS.items()},
        "fsms": {k: sig for k, (_, sig) in FSMS.items()},
    }
