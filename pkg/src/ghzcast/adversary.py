"""Adversary models for the transmission channel.

Eve sits on the broker-to-agent channels and processes every tuple in transit
the same way, because nothing in the stream marks which tuples are decoys.
The attack interface enforces that: attack_tuple sees only the in-flight
state, never the tuple kind or the broker's decoy records.

Three attacks are modeled:

- measure_resend: measure each targeted qubit (always in the computational
  basis, or in a basis chosen uniformly per qubit) and forward the collapsed
  qubit.
- intercept_replace: keep the targeted qubits and forward qubits of a fresh
  GHZ tuple prepared by Eve in their place.
- entangle_ancilla: apply a CNOT from each targeted qubit onto a fresh
  ancilla qubit that Eve keeps, delaying her measurement until the protocol
  has finished.

After a run, eve_postprocess combines whatever Eve measured with everything
that crossed the public classical channel and produces her best guess of each
agent's secret; bits she has no handle on are filled with fair coin flips.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import TYPE_CHECKING

import numpy as np

from .bitvec import BitVector
from .statevec import (
    COMPUTATIONAL,
    HADAMARD,
    PureState,
    apply_cnot,
    measure_qubits,
    prepare_basis,
    prepare_ghz,
    swap_qubits,
    tensor,
)

if TYPE_CHECKING:  # pragma: no cover
    from .protocol import Transcript

__all__ = [
    "NONE",
    "MEASURE_RESEND",
    "INTERCEPT_REPLACE",
    "ENTANGLE_ANCILLA",
    "ALWAYS_COMPUTATIONAL",
    "RANDOM_BASIS",
    "STRATEGY_TAGS",
    "EveStrategy",
    "EveTupleEntry",
    "EveRecord",
    "attack_tuple",
    "eve_postprocess",
]

NONE = "none"
MEASURE_RESEND = "measure_resend"
INTERCEPT_REPLACE = "intercept_replace"
ENTANGLE_ANCILLA = "entangle_ancilla"
STRATEGY_TAGS = (NONE, MEASURE_RESEND, INTERCEPT_REPLACE, ENTANGLE_ANCILLA)

ALWAYS_COMPUTATIONAL = "always_computational"
RANDOM_BASIS = "random_basis"
BASIS_POLICIES = (ALWAYS_COMPUTATIONAL, RANDOM_BASIS)


@dataclass(frozen=True)
class EveStrategy:
    """Configuration of the channel adversary.

    k is the number of qubits attacked per tuple and targets names the agent
    slots they sit on; targets defaults to the k lowest slots.
    """

    tag: str = NONE
    basis_policy: str | None = None
    k: int = 1
    targets: tuple[int, ...] | None = None

    def __post_init__(self) -> None:
        if self.tag not in STRATEGY_TAGS:
            raise ValueError(f"unknown strategy tag {self.tag!r}")
        if self.tag == MEASURE_RESEND:
            if self.basis_policy not in BASIS_POLICIES:
                raise ValueError(
                    f"measure_resend needs a basis policy from {BASIS_POLICIES}"
                )
        elif self.basis_policy is not None:
            raise ValueError(f"basis_policy is only meaningful for {MEASURE_RESEND}")
        if self.tag != NONE and self.k < 1:
            raise ValueError("k must be >= 1")

    @property
    def active(self) -> bool:
        return self.tag != NONE

    def resolved_targets(self, n: int) -> tuple[int, ...]:
        """Targeted agent slots for an n-party tuple."""
        targets = self.targets if self.targets is not None else tuple(range(self.k))
        if len(targets) != self.k:
            raise ValueError(f"expected {self.k} targets, got {len(targets)}")
        if len(set(targets)) != len(targets):
            raise ValueError("targets must be distinct")
        if any(not 0 <= t <= n - 2 for t in targets):
            raise ValueError(f"targets must be agent slots 0..{n - 2}")
        return tuple(targets)

    def validate_for(self, n: int) -> None:
        if self.active:
            if self.k > n - 1:
                raise ValueError(f"k={self.k} exceeds the {n - 1} transmitted qubits")
            self.resolved_targets(n)


@dataclass
class EveTupleEntry:
    """Eve's bookkeeping for one stream position.

    measured holds in-transit measurement results as (slot, basis, outcome).
    intercepted and ancillas map the extra qubit indices Eve holds in the
    tuple state to the agent slot they relate to; unforwarded lists members
    of her replacement tuple that never left her lab. final_state is filled
    in after the run so she can measure what she kept, and post_outcomes
    records those late measurements as qubit -> bit.
    """

    stream_position: int
    measured: tuple[tuple[int, str, int], ...] = ()
    intercepted: tuple[tuple[int, int], ...] = ()
    unforwarded: tuple[int, ...] = ()
    ancillas: tuple[tuple[int, int], ...] = ()
    final_state: PureState | None = None
    post_outcomes: dict[int, int] = field(default_factory=dict)


@dataclass
class EveRecord:
    strategy: EveStrategy
    n: int
    entries: list[EveTupleEntry] = field(default_factory=list)


_ghz_cache: dict[int, PureState] = {}


def _fresh_ghz(n: int) -> PureState:
    if n not in _ghz_cache:
        _ghz_cache[n] = prepare_ghz(n)
    return _ghz_cache[n]


def attack_tuple(
    strategy: EveStrategy,
    state: PureState,
    rng: np.random.Generator,
    stream_position: int = -1,
) -> tuple[PureState, EveTupleEntry]:
    """Apply the attack to one in-flight tuple.

    The returned state keeps the protocol slots on qubits 0..n-1; any qubits
    Eve retains are appended above them. Positions and kinds of tuples are
    deliberately absent from this interface.
    """
    if not strategy.active:
        raise ValueError("attack_tuple called with the inactive strategy")
    n = state.num_qubits
    targets = strategy.resolved_targets(n)
    entry = EveTupleEntry(stream_position=stream_position)

    if strategy.tag == MEASURE_RESEND:
        if strategy.basis_policy == ALWAYS_COMPUTATIONAL:
            bases = [COMPUTATIONAL] * len(targets)
        else:
            bases = [
                HADAMARD if rng.integers(0, 2) else COMPUTATIONAL for _ in targets
            ]
        bits, state = measure_qubits(state, targets, bases, rng)
        entry.measured = tuple(
            (slot, basis, bit) for slot, basis, bit in zip(targets, bases, bits)
        )
        return state, entry

    if strategy.tag == INTERCEPT_REPLACE:
        joint = tensor(state, _fresh_ghz(n))
        for j, slot in enumerate(targets):
            joint = swap_qubits(joint, slot, n + j)
        entry.intercepted = tuple((n + j, slot) for j, slot in enumerate(targets))
        entry.unforwarded = tuple(range(n + len(targets), 2 * n))
        return joint, entry

    if strategy.tag == ENTANGLE_ANCILLA:
        joint = tensor(state, prepare_basis(BitVector.zeros(len(targets))))
        for j, slot in enumerate(targets):
            joint = apply_cnot(joint, slot, n + j)
        entry.ancillas = tuple((n + j, slot) for j, slot in enumerate(targets))
        return joint, entry

    raise AssertionError("unreachable")


def _measure_kept(
    entry: EveTupleEntry, qubits: tuple[int, ...], basis: str, rng: np.random.Generator
) -> dict[int, int]:
    """Measure Eve's retained qubits of one tuple, at most once."""
    pending = [q for q in qubits if q not in entry.post_outcomes]
    if pending and entry.final_state is not None:
        bits, collapsed = measure_qubits(
            entry.final_state, pending, [basis] * len(pending), rng
        )
        entry.final_state = collapsed
        for q, b in zip(pending, bits):
            entry.post_outcomes[q] = b
    return entry.post_outcomes


def _public_segments(transcript: "Transcript") -> tuple[dict, dict] | None:
    """Broker and agent segments that crossed the classical channel."""
    broker_segments: dict[int, BitVector] = {}
    cross_segments: dict[tuple[int, int], BitVector] = {}
    saw_exchange = False
    for msg in transcript.messages:
        if msg.stage != "exchange" or msg.segment_index is None:
            continue
        saw_exchange = True
        payload = BitVector.from_text(msg.payload)
        if msg.sender == "broker":
            broker_segments[msg.segment_index] = payload
        else:
            sender_idx = int(msg.sender.split("_")[1])
            cross_segments[(sender_idx, msg.segment_index)] = payload
    if not saw_exchange:
        return None
    return broker_segments, cross_segments


def eve_postprocess(
    record: EveRecord, transcript: "Transcript", rng: np.random.Generator
) -> tuple[BitVector, ...]:
    """Eve's best reconstruction of every agent's secret.

    Works from her in-transit records, late measurements of anything she
    kept, and all classical traffic. Aborted runs carry no exchange traffic,
    so every guessed bit is then a fair coin.
    """
    layout = transcript.layout
    n_agents = layout.segments
    decoys = set(transcript.decoy_positions)
    stream_length = transcript.stream_length
    info_positions = [p for p in range(stream_length) if p not in decoys]

    public = None if transcript.aborted else _public_segments(transcript)
    entries = {e.stream_position: e for e in record.entries}

    guesses: list[BitVector] = []
    for t in range(n_agents):
        lo, hi = layout.bounds(t)
        bits: list[int] = []
        for j in range(lo, hi):
            guess = None
            if public is not None:
                broker_segments, cross_segments = public
                jj = j - lo
                known = broker_segments[t].bit(jj)
                for i in range(n_agents):
                    if i != t:
                        known ^= cross_segments[(i, t)].bit(jj)
                entry = entries.get(info_positions[j])
                if entry is not None:
                    guess = _strategy_guess(record.strategy, entry, t, known, rng)
            if guess is None:
                guess = int(rng.integers(0, 2))
            bits.append(guess)
        guesses.append(BitVector.from_bits(bits))
    return tuple(guesses)


def _strategy_guess(
    strategy: EveStrategy,
    entry: EveTupleEntry,
    owner: int,
    known: int,
    rng: np.random.Generator,
) -> int | None:
    """Guess one payload bit from Eve's records, or None for a coin flip."""
    if strategy.tag == MEASURE_RESEND:
        # a qubit resent in the Hadamard basis passes decryption unchanged,
        # so its owner's register bit equals Eve's outcome
        for slot, basis, outcome in entry.measured:
            if slot == owner and basis == HADAMARD:
                return known ^ outcome
        return None

    if strategy.tag == ENTANGLE_ANCILLA:
        # the ancillas extend the tuple to a larger GHZ state, so the parity
        # of all Hadamard outcomes, hers included, equals the payload bit;
        # the known sum still lacks the owner's withheld register bit
        qubits = tuple(q for q, _ in entry.ancillas)
        outcomes = _measure_kept(entry, qubits, HADAMARD, rng)
        parity = 0
        for q in qubits:
            parity ^= outcomes[q]
        return known ^ parity

    if strategy.tag == INTERCEPT_REPLACE:
        # computational outcomes of the kept qubits are branch labels with no
        # dependence on the embedded payload
        qubits = tuple(q for q, _ in entry.intercepted) + entry.unforwarded
        _measure_kept(entry, qubits, COMPUTATIONAL, rng)
        return None

    return None
