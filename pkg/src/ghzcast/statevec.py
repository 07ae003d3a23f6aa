"""Dense pure-state simulation of few-qubit registers.

Conventions used throughout the package:

- A state over k qubits is a flat complex array of 2**k amplitudes.
- Qubit j corresponds to bit j of the flat index, so qubit 0 is the least
  significant bit and basis label text (most significant first) matches
  BitVector text.
- A Hadamard-basis measurement is simulated by rotating the qubit with H and
  measuring in the computational basis; outcome 0 means the plus state and
  outcome 1 means the minus state.

Operations never mutate their input state; they return new PureState values,
so a state may safely be shared between protocol tuples.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

import numpy as np

from .bitvec import BitVector

__all__ = [
    "COMPUTATIONAL",
    "HADAMARD",
    "MAX_QUBITS",
    "PureState",
    "prepare_basis",
    "prepare_hadamard_product",
    "apply_hadamard",
    "apply_cnot",
    "apply_phase_flip",
    "ghz_layers",
    "prepare_ghz",
    "distribution",
    "measure_all",
    "measure_qubits",
    "tensor",
    "swap_qubits",
    "states_equal",
]

MAX_QUBITS = 24
NORM_TOL = 1e-10

COMPUTATIONAL = "computational"
HADAMARD = "hadamard"

_SQRT_HALF = np.sqrt(0.5)


@dataclass
class PureState:
    """Normalized state vector over num_qubits qubits."""

    amplitudes: np.ndarray
    num_qubits: int

    def __post_init__(self) -> None:
        self.amplitudes = np.asarray(self.amplitudes, dtype=np.complex128)
        if not 0 <= self.num_qubits <= MAX_QUBITS:
            raise ValueError(f"qubit count {self.num_qubits} outside 0..{MAX_QUBITS}")
        if self.amplitudes.shape != (1 << self.num_qubits,):
            raise ValueError(
                f"amplitude array of shape {self.amplitudes.shape} does not match "
                f"{self.num_qubits} qubits"
            )
        norm = float(np.sum(np.abs(self.amplitudes) ** 2))
        if abs(norm - 1.0) > NORM_TOL:
            raise ValueError(f"state norm {norm} deviates from 1 beyond {NORM_TOL}")

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2


def _axis(state: PureState, qubit: int) -> int:
    if not 0 <= qubit < state.num_qubits:
        raise ValueError(f"qubit {qubit} out of range for {state.num_qubits}-qubit state")
    return state.num_qubits - 1 - qubit


def prepare_basis(labels: BitVector) -> PureState:
    """Computational basis state |labels>."""
    amps = np.zeros(1 << labels.length, dtype=np.complex128)
    amps[labels.value] = 1.0
    return PureState(amps, labels.length)


def prepare_hadamard_product(signs: Sequence[int]) -> PureState:
    """Product state of plus (sign 0) and minus (sign 1) qubits."""
    if any(s not in (0, 1) for s in signs):
        raise ValueError(f"signs must be 0 or 1, got {tuple(signs)!r}")
    return _hadamard_product_cached(tuple(signs))


@lru_cache(maxsize=256)
def _hadamard_product_cached(signs: tuple[int, ...]) -> PureState:
    n = len(signs)
    minus_mask = sum(s << q for q, s in enumerate(signs))
    idx = np.arange(1 << n, dtype=np.uint32)
    par = (np.bitwise_count(idx & np.uint32(minus_mask)) & 1).astype(np.float64)
    amps = ((-1.0) ** par) * (0.5 ** (n / 2))
    return PureState(amps.astype(np.complex128), n)


def _hadamard_raw(amps: np.ndarray, num_qubits: int, qubit: int) -> np.ndarray:
    if not 0 <= qubit < num_qubits:
        raise ValueError(f"qubit {qubit} out of range for {num_qubits}-qubit state")
    view = amps.reshape(-1, 2, 1 << qubit)
    a0 = view[:, 0, :]
    a1 = view[:, 1, :]
    out = np.empty_like(view)
    out[:, 0, :] = a0 + a1
    out[:, 1, :] = a0 - a1
    return (out * _SQRT_HALF).reshape(-1)


def apply_hadamard(state: PureState, qubit: int) -> PureState:
    return PureState(
        _hadamard_raw(state.amplitudes, state.num_qubits, qubit), state.num_qubits
    )


def apply_cnot(state: PureState, control: int, target: int) -> PureState:
    if control == target:
        raise ValueError("control and target must differ")
    cax = _axis(state, control)
    tax = _axis(state, target)
    view = state.amplitudes.reshape((2,) * state.num_qubits).copy()
    sel: list = [slice(None)] * state.num_qubits
    sel[cax] = 1
    # integer-indexing drops the control axis, shifting later axes down by one
    sub_tax = tax - 1 if tax > cax else tax
    view[tuple(sel)] = np.flip(view[tuple(sel)], axis=sub_tax)
    return PureState(view.reshape(-1), state.num_qubits)


def apply_phase_flip(state: PureState, qubit: int) -> PureState:
    """Pauli Z: negate every amplitude where the qubit is 1."""
    ax = _axis(state, qubit)
    view = state.amplitudes.reshape((2,) * state.num_qubits).copy()
    sel: list = [slice(None)] * state.num_qubits
    sel[ax] = 1
    view[tuple(sel)] *= -1.0
    return PureState(view.reshape(-1), state.num_qubits)


def ghz_layers(n: int, topology: str = "linear") -> list[list[tuple[int, int]]]:
    """CNOT layers that grow |0..0> + |1..1> after a Hadamard on qubit 0.

    linear chains one CNOT per layer; log_depth doubles the entangled set each
    layer and therefore uses exactly ceil(lg n) layers.
    """
    if n < 1:
        raise ValueError("need at least one qubit")
    if topology == "linear":
        return [[(i, i + 1)] for i in range(n - 1)]
    if topology == "log_depth":
        layers = []
        filled = 1
        while filled < n:
            layer = [(s, filled + s) for s in range(filled) if filled + s < n]
            layers.append(layer)
            filled += len(layer)
        return layers
    raise ValueError(f"unknown topology {topology!r}")


def prepare_ghz(n: int, topology: str = "linear") -> PureState:
    state = apply_hadamard(prepare_basis(BitVector.zeros(n)), 0)
    for layer in ghz_layers(n, topology):
        for control, target in layer:
            state = apply_cnot(state, control, target)
    return state


def _rotate(state: PureState, bases: Sequence[str]) -> PureState:
    if len(bases) != state.num_qubits:
        raise ValueError("need one basis per qubit")
    for q, b in enumerate(bases):
        if b == HADAMARD:
            state = apply_hadamard(state, q)
        elif b != COMPUTATIONAL:
            raise ValueError(f"unknown basis {b!r}")
    return state


def distribution(state: PureState, bases: Sequence[str]) -> np.ndarray:
    """Exact Born probabilities for measuring every qubit in the given bases."""
    return _rotate(state, bases).probabilities()


def _sample_index(weights: np.ndarray, rng: np.random.Generator) -> int:
    cum = np.cumsum(weights)
    r = rng.random() * float(cum[-1])
    return min(int(np.searchsorted(cum, r, side="right")), len(weights) - 1)


_KEY_CACHE_QUBIT_CAP = 16


def _subset_key(num_qubits: int, qubits: tuple[int, ...]) -> np.ndarray:
    """Maps each basis index to the packed bits of the given qubits."""
    if num_qubits <= _KEY_CACHE_QUBIT_CAP:
        return _subset_key_cached(num_qubits, qubits)
    return _subset_key_build(num_qubits, qubits)


def _subset_key_build(num_qubits: int, qubits: tuple[int, ...]) -> np.ndarray:
    idx = np.arange(1 << num_qubits, dtype=np.uint64)
    key = np.zeros_like(idx)
    for b, q in enumerate(qubits):
        key |= ((idx >> np.uint64(q)) & np.uint64(1)) << np.uint64(b)
    return key.astype(np.int64)


@lru_cache(maxsize=64)
def _subset_key_cached(num_qubits: int, qubits: tuple[int, ...]) -> np.ndarray:
    key = _subset_key_build(num_qubits, qubits)
    key.setflags(write=False)
    return key


def measure_all(
    state: PureState, bases: Sequence[str], rng: np.random.Generator
) -> tuple[BitVector, PureState]:
    """Measure every qubit; the collapsed state is kept in the measured frame."""
    probs = distribution(state, bases)
    idx = _sample_index(probs, rng)
    outcome = BitVector(idx, state.num_qubits)
    return outcome, prepare_basis(outcome)


def measure_qubits(
    state: PureState,
    qubits: Sequence[int],
    bases: Sequence[str],
    rng: np.random.Generator,
) -> tuple[tuple[int, ...], PureState]:
    """Measure a subset of qubits, returning their bits and the collapsed state.

    The collapsed state is returned in the physical frame: a qubit measured in
    the Hadamard basis is left in the plus or minus state, so later gates act
    on what a receiver would actually hold.
    """
    if len(qubits) != len(bases):
        raise ValueError("need one basis per measured qubit")
    if len(set(qubits)) != len(qubits):
        raise ValueError("measured qubits must be distinct")
    nq = state.num_qubits
    work = state.amplitudes
    for q, b in zip(qubits, bases):
        if b == HADAMARD:
            work = _hadamard_raw(work, nq, q)
        elif b == COMPUTATIONAL:
            if not 0 <= q < nq:
                raise ValueError(f"qubit {q} out of range for {nq}-qubit state")
        else:
            raise ValueError(f"unknown basis {b!r}")

    probs = work.real**2 + work.imag**2
    key = _subset_key(nq, tuple(qubits))
    marginal = np.bincount(key, weights=probs, minlength=1 << len(qubits))
    picked = _sample_index(marginal, rng)
    bits = tuple((picked >> b) & 1 for b in range(len(qubits)))

    amps = np.where(key == picked, work, 0.0)
    amps = amps / math.sqrt(np.vdot(amps, amps).real)
    for q, b in zip(qubits, bases):
        if b == HADAMARD:
            amps = _hadamard_raw(amps, nq, q)
    return bits, PureState(amps, nq)


def tensor(state: PureState, extra: PureState) -> PureState:
    """Join two registers; qubits of extra are appended above those of state."""
    if state.num_qubits + extra.num_qubits > MAX_QUBITS:
        raise ValueError("combined state exceeds the qubit cap")
    amps = np.kron(extra.amplitudes, state.amplitudes)
    return PureState(amps, state.num_qubits + extra.num_qubits)


def swap_qubits(state: PureState, a: int, b: int) -> PureState:
    """Relabel two qubits of the state."""
    if a == b:
        return state
    view = state.amplitudes.reshape((2,) * state.num_qubits)
    view = np.swapaxes(view, _axis(state, a), _axis(state, b))
    return PureState(view.reshape(-1).copy(), state.num_qubits)


def states_equal(a: PureState, b: PureState, tol: float = 1e-10) -> bool:
    """Amplitude-wise comparison, no global-phase allowance."""
    if a.num_qubits != b.num_qubits:
        return False
    return bool(np.max(np.abs(a.amplitudes - b.amplitudes)) <= tol)
