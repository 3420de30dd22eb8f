"""Dense statevector simulation, marginals and shot sampling.

The sampler mixes the ideal outcome distribution with a uniform distribution
according to a fidelity knob, matching the verifier's expected-distribution
model so end-to-end tests are self-consistent.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

import numpy as np

from .circuit import GATE_SET, Instruction

MAX_QUBITS = 24


class SimulationError(Exception):
    pass


def _u(rows):
    return np.array(rows, dtype=complex)


_SQ2 = 1.0 / math.sqrt(2.0)

_FIXED = {
    "x": _u([[0, 1], [1, 0]]),
    "y": _u([[0, -1j], [1j, 0]]),
    "z": _u([[1, 0], [0, -1]]),
    "h": _u([[_SQ2, _SQ2], [_SQ2, -_SQ2]]),
    "s": _u([[1, 0], [0, 1j]]),
    "sdg": _u([[1, 0], [0, -1j]]),
    "t": _u([[1, 0], [0, np.exp(1j * math.pi / 4)]]),
    "tdg": _u([[1, 0], [0, np.exp(-1j * math.pi / 4)]]),
    "cx": _u([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]]),
    "cz": np.diag([1, 1, 1, -1]).astype(complex),
    "swap": _u([[1, 0, 0, 0], [0, 0, 1, 0], [0, 1, 0, 0], [0, 0, 0, 1]]),
}
_CCX = np.eye(8, dtype=complex)
_CCX[6, 6] = _CCX[7, 7] = 0
_CCX[6, 7] = _CCX[7, 6] = 1
_FIXED["ccx"] = _CCX


def gate_matrix(name: str, params: Sequence[float] = ()) -> np.ndarray:
    if name in _FIXED:
        return _FIXED[name]
    if name not in ("rx", "ry", "rz", "p"):
        raise SimulationError(f"unsupported gate: {name}")
    th = params[0]
    c, s = math.cos(th / 2), math.sin(th / 2)
    if name == "rx":
        return _u([[c, -1j * s], [-1j * s, c]])
    if name == "ry":
        return _u([[c, -s], [s, c]])
    if name == "rz":
        return _u([[np.exp(-1j * th / 2), 0], [0, np.exp(1j * th / 2)]])
    if name == "p":
        return _u([[1, 0], [0, np.exp(1j * th)]])
    raise SimulationError(f"unsupported gate: {name}")


@dataclass(frozen=True)
class StateVector:
    """Amplitudes over 2^n basis states; qubit 0 is the most significant bit."""

    n_qubits: int
    amplitudes: np.ndarray

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2


@dataclass(frozen=True)
class SampleConfig:
    shots: int
    seed: int = 0
    fidelity: float = 1.0

    def __post_init__(self) -> None:
        if self.shots < 1:
            raise ValueError("shots must be positive")
        if not 0.0 <= self.fidelity <= 1.0:
            raise ValueError("fidelity must lie in [0, 1]")


def zero_state(n_qubits: int) -> np.ndarray:
    if n_qubits > MAX_QUBITS:
        raise SimulationError(f"{n_qubits} qubits exceeds the {MAX_QUBITS}-qubit cap")
    if n_qubits < 1:
        raise SimulationError("need at least one qubit")
    amps = np.zeros(2 ** n_qubits, dtype=complex)
    amps[0] = 1.0
    return amps


def apply_gate(amps: np.ndarray, instr: Instruction, n_qubits: int) -> np.ndarray:
    """Apply one gate application to a dense statevector (new array returned)."""
    if instr.is_barrier:
        return amps
    if instr.is_measure:
        raise SimulationError("measurement passed to unitary simulation")
    if instr.name not in GATE_SET:
        raise SimulationError(f"unsupported gate: {instr.name}")
    for q in instr.qubits:
        if not 0 <= q < n_qubits:
            raise SimulationError(f"qubit index {q} out of range")
    k = len(instr.qubits)
    mat = gate_matrix(instr.name, instr.params).reshape((2,) * (2 * k))
    tensor = amps.reshape((2,) * n_qubits)
    axes = list(instr.qubits)
    out = np.tensordot(mat, tensor, axes=(list(range(k, 2 * k)), axes))
    # tensordot puts the gate axes first; move them back into place
    out = np.moveaxis(out, list(range(k)), axes)
    return out.reshape(-1)


def simulate(instructions: Iterable[Instruction], n_qubits: int) -> StateVector:
    """Run a measurement-free instruction sequence on |0...0>."""
    amps = zero_state(n_qubits)
    for instr in instructions:
        amps = apply_gate(amps, instr, n_qubits)
    norm = np.linalg.norm(amps)
    if abs(norm - 1.0) > 1e-9:
        amps = amps / norm
    return StateVector(n_qubits, amps)


def marginal_distribution(state: StateVector, qubits: Sequence[int]) -> np.ndarray:
    """Outcome probabilities over the given qubits; first listed qubit is MSB."""
    qubits = list(qubits)
    if len(set(qubits)) != len(qubits):
        raise SimulationError("duplicate qubit in marginal")
    for q in qubits:
        if not 0 <= q < state.n_qubits:
            raise SimulationError(f"qubit index {q} out of range")
    probs = state.probabilities().reshape((2,) * state.n_qubits)
    keep = qubits
    drop = [q for q in range(state.n_qubits) if q not in keep]
    summed = probs.sum(axis=tuple(drop)) if drop else probs
    # axes of `summed` follow ascending qubit index; reorder to the given order
    order = [sorted(keep).index(q) for q in keep]
    summed = np.transpose(summed, order) if len(keep) > 1 else summed
    return summed.reshape(-1)


def mixture_with_uniform(probs: np.ndarray, fidelity: float) -> np.ndarray:
    return fidelity * probs + (1.0 - fidelity) / len(probs)


@dataclass(frozen=True)
class MeasurementCounts:
    shots: int
    counts: dict[str, int]
    bits: tuple[str, ...]

    def __post_init__(self) -> None:
        if sum(self.counts.values()) != self.shots:
            raise ValueError("counts do not sum to the shot total")
        m = len(self.bits)
        for key in self.counts:
            if len(key) != m or set(key) - {"0", "1"}:
                raise ValueError(f"bad outcome key {key!r} for {m} bits")

    def as_array(self) -> np.ndarray:
        arr = np.zeros(2 ** len(self.bits), dtype=np.int64)
        for key, c in self.counts.items():
            arr[int(key, 2)] += c
        return arr


def counts_from_array(arr: np.ndarray, bits: Sequence[str]) -> MeasurementCounts:
    m = len(bits)
    counts = {format(i, f"0{m}b"): int(c) for i, c in enumerate(arr) if c}
    return MeasurementCounts(int(arr.sum()), counts, tuple(bits))


def sample_distribution(
    probs: np.ndarray, bits: Sequence[str], cfg: SampleConfig
) -> MeasurementCounts:
    """Multinomial shot sampling from a fidelity-mixed outcome distribution."""
    mixed = mixture_with_uniform(np.asarray(probs, dtype=float), cfg.fidelity)
    mixed = np.clip(mixed, 0.0, None)
    mixed = mixed / mixed.sum()
    rng = np.random.default_rng(cfg.seed)
    arr = rng.multinomial(cfg.shots, mixed)
    return counts_from_array(arr, bits)


def sample_counts(
    state: StateVector, measured_qubits: Sequence[int], cfg: SampleConfig,
    bits: Optional[Sequence[str]] = None,
) -> MeasurementCounts:
    """Sample terminal measurements of the given qubits from a state."""
    probs = marginal_distribution(state, measured_qubits)
    if bits is None:
        bits = [f"q{q}" for q in measured_qubits]
    return sample_distribution(probs, bits, cfg)


def outcome_distribution(
    instructions: Sequence[Instruction],
    n_qubits: int,
    bit_order: Sequence[tuple[str, int]],
) -> np.ndarray:
    """Exact classical-outcome distribution of a slice with measurements.

    Mid-circuit measurements are handled by branching on each outcome with its
    Born probability and collapsing the state; branches with negligible weight
    are pruned. ``bit_order`` lists the classical bits most-significant first.
    """
    bit_pos = {bit: i for i, bit in enumerate(bit_order)}
    m = len(bit_order)
    dist = np.zeros(2 ** m, dtype=float)
    # (probability weight, statevector, classical bit values)
    branches: list[tuple[float, np.ndarray, dict[tuple[str, int], int]]] = [
        (1.0, zero_state(n_qubits), {})
    ]
    for instr in instructions:
        if instr.is_measure:
            q = instr.qubits[0]
            if not 0 <= q < n_qubits:
                raise SimulationError(f"qubit index {q} out of range")
            if instr.clbit not in bit_pos:
                raise SimulationError(f"measurement writes undeclared bit {instr.clbit}")
            new_branches = []
            for weight, amps, bits in branches:
                tensor = amps.reshape((2,) * n_qubits)
                for outcome in (0, 1):
                    proj = np.zeros_like(tensor)
                    sl = [slice(None)] * n_qubits
                    sl[q] = outcome
                    proj[tuple(sl)] = tensor[tuple(sl)]
                    p = float(np.vdot(proj, proj).real)
                    if p < 1e-15:
                        continue
                    collapsed = (proj / math.sqrt(p)).reshape(-1)
                    new_bits = dict(bits)
                    new_bits[instr.clbit] = outcome
                    new_branches.append((weight * p, collapsed, new_bits))
            branches = new_branches
        else:
            branches = [
                (w, apply_gate(amps, instr, n_qubits), bits) for w, amps, bits in branches
            ]
    for weight, _, bits in branches:
        idx = 0
        for bit in bit_order:
            idx = (idx << 1) | bits.get(bit, 0)
        dist[idx] += weight
    total = dist.sum()
    if abs(total - 1.0) > 1e-9:
        dist = dist / total
    return dist
