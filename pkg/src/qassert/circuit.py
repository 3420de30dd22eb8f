"""Circuit IR: instructions, assertions, gate algebra and circuit inversion."""

from __future__ import annotations

import cmath
from dataclasses import dataclass, field
from typing import Optional, Union


class CircuitError(Exception):
    """Raised for malformed or unsupported circuit constructs."""


@dataclass(frozen=True)
class GateInfo:
    name: str
    n_qubits: int
    n_params: int
    n_controls: int
    # inverse rule: "self", "negate" (negate all angle params) or the name
    # of the inverse gate
    inverse: str


GATE_SET: dict[str, GateInfo] = {
    "x": GateInfo("x", 1, 0, 0, "self"),
    "y": GateInfo("y", 1, 0, 0, "self"),
    "z": GateInfo("z", 1, 0, 0, "self"),
    "h": GateInfo("h", 1, 0, 0, "self"),
    "s": GateInfo("s", 1, 0, 0, "sdg"),
    "sdg": GateInfo("sdg", 1, 0, 0, "s"),
    "t": GateInfo("t", 1, 0, 0, "tdg"),
    "tdg": GateInfo("tdg", 1, 0, 0, "t"),
    "rx": GateInfo("rx", 1, 1, 0, "negate"),
    "ry": GateInfo("ry", 1, 1, 0, "negate"),
    "rz": GateInfo("rz", 1, 1, 0, "negate"),
    "p": GateInfo("p", 1, 1, 0, "negate"),
    "cx": GateInfo("cx", 2, 0, 1, "self"),
    # cz is symmetric; first operand is classified as control for determinism
    "cz": GateInfo("cz", 2, 0, 1, "self"),
    "swap": GateInfo("swap", 2, 0, 0, "self"),
    "ccx": GateInfo("ccx", 3, 0, 2, "self"),
}


@dataclass(frozen=True)
class Instruction:
    """A gate application, measurement or barrier over global qubit indices.

    For measurements, ``qubits`` holds the single source qubit and ``clbit``
    the destination classical bit as a ``(creg_name, index)`` pair.
    """

    name: str
    qubits: tuple[int, ...]
    params: tuple[float, ...] = ()
    clbit: Optional[tuple[str, int]] = None

    @property
    def is_measure(self) -> bool:
        return self.name == "measure"

    @property
    def is_barrier(self) -> bool:
        return self.name == "barrier"

    @property
    def is_gate(self) -> bool:
        return self.name in GATE_SET


@dataclass(frozen=True)
class Superposition:
    pass


@dataclass(frozen=True)
class EqualityState:
    amplitudes: tuple[complex, ...]


@dataclass(frozen=True)
class EqualityCircuit:
    # body instructions over local qubit indices 0..n_qubits-1
    body: tuple[Instruction, ...]
    n_qubits: int


AssertionKind = Union[Superposition, EqualityState, EqualityCircuit]


@dataclass(frozen=True)
class Assertion:
    """An assertion point: ordered target qubits plus an expectation.

    ``labels`` carries the source-level operand names (e.g. ``q0`` or the
    formal name ``y`` of an inlined gate body) used to derive readable
    classical-bit names.
    """

    id: int
    targets: tuple[int, ...]
    labels: tuple[str, ...]
    kind: AssertionKind

    def is_projective(self, reapply: bool = True) -> bool:
        """Whether measuring a correct state leaves it intact.

        One-hot explicit states are computational basis states; circuit
        assertions uncompute to |0...0> (and need the re-applied circuit to
        stay eligible for concatenation).
        """
        if isinstance(self.kind, EqualityState):
            probs = [abs(a) ** 2 for a in self.kind.amplitudes]
            return sum(1 for p in probs if p > 1e-9) == 1
        if isinstance(self.kind, EqualityCircuit):
            return reapply
        return False


def acted_qubits(instr: Instruction) -> tuple[frozenset[int], frozenset[int]]:
    """Split an instruction's operands into (controls, targets).

    A measurement collapses its source qubit, so it counts as a target.
    Barriers act on nothing.
    """
    if instr.is_barrier:
        return frozenset(), frozenset()
    if instr.is_measure:
        return frozenset(), frozenset(instr.qubits)
    info = GATE_SET.get(instr.name)
    if info is None:
        raise CircuitError(f"unsupported gate: {instr.name}")
    nc = info.n_controls
    return frozenset(instr.qubits[:nc]), frozenset(instr.qubits[nc:])


def invert_instruction(instr: Instruction) -> Instruction:
    """Return the inverse of a unitary gate application."""
    if instr.is_measure:
        raise CircuitError("cannot invert a measurement")
    if instr.is_barrier:
        return instr
    info = GATE_SET.get(instr.name)
    if info is None:
        raise CircuitError(f"unsupported gate: {instr.name}")
    if info.inverse == "self":
        return instr
    if info.inverse == "negate":
        return Instruction(instr.name, instr.qubits, tuple(-p for p in instr.params))
    return Instruction(info.inverse, instr.qubits, instr.params)


def invert_circuit(body: list[Instruction] | tuple[Instruction, ...]) -> list[Instruction]:
    """Reverse the sequence and invert each gate; body must be unitary-only."""
    return [invert_instruction(g) for g in reversed(body)]


def remap_instructions(
    body: list[Instruction] | tuple[Instruction, ...], mapping: dict[int, int]
) -> list[Instruction]:
    """Rewrite local qubit indices through ``mapping``."""
    return [
        Instruction(g.name, tuple(mapping[q] for q in g.qubits), g.params, g.clbit)
        for g in body
    ]


@dataclass
class FlatProgram:
    """An inlined program: register declarations plus an ordered step list."""

    qregs: tuple[tuple[str, int], ...]
    cregs: tuple[tuple[str, int], ...]
    steps: tuple[Union[Instruction, Assertion], ...]
    _qubit_offsets: dict[str, int] = field(default_factory=dict, repr=False)

    def __post_init__(self) -> None:
        off = 0
        for name, size in self.qregs:
            self._qubit_offsets[name] = off
            off += size

    @property
    def n_qubits(self) -> int:
        return sum(size for _, size in self.qregs)

    def qubit_index(self, reg: str, idx: int) -> int:
        return self._qubit_offsets[reg] + idx

    def qubit_label(self, qubit: int) -> str:
        for name, size in self.qregs:
            off = self._qubit_offsets[name]
            if off <= qubit < off + size:
                return f"{name}{qubit - off}" if size > 1 else f"{name}0"
        raise CircuitError(f"qubit index {qubit} out of range")

    def qubit_ref(self, qubit: int) -> str:
        for name, size in self.qregs:
            off = self._qubit_offsets[name]
            if off <= qubit < off + size:
                return f"{name}[{qubit - off}]"
        raise CircuitError(f"qubit index {qubit} out of range")

    @property
    def instructions(self) -> list[Instruction]:
        return [s for s in self.steps if isinstance(s, Instruction)]

    @property
    def assertions(self) -> list[Assertion]:
        return [s for s in self.steps if isinstance(s, Assertion)]


def normalized_amplitudes(amps: list[complex] | tuple[complex, ...], tol: float = 1e-6) -> tuple[complex, ...]:
    total = sum(abs(a) ** 2 for a in amps)
    if abs(total - 1.0) > tol:
        raise CircuitError(
            f"amplitude vector is not normalized (sum of squared moduli = {total:.8g})"
        )
    return tuple(complex(a) for a in amps)


def equal_up_to_global_phase(
    a: list[complex], b: list[complex], tol: float = 1e-9
) -> bool:
    """Whether two normalized statevectors differ only by a global phase."""
    if len(a) != len(b):
        return False
    overlap = sum(x.conjugate() * y for x, y in zip(a, b))
    return abs(abs(overlap) - 1.0) < tol
