"""Translate assertions into measured, executable program slices."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Union

from .circuit import (
    Assertion,
    EqualityCircuit,
    EqualityState,
    FlatProgram,
    Instruction,
    Superposition,
    invert_circuit,
    remap_instructions,
)

SUPERPOSITION = "superposition"
ZERO = "zero"

# expectation is "superposition", "zero", or a probability tuple over 2^m outcomes
Expectation = Union[str, tuple[float, ...]]


@dataclass(frozen=True)
class AssertionMetadata:
    assertion_id: int
    bits: tuple[str, ...]  # classical bit (creg) names, most significant first
    expectation: Expectation
    projective: bool = False

    def __post_init__(self) -> None:
        if isinstance(self.expectation, tuple):
            if len(self.expectation) != 2 ** len(self.bits):
                raise ValueError("distribution length does not match bit count")
            if abs(sum(self.expectation) - 1.0) > 1e-9:
                raise ValueError("distribution does not sum to 1")


@dataclass
class Slice:
    index: int
    n_qubits: int
    instructions: list[Instruction]
    metadata: list[AssertionMetadata]
    covered: tuple[int, ...]
    test_cregs: list[str] = field(default_factory=list)
    terminal: bool = False

    @property
    def bit_order(self) -> tuple[str, ...]:
        """All assertion bits of the slice, most significant first."""
        bits: list[str] = []
        for meta in self.metadata:
            bits.extend(meta.bits)
        return tuple(bits)


@dataclass(frozen=True)
class TranslationOptions:
    reapply_circuit: bool = True


class _BitNamer:
    """Fresh classical-bit names that never collide with user cregs."""

    def __init__(self, prog: FlatProgram):
        self.taken = {name for name, _ in prog.cregs} | {name for name, _ in prog.qregs}

    def fresh(self, label: str) -> str:
        base = "test_" + "".join(ch for ch in label if ch.isalnum() or ch == "_")
        name = base
        counter = 1
        while name in self.taken:
            name = f"{base}_{counter}"
            counter += 1
        self.taken.add(name)
        return name


def translate_superposition(
    a: Assertion, namer: _BitNamer
) -> tuple[list[Instruction], AssertionMetadata]:
    assert isinstance(a.kind, Superposition) and a.targets
    bits = [namer.fresh(label) for label in a.labels]
    measures = [
        Instruction("measure", (q,), clbit=(bit, 0)) for q, bit in zip(a.targets, bits)
    ]
    return measures, AssertionMetadata(a.id, tuple(bits), SUPERPOSITION)


def translate_equality_explicit(
    a: Assertion, namer: _BitNamer
) -> tuple[list[Instruction], AssertionMetadata]:
    assert isinstance(a.kind, EqualityState)
    bits = [namer.fresh(label) for label in a.labels]
    measures = [
        Instruction("measure", (q,), clbit=(bit, 0)) for q, bit in zip(a.targets, bits)
    ]
    probs = tuple(abs(amp) ** 2 for amp in a.kind.amplitudes)
    total = sum(probs)
    probs = tuple(p / total for p in probs)
    meta = AssertionMetadata(a.id, tuple(bits), probs, projective=a.is_projective())
    return measures, meta


def translate_equality_circuit(
    a: Assertion, opts: TranslationOptions, namer: _BitNamer
) -> tuple[list[Instruction], AssertionMetadata]:
    assert isinstance(a.kind, EqualityCircuit)
    mapping = {local: q for local, q in enumerate(a.targets)}
    block: list[Instruction] = remap_instructions(invert_circuit(a.kind.body), mapping)
    bits = [namer.fresh(label) for label in a.labels]
    block += [
        Instruction("measure", (q,), clbit=(bit, 0)) for q, bit in zip(a.targets, bits)
    ]
    if opts.reapply_circuit:
        block += remap_instructions(a.kind.body, mapping)
    meta = AssertionMetadata(
        a.id, tuple(bits), ZERO, projective=a.is_projective(opts.reapply_circuit)
    )
    return block, meta


def _translation(
    a: Assertion, opts: TranslationOptions, namer: _BitNamer
) -> tuple[list[Instruction], AssertionMetadata]:
    if isinstance(a.kind, Superposition):
        return translate_superposition(a, namer)
    if isinstance(a.kind, EqualityState):
        return translate_equality_explicit(a, namer)
    return translate_equality_circuit(a, opts, namer)


def build_slice_for_group(
    prog: FlatProgram,
    group: list[Assertion],
    index: int,
    opts: TranslationOptions,
) -> Slice:
    """Build one slice covering the given assertions (in program order).

    The slice runs the raw program prefix up to the last covered assertion,
    with each covered assertion's translation block woven in at its position.
    Assertions outside the group are skipped entirely.
    """
    namer = _BitNamer(prog)
    group_ids = {a.id for a in group}
    last_id = group[-1].id
    instructions: list[Instruction] = []
    metadata: list[AssertionMetadata] = []
    terminal = False
    for step in prog.steps:
        if isinstance(step, Instruction):
            instructions.append(step)
            continue
        if step.id in group_ids:
            block, meta = _translation(step, opts, namer)
            instructions.extend(block)
            metadata.append(meta)
            if isinstance(step.kind, EqualityCircuit) and not opts.reapply_circuit:
                terminal = True
            if step.id == last_id:
                break
    test_cregs = [bit for meta in metadata for bit in meta.bits]
    return Slice(index, prog.n_qubits, instructions, metadata,
                 tuple(sorted(group_ids)), test_cregs, terminal)


def build_slices(
    prog: FlatProgram, opts: TranslationOptions | None = None
) -> list[Slice]:
    """One slice per assertion, pre-optimization."""
    opts = opts or TranslationOptions()
    assertions = prog.assertions
    if not assertions:
        raise ValueError("program contains no assertions")
    return [
        build_slice_for_group(prog, [a], k, opts) for k, a in enumerate(assertions)
    ]
