"""Slice-count reduction: assertion movement, subset canceling, concatenation."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .circuit import (
    Assertion,
    EqualityCircuit,
    EqualityState,
    FlatProgram,
    Instruction,
    Superposition,
    acted_qubits,
)
from .simulator import StateVector, marginal_distribution, simulate
from .translate import Slice, TranslationOptions, build_slice_for_group

IMPLICATION_QUBIT_CAP = 16


class OptimizationError(Exception):
    pass


@dataclass(frozen=True)
class OptimizationOptions:
    enable_cancel: bool = True
    enable_concat: bool = True
    enable_move: bool = True


@dataclass(frozen=True)
class ImplicationVerdict:
    implies: bool
    rule: str  # "sup->sup" | "eq->sup" | "eq->eq" | "none"

    def __bool__(self) -> bool:
        return self.implies


def commutes(a: Assertion, instr: Instruction) -> bool:
    """An assertion commutes with an instruction of disjoint support."""
    controls, targets = acted_qubits(instr)
    return not (set(a.targets) & (controls | targets))


def move_assertions(prog: FlatProgram) -> FlatProgram:
    """Hoist each assertion left over maximal runs of commuting instructions.

    Assertions never move past other assertions, so their relative order is
    preserved; the result is a permutation of the input steps and idempotent.
    """
    steps = list(prog.steps)
    for i in range(len(steps)):
        if not isinstance(steps[i], Assertion):
            continue
        j = i
        while j > 0:
            prev = steps[j - 1]
            if isinstance(prev, Assertion) or not commutes(steps[j], prev):
                break
            steps[j - 1], steps[j] = steps[j], steps[j - 1]
            j -= 1
    return FlatProgram(prog.qregs, prog.cregs, tuple(steps))


def _assertion_state(a: Assertion) -> StateVector:
    """The expected state over the assertion's targets, in target order."""
    if isinstance(a.kind, EqualityState):
        n = len(a.targets)
        return StateVector(n, np.asarray(a.kind.amplitudes, dtype=complex))
    if isinstance(a.kind, EqualityCircuit):
        return simulate(a.kind.body, a.kind.n_qubits)
    raise OptimizationError("superposition assertions define no state")


def implies(a1: Assertion, a2: Assertion, tol: float = 1e-9) -> ImplicationVerdict:
    """Whether every state satisfying a1 also satisfies a2 (Table rules)."""
    q1, q2 = set(a1.targets), set(a2.targets)
    sup1 = isinstance(a1.kind, Superposition)
    sup2 = isinstance(a2.kind, Superposition)
    if sup1 and sup2:
        return ImplicationVerdict(q1 <= q2, "sup->sup")
    if sup1 and not sup2:
        return ImplicationVerdict(False, "none")
    if len(a1.targets) > IMPLICATION_QUBIT_CAP:
        raise OptimizationError(
            f"implication check over {len(a1.targets)} qubits exceeds the "
            f"{IMPLICATION_QUBIT_CAP}-qubit cap"
        )
    state1 = _assertion_state(a1)
    if sup2:
        shared = q1 & q2
        if not shared:
            return ImplicationVerdict(False, "eq->sup")
        positions = [a1.targets.index(q) for q in a1.targets if q in shared]
        marg = marginal_distribution(state1, positions)
        return ImplicationVerdict(int(np.sum(marg > tol)) >= 2, "eq->sup")
    # eq -> eq: Q2 subset of Q1 and |psi1> = |psi2> (x) |phi|
    if not q2 <= q1:
        return ImplicationVerdict(False, "eq->eq")
    state2 = _assertion_state(a2)
    n1 = len(a1.targets)
    tensor = state1.amplitudes.reshape((2,) * n1)
    axes2 = [a1.targets.index(q) for q in a2.targets]
    rest = [i for i in range(n1) if i not in axes2]
    mat = np.transpose(tensor, axes2 + rest).reshape(2 ** len(axes2), -1)
    u, s, _vh = np.linalg.svd(mat, full_matrices=False)
    if len(s) > 1 and s[1] > tol:
        return ImplicationVerdict(False, "eq->eq")
    factor = u[:, 0]
    overlap = abs(np.vdot(factor, state2.amplitudes))
    return ImplicationVerdict(bool(abs(overlap - 1.0) < max(tol, 1e-12)), "eq->eq")


def cancel_subsets(prog: FlatProgram) -> tuple[FlatProgram, list[tuple[int, int]]]:
    """Remove assertions implied by a directly preceding assertion.

    Returns the reduced program and (canceled id, implied-by id) pairs.
    Cascades left to right: after a removal the next assertion may become
    adjacent to the surviving one.
    """
    steps = list(prog.steps)
    canceled: list[tuple[int, int]] = []
    i = 0
    while i < len(steps) - 1:
        cur, nxt = steps[i], steps[i + 1]
        if isinstance(cur, Assertion) and isinstance(nxt, Assertion):
            try:
                verdict = implies(cur, nxt)
            except OptimizationError:
                verdict = ImplicationVerdict(False, "none")
            if verdict:
                canceled.append((nxt.id, cur.id))
                del steps[i + 1]
                continue
        i += 1
    return FlatProgram(prog.qregs, prog.cregs, tuple(steps)), canceled


def _group_measured_qubits(group: list[Assertion]) -> set[int]:
    out: set[int] = set()
    for a in group:
        out.update(a.targets)
    return out


def can_concatenate_group(
    group: list[Assertion],
    nxt: Assertion,
    between: list[Instruction],
    topts: TranslationOptions,
) -> bool:
    """Whether the next assertion's slice can merge into the group's slice.

    Allowed when every assertion already in the slice is projective, or when
    no qubit it measured is later used as a target (controls are safe by the
    deferred measurement principle). The next assertion's own inverse block
    and measurements count as later instructions.
    """
    if any(
        isinstance(a.kind, EqualityCircuit) and not topts.reapply_circuit for a in group
    ):
        return False  # uncomputed state is never restored; slice is terminal
    if all(a.is_projective(topts.reapply_circuit) for a in group):
        return True
    measured = _group_measured_qubits(group)
    for instr in between:
        _, targets = acted_qubits(instr)
        if targets & measured:
            return False
    # the next translation measures (and, for circuit assertions, applies
    # gates to) exactly its own targets
    if set(nxt.targets) & measured:
        return False
    return True


def can_concatenate(
    earlier: Slice,
    later: Slice,
    between: list[Instruction],
    prog: FlatProgram,
    topts: TranslationOptions | None = None,
) -> bool:
    """Slice-level wrapper over the group rule (spec-facing surface)."""
    topts = topts or TranslationOptions()
    by_id = {a.id: a for a in prog.assertions}
    group = [by_id[i] for i in earlier.covered]
    nxt = by_id[later.covered[-1]]
    return can_concatenate_group(group, nxt, between, topts)


def plan_groups(
    prog: FlatProgram, topts: TranslationOptions, oopts: OptimizationOptions
) -> tuple[FlatProgram, list[list[Assertion]], list[tuple[int, int]]]:
    """Move, cancel, then greedily group assertions left to right."""
    if oopts.enable_move:
        prog = move_assertions(prog)
    canceled: list[tuple[int, int]] = []
    if oopts.enable_cancel:
        prog, canceled = cancel_subsets(prog)
    groups: list[list[Assertion]] = []
    current: list[Assertion] = []
    between: list[Instruction] = []
    for step in prog.steps:
        if isinstance(step, Instruction):
            if current:
                between.append(step)
            continue
        if not current:
            current = [step]
            between = []
        elif oopts.enable_concat and can_concatenate_group(current, step, between, topts):
            current.append(step)
            between = []
        else:
            groups.append(current)
            current = [step]
            between = []
    if current:
        groups.append(current)
    return prog, groups, canceled


def optimize(
    prog: FlatProgram,
    topts: TranslationOptions | None = None,
    oopts: OptimizationOptions | None = None,
) -> tuple[list[Slice], list[tuple[int, int]]]:
    """Full pipeline: move -> cancel -> concatenate, then build the slices."""
    topts = topts or TranslationOptions()
    oopts = oopts or OptimizationOptions()
    reduced, groups, canceled = plan_groups(prog, topts, oopts)
    slices = [
        build_slice_for_group(reduced, group, k, topts) for k, group in enumerate(groups)
    ]
    return slices, canceled
