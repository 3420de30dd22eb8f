"""On-disk artifacts: slice files, the slices manifest, and counts records.

Slice files are written in the executable subset of the input dialect (no
assert statements) with trailing metadata comments, so they can be re-parsed
by the frontend. The manifest is the machine-readable source of truth for
verification; the comments are for humans.
"""

from __future__ import annotations

import hashlib
import json
import os
import tempfile
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

from .circuit import FlatProgram, Instruction
from .parser import format_instruction, parse_and_inline
from .simulator import MeasurementCounts
from .translate import SUPERPOSITION, ZERO, AssertionMetadata, Slice


class ArtifactError(Exception):
    pass


def atomic_write(path: Path, text: str) -> None:
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name, suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _expectation_comment(meta: AssertionMetadata) -> str:
    if meta.expectation == SUPERPOSITION:
        body = "superposition"
    elif meta.expectation == ZERO:
        body = "zero"
    else:
        body = ", ".join(f"{p:.6g}" for p in meta.expectation)
    return f"// ASSERT {meta.assertion_id}: ({', '.join(meta.bits)}) {{{body}}}"


def _expectation_json(meta: AssertionMetadata):
    if isinstance(meta.expectation, tuple):
        return list(meta.expectation)
    return meta.expectation


def format_slice(sl: Slice, prog: FlatProgram) -> str:
    """Render a slice as a standalone executable program with metadata comments."""
    lines = [f"qreg {name}[{size}];" for name, size in prog.qregs]
    used_cregs = {
        instr.clbit[0] for instr in sl.instructions if instr.is_measure and instr.clbit
    }
    lines += [
        f"creg {name}[{size}];" for name, size in prog.cregs if name in used_cregs
    ]
    lines += [f"creg {bit}[1];" for bit in sl.test_cregs]
    lines += [format_instruction(instr, prog) for instr in sl.instructions]
    lines.append("")
    lines += [_expectation_comment(meta) for meta in sl.metadata]
    return "\n".join(lines) + "\n"


def source_digest(text: str) -> str:
    return hashlib.sha256(text.encode()).hexdigest()


@dataclass
class Manifest:
    source: str
    digest: str
    n_qubits: int
    qubit_labels: list[str]
    options: dict
    slices: list[dict]
    canceled: list[dict]


def build_manifest(
    prog: FlatProgram,
    slices: list[Slice],
    canceled: list[tuple[int, int]],
    source_text: str,
    origin: str,
    options: dict,
) -> dict:
    return {
        "source": origin,
        "digest": source_digest(source_text),
        "n_qubits": prog.n_qubits,
        "qubit_labels": [prog.qubit_label(q) for q in range(prog.n_qubits)],
        "options": options,
        "slices": [
            {
                "index": sl.index,
                "file": f"slice_{sl.index}.qasm",
                "bit_order": list(sl.bit_order),
                "terminal": sl.terminal,
                "covered": list(sl.covered),
                "assertions": [
                    {
                        "id": meta.assertion_id,
                        "bits": list(meta.bits),
                        "expectation": _expectation_json(meta),
                        "projective": meta.projective,
                    }
                    for meta in sl.metadata
                ],
            }
            for sl in slices
        ],
        "canceled": [
            {"id": cid, "implied_by": by} for cid, by in canceled
        ],
    }


def write_slices(
    out_dir: Path,
    prog: FlatProgram,
    slices: list[Slice],
    canceled: list[tuple[int, int]],
    source_text: str,
    origin: str,
    options: dict,
) -> Path:
    out_dir.mkdir(parents=True, exist_ok=True)
    for sl in slices:
        atomic_write(out_dir / f"slice_{sl.index}.qasm", format_slice(sl, prog))
    manifest = build_manifest(prog, slices, canceled, source_text, origin, options)
    manifest_path = out_dir / "slices.json"
    atomic_write(manifest_path, json.dumps(manifest, indent=2) + "\n")
    return manifest_path


@dataclass
class LoadedSlice:
    """A slice reconstructed from the manifest plus its re-parsed program."""

    index: int
    program: FlatProgram
    metadata: list[AssertionMetadata]
    bit_order: list[str]
    covered: list[int]

    def to_slice(self) -> Slice:
        return Slice(
            index=self.index,
            n_qubits=self.program.n_qubits,
            instructions=self.program.instructions,
            metadata=self.metadata,
            covered=tuple(self.covered),
            test_cregs=[b for m in self.metadata for b in m.bits],
        )

    def clbits_in_order(self) -> tuple[list[tuple[str, int]], list[str]]:
        """All classical bits written by the slice, assertion bits first
        (manifest order), then any user bits in first-write order."""
        creg_sizes = dict(self.program.cregs)
        clbits: list[tuple[str, int]] = [(name, 0) for name in self.bit_order]
        names: list[str] = list(self.bit_order)
        seen = set(clbits)
        for instr in self.program.instructions:
            if instr.is_measure and instr.clbit and instr.clbit not in seen:
                seen.add(instr.clbit)
                clbits.append(instr.clbit)
                creg, idx = instr.clbit
                names.append(creg if creg_sizes.get(creg, 1) == 1 else f"{creg}[{idx}]")
        return clbits, names


def _metadata_from_json(entry: dict) -> AssertionMetadata:
    exp = entry["expectation"]
    if isinstance(exp, list):
        exp = tuple(float(p) for p in exp)
    elif exp not in (SUPERPOSITION, ZERO):
        raise ArtifactError(f"bad expectation {exp!r} in manifest")
    return AssertionMetadata(
        assertion_id=int(entry["id"]),
        bits=tuple(entry["bits"]),
        expectation=exp,
        projective=bool(entry.get("projective", False)),
    )


def load_manifest(manifest_path: Path) -> tuple[dict, list[LoadedSlice]]:
    manifest_path = Path(manifest_path)
    if manifest_path.is_dir():
        manifest_path = manifest_path / "slices.json"
    try:
        doc = json.loads(manifest_path.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ArtifactError(f"cannot read manifest {manifest_path}: {exc}")
    base = manifest_path.parent
    loaded = []
    for record in doc.get("slices", []):
        slice_path = base / record["file"]
        try:
            text = slice_path.read_text()
        except OSError as exc:
            raise ArtifactError(f"cannot read slice file {slice_path}: {exc}")
        program = parse_and_inline(text)
        loaded.append(
            LoadedSlice(
                index=int(record["index"]),
                program=program,
                metadata=[_metadata_from_json(e) for e in record["assertions"]],
                bit_order=list(record["bit_order"]),
                covered=list(record.get("covered", [])),
            )
        )
    return doc, loaded


def write_counts(
    out_dir: Path, slice_index: int, counts: MeasurementCounts, fidelity: float
) -> Path:
    doc = {
        "slice": slice_index,
        "shots": counts.shots,
        "bit_order": list(counts.bits),
        "counts": dict(sorted(counts.counts.items())),
        "fidelity": fidelity,
    }
    path = Path(out_dir) / f"counts_{slice_index}.json"
    atomic_write(path, json.dumps(doc, indent=2) + "\n")
    return path


def load_counts(counts_dir: Path, slice_index: int) -> MeasurementCounts:
    path = Path(counts_dir) / f"counts_{slice_index}.json"
    try:
        doc = json.loads(path.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ArtifactError(f"cannot read counts file {path}: {exc}")
    try:
        return MeasurementCounts(
            shots=int(doc["shots"]),
            counts={str(k): int(v) for k, v in doc["counts"].items()},
            bits=tuple(doc["bit_order"]),
        )
    except (KeyError, ValueError) as exc:
        raise ArtifactError(f"malformed counts file {path}: {exc}")
