"""Device calibration data and per-slice fidelity estimation."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Union

from .circuit import Instruction


class DeviceModelError(Exception):
    pass


@dataclass(frozen=True)
class DeviceModel:
    name: str
    gate_error: dict[str, float]  # must contain a "default" key
    measurement_error: dict[str, float]  # per-qubit-name, must contain "default"
    two_qubit_default: float | None = None

    def gate_rate(self, name: str, n_qubits: int) -> float:
        if name in self.gate_error:
            return self.gate_error[name]
        if n_qubits >= 2 and self.two_qubit_default is not None:
            return self.two_qubit_default
        return self.gate_error["default"]

    def measurement_rate(self, qubit_name: str) -> float:
        return self.measurement_error.get(qubit_name, self.measurement_error["default"])


@dataclass(frozen=True)
class SliceFidelity:
    fidelity: float
    gate_count: int
    measurement_count: int


IDEAL_MODEL = DeviceModel("ideal", {"default": 0.0}, {"default": 0.0})


def _check_rates(rates: dict[str, float], what: str) -> dict[str, float]:
    out = {}
    for key, value in rates.items():
        if not isinstance(value, (int, float)) or not 0.0 <= value < 1.0:
            raise DeviceModelError(f"{what} rate for {key!r} must lie in [0, 1): {value!r}")
        out[str(key)] = float(value)
    if "default" not in out:
        raise DeviceModelError(f"{what} map requires a 'default' entry")
    return out


def load_device_model(document: Union[dict, str, Path]) -> DeviceModel:
    """Load calibration data from a JSON document, file path or dict."""
    if isinstance(document, (str, Path)):
        path = Path(document)
        try:
            document = json.loads(path.read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise DeviceModelError(f"cannot read device model {path}: {exc}")
    if not isinstance(document, dict):
        raise DeviceModelError("device model must be a JSON object")
    if "gate_error" not in document or "measurement_error" not in document:
        raise DeviceModelError("device model requires 'gate_error' and 'measurement_error'")
    two_q = document.get("two_qubit_default")
    if two_q is not None and not 0.0 <= float(two_q) < 1.0:
        raise DeviceModelError(f"two_qubit_default must lie in [0, 1): {two_q!r}")
    return DeviceModel(
        name=str(document.get("name", "unnamed")),
        gate_error=_check_rates(dict(document["gate_error"]), "gate"),
        measurement_error=_check_rates(dict(document["measurement_error"]), "measurement"),
        two_qubit_default=None if two_q is None else float(two_q),
    )


def slice_fidelity(
    instructions: list[Instruction],
    model: DeviceModel,
    qubit_name: "callable[[int], str]" = lambda q: f"q{q}",
) -> SliceFidelity:
    """Product of per-instruction success probabilities; barriers contribute 1."""
    f = 1.0
    gates = measures = 0
    for instr in instructions:
        if instr.is_barrier:
            continue
        if instr.is_measure:
            f *= 1.0 - model.measurement_rate(qubit_name(instr.qubits[0]))
            measures += 1
        else:
            f *= 1.0 - model.gate_rate(instr.name, len(instr.qubits))
            gates += 1
    return SliceFidelity(f, gates, measures)
