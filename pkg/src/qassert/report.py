"""Report serialization: JSON, delimited summary, and per-assertion figures."""

from __future__ import annotations

import csv
import json
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .verify import VerificationReport

CSV_COLUMNS = [
    "id", "slice", "kind", "verdict", "p_value", "shots", "fidelity", "implied_by",
]


def write_report_json(report: VerificationReport, path: Path, extra: dict | None = None) -> None:
    doc = report.to_json()
    if extra:
        doc["config"].update(extra)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(doc, indent=2) + "\n")


def write_report_csv(report: VerificationReport, path: Path) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_COLUMNS)
        for r in report.results:
            writer.writerow([
                r.assertion_id,
                r.slice_index if r.slice_index >= 0 else "",
                r.kind,
                r.verdict,
                "" if r.p_value is None else f"{r.p_value:.6g}",
                "" if r.shots is None else r.shots,
                "" if r.fidelity is None else f"{r.fidelity:.6g}",
                "" if r.implied_by is None else r.implied_by,
            ])


def render_report_figures(report: VerificationReport, out_dir: Path) -> list[Path]:
    """One figure per evaluated assertion: observed frequency bars with the
    (noise-adjusted) expected distribution marked as crosses."""
    out_dir.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []
    for r in report.results:
        if r.observed is None or r.expected is None:
            continue
        m = len(r.bits)
        outcomes = [format(i, f"0{m}b") for i in range(2 ** m)]
        observed = r.observed / max(1, r.shots or 1)
        fig, ax = plt.subplots(figsize=(max(4.0, 0.4 * len(outcomes)), 3.0))
        ax.bar(range(len(outcomes)), observed, color="#4878b0", label="observed")
        ax.plot(
            range(len(outcomes)), r.expected, "x", color="#d1452c",
            markersize=7, label="expected",
        )
        ax.set_xticks(range(len(outcomes)))
        ax.set_xticklabels(outcomes, rotation=90 if m > 3 else 0, fontsize=7)
        ax.set_ylabel("frequency")
        ax.set_xlabel("outcome (" + ", ".join(r.bits) + ")")
        p_text = "" if r.p_value is None else f", p = {r.p_value:.4g}"
        ax.set_title(f"assertion {r.assertion_id}: {r.verdict}{p_text}", fontsize=10)
        ax.legend(fontsize=8)
        fig.tight_layout()
        path = out_dir / f"assertion_{r.assertion_id}.png"
        fig.savefig(path, dpi=120)
        plt.close(fig)
        written.append(path)
    return written
