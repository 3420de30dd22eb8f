"""Command-line surface: translate, simulate, verify, recommend, check."""

from __future__ import annotations

import json
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Optional

import click
import numpy as np

from .artifacts import ArtifactError, LoadedSlice, load_counts, load_manifest, write_counts, write_slices
from .circuit import CircuitError
from .device import DeviceModel, DeviceModelError, load_device_model, slice_fidelity
from .optimize import OptimizationError, OptimizationOptions, optimize
from .parser import QasmError, SourceProgram, parse_and_inline
from .report import render_report_figures, write_report_csv, write_report_json
from .simulator import (
    MAX_QUBITS,
    SampleConfig,
    SimulationError,
    MeasurementCounts,
    counts_from_array,
    mixture_with_uniform,
    outcome_distribution,
)
from .translate import SUPERPOSITION, TranslationOptions
from .verify import (
    MonteCarloConfig,
    ShotCapExceeded,
    VerificationError,
    VerifierConfig,
    noise_adjust,
    power_divergence,
    recommend_shots,
    verify_all,
)

USAGE_ERROR = 2
_ERRORS = (
    QasmError, CircuitError, SimulationError, OptimizationError,
    DeviceModelError, VerificationError, ArtifactError, ValueError, OSError,
)


def _fail(message: str) -> "NoReturn":  # noqa: F821
    click.echo(f"error: {message}", err=True)
    sys.exit(USAGE_ERROR)


@click.group()
def main() -> None:
    """Compile assertion-annotated quantum programs into measured slices and
    statistically verify them from measurement counts."""


def _translate(
    input_path: str,
    out_dir: Path,
    reapply: bool,
    move: bool,
    cancel: bool,
    concat: bool,
):
    path = Path(input_path)
    text = sys.stdin.read() if input_path == "-" else path.read_text()
    origin = "<stdin>" if input_path == "-" else str(path)
    prog = parse_and_inline(SourceProgram(text, origin))
    if not prog.assertions:
        raise QasmError("no assertions found")
    topts = TranslationOptions(reapply_circuit=reapply)
    oopts = OptimizationOptions(enable_cancel=cancel, enable_concat=concat, enable_move=move)
    slices, canceled = optimize(prog, topts, oopts)
    options = {
        "reapply": reapply, "move": move, "cancel": cancel, "concat": concat,
    }
    manifest_path = write_slices(out_dir, prog, slices, canceled, text, origin, options)
    return prog, slices, canceled, manifest_path


@main.command("translate")
@click.argument("input_path", metavar="INPUT")
@click.option("--out", "out_dir", type=click.Path(path_type=Path), required=True,
              help="Directory for slice files and the manifest.")
@click.option("--no-reapply", is_flag=True, help="Do not re-apply circuit-assertion bodies after measuring.")
@click.option("--no-move", is_flag=True, help="Disable assertion movement.")
@click.option("--no-cancel", is_flag=True, help="Disable subset canceling.")
@click.option("--no-concat", is_flag=True, help="Disable slice concatenation.")
def cmd_translate(input_path, out_dir, no_reapply, no_move, no_cancel, no_concat):
    """Translate assertions into measured slices and write slice files."""
    try:
        _, slices, canceled, manifest_path = _translate(
            input_path, out_dir, not no_reapply, not no_move, not no_cancel, not no_concat
        )
    except _ERRORS as exc:
        _fail(str(exc))
    click.echo(f"wrote {len(slices)} slice(s) to {out_dir} (manifest: {manifest_path})")
    for cid, by in canceled:
        click.echo(f"assertion {cid} canceled: implied by assertion {by}")


def _simulate_slice(
    sl: LoadedSlice,
    shots: int,
    seed: int,
    model: Optional[DeviceModel],
) -> tuple[MeasurementCounts, float]:
    n = sl.program.n_qubits
    if n > MAX_QUBITS:
        raise SimulationError(f"slice {sl.index} uses {n} qubits (cap {MAX_QUBITS})")
    clbits, names = sl.clbits_in_order()
    dist = outcome_distribution(sl.program.instructions, n, clbits)
    if model is not None:
        f = slice_fidelity(sl.program.instructions, model, sl.program.qubit_label).fidelity
    else:
        f = 1.0
    mixed = mixture_with_uniform(dist, f)
    rng = np.random.default_rng([seed, sl.index])
    arr = rng.multinomial(shots, mixed / mixed.sum())
    return counts_from_array(arr, names), f


@main.command("simulate")
@click.argument("manifest", type=click.Path(path_type=Path))
@click.option("--shots", type=int, default=8192, show_default=True)
@click.option("--seed", type=int, envvar="QASSERT_SEED", default=0, show_default=True)
@click.option("--device", "device_path", type=click.Path(path_type=Path), default=None,
              help="Device model JSON; sampling fidelity is the slice fidelity.")
@click.option("--ideal", is_flag=True, help="Sample without noise (default when no device given).")
@click.option("--out", "out_dir", type=click.Path(path_type=Path), default=None,
              help="Counts directory (defaults to the manifest directory).")
@click.option("--jobs", type=int, default=1, show_default=True, help="Parallel slice workers.")
def cmd_simulate(manifest, shots, seed, device_path, ideal, out_dir, jobs):
    """Sample measurement counts for every slice on the built-in simulator."""
    try:
        if shots < 1:
            raise ValueError("shots must be positive")
        if device_path and ideal:
            raise ValueError("--device and --ideal are mutually exclusive")
        model = load_device_model(device_path) if device_path else None
        _, slices = load_manifest(manifest)
        out = Path(out_dir) if out_dir else (Path(manifest).parent if Path(manifest).is_file() else Path(manifest))
        out.mkdir(parents=True, exist_ok=True)

        def run(sl: LoadedSlice):
            counts, f = _simulate_slice(sl, shots, seed, model)
            return write_counts(out, sl.index, counts, f)

        if jobs > 1:
            with ThreadPoolExecutor(max_workers=jobs) as pool:
                paths = list(pool.map(run, slices))
        else:
            paths = [run(sl) for sl in slices]
    except _ERRORS as exc:
        _fail(str(exc))
    for path in paths:
        click.echo(f"wrote {path}")


def _verify(
    manifest: Path,
    counts_dir: Path,
    model: Optional[DeviceModel],
    cfg: VerifierConfig,
):
    doc, loaded = load_manifest(manifest)
    counts_by_slice = {}
    slices = []
    for sl in loaded:
        counts = load_counts(counts_dir, sl.index)
        missing = set(sl.bit_order) - set(counts.bits)
        if missing:
            raise VerificationError(
                f"counts for slice {sl.index} have mismatched bit order "
                f"(missing {sorted(missing)})"
            )
        counts_by_slice[sl.index] = counts
        slices.append(sl.to_slice())
    canceled = [(c["id"], c["implied_by"]) for c in doc.get("canceled", [])]

    # per-slice qubit labels all come from the same source program
    def qubit_name(q: int) -> str:
        return loaded[0].program.qubit_label(q) if loaded else f"q{q}"

    return verify_all(
        slices, counts_by_slice, canceled, cfg,
        model=model, model_name=model.name if model else "ideal",
        qubit_name=qubit_name,
    )


@main.command("verify")
@click.argument("manifest", type=click.Path(path_type=Path))
@click.argument("counts_dir", type=click.Path(path_type=Path))
@click.option("--device", "device_path", type=click.Path(path_type=Path), default=None)
@click.option("--alpha", type=float, default=0.05, show_default=True)
@click.option("--lambda", "lambda_", type=float, default=2.0 / 3.0, show_default=True,
              help="Power-divergence family parameter.")
@click.option("--report", "report_path", type=click.Path(path_type=Path), default=None,
              help="Report JSON path (default: <counts_dir>/report.json).")
@click.option("--csv", "csv_path", type=click.Path(path_type=Path), default=None,
              help="Also write a delimited summary (default: alongside the JSON).")
@click.option("--plots", "plots_dir", type=click.Path(path_type=Path), default=None,
              help="Render per-assertion observed-vs-expected figures into this directory.")
def cmd_verify(manifest, counts_dir, device_path, alpha, lambda_, report_path, csv_path, plots_dir):
    """Evaluate all assertions from counts; exit 0 iff every one is satisfied."""
    try:
        model = load_device_model(device_path) if device_path else None
        cfg = VerifierConfig(alpha=alpha, lambda_=lambda_)
        report = _verify(Path(manifest), Path(counts_dir), model, cfg)
        report_path = Path(report_path) if report_path else Path(counts_dir) / "report.json"
        write_report_json(report, report_path)
        write_report_csv(report, Path(csv_path) if csv_path else report_path.with_suffix(".csv"))
        if plots_dir:
            render_report_figures(report, Path(plots_dir))
    except _ERRORS as exc:
        _fail(str(exc))
    for r in report.results:
        if r.verdict == "implied-by":
            click.echo(f"assertion {r.assertion_id}: implied by assertion {r.implied_by}")
        else:
            click.echo(
                f"assertion {r.assertion_id}: {r.verdict} "
                f"(p = {r.p_value:.4g}, f = {r.fidelity:.4g}, shots = {r.shots})"
            )
    click.echo(f"report: {report_path}")
    sys.exit(0 if report.all_satisfied else 1)


@main.command("recommend")
@click.argument("manifest", type=click.Path(path_type=Path))
@click.option("--device", "device_path", type=click.Path(path_type=Path), default=None)
@click.option("--alpha", type=float, default=0.05, show_default=True)
@click.option("--lambda", "lambda_", type=float, default=2.0 / 3.0, show_default=True)
@click.option("--seed", type=int, envvar="QASSERT_SEED", default=0, show_default=True)
@click.option("--out", "out_path", type=click.Path(path_type=Path), default=None,
              help="Also write the recommendations as JSON.")
def cmd_recommend(manifest, device_path, alpha, lambda_, seed, out_path):
    """Recommend shot counts per assertion (program level: the maximum)."""
    try:
        model = load_device_model(device_path) if device_path else None
        cfg = VerifierConfig(alpha=alpha, lambda_=lambda_)
        _, loaded = load_manifest(manifest)
        entries = []
        for sl in loaded:
            if model is not None:
                f = slice_fidelity(
                    sl.program.instructions, model, sl.program.qubit_label
                ).fidelity
            else:
                f = 1.0
            for meta in sl.metadata:
                mc = MonteCarloConfig(seed=seed)
                try:
                    n = _recommend_for_metadata(meta, f, cfg, mc)
                    entries.append({"id": meta.assertion_id, "slice": sl.index, "shots": n})
                except ShotCapExceeded as exc:
                    click.echo(
                        f"warning: assertion {meta.assertion_id}: {exc}", err=True
                    )
                    entries.append({"id": meta.assertion_id, "slice": sl.index, "shots": None})
    except _ERRORS as exc:
        _fail(str(exc))
    usable = [e["shots"] for e in entries if e["shots"] is not None]
    program_level = max(usable) if usable else None
    for e in entries:
        shown = e["shots"] if e["shots"] is not None else "cap exceeded"
        click.echo(f"assertion {e['id']}: {shown}")
    click.echo(f"program recommendation: {program_level}")
    if out_path:
        doc = {"assertions": entries, "program": program_level, "seed": seed, "alpha": alpha}
        Path(out_path).write_text(json.dumps(doc, indent=2) + "\n")


def _recommend_for_metadata(meta, f, cfg: VerifierConfig, mc: MonteCarloConfig) -> int:
    m = len(meta.bits)
    if meta.expectation == SUPERPOSITION:
        # no single expected distribution exists; use the uniform superposed
        # state and require the basis-hypothesis sweep to accept
        uniform = np.full(2 ** m, 1.0 / 2 ** m)

        def accepts(row: np.ndarray) -> bool:
            for b in range(2 ** m):
                one_hot = np.zeros(2 ** m)
                one_hot[b] = 1.0
                hyp = noise_adjust(one_hot, f, m)
                if power_divergence(row, hyp, cfg).p_value > cfg.alpha:
                    return False
            return True

        def passes(n: int) -> bool:
            rng = np.random.default_rng([mc.seed, n])
            draws = rng.multinomial(n, mixture_with_uniform(uniform, f), size=mc.trials)
            return sum(accepts(row) for row in draws) / mc.trials >= mc.pass_rate

        n = mc.start
        if passes(n):
            return n
        last_fail = n
        while True:
            n *= 2
            if n > mc.cap:
                raise ShotCapExceeded(
                    f"no shot count <= {mc.cap} reaches the target pass rate"
                )
            if passes(n):
                break
            last_fail = n
        lo, hi = last_fail, n
        while hi - lo > 1:
            mid = (lo + hi) // 2
            if passes(mid):
                hi = mid
            else:
                lo = mid
        return hi
    if meta.expectation == "zero":
        probs = np.zeros(2 ** m)
        probs[0] = 1.0
    else:
        probs = np.asarray(meta.expectation, dtype=float)
    return recommend_shots(probs, f, cfg, mc)


@main.command("check")
@click.argument("input_path", metavar="INPUT")
@click.option("--out", "out_dir", type=click.Path(path_type=Path), required=True)
@click.option("--shots", type=int, default=8192, show_default=True)
@click.option("--seed", type=int, envvar="QASSERT_SEED", default=0, show_default=True)
@click.option("--device", "device_path", type=click.Path(path_type=Path), default=None)
@click.option("--alpha", type=float, default=0.05, show_default=True)
@click.option("--lambda", "lambda_", type=float, default=2.0 / 3.0, show_default=True)
@click.option("--no-reapply", is_flag=True)
@click.option("--no-move", is_flag=True)
@click.option("--no-cancel", is_flag=True)
@click.option("--no-concat", is_flag=True)
@click.option("--plots", "plots_dir", type=click.Path(path_type=Path), default=None)
@click.pass_context
def cmd_check(ctx, input_path, out_dir, shots, seed, device_path, alpha, lambda_,
              no_reapply, no_move, no_cancel, no_concat, plots_dir):
    """Translate, simulate and verify in one invocation."""
    try:
        model = load_device_model(device_path) if device_path else None
        _translate(input_path, out_dir, not no_reapply, not no_move,
                   not no_cancel, not no_concat)
        _, loaded = load_manifest(out_dir / "slices.json")
        for sl in loaded:
            counts, f = _simulate_slice(sl, shots, seed, model)
            write_counts(out_dir, sl.index, counts, f)
        cfg = VerifierConfig(alpha=alpha, lambda_=lambda_)
        report = _verify(out_dir / "slices.json", out_dir, model, cfg)
        report_path = out_dir / "report.json"
        write_report_json(report, report_path, extra={"seed": seed, "shots": shots})
        write_report_csv(report, out_dir / "report.csv")
        if plots_dir:
            render_report_figures(report, Path(plots_dir))
    except _ERRORS as exc:
        _fail(str(exc))
    for r in report.results:
        if r.verdict == "implied-by":
            click.echo(f"assertion {r.assertion_id}: implied by assertion {r.implied_by}")
        else:
            click.echo(
                f"assertion {r.assertion_id}: {r.verdict} "
                f"(p = {r.p_value:.4g}, f = {r.fidelity:.4g})"
            )
    sys.exit(0 if report.all_satisfied else 1)


if __name__ == "__main__":
    main()
