"""Statistical verification of assertions from measurement counts.

Equality assertions are checked with a Cressie-Read power-divergence
goodness-of-fit test against the noise-adjusted expected distribution;
superposition assertions are checked by testing every noise-adjusted
basis-state hypothesis and rejecting the assertion when any of them is
statistically plausible.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.special import gammaincc

from .device import DeviceModel, SliceFidelity, slice_fidelity
from .simulator import MeasurementCounts, counts_from_array, mixture_with_uniform
from .translate import SUPERPOSITION, ZERO, AssertionMetadata, Slice

HYPOTHESIS_BIT_CAP = 16


class VerificationError(Exception):
    pass


@dataclass(frozen=True)
class VerifierConfig:
    alpha: float = 0.05
    lambda_: float = 2.0 / 3.0
    min_expected: float = 1e-12

    def __post_init__(self) -> None:
        if not 0.0 < self.alpha < 1.0:
            raise ValueError("alpha must lie in (0, 1)")
        if self.lambda_ in (0.0, -1.0):
            raise ValueError("lambda must not be 0 or -1")


@dataclass(frozen=True)
class ExpectedDistribution:
    probabilities: np.ndarray
    fidelity: float
    noise_adjusted: bool


@dataclass(frozen=True)
class TestResult:
    statistic: float
    df: int
    p_value: float


@dataclass
class AssertionResult:
    assertion_id: int
    slice_index: int
    kind: str  # "superposition" | "equality" | "implied-by"
    verdict: str  # "satisfied" | "rejected" | "implied-by"
    p_value: Optional[float] = None
    shots: Optional[int] = None
    fidelity: Optional[float] = None
    implied_by: Optional[int] = None
    # transient data for figure rendering; not serialized
    observed: Optional[np.ndarray] = field(default=None, repr=False)
    expected: Optional[np.ndarray] = field(default=None, repr=False)
    bits: tuple[str, ...] = ()

    def to_json(self) -> dict:
        out = {
            "id": self.assertion_id,
            "slice": self.slice_index,
            "kind": self.kind,
            "verdict": self.verdict,
        }
        if self.verdict == "implied-by":
            out["implied_by"] = self.implied_by
        else:
            out["p_value"] = self.p_value
            out["shots"] = self.shots
            out["fidelity"] = self.fidelity
        return out


@dataclass
class VerificationReport:
    results: list[AssertionResult]
    alpha: float
    lambda_: float
    model_name: str

    @property
    def all_satisfied(self) -> bool:
        return all(r.verdict != "rejected" for r in self.results)

    def to_json(self) -> dict:
        return {
            "config": {
                "alpha": self.alpha,
                "lambda": self.lambda_,
                "model": self.model_name,
            },
            "assertions": [r.to_json() for r in self.results],
            "all_satisfied": self.all_satisfied,
        }


def marginalize(counts: MeasurementCounts, bits: Sequence[str]) -> MeasurementCounts:
    """Sum counts over dropped bits, reordering keys to the requested order."""
    positions = []
    for bit in bits:
        if bit not in counts.bits:
            raise VerificationError(f"unknown bit name {bit!r}")
        positions.append(counts.bits.index(bit))
    if len(set(positions)) != len(positions):
        raise VerificationError("duplicate bit name in marginalization")
    out: dict[str, int] = {}
    for key, c in counts.counts.items():
        sub = "".join(key[p] for p in positions)
        out[sub] = out.get(sub, 0) + c
    return MeasurementCounts(counts.shots, out, tuple(bits))


def noise_adjust(probs: Sequence[float], fidelity: float, m: int) -> ExpectedDistribution:
    """Mix the expected distribution with uniform: E' = f*E + (1-f)/2^m."""
    if not 0.0 <= fidelity <= 1.0:
        raise VerificationError("fidelity must lie in [0, 1]")
    arr = np.asarray(probs, dtype=float)
    if arr.shape != (2 ** m,):
        raise VerificationError(f"expected 2^{m} probabilities, got {arr.shape}")
    return ExpectedDistribution(
        mixture_with_uniform(arr, fidelity), fidelity, fidelity < 1.0
    )


def power_divergence(
    observed: np.ndarray | MeasurementCounts,
    expected: ExpectedDistribution | np.ndarray,
    cfg: VerifierConfig | None = None,
) -> TestResult:
    """Cressie-Read power-divergence goodness-of-fit statistic and p-value.

    Cells whose expected probability falls below the floor are dropped when
    unobserved; an observation in such a cell contradicts the hypothesis
    exactly and forces p = 0.
    """
    cfg = cfg or VerifierConfig()
    if isinstance(observed, MeasurementCounts):
        observed = observed.as_array()
    obs = np.asarray(observed, dtype=float)
    exp = expected.probabilities if isinstance(expected, ExpectedDistribution) else np.asarray(expected, dtype=float)
    if obs.shape != exp.shape:
        raise VerificationError("observed and expected lengths differ")
    n = obs.sum()
    if n < 1:
        raise VerificationError("need at least one observation")
    below = exp < cfg.min_expected
    if np.any(obs[below] > 0):
        return TestResult(math.inf, int(np.sum(~below)) - 1, 0.0)
    obs = obs[~below]
    exp = exp[~below]
    if obs.size == 0:
        raise VerificationError("fewer than one retained cell")
    if obs.size == 1:
        # degenerate hypothesis: all mass observed in the single expected cell
        return TestResult(0.0, 0, 1.0)
    lam = cfg.lambda_
    expected_counts = n * exp
    ratio = np.divide(obs, expected_counts, out=np.ones_like(obs), where=obs > 0)
    terms = obs * (ratio ** lam - 1.0)
    stat = float(2.0 / (lam * (lam + 1.0)) * terms.sum())
    if stat < 0.0:  # numerical round-off on perfect fits
        stat = max(stat, -1e-12)
        stat = max(stat, 0.0)
    df = obs.size - 1
    p = chi2_survival(stat, df)
    return TestResult(stat, df, p)


def chi2_survival(x: float, df: int) -> float:
    """P(X >= x) for a chi-squared variable, via the regularized upper gamma."""
    if x <= 0.0:
        return 1.0
    return float(gammaincc(df / 2.0, x / 2.0))


def verify_equality(
    meta: AssertionMetadata,
    counts: MeasurementCounts,
    fidelity: float,
    cfg: VerifierConfig,
) -> tuple[str, float, ExpectedDistribution]:
    m = len(meta.bits)
    if len(counts.bits) != m:
        raise VerificationError("bit-count mismatch between metadata and counts")
    if meta.expectation == ZERO:
        probs = np.zeros(2 ** m)
        probs[0] = 1.0
    else:
        probs = np.asarray(meta.expectation, dtype=float)
    adjusted = noise_adjust(probs, fidelity, m)
    result = power_divergence(counts, adjusted, cfg)
    verdict = "rejected" if result.p_value <= cfg.alpha else "satisfied"
    return verdict, result.p_value, adjusted


def verify_superposition(
    meta: AssertionMetadata,
    counts: MeasurementCounts,
    fidelity: float,
    cfg: VerifierConfig,
) -> tuple[str, float, ExpectedDistribution]:
    m = len(meta.bits)
    if len(counts.bits) != m:
        raise VerificationError("bit-count mismatch between metadata and counts")
    if m > HYPOTHESIS_BIT_CAP:
        raise VerificationError(
            f"superposition check over {m} bits exceeds the {HYPOTHESIS_BIT_CAP}-bit cap"
        )
    best_p = -1.0
    best_hypothesis: Optional[ExpectedDistribution] = None
    for b in range(2 ** m):
        one_hot = np.zeros(2 ** m)
        one_hot[b] = 1.0
        hypothesis = noise_adjust(one_hot, fidelity, m)
        p_b = power_divergence(counts, hypothesis, cfg).p_value
        if p_b > best_p:
            best_p = p_b
            best_hypothesis = hypothesis
    # a plausible basis-state hypothesis means the state is NOT superposed
    verdict = "rejected" if best_p > cfg.alpha else "satisfied"
    assert best_hypothesis is not None
    return verdict, best_p, best_hypothesis


@dataclass(frozen=True)
class MonteCarloConfig:
    trials: int = 200
    pass_rate: float = 0.95
    start: int = 16
    cap: int = 65536
    seed: int = 0

    def __post_init__(self) -> None:
        if not 0.0 < self.pass_rate < 1.0:
            raise ValueError("pass rate must lie in (0, 1)")
        if self.start > self.cap:
            raise ValueError("start must not exceed cap")


class ShotCapExceeded(VerificationError):
    pass


def recommend_shots(
    probs: Sequence[float],
    fidelity: float,
    cfg: VerifierConfig,
    mc: MonteCarloConfig,
) -> int:
    """Smallest shot count whose Monte-Carlo false-rejection rate is acceptable.

    Doubles from the starting grid point until a count passes, then binary
    searches between the last failure and the first pass. Each evaluation
    derives its RNG from (seed, N) so revisits are deterministic.
    """
    arr = np.asarray(probs, dtype=float)
    m = int(round(math.log2(len(arr))))
    adjusted = noise_adjust(arr, fidelity, m)

    def passes(n: int) -> bool:
        rng = np.random.default_rng([mc.seed, n])
        draws = rng.multinomial(n, adjusted.probabilities, size=mc.trials)
        ok = 0
        for row in draws:
            if power_divergence(row, adjusted, cfg).p_value > cfg.alpha:
                ok += 1
        return ok / mc.trials >= mc.pass_rate

    n = mc.start
    if passes(n):
        return n
    last_fail = n
    while True:
        n *= 2
        if n > mc.cap:
            raise ShotCapExceeded(f"no shot count <= {mc.cap} reaches the target pass rate")
        if passes(n):
            break
        last_fail = n
    lo, hi = last_fail, n  # lo fails, hi passes
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if passes(mid):
            hi = mid
        else:
            lo = mid
    return hi


def verify_all(
    slices: list[Slice],
    counts_by_slice: dict[int, MeasurementCounts],
    canceled: list[tuple[int, int]],
    cfg: VerifierConfig,
    model: Optional[DeviceModel] = None,
    model_name: str = "ideal",
    qubit_name=lambda q: f"q{q}",
) -> VerificationReport:
    """Evaluate every assertion of every slice against its counts record."""
    results: list[AssertionResult] = []
    for sl in slices:
        if sl.index not in counts_by_slice:
            raise VerificationError(f"missing counts for slice {sl.index}")
        counts = counts_by_slice[sl.index]
        if set(sl.bit_order) - set(counts.bits):
            raise VerificationError(
                f"counts for slice {sl.index} lack bits "
                f"{sorted(set(sl.bit_order) - set(counts.bits))}"
            )
        if model is not None:
            f = slice_fidelity(sl.instructions, model, qubit_name).fidelity
        else:
            f = 1.0
        for meta in sl.metadata:
            local = marginalize(counts, meta.bits)
            if meta.expectation == SUPERPOSITION:
                verdict, p, hyp = verify_superposition(meta, local, f, cfg)
                kind = "superposition"
            else:
                verdict, p, hyp = verify_equality(meta, local, f, cfg)
                kind = "equality"
            results.append(
                AssertionResult(
                    assertion_id=meta.assertion_id,
                    slice_index=sl.index,
                    kind=kind,
                    verdict=verdict,
                    p_value=p,
                    shots=local.shots,
                    fidelity=f,
                    observed=local.as_array(),
                    expected=hyp.probabilities,
                    bits=meta.bits,
                )
            )
    for canceled_id, by_id in canceled:
        results.append(
            AssertionResult(
                assertion_id=canceled_id,
                slice_index=-1,
                kind="implied-by",
                verdict="implied-by",
                implied_by=by_id,
            )
        )
    results.sort(key=lambda r: r.assertion_id)
    return VerificationReport(results, cfg.alpha, cfg.lambda_, model_name)
