"""Seeded Monte Carlo estimation of decoding failure rates.

Trial i of a plan is a pure function of (plan, master_seed, i): its child
seed is derived with the documented SplitMix64 scheme and split into
independent key / error / tie-break streams. Trials are executed in fixed-
size chunks; chunks may run on a worker pool, but aggregation always scans
trial indices in order and stops at the exact trial where the failure
target is met, so every report is bit-identical for any worker count.

A trial counts as a failure unless the decoder reports success AND the
recovered pattern equals the sampled error; successful decodes of the
wrong pattern (matching syndrome, different support) are miscorrections
and are tallied separately as well.
"""

from __future__ import annotations

import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

from scipy.stats import beta as _beta

from .codes import (
    QcSeedSpec,
    SparseParityCheck,
    Syndrome,
    generate_qc,
    load_code,
    sample_error,
    syndrome,
)
from .decoders import (
    BfConfig,
    DecodeOutcome,
    bf_decode,
    bfmax_decode_naive,
    bfmax_decode_sparse,
    predicted_op_count,
)
from .rng import STREAM_ERROR, STREAM_KEY, STREAM_TIEBREAK, child_seed, make_rng

SEED_SCHEME = "splitmix64-v1"

DECODERS = ("bf", "bfmax-naive", "bfmax-sparse")


# -- code sources ------------------------------------------------------------


@dataclass(frozen=True)
class FixedCodeSource:
    """One in-memory code shared by every trial."""

    code: SparseParityCheck

    def profile(self) -> SparseParityCheck:
        return self.code

    def realize(self, trial_key_seed: int) -> SparseParityCheck:
        return self.code

    def describe(self) -> str:
        return f"fixed(n={self.code.n},r={self.code.r},v={self.code.v})"


@dataclass(frozen=True)
class FileCodeSource:
    """Code loaded from a file once, shared by every trial."""

    path: str

    def profile(self) -> SparseParityCheck:
        return self._code

    @property
    def _code(self) -> SparseParityCheck:
        code = getattr(self, "_cached", None)
        if code is None:
            code = load_code(self.path)
            object.__setattr__(self, "_cached", code)
        return code

    def realize(self, trial_key_seed: int) -> SparseParityCheck:
        return self._code

    def describe(self) -> str:
        return f"file({Path(self.path).name})"


@dataclass(frozen=True)
class QcCodeSource:
    """Fixed-key quasi-cyclic code built once from its own seed."""

    r: int
    v: int
    seed: int

    def profile(self) -> SparseParityCheck:
        return self._code

    @property
    def _code(self) -> SparseParityCheck:
        code = getattr(self, "_cached", None)
        if code is None:
            code = generate_qc(QcSeedSpec(self.r, self.v, self.seed))
            object.__setattr__(self, "_cached", code)
        return code

    def realize(self, trial_key_seed: int) -> SparseParityCheck:
        return self._code

    def describe(self) -> str:
        return f"qc(r={self.r},v={self.v},seed={self.seed})"


@dataclass(frozen=True)
class FreshQcSource:
    """New quasi-cyclic key per trial, drawn from the trial's key stream.

    Removes key-specific error floors from rate estimates; this is the
    default for model validation.
    """

    r: int
    v: int

    def profile(self) -> SparseParityCheck:
        return generate_qc(QcSeedSpec(self.r, self.v, 0))

    def realize(self, trial_key_seed: int) -> SparseParityCheck:
        return generate_qc(QcSeedSpec(self.r, self.v, trial_key_seed))

    def describe(self) -> str:
        return f"fresh-qc(r={self.r},v={self.v})"


CodeSource = FixedCodeSource | FileCodeSource | QcCodeSource | FreshQcSource


def _is_fresh(source) -> bool:
    return isinstance(source, FreshQcSource)


# -- plans and reports -------------------------------------------------------


@dataclass(frozen=True)
class SimPlan:
    """Everything needed to reproduce a simulation run except the clock."""

    source: CodeSource
    t: int
    decoder: str = "bfmax-sparse"
    iter_max: int | None = None
    thresholds: tuple[int, ...] | None = None
    max_trials: int = 1000
    target_failures: int = 1000_000_000
    master_seed: int = 0
    worker_count: int = 1
    chunk_size: int = 512

    def __post_init__(self):
        if self.decoder not in DECODERS:
            raise ValueError(f"unknown decoder {self.decoder!r}; choose from {DECODERS}")
        if self.max_trials < 1:
            raise ValueError("max_trials must be at least 1")
        if self.target_failures < 1:
            raise ValueError("target_failures must be at least 1")
        if self.t < 0:
            raise ValueError("t must be non-negative")
        if self.iter_max is not None and self.iter_max < 0:
            raise ValueError("iter_max must be non-negative")
        if self.decoder == "bf" and self.thresholds is None:
            raise ValueError("bf decoder requires thresholds")
        if self.worker_count < 1:
            raise ValueError("worker_count must be at least 1")
        if self.chunk_size < 1:
            raise ValueError("chunk_size must be at least 1")

    @property
    def effective_iter_max(self) -> int:
        """Defaults to t, the regime in which the failure model is exact."""
        return self.t if self.iter_max is None else self.iter_max


@dataclass(frozen=True)
class SimReport:
    """Aggregated outcome of a simulation run.

    Everything except ``wall_seconds`` is a pure function of
    (plan, master_seed); ``deterministic_fields`` returns exactly that
    reproducible part.
    """

    n: int
    r: int
    v: int
    w_avg: float
    t: int
    decoder: str
    iter_max: int
    trials_run: int
    failures: int
    miscorrections: int
    dfr_point: float
    ci_low: float
    ci_high: float
    mean_iterations: float
    mean_op_counts: dict[str, float]
    master_seed: int
    seed_scheme: str
    source_desc: str
    wall_seconds: float

    def deterministic_fields(self) -> dict:
        out = {k: v for k, v in self.__dict__.items() if k != "wall_seconds"}
        return out


def clopper_pearson(failures: int, trials: int, alpha: float = 0.05) -> tuple[float, float]:
    """Exact binomial confidence interval, valid at tiny failure counts."""
    if trials < 1:
        raise ValueError("trials must be positive")
    if not 0 <= failures <= trials:
        raise ValueError("failures out of range")
    lo = 0.0 if failures == 0 else float(_beta.ppf(alpha / 2, failures, trials - failures + 1))
    hi = 1.0 if failures == trials else float(_beta.ppf(1 - alpha / 2, failures + 1, trials - failures))
    return lo, hi


# -- trial machinery ---------------------------------------------------------


def _trial_streams(master_seed: int, index: int) -> tuple[int, int, int]:
    child = child_seed(master_seed, index)
    return (
        child_seed(child, STREAM_KEY),
        child_seed(child, STREAM_ERROR),
        child_seed(child, STREAM_TIEBREAK),
    )


def _decode(plan: SimPlan, H: SparseParityCheck, s: Syndrome, tie_seed: int) -> DecodeOutcome:
    if plan.decoder == "bf":
        cfg = BfConfig(plan.effective_iter_max, plan.thresholds)
        return bf_decode(H, s, cfg)
    rng = make_rng(tie_seed)
    if plan.decoder == "bfmax-naive":
        return bfmax_decode_naive(H, s, plan.effective_iter_max, rng)
    return bfmax_decode_sparse(H, s, plan.effective_iter_max, rng)


def _run_trial(plan: SimPlan, shared: SparseParityCheck | None, index: int):
    key_seed, err_seed, tie_seed = _trial_streams(plan.master_seed, index)
    H = shared if shared is not None else plan.source.realize(key_seed)
    e = sample_error(H.n, plan.t, make_rng(err_seed))
    s = syndrome(H, e)
    outcome = _decode(plan, H, s, tie_seed)
    exact = outcome.success and outcome.error_estimate == e
    miscorrection = outcome.success and not exact
    ops = outcome.op_counts
    return (
        not exact,
        miscorrection,
        outcome.iterations_used,
        ops.counter_init_adds,
        ops.argmax_comparisons,
        ops.syndrome_bit_updates,
        ops.counter_update_touches,
    )


def _run_chunk(plan: SimPlan, lo: int, hi: int):
    shared = None if _is_fresh(plan.source) else plan.source.realize(0)
    return [_run_trial(plan, shared, i) for i in range(lo, hi)]


def _chunks(total: int, size: int):
    return [(lo, min(lo + size, total)) for lo in range(0, total, size)]


def _ordered_chunk_results(plan: SimPlan, runner, payload_fn):
    """Yield chunk results strictly in index order, using a pool if asked.

    ``runner`` is a module-level function (picklable); ``payload_fn`` maps
    a (lo, hi) range to its argument tuple. The caller may stop consuming
    early; pending futures are then discarded.
    """
    spans = _chunks(plan.max_trials, plan.chunk_size)
    if plan.worker_count == 1:
        for span in spans:
            yield runner(*payload_fn(span))
        return
    window = plan.worker_count + 2
    with ProcessPoolExecutor(max_workers=plan.worker_count) as pool:
        futures: dict[int, object] = {}
        next_submit = 0
        try:
            for next_consume in range(len(spans)):
                while next_submit < len(spans) and next_submit - next_consume < window:
                    futures[next_submit] = pool.submit(runner, *payload_fn(spans[next_submit]))
                    next_submit += 1
                yield futures.pop(next_consume).result()
        finally:
            for fut in futures.values():
                fut.cancel()


def run_sim(plan: SimPlan) -> SimReport:
    """Estimate the failure rate of ``plan``, stopping at the failure target.

    The aggregate depends only on (plan, master_seed): trials are consumed
    in index order and the run stops at the exact trial where
    ``target_failures`` is reached (or after ``max_trials``).
    """
    profile = plan.source.profile()
    if plan.t > profile.n:
        raise ValueError(f"t={plan.t} exceeds code length {profile.n}")
    start = time.perf_counter()

    trials = failures = miscorrections = 0
    iter_sum = 0
    op_sums = [0, 0, 0, 0]
    done = False
    gen = _ordered_chunk_results(plan, _run_chunk, lambda span: (plan, *span))
    for chunk in gen:
        for rec in chunk:
            fail, misc, iters, *ops = rec
            trials += 1
            failures += int(fail)
            miscorrections += int(misc)
            iter_sum += iters
            for k in range(4):
                op_sums[k] += ops[k]
            if failures >= plan.target_failures:
                done = True
                break
        if done:
            gen.close()
            break

    ci_low, ci_high = clopper_pearson(failures, trials)
    names = ("counter_init_adds", "argmax_comparisons", "syndrome_bit_updates", "counter_update_touches")
    return SimReport(
        n=profile.n,
        r=profile.r,
        v=profile.v,
        w_avg=profile.w_avg,
        t=plan.t,
        decoder=plan.decoder,
        iter_max=plan.effective_iter_max,
        trials_run=trials,
        failures=failures,
        miscorrections=miscorrections,
        dfr_point=failures / trials,
        ci_low=ci_low,
        ci_high=ci_high,
        mean_iterations=iter_sum / trials,
        mean_op_counts={name: op_sums[k] / trials for k, name in enumerate(names)},
        master_seed=plan.master_seed,
        seed_scheme=SEED_SCHEME,
        source_desc=plan.source.describe(),
        wall_seconds=time.perf_counter() - start,
    )


# -- differential testing ----------------------------------------------------


@dataclass(frozen=True)
class Mismatch:
    trial_index: int
    tie_seed: int
    naive_success: bool
    sparse_success: bool
    naive_flips: tuple[int, ...]
    sparse_flips: tuple[int, ...]


@dataclass(frozen=True)
class DifferentialReport:
    trials_run: int
    mismatches: tuple[Mismatch, ...]

    @property
    def clean(self) -> bool:
        return not self.mismatches


def _reference_pair(plan: SimPlan, shared, index: int, sparse_impl):
    key_seed, err_seed, tie_seed = _trial_streams(plan.master_seed, index)
    H = shared if shared is not None else plan.source.realize(key_seed)
    e = sample_error(H.n, plan.t, make_rng(err_seed))
    s = syndrome(H, e)
    naive = bfmax_decode_naive(H, s, plan.effective_iter_max, make_rng(tie_seed))
    sparse = sparse_impl(H, s, plan.effective_iter_max, make_rng(tie_seed))
    if naive.success == sparse.success and naive.flip_log == sparse.flip_log:
        return None
    return Mismatch(
        index, tie_seed, naive.success, sparse.success, naive.flip_log, sparse.flip_log
    )


def _run_diff_chunk(plan: SimPlan, lo: int, hi: int, sparse_impl=None):
    impl = sparse_impl if sparse_impl is not None else bfmax_decode_sparse
    shared = None if _is_fresh(plan.source) else plan.source.realize(0)
    out = []
    for i in range(lo, hi):
        miss = _reference_pair(plan, shared, i, impl)
        if miss is not None:
            out.append(miss)
    return out


def differential_campaign(plan: SimPlan, *, sparse_impl=None) -> DifferentialReport:
    """Run naive and sparse single-flip decoders on identical inputs.

    Any divergence in outcome or flip history is reported; the expected
    result is zero mismatches. ``sparse_impl`` exists so tests can inject a
    faulty implementation and prove the campaign catches it.
    """
    mismatches: list[Mismatch] = []
    gen = _ordered_chunk_results(
        plan, _run_diff_chunk, lambda span: (plan, *span, sparse_impl)
    )
    for chunk in gen:
        mismatches.extend(chunk)
    return DifferentialReport(plan.max_trials, tuple(mismatches))


# -- operation-count validation ----------------------------------------------


@dataclass(frozen=True)
class OpCountRow:
    term: str
    measured: float
    predicted: float

    @property
    def ratio(self) -> float:
        return self.measured / self.predicted if self.predicted else float("nan")


@dataclass(frozen=True)
class OpCountValidation:
    rows: tuple[OpCountRow, ...]
    trials_run: int

    def row(self, term: str) -> OpCountRow:
        for row in self.rows:
            if row.term == term:
                return row
        raise KeyError(term)


def opcount_validation(plan: SimPlan) -> OpCountValidation:
    """Compare measured operation counts of the sparse decoder to prediction.

    Reports per-iteration comparison and counter-touch terms (exact for
    regular codes) and the weighted total against the closed-form cost.
    """
    if plan.decoder != "bfmax-sparse":
        raise ValueError("operation-count validation targets the bfmax-sparse decoder")
    profile = plan.source.profile()
    report = run_sim(plan)
    iters = report.mean_iterations
    ops = report.mean_op_counts
    lg = math.log2(profile.v)
    weighted = (
        lg * (ops["counter_init_adds"] + ops["argmax_comparisons"])
        + iters
        + ops["syndrome_bit_updates"]
        + ops["counter_update_touches"]
    )
    predicted_iter_max = predicted_op_count(profile, plan.effective_iter_max)
    rows = (
        OpCountRow("counter_update_touches_per_iteration",
                   ops["counter_update_touches"] / iters if iters else 0.0,
                   profile.v * profile.w_avg),
        OpCountRow("argmax_comparisons_per_iteration",
                   ops["argmax_comparisons"] / iters if iters else 0.0,
                   profile.n),
        OpCountRow("syndrome_bit_updates_per_iteration",
                   ops["syndrome_bit_updates"] / iters if iters else 0.0,
                   profile.v),
        OpCountRow("weighted_total", weighted, predicted_iter_max),
    )
    return OpCountValidation(rows, report.trials_run)
