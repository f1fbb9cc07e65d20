"""Bit-flipping syndrome decoders with operation-count instrumentation.

Three decoders share the same counter machinery:

* ``bf_decode``: classic out-of-place bit flipping. Each iteration computes
  all counters once, flips every position whose counter reaches the
  iteration's threshold, and only then starts the next iteration.
* ``bfmax_decode_naive``: single-flip decoding, one bit per iteration (a
  position of maximum counter, ties broken uniformly at random),
  recomputing all counters from scratch every iteration. Reference
  implementation.
* ``bfmax_decode_sparse``: identical input/output behavior to the naive
  form (bit-for-bit equal flip history under the same tie-break stream)
  but maintains counters incrementally, touching only the v*w counters
  adjacent to the flipped column.

The counter of position i is the number of unsatisfied parity checks it
participates in; it always lies in [0, v]. Decoding stops when the working
syndrome reaches zero or the iteration budget runs out, and succeeds iff
the syndrome is zero. For row-regular codes the sparse decoder performs
exactly n comparisons and v*w counter touches per iteration regardless of
the error pattern, which is the property the op counters expose.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .codes import ErrorPattern, SparseParityCheck, Syndrome

_COUNTER_DTYPE = np.int16


@dataclass
class OpCounts:
    """Raw operation tallies, one unit per integer add/compare/bit toggle.

    ``counter_init_adds`` counts full counter (re)computations (n*v adds
    each), ``argmax_comparisons`` counter-vs-counter or counter-vs-threshold
    comparisons, ``syndrome_bit_updates`` syndrome bit toggles, and
    ``counter_update_touches`` incremental counter adjustments.
    """

    counter_init_adds: int = 0
    argmax_comparisons: int = 0
    syndrome_bit_updates: int = 0
    counter_update_touches: int = 0

    def as_dict(self) -> dict[str, int]:
        return {
            "counter_init_adds": self.counter_init_adds,
            "argmax_comparisons": self.argmax_comparisons,
            "syndrome_bit_updates": self.syndrome_bit_updates,
            "counter_update_touches": self.counter_update_touches,
        }

    def snapshot(self) -> "OpCounts":
        return OpCounts(**self.as_dict())

    def weighted_total(self, v: int, iterations: int) -> float:
        """Bit-cost total: comparisons and counter-building adds operate on
        log2(v)-bit values, everything else is unit cost; ``iterations``
        contributes the one estimate update per iteration."""
        lg = math.log2(v)
        return (
            lg * (self.counter_init_adds + self.argmax_comparisons)
            + iterations
            + self.syndrome_bit_updates
            + self.counter_update_touches
        )


@dataclass
class DecoderState:
    """Mutable working state of one decode, exposed to iteration hooks."""

    H: SparseParityCheck
    syndrome: np.ndarray
    counters: np.ndarray | None
    estimate: np.ndarray
    iterations: int
    flip_log: list[int]
    ops: OpCounts
    syndrome_weight: int


@dataclass(frozen=True)
class BfConfig:
    """Iteration budget and per-iteration flip thresholds for ``bf_decode``."""

    iter_max: int
    thresholds: tuple[int, ...]

    def __post_init__(self):
        if self.iter_max < 0:
            raise ValueError("iter_max must be non-negative")
        if len(self.thresholds) != self.iter_max:
            raise ValueError(
                f"need {self.iter_max} thresholds, got {len(self.thresholds)}"
            )
        if any(b < 1 for b in self.thresholds):
            raise ValueError("thresholds must be at least 1")

    @classmethod
    def constant(cls, iter_max: int, b: int) -> "BfConfig":
        return cls(iter_max, (b,) * iter_max)


@dataclass(frozen=True)
class DecodeOutcome:
    """Result of a decode: the recovered pattern on success, else None."""

    error_estimate: ErrorPattern | None
    iterations_used: int
    flip_log: tuple[int, ...]
    op_counts: OpCounts

    @property
    def success(self) -> bool:
        return self.error_estimate is not None


IterationHook = Callable[[DecoderState], None]


def _compute_counters(H: SparseParityCheck, s: np.ndarray, ops: OpCounts) -> np.ndarray:
    counters = s[H.col_supports].sum(axis=1, dtype=_COUNTER_DTYPE)
    ops.counter_init_adds += H.n * H.v
    return counters


def argmax_scan(
    counters: np.ndarray, rng: np.random.Generator, ops: OpCounts | None = None
) -> tuple[int, int]:
    """Uniformly random index among the maximum-counter positions.

    Semantically a single left-to-right pass that tracks the running
    maximum and the list of positions attaining it, then samples one of
    them; always costs exactly n comparisons.
    """
    n = counters.size
    if n < 1:
        raise ValueError("counter array must be non-empty")
    top = int(counters.max())
    ties = np.flatnonzero(counters == top)
    i_star = int(ties[rng.integers(0, ties.size)])
    if ops is not None:
        ops.argmax_comparisons += n
    return i_star, top


def bf_decode(H: SparseParityCheck, s: Syndrome, cfg: BfConfig) -> DecodeOutcome:
    """Out-of-place bit flipping.

    Within one iteration every flip decision uses the counters computed at
    iteration start; the syndrome is updated per flip but counters are not
    recomputed until the next iteration. Runs while the syndrome is nonzero
    and iterations remain; succeeds iff the final syndrome is zero.
    """
    if s.r != H.r:
        raise ValueError(f"syndrome length {s.r} does not match r={H.r}")
    if any(b > H.v for b in cfg.thresholds):
        raise ValueError(f"threshold exceeds column weight v={H.v}")
    floor = math.ceil(H.v / 2)
    if any(b < floor for b in cfg.thresholds):
        warnings.warn(
            f"threshold below ceil(v/2)={floor} invites oscillation", stacklevel=2
        )

    work = s.bits.copy()
    estimate = np.zeros(H.n, dtype=np.uint8)
    ops = OpCounts()
    flips: list[int] = []
    weight = int(work.sum())
    it = 1
    while weight != 0 and it <= cfg.iter_max:
        counters = _compute_counters(H, work, ops)
        to_flip = np.flatnonzero(counters >= cfg.thresholds[it - 1])
        ops.argmax_comparisons += H.n
        if to_flip.size:
            estimate[to_flip] ^= 1
            touched = H.col_supports[to_flip].ravel()
            np.bitwise_xor.at(work, touched, 1)
            ops.syndrome_bit_updates += touched.size
            flips.extend(int(i) for i in to_flip)
            weight = int(work.sum())
        it += 1

    recovered = _estimate_pattern(estimate) if weight == 0 else None
    return DecodeOutcome(recovered, it - 1, tuple(flips), ops)


def _estimate_pattern(estimate: np.ndarray) -> ErrorPattern:
    return ErrorPattern(estimate.size, np.flatnonzero(estimate).astype(np.int64))


def bfmax_decode_naive(
    H: SparseParityCheck,
    s: Syndrome,
    iter_max: int,
    rng: np.random.Generator,
    *,
    fixed_iterations: bool = False,
    on_iteration: IterationHook | None = None,
) -> DecodeOutcome:
    """Single-flip decoding, recomputing all counters every iteration.

    With ``fixed_iterations`` the loop always runs ``iter_max`` iterations;
    once the syndrome is zero the remaining iterations perform the same
    counter scan and draw from the tie-break stream but discard the flip,
    so the operation profile is independent of when decoding converged.
    """
    if s.r != H.r:
        raise ValueError(f"syndrome length {s.r} does not match r={H.r}")
    if iter_max < 0:
        raise ValueError("iter_max must be non-negative")

    state = DecoderState(
        H=H,
        syndrome=s.bits.copy(),
        counters=None,
        estimate=np.zeros(H.n, dtype=np.uint8),
        iterations=0,
        flip_log=[],
        ops=OpCounts(),
        syndrome_weight=int(s.bits.sum()),
    )
    it = 1
    while it <= iter_max and (state.syndrome_weight != 0 or fixed_iterations):
        state.counters = _compute_counters(H, state.syndrome, state.ops)
        i_star, _ = argmax_scan(state.counters, rng, state.ops)
        if state.syndrome_weight != 0:
            _apply_flip(state, i_star, shadow=False, update_counters=False)
        else:
            _apply_flip(state, i_star, shadow=True, update_counters=False)
        state.iterations = it
        if on_iteration is not None:
            on_iteration(state)
        it += 1

    return _finish(state)


def bfmax_decode_sparse(
    H: SparseParityCheck,
    s: Syndrome,
    iter_max: int,
    rng: np.random.Generator,
    *,
    fixed_iterations: bool = False,
    on_iteration: IterationHook | None = None,
    verify_counters: bool = False,
) -> DecodeOutcome:
    """Single-flip decoding with incremental counter maintenance.

    Counters are computed once up front. After flipping position i, only
    the checks in that column's support change parity; for each such check
    j the counters of every position in row j move by d = -1 if the check
    became satisfied, else d = +1. Produces the same outcome and flip
    history as ``bfmax_decode_naive`` for the same tie-break stream.
    ``verify_counters`` re-derives the counters from the working syndrome
    after every iteration and raises on any divergence (debug aid).
    """
    if s.r != H.r:
        raise ValueError(f"syndrome length {s.r} does not match r={H.r}")
    if iter_max < 0:
        raise ValueError("iter_max must be non-negative")

    state = DecoderState(
        H=H,
        syndrome=s.bits.copy(),
        counters=None,
        estimate=np.zeros(H.n, dtype=np.uint8),
        iterations=0,
        flip_log=[],
        ops=OpCounts(),
        syndrome_weight=int(s.bits.sum()),
    )
    state.counters = _compute_counters(H, state.syndrome, state.ops)
    it = 1
    while it <= iter_max and (state.syndrome_weight != 0 or fixed_iterations):
        i_star, _ = argmax_scan(state.counters, rng, state.ops)
        _apply_flip(state, i_star, shadow=state.syndrome_weight == 0, update_counters=True)
        state.iterations = it
        if verify_counters:
            fresh = state.syndrome[H.col_supports].sum(axis=1, dtype=_COUNTER_DTYPE)
            if not np.array_equal(state.counters, fresh):
                raise AssertionError(f"incremental counters diverged at iteration {it}")
        if on_iteration is not None:
            on_iteration(state)
        it += 1

    return _finish(state)


def _apply_flip(state: DecoderState, i_star: int, *, shadow: bool, update_counters: bool) -> None:
    """Flip position ``i_star``: toggle estimate and syndrome, adjust counters.

    A shadow flip books the identical operation counts without mutating any
    state (used by fixed-iteration mode once the syndrome is exhausted).
    """
    H = state.H
    checks = H.col_supports[i_star]
    state.ops.syndrome_bit_updates += checks.size
    if update_counters:
        if H.is_row_regular:
            touched_size = checks.size * H.w_max
        else:
            touched_size = int((H.row_ptr[checks + 1] - H.row_ptr[checks]).sum())
        state.ops.counter_update_touches += touched_size
    if shadow:
        return

    state.estimate[i_star] ^= 1
    s = state.syndrome
    s[checks] ^= 1
    now_set = s[checks]
    if update_counters:
        d = np.where(now_set == 1, 1, -1).astype(_COUNTER_DTYPE)
        if H.is_row_regular:
            touched = H.row_matrix[checks].ravel()
            deltas = np.repeat(d, H.w_max)
        else:
            segments = [H.row_support(int(j)) for j in checks]
            touched = np.concatenate(segments)
            deltas = np.repeat(d, [seg.size for seg in segments])
        np.add.at(state.counters, touched, deltas)
    state.syndrome_weight += 2 * int(now_set.sum()) - checks.size
    state.flip_log.append(int(i_star))


def _finish(state: DecoderState) -> DecodeOutcome:
    success = state.syndrome_weight == 0
    recovered = _estimate_pattern(state.estimate) if success else None
    return DecodeOutcome(recovered, state.iterations, tuple(state.flip_log), state.ops)


def predicted_op_count(H: SparseParityCheck, iter_max: int) -> float:
    """Expected bit-cost of a sparse single-flip decode.

    n*v*log2(v) for the initial counter computation, plus per iteration:
    n*log2(v) for the maximum search, 1 for the estimate update, v syndrome
    toggles and v*w_avg counter touches.
    """
    if iter_max < 0:
        raise ValueError("iter_max must be non-negative")
    n, v, w_avg = H.n, H.v, H.w_avg
    lg = math.log2(v)
    return n * v * lg + iter_max * (n * lg + 1 + v + v * w_avg)
