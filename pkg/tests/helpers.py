"""Shared independent oracles for the test suite.

Everything here is deliberately naive: dense matrices, exhaustive
enumeration, Fractions. These paths must stay independent of the package's
sparse/log-domain implementations they are used to check.
"""

from __future__ import annotations

import itertools
from fractions import Fraction

import numpy as np

from bfkit.codes import ErrorPattern, SparseParityCheck


def dense_matrix(H: SparseParityCheck) -> np.ndarray:
    D = np.zeros((H.r, H.n), dtype=np.uint8)
    for i in range(H.n):
        D[H.col_supports[i], i] = 1
    return D


def dense_syndrome(D: np.ndarray, e_dense: np.ndarray) -> np.ndarray:
    return (D @ e_dense) % 2


def toy_code_from_columns(cols, r) -> SparseParityCheck:
    return SparseParityCheck.from_col_supports(np.asarray(cols), r)


def bf_decode_dense_reference(D: np.ndarray, s_bits: np.ndarray, thresholds, iter_max):
    """Dense-matrix out-of-place bit flipping, written from the definition.

    Returns (success, estimate_dense, flip_log). Counters come from a full
    matrix product each iteration; flips use the iteration-start counters.
    """
    r, n = D.shape
    s = s_bits.astype(np.int64).copy()
    est = np.zeros(n, dtype=np.uint8)
    flips = []
    it = 1
    while s.any() and it <= iter_max:
        counters = (D * s[:, None]).sum(axis=0)
        chosen = [i for i in range(n) if counters[i] >= thresholds[it - 1]]
        for i in chosen:
            est[i] ^= 1
            s = (s + D[:, i]) % 2
            flips.append(i)
        it += 1
    return not s.any(), est, flips


def enumerate_rho(n: int, w: int, u: int) -> tuple[Fraction | None, Fraction]:
    """Unsatisfied-check probabilities by exhaustive placement enumeration.

    Fix position 0 inside a weight-w check row. For rho1, errors of weight
    u include position 0; for rho0 they avoid it. A check is unsatisfied
    when it meets an odd number of errors.
    """
    rest = range(1, n)
    rows = list(itertools.combinations(rest, w - 1))  # row support minus position 0

    rho1 = None
    if u >= 1:
        hits = total = 0
        for err_rest in itertools.combinations(rest, u - 1):
            err = set(err_rest) | {0}
            for row_rest in rows:
                overlap = len(err & (set(row_rest) | {0}))
                hits += overlap % 2
                total += 1
        rho1 = Fraction(hits, total)

    hits = total = 0
    for err_tuple in itertools.combinations(rest, u):
        err = set(err_tuple)
        for row_rest in rows:
            overlap = len(err & set(row_rest))  # position 0 is not an error
            hits += overlap % 2
            total += 1
    rho0 = Fraction(hits, total)
    return rho1, rho0


def enumerate_binom_pmf(v: int, p: Fraction) -> list[Fraction]:
    """Pmf of a sum of v Bernoulli(p) variables by full 2^v enumeration."""
    out = [Fraction(0)] * (v + 1)
    for bits in itertools.product((0, 1), repeat=v):
        prob = Fraction(1)
        for b in bits:
            prob *= p if b else (1 - p)
        out[sum(bits)] += prob
    return out


def recompute_counters(H: SparseParityCheck, s_bits: np.ndarray) -> np.ndarray:
    """Definitional counters: unsatisfied checks touching each position."""
    return s_bits[H.col_supports].sum(axis=1, dtype=np.int64)


def all_weight_patterns(n: int, t: int):
    for sup in itertools.combinations(range(n), t):
        yield ErrorPattern.from_support(n, sup)
