"""Hot numeric kernels: numba-jitted with a pure-numpy fallback.

Selection: numba is used when importable unless the environment variable
``MSA_NUMBA`` is set to ``0``/``false``/``off``.  Both paths implement
identical semantics; ``benchmarks/bench_kernels.py`` compares them.
"""

from __future__ import annotations

import os

import numpy as np


def _numba_enabled() -> bool:
    flag = os.environ.get("MSA_NUMBA", "1").strip().lower()
    if flag in ("0", "false", "off"):
        return False
    try:
        import numba  # noqa: F401
    except ImportError:
        return False
    return True


USE_NUMBA = _numba_enabled()


def using_numba() -> bool:
    return USE_NUMBA


# ---------------------------------------------------------------------------
# direct-sum pattern evaluation: power(angle) = |sum_n w_n exp(-j k(angle).r_n)|^2
# ---------------------------------------------------------------------------

def _pattern_numpy(k_sums: np.ndarray, positions: np.ndarray, weights: np.ndarray) -> np.ndarray:
    phases = k_sums @ positions.T  # (n_angles, N)
    field = np.exp(-1j * phases) @ weights
    return np.abs(field) ** 2


def _greedy_numpy(t0: np.ndarray, t1: np.ndarray, states: np.ndarray) -> np.ndarray:
    """Steepest-ascent single-bit flips until no flip improves |sum|."""
    states = states.copy()
    terms = np.where(states == 0, t0, t1)
    total = terms.sum()
    while True:
        alt = np.where(states == 0, t1, t0)
        candidates = np.abs(total - terms + alt)
        best = int(np.argmax(candidates))
        if candidates[best] <= np.abs(total) * (1.0 + 1e-12):
            return states
        states[best] ^= 1
        total = total - terms[best] + alt[best]
        terms[best] = alt[best]


def _exhaustive_numpy(t0: np.ndarray, t1: np.ndarray) -> tuple[int, float]:
    """Gray-code walk over all 2^N codebooks; returns (best code, best |sum|)."""
    n = len(t0)
    delta = t1 - t0
    total = t0.sum()
    states = np.zeros(n, dtype=np.int64)
    best_code = 0
    best_mag = abs(total)
    code = 0
    for i in range(1, 1 << n):
        bit = (i & -i).bit_length() - 1  # Gray-code toggle position
        if states[bit] == 0:
            total += delta[bit]
            states[bit] = 1
        else:
            total -= delta[bit]
            states[bit] = 0
        code ^= 1 << bit
        mag = abs(total)
        if mag > best_mag or (mag == best_mag and code < best_code):
            best_mag = mag
            best_code = code
    return best_code, float(best_mag)


if USE_NUMBA:
    from numba import njit

    @njit(cache=True)
    def _pattern_numba(k_sums, positions, weights):  # pragma: no cover - jitted
        n_angles = k_sums.shape[0]
        n = positions.shape[0]
        out = np.empty(n_angles)
        for a in range(n_angles):
            acc = 0.0 + 0.0j
            for i in range(n):
                ph = (
                    k_sums[a, 0] * positions[i, 0]
                    + k_sums[a, 1] * positions[i, 1]
                    + k_sums[a, 2] * positions[i, 2]
                )
                acc += weights[i] * (np.cos(ph) - 1j * np.sin(ph))
            out[a] = acc.real * acc.real + acc.imag * acc.imag
        return out

    @njit(cache=True)
    def _greedy_numba(t0, t1, states):  # pragma: no cover - jitted
        states = states.copy()
        n = len(states)
        total = 0.0 + 0.0j
        for i in range(n):
            total += t0[i] if states[i] == 0 else t1[i]
        while True:
            best = -1
            best_mag = abs(total) * (1.0 + 1e-12)
            for i in range(n):
                cur = t0[i] if states[i] == 0 else t1[i]
                alt = t1[i] if states[i] == 0 else t0[i]
                mag = abs(total - cur + alt)
                if mag > best_mag:
                    best_mag = mag
                    best = i
            if best < 0:
                return states
            cur = t0[best] if states[best] == 0 else t1[best]
            alt = t1[best] if states[best] == 0 else t0[best]
            total = total - cur + alt
            states[best] ^= 1

    @njit(cache=True)
    def _exhaustive_numba(t0, t1):  # pragma: no cover - jitted
        n = len(t0)
        delta = t1 - t0
        total = 0.0 + 0.0j
        for i in range(n):
            total += t0[i]
        states = np.zeros(n, dtype=np.int64)
        best_code = 0
        best_mag = abs(total)
        code = 0
        for i in range(1, 1 << n):
            bit = 0
            x = i
            while x & 1 == 0:
                x >>= 1
                bit += 1
            if states[bit] == 0:
                total += delta[bit]
                states[bit] = 1
            else:
                total -= delta[bit]
                states[bit] = 0
            code ^= 1 << bit
            mag = abs(total)
            if mag > best_mag or (mag == best_mag and code < best_code):
                best_mag = mag
                best_code = code
        return best_code, best_mag


def pattern_direct_sum(k_sums: np.ndarray, positions: np.ndarray, weights: np.ndarray) -> np.ndarray:
    """|sum_n w_n exp(-j k_sums[a].r_n)|^2 for every row of ``k_sums``."""
    k_sums = np.ascontiguousarray(k_sums, dtype=np.float64)
    positions = np.ascontiguousarray(positions, dtype=np.float64)
    weights = np.ascontiguousarray(weights, dtype=np.complex128)
    if USE_NUMBA:
        return _pattern_numba(k_sums, positions, weights)
    return _pattern_numpy(k_sums, positions, weights)


def greedy_ascent(t0: np.ndarray, t1: np.ndarray, states: np.ndarray) -> np.ndarray:
    """Coordinate-ascent bit flips maximizing |sum of per-unit terms|.

    ``t0``/``t1`` are each unit's complex contribution in state 0/1.  The
    returned state vector is a strict local optimum: no single flip improves.
    """
    t0 = np.ascontiguousarray(t0, dtype=np.complex128)
    t1 = np.ascontiguousarray(t1, dtype=np.complex128)
    states = np.ascontiguousarray(states, dtype=np.int64)
    if USE_NUMBA:
        return _greedy_numba(t0, t1, states)
    return _greedy_numpy(t0, t1, states)


def exhaustive_best(t0: np.ndarray, t1: np.ndarray) -> tuple[int, float]:
    """Global maximizer of |sum| over all 2^N state assignments.

    Returns ``(code, magnitude)`` where bit n of ``code`` is unit n's state.
    Ties keep the smallest binary code (the walk only replaces on strict
    improvement and visits codes in Gray order starting from 0).
    """
    t0 = np.ascontiguousarray(t0, dtype=np.complex128)
    t1 = np.ascontiguousarray(t1, dtype=np.complex128)
    if USE_NUMBA:
        code, mag = _exhaustive_numba(t0, t1)
        return int(code), float(mag)
    return _exhaustive_numpy(t0, t1)
