"""1-bit phase codebook optimization for a target outgoing direction."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import CapacityError, ParameterError
from .surface import DEFAULT_PHASES_RAD, ArrayGeometry, Codebook, PlaneWave, steering_vector

EXHAUSTIVE_MAX_UNITS = 20


@dataclass(frozen=True)
class BeamObjective:
    """Maximize array gain from incident direction k_i toward k_t."""

    geometry: ArrayGeometry
    k_i: PlaneWave
    k_t: PlaneWave
    theta: tuple[float, float] = DEFAULT_PHASES_RAD

    def steering(self) -> np.ndarray:
        return steering_vector(self.geometry, self.k_t, self.k_i)

    def state_terms(self) -> tuple[np.ndarray, np.ndarray]:
        """Per-unit complex contribution in state 0 and state 1."""
        v = self.steering()
        return v * np.exp(1j * self.theta[0]), v * np.exp(1j * self.theta[1])


def array_gain(codebook: Codebook, objective: BeamObjective) -> float:
    """20 log10 |w^T v| with w_n = exp(j theta_state(n))."""
    if len(codebook) != objective.geometry.n_units:
        raise ParameterError("codebook length must match the geometry")
    t0, t1 = objective.state_terms()
    total = np.where(codebook.states == 0, t0, t1).sum()
    return 20.0 * math.log10(abs(total))


def optimize_greedy(objective: BeamObjective, restarts: int = 8, seed: int = 0) -> Codebook:
    """Coordinate-ascent bit flipping from random starts; best over restarts.

    The returned codebook is a strict local optimum (no single flip
    improves the linear gain) and deterministic for a fixed seed.
    """
    if restarts < 1:
        raise ParameterError("restarts must be >= 1")
    t0, t1 = objective.state_terms()
    n = objective.geometry.n_units
    rng = np.random.default_rng(seed)
    best_states = None
    best_key = None
    for _ in range(restarts):
        start = rng.integers(0, 2, size=n).astype(np.int64)
        states = _kernels.greedy_ascent(t0, t1, start)
        mag = abs(np.where(states == 0, t0, t1).sum())
        code = sum(int(s) << i for i, s in enumerate(states))
        key = (-mag, code)  # max gain, then smallest binary codebook value
        if best_key is None or key < best_key:
            best_key = key
            best_states = states
    return Codebook(best_states, objective.theta)


def optimize_exhaustive(objective: BeamObjective) -> Codebook:
    """Global maximizer of |w^T v| by enumeration; N <= 20."""
    n = objective.geometry.n_units
    if n > EXHAUSTIVE_MAX_UNITS:
        raise CapacityError(f"exhaustive search limited to N <= {EXHAUSTIVE_MAX_UNITS}")
    t0, t1 = objective.state_terms()
    code, _ = _kernels.exhaustive_best(t0, t1)
    states = (code >> np.arange(n)) & 1
    return Codebook(states, objective.theta)
