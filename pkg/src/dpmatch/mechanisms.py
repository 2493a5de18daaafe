"""Multidimensional AboveThreshold and a capped sparse vector technique."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .noise import NoiseSource

ABOVE, BELOW, STOPPED, ABORT = "above", "below", "stopped", "abort"


@dataclass
class MatState:
    noisy_thresholds: np.ndarray
    stopped: np.ndarray
    delta: float
    eps: float
    src: NoiseSource

    @property
    def query_scale(self) -> float:
        return 4.0 * self.delta / self.eps


def mat_new(thresholds: Sequence[float], delta: float, eps: float, src: NoiseSource) -> MatState:
    """Noisy thresholds ``T_j + Lap(2 delta / eps)``, one per coordinate."""
    if not eps > 0 or not delta > 0:
        raise ValueError("MAT needs positive delta and epsilon")
    t = np.asarray(thresholds, dtype=np.float64)
    noisy = t + src.laplace_array(2.0 * delta / eps, t.size)
    return MatState(noisy, np.zeros(t.size, dtype=bool), float(delta), float(eps), src)


def mat_query(state: MatState, j: int, value: float) -> str:
    if not 0 <= j < state.stopped.size:
        raise IndexError(f"coordinate {j} outside dimension {state.stopped.size}")
    if state.stopped[j]:
        return STOPPED
    if value + state.src.laplace(state.query_scale) >= state.noisy_thresholds[j]:
        state.stopped[j] = True
        return ABOVE
    return BELOW


def mat_sweep(state: MatState, values: np.ndarray) -> np.ndarray:
    """Query every live coordinate at once.

    One fresh draw is taken per coordinate (stopped ones included, and then
    ignored) so a coordinate's noise depends on its index, not on which others
    are still live. Returns the coordinates that crossed in this sweep.
    """
    nu = state.src.laplace_array(state.query_scale, state.stopped.size)
    hit = (~state.stopped) & (np.asarray(values, dtype=np.float64) + nu >= state.noisy_thresholds)
    state.stopped |= hit
    return np.flatnonzero(hit)


@dataclass
class SvtState:
    eps1: float
    eps2: float
    rho: float
    c: int
    delta: float
    src: NoiseSource
    count: int = 0
    history: list[str] = field(default_factory=list)

    @property
    def aborted(self) -> bool:
        return self.count >= self.c


def svt_new(eps: float, delta: float, c: int, src: NoiseSource) -> SvtState:
    """SVT allowing ``c`` above answers. The threshold noise is drawn once."""
    if not eps > 0 or not delta > 0:
        raise ValueError("SVT needs positive epsilon and sensitivity")
    if c < 1:
        raise ValueError("SVT cap c must be at least 1")
    e1 = e2 = eps / 2.0
    rho = src.laplace(delta / e1)
    return SvtState(e1, e2, rho, int(c), float(delta), src)


def svt_process(state: SvtState, f_val: float, tau: float) -> str:
    if state.aborted:
        out = ABORT
    elif f_val + state.src.laplace(2.0 * state.c * state.delta / state.eps2) >= tau + state.rho:
        state.count += 1
        out = ABOVE
    else:
        out = BELOW
    state.history.append(out)
    return out
