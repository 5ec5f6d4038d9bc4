"""Pure numpy versions of the compiled kernels, with identical semantics."""

from __future__ import annotations

import numpy as np

CHUNK = 8192


def maxplus_dp(gain: np.ndarray) -> tuple[float, np.ndarray]:
    gain = np.ascontiguousarray(gain, dtype=float)
    n, G = gain.shape
    c = np.arange(G)
    lag = c[:, None] - c[None, :]  # lag[c, k] = c - k
    valid = lag >= 0
    lag = np.where(valid, lag, 0)
    nxt = np.zeros(G)
    choice = np.empty((n, G), dtype=np.int64)
    for i in range(n - 1, -1, -1):
        table = np.where(valid, gain[i][None, :] + nxt[lag], -np.inf)
        k = np.argmax(table, axis=1)  # first maximum, as in the compiled loop
        choice[i] = k
        nxt = table[c, k]
    units = np.empty(n, dtype=np.int64)
    rem = G - 1
    for i in range(n):
        units[i] = choice[i, rem]
        rem -= units[i]
    return float(nxt[G - 1]), units


def csf_expectation(kind: int, R: float, alpha: float, grid: np.ndarray, samples: np.ndarray) -> np.ndarray:
    from .csf import ContestSuccessFunction

    if kind not in (1, 2):
        raise ValueError("kind must be 1 (power) or 2 (logit)")
    csf = ContestSuccessFunction("power" if kind == 1 else "logit", alpha, R)
    grid = np.asarray(grid, dtype=float)
    samples = np.asarray(samples, dtype=float)
    n, m = samples.shape
    out = np.zeros((n, grid.shape[0]))
    for i in range(n):
        for s in range(0, m, CHUNK):
            za, _ = csf.evaluate(grid[:, None], samples[i, None, s : s + CHUNK])
            out[i] += za.sum(axis=1)
    return out / m
