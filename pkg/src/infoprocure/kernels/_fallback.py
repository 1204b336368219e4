"""Pure-NumPy Monte Carlo backend.

Evaluates exactly the same counter-addressed draws as the compiled
kernel (see ``_philox``), vectorized over replications.  Used when the
compiled extension is unavailable or when INFOPROCURE_BACKEND=python.
"""

from __future__ import annotations

import math

import numpy as np

from ._philox import (
    PURPOSE_DATA,
    PURPOSE_RIVALS,
    normal_from_uniform,
    uniform_block,
)

RULE_ORACLE = 0
RULE_SAMPLE_VARIANCE = 1
RULE_LCB = 2

_ROW_CHUNK = 512  # caps the cumulative-moment working set


def _stats_for_rows(
    key: np.ndarray,
    rows: np.ndarray,
    ns: np.ndarray,
    v_true: float,
    rule_id: int,
    z_alpha: float,
) -> np.ndarray:
    """Verification statistic per (row, grid) cell; ns holds sample counts.

    rows are replication ids; ns is (len(rows), G) of per-cell sample
    counts (garbage allowed where the cell is masked upstream).
    """
    n_rows, n_grid = ns.shape
    stat = np.empty((n_rows, n_grid), dtype=np.float64)
    sqrt_v = math.sqrt(v_true)
    for start in range(0, n_rows, _ROW_CHUNK):
        sl = slice(start, min(start + _ROW_CHUNK, n_rows))
        ns_c = ns[sl]
        nmax = int(ns_c.max())
        u = uniform_block(key, PURPOSE_DATA, rows[sl], nmax)
        x = sqrt_v * normal_from_uniform(u)
        x2 = x * x
        cs1 = np.cumsum(x, axis=1)
        cs2 = np.cumsum(x2, axis=1)
        cs3 = np.cumsum(x2 * x, axis=1)
        cs4 = np.cumsum(x2 * x2, axis=1)
        pick = np.clip(ns_c - 1, 0, nmax - 1)
        nf = ns_c.astype(np.float64)
        s1 = np.take_along_axis(cs1, pick, axis=1)
        s2 = np.take_along_axis(cs2, pick, axis=1)
        s3 = np.take_along_axis(cs3, pick, axis=1)
        s4 = np.take_along_axis(cs4, pick, axis=1)
        mean = s1 / nf
        m2 = np.maximum(s2 / nf - mean * mean, 0.0)
        if rule_id == RULE_SAMPLE_VARIANCE:
            stat[sl] = m2
        else:
            m4 = (
                s4 / nf
                - 4.0 * mean * (s3 / nf)
                + 6.0 * (mean * mean) * (s2 / nf)
                - 3.0 * (mean * mean) * (mean * mean)
            )
            rad = np.maximum(m4 - m2 * m2, 0.0)
            stat[sl] = m2 - z_alpha / np.sqrt(nf) * np.sqrt(rad)
    return stat


def mc_utilities(
    cost: float,
    v_true: float,
    price: float,
    report_grid: np.ndarray,
    m: int,
    beta: float,
    rho: float,
    rule_id: int,
    z_alpha: float,
    c_lo: float,
    c_hi: float,
    v_lo: float,
    v_hi: float,
    reps: int,
    key: np.ndarray,
) -> np.ndarray:
    """Per-replication utilities of a focal seller across a report grid.

    Each replication draws m-1 truthful rivals from the uniform prior
    rectangle, runs the second-score auction for each reported inverse
    quality on the grid (common random numbers: rival draws and the data
    prefix are shared across grid points), applies the verification
    rule to freshly drawn Gaussian data at the focal seller's true
    variance, and records the realized utility: (payment - cost) *
    quantity on pass, -cost * quantity on fail, zero on a loss.
    Returns shape (reps, len(report_grid)).
    """
    if m < 2:
        raise ValueError(f"need at least one rival (m >= 2), got m={m}")
    grid = np.asarray(report_grid, dtype=np.float64)
    if grid.size > 1 and not np.all(np.diff(grid) > 0.0):
        raise ValueError("report grid must be strictly increasing")
    n_grid = grid.size
    out = np.zeros((reps, n_grid), dtype=np.float64)
    if n_grid == 0 or reps == 0:
        return out

    n_u = 2 * (m - 1)
    u = uniform_block(key, PURPOSE_RIVALS, np.arange(reps, dtype=np.uint64), n_u)
    rival_cost = c_lo + (c_hi - c_lo) * u[:, 0::2]
    rival_v = v_lo + (v_hi - v_lo) * u[:, 1::2]
    smin = (rival_cost * rival_v).min(axis=1)

    focal_scores = price * grid
    win = focal_scores[None, :] <= smin[:, None]  # focal holds the lowest index
    if rho == 1.0:
        n_real = math.sqrt(beta) * grid[None, :] / np.sqrt(smin)[:, None]
    else:
        n_real = (beta * rho / smin[:, None]) ** (1.0 / (rho + 1.0)) * grid[None, :]
    u_pass = (smin[:, None] / grid[None, :] - cost) * n_real
    u_fail = -cost * n_real

    if rule_id == RULE_ORACLE:
        accept = (v_true <= grid)[None, :]
        out[:] = np.where(win, np.where(accept, u_pass, u_fail), 0.0)
        return out

    rows = np.nonzero(win.any(axis=1))[0]
    if rows.size == 0:
        return out
    ns = np.maximum(np.floor(n_real[rows]), 1.0).astype(np.int64)
    ns = np.where(win[rows], ns, 1)
    stat = _stats_for_rows(key, rows.astype(np.uint64), ns, v_true, rule_id, z_alpha)
    accept = stat <= grid[None, :]
    out[rows] = np.where(win[rows], np.where(accept, u_pass[rows], u_fail[rows]), 0.0)
    return out


def mc_failure_count(
    v_true: float,
    v_reported: float,
    n: int,
    rule_id: int,
    z_alpha: float,
    reps: int,
    key: np.ndarray,
) -> int:
    """Number of replications whose verification fails on fresh data."""
    if n < 2:
        raise ValueError(f"need at least 2 samples, got n={n}")
    if rule_id == RULE_ORACLE:
        return reps if v_true > v_reported else 0
    rows = np.arange(reps, dtype=np.uint64)
    ns = np.full((reps, 1), n, dtype=np.int64)
    stat = _stats_for_rows(key, rows, ns, v_true, rule_id, z_alpha)
    return int(np.count_nonzero(stat[:, 0] > v_reported))
