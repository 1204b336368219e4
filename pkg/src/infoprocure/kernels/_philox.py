"""Counter-based randomness shared by the Monte Carlo backends.

Randomness is addressed, not streamed: the value consumed by replication
``rep`` for purpose ``purpose`` at draw index ``t`` is a fixed function
of (key, rep, purpose, t), where the key is derived from an
``RngStream`` path.  Both the compiled kernel and the NumPy fallback
evaluate exactly the same Philox-4x64-10 blocks at exactly the same
counters, so replications can be evaluated in any order, in parallel,
or re-read with a shared prefix (common random numbers across a report
grid) without changing results.

The uint64 -> float transforms are pinned here:
  uniform:  ((x >> 11) + 0.5) * 2**-53, strictly inside (0, 1)
  normal:   inverse normal CDF (same rational approximation as
            ``infoprocure.verification.normal_quantile``) of the uniform
"""

from __future__ import annotations

import numpy as np

from ..verification import _PPND_A, _PPND_B, _PPND_C, _PPND_D, _PPND_E, _PPND_F

PHILOX_M0 = np.uint64(0xD2E7470EE14C6C93)
PHILOX_M1 = np.uint64(0xCA5A826395121157)
PHILOX_W0 = np.uint64(0x9E3779B97F4A7C15)
PHILOX_W1 = np.uint64(0xBB67AE8584CAA73B)

_MASK32 = np.uint64(0xFFFFFFFF)
_S32 = np.uint64(32)
_INV53 = 1.0 / 9007199254740992.0  # 2**-53

# Draw purposes (counter word 2); shared with the compiled kernel.
PURPOSE_RIVALS = 0
PURPOSE_DATA = 1


def _mulhilo(a: np.uint64, b: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """64x64 -> (high, low) product words via 32-bit limbs."""
    lo = a * b
    ah, al = a >> _S32, a & _MASK32
    bh, bl = b >> _S32, b & _MASK32
    t = al * bl
    t = ah * bl + (t >> _S32)
    w1 = t & _MASK32
    w2 = t >> _S32
    k = (al * bh + w1) >> _S32
    hi = ah * bh + w2 + k
    return hi, lo


def philox4x64(counters: np.ndarray, key: np.ndarray) -> np.ndarray:
    """Philox-4x64-10 block function, vectorized over rows of ``counters``.

    counters: uint64 array of shape (n, 4); key: two uint64 words.
    Returns a (n, 4) uint64 array.  Matches ``numpy.random.Philox``
    block for block (numpy emits the block at counter+1 first).
    """
    with np.errstate(over="ignore"):
        x0 = counters[:, 0].copy()
        x1 = counters[:, 1].copy()
        x2 = counters[:, 2].copy()
        x3 = counters[:, 3].copy()
        k0 = np.uint64(key[0])
        k1 = np.uint64(key[1])
        for _ in range(10):
            hi0, lo0 = _mulhilo(PHILOX_M0, x0)
            hi1, lo1 = _mulhilo(PHILOX_M1, x2)
            x0 = hi1 ^ x1 ^ k0
            x1 = lo1
            x2 = hi0 ^ x3 ^ k1
            x3 = lo0
            k0 = k0 + PHILOX_W0
            k1 = k1 + PHILOX_W1
    return np.stack([x0, x1, x2, x3], axis=1)


def bits_to_uniform(bits: np.ndarray) -> np.ndarray:
    """Map uint64 words to float64 uniforms strictly inside (0, 1)."""
    return ((bits >> np.uint64(11)).astype(np.float64) + 0.5) * _INV53


def _polyvec(c: tuple[float, ...], x: np.ndarray) -> np.ndarray:
    r = np.full_like(x, c[7])
    for i in range(6, -1, -1):
        r = r * x + c[i]
    return r


def normal_from_uniform(u: np.ndarray) -> np.ndarray:
    """Vectorized inverse normal CDF; same branches and coefficients as the scalar."""
    u = np.asarray(u, dtype=np.float64)
    q = u - 0.5
    central = np.abs(q) <= 0.425
    r_c = 0.180625 - q * q
    val_c = q * _polyvec(_PPND_A, r_c) / _polyvec(_PPND_B, r_c)

    r_t = np.where(q < 0.0, u, 1.0 - u)
    # guard the central entries so log stays in-domain; results are discarded
    r_t = np.sqrt(-np.log(np.where(central, 0.5, r_t)))
    near = r_t <= 5.0
    val_n = _polyvec(_PPND_C, r_t - 1.6) / _polyvec(_PPND_D, r_t - 1.6)
    val_f = _polyvec(_PPND_E, r_t - 5.0) / _polyvec(_PPND_F, r_t - 5.0)
    val_t = np.where(near, val_n, val_f)
    val_t = np.where(q < 0.0, -val_t, val_t)
    return np.where(central, val_c, val_t)


def uniform_block(key: np.ndarray, purpose: int, rep_ids: np.ndarray, n_per_rep: int) -> np.ndarray:
    """Uniforms for draws t = 0..n_per_rep-1 of each replication in rep_ids.

    Draw t of replication r reads lane t%4 of the Philox block at
    counter (t//4, r, purpose, 0).  Returns shape (len(rep_ids), n_per_rep).
    """
    rep_ids = np.asarray(rep_ids, dtype=np.uint64)
    n_blocks = (n_per_rep + 3) // 4
    n_rows = rep_ids.size
    counters = np.zeros((n_rows * n_blocks, 4), dtype=np.uint64)
    counters[:, 0] = np.tile(np.arange(n_blocks, dtype=np.uint64), n_rows)
    counters[:, 1] = np.repeat(rep_ids, n_blocks)
    counters[:, 2] = np.uint64(purpose)
    bits = philox4x64(counters, key).reshape(n_rows, n_blocks * 4)
    return bits_to_uniform(bits[:, :n_per_rep])
