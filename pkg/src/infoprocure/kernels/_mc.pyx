# cython: boundscheck=False, wraparound=False, cdivision=True
# cython: language_level=3
"""Compiled Monte Carlo kernels.

Twin of ``_fallback``: same counter-addressed Philox-4x64-10 draws, same
uint64 -> uniform -> normal transforms, same accumulation order, so both
backends agree to floating-point noise.  The hot loops run without the
GIL, so the experiment runner can spread independent work units over
threads.
"""

import numpy as np

from libc.math cimport floor, log, pow, sqrt

ctypedef unsigned long long u64
cdef extern from *:
    ctypedef unsigned long long u128 "unsigned __int128"

cdef u64 PHILOX_M0 = 0xD2E7470EE14C6C93
cdef u64 PHILOX_M1 = 0xCA5A826395121157
cdef u64 PHILOX_W0 = 0x9E3779B97F4A7C15
cdef u64 PHILOX_W1 = 0xBB67AE8584CAA73B

RULE_ORACLE = 0
RULE_SAMPLE_VARIANCE = 1
RULE_LCB = 2

cdef int C_RULE_ORACLE = 0
cdef int C_RULE_SAMPLE_VARIANCE = 1
cdef int C_RULE_LCB = 2

cdef u64 PURPOSE_RIVALS = 0
cdef u64 PURPOSE_DATA = 1

cdef double INV53 = 1.0 / 9007199254740992.0  # 2**-53


cdef inline void _philox_block(u64 c0, u64 c1, u64 c2, u64 c3,
                               u64 k0, u64 k1, u64* out) noexcept nogil:
    cdef u64 x0 = c0, x1 = c1, x2 = c2, x3 = c3
    cdef u64 hi0, lo0, hi1, lo1
    cdef int r
    for r in range(10):
        lo0 = PHILOX_M0 * x0
        hi0 = <u64>(((<u128>PHILOX_M0) * x0) >> 64)
        lo1 = PHILOX_M1 * x2
        hi1 = <u64>(((<u128>PHILOX_M1) * x2) >> 64)
        x0 = hi1 ^ x1 ^ k0
        x1 = lo1
        x2 = hi0 ^ x3 ^ k1
        x3 = lo0
        k0 = k0 + PHILOX_W0
        k1 = k1 + PHILOX_W1
    out[0] = x0
    out[1] = x1
    out[2] = x2
    out[3] = x3


cdef struct DrawState:
    u64 k0
    u64 k1
    u64 rep
    u64 purpose
    long block      # block index currently buffered, -1 if none
    u64 buf[4]


cdef inline void _ds_init(DrawState* ds, u64 k0, u64 k1, u64 rep, u64 purpose) noexcept nogil:
    ds.k0 = k0
    ds.k1 = k1
    ds.rep = rep
    ds.purpose = purpose
    ds.block = -1


cdef inline double _ds_uniform(DrawState* ds, long t) noexcept nogil:
    """Uniform in (0,1) for draw index t: lane t%4 of block t//4."""
    cdef long blk = t >> 2
    if blk != ds.block:
        _philox_block(<u64>blk, ds.rep, ds.purpose, 0, ds.k0, ds.k1, ds.buf)
        ds.block = blk
    return (<double>(ds.buf[t & 3] >> 11) + 0.5) * INV53


# Rational minimax coefficients for the inverse normal CDF; identical
# literals to infoprocure.verification.
cdef inline double _ppnd16(double p) noexcept nogil:
    cdef double q = p - 0.5
    cdef double r, num, den, val
    if q <= 0.425 and q >= -0.425:
        r = 0.180625 - q * q
        num = 2.5090809287301226727e3
        num = num * r + 3.3430575583588128105e4
        num = num * r + 6.7265770927008700853e4
        num = num * r + 4.5921953931549871457e4
        num = num * r + 1.3731693765509461125e4
        num = num * r + 1.9715909503065514427e3
        num = num * r + 1.3314166789178437745e2
        num = num * r + 3.3871328727963666080e0
        den = 5.2264952788528545610e3
        den = den * r + 2.8729085735721942674e4
        den = den * r + 3.9307895800092710610e4
        den = den * r + 2.1213794301586595867e4
        den = den * r + 5.3941960214247511077e3
        den = den * r + 6.8718700749205790830e2
        den = den * r + 4.2313330701600911252e1
        den = den * r + 1.0
        return q * num / den
    if q < 0.0:
        r = p
    else:
        r = 1.0 - p
    r = sqrt(-log(r))
    if r <= 5.0:
        r = r - 1.6
        num = 7.74545014278341407640e-4
        num = num * r + 2.27238449892691845833e-2
        num = num * r + 2.41780725177450611770e-1
        num = num * r + 1.27045825245236838258e0
        num = num * r + 3.64784832476320460504e0
        num = num * r + 5.76949722146069140550e0
        num = num * r + 4.63033784615654529590e0
        num = num * r + 1.42343711074968357734e0
        den = 1.05075007164441684324e-9
        den = den * r + 5.47593808499534494600e-4
        den = den * r + 1.51986665636164571966e-2
        den = den * r + 1.48103976427480074590e-1
        den = den * r + 6.89767334985100004550e-1
        den = den * r + 1.67638483018380384940e0
        den = den * r + 2.05319162663775882187e0
        den = den * r + 1.0
        val = num / den
    else:
        r = r - 5.0
        num = 2.01033439929228813265e-7
        num = num * r + 2.71155556874348757815e-5
        num = num * r + 1.24266094738807843860e-3
        num = num * r + 2.65321895265761230930e-2
        num = num * r + 2.96560571828504891230e-1
        num = num * r + 1.78482653991729133580e0
        num = num * r + 5.46378491116411436990e0
        num = num * r + 6.65790464350110377720e0
        den = 2.04426310338993978564e-15
        den = den * r + 1.42151175831644588870e-7
        den = den * r + 1.84631831751005468180e-5
        den = den * r + 7.86869131145613259100e-4
        den = den * r + 1.48753612908506148525e-2
        den = den * r + 1.36929880922735805310e-1
        den = den * r + 5.99832206555887937690e-1
        den = den * r + 1.0
        val = num / den
    if q < 0.0:
        return -val
    return val


cdef inline double _verification_stat(double s1, double s2, double s3, double s4,
                                      double nf, int rule_id, double z_alpha) noexcept nogil:
    cdef double mean = s1 / nf
    cdef double m2 = s2 / nf - mean * mean
    cdef double m4, rad
    if m2 < 0.0:
        m2 = 0.0
    if rule_id == C_RULE_SAMPLE_VARIANCE:
        return m2
    m4 = (s4 / nf - 4.0 * mean * (s3 / nf)
          + 6.0 * (mean * mean) * (s2 / nf)
          - 3.0 * (mean * mean) * (mean * mean))
    rad = m4 - m2 * m2
    if rad < 0.0:
        rad = 0.0
    return m2 - z_alpha / sqrt(nf) * sqrt(rad)


def mc_utilities(double cost, double v_true, double price, object report_grid,
                 int m, double beta, double rho, int rule_id, double z_alpha,
                 double c_lo, double c_hi, double v_lo, double v_hi,
                 long reps, object key):
    """Per-replication utilities of a focal seller across a report grid.

    Same contract as ``_fallback.mc_utilities``; see there for the
    semantics.  Returns shape (reps, len(report_grid)).
    """
    if m < 2:
        raise ValueError(f"need at least one rival (m >= 2), got m={m}")
    grid_arr = np.ascontiguousarray(report_grid, dtype=np.float64)
    if grid_arr.size > 1 and not np.all(np.diff(grid_arr) > 0.0):
        # the winning prefix and shared data prefix both assume ascending reports
        raise ValueError("report grid must be strictly increasing")
    key_arr = np.ascontiguousarray(key, dtype=np.uint64)
    out_arr = np.zeros((reps, grid_arr.size), dtype=np.float64)
    cdef double[::1] grid = grid_arr
    cdef double[:, ::1] out = out_arr
    cdef long n_grid = grid_arr.size
    if n_grid == 0 or reps == 0:
        return out_arr
    cdef u64 k0 = key_arr[0], k1 = key_arr[1]

    cdef double dc = c_hi - c_lo
    cdef double dv = v_hi - v_lo
    cdef double sqrt_beta = sqrt(beta)
    cdef double sqrt_v = sqrt(v_true)
    cdef double exponent = 1.0 / (rho + 1.0)
    cdef int n_rivals = m - 1
    cdef bint oracle = rule_id == C_RULE_ORACLE

    cdef DrawState ds
    cdef long r, t, g, g_win
    cdef int j
    cdef double uc, uv, s, smin, rg, n_real, u_pass, u_fail, stat, x, x2
    cdef double s1, s2, s3, s4
    cdef long ns, t_done

    with nogil:
        for r in range(reps):
            # rivals report truthfully; the focal agent needs the lowest
            # score among them
            _ds_init(&ds, k0, k1, <u64>r, PURPOSE_RIVALS)
            smin = 0.0
            for j in range(n_rivals):
                uc = _ds_uniform(&ds, 2 * j)
                uv = _ds_uniform(&ds, 2 * j + 1)
                s = (c_lo + dc * uc) * (v_lo + dv * uv)
                if j == 0 or s < smin:
                    smin = s

            # winning grid points are a prefix (grid ascending, focal
            # holds the lowest agent index so ties go to the focal)
            g_win = 0
            while g_win < n_grid and price * grid[g_win] <= smin:
                g_win += 1
            if g_win == 0:
                continue

            if oracle:
                for g in range(g_win):
                    rg = grid[g]
                    if rho == 1.0:
                        n_real = sqrt_beta * rg / sqrt(smin)
                    else:
                        n_real = pow(beta * rho / smin, exponent) * rg
                    u_pass = (smin / rg - cost) * n_real
                    u_fail = -cost * n_real
                    out[r, g] = u_pass if v_true <= rg else u_fail
                continue

            _ds_init(&ds, k0, k1, <u64>r, PURPOSE_DATA)
            s1 = 0.0
            s2 = 0.0
            s3 = 0.0
            s4 = 0.0
            t_done = 0
            for g in range(g_win):
                rg = grid[g]
                if rho == 1.0:
                    n_real = sqrt_beta * rg / sqrt(smin)
                else:
                    n_real = pow(beta * rho / smin, exponent) * rg
                ns = <long>floor(n_real)
                if ns < 1:
                    ns = 1
                # extend the shared data prefix (common random numbers)
                while t_done < ns:
                    x = sqrt_v * _ppnd16(_ds_uniform(&ds, t_done))
                    x2 = x * x
                    s1 += x
                    s2 += x2
                    s3 += x2 * x
                    s4 += x2 * x2
                    t_done += 1
                stat = _verification_stat(s1, s2, s3, s4, <double>ns, rule_id, z_alpha)
                u_pass = (smin / rg - cost) * n_real
                u_fail = -cost * n_real
                out[r, g] = u_pass if stat <= rg else u_fail
    return out_arr


def mc_failure_count(double v_true, double v_reported, long n, int rule_id,
                     double z_alpha, long reps, object key):
    """Number of replications whose verification fails on fresh data."""
    if n < 2:
        raise ValueError(f"need at least 2 samples, got n={n}")
    if rule_id == C_RULE_ORACLE:
        return reps if v_true > v_reported else 0
    key_arr = np.ascontiguousarray(key, dtype=np.uint64)
    cdef u64 k0 = key_arr[0], k1 = key_arr[1]
    cdef double sqrt_v = sqrt(v_true)
    cdef DrawState ds
    cdef long r, t, failures = 0
    cdef double x, x2, s1, s2, s3, s4, stat
    with nogil:
        for r in range(reps):
            _ds_init(&ds, k0, k1, <u64>r, PURPOSE_DATA)
            s1 = 0.0
            s2 = 0.0
            s3 = 0.0
            s4 = 0.0
            for t in range(n):
                x = sqrt_v * _ppnd16(_ds_uniform(&ds, t))
                x2 = x * x
                s1 += x
                s2 += x2
                s3 += x2 * x
                s4 += x2 * x2
            stat = _verification_stat(s1, s2, s3, s4, <double>n, rule_id, z_alpha)
            if stat > v_reported:
                failures += 1
    return failures
