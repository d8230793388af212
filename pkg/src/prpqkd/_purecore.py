"""Pure-Python/numpy implementation of the numerical kernels.

This is the fallback for :mod:`prpqkd._core` and must stay algorithmically
identical to it: same quadrature rule and refinement order, same random stream
layout, same floating-point expressions.

Random stream layout (per trial index ``i``, 64-bit seed ``s``)::

    key     = (s & 0xffffffff, s >> 32)
    block 0 = philox4x32_10((i & 0xffffffff, i >> 32, 0, 0), key)
              words 0,1 -> u1, words 2,3 -> u2    (Box-Muller pair)
    block 1 = philox4x32_10((i & 0xffffffff, i >> 32, 1, 0), key)
              words 0,1 -> u3 (random phase)
              word 2: bits 0-1 Alice's phase index, bit 2 Eve's basis, bit 3 fair coin

``u = ((a >> 5) * 2**26 + (b >> 6)) / 2**53`` is in [0, 1), and the quadrature
sample is ``mean + (kappa/2) * sqrt(-2 log(1 - u1)) * cos(2 pi u2)``.
"""

from __future__ import annotations

import math

import numpy as np

HALF_PI = 1.5707963267948966
TWO_PI = 6.283185307179586
SQRT2 = 1.4142135623730951
# sqrt(2/pi)
SQRT_2_OVER_PI = 0.7978845608028654

PHILOX_M0 = 0xD2511F53
PHILOX_M1 = 0xCD9E8D57
PHILOX_W0 = 0x9E3779B9
PHILOX_W1 = 0xBB67AE85
_MASK32 = 0xFFFFFFFF

# 15-point Kronrod nodes on [-1, 1] (non-negative half) and weights; the 7-point
# Gauss rule uses the odd-indexed nodes.
GK15_NODES = (
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
)
GK15_WEIGHTS = (
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
)
G7_WEIGHTS = (
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
)

KIND_DENSITY = 0
KIND_UPPER = 1
KIND_LOWER = 2

NAME = "python"


def _point(kind: int, x: float, mean: float, kappa: float) -> float:
    if kind == KIND_DENSITY:
        d = x - mean
        return SQRT_2_OVER_PI / kappa * math.exp(-2.0 * d * d / (kappa * kappa))
    if kind == KIND_UPPER:
        return 0.5 * math.erfc(SQRT2 * (x - mean) / kappa)
    return 0.5 * math.erfc(SQRT2 * (mean - x) / kappa)


def _gk15(kind, x, phase, amp, kappa, delta, a, b):
    half = 0.5 * (b - a)
    centre = 0.5 * (a + b)
    fc = _point(kind, x, amp * math.cos(phase + delta * centre), kappa)
    resk = fc * GK15_WEIGHTS[7]
    resg = fc * G7_WEIGHTS[3]
    for j in range(7):
        dx = half * GK15_NODES[j]
        f1 = _point(kind, x, amp * math.cos(phase + delta * (centre - dx)), kappa)
        f2 = _point(kind, x, amp * math.cos(phase + delta * (centre + dx)), kappa)
        resk += GK15_WEIGHTS[j] * (f1 + f2)
        if j % 2 == 1:
            resg += G7_WEIGHTS[j // 2] * (f1 + f2)
    return resk * half, abs((resk - resg) * half)


def theta_average(kind, x, phase, amp, kappa, delta, abs_tol, max_sub):
    """Average of a Gaussian functional over a phase uniform on ``[0, delta]``.

    The integrand is evaluated at ``mean = amp * cos(phase + delta * u)`` for
    ``u`` in [0, 1]. ``kind`` selects the density at ``x`` (0), the upper tail
    ``P(X >= x)`` (1) or the lower tail ``P(X <= x)`` (2).

    Returns:
        ``(value, error_estimate, converged)``.
    """
    if delta == 0.0:
        return _point(kind, x, amp * math.cos(phase), kappa), 0.0, True
    val, err = _gk15(kind, x, phase, amp, kappa, delta, 0.0, 1.0)
    intervals = [(0.0, 1.0, val, err)]
    total_val, total_err = val, err
    while total_err > abs_tol:
        if len(intervals) >= max_sub:
            return total_val, total_err, False
        worst = 0
        for j in range(1, len(intervals)):
            if intervals[j][3] > intervals[worst][3]:
                worst = j
        a, b, v, e = intervals[worst]
        m = 0.5 * (a + b)
        v1, e1 = _gk15(kind, x, phase, amp, kappa, delta, a, m)
        v2, e2 = _gk15(kind, x, phase, amp, kappa, delta, m, b)
        intervals[worst] = (a, m, v1, e1)
        intervals.append((m, b, v2, e2))
        total_val = 0.0
        total_err = 0.0
        for iv in intervals:
            total_val += iv[2]
            total_err += iv[3]
    return total_val, total_err, True


# ---------------------------------------------------------------------------
# counter-based random numbers


def philox4x32(c0, c1, c2, c3, k0, k1):
    """Philox4x32-10 on arrays of 32-bit words held in uint64 arrays."""
    c0 = np.asarray(c0, dtype=np.uint64)
    c1 = np.asarray(c1, dtype=np.uint64)
    c2 = np.asarray(c2, dtype=np.uint64)
    c3 = np.asarray(c3, dtype=np.uint64)
    k0 = int(k0) & _MASK32
    k1 = int(k1) & _MASK32
    m0 = np.uint64(PHILOX_M0)
    m1 = np.uint64(PHILOX_M1)
    mask = np.uint64(_MASK32)
    shift = np.uint64(32)
    for _ in range(10):
        p0 = m0 * c0
        p1 = m1 * c2
        c0, c1, c2, c3 = (
            (p1 >> shift) ^ c1 ^ np.uint64(k0),
            p1 & mask,
            (p0 >> shift) ^ c3 ^ np.uint64(k1),
            p0 & mask,
        )
        k0 = (k0 + PHILOX_W0) & _MASK32
        k1 = (k1 + PHILOX_W1) & _MASK32
    return c0, c1, c2, c3


def _to_unit(a, b):
    return ((a >> np.uint64(5)).astype(np.float64) * 67108864.0 + (b >> np.uint64(6)).astype(np.float64)) * (
        1.0 / 9007199254740992.0
    )


def sample_block(seed, start, n, amp, kappa, delta, phase_index):
    """Draw trials ``start .. start+n-1``.

    Returns:
        dict of arrays: ``alice`` and ``eve`` phase indices, ``m`` (total phase
        index), ``theta``, ``x`` and ``coin``.
    """
    seed = int(seed) & 0xFFFFFFFFFFFFFFFF
    k0, k1 = seed & _MASK32, seed >> 32
    idx = np.arange(start, start + n, dtype=np.uint64)
    lo = idx & np.uint64(_MASK32)
    hi = idx >> np.uint64(32)
    zeros = np.zeros_like(idx)
    a0, a1, a2, a3 = philox4x32(lo, hi, zeros, zeros, k0, k1)
    b0, b1, b2, _ = philox4x32(lo, hi, zeros + np.uint64(1), zeros, k0, k1)
    u1 = _to_unit(a0, a1)
    u2 = _to_unit(a2, a3)
    u3 = _to_unit(b0, b1)
    alice = (b2 & np.uint64(3)).astype(np.int64)
    eve = ((b2 >> np.uint64(2)) & np.uint64(1)).astype(np.int64)
    coin = ((b2 >> np.uint64(3)) & np.uint64(1)).astype(bool)
    if phase_index < 0:
        m = (alice - eve) & 3
    else:
        m = np.full(n, phase_index, dtype=np.int64)
    theta = delta * u3
    mean = amp * np.cos(m.astype(np.float64) * HALF_PI + theta)
    z = np.sqrt(-2.0 * np.log(1.0 - u1)) * np.cos(TWO_PI * u2)
    x = mean + 0.5 * kappa * z
    return {"alice": alice, "eve": eve, "m": m, "theta": theta, "x": x, "coin": coin}


def tally_block(sample, x_th):
    x = sample["x"]
    m = sample["m"]
    plus = x >= x_th
    minus = ~plus & (x <= -x_th)
    err = (plus & (m == 2)) | (minus & (m == 0)) | ((plus | minus) & ((m & 1) == 1) & sample["coin"])
    return int(plus.sum()), int(minus.sum()), int(err.sum())


_CHUNK = 1 << 18


def mc_tally(seed, start, n, amp, kappa, delta, x_th, phase_index):
    """Count plus-valid, minus-valid and error trials in ``[start, start+n)``.

    ``phase_index`` fixes the total phase to ``phase_index * pi/2`` (0..3), or
    draws Alice's phase and Eve's basis per trial when negative.
    """
    n_plus = n_minus = n_err = 0
    done = 0
    while done < n:
        size = min(_CHUNK, n - done)
        sample = sample_block(seed, start + done, size, amp, kappa, delta, phase_index)
        p, q, e = tally_block(sample, x_th)
        n_plus += p
        n_minus += q
        n_err += e
        done += size
    return n_plus, n_minus, n_err
