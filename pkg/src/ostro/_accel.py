"""Float hot loops with an optional numba backend.

Only quantities that are reported as floats go through here (entropy and
log-product profiles, Kakutani partial sums, batched modulus estimates,
sample digit packing).  Certified values never do.

Set ``OSTRO_NUMBA=0`` to force the pure-numpy implementations.
"""

from __future__ import annotations

import os

import numpy as np

_WANT_NUMBA = os.environ.get("OSTRO_NUMBA", "1").strip().lower() not in ("0", "false", "no", "off")

try:
    if not _WANT_NUMBA:
        raise ImportError("numba disabled by OSTRO_NUMBA")
    from numba import njit

    HAS_NUMBA = True
except ImportError:
    HAS_NUMBA = False

BACKEND = "numba" if HAS_NUMBA else "numpy"


# -- numpy reference implementations ---------------------------------------


def _xlogx_np(p, complement):
    # p*ln(p) with ln(p) = log1p(-complement) when p is close to 1
    out = np.zeros_like(p)
    pos = p > 0
    near_one = pos & (p > 0.5)
    far = pos & ~near_one
    out[near_one] = p[near_one] * np.log1p(-complement[near_one])
    out[far] = p[far] * np.log(p[far])
    return out


def entropy_terms_numpy(p0, p1):
    return -(_xlogx_np(p0, p1) + _xlogx_np(p1, p0))


def entropy_prefix_numpy(p0, p1):
    return np.cumsum(entropy_terms_numpy(p0, p1))


def log_max_prefix_numpy(p0, p1):
    return np.cumsum(np.log(np.maximum(p0, p1)))


def kakutani_prefix_numpy(p0, p1):
    nondeg = (p0 > 0) & (p1 > 0)
    return np.cumsum(np.where(nondeg, (p1 - p0) ** 2, 0.0))


def cf_modulus_batch_numpy(ts, inv_q, four_p0p1):
    s = np.sin(np.outer(ts, inv_q) * 0.5)
    return np.prod(np.sqrt(np.clip(1.0 - four_p0p1[None, :] * s * s, 0.0, None)), axis=1)


def pack_codes_numpy(uniforms, p1):
    bits = (uniforms < p1[None, :]).astype(np.int64)
    weights = np.left_shift(np.int64(1), np.arange(p1.shape[0], dtype=np.int64))
    return bits @ weights


# -- numba kernels -----------------------------------------------------------

if HAS_NUMBA:

    @njit(cache=True)
    def _xlogx_nb(p, complement):
        if p <= 0.0:
            return 0.0
        if p > 0.5:
            return p * np.log1p(-complement)
        return p * np.log(p)

    @njit(cache=True)
    def entropy_prefix_numba(p0, p1):
        n = p0.shape[0]
        out = np.empty(n)
        acc = 0.0
        for i in range(n):
            acc -= _xlogx_nb(p0[i], p1[i]) + _xlogx_nb(p1[i], p0[i])
            out[i] = acc
        return out

    @njit(cache=True)
    def log_max_prefix_numba(p0, p1):
        n = p0.shape[0]
        out = np.empty(n)
        acc = 0.0
        for i in range(n):
            acc += np.log(max(p0[i], p1[i]))
            out[i] = acc
        return out

    @njit(cache=True)
    def kakutani_prefix_numba(p0, p1):
        n = p0.shape[0]
        out = np.empty(n)
        acc = 0.0
        for i in range(n):
            if p0[i] > 0.0 and p1[i] > 0.0:
                d = p1[i] - p0[i]
                acc += d * d
            out[i] = acc
        return out

    @njit(cache=True)
    def cf_modulus_batch_numba(ts, inv_q, four_p0p1):
        out = np.empty(ts.shape[0])
        for i in range(ts.shape[0]):
            prod = 1.0
            for k in range(inv_q.shape[0]):
                s = np.sin(0.5 * ts[i] * inv_q[k])
                v = 1.0 - four_p0p1[k] * s * s
                prod *= np.sqrt(v) if v > 0.0 else 0.0
            out[i] = prod
        return out

    @njit(cache=True)
    def pack_codes_numba(uniforms, p1):
        n, depth = uniforms.shape
        out = np.zeros(n, dtype=np.int64)
        for i in range(n):
            code = 0
            for k in range(depth):
                if uniforms[i, k] < p1[k]:
                    code |= np.int64(1) << k
            out[i] = code
        return out

    entropy_prefix = entropy_prefix_numba
    log_max_prefix = log_max_prefix_numba
    kakutani_prefix = kakutani_prefix_numba
    cf_modulus_batch = cf_modulus_batch_numba
    pack_codes = pack_codes_numba
else:
    entropy_prefix = entropy_prefix_numpy
    log_max_prefix = log_max_prefix_numpy
    kakutani_prefix = kakutani_prefix_numpy
    cf_modulus_batch = cf_modulus_batch_numpy
    pack_codes = pack_codes_numpy


def as_f64(values) -> np.ndarray:
    return np.ascontiguousarray(np.asarray(values, dtype=np.float64))
