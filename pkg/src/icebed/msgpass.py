"""Min-sum message kernels for the truncated log-Gaussian pairwise cost.

A message maps a cost vector ``h`` over source labels to

    m(t) = min_s  h(s) + w * ((s - t)**2 / (2 sigma**2) + ln(sigma sqrt(2 pi)))

with the minimum restricted to ``|s - t| < alpha``. Three kernels compute it:

* ``naive``    exhaustive O(rho**2) scan, the reference.
* ``windowed`` exact O(rho * alpha) scan of the truncation window.
* ``envelope`` O(rho) lower envelope of parabolas (generalized distance
  transform); only valid when ``alpha >= rho`` because the truncation to
  +inf is not a quadratic.

All kernels break argmin ties toward the smaller source label.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numba
import numpy as np

LOG_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)
_BLOCK = 256


@dataclass(frozen=True)
class Message:
    values: np.ndarray
    argmin: np.ndarray


@numba.njit(cache=True)
def pair_table(weight, sigma_hat, alpha, rho):
    """Pairwise cost for label distances ``0 .. min(alpha, rho) - 1``."""
    n = min(alpha, rho)
    out = np.empty(n)
    inv = 1.0 / (2.0 * sigma_hat * sigma_hat)
    const = math.log(sigma_hat) + LOG_SQRT_2PI
    for d in range(n):
        out[d] = weight * (d * d * inv + const)
    return out


@numba.njit(cache=True)
def naive_kernel(h, table, alpha, out, arg):
    # every (source, target) pair costs the same: selects instead of branches
    rho = h.size
    for t in range(rho):
        best = np.inf
        bi = -1
        for s in range(rho):
            d = abs(s - t)
            v = h[s] + table[d] if d < alpha else np.inf
            better = v < best
            best = v if better else best
            bi = s if better else bi
        out[t] = best
        arg[t] = bi


@numba.njit(cache=True)
def windowed_kernel(h, table, alpha, out, arg):
    # pass 1: branch-free min over the window, offset-major so the inner loop
    # vectorises; pass 2: first source (smallest label) attaining the min
    rho = h.size
    w = min(alpha, rho)
    for t in range(rho):
        out[t] = np.inf
    for t0 in range(0, rho, _BLOCK):
        t1 = min(t0 + _BLOCK, rho)
        for d in range(-w + 1, w):
            c = table[abs(d)]
            for t in range(max(t0, -d), min(t1, rho - d)):
                out[t] = min(out[t], h[t + d] + c)
    for t in range(rho):
        arg[t] = -1
        if out[t] == np.inf:
            continue
        for s in range(max(0, t - w + 1), min(rho, t + w)):
            if h[s] + table[abs(s - t)] == out[t]:
                arg[t] = s
                break


@numba.njit(cache=True)
def envelope_kernel(h, table, weight, sigma_hat, out, arg):
    # lower envelope of the parabolas h(s) + a (t - s)^2 rooted at finite h(s)
    rho = h.size
    a = weight / (2.0 * sigma_hat * sigma_hat)
    v = np.empty(rho, dtype=np.int64)
    z = np.empty(rho + 1)
    k = -1
    for q in range(rho):
        if h[q] == np.inf:
            continue
        if k < 0:
            k = 0
            v[0] = q
            z[0] = -np.inf
            z[1] = np.inf
            continue
        fq = h[q] + a * q * q
        p = v[k]
        x = (fq - (h[p] + a * p * p)) / (2.0 * a * (q - p))
        while x <= z[k]:
            k -= 1
            p = v[k]
            x = (fq - (h[p] + a * p * p)) / (2.0 * a * (q - p))
        k += 1
        v[k] = q
        z[k] = x
        z[k + 1] = np.inf
    if k < 0:
        for t in range(rho):
            out[t] = np.inf
            arg[t] = -1
        return
    n = k + 1
    k = 0
    for t in range(rho):
        while z[k + 1] < t:
            k += 1
        # re-score the envelope neighbours with the scanning kernels' arithmetic
        # so rounding in the breakpoints cannot flip ties toward the larger label
        best = np.inf
        bi = -1
        for c in range(max(k - 1, 0), min(k + 2, n)):
            s = v[c]
            val = h[s] + table[abs(s - t)]
            if val < best:
                best = val
                bi = s
        out[t] = best
        arg[t] = bi


@numba.njit(cache=True)
def message_into(h, weight, sigma_hat, alpha, naive, out, arg):
    """Dispatching kernel used by the solvers; writes into ``out`` and ``arg``."""
    rho = h.size
    table = pair_table(weight, sigma_hat, alpha, rho)
    if naive:
        naive_kernel(h, table, alpha, out, arg)
    elif alpha >= rho:
        envelope_kernel(h, table, weight, sigma_hat, out, arg)
    else:
        windowed_kernel(h, table, alpha, out, arg)


def _run(h, beta_j, sigma_hat, alpha, naive):
    h = np.ascontiguousarray(h, dtype=np.float64)
    if h.ndim != 1 or h.size == 0:
        raise ValueError("message input must be a non-empty vector")
    out = np.empty_like(h)
    arg = np.empty(h.size, dtype=np.int64)
    message_into(h, float(beta_j), float(sigma_hat), int(alpha), naive, out, arg)
    return Message(out, arg)


def message_naive(h, beta_j, sigma_hat, alpha) -> Message:
    """Reference message by exhaustive scan over all source/target pairs."""
    return _run(h, beta_j, sigma_hat, alpha, True)


def message_fast(h, beta_j, sigma_hat, alpha) -> Message:
    """Same contract as :func:`message_naive` in O(rho * min(alpha, rho))."""
    return _run(h, beta_j, sigma_hat, alpha, False)
