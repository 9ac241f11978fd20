"""
Distance-transform messages
===========================

A min-sum message through the truncated quadratic pairwise cost, computed by
exhaustive scan and by the fast kernels, on a cost vector with infeasible
(infinite) labels. The fast path costs O(rho * alpha) instead of O(rho^2).
"""

import time

import numpy as np

from icebed.msgpass import message_fast, message_naive

rng = np.random.default_rng(0)
h = rng.uniform(0.0, 20.0, size=64)
h[:10] = np.inf  # labels above the air surface

m = message_fast(h, beta_j=1.0, sigma_hat=2.0, alpha=6)
ref = message_naive(h, beta_j=1.0, sigma_hat=2.0, alpha=6)
ok = np.isfinite(ref.values)
print("same infinite entries:", np.array_equal(ok, np.isfinite(m.values)))
print("max |fast - naive| over finite entries:", np.max(np.abs(m.values[ok] - ref.values[ok])))
print("first reachable label:", int(np.flatnonzero(np.isfinite(m.values))[0]))  # 10 - (alpha - 1)

for rho in (512, 1024, 2048):
    x = rng.normal(size=rho)
    for fn in (message_fast, message_naive):
        fn(x, 1.0, 3.0, 16)
        t0 = time.perf_counter()
        for _ in range(20):
            fn(x, 1.0, 3.0, 16)
        print(f"rho={rho:5d} {fn.__name__:<13} {(time.perf_counter() - t0) / 20 * 1e6:8.1f} us")
