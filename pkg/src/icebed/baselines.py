"""Per-slice Viterbi baselines that ignore edges between slices.

``fixed`` smooths every column pair with the mean of the configured weights;
``dynamic`` keeps the per-column weights. Both see the same unary table as
the grid solver, so comparisons isolate the smoothing model.
"""

from __future__ import annotations

import numpy as np

from .core import NO_EVIDENCE, EnergyParams, ExtraEvidence, Surface, TopoSequence
from .energy import build_unary
from .errors import Infeasible
from .msgpass import message_into

BETA_MODES = ("fixed", "dynamic")


def _horizontal_weights(params: EnergyParams, phi, beta_mode):
    if beta_mode not in BETA_MODES:
        raise ValueError(f"beta_mode must be one of {BETA_MODES}, got {beta_mode!r}")
    if beta_mode == "fixed":
        return np.full(max(phi - 1, 0), float(np.mean(params.beta_vector(phi))))
    return params.edge_weights(phi)[0]


def viterbi_slice(unary, params: EnergyParams, beta_mode="dynamic", naive=False):
    """Exact minimum-energy labeling of one slice treated as a chain of columns.

    Parameters
    ----------
    unary : ndarray, shape (phi, rho)
    params : EnergyParams
    beta_mode : {"fixed", "dynamic"}

    Returns
    -------
    ndarray of int, shape (phi,)
    """
    unary = np.asarray(unary, dtype=np.float64)
    phi, rho = unary.shape
    weights = _horizontal_weights(params, phi, beta_mode)
    back = np.zeros((phi, rho), dtype=np.int64)
    f = unary[0].copy()
    m = np.empty(rho)
    for j in range(1, phi):
        message_into(f, weights[j - 1], params.sigma_hat, params.alpha, naive, m, back[j])
        f = m + unary[j]
        if not np.isfinite(f).any():
            raise Infeasible(f"no label path reaches column {j}", pixel=(None, j))
    if not np.isfinite(f).any():
        raise Infeasible("slice has no feasible label", pixel=(None, 0))
    labels = np.empty(phi, dtype=np.int64)
    labels[-1] = int(np.argmin(f))
    for j in range(phi - 1, 0, -1):
        labels[j - 1] = back[j, labels[j]]
    return labels


def solve_independent(
    seq: TopoSequence,
    params: EnergyParams,
    extra: ExtraEvidence = NO_EVIDENCE,
    beta_mode="dynamic",
    unary=None,
) -> Surface:
    """Run :func:`viterbi_slice` on every slice and stack the results."""
    if unary is None:
        unary = build_unary(seq, params, extra)
    rows = []
    for i in range(unary.shape[0]):
        try:
            rows.append(viterbi_slice(unary[i], params, beta_mode))
        except Infeasible as exc:
            raise Infeasible(f"slice {i}: {exc}", pixel=(i, exc.pixel[1] if exc.pixel else None)) from exc
    return Surface(np.stack(rows))
