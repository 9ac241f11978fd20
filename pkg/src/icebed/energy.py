"""Cost terms and total energy of a surface.

Every solver reads its costs from here. Infinite costs are IEEE ``inf``;
finite + inf stays inf and no solver ever subtracts two infinities.
"""

from __future__ import annotations

import math

import numpy as np

from .core import NO_EVIDENCE, EnergyParams, ExtraEvidence, Surface, TemplateModel, TopoSequence
from .errors import EmptyFeasibleSet

INF = math.inf
LOG_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)


def template_cost(column, tmpl: TemplateModel, s: int) -> float:
    """Squared, variance-normalised residual of the template centred at row ``s``.

    Template pixels that fall outside the column contribute nothing.
    """
    column = np.asarray(column, dtype=np.float64)
    rows = s + tmpl.offsets
    ok = (rows >= 0) & (rows < column.size)
    r = column[rows[ok]] - tmpl.mu[ok]
    return float(np.sum(r * r / tmpl.sigma[ok]))


def air_cost(s: int, a: int, tau: float) -> float:
    d = s - a
    if d <= 0:
        return INF
    if d > tau:
        return 0.0
    return float(tau - d)


def bin_cost(s: int, b: int) -> float:
    return INF if s < b else 0.0


def pairwise_cost(s: int, s_hat: int, beta_j: float, sigma_hat: float, alpha: int) -> float:
    """Truncated negative log-Gaussian smoothness cost, scaled by ``beta_j``."""
    d = s - s_hat
    if abs(d) >= alpha:
        return INF
    return beta_j * (d * d / (2.0 * sigma_hat * sigma_hat) + math.log(sigma_hat) + LOG_SQRT_2PI)


def pairwise_array(d, weight, sigma_hat, alpha):
    """Vectorised ``pairwise_cost`` over label differences ``d``; ``weight`` broadcasts."""
    d = np.asarray(d, dtype=np.float64)
    c = weight * (d * d / (2.0 * sigma_hat * sigma_hat) + math.log(sigma_hat) + LOG_SQRT_2PI)
    return np.where(np.abs(d) < alpha, c, INF)


def template_volume(intensity, tmpl: TemplateModel):
    """Template cost for every ``(i, j, s)``; shape of ``intensity``."""
    vol = np.asarray(intensity, dtype=np.float64)
    rho = vol.shape[-1]
    cost = np.zeros(vol.shape, dtype=np.float64)
    for p, mu, var in zip(tmpl.offsets, tmpl.mu, tmpl.sigma):
        if abs(p) >= rho:
            continue
        if p >= 0:
            r = vol[..., p:] - mu
            cost[..., : rho - p] += r * r / var
        else:
            r = vol[..., : rho + p] - mu
            cost[..., -p:] += r * r / var
    return cost


def air_volume(air, rho, tau):
    d = np.arange(rho)[None, None, :] - np.asarray(air)[..., None]
    return np.where(d <= 0, INF, np.where(d > tau, 0.0, tau - d))


def build_unary(seq: TopoSequence, params: EnergyParams, extra: ExtraEvidence = NO_EVIDENCE):
    """Precompute the ``(l, phi, rho)`` table of unary costs.

    Raises
    ------
    EmptyFeasibleSet
        If some column has no finite entry; the first such pixel is reported.
    """
    unary = template_volume(seq.intensity, params.template)
    unary += air_volume(seq.air, seq.rho, params.tau)
    for i, (j, b) in seq.bins.items():
        unary[i, j, :b] = INF
    if extra:
        extra.check_bounds(seq.shape)
        for i, j, lo, hi in extra.intervals():
            unary[i, j, :lo] = INF
            unary[i, j, hi + 1 :] = INF
    dead = np.argwhere(~np.isfinite(unary).any(axis=2))
    if len(dead):
        i, j = (int(v) for v in dead[0])
        raise EmptyFeasibleSet(
            f"pixel ({i},{j}) has no feasible label ({len(dead)} such pixels)", pixel=(i, j)
        )
    return unary


def surface_energy(labels, unary, params: EnergyParams) -> float:
    """Energy of ``labels`` given a prebuilt unary table: every grid edge counted once."""
    s = np.asarray(labels.labels if isinstance(labels, Surface) else labels, dtype=np.int64)
    l, phi, _ = unary.shape
    u = np.take_along_axis(unary, s[..., None], axis=2)[..., 0]
    if not np.all(np.isfinite(u)):
        return INF
    wh, wv = params.edge_weights(phi)
    total = float(np.sum(u))
    if phi > 1:
        total += float(np.sum(pairwise_array(s[:, 1:] - s[:, :-1], wh[None, :], params.sigma_hat, params.alpha)))
    if l > 1:
        total += float(np.sum(pairwise_array(s[1:, :] - s[:-1, :], wv[None, :], params.sigma_hat, params.alpha)))
    return total


def total_energy(surface: Surface, seq: TopoSequence, params: EnergyParams, extra: ExtraEvidence = NO_EVIDENCE) -> float:
    labels = surface.labels if isinstance(surface, Surface) else np.asarray(surface)
    if labels.shape != seq.shape[:2]:
        raise ValueError(f"surface shape {labels.shape} does not match sequence {seq.shape[:2]}")
    if labels.min() < 0 or labels.max() > seq.rho - 1:
        raise ValueError("surface labels out of range")
    try:
        unary = build_unary(seq, params, extra)
    except EmptyFeasibleSet:
        return INF
    return surface_energy(labels, unary, params)
