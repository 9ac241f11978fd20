"""Estimate energy parameters from labeled sequences."""

from __future__ import annotations

import numpy as np

from .core import DEFAULT_TAU, DEFAULT_TEMPLATE_LENGTH, VAR_FLOOR, EnergyParams, Surface, TemplateModel
from .errors import InsufficientData


def _labels(s):
    return np.asarray(s.labels if isinstance(s, Surface) else s, dtype=np.int64)


def _sample_var(x):
    # Bessel-corrected; fewer than two samples carries no spread information
    return float(np.var(x, ddof=1)) if x.size > 1 else 0.0


def learn_template(labeled, t: int = DEFAULT_TEMPLATE_LENGTH) -> TemplateModel:
    """Per-offset mean and variance of intensity around the labeled boundary.

    Parameters
    ----------
    labeled : iterable of (TopoSequence, Surface)
    t : int
        Odd template length.
    """
    if t < 1 or t % 2 == 0:
        raise ValueError(f"template length must be odd and >= 1, got {t}")
    h = (t - 1) // 2
    samples = [[] for _ in range(t)]
    n_cols = 0
    for seq, surf in labeled:
        s = _labels(surf)
        if s.shape != seq.shape[:2]:
            raise ValueError(f"labels {s.shape} do not match sequence {seq.shape[:2]}")
        n_cols += s.size
        for k, p in enumerate(range(-h, h + 1)):
            rows = s + p
            ok = (rows >= 0) & (rows < seq.rho)
            ii, jj = np.nonzero(ok)
            samples[k].append(seq.intensity[ii, jj, rows[ok]].astype(np.float64))
    if n_cols == 0:
        raise InsufficientData("no labeled columns")
    mu = np.empty(t)
    var = np.empty(t)
    for k in range(t):
        x = np.concatenate(samples[k]) if samples[k] else np.empty(0)
        if x.size == 0:
            raise InsufficientData(f"template offset {k - h} has no in-range samples")
        mu[k] = x.mean()
        var[k] = _sample_var(x)
    return TemplateModel(mu, np.maximum(var, VAR_FLOOR))


def _differences(surfaces):
    horiz, vert = [], []
    phi = None
    for surf in surfaces:
        s = _labels(surf)
        if phi is None:
            phi = s.shape[1]
        elif s.shape[1] != phi:
            raise ValueError("training surfaces must share the number of columns")
        horiz.append(np.diff(s, axis=1))
        vert.append(np.diff(s, axis=0))
    return horiz, vert, phi


def learn_pairwise(surfaces, per_column: bool = True):
    """Smoothness parameters from adjacent-label differences.

    Returns
    -------
    alpha : int
        One more than the largest observed difference, so every training
        surface stays feasible.
    sigma_hat : float
        Sample standard deviation of all differences (within and across slices).
    beta : ndarray, shape (phi,)
        Per-column weights, inverse to the variance of differences touching
        the column and normalised to mean 1; all ones when ``per_column`` is off.
    """
    horiz, vert, phi = _differences(list(surfaces))
    if phi is None:
        raise InsufficientData("no training surfaces")
    alld = np.concatenate([d.ravel() for d in horiz + vert])
    if alld.size == 0:
        raise InsufficientData("training surfaces have no adjacent pairs")
    sigma_hat = max(np.sqrt(_sample_var(alld)), VAR_FLOOR)
    alpha = int(np.abs(alld).max()) + 1
    if not per_column:
        return alpha, sigma_hat, np.ones(phi)
    beta = np.empty(phi)
    for j in range(phi):
        parts = [d[:, j] for d in vert]
        if j > 0:
            parts += [d[:, j - 1] for d in horiz]
        if j < phi - 1:
            parts += [d[:, j] for d in horiz]
        var_j = _sample_var(np.concatenate(parts).astype(np.float64))
        beta[j] = sigma_hat**2 / max(var_j, VAR_FLOOR)
    return alpha, sigma_hat, beta / beta.mean()


# The template cost is a sum of squared z-scores, i.e. twice a Gaussian
# negative log-likelihood, while the pairwise cost is a plain one. Doubling
# the smoothness weights puts both on the same scale.
LIKELIHOOD_SCALE = 2.0


def train_params(
    labeled,
    t: int = DEFAULT_TEMPLATE_LENGTH,
    tau: float = DEFAULT_TAU,
    per_column: bool = True,
    smoothness_scale: float = LIKELIHOOD_SCALE,
) -> EnergyParams:
    """Fit the template and smoothness terms; ``tau`` is taken as given.

    The per-column weights from :func:`learn_pairwise` (mean 1) are
    multiplied by ``smoothness_scale``.
    """
    labeled = list(labeled)
    tmpl = learn_template(labeled, t)
    alpha, sigma_hat, beta = learn_pairwise([s for _, s in labeled], per_column)
    return EnergyParams(tmpl, tau=tau, alpha=alpha, sigma_hat=sigma_hat, beta=smoothness_scale * beta)
