import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from icebed.core import EnergyParams, TemplateModel, TopoSequence


def random_unary(rng, l, phi, rho, inf_frac=0.2, scale=5.0):
    """Random unary table with some infinite entries; every node keeps a finite label."""
    u = rng.uniform(0.0, scale, size=(l, phi, rho))
    u[rng.random(u.shape) < inf_frac] = np.inf
    ii, jj = np.meshgrid(np.arange(l), np.arange(phi), indexing="ij")
    keep = rng.integers(0, rho, size=(l, phi))
    u[ii, jj, keep] = rng.uniform(0.0, scale, size=(l, phi))
    return u


def random_params(rng, phi, alpha=None, rho=6):
    tm = TemplateModel([0.0], [1.0])
    return EnergyParams(
        tm,
        tau=0.0,
        alpha=int(alpha if alpha is not None else rng.integers(1, rho + 1)),
        sigma_hat=float(rng.uniform(0.5, 2.0)),
        beta=rng.uniform(0.3, 2.0, size=phi),
    )


def small_sequence(l=2, phi=3, rho=4, seed=0):
    rng = np.random.default_rng(seed)
    return TopoSequence(rng.normal(size=(l, phi, rho)).astype(np.float32), np.zeros((l, phi), dtype=np.int64), {})


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
