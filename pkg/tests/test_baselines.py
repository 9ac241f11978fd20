import itertools

import numpy as np
import pytest

from conftest import random_params, random_unary
from icebed.baselines import solve_independent, viterbi_slice
from icebed.core import ExtraEvidence, TopoSequence
from icebed.energy import build_unary, surface_energy
from icebed.errors import Infeasible
from icebed.synth import SynthConfig, generate


def _exhaustive(u, p):
    phi, rho = u.shape
    best = np.inf
    for lab in itertools.product(range(rho), repeat=phi):
        best = min(best, surface_energy(np.array(lab)[None, :], u[None], p))
    return best


@pytest.mark.parametrize("seed", range(30))
@pytest.mark.parametrize("mode", ["fixed", "dynamic"])
def test_exact_against_enumeration(seed, mode):
    rng = np.random.default_rng(seed)
    phi, rho = int(rng.integers(1, 6)), int(rng.integers(1, 7))
    u = random_unary(rng, 1, phi, rho, inf_frac=0.2)[0]
    p = random_params(rng, phi, rho=rho)
    ref_p = p.with_beta(float(np.mean(p.beta_vector(phi)))) if mode == "fixed" else p
    opt = _exhaustive(u, ref_p)
    if not np.isfinite(opt):
        with pytest.raises(Infeasible):
            viterbi_slice(u, p, mode)
        return
    lab = viterbi_slice(u, p, mode)
    assert surface_energy(lab[None, :], u[None], ref_p) == pytest.approx(opt, rel=1e-12)


def test_single_column():
    u = np.array([[4.0, 2.0, np.inf, 1.5]])
    p = random_params(np.random.default_rng(0), 1)
    assert viterbi_slice(u, p).tolist() == [3]


def test_planted_path():
    rng = np.random.default_rng(1)
    path = np.cumsum(rng.integers(-1, 2, size=12)) + 10
    u = np.full((12, 24), 100.0)
    u[np.arange(12), path] = 0.0
    p = random_params(rng, 12, alpha=3, rho=24)
    np.testing.assert_array_equal(viterbi_slice(u, p), path)


def test_naive_and_fast_agree(rng):
    u = random_unary(rng, 1, 9, 40, inf_frac=0.2)[0]
    p = random_params(rng, 9, alpha=6, rho=40)
    np.testing.assert_array_equal(viterbi_slice(u, p, naive=True), viterbi_slice(u, p))


def test_bad_mode():
    with pytest.raises(ValueError):
        viterbi_slice(np.zeros((2, 2)), random_params(np.random.default_rng(0), 2), "other")


@pytest.fixture(scope="module")
def planted():
    cfg = SynthConfig(l=5, phi=10, rho=64, seed=4, amplitude=(1.0, 2.0), max_frequency=1)
    return cfg, *generate(cfg)


def test_l1_matches_slice(planted):
    cfg, seq, _ = planted
    one = TopoSequence(seq.intensity[:1], seq.air[:1], {0: seq.bins[0]})
    p = cfg.energy_params()
    s = solve_independent(one, p)
    np.testing.assert_array_equal(s.labels[0], viterbi_slice(build_unary(one, p)[0], p))


def test_slices_independent(planted):
    cfg, seq, gt = planted
    p = cfg.energy_params()
    base = solve_independent(seq, p)
    pinned = solve_independent(seq, p, ExtraEvidence(pins=[(2, 4, int(gt.labels[2, 4]) + 3)]))
    changed = np.flatnonzero((base.labels != pinned.labels).any(axis=1))
    assert changed.tolist() == [2]


def test_infeasible_slice_is_named(planted):
    cfg, seq, _ = planted
    p = cfg.energy_params().with_beta(1.0)
    extra = ExtraEvidence(pins=[(3, 0, 20), (3, 1, 60)])
    with pytest.raises(Infeasible) as exc:
        solve_independent(seq, p, extra)
    assert "slice 3" in str(exc.value)
