"""Sequential tree-reweighted message passing (TRW-S) on the slice/column grid.

Nodes are the ``(i, j)`` pixels of the ``l x phi`` grid, visited in
row-major order; horizontal rows and vertical columns form the monotonic
chains. Each iteration is a forward sweep followed by a backward sweep.

Messages are kept per receiving node and direction of arrival::

    from_left[i, j]   message (i, j-1) -> (i, j)
    from_right[i, j]  message (i, j+1) -> (i, j)
    from_up[i, j]     message (i-1, j) -> (i, j)
    from_down[i, j]   message (i+1, j) -> (i, j)

Labels made impossible by hard constraints carry ``inf`` in the
reparameterised unary; they are dropped from every message computed at that
node, which is arc-consistency pruning and never removes a feasible label.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numba
import numpy as np

from .core import NO_EVIDENCE, EnergyParams, ExtraEvidence, Surface, TopoSequence
from .energy import build_unary, surface_energy
from .errors import Infeasible
from .msgpass import message_into

log = logging.getLogger(__name__)


@dataclass
class TrwConfig:
    """Solver settings. ``max_iterations=None`` means one iteration per column."""

    max_iterations: int | None = None
    tol: float = 1e-6
    naive_messages: bool = False

    def iterations_for(self, phi):
        n = phi if self.max_iterations is None else self.max_iterations
        if n < 1:
            raise ValueError("max_iterations must be >= 1")
        return n


@dataclass
class TrwState:
    unary: np.ndarray
    params: EnergyParams
    from_left: np.ndarray
    from_right: np.ndarray
    from_up: np.ndarray
    from_down: np.ndarray
    gamma: float
    n_chains: int
    iteration: int = 0
    bounds: list = field(default_factory=list)

    @classmethod
    def initial(cls, unary, params):
        l, phi, _ = unary.shape
        n = int(phi > 1) + int(l > 1)
        n = max(n, 1)
        z = lambda: np.zeros(unary.shape)  # noqa: E731
        return cls(unary, params, z(), z(), z(), z(), 1.0 / n, n)

    @property
    def edge_weights(self):
        return self.params.edge_weights(self.unary.shape[1])

    def reparameterised_unary(self):
        return self.unary + self.from_left + self.from_right + self.from_up + self.from_down


@numba.njit(cache=True)
def _send(theta, back, gamma, weight, sigma_hat, alpha, naive, h, out, arg):
    for x in range(theta.size):
        h[x] = np.inf if theta[x] == np.inf else gamma * theta[x] - back[x]
    message_into(h, weight, sigma_hat, alpha, naive, out, arg)
    lo = np.inf
    for x in range(out.size):
        if out[x] < lo:
            lo = out[x]
    if lo == np.inf:
        return False
    for x in range(out.size):
        out[x] -= lo
    return True


@numba.njit(cache=True)
def _sweep(unary, fl, fr, fu, fd, wh, wv, sigma_hat, alpha, gamma, forward, naive):
    """One monotonic sweep. Returns -1, or the flat index of a node whose outgoing message is empty."""
    l, phi, rho = unary.shape
    theta = np.empty(rho)
    h = np.empty(rho)
    arg = np.empty(rho, dtype=np.int64)
    n = l * phi
    for kk in range(n):
        k = kk if forward else n - 1 - kk
        i = k // phi
        j = k % phi
        for x in range(rho):
            theta[x] = unary[i, j, x] + fl[i, j, x] + fr[i, j, x] + fu[i, j, x] + fd[i, j, x]
        if forward:
            if j + 1 < phi:
                if not _send(theta, fr[i, j], gamma, wh[j], sigma_hat, alpha, naive, h, fl[i, j + 1], arg):
                    return k
            if i + 1 < l:
                if not _send(theta, fd[i, j], gamma, wv[j], sigma_hat, alpha, naive, h, fu[i + 1, j], arg):
                    return k
        else:
            if j > 0:
                if not _send(theta, fl[i, j], gamma, wh[j - 1], sigma_hat, alpha, naive, h, fr[i, j - 1], arg):
                    return k
            if i > 0:
                if not _send(theta, fu[i, j], gamma, wv[j], sigma_hat, alpha, naive, h, fd[i - 1, j], arg):
                    return k
    return -1


@numba.njit(cache=True)
def _chain_min(theta_hat, fwd, back, weights, share, sigma_hat, alpha, naive):
    """Exact minimum of one chain's share of the reparameterised energy.

    ``theta_hat[k]`` is the reparameterised unary of the k-th chain node,
    ``fwd[k]`` the message from node k-1 into k and ``back[k]`` the message
    from node k+1 into k; ``weights[k]`` weighs edge (k, k+1).
    """
    m, rho = theta_hat.shape
    f = np.empty(rho)
    h = np.empty(rho)
    g = np.empty(rho)
    arg = np.empty(rho, dtype=np.int64)
    for x in range(rho):
        f[x] = theta_hat[0, x] * share
    for k in range(1, m):
        for x in range(rho):
            h[x] = np.inf if f[x] == np.inf else f[x] - back[k - 1, x]
        message_into(h, weights[k - 1], sigma_hat, alpha, naive, g, arg)
        for x in range(rho):
            if theta_hat[k, x] == np.inf or g[x] == np.inf:
                f[x] = np.inf
            else:
                f[x] = g[x] - fwd[k, x] + theta_hat[k, x] * share
    return f.min()


@numba.njit(cache=True)
def _bound(theta_hat, fl, fr, fu, fd, wh, wv, sigma_hat, alpha, n_chains, naive):
    l, phi, rho = theta_hat.shape
    share = 1.0 / n_chains
    total = 0.0
    if phi > 1:
        for i in range(l):
            total += _chain_min(theta_hat[i], fl[i], fr[i], wh, share, sigma_hat, alpha, naive)
    if l > 1:
        for j in range(phi):
            w = np.full(l - 1, wv[j])
            total += _chain_min(
                np.ascontiguousarray(theta_hat[:, j]),
                np.ascontiguousarray(fu[:, j]),
                np.ascontiguousarray(fd[:, j]),
                w, share, sigma_hat, alpha, naive,
            )
    if phi == 1 and l == 1:
        total = theta_hat[0, 0].min()
    return total


@numba.njit(cache=True)
def _decode(unary, fr, fd, wh, wv, sigma_hat, alpha, labels):
    """Row-major conditional argmin. Returns -1 or the flat index of a dead-end pixel."""
    l, phi, rho = unary.shape
    inv = 1.0 / (2.0 * sigma_hat * sigma_hat)
    const = np.log(sigma_hat) + 0.5 * np.log(2.0 * np.pi)
    for i in range(l):
        for j in range(phi):
            best = np.inf
            bx = -1
            for x in range(rho):
                v = unary[i, j, x] + fr[i, j, x] + fd[i, j, x]
                if j > 0:
                    d = x - labels[i, j - 1]
                    if abs(d) >= alpha:
                        continue
                    v += wh[j - 1] * (d * d * inv + const)
                if i > 0:
                    d = x - labels[i - 1, j]
                    if abs(d) >= alpha:
                        continue
                    v += wv[j] * (d * d * inv + const)
                if v < best:
                    best = v
                    bx = x
            if bx < 0:
                return i * phi + j
            labels[i, j] = bx
    return -1


def run_iteration(state: TrwState, naive=False):
    """One forward and one backward sweep; appends the new lower bound."""
    p = state.params
    wh, wv = state.edge_weights
    for forward in (True, False):
        k = _sweep(
            state.unary, state.from_left, state.from_right, state.from_up, state.from_down,
            wh, wv, p.sigma_hat, p.alpha, state.gamma, forward, naive,
        )
        if k >= 0:
            px = divmod(int(k), state.unary.shape[1])
            raise Infeasible(f"no consistent label survives around pixel {px}", pixel=px)
    state.iteration += 1
    lb = lower_bound(state, naive=naive)
    state.bounds.append(lb)
    return lb


def lower_bound(state: TrwState, naive=False) -> float:
    """Dual bound: sum over row and column chains of each chain's exact minimum."""
    p = state.params
    wh, wv = state.edge_weights
    return float(
        _bound(
            state.reparameterised_unary(), state.from_left, state.from_right, state.from_up,
            state.from_down, wh, wv, p.sigma_hat, p.alpha, state.n_chains, naive,
        )
    )


def decode(state: TrwState, unary=None, params=None) -> Surface:
    """Assign labels in row-major order, conditioning on the fixed left and upper neighbours."""
    unary = state.unary if unary is None else unary
    p = state.params if params is None else params
    wh, wv = p.edge_weights(unary.shape[1])
    labels = np.zeros(unary.shape[:2], dtype=np.int64)
    k = _decode(unary, state.from_right, state.from_down, wh, wv, p.sigma_hat, p.alpha, labels)
    if k >= 0:
        px = divmod(int(k), unary.shape[1])
        raise Infeasible(f"decoding dead-ends at pixel {px}: no label compatible with fixed neighbours", pixel=px)
    return Surface(labels)


@dataclass
class TrwResult:
    surface: Surface
    energy: float
    bounds: list
    iterations: int
    state: TrwState


def trw_solve(unary, params: EnergyParams, cfg: TrwConfig | None = None) -> TrwResult:
    """TRW-S on a prebuilt unary table. Keeps the lowest-energy decoding seen."""
    cfg = cfg or TrwConfig()
    l, phi, _ = unary.shape
    n_iter = cfg.iterations_for(phi)
    state = TrwState.initial(np.ascontiguousarray(unary, dtype=np.float64), params)
    best, best_e, last_err = None, np.inf, None
    for it in range(n_iter):
        lb = run_iteration(state, naive=cfg.naive_messages)
        try:
            surf = decode(state)
        except Infeasible as exc:
            last_err = exc
        else:
            e = surface_energy(surf.labels, state.unary, params)
            if e < best_e:
                best, best_e = surf, e
        scale = max(1.0, abs(lb))
        if best is not None and best_e - lb <= cfg.tol * scale:
            break
        if it > 0 and lb - state.bounds[-2] < cfg.tol * scale:
            break
    log.debug("trw: %d iterations, bound %.6g, energy %.6g", state.iteration, state.bounds[-1], best_e)
    if best is None:
        raise last_err
    return TrwResult(best, best_e, list(state.bounds), state.iteration, state)


def trw_infer(
    seq: TopoSequence,
    params: EnergyParams,
    extra: ExtraEvidence = NO_EVIDENCE,
    cfg: TrwConfig | None = None,
):
    """Reconstruct the surface of ``seq``.

    Returns
    -------
    surface : Surface
    energy : float
        Total energy of ``surface``.
    bounds : list of float
        Lower bound after each iteration.
    """
    unary = build_unary(seq, params, extra)
    res = trw_solve(unary, params, cfg)
    return res.surface, res.energy, res.bounds
