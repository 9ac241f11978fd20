"""Domain types and index conventions.

Indexing is zero-based throughout. A sequence has ``l`` slices along the
flight path, each slice has ``phi`` columns (direction of arrival) and
``rho`` rows (range bins). Intensity volumes are stored as ``(l, phi, rho)``
so that ``intensity[i, j]`` is the range profile of column ``j`` in slice
``i``; a surface label ``s[i, j]`` is a row index into that profile.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from .errors import EmptyFeasibleSet

VAR_FLOOR = 1e-3
DEFAULT_TEMPLATE_LENGTH = 11
DEFAULT_TAU = 10.0


def _frozen(a, dtype):
    a = np.array(a, dtype=dtype, copy=True)
    a.setflags(write=False)
    return a


class TopoSequence:
    """A sequence of topographic slices plus air-surface and bottom-bin evidence.

    Parameters
    ----------
    intensity : array_like, shape (l, phi, rho)
        Greyscale intensities; stored as float32.
    air : array_like of int, shape (l, phi)
        Row of the ice-air boundary in every column.
    bins : mapping ``slice -> (column, row_bound)``, optional
        At most one bottom-bin constraint per slice.
    """

    def __init__(self, intensity, air, bins: Mapping[int, tuple[int, int]] | None = None):
        self.intensity = _frozen(intensity, np.float32)
        if self.intensity.ndim != 3:
            raise ValueError(f"intensity must be 3-D (l, phi, rho), got shape {self.intensity.shape}")
        self.air = _frozen(air, np.int64)
        if self.air.shape != self.intensity.shape[:2]:
            raise ValueError(f"air shape {self.air.shape} does not match (l, phi) = {self.intensity.shape[:2]}")
        self.bins = {int(i): (int(j), int(b)) for i, (j, b) in (bins or {}).items()}

    @property
    def shape(self):
        return self.intensity.shape

    @property
    def l(self):
        return self.intensity.shape[0]

    @property
    def phi(self):
        return self.intensity.shape[1]

    @property
    def rho(self):
        return self.intensity.shape[2]

    def bin_arrays(self):
        """Bins as two length-l arrays ``(cols, rows)``; -1 where a slice has no bin."""
        cols = np.full(self.l, -1, dtype=np.int64)
        rows = np.full(self.l, -1, dtype=np.int64)
        for i, (j, b) in self.bins.items():
            cols[i] = j
            rows[i] = b
        return cols, rows

    def __eq__(self, other):
        if not isinstance(other, TopoSequence):
            return NotImplemented
        return (
            self.intensity.shape == other.intensity.shape
            and self.intensity.tobytes() == other.intensity.tobytes()
            and np.array_equal(self.air, other.air)
            and self.bins == other.bins
        )

    def __repr__(self):
        return f"TopoSequence(l={self.l}, phi={self.phi}, rho={self.rho}, bins={len(self.bins)})"


class Surface:
    """An ``(l, phi)`` grid of integer row labels."""

    def __init__(self, labels):
        self.labels = _frozen(labels, np.int64)
        if self.labels.ndim != 2:
            raise ValueError(f"surface labels must be 2-D, got shape {self.labels.shape}")

    @property
    def shape(self):
        return self.labels.shape

    def __eq__(self, other):
        if not isinstance(other, Surface):
            return NotImplemented
        return np.array_equal(self.labels, other.labels)

    def __repr__(self):
        return f"Surface(shape={self.shape})"


@dataclass(frozen=True, eq=False)
class TemplateModel:
    """Vertical appearance profile of the boundary: per-offset mean and variance.

    Offsets run from ``-(t-1)/2`` to ``(t-1)/2`` around the labeled row.
    Variances are floored at ``VAR_FLOOR``.
    """

    mu: np.ndarray
    sigma: np.ndarray

    def __post_init__(self):
        mu = np.asarray(self.mu, dtype=np.float64).ravel()
        sigma = np.asarray(self.sigma, dtype=np.float64).ravel()
        if mu.shape != sigma.shape:
            raise ValueError("template mu and sigma must have the same length")
        if mu.size < 1 or mu.size % 2 == 0:
            raise ValueError(f"template length must be odd and >= 1, got {mu.size}")
        object.__setattr__(self, "mu", _frozen(mu, np.float64))
        object.__setattr__(self, "sigma", _frozen(np.maximum(sigma, VAR_FLOOR), np.float64))

    @property
    def t(self):
        return self.mu.size

    @property
    def offsets(self):
        h = (self.t - 1) // 2
        return np.arange(-h, h + 1)


@dataclass(frozen=True, eq=False)
class EnergyParams:
    """Everything the energy needs besides the data.

    ``beta`` may be a scalar (same weight for every column) or a length-phi
    vector of per-column smoothness weights.
    """

    template: TemplateModel
    tau: float = DEFAULT_TAU
    alpha: int = 10
    sigma_hat: float = 1.0
    beta: float | np.ndarray = 1.0

    def __post_init__(self):
        if self.tau < 0:
            raise ValueError("tau must be >= 0")
        if int(self.alpha) != self.alpha or self.alpha < 1:
            raise ValueError("alpha must be an integer >= 1")
        if not self.sigma_hat > 0:
            raise ValueError("sigma_hat must be > 0")
        object.__setattr__(self, "alpha", int(self.alpha))
        object.__setattr__(self, "sigma_hat", max(float(self.sigma_hat), VAR_FLOOR))
        beta = np.asarray(self.beta, dtype=np.float64)
        if np.any(beta <= 0) or not np.all(np.isfinite(beta)):
            raise ValueError("beta weights must be finite and > 0")
        object.__setattr__(self, "beta", float(beta) if beta.ndim == 0 else _frozen(beta.ravel(), np.float64))

    def beta_vector(self, phi):
        if np.ndim(self.beta) == 0:
            return np.full(phi, float(self.beta))
        if self.beta.size != phi:
            raise ValueError(f"beta has {self.beta.size} entries but the sequence has {phi} columns")
        return np.array(self.beta)

    def edge_weights(self, phi):
        """Weights for horizontal edges ``(j, j+1)`` and vertical edges in column ``j``.

        A horizontal edge touches two columns and takes the mean of their
        weights; a vertical edge stays in its column.
        """
        b = self.beta_vector(phi)
        return 0.5 * (b[:-1] + b[1:]), b

    def with_beta(self, beta):
        return EnergyParams(self.template, self.tau, self.alpha, self.sigma_hat, beta)


@dataclass(frozen=True)
class ExtraEvidence:
    """Hard constraints injected on top of the data terms.

    ``pins`` are ``(i, j, s)`` triples forcing a label; ``ranges`` are
    ``(i, j, s_min, s_max)`` restricting it to an inclusive interval.
    """

    pins: tuple = field(default_factory=tuple)
    ranges: tuple = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "pins", tuple(tuple(int(v) for v in p) for p in self.pins))
        object.__setattr__(self, "ranges", tuple(tuple(int(v) for v in r) for r in self.ranges))
        for r in self.ranges:
            if r[2] > r[3]:
                raise ValueError(f"range constraint {r} has s_min > s_max")

    def intervals(self):
        """All constraints as ``(i, j, lo, hi)`` with pins as degenerate ranges."""
        return [(i, j, s, s) for i, j, s in self.pins] + list(self.ranges)

    def check_bounds(self, shape):
        l, phi, rho = shape
        bad = []
        for i, j, lo, hi in self.intervals():
            if not (0 <= i < l and 0 <= j < phi and 0 <= lo <= hi <= rho - 1):
                bad.append((i, j, lo, hi))
        if bad:
            raise ValueError(f"extra evidence out of bounds: {bad}")

    def __bool__(self):
        return bool(self.pins or self.ranges)


NO_EVIDENCE = ExtraEvidence()


def validate_sequence(seq: TopoSequence) -> list[str]:
    """Return a list of invariant violations; empty when the sequence is well formed."""
    problems = []
    l, phi, rho = seq.shape
    if min(l, phi, rho) < 1:
        problems.append(f"dimensions must be >= 1, got (l, phi, rho) = {(l, phi, rho)}")
        return problems
    bad = np.argwhere(~np.isfinite(seq.intensity))
    for idx in bad[:20]:
        problems.append(f"non-finite intensity at index {tuple(int(v) for v in idx)}")
    if len(bad) > 20:
        problems.append(f"... {len(bad) - 20} more non-finite intensities")
    for i, j in np.argwhere((seq.air < 0) | (seq.air > rho - 1)):
        problems.append(f"out-of-range air label at ({i},{j}): {seq.air[i, j]} not in [0, {rho - 1}]")
    for i, (j, b) in sorted(seq.bins.items()):
        if not 0 <= i < l:
            problems.append(f"bin for out-of-range slice {i}")
        if not 0 <= j < phi:
            problems.append(f"bin column out of range at slice {i}: {j} not in [0, {phi - 1}]")
        if not 0 <= b <= rho - 1:
            problems.append(f"bin row out of range at slice {i}: {b} not in [0, {rho - 1}]")
    return problems


def feasible_label_range(seq: TopoSequence, params: EnergyParams, i: int, j: int) -> tuple[int, int]:
    """Interval of labels whose air and bin costs are finite at column ``(i, j)``.

    The bottom must lie strictly below the air surface, and at or below the
    bin row in the slice's designated column.
    """
    lo = int(seq.air[i, j]) + 1
    if i in seq.bins and seq.bins[i][0] == j:
        lo = max(lo, seq.bins[i][1])
    hi = seq.rho - 1
    if lo > hi:
        raise EmptyFeasibleSet(f"no feasible label at pixel ({i},{j}): lower bound {lo} > {hi}", pixel=(i, j))
    return lo, hi
