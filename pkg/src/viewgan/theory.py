"""Exact game analysis on finite discrete distributions.

Everything here works on probability tables over a finite grid of view
pairs, never on trained networks. The point is to verify the minimax
analysis exactly: the closed-form optimal discriminator against the
two-generator mixture, the value -log 4 at equilibrium, the identity
linking the value to the Jensen-Shannon divergence, and the augmented
value whose unique minimum forces both generators onto the real joint.

Natural logarithms throughout, so -log 4 is about -1.386294.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DimensionError

_LOG_FLOOR = 1e-300
_SUM_TOL = 1e-12
LOG4 = math.log(4.0)


@dataclass(frozen=True, eq=False)
class DiscreteJoint:
    """A joint distribution over an n1 x n2 grid of view-pair values."""

    table: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.table, dtype=np.float64)
        if t.ndim != 2 or t.size == 0:
            raise DimensionError("table must be a nonempty 2-D array")
        if not np.all(np.isfinite(t)) or np.any(t < 0):
            raise ValueError("table entries must be finite and nonnegative")
        if abs(float(t.sum()) - 1.0) > _SUM_TOL:
            raise ValueError(f"table sums to {t.sum()!r}, not 1")
        object.__setattr__(self, "table", t)

    @property
    def n1(self) -> int:
        return self.table.shape[0]

    @property
    def n2(self) -> int:
        return self.table.shape[1]


@dataclass(frozen=True, eq=False)
class DiscriminatorTable:
    """A discriminator response in [0, 1] for every support cell."""

    table: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.table, dtype=np.float64)
        if t.ndim != 2 or t.size == 0:
            raise DimensionError("table must be a nonempty 2-D array")
        if not np.all(np.isfinite(t)) or np.any(t < 0) or np.any(t > 1):
            raise ValueError("discriminator entries must lie in [0, 1]")
        object.__setattr__(self, "table", t)


def _dist(x) -> np.ndarray:
    """Accept a DiscreteJoint or a raw array; return a validated table."""
    if isinstance(x, DiscreteJoint):
        return x.table
    t = np.asarray(x, dtype=np.float64)
    if not np.all(np.isfinite(t)) or np.any(t < 0):
        raise ValueError("distribution entries must be finite and nonnegative")
    if abs(float(t.sum()) - 1.0) > _SUM_TOL:
        raise ValueError("distribution must sum to 1")
    return t


def _disc(x) -> np.ndarray:
    if isinstance(x, DiscriminatorTable):
        return x.table
    t = np.asarray(x, dtype=np.float64)
    if not np.all(np.isfinite(t)) or np.any(t < 0) or np.any(t > 1):
        raise ValueError("discriminator entries must lie in [0, 1]")
    return t


def _same_shape(*tables):
    shape = tables[0].shape
    for t in tables[1:]:
        if t.shape != shape:
            raise DimensionError(f"shape mismatch: {t.shape} vs {shape}")


def mixture(pg1, pg2) -> DiscreteJoint:
    """Equal-weight mixture of the two generator joints."""
    a, b = _dist(pg1), _dist(pg2)
    _same_shape(a, b)
    return DiscreteJoint(0.5 * (a + b))


def optimal_discriminator(p_real, pg1, pg2) -> DiscriminatorTable:
    """Best response p_real / (p_real + mixture), cellwise.

    Cells carrying no mass under either side are set to 0.5; the value
    there is irrelevant to the game (no term of the value function sees
    them) and 0.5 keeps the table well defined everywhere.
    """
    real = _dist(p_real)
    mix = mixture(pg1, pg2).table
    _same_shape(real, mix)
    den = real + mix
    with np.errstate(divide="ignore", invalid="ignore"):
        d = np.where(den > 0, real / np.where(den > 0, den, 1.0), 0.5)
    return DiscriminatorTable(d)


def value_function(d, p_real, pg1, pg2) -> float:
    """Expected log payoff of discriminator table d against the three joints.

    Sum of p_real*log d plus half of each generator mass times log(1-d),
    with logs floored at 1e-300 so boundary tables stay finite.
    """
    dt = _disc(d)
    real, a, b = _dist(p_real), _dist(pg1), _dist(pg2)
    _same_shape(dt, real, a, b)
    log_d = np.log(np.maximum(dt, _LOG_FLOOR))
    log_1md = np.log(np.maximum(1.0 - dt, _LOG_FLOOR))
    return float(np.sum(real * log_d) + 0.5 * np.sum(a * log_1md) + 0.5 * np.sum(b * log_1md))


def brute_force_discriminator(p_real, pg1, pg2, step: float = 1e-3) -> DiscriminatorTable:
    """Grid-search best response, the slow road to the closed form.

    For every cell the scalar objective alpha*log z + mix*log(1-z) is
    evaluated on the grid {0, step, ..., 1} and the argmax kept. Exists to
    confirm optimal_discriminator independently of any calculus.
    """
    real = _dist(p_real)
    mix = mixture(pg1, pg2).table
    _same_shape(real, mix)
    grid = np.arange(0.0, 1.0 + step / 2.0, step)
    log_z = np.log(np.maximum(grid, _LOG_FLOOR))
    log_1mz = np.log(np.maximum(1.0 - grid, _LOG_FLOOR))
    # objective per cell and grid point: (cells, grid)
    scores = real.reshape(-1, 1) * log_z + mix.reshape(-1, 1) * log_1mz
    best = grid[np.argmax(scores, axis=1)].reshape(real.shape)
    return DiscriminatorTable(best)


def random_joint(rng: np.random.Generator, n1: int, n2: int,
                 sparsity: float = 0.0) -> DiscreteJoint:
    """Random instance generator for property checks.

    sparsity is the expected fraction of cells emptied before normalizing;
    at least one cell always keeps mass.
    """
    t = rng.random((n1, n2))
    if sparsity > 0.0:
        t[rng.random((n1, n2)) < sparsity] = 0.0
        if t.sum() == 0.0:
            t[rng.integers(0, n1), rng.integers(0, n2)] = 1.0
    return DiscreteJoint(t / t.sum())


def kl(p, q) -> float:
    """KL divergence sum p*log(p/q) over p's support; +inf if q misses mass.

    Cells with p=0 contribute nothing (the 0*log 0 convention).
    """
    pt, qt = _dist(p), _dist(q)
    _same_shape(pt, qt)
    mask = pt > 0
    if np.any(qt[mask] == 0):
        return math.inf
    return float(np.sum(pt[mask] * np.log(pt[mask] / qt[mask])))


def jsd(p, q) -> float:
    """Jensen-Shannon divergence, always finite, in [0, log 2]."""
    pt, qt = _dist(p), _dist(q)
    _same_shape(pt, qt)
    m = 0.5 * (pt + qt)
    return 0.5 * kl(pt, m) + 0.5 * kl(qt, m)


@dataclass(frozen=True)
class TheoremReport:
    """Residuals from checking the equilibrium statement on one triple."""

    value: float               # V at the optimal discriminator
    jsd_real_mixture: float
    identity_residual: float   # |value - (-log4 + 2*jsd_real_mixture)|
    equilibrium_gap: float     # value - (-log4); zero iff mixture matches p_real
    ok: bool


def check_theorem(p_real, pg1, pg2, tol: float = 1e-10) -> TheoremReport:
    """Verify V(D*) = -log4 + 2*JSD(p_real, mixture) on one triple.

    The value sits at its global minimum -log 4 exactly when the mixture
    equals the real joint; the gap above -log 4 is twice the divergence.
    ok requires the identity residual below tol and agreement between
    "gap below tol" and "divergence below tol/2".
    """
    d_star = optimal_discriminator(p_real, pg1, pg2)
    v = value_function(d_star, p_real, pg1, pg2)
    div = jsd(p_real, mixture(pg1, pg2))
    residual = abs(v - (-LOG4 + 2.0 * div))
    gap = v + LOG4
    ok = residual < tol and ((abs(gap) < tol) == (2.0 * div < tol))
    return TheoremReport(v, div, residual, gap, ok)


def augmented_value(d, p_real, pg1, pg2) -> float:
    """Value plus the two generator-to-real divergences.

    Adding JSD(pg1, p_real) and JSD(pg2, p_real) removes the spurious
    minima where only the mixture matches the real joint: the augmented
    value reaches -log 4 exactly when both generators match it.
    """
    return (value_function(d, p_real, pg1, pg2)
            + jsd(_dist(pg1), _dist(p_real)) + jsd(_dist(pg2), _dist(p_real)))
