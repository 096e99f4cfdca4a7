"""Maximisation of delta -> b1(delta) over (ln 7 / lambda, inf)."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ._common import DomainError
from .bounds import b1_of_delta
from .ou import LN7, OUParams

GRID_POINTS = 40
INVPHI = (math.sqrt(5.0) - 1.0) / 2.0
TABLE_LAMBDAS = (0.01, 0.1, 0.5, 1.0, 2.0, 5.0, 10.0, 100.0)


class OptimizationError(RuntimeError):
    pass


@dataclass(frozen=True)
class OptimumRecord:
    lam: float
    delta_star: float
    b1_star: float
    evaluations: int


@dataclass(frozen=True)
class ConjectureReport:
    delta_lambda_mean: float
    delta_lambda_spread: float
    b1_over_sqrt_lambda_mean: float
    b1_over_sqrt_lambda_spread: float
    b1_sqrt_delta_mean: float
    b1_sqrt_delta_spread: float


def optimize_delta(p: OUParams, rel_tol: float = 1e-9) -> OptimumRecord:
    """Log-grid scan followed by golden-section refinement of the best cell.

    The objective is assumed unimodal.  A warning is issued if two
    non-adjacent grid cells tie, or if b1 is still increasing at the upper
    end of the scan.
    """
    if not 1e-12 <= rel_tol <= 1e-2:
        raise DomainError(f"rel_tol must lie in [1e-12, 1e-2], got {rel_tol}")
    lam = p.lam
    calls = 0

    def objective(d):
        nonlocal calls
        calls += 1
        try:
            return b1_of_delta(d, p)
        except (DomainError, ValueError, OverflowError):
            return -math.inf

    lo_edge = LN7 / lam * (1.0 + 1e-6)
    hi_edge = 100.0 / lam
    grid = np.geomspace(lo_edge, hi_edge, GRID_POINTS)
    values = np.array([objective(d) for d in grid])
    finite = np.isfinite(values)
    if not finite.any():
        raise OptimizationError(f"b1 is not finite anywhere on the scan grid for lambda={lam}")
    best = int(np.nanargmax(np.where(finite, values, -np.inf)))
    ties = np.flatnonzero(values >= values[best] * (1.0 - 1e-12))
    if np.any(np.abs(ties - best) > 1):
        warnings.warn(f"non-adjacent grid cells tie for the maximum at lambda={lam}", stacklevel=2)
    if objective(hi_edge) >= objective(hi_edge * (1.0 - 1e-3)):
        warnings.warn(f"b1 is not decreasing at the upper scan bound for lambda={lam}", stacklevel=2)

    a = grid[max(best - 1, 0)]
    b = grid[min(best + 1, GRID_POINTS - 1)]
    c = b - INVPHI * (b - a)
    d = a + INVPHI * (b - a)
    fc, fd = objective(c), objective(d)
    while (b - a) > rel_tol * 0.5 * (a + b):
        if fc > fd:
            b, d, fd = d, c, fc
            c = b - INVPHI * (b - a)
            fc = objective(c)
        else:
            a, c, fc = c, d, fd
            d = a + INVPHI * (b - a)
            fd = objective(d)
    delta_star = float(0.5 * (a + b))
    return OptimumRecord(lam, delta_star, float(b1_of_delta(delta_star, p)), calls + 1)


def reproduce_table(lambdas: Sequence[float] = TABLE_LAMBDAS, sigma: float = 1.0, rel_tol: float = 1e-9):
    # sigma plays no role in b1; it only completes the OUParams
    return [optimize_delta(OUParams(lam, sigma), rel_tol) for lam in lambdas]


def _mean_spread(x):
    x = np.asarray(x, dtype=float)
    mean = float(np.mean(x))
    return mean, float((x.max() - x.min()) / abs(mean))


def conjecture_check(records: Sequence[OptimumRecord]) -> ConjectureReport:
    """Means and relative spreads (max - min over mean) of the scale-free products."""
    if len(records) < 2:
        raise DomainError("need at least two records")
    dl = [r.delta_star * r.lam for r in records]
    bl = [r.b1_star / math.sqrt(r.lam) for r in records]
    bd = [r.b1_star * math.sqrt(r.delta_star) for r in records]
    return ConjectureReport(*_mean_spread(dl), *_mean_spread(bl), *_mean_spread(bd))
