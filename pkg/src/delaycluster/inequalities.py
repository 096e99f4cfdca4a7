"""Randomised two-sided checks of the elementary inequalities behind the cluster estimate."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from ._common import DEFAULT_SEED, DomainError, stream

ULP = 2.0**-52
SLACK = 8 * ULP
LOG_RANGE = (-6.0, 6.0)  # magnitudes are drawn log-uniformly from [1e-6, 1e6]

_INEQ_KEY = 201
_HOELDER_KEY = 202


@dataclass(frozen=True)
class InequalityCheck:
    name: str
    trials: int
    violations: int
    worst_ratio: float  # largest lhs / rhs seen; <= 1 means no violation

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "trials": self.trials,
            "violations": self.violations,
            "worst_ratio": self.worst_ratio,
        }


@dataclass(frozen=True)
class SuiteReport:
    checks: tuple[InequalityCheck, ...]

    @property
    def violations(self) -> int:
        return sum(c.violations for c in self.checks)

    @property
    def passed(self) -> bool:
        return self.violations == 0

    def to_dict(self) -> dict:
        return {"violations": self.violations, "checks": [c.to_dict() for c in self.checks]}


def _log_uniform(rng, size):
    return 10.0 ** rng.uniform(*LOG_RANGE, size)


def _check(name: str, lhs: np.ndarray, rhs: np.ndarray, slack: float = SLACK) -> InequalityCheck:
    bad = lhs > rhs * (1.0 + slack)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(rhs > 0, lhs / rhs, np.where(lhs > 0, np.inf, 0.0))
    return InequalityCheck(name, lhs.size, int(bad.sum()), float(ratio.max()))


def sqrt_shift_sides(u):
    """(sqrt(1 + U) - 1)^4 and U^4 / 16, for U >= 0."""
    u = np.asarray(u, dtype=float)
    # sqrt(1+U) - 1 written without cancellation
    d = u / (np.sqrt(1.0 + u) + 1.0)
    return d**4, u**4 / 16.0


def product_shift_sides(x, y):
    """(xy - 1)^4 and 8((x - 1)^4 y^4 + (y - 1)^4), for x, y >= 0."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    return (x * y - 1.0) ** 4, 8.0 * ((x - 1.0) ** 4 * y**4 + (y - 1.0) ** 4)


def convexity_sides(a, b, c):
    """(a + b + c)^4 and 27 (a^4 + b^4 + c^4)."""
    a, b, c = (np.asarray(v, dtype=float) for v in (a, b, c))
    return (a + b + c) ** 4, 27.0 * (a**4 + b**4 + c**4)


def product_identity_residual(x, y):
    """|xy - 1 - ((x-1)(y-1) + (x-1) + (y-1))| and the magnitude it should be compared to."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    lhs = x * y - 1.0
    rhs = (x - 1.0) * (y - 1.0) + (x - 1.0) + (y - 1.0)
    scale = np.maximum.reduce([np.abs(x * y), np.abs((x - 1.0) * (y - 1.0)), np.abs(x), np.abs(y), np.ones_like(x)])
    return np.abs(lhs - rhs), scale


def inequality_suite(trials: int = 10_000, seed: int = DEFAULT_SEED) -> SuiteReport:
    if trials < 1:
        raise DomainError(f"trials must be positive, got {trials}")
    rng = stream(seed, _INEQ_KEY)
    u = _log_uniform(rng, trials)
    x, y = _log_uniform(rng, trials), _log_uniform(rng, trials)
    signs = rng.choice([-1.0, 1.0], size=(3, trials))
    abc = signs * _log_uniform(rng, (3, trials))
    xi, yi = _log_uniform(rng, trials), _log_uniform(rng, trials)
    resid, scale = product_identity_residual(xi, yi)
    # the identity is an equation: its residual must be rounding-sized relative to the largest term
    identity = InequalityCheck(
        "product_identity",
        trials,
        int((resid > SLACK * scale).sum()),
        float((resid / (scale * ULP)).max()),
    )
    return SuiteReport(
        (
            _check("sqrt_shift", *sqrt_shift_sides(u)),
            _check("product_shift", *product_shift_sides(x, y)),
            _check("convexity_27", *convexity_sides(*abc)),
            identity,
        )
    )


@dataclass(frozen=True)
class HoelderInstance:
    """A finite product space with local functions.

    ``weights[x]`` is the probability vector of site ``x``; ``supports[i]``
    is the sorted tuple of sites f_i depends on; ``values[i]`` is an array
    indexed by the points of those sites, in support order.
    """

    weights: tuple[np.ndarray, ...]
    supports: tuple[tuple[int, ...], ...]
    values: tuple[np.ndarray, ...]

    def coverage(self) -> list[int]:
        return [sum(x in s for s in self.supports) for x in range(len(self.weights))]

    def admissible(self, rhos) -> bool:
        loads = [sum(1.0 / r for r, s in zip(rhos, self.supports) if x in s) for x in range(len(self.weights))]
        return all(load <= 1.0 + 1e-12 for load in loads)


def random_instance(rng, max_sites: int = 4, max_points: int = 3, max_functions: int = 4) -> HoelderInstance:
    n_sites = int(rng.integers(1, max_sites + 1))
    weights = tuple(rng.dirichlet(np.ones(int(rng.integers(1, max_points + 1)))) for _ in range(n_sites))
    supports, values = [], []
    for _ in range(int(rng.integers(1, max_functions + 1))):
        mask = rng.random(n_sites) < 0.5
        mask[rng.integers(n_sites)] = True
        sup = tuple(int(x) for x in np.flatnonzero(mask))
        shape = tuple(weights[x].size for x in sup)
        vals = rng.standard_normal(shape)
        if rng.random() < 0.3:
            vals = np.abs(vals)
        supports.append(sup)
        values.append(vals)
    return HoelderInstance(weights, tuple(supports), tuple(values))


def hoelder_sides(inst: HoelderInstance, rhos) -> tuple[float, float]:
    """|int prod f_i| and prod (int |f_i|^rho_i)^(1/rho_i), by exact enumeration."""
    sizes = [w.size for w in inst.weights]
    lhs_terms = []
    for e in itertools.product(*(range(s) for s in sizes)):
        mass = math.prod(inst.weights[x][e[x]] for x in range(len(sizes)))
        fprod = math.prod(float(v[tuple(e[x] for x in sup)]) for sup, v in zip(inst.supports, inst.values))
        lhs_terms.append(mass * fprod)
    rhs = 1.0
    for sup, v, rho in zip(inst.supports, inst.values, rhos):
        terms = []
        for idx in itertools.product(*(range(sizes[x]) for x in sup)):
            mass = math.prod(inst.weights[x][k] for x, k in zip(sup, idx))
            terms.append(mass * abs(float(v[idx])) ** rho)
        rhs *= math.fsum(terms) ** (1.0 / rho)
    return abs(math.fsum(lhs_terms)), rhs


def coverage_exponents(inst: HoelderInstance) -> list[float]:
    """rho_i = largest number of functions covering any site of X_i."""
    cov = inst.coverage()
    return [float(max(cov[x] for x in sup)) for sup in inst.supports]


def rescaled_exponents(inst: HoelderInstance, rng) -> list[float]:
    """Random positive rates scaled so the most loaded site has sum of 1/rho exactly 1."""
    r = rng.uniform(0.05, 1.0, len(inst.supports))
    load = max(sum(ri for ri, s in zip(r, inst.supports) if x in s) for x in range(len(inst.weights)))
    return [float(load / ri) for ri in r]


def verify_generalized_hoelder(trials: int = 10_000, seed: int = DEFAULT_SEED, tol: float = 1e-12) -> SuiteReport:
    """Check the Hoelder inequality for local functions on random finite product spaces.

    Three exponent choices are tried per instance: coverage counts, random
    rescaled rates, and rho = 4 for all functions (admissible because no
    site is covered more than four times).
    """
    if trials < 1:
        raise DomainError(f"trials must be positive, got {trials}")
    rng = stream(seed, _HOELDER_KEY)
    results = {"coverage": [], "rescaled": [], "rho4": []}
    for _ in range(trials):
        inst = random_instance(rng)
        choices = {
            "coverage": coverage_exponents(inst),
            "rescaled": rescaled_exponents(inst, rng),
            "rho4": [4.0] * len(inst.supports),
        }
        for name, rhos in choices.items():
            if not inst.admissible(rhos):
                raise AssertionError(f"{name} exponents violate the covering condition")
            results[name].append(hoelder_sides(inst, rhos))
    checks = []
    for name, sides in results.items():
        arr = np.array(sides)
        checks.append(_check(f"hoelder_{name}", arr[:, 0], arr[:, 1], tol))
    return SuiteReport(tuple(checks))
