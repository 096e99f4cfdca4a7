"""Explicit constants behind the cluster estimate |Gamma_tau| <= eps^|tau|.

All formulas take a :class:`HypothesisConstants` triple (delta, C_P, M_delta)
so that any reference diffusion satisfying the Poincare and L^8
hypercontractivity assumptions can reuse them.  :func:`hypothesis_constants`
builds the triple for the OU reference process.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from decimal import Decimal, getcontext

from scipy.optimize import brentq

from ._common import DomainError
from .ou import LN7, OUParams, m_delta


def _constants():
    getcontext().prec = 40
    fact8 = Decimal(40320)
    e = Decimal(1).exp()
    root8 = fact8 ** (Decimal(1) / Decimal(8))
    return (
        float(fact8.sqrt() * e * e),  # sqrt(8!) e^2, B_j prefactor
        float(2 * e.sqrt() * root8),  # 2 sqrt(e) (8!)^(1/8)
        float((e / 2).sqrt() * root8),  # sqrt(e/2) (8!)^(1/8)
        float(2 * (2 * e).sqrt() * root8),  # 2 sqrt(2e) (8!)^(1/8)
    )


BJ_PREFACTOR, B_EPS_DENOM, EPS0_B_BRANCH, B1_DENOM = _constants()
INV_SQRT8 = 1.0 / math.sqrt(8.0)

# a * b**2 <= 1/8 is tested with a few ulps of slack: b_eps is built so that the
# product equals 1/8 exactly in real arithmetic on its second branch.
_ROUNDING = 8 * 2.0**-52


class EpsilonRangeWarning(UserWarning):
    """epsilon exceeds epsilon_0, outside the range where eta is defined."""


@dataclass(frozen=True)
class HypothesisConstants:
    delta: float
    c_p: float
    m_delta: float

    def __post_init__(self):
        for name in ("delta", "c_p"):
            v = getattr(self, name)
            if not (v > 0 and math.isfinite(v)):
                raise DomainError(f"{name} must be positive and finite, got {v}")
        if not (self.m_delta >= 1 and math.isfinite(self.m_delta)):
            raise DomainError(f"m_delta must be finite and >= 1, got {self.m_delta}")


@dataclass(frozen=True)
class BoundReport:
    epsilon: float
    epsilon0: float
    a_c: float
    a_eps: float
    b_eps: float
    beta_at_a: float
    bj_at: float
    cj_at: float


def poincare_constant(p: OUParams) -> float:
    return 1.0 / (2.0 * p.lam)


def hypothesis_constants(p: OUParams, delta: float) -> HypothesisConstants:
    """(delta, C_P, M_delta) for the OU reference process."""
    m = m_delta(delta, p)
    if math.isinf(m):
        raise DomainError(
            f"M_delta is infinite: need delta > ln(7)/lambda = {LN7 / p.lam:.6g}, got {delta}"
        )
    return HypothesisConstants(delta, poincare_constant(p), m)


def beta_delta(t: float, h: HypothesisConstants) -> float:
    """Exponential bound 2 M e^{-(t - 2 delta)/C_P} on ||p(t) - 1|| in L^8, for t >= 2 delta."""
    if t < 2 * h.delta:
        raise DomainError(f"beta_delta needs t >= 2 delta = {2 * h.delta}, got {t}")
    return 2.0 * h.m_delta * math.exp(-(t - 2.0 * h.delta) / h.c_p)


def condition_c_holds(a: float, b_sup: float) -> bool:
    if a <= 0 or b_sup < 0:
        raise DomainError("condition (c) needs a > 0 and b_sup >= 0")
    return a * b_sup**2 <= 0.125 * (1.0 + _ROUNDING)


def bj_bound(a: float, b_sup: float, h: HypothesisConstants) -> float:
    """sqrt(8!) e^2 M^{7/2} (a ||b||^2)^2, valid for a >= 2 delta under condition (c)."""
    if a < 2 * h.delta:
        raise DomainError(f"bj_bound: a={a} < 2 delta={2 * h.delta}")
    if not condition_c_holds(a, b_sup):
        raise DomainError(f"bj_bound: condition (c) fails, a*b^2 = {a * b_sup**2:.6g} > 1/8")
    return BJ_PREFACTOR * h.m_delta**3.5 * (a * b_sup**2) ** 2


def cj_bound(a: float, h: HypothesisConstants) -> float:
    beta4 = beta_delta(a, h) ** 4
    m4 = h.m_delta**4
    return m4 * (4.0 + 2.0 * m4 * (4.0 + beta4)) * beta4


def _log_cj_target(eps: float, h: HypothesisConstants) -> float:
    """log of (1/16M^4)(2 + 1/M^4)(sqrt(1 + eps^4/(32(1+2M^4)^2)) - 1).

    Evaluated in log space so that tiny eps neither cancels nor underflows.
    """
    m4 = h.m_delta**4
    log_u = 4.0 * math.log(eps) - math.log(32.0 * (1.0 + 2.0 * m4) ** 2)
    u = math.exp(log_u)
    # sqrt(1+u) - 1 == u / (sqrt(1+u) + 1)
    log_root_minus_one = log_u - math.log(math.sqrt(1.0 + u) + 1.0)
    return math.log((2.0 + 1.0 / m4) / (16.0 * m4)) + log_root_minus_one


def a_c_of_eps(eps: float, h: HypothesisConstants) -> float:
    """Block length beyond which the C_j bound drops below eps^4/16."""
    if not eps > 0:
        raise DomainError(f"eps must be positive, got {eps}")
    return 2.0 * h.delta - 0.25 * h.c_p * _log_cj_target(eps, h)


def a_eps(eps: float, h: HypothesisConstants) -> float:
    if not eps > 0:
        raise DomainError(f"eps must be positive, got {eps}")
    x = 0.25 * h.c_p * _log_cj_target(eps, h)
    return 2.0 * h.delta - min(x, 0.0)


def b_eps(eps: float, h: HypothesisConstants) -> float:
    """Largest drift amplitude for which the cluster estimate holds at level eps."""
    num = min(eps / (B_EPS_DENOM * h.m_delta**0.875), INV_SQRT8)
    return num / math.sqrt(a_eps(eps, h))


def b_eps_simplified(eps: float, h: HypothesisConstants) -> float:
    """Closed form of b_eps valid for eps <= epsilon0, where neither clamp is active."""
    if not eps > 0:
        raise DomainError(f"eps must be positive, got {eps}")
    inner = 1.0 - h.c_p / (8.0 * h.delta) * _log_cj_target(eps, h)
    return eps / (B1_DENOM * math.sqrt(h.delta) * h.m_delta**0.875 * math.sqrt(inner))


def epsilon0(h: HypothesisConstants) -> float:
    m = h.m_delta
    first = 2.0**2.5 * m**2 * (8.0 * m**8 + 2.0 * m**4 + 1.0) ** 0.25
    second = EPS0_B_BRANCH * m**0.875
    return min(first, second)


def eta_inverse(b_sup: float, h: HypothesisConstants) -> float:
    """The eps in (0, epsilon0] with b_eps(eps) == b_sup, found by root bracketing."""
    eps0 = epsilon0(h)
    b_max = b_eps(eps0, h)
    if not (0 < b_sup <= b_max):
        raise DomainError(f"eta is defined on (0, {b_max:.6g}], got {b_sup}")
    if b_sup == b_max:
        return eps0
    # b_eps(eps) <= eps / (B1_DENOM sqrt(delta) M^{7/8}), so this lower end lies below the root
    lo = 0.5 * b_sup * B1_DENOM * math.sqrt(h.delta) * h.m_delta**0.875
    lo = min(lo, 0.5 * eps0)
    return brentq(lambda e: b_eps(e, h) - b_sup, lo, eps0, xtol=1e-300, rtol=1e-14, maxiter=500)


def b1_of_delta(delta: float, p: OUParams) -> float:
    """Admissible drift amplitude at eps = 1 as a function of delta, for the OU reference."""
    if p.lam * delta <= LN7:
        raise DomainError(
            f"b1 needs delta > ln(7)/lambda = {LN7 / p.lam:.6g}, got {delta}"
        )
    m = m_delta(delta, p)
    c_p = poincare_constant(p)
    m4 = m**4
    log_arg = (2.0 * m4 + 1.0) / (16.0 * m**8) * (
        math.sqrt(1.0 + 1.0 / (32.0 * (1.0 + 2.0 * m4) ** 2)) - 1.0
    )
    inner = delta * m**1.75 * (1.0 - c_p / (8.0 * delta) * math.log(log_arg))
    return inner**-0.5 / B1_DENOM


def bound_report(eps: float, h: HypothesisConstants) -> BoundReport:
    eps0 = epsilon0(h)
    if eps > eps0:
        warnings.warn(
            f"eps={eps:.6g} exceeds epsilon0={eps0:.6g}; eta is undefined there",
            EpsilonRangeWarning,
            stacklevel=2,
        )
    a = a_eps(eps, h)
    b = b_eps(eps, h)
    return BoundReport(
        epsilon=eps,
        epsilon0=eps0,
        a_c=a_c_of_eps(eps, h),
        a_eps=a,
        b_eps=b,
        beta_at_a=beta_delta(a, h),
        bj_at=bj_bound(a, b, h),
        cj_at=cj_bound(a, h),
    )
