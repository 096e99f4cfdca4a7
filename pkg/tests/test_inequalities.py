import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from delaycluster._common import DomainError, stream
from delaycluster.inequalities import (
    HoelderInstance,
    convexity_sides,
    coverage_exponents,
    hoelder_sides,
    inequality_suite,
    product_identity_residual,
    product_shift_sides,
    random_instance,
    rescaled_exponents,
    sqrt_shift_sides,
    verify_generalized_hoelder,
)

nonneg = st.floats(0, 1e6)
real = st.floats(-1e6, 1e6)


class TestElementary:
    def test_sqrt_shift_equality_at_zero(self):
        lhs, rhs = sqrt_shift_sides(0.0)
        assert lhs == rhs == 0.0

    def test_sqrt_shift_fails_below_zero(self):
        # the bound only holds for U >= 0: at U = -1 the left side is 1, the right 1/16
        lhs, rhs = sqrt_shift_sides(-1.0)
        assert lhs == 1.0 and rhs == 1 / 16
        us = np.linspace(-0.99, -0.01, 50)
        lhs, rhs = sqrt_shift_sides(us)
        assert np.all(lhs > rhs)

    def test_sqrt_shift_accurate_for_tiny_u(self):
        lhs, _ = sqrt_shift_sides(1e-12)
        assert lhs == pytest.approx((0.5e-12) ** 4, rel=1e-6)

    @given(nonneg)
    def test_sqrt_shift(self, u):
        lhs, rhs = sqrt_shift_sides(u)
        assert lhs <= rhs * (1 + 1e-14)

    def test_convexity_equality(self):
        lhs, rhs = convexity_sides(1.0, 1.0, 1.0)
        assert lhs == rhs == 81.0

    @given(real, real, real)
    def test_convexity(self, a, b, c):
        lhs, rhs = convexity_sides(a, b, c)
        assert lhs <= rhs * (1 + 1e-14) + 1e-300

    @given(nonneg, nonneg)
    def test_product_shift(self, x, y):
        lhs, rhs = product_shift_sides(x, y)
        assert lhs <= rhs * (1 + 1e-14) + 1e-300

    def test_product_shift_at_one(self):
        assert product_shift_sides(1.0, 1.0) == (0.0, 0.0)

    @given(st.floats(-1e6, 1e6), st.floats(-1e6, 1e6))
    def test_product_identity(self, x, y):
        resid, scale = product_identity_residual(x, y)
        assert resid <= 8 * 2.0**-52 * scale


class TestSuite:
    def test_no_violations(self):
        rep = inequality_suite(10_000)
        assert rep.passed and rep.violations == 0
        assert {c.name for c in rep.checks} == {"sqrt_shift", "product_shift", "convexity_27", "product_identity"}
        assert all(c.trials == 10_000 for c in rep.checks)
        assert all(c.worst_ratio <= 1.0 + 1e-14 for c in rep.checks if c.name != "product_identity")

    def test_deterministic(self):
        assert inequality_suite(200, seed=5) == inequality_suite(200, seed=5)

    def test_rejects_zero_trials(self):
        with pytest.raises(DomainError):
            inequality_suite(0)
        with pytest.raises(DomainError):
            verify_generalized_hoelder(0)


def _instance(weights, supports, values):
    return HoelderInstance(
        tuple(np.asarray(w, dtype=float) for w in weights),
        tuple(tuple(s) for s in supports),
        tuple(np.asarray(v, dtype=float) for v in values),
    )


class TestHoelder:
    def test_single_positive_function_is_equality(self):
        inst = _instance([[0.2, 0.8], [0.5, 0.5]], [(0, 1)], [[[1.0, 2.0], [3.0, 4.0]]])
        lhs, rhs = hoelder_sides(inst, [1.0])
        assert lhs == pytest.approx(rhs, rel=1e-15)
        assert lhs == pytest.approx(0.2 * 0.5 * (1 + 2) + 0.8 * 0.5 * (3 + 4))

    def test_classical_case(self):
        rng = stream(3)
        for _ in range(200):
            w = rng.dirichlet(np.ones(3))
            f, g = rng.normal(size=3), rng.normal(size=3)
            r = rng.uniform(1.05, 20)
            rho = [r, r / (r - 1)]
            inst = _instance([w], [(0,), (0,)], [f, g])
            assert inst.admissible(rho)
            lhs, rhs = hoelder_sides(inst, rho)
            assert lhs <= rhs * (1 + 1e-12)
            direct = abs(np.sum(w * f * g))
            assert lhs == pytest.approx(direct, rel=1e-12, abs=1e-15)

    def test_inadmissible_exponents_detected(self):
        inst = _instance([[1.0]], [(0,), (0,)], [[1.0], [1.0]])
        assert not inst.admissible([1.0, 1.0])
        assert inst.admissible([2.0, 2.0])

    def test_coverage_exponents(self):
        inst = _instance([[1.0], [1.0], [1.0]], [(0, 1), (1,), (1, 2)], [[[1.0]], [1.0], [[1.0]]])
        assert inst.coverage() == [1, 3, 1]
        assert coverage_exponents(inst) == [3.0, 3.0, 3.0]

    @given(st.integers(0, 10_000))
    def test_random_instances(self, seed):
        rng = stream(seed)
        inst = random_instance(rng)
        assert max(inst.coverage()) <= 4
        for rhos in (coverage_exponents(inst), rescaled_exponents(inst, rng), [4.0] * len(inst.supports)):
            assert inst.admissible(rhos)
            lhs, rhs = hoelder_sides(inst, rhos)
            assert lhs <= rhs * (1 + 1e-12)

    def test_rescaled_saturates_worst_site(self):
        rng = stream(8)
        inst = random_instance(rng)
        rhos = rescaled_exponents(inst, rng)
        loads = [sum(1 / r for r, s in zip(rhos, inst.supports) if x in s) for x in range(len(inst.weights))]
        assert max(loads) == pytest.approx(1.0, rel=1e-12)

    def test_full_run(self):
        rep = verify_generalized_hoelder(2000)
        assert rep.passed
        assert [c.name for c in rep.checks] == ["hoelder_coverage", "hoelder_rescaled", "hoelder_rho4"]
        assert all(c.trials == 2000 for c in rep.checks)
        assert math.isfinite(rep.to_dict()["checks"][0]["worst_ratio"])
