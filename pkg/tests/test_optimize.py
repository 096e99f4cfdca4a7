import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from delaycluster._common import DomainError
from delaycluster.bounds import b1_of_delta
from delaycluster.optimize import (
    TABLE_LAMBDAS,
    conjecture_check,
    optimize_delta,
    reproduce_table,
)
from delaycluster.ou import LN7, OUParams

from oracles import (
    B1_STAR_OVER_SQRT_LAMBDA,
    B1_STAR_SQRT_DELTA,
    DELTA_STAR_LAMBDA,
    PRINTED_B1_SQRT_DELTA,
    PRINTED_DELTA_LAMBDA,
    PRINTED_TABLE,
)


def _last_digit_unit(printed: str) -> float:
    decimals = len(printed.split(".")[1]) if "." in printed else 0
    return 10.0**-decimals


@pytest.fixture(scope="module")
def table():
    return reproduce_table(TABLE_LAMBDAS)


def test_unit_rate_optimum():
    r = optimize_delta(OUParams(1.0, 1.0))
    assert r.delta_star == pytest.approx(DELTA_STAR_LAMBDA, rel=1e-7)
    assert r.b1_star == pytest.approx(B1_STAR_OVER_SQRT_LAMBDA, rel=1e-14)
    assert r.b1_star == b1_of_delta(r.delta_star, OUParams(1.0, 1.0))
    assert r.delta_star > LN7
    assert r.evaluations > 40


def test_printed_table_to_printed_precision(table):
    # some printed entries are truncated rather than rounded, so allow one unit in the last digit
    for rec in table:
        for value, printed in zip((rec.delta_star, rec.b1_star), PRINTED_TABLE[rec.lam]):
            assert abs(value - float(printed)) < _last_digit_unit(printed), (rec, printed)


@pytest.mark.parametrize("lam,delta,b1", [(1.0, 2.22, 0.0325), (2.0, 1.11, 0.0460), (0.01, 222.0, 0.00325), (10.0, 0.222, 0.103)])
def test_rows_within_one_percent(lam, delta, b1):
    r = optimize_delta(OUParams(lam, 1.0))
    assert r.delta_star == pytest.approx(delta, rel=0.01)
    assert r.b1_star == pytest.approx(b1, rel=0.01)


def test_singleton_table_matches_direct_call():
    assert reproduce_table([1.0]) == [optimize_delta(OUParams(1.0, 1.0))]


def test_deterministic():
    p = OUParams(3.7, 0.4)
    assert optimize_delta(p) == optimize_delta(p)


def test_conjecture_products(table):
    rep = conjecture_check(table)
    assert rep.delta_lambda_mean == pytest.approx(PRINTED_DELTA_LAMBDA, abs=5e-7)
    assert rep.delta_lambda_mean == pytest.approx(DELTA_STAR_LAMBDA, rel=1e-7)
    assert rep.b1_over_sqrt_lambda_mean == pytest.approx(B1_STAR_OVER_SQRT_LAMBDA, rel=1e-12)
    assert rep.b1_sqrt_delta_mean == pytest.approx(PRINTED_B1_SQRT_DELTA, abs=5e-9)
    assert rep.b1_sqrt_delta_mean == pytest.approx(B1_STAR_SQRT_DELTA, rel=1e-7)
    for spread in (rep.delta_lambda_spread, rep.b1_over_sqrt_lambda_spread, rep.b1_sqrt_delta_spread):
        assert spread <= 1e-6


def test_b1_coefficient_is_consistent_with_other_printed_values(table):
    """The square-root coefficient that agrees with the printed rows and the b1 sqrt(delta) product."""
    rep = conjecture_check(table)
    implied = PRINTED_B1_SQRT_DELTA / math.sqrt(PRINTED_DELTA_LAMBDA)
    assert rep.b1_over_sqrt_lambda_mean == pytest.approx(implied, rel=1e-6)
    assert rep.b1_over_sqrt_lambda_mean == pytest.approx(0.03255108, abs=5e-9)


def test_four_times_the_rate():
    a = optimize_delta(OUParams(0.7, 1.0), rel_tol=1e-10)
    b = optimize_delta(OUParams(2.8, 1.0), rel_tol=1e-10)
    assert a.delta_star / b.delta_star == pytest.approx(4.0, rel=1e-8)
    assert b.b1_star / a.b1_star == pytest.approx(2.0, rel=1e-12)


def test_conjecture_needs_two_records():
    with pytest.raises(DomainError):
        conjecture_check([optimize_delta(OUParams(1.0, 1.0))])


@pytest.mark.parametrize("tol", [1e-13, 0.1])
def test_rel_tol_domain(tol):
    with pytest.raises(DomainError):
        optimize_delta(OUParams(1.0, 1.0), rel_tol=tol)


@settings(max_examples=25)
@given(st.floats(-3, 3), st.sampled_from([1e-6, 1e-9, 1e-11]))
def test_optimality_certificate(log_lam, tol):
    p = OUParams(10.0**log_lam, 1.0)
    r = optimize_delta(p, rel_tol=tol)
    best = r.b1_star
    # the maximum is flat to second order, so neighbours tie up to rounding of the objective
    for d in (r.delta_star * (1 - tol), r.delta_star * (1 + tol)):
        assert b1_of_delta(d, p) <= best * (1 + 1e-14)


@settings(max_examples=25)
@given(st.floats(-3, 3))
def test_scaling_equivariance(log_lam):
    # rounding of b1 near a quadratic maximum limits the location to about sqrt(ulp)
    tol = 1e-9
    floor = 3e-8
    r = optimize_delta(OUParams(10.0**log_lam, 1.0), rel_tol=tol)
    assert r.delta_star * r.lam == pytest.approx(DELTA_STAR_LAMBDA, rel=max(10 * tol, floor))
