"""Empirical decorrelation and central-limit checks along simulated paths."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Callable

import numpy as np
from scipy.integrate import trapezoid
from statsmodels.stats.diagnostic import normal_ad

from ._common import DomainError
from .ou import OUParams, SamplePath
from .sim import DriftSpec, SimConfig, simulate_delay_batch

Observable = Callable[[np.ndarray], np.ndarray]

# A fit whose decay over the fitted span is below this is reported as low-decay.
LOW_DECAY = 0.05


class UnresolvedTailWarning(RuntimeWarning):
    """The covariance never dropped into its noise band within max_lag."""


@dataclass(frozen=True)
class FitResult:
    theta1: float
    theta2: float
    r2: float
    n_lags: int
    available: bool
    low_decay: bool


@dataclass
class CovarianceCurve:
    lags: np.ndarray
    cov: np.ndarray
    se: np.ndarray

    def __post_init__(self):
        self.lags = np.asarray(self.lags, dtype=float)
        self.cov = np.asarray(self.cov, dtype=float)
        self.se = np.asarray(self.se, dtype=float)
        if not (self.lags.shape == self.cov.shape == self.se.shape) or self.lags.ndim != 1:
            raise DomainError("lags, cov and se must be 1-d arrays of equal length")
        if self.lags[0] != 0 or np.any(np.diff(self.lags) <= 0):
            raise DomainError("lags must start at 0 and increase strictly")

    @cached_property
    def fit(self) -> FitResult:
        return fit_exponential(self)

    @property
    def theta1(self) -> float:
        return self.fit.theta1

    @property
    def theta2(self) -> float:
        return self.fit.theta2

    @property
    def r2(self) -> float:
        return self.fit.r2

    def to_csv(self, path) -> None:
        rows = ["lag,cov,se"] + [f"{l:.17g},{c:.17g},{s:.17g}" for l, c, s in zip(self.lags, self.cov, self.se)]
        Path(path).write_text("\n".join(rows) + "\n")


def _as_series(paths) -> list[SamplePath]:
    if isinstance(paths, SamplePath):
        return [paths]
    paths = list(paths)
    if not paths:
        raise DomainError("no paths given")
    dts = {p.dt for p in paths}
    if len(dts) != 1:
        raise DomainError("all paths must share the same dt")
    return paths


def _batch_lag_sums(fc: np.ndarray, gc: np.ndarray, L: int) -> np.ndarray:
    """Sums of fc[i] * gc[i + k] over consecutive batches of L indices i, for k = 0..L.

    Only batches whose lagged partner fits inside the series are used.
    Returns shape (n_batches, L + 1).
    """
    nb = (fc.size - L) // L
    if nb < 1:
        return np.empty((0, L + 1))
    size = 1 << int(math.ceil(math.log2(3 * L + 1)))
    fb = fc[: nb * L].reshape(nb, L)
    idx = np.arange(nb)[:, None] * L + np.arange(2 * L)[None, :]
    gb = gc[np.minimum(idx, gc.size - 1)]
    gb[idx >= gc.size] = 0.0
    spec = np.conj(np.fft.rfft(fb, size, axis=1)) * np.fft.rfft(gb, size, axis=1)
    return np.fft.irfft(spec, size, axis=1)[:, : L + 1]


def estimate_covariance(paths, f: Observable, g: Observable, max_lag: float) -> CovarianceCurve:
    """Centred cross-covariance cov(f(x_t), g(x_{t+s})) for s on the path grid up to ``max_lag``.

    ``paths`` is one :class:`SamplePath` or several independent ones sharing
    a grid spacing; they are centred with their pooled means.  Standard
    errors come from batch means with batch length ``max_lag``.
    """
    series = _as_series(paths)
    dt = series[0].dt
    L = int(round(max_lag / dt))
    if L < 1:
        raise DomainError(f"max_lag={max_lag} is shorter than dt={dt}")
    total = sum(len(s) for s in series) * dt
    if total < 20 * max_lag:
        raise DomainError(f"path time {total:.6g} is below 20 * max_lag = {20 * max_lag:.6g}")
    fs = [np.asarray(f(s.values), dtype=float) for s in series]
    gs = [np.asarray(g(s.values), dtype=float) for s in series]
    fbar = np.mean(np.concatenate(fs))
    gbar = np.mean(np.concatenate(gs))
    sums = np.concatenate([_batch_lag_sums(fv - fbar, gv - gbar, L) for fv, gv in zip(fs, gs)])
    if sums.shape[0] < 2:
        raise DomainError("paths too short for two covariance batches; lower max_lag")
    means = sums / L
    cov = means.mean(axis=0)
    se = means.std(axis=0, ddof=1) / math.sqrt(means.shape[0])
    return CovarianceCurve(dt * np.arange(L + 1), cov, se)


def fit_exponential(curve: CovarianceCurve) -> FitResult:
    """Weighted least squares of ln|cov| against the lag.

    Uses the leading run of lags where |cov| exceeds three standard errors.
    Weights are (cov / se)^2, the inverse variance of ln|cov| to first
    order; when some se is zero, weights are uniform.
    """
    above = np.abs(curve.cov) > 3.0 * curve.se
    n = int(np.argmin(above)) if not above.all() else above.size
    if n < 4:
        return FitResult(math.nan, math.nan, math.nan, n, False, False)
    s = curve.lags[:n]
    y = np.log(np.abs(curve.cov[:n]))
    se = curve.se[:n]
    w = np.ones(n) if np.any(se == 0) else (curve.cov[:n] / se) ** 2
    sw = w.sum()
    sbar = (w * s).sum() / sw
    ybar = (w * y).sum() / sw
    sxx = (w * (s - sbar) ** 2).sum()
    slope = (w * (s - sbar) * (y - ybar)).sum() / sxx
    intercept = ybar - slope * sbar
    ss_res = (w * (y - intercept - slope * s) ** 2).sum()
    ss_tot = (w * (y - ybar) ** 2).sum()
    r2 = 1.0 if ss_tot <= 1e-30 * max(1.0, (w * y**2).sum()) else 1.0 - ss_res / ss_tot
    theta2 = float(-slope)
    low = theta2 * (s[-1] - s[0]) < LOW_DECAY
    return FitResult(math.exp(float(intercept)), theta2, float(min(max(r2, 0.0), 1.0)), n, True, bool(low))


@dataclass(frozen=True)
class GreenKuboResult:
    value: float
    integral: float
    tail: float
    tail_resolved: bool


def green_kubo_variance(curve: CovarianceCurve) -> GreenKuboResult:
    """Asymptotic variance 2 * int_0^inf cov(s) ds of a time average.

    The curve is integrated by the trapezoid rule up to its last lag and the
    fitted exponential supplies the remainder.  If the covariance never
    enters its noise band the tail is unresolved and a warning is issued.
    """
    integral = float(trapezoid(curve.cov, curve.lags))
    fit = curve.fit
    tail = 0.0
    if fit.available and fit.theta2 > 0:
        last = curve.lags[-1]
        tail = math.copysign(fit.theta1, curve.cov[0]) * math.exp(-fit.theta2 * float(last)) / fit.theta2
    resolved = bool(np.any(np.abs(curve.cov) <= 3.0 * curve.se))
    if not resolved:
        warnings.warn("covariance is still significant at the last lag", UnresolvedTailWarning, stacklevel=2)
    return GreenKuboResult(float(2.0 * (integral + tail)), integral, float(tail), resolved)


@dataclass(frozen=True)
class CLTReport:
    empirical_variance: float
    green_kubo: float
    ad_pvalue: float
    long_run_mean: float
    replicas: int
    horizon: float
    statistics: np.ndarray = field(repr=False)

    @property
    def relative_gap(self) -> float:
        if self.green_kubo == 0:
            return 0.0 if self.empirical_variance == 0 else math.inf
        return abs(self.empirical_variance - self.green_kubo) / self.green_kubo

    def to_dict(self) -> dict:
        return {
            "empirical_variance": self.empirical_variance,
            "green_kubo": self.green_kubo,
            "relative_gap": self.relative_gap,
            "ad_pvalue": None if math.isnan(self.ad_pvalue) else self.ad_pvalue,
            "long_run_mean": self.long_run_mean,
            "replicas": self.replicas,
            "horizon": self.horizon,
        }


def clt_check(
    p: OUParams,
    spec: DriftSpec,
    cfg: SimConfig,
    f: Observable,
    replicas: int = 500,
    max_lag: float | None = None,
    chunk: int = 100,
) -> CLTReport:
    """Spread of t^{-1/2} int_0^t (f(x_s) - mean) ds across independent replicas.

    The mean is the pooled long-run average of f over all replicas.  The
    reference value is the Green-Kubo integral of the covariance curve
    estimated from the same replicas, with ``max_lag`` defaulting to 10/lam.
    """
    if replicas < 200:
        raise DomainError(f"need at least 200 replicas, got {replicas}")
    m = spec.window_steps(cfg.dt)
    fvals = []
    for lo in range(0, replicas, chunk):
        values, _ = simulate_delay_batch(p, spec, cfg, range(lo, min(lo + chunk, replicas)))
        fvals.append(np.asarray(f(values[:, m:]), dtype=float))
    F = np.concatenate(fvals)
    t = (F.shape[1] - 1) * cfg.dt
    mean = float(F.mean())
    stats = (trapezoid(F, dx=cfg.dt, axis=1) - mean * t) / math.sqrt(t)
    if np.all(F == F[0, 0]):
        # a constant observable: the centred integral is zero, not rounding noise
        stats = np.zeros(replicas)
    emp = float(np.var(stats, ddof=1))
    lag = 10.0 / p.lam if max_lag is None else max_lag
    lag = min(lag, t / 4)
    curve = estimate_covariance(
        [SamplePath(0.0, cfg.dt, row) for row in F], lambda v: v, lambda v: v, lag
    )
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", UnresolvedTailWarning)
        gk = green_kubo_variance(curve).value
    pval = math.nan
    if np.ptp(stats) > 0:
        pval = float(normal_ad(stats)[1])
    return CLTReport(emp, gk, pval, mean, replicas, t, stats)


def observable(name: str) -> Observable:
    """Named observables for the command line."""
    table = {
        "identity": lambda v: v,
        "square": lambda v: v**2,
        "positive": lambda v: (v >= 0).astype(float),
        "zero": lambda v: np.zeros_like(v),
    }
    if name not in table:
        raise DomainError(f"unknown observable {name!r}; expected one of {sorted(table)}")
    return table[name]

