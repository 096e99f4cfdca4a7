"""Simulation of the OU reference process and of its delay-drift perturbation.

The perturbed equation is ``dx = (-lam x + sigma b(x on [t - t0, t])) dt + sigma dB``
where ``b`` is a bounded measurable functional of the recent trajectory.
Every drift kind is normalised so that ``amplitude`` equals its sup-norm.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from scipy.signal import lfilter

from ._common import DEFAULT_SEED, DomainError, stream
from .ou import OUParams, SamplePath, ou_step_moments

DRIFT_KINDS = (
    "zero",
    "constant",
    "window_integral_sign",
    "occupation_time",
    "lagged_sign",
    "window_indicator",
)


@dataclass(frozen=True)
class DriftSpec:
    """A delay drift functional.

    ``params`` carries ``lo`` and ``hi`` for the set A = [lo, hi] used by
    ``occupation_time`` (default [0, inf)) and ``window_indicator`` (the
    window must stay inside A; default [-1, 1]).  ``constant`` is a test kind
    returning ``amplitude`` for every window.
    """

    kind: str
    t0: float
    amplitude: float
    params: Mapping[str, float] = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in DRIFT_KINDS:
            raise DomainError(f"unknown drift kind {self.kind!r}; expected one of {DRIFT_KINDS}")
        if not self.t0 > 0:
            raise DomainError(f"t0 must be positive, got {self.t0}")
        if not (self.amplitude >= 0 and math.isfinite(self.amplitude)):
            raise DomainError(f"amplitude must be finite and non-negative, got {self.amplitude}")

    @property
    def is_null(self) -> bool:
        return self.kind == "zero" or self.amplitude == 0

    def interval(self) -> tuple[float, float]:
        if self.kind == "occupation_time":
            return float(self.params.get("lo", 0.0)), float(self.params.get("hi", math.inf))
        return float(self.params.get("lo", -1.0)), float(self.params.get("hi", 1.0))

    def window_steps(self, dt: float) -> int:
        m = round(self.t0 / dt)
        if m < 1:
            raise DomainError(f"dt={dt} exceeds the delay t0={self.t0}")
        return m


@dataclass(frozen=True)
class SimConfig:
    dt: float
    horizon: float
    burn_in: float | None = None  # None means 50 / lambda
    seed: int = DEFAULT_SEED
    initial_history: float | str = "stationary"

    def __post_init__(self):
        if not self.dt > 0:
            raise DomainError(f"dt must be positive, got {self.dt}")
        if not self.horizon > 0:
            raise DomainError(f"horizon must be positive, got {self.horizon}")
        if self.burn_in is not None and self.burn_in < 0:
            raise DomainError(f"burn_in must be non-negative, got {self.burn_in}")
        if isinstance(self.initial_history, str) and self.initial_history != "stationary":
            raise DomainError("initial_history is a number or 'stationary'")

    def burn_in_for(self, p: OUParams) -> float:
        return 50.0 / p.lam if self.burn_in is None else self.burn_in


def _trapezoid_mean(vals: np.ndarray) -> np.ndarray:
    m = vals.shape[-1] - 1
    return (vals.sum(axis=-1) - 0.5 * (vals[..., 0] + vals[..., -1])) / m


def drift_windows(spec: DriftSpec, windows: np.ndarray) -> np.ndarray:
    """Evaluate the drift on windows stored along the last axis (oldest value first)."""
    w = np.asarray(windows, dtype=float)
    if w.shape[-1] < 2:
        raise DomainError("a drift window needs at least two grid values")
    shape = w.shape[:-1]
    amp = spec.amplitude
    kind = spec.kind
    if kind == "zero" or amp == 0:
        return np.zeros(shape)
    if kind == "constant":
        return np.full(shape, amp)
    if kind == "window_integral_sign":
        return amp * _trapezoid_mean(np.sign(w[..., -1:] - w))
    if kind == "occupation_time":
        lo, hi = spec.interval()
        return amp * _trapezoid_mean(((w >= lo) & (w <= hi)).astype(float))
    if kind == "lagged_sign":
        return amp * np.sign(w[..., 0])
    lo, hi = spec.interval()
    inside = (w.min(axis=-1) >= lo) & (w.max(axis=-1) <= hi)
    return amp * inside.astype(float)


def drift_eval(spec: DriftSpec, window: SamplePath) -> float:
    """Drift value for a window covering [t - t0, t]."""
    steps = len(window) - 1
    if abs(steps * window.dt - spec.t0) > window.dt * (1 + 1e-9):
        raise DomainError(
            f"window spans {steps * window.dt:.6g}, expected t0={spec.t0} within one dt"
        )
    return float(drift_windows(spec, window.values))


def drift_along_path(spec: DriftSpec, values: np.ndarray, m: int) -> np.ndarray:
    """Drift for every window of ``m + 1`` consecutive values along the last axis.

    Returns an array whose last axis has length ``n - m``; entry ``k`` uses the
    window ending at index ``k + m``.  Occupation and lag kinds use running
    sums; the other window kinds fall back to :func:`drift_windows`.
    """
    v = np.asarray(values, dtype=float)
    n = v.shape[-1]
    if n < m + 1:
        raise DomainError("path shorter than one delay window")
    if spec.is_null:
        return np.zeros(v.shape[:-1] + (n - m,))
    if spec.kind == "constant":
        return np.full(v.shape[:-1] + (n - m,), spec.amplitude)
    if spec.kind == "lagged_sign":
        return spec.amplitude * np.sign(v[..., : n - m])
    if spec.kind == "occupation_time":
        lo, hi = spec.interval()
        ind = ((v >= lo) & (v <= hi)).astype(float)
        csum = np.concatenate([np.zeros(v.shape[:-1] + (1,)), np.cumsum(ind, axis=-1)], axis=-1)
        total = csum[..., m + 1 :] - csum[..., : n - m]
        trap = total - 0.5 * (ind[..., : n - m] + ind[..., m:])
        return spec.amplitude * trap / m
    flat = v.reshape(-1, n)
    out = np.empty((flat.shape[0], n - m))
    rows = max(1, int(2e7 // ((n - m) * (m + 1))))
    for start in range(0, flat.shape[0], rows):
        chunk = sliding_window_view(flat[start : start + rows], m + 1, axis=-1)
        out[start : start + rows] = drift_windows(spec, chunk)
    return out.reshape(v.shape[:-1] + (n - m,))


def euler_delay(p: OUParams, spec: DriftSpec, dt: float, history: np.ndarray, increments: np.ndarray):
    """Euler-Maruyama integration of the delay SDE for a batch of paths.

    ``history`` has shape ``(R, m + 1)`` (values on [-t0, 0]) and
    ``increments`` holds the Brownian increments, shape ``(R, n_steps)``.
    Returns the values, shape ``(R, m + 1 + n_steps)``, with history first.
    """
    history = np.atleast_2d(np.asarray(history, dtype=float))
    increments = np.atleast_2d(np.asarray(increments, dtype=float))
    m = spec.window_steps(dt)
    if history.shape[-1] != m + 1:
        raise DomainError(f"history must hold {m + 1} values, got {history.shape[-1]}")
    n_steps = increments.shape[-1]
    lam, sigma = p.lam, p.sigma
    out = np.empty((history.shape[0], m + 1 + n_steps))
    out[:, : m + 1] = history
    if spec.is_null:
        for k in range(n_steps):
            x = out[:, m + k]
            out[:, m + k + 1] = x - lam * x * dt + sigma * increments[:, k]
        return out

    drifts = np.empty((history.shape[0], n_steps))
    running = spec.kind == "occupation_time"
    if running:
        lo, hi = spec.interval()
        ind = np.zeros_like(out)
        ind[:, : m + 1] = (history >= lo) & (history <= hi)
        window_sum = ind[:, : m + 1].sum(axis=1)
    for k in range(n_steps):
        i = m + k
        x = out[:, i]
        if running:
            b = spec.amplitude * (window_sum - 0.5 * (ind[:, i - m] + ind[:, i])) / m
        else:
            b = drift_windows(spec, out[:, i - m : i + 1])
        drifts[:, k] = b
        xn = x + (-lam * x + sigma * b) * dt + sigma * increments[:, k]
        out[:, i + 1] = xn
        if running:
            ind[:, i + 1] = (xn >= lo) & (xn <= hi)
            window_sum += ind[:, i + 1] - ind[:, i - m]
    if np.max(np.abs(drifts)) > spec.amplitude * (1 + 1e-12):
        raise AssertionError("drift exceeded its sup-norm bound")
    return out


def _initial_value(p: OUParams, cfg: SimConfig, rng: np.random.Generator) -> float:
    if cfg.initial_history == "stationary":
        return p.stationary_std * rng.standard_normal()
    return float(cfg.initial_history)


def _steps(length: float, dt: float) -> int:
    return int(round(length / dt))


def simulate_reference(p: OUParams, cfg: SimConfig, replica: int = 0) -> SamplePath:
    """Exact-in-distribution OU path on [burn_in, burn_in + horizon]."""
    rng = stream(cfg.seed, replica)
    burn = cfg.burn_in_for(p)
    n_burn, n_h = _steps(burn, cfg.dt), _steps(cfg.horizon, cfg.dt)
    decay, std = ou_step_moments(cfg.dt, p)
    x0 = _initial_value(p, cfg, rng)
    noise = std * rng.standard_normal(n_burn + n_h)
    path = lfilter([1.0], [1.0, -decay], noise, zi=[decay * x0])[0]
    values = np.concatenate([[x0], path])[n_burn:]
    return SamplePath(n_burn * cfg.dt, cfg.dt, values)


def _replica_inputs(p, cfg, replica, n_total, m):
    rng = stream(cfg.seed, replica)
    x0 = _initial_value(p, cfg, rng)
    incr = math.sqrt(cfg.dt) * rng.standard_normal(n_total)
    return np.full(m + 1, x0), incr


def simulate_delay_batch(p: OUParams, spec: DriftSpec, cfg: SimConfig, replicas):
    """Independent replicas as a ``(R, n)`` array plus the common start time.

    ``replicas`` is a count or an explicit sequence of replica ids.  Replica
    ``r`` draws from the stream ``(seed, r)`` so its path does not depend on
    which other replicas are simulated alongside it.  The rows start one delay
    window before the end of the burn-in and run to ``burn_in + horizon``.
    """
    ids = range(replicas) if isinstance(replicas, int) else list(replicas)
    if not len(ids):
        raise DomainError("need at least one replica")
    if cfg.dt > spec.t0:
        raise DomainError(f"dt={cfg.dt} exceeds the delay t0={spec.t0}")
    m = spec.window_steps(cfg.dt)
    n_burn, n_h = _steps(cfg.burn_in_for(p), cfg.dt), _steps(cfg.horizon, cfg.dt)
    inputs = [_replica_inputs(p, cfg, r, n_burn + n_h, m) for r in ids]
    history = np.stack([h for h, _ in inputs])
    incr = np.stack([i for _, i in inputs])
    values = euler_delay(p, spec, cfg.dt, history, incr)
    # column m is time 0, so column n_burn is one window before the burn-in ends
    return values[:, n_burn:], (n_burn - m) * cfg.dt


def simulate_delay(p: OUParams, spec: DriftSpec, cfg: SimConfig, replica: int = 0) -> SamplePath:
    """Euler-Maruyama path of the delay SDE for a single replica."""
    values, start = simulate_delay_batch(p, spec, cfg, [replica])
    return SamplePath(start, cfg.dt, values[0])
