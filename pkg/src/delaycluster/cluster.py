"""Cluster expansion of the partition function Z_N = E[exp(-H_N)] on 2N blocks.

Time is cut into blocks I_j = [j a, (j + 1) a] for sites j = -N .. N-1, with
endpoint values y_j = u(j a) for j = -N .. N.  Conditioned on the endpoints the
reference path is a product of independent bridges, and Z_N becomes

    Z_N = int prod_j alpha_j  d(mu^{2N+1}) d(bridges)

Expanding prod_j (1 + (alpha_j - 1)) over subsets of sites and grouping each
subset into maximal runs gives 1 + sum over families of products of Gamma_tau.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np
from scipy.signal import lfilter

from ._common import DEFAULT_SEED, DomainError, stream
from .ou import (
    OUParams,
    SamplePath,
    _mu_nodes,
    bridge_batch,
    log_transition_density,
    ou_step_moments,
)
from .sim import DriftSpec, drift_along_path

MAX_ENUM_BLOCKS = 3
CHUNK = 2000
QUAD_NODES = 64

# stream namespaces, so cluster draws never collide with simulation replicas
_GAMMA_KEY = 101
_ZDIRECT_KEY = 102
_SITE_OFFSET = 1 << 16


@dataclass(frozen=True)
class ClusterConfig:
    n_blocks: int
    a: float
    t0: float
    dt: float

    def __post_init__(self):
        if int(self.n_blocks) != self.n_blocks or self.n_blocks < 1:
            raise DomainError(f"n_blocks must be a positive integer, got {self.n_blocks}")
        if not (self.dt > 0 and self.t0 > 0):
            raise DomainError("dt and t0 must be positive")
        if self.a < self.t0:
            raise DomainError(f"block length a={self.a} must be at least the delay t0={self.t0}")
        n = round(self.a / self.dt)
        if n < 1 or abs(n * self.dt - self.a) > 1e-9 * self.a:
            raise DomainError(f"dt={self.dt} does not divide a={self.a}")

    @property
    def steps_per_block(self) -> int:
        return round(self.a / self.dt)

    @property
    def context_steps(self) -> int:
        return max(1, round(self.t0 / self.dt))

    @property
    def sites(self) -> range:
        return range(-self.n_blocks, self.n_blocks)

    def check_spec(self, spec: DriftSpec) -> None:
        if abs(spec.t0 - self.t0) > 1e-12 * self.t0:
            raise DomainError(f"drift delay {spec.t0} differs from the configured t0={self.t0}")


@dataclass(frozen=True, order=True)
class Cluster:
    lo: int
    hi: int

    def __post_init__(self):
        if self.lo > self.hi:
            raise DomainError(f"cluster needs lo <= hi, got [{self.lo}, {self.hi}]")

    def __len__(self):
        return self.hi - self.lo + 1

    def __iter__(self):
        return iter(range(self.lo, self.hi + 1))

    def check_within(self, cfg: ClusterConfig) -> None:
        if self.lo < -cfg.n_blocks or self.hi > cfg.n_blocks - 1:
            raise DomainError(f"cluster [{self.lo}, {self.hi}] leaves sites [-{cfg.n_blocks}, {cfg.n_blocks - 1}]")


@dataclass(frozen=True)
class MCEstimate:
    mean: float
    std_error: float
    n: int
    method: str = "monte_carlo"

    @classmethod
    def from_samples(cls, samples: np.ndarray) -> "MCEstimate":
        samples = np.asarray(samples, dtype=float)
        n = samples.size
        if n < 2:
            raise DomainError("an estimate needs at least two samples")
        mean = math.fsum(samples) / n
        se = math.sqrt(math.fsum((samples - mean) ** 2) / (n - 1) / n)
        return cls(mean, se, n)

    def within(self, target: float, k: float = 3.0) -> bool:
        return abs(self.mean - target) <= k * self.std_error


def _hamiltonian_rows(ext: np.ndarray, spec: DriftSpec, p: OUParams, dt: float, m: int) -> np.ndarray:
    """Left-point Ito sum for rows holding m context values followed by the block grid."""
    ext = np.atleast_2d(ext)
    if spec.is_null:
        return np.zeros(ext.shape[0])
    b = drift_along_path(spec, ext, m)[:, :-1]
    u = ext[:, m:]
    db = (np.diff(u, axis=1) + p.lam * u[:, :-1] * dt) / p.sigma
    return -np.sum(b * db, axis=1) + 0.5 * dt * np.sum(b * b, axis=1)


def hamiltonian(path: SamplePath, spec: DriftSpec, p: OUParams) -> float:
    """H_I(u) = -int_I b dB + 1/2 int_I b^2 dt, with I = [start + t0, end] of ``path``.

    The Brownian increments are those that would drive the reference
    dynamics along ``path``.  The first t0 of ``path`` is context only.
    """
    m = spec.window_steps(path.dt)
    if len(path) < m + 2:
        raise DomainError(f"path needs {m} context values before at least one step, got {len(path)} values")
    return float(_hamiltonian_rows(path.values[None, :], spec, p, path.dt, m)[0])


def _log_alpha(j: int, n_blocks: int, a: float, y_prev, y_j, y_next, h, p: OUParams):
    """log alpha_j from the endpoint values around site j and H on block I_j."""
    out = -h + (0.5 if j < n_blocks - 1 else 1.0) * log_transition_density(a, y_j, y_next, p)
    if j > -n_blocks:
        out = out + 0.5 * log_transition_density(a, y_prev, y_j, p)
    return out


def alpha_j(j: int, cfg: ClusterConfig, y: Mapping[int, float], u: SamplePath, spec: DriftSpec, p: OUParams) -> float:
    """alpha_j(a, y, u): the Boltzmann factor of block I_j times its share of the endpoint densities.

    ``u`` covers [j a - t0, (j + 1) a]; for j = -N its context part should be
    frozen at y_{-N}.  Needed endpoint values are y_{j-1} (unless j = -N),
    y_j and y_{j+1}.
    """
    if j not in cfg.sites:
        raise DomainError(f"site {j} outside [-{cfg.n_blocks}, {cfg.n_blocks - 1}]")
    cfg.check_spec(spec)
    need = [j, j + 1] + ([j - 1] if j > -cfg.n_blocks else [])
    missing = [k for k in need if k not in y]
    if missing:
        raise DomainError(f"alpha_{j} needs endpoint values at {missing}")
    h = hamiltonian(u, spec, p)
    y_prev = y.get(j - 1, 0.0)
    return float(math.exp(_log_alpha(j, cfg.n_blocks, cfg.a, y_prev, y[j], y[j + 1], h, p)))


def enumerate_cluster_families(n_blocks: int) -> list[tuple[Cluster, ...]]:
    """All families of connected site sets at mutual distance >= 2, sorted canonically."""
    if n_blocks > MAX_ENUM_BLOCKS:
        raise DomainError(
            f"refusing to enumerate {2 ** (2 * n_blocks) - 1} families for n_blocks={n_blocks}; "
            f"the limit is n_blocks <= {MAX_ENUM_BLOCKS}"
        )
    if n_blocks < 1:
        raise DomainError("n_blocks must be positive")
    last = n_blocks - 1

    def extend(start):
        for lo in range(start, last + 1):
            for hi in range(lo, last + 1):
                head = Cluster(lo, hi)
                yield (head,)
                for rest in extend(hi + 2):
                    yield (head,) + rest

    return sorted(extend(-n_blocks), key=lambda fam: [(c.lo, c.hi) for c in fam])


def _dependencies(tau: Cluster, n_blocks: int) -> tuple[int, int]:
    """First and last endpoint index that Gamma_tau depends on."""
    return max(tau.lo - 1, -n_blocks), tau.hi + 1


def _gamma_quadrature(tau: Cluster, cfg: ClusterConfig, p: OUParams, nodes: int) -> float:
    """Gamma_tau for zero drift by contracting the endpoint chain on Gauss-Hermite nodes."""
    x, w = _mu_nodes(p, nodes)
    N, a = cfg.n_blocks, cfg.a
    first, last = _dependencies(tau, N)
    xa, xb, xc = x[:, None, None], x[None, :, None], x[None, None, :]

    def factor(j):
        return np.expm1(_log_alpha(j, N, a, xa, xb, xc, 0.0, p))

    # t holds the partial integral as a function of the two newest endpoints
    if first == tau.lo:
        # tau starts at -N, whose factor involves only (y_{-N}, y_{-N+1})
        t = factor(first)[0]
    else:
        t = np.ones((nodes, nodes))
    for j in range(first + 1, last):
        t = np.einsum("a,ab,abc->bc", w, t, factor(j))
    return float(w @ t @ w)


def _gamma_samples(tau: Cluster, cfg: ClusterConfig, spec: DriftSpec, p: OUParams, rng, size: int) -> np.ndarray:
    N, n, m = cfg.n_blocks, cfg.steps_per_block, cfg.context_steps
    first, last = _dependencies(tau, N)
    y = p.stationary_std * rng.standard_normal((size, last - first + 1))
    blocks = [bridge_batch(y[:, k], y[:, k + 1], cfg.a, n, p, rng) for k in range(last - first)]
    path = np.concatenate([blocks[0]] + [b[:, 1:] for b in blocks[1:]], axis=1)
    prod = np.ones(size)
    for j in tau:
        off = (j - first) * n
        if j == -N:
            ctx = np.repeat(y[:, :1], m, axis=1)
            ext = np.concatenate([ctx, path[:, off : off + n + 1]], axis=1)
        else:
            ext = path[:, off - m : off + n + 1]
        h = _hamiltonian_rows(ext, spec, p, cfg.dt, m)
        k = j - first
        y_prev = y[:, k - 1] if k > 0 else 0.0
        la = _log_alpha(j, N, cfg.a, y_prev, y[:, k], y[:, k + 1], h, p)
        prod *= np.expm1(la)
    return prod


def gamma_tau(
    tau: Cluster,
    cfg: ClusterConfig,
    spec: DriftSpec,
    p: OUParams,
    n_samples: int = 10_000,
    seed: int = DEFAULT_SEED,
    nodes: int = QUAD_NODES,
) -> MCEstimate:
    """Gamma_tau = int prod_{j in tau} (alpha_j - 1) over i.i.d. mu endpoints and reference bridges.

    Zero drift makes the integrand a function of the endpoints only, and it
    is then evaluated deterministically by quadrature (``std_error`` = 0).
    Otherwise the estimate is Monte Carlo in chunks of ``CHUNK`` samples,
    each chunk drawing from its own stream keyed by (seed, tau, chunk index).
    """
    tau.check_within(cfg)
    cfg.check_spec(spec)
    if spec.is_null:
        return MCEstimate(_gamma_quadrature(tau, cfg, p, nodes), 0.0, nodes, "quadrature")
    if n_samples < 100:
        raise DomainError(f"need at least 100 samples, got {n_samples}")
    parts = []
    for c, lo in enumerate(range(0, n_samples, CHUNK)):
        rng = stream(seed, _GAMMA_KEY, tau.lo + _SITE_OFFSET, tau.hi + _SITE_OFFSET, c)
        parts.append(_gamma_samples(tau, cfg, spec, p, rng, min(CHUNK, n_samples - lo)))
    return MCEstimate.from_samples(np.concatenate(parts))


def _stationary_paths(p: OUParams, n_steps: int, dt: float, rng, size: int) -> np.ndarray:
    decay, std = ou_step_moments(dt, p)
    x0 = p.stationary_std * rng.standard_normal(size)
    noise = std * rng.standard_normal((size, n_steps))
    rest = lfilter([1.0], [1.0, -decay], noise, axis=1, zi=(decay * x0)[:, None])[0]
    return np.concatenate([x0[:, None], rest], axis=1)


def z_direct(
    cfg: ClusterConfig,
    spec: DriftSpec,
    p: OUParams,
    n_samples: int = 10_000,
    seed: int = DEFAULT_SEED,
) -> MCEstimate:
    """Plain Monte Carlo of E[exp(-H_N)] over stationary reference paths on [-N a, N a].

    Delay windows reaching below -N a see the path frozen at u(-N a).
    """
    cfg.check_spec(spec)
    if n_samples < 2:
        raise DomainError("need at least two samples")
    n_steps = 2 * cfg.n_blocks * cfg.steps_per_block
    m = cfg.context_steps
    parts = []
    for c, lo in enumerate(range(0, n_samples, CHUNK)):
        size = min(CHUNK, n_samples - lo)
        if spec.is_null:
            parts.append(np.ones(size))
            continue
        rng = stream(seed, _ZDIRECT_KEY, cfg.n_blocks, c)
        u = _stationary_paths(p, n_steps, cfg.dt, rng, size)
        ext = np.concatenate([np.repeat(u[:, :1], m, axis=1), u], axis=1)
        parts.append(np.exp(-_hamiltonian_rows(ext, spec, p, cfg.dt, m)))
    return MCEstimate.from_samples(np.concatenate(parts))


@dataclass(frozen=True)
class ClusterSum:
    total: MCEstimate
    gammas: dict
    families: list

    def table_rows(self) -> list[tuple[int, int, float, float]]:
        return [(t.lo, t.hi, e.mean, e.std_error) for t, e in sorted(self.gammas.items())]

    def to_csv(self, path) -> None:
        rows = ["tau_lo,tau_hi,gamma_mean,gamma_se"]
        rows += [f"{lo},{hi},{m:.17g},{s:.17g}" for lo, hi, m, s in self.table_rows()]
        Path(path).write_text("\n".join(rows) + "\n")


def combine_families(families: Sequence[tuple[Cluster, ...]], gammas: Mapping[Cluster, MCEstimate]) -> MCEstimate:
    """1 + sum of family products, with first-order error propagation over independent Gamma estimates."""
    total = [1.0]
    grad = {t: 0.0 for t in gammas}
    for fam in families:
        means = [gammas[t].mean for t in fam]
        total.append(math.prod(means))
        for i, t in enumerate(fam):
            grad[t] += math.prod(means[:i] + means[i + 1 :])
    se = math.sqrt(math.fsum((grad[t] * gammas[t].std_error) ** 2 for t in gammas))
    method = "quadrature" if all(g.method == "quadrature" for g in gammas.values()) else "monte_carlo"
    return MCEstimate(math.fsum(total), se, min(g.n for g in gammas.values()), method)


def cluster_sum(
    cfg: ClusterConfig,
    spec: DriftSpec,
    p: OUParams,
    n_samples: int = 10_000,
    seed: int = DEFAULT_SEED,
    nodes: int = QUAD_NODES,
) -> ClusterSum:
    """Evaluate the truncation-free cluster representation of Z_N.

    Every distinct cluster is estimated once and shared by all families
    containing it.
    """
    families = enumerate_cluster_families(cfg.n_blocks)
    distinct = sorted({t for fam in families for t in fam})
    gammas = {t: gamma_tau(t, cfg, spec, p, n_samples, seed, nodes) for t in distinct}
    return ClusterSum(combine_families(families, gammas), gammas, families)

