"""Closed-form quantities of the one-dimensional Ornstein-Uhlenbeck reference process.

The reference process is ``dy = -lam * y dt + sigma dB``.  Its invariant law is
``mu = N(0, sigma**2 / (2 lam))`` and every density below is taken relative to
``mu`` rather than Lebesgue measure.  Gauss-Hermite quadrature routines here are
independent numerical oracles for the closed forms.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ._common import DomainError

LN7 = math.log(7.0)


class UnreliableQuadratureWarning(RuntimeWarning):
    """Quadrature was asked for an integral that diverges."""


@dataclass(frozen=True)
class OUParams:
    lam: float
    sigma: float

    def __post_init__(self):
        if not (self.lam > 0 and math.isfinite(self.lam)):
            raise DomainError(f"lam must be positive and finite, got {self.lam}")
        if not (self.sigma > 0 and math.isfinite(self.sigma)):
            raise DomainError(f"sigma must be positive and finite, got {self.sigma}")

    @property
    def stationary_var(self) -> float:
        return self.sigma**2 / (2.0 * self.lam)

    @property
    def stationary_std(self) -> float:
        return math.sqrt(self.stationary_var)


@dataclass
class SamplePath:
    """A trajectory on the uniform grid ``start_time + k * dt``."""

    start_time: float
    dt: float
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.ndim != 1 or self.values.size < 2:
            raise DomainError("a sample path needs at least two values")
        if not self.dt > 0:
            raise DomainError(f"dt must be positive, got {self.dt}")
        if not np.all(np.isfinite(self.values)):
            raise DomainError("sample path contains non-finite values")

    def __len__(self):
        return self.values.size

    @property
    def end_time(self) -> float:
        return self.start_time + (self.values.size - 1) * self.dt

    @property
    def times(self) -> np.ndarray:
        return self.start_time + self.dt * np.arange(self.values.size)

    def to_csv(self, path) -> None:
        """Write ``t,x`` rows with 17 significant digits."""
        lines = ["t,x"]
        lines += [f"{t:.17g},{x:.17g}" for t, x in zip(self.times, self.values)]
        Path(path).write_text("\n".join(lines) + "\n")


def log_invariant_density(x, p: OUParams):
    x = np.asarray(x, dtype=float)
    c = p.lam / p.sigma**2
    return 0.5 * math.log(c / math.pi) - c * x**2


def invariant_density(x, p: OUParams):
    """Lebesgue density of the invariant law N(0, sigma^2 / 2 lam)."""
    return np.exp(log_invariant_density(x, p))


def log_transition_density(t: float, x, y, p: OUParams):
    if not t > 0:
        raise DomainError(f"transition density needs t > 0, got {t}")
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    e1 = math.exp(-p.lam * t)
    one_minus_q = -math.expm1(-2.0 * p.lam * t)
    quad = (x**2 + y**2) * e1**2 - 2.0 * x * y * e1
    return -0.5 * math.log(one_minus_q) - p.lam / (p.sigma**2 * one_minus_q) * quad


def transition_density(t: float, x, y, p: OUParams):
    """Density of y_t at ``y`` given y_0 = ``x``, relative to the invariant law."""
    return np.exp(log_transition_density(t, x, y, p))


def lk_norm_closed(t: float, k: int, p: OUParams) -> float:
    """Closed form of the double integral of p(t,x,y)**k against mu x mu.

    Returns ``math.inf`` when the integral diverges, which happens exactly when
    ``(k - 1) * exp(-lam t) >= 1``.
    """
    if not t > 0:
        raise DomainError(f"t must be positive, got {t}")
    if int(k) != k or k < 1:
        raise DomainError(f"k must be a positive integer, got {k}")
    k = int(k)
    if (k - 1) * math.exp(-p.lam * t) >= 1.0:
        return math.inf
    q = math.exp(-2.0 * p.lam * t)
    one_minus_q = -math.expm1(-2.0 * p.lam * t)
    disc = (1.0 + (k - 1) * q) ** 2 - k**2 * q
    if disc <= 0.0:
        return math.inf
    return one_minus_q ** (1.0 - k / 2.0) / math.sqrt(disc)


def _hermgauss(nodes: int):
    z, w = np.polynomial.hermite.hermgauss(int(nodes))
    return z, w


def _mu_nodes(p: OUParams, nodes: int):
    """Nodes and weights integrating against mu; weights sum to one."""
    z, w = _hermgauss(nodes)
    return math.sqrt(2.0) * p.stationary_std * z, w / math.sqrt(math.pi)


def lk_norm_quadrature(t: float, k: int, p: OUParams, nodes: int = 64, adaptive: bool = True) -> float:
    """Two-dimensional Gauss-Hermite estimate of the double integral of p**k.

    With ``adaptive`` the tensor grid is recentred and rescaled to the
    curvature of the log-integrand at the origin, measured by finite
    differences.  Close to the divergence threshold the integrand barely
    decays relative to ``mu x mu`` and the unscaled grid converges slowly.
    A divergent integral triggers :class:`UnreliableQuadratureWarning`.
    """
    if not t > 0:
        raise DomainError(f"t must be positive, got {t}")
    if nodes < 16:
        raise DomainError(f"need at least 16 nodes, got {nodes}")
    k = int(k)

    def log_f(x, y):
        return (
            k * log_transition_density(t, x, y, p)
            + log_invariant_density(x, p)
            + log_invariant_density(y, p)
        )

    h = 0.1 * p.stationary_std
    f0 = log_f(0.0, 0.0)
    hxx = -(log_f(h, 0.0) - 2 * f0 + log_f(-h, 0.0)) / h**2
    hyy = -(log_f(0.0, h) - 2 * f0 + log_f(0.0, -h)) / h**2
    hxy = -(log_f(h, h) - log_f(h, -h) - log_f(-h, h) + log_f(-h, -h)) / (4 * h**2)
    hess = np.array([[hxx, hxy], [hxy, hyy]])
    definite = bool(np.all(np.linalg.eigvalsh(hess) > 0))
    if not definite:
        warnings.warn(
            f"integral of p^{k} diverges at lam*t={p.lam * t:.6g}; quadrature value is meaningless",
            UnreliableQuadratureWarning,
            stacklevel=2,
        )

    z, w = _hermgauss(nodes)
    if adaptive and definite:
        chol = np.linalg.cholesky(np.linalg.inv(hess))
        zz = np.stack(np.meshgrid(z, z, indexing="ij"))
        pts = math.sqrt(2.0) * np.einsum("ab,bij->aij", chol, zz)
        logw = np.log(w)[:, None] + np.log(w)[None, :] + zz[0] ** 2 + zz[1] ** 2
        terms = np.exp(logw + log_f(pts[0], pts[1]))
        return float(2.0 * np.linalg.det(chol) * math.fsum(terms.ravel()))

    x, wx = _mu_nodes(p, nodes)
    vals = transition_density(t, x[:, None], x[None, :], p) ** k
    return float(math.fsum((wx[:, None] * wx[None, :] * vals).ravel()))


def m_delta(delta: float, p: OUParams, check_monotone: bool = False) -> float:
    """Supremum over a >= delta of the L^8(mu x mu) norm of p(a,.,.), floored at 1.

    The supremum is attained at ``a = delta`` because the norm decreases on
    ``(ln 7 / lam, inf)``; ``check_monotone`` verifies that on a grid instead
    of trusting it.  Returns ``math.inf`` when ``lam * delta <= ln 7``.
    """
    if not delta > 0:
        raise DomainError(f"delta must be positive, got {delta}")
    if p.lam * delta <= LN7:
        return math.inf
    value = max(lk_norm_closed(delta, 8, p) ** 0.125, 1.0)
    if check_monotone:
        grid = delta * np.geomspace(1.0, 50.0, 200)
        norms = np.array([lk_norm_closed(a, 8, p) for a in grid])
        if np.any(np.diff(norms) > 1e-12 * norms[:-1]):
            raise AssertionError("L^8 norm of the transition density is not monotone on the grid")
    return value


def chapman_kolmogorov_check(s: float, t: float, x: float, y: float, p: OUParams, nodes: int = 64) -> float:
    """Residual of the semigroup law ``int p(s,x,z) p(t,z,y) mu(dz) - p(s+t,x,y)``."""
    if not (s > 0 and t > 0):
        raise DomainError("s and t must be positive")
    z, w = _mu_nodes(p, nodes)
    lhs = math.fsum(w * transition_density(s, x, z, p) * transition_density(t, z, y, p))
    return lhs - float(transition_density(s + t, x, y, p))


def stationary_cov(s: float, p: OUParams) -> float:
    if s < 0:
        raise DomainError(f"lag must be non-negative, got {s}")
    return p.stationary_var * math.exp(-p.lam * s)


def ou_step_moments(t: float, p: OUParams) -> tuple[float, float]:
    """Decay factor and conditional standard deviation of an exact step of length ``t``."""
    if t < 0:
        raise DomainError(f"step length must be non-negative, got {t}")
    decay = math.exp(-p.lam * t)
    std = math.sqrt(p.stationary_var * -math.expm1(-2.0 * p.lam * t))
    return decay, std


def ou_exact_step(x, t: float, p: OUParams, rng: np.random.Generator):
    """Draw from N(x e^{-lam t}, (sigma^2 / 2 lam)(1 - e^{-2 lam t})); ``x`` may be an array."""
    decay, std = ou_step_moments(t, p)
    x = np.asarray(x, dtype=float)
    if t == 0:
        return x.copy() if x.ndim else float(x)
    out = decay * x + std * rng.standard_normal(x.shape)
    return out if out.ndim else float(out)


def bridge_batch(x, y, a: float, n_steps: int, p: OUParams, rng: np.random.Generator) -> np.ndarray:
    """Sample OU bridges from ``x`` at time 0 to ``y`` at time ``a``.

    ``x`` and ``y`` broadcast to a common shape ``(B,)``; the result has shape
    ``(B, n_steps + 1)``.  Each step draws x_{k+1} from its exact Gaussian law
    given x_k and the pinned endpoint, so the bridge has no discretisation error.
    """
    if n_steps < 1:
        raise DomainError("a bridge needs at least one step")
    x, y = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(y, dtype=float))
    x = np.atleast_1d(x)
    y = np.atleast_1d(y)
    dt = a / n_steps
    var = p.stationary_var
    decay1 = math.exp(-p.lam * dt)
    v1 = var * -math.expm1(-2.0 * p.lam * dt)

    out = np.empty(x.shape + (n_steps + 1,))
    out[..., 0] = x
    out[..., -1] = y
    noise = rng.standard_normal(x.shape + (n_steps - 1,))
    cur = x
    for k in range(n_steps - 1):
        rest = a - (k + 1) * dt
        decay2 = math.exp(-p.lam * rest)
        v2 = var * -math.expm1(-2.0 * p.lam * rest)
        prec = 1.0 / v1 + decay2**2 / v2
        mean = (decay1 * cur / v1 + decay2 * y / v2) / prec
        cur = mean + noise[..., k] / math.sqrt(prec)
        out[..., k + 1] = cur
    return out


def bridge_sample(x: float, y: float, a: float, dt: float, p: OUParams, rng: np.random.Generator) -> SamplePath:
    """One OU bridge on [0, a] pinned at ``x`` and ``y``."""
    if dt > a:
        raise DomainError(f"dt={dt} exceeds bridge length a={a}")
    n_steps = round(a / dt)
    if abs(n_steps * dt - a) > 1e-9 * a:
        raise DomainError(f"dt={dt} does not divide a={a}")
    values = bridge_batch(x, y, a, n_steps, p, rng)[0]
    return SamplePath(0.0, a / n_steps, values)
