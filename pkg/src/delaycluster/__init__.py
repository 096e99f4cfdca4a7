"""Cluster-expansion toolkit for Ornstein-Uhlenbeck diffusions with bounded delay drifts."""

__version__ = "0.1.0"

from ._common import DEFAULT_SEED, DomainError
from .bounds import (
    BoundReport,
    HypothesisConstants,
    a_c_of_eps,
    a_eps,
    b1_of_delta,
    b_eps,
    b_eps_simplified,
    beta_delta,
    bj_bound,
    bound_report,
    cj_bound,
    condition_c_holds,
    epsilon0,
    eta_inverse,
    hypothesis_constants,
)
from .cluster import (
    Cluster,
    ClusterConfig,
    MCEstimate,
    alpha_j,
    cluster_sum,
    enumerate_cluster_families,
    gamma_tau,
    hamiltonian,
    z_direct,
)
from .ergodicity import (
    CovarianceCurve,
    clt_check,
    estimate_covariance,
    fit_exponential,
    green_kubo_variance,
)
from .inequalities import inequality_suite, verify_generalized_hoelder
from .optimize import conjecture_check, optimize_delta, reproduce_table
from .ou import (
    OUParams,
    SamplePath,
    bridge_sample,
    chapman_kolmogorov_check,
    lk_norm_closed,
    lk_norm_quadrature,
    m_delta,
    transition_density,
)
from .sim import DriftSpec, SimConfig, drift_eval, simulate_delay, simulate_reference
