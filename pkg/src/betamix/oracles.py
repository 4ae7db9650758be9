"""Ground-truth beta(m) values and the AR(1) comparison tooling.

For a finite-state stationary chain the coefficient has the closed form

    beta(m) = (1/2) sum_{u,v} | pi_u * (P^m)_{u,v} - pi_u * pi_v |,

computed exactly here by repeated matrix multiplication.  For a stationary
Gaussian AR(1) process the pair (X_0, X_m) is bivariate normal with
correlation phi^m, and beta(m) is half the L1 distance between that density
and the product of its marginals, evaluated by fixed-grid quadrature with a
step-halving convergence check.  The module also provides the lag-m
autocorrelation estimator, the analytic sandwich bounds relating a
correlation coefficient to beta, and the AR-specific skip-length rule used by
the experiments.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import NumericalError, ParameterError
from .core import SamplePath

__all__ = [
    "FiniteChainSpec",
    "ARSpec",
    "AcfEstimate",
    "JanssonBounds",
    "QuadraturePolicy",
    "beta_exact_finite",
    "beta_bivariate_gaussian",
    "beta_gaussian_ar1",
    "acf_estimate",
    "beta_from_acf",
    "jansson_bounds",
    "skip_length_ar1",
    "ar1_envelope",
]

_ROW_SUM_TOL = 1e-12
_STATIONARY_TOL = 1e-10


@dataclass(frozen=True)
class FiniteChainSpec:
    """Transition matrix plus its stationary distribution.

    Rows must sum to 1 within 1e-12 and ``stationary`` must satisfy
    pi P = pi within 1e-10.  Geometric ergodicity is asserted by the caller,
    not checked.
    """

    transition: np.ndarray
    stationary: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.transition, dtype=np.float64)
        pi = np.asarray(self.stationary, dtype=np.float64)
        if p.ndim != 2 or p.shape[0] != p.shape[1]:
            raise ParameterError(f"transition matrix must be square, got {p.shape}")
        if p.shape[0] < 2:
            raise ParameterError("chain needs at least 2 states")
        if np.any(p < 0):
            raise ParameterError("transition matrix has negative entries")
        if np.max(np.abs(p.sum(axis=1) - 1.0)) > _ROW_SUM_TOL:
            raise ParameterError("transition matrix rows must sum to 1 (tol 1e-12)")
        if pi.shape != (p.shape[0],):
            raise ParameterError("stationary vector length must match the matrix")
        if np.any(pi < 0) or abs(pi.sum() - 1.0) > 1e-10:
            raise ParameterError("stationary vector must be a distribution")
        if np.max(np.abs(pi @ p - pi)) > _STATIONARY_TOL:
            raise ParameterError("stationary vector fails pi P = pi (tol 1e-10)")
        object.__setattr__(self, "transition", p)
        object.__setattr__(self, "stationary", pi)

    @property
    def alphabet_size(self) -> int:
        return int(self.transition.shape[0])

    @classmethod
    def from_transition(cls, transition) -> "FiniteChainSpec":
        """Build a spec by computing the stationary law via power iteration."""
        from .generate import stationary_distribution

        p = np.asarray(transition, dtype=np.float64)
        return cls(p, stationary_distribution(p))


@dataclass(frozen=True)
class ARSpec:
    """First-order autoregression X_t = phi X_{t-1} + eps_t, eps ~ N(0, sigma^2)."""

    phi: float
    sigma: float = 1.0

    def __post_init__(self):
        if not (abs(self.phi) < 1):
            raise ParameterError(f"|phi| must be < 1 for stationarity, got {self.phi}")
        if not (self.sigma > 0 and math.isfinite(self.sigma)):
            raise ParameterError(f"sigma must be positive, got {self.sigma}")

    @property
    def stationary_variance(self) -> float:
        return self.sigma ** 2 / (1.0 - self.phi ** 2)


@dataclass(frozen=True)
class AcfEstimate:
    """Lag-m autocorrelation estimate and the variance estimate behind it."""

    m: int
    rho_hat: float
    sigma2_hat: float

    def __post_init__(self):
        if abs(self.rho_hat) > 1.5:
            raise ParameterError(
                f"autocorrelation estimate {self.rho_hat} fails the |rho| <= 1.5 sanity bound"
            )


@dataclass(frozen=True)
class JanssonBounds:
    """Sandwich bounds on beta derived from a correlation coefficient.

    ``lower`` may be negative (the bound turns trivial for large |rho|);
    ``lower_clamped`` is max(lower, 0).
    """

    lower: float
    upper: float

    @property
    def lower_clamped(self) -> float:
        return max(self.lower, 0.0)


@dataclass(frozen=True)
class QuadraturePolicy:
    """Fixed-grid quadrature policy for the bivariate-Gaussian TV integral.

    The integrand lives on [-half_width, half_width]^2 at unit variance;
    beyond 8 standard deviations the tails contribute < 1e-14.  The grid is
    refined by step-halving until two successive values agree within ``tol``.
    """

    half_width: float = 8.0
    step: float = 0.01
    tol: float = 1e-4
    max_refinements: int = 2

    def __post_init__(self):
        if self.half_width <= 0 or self.step <= 0 or self.tol <= 0:
            raise ParameterError("quadrature policy fields must be positive")


def beta_exact_finite(chain: FiniteChainSpec, m: int) -> float:
    """Exact beta(m) of a finite-state stationary chain via matrix powers."""
    if m < 1:
        raise ParameterError(f"lag m must be >= 1, got {m}")
    pm = np.linalg.matrix_power(chain.transition, m)
    joint = chain.stationary[:, None] * pm
    product = np.outer(chain.stationary, chain.stationary)
    return 0.5 * float(np.abs(joint - product).sum())


def _tv_gaussian_once(rho: float, half_width: float, step: float) -> float:
    """Half-L1 distance between the unit-variance bivariate normal with
    correlation rho and the product of standard normal marginals, by plain
    Riemann summation on the given grid."""
    n_nodes = int(round(2.0 * half_width / step)) + 1
    x = -half_width + step * np.arange(n_nodes)
    log_phi = -0.5 * x * x - 0.5 * math.log(2.0 * math.pi)
    q = 1.0 - rho * rho
    total = 0.0
    chunk = 256
    for lo in range(0, n_nodes, chunk):
        xs = x[lo : lo + chunk, None]
        ys = x[None, :]
        joint = np.exp(-(xs * xs - 2.0 * rho * xs * ys + ys * ys) / (2.0 * q)) / (
            2.0 * math.pi * math.sqrt(q)
        )
        prod = np.exp(log_phi[lo : lo + chunk, None] + log_phi[None, :])
        total += float(np.abs(joint - prod).sum())
    return 0.5 * step * step * total


def beta_bivariate_gaussian(rho: float, policy: QuadraturePolicy | None = None) -> float:
    """beta-dependence of a unit-variance bivariate Gaussian pair with
    correlation ``rho``, by grid quadrature with a step-halving check."""
    if not (abs(rho) < 1):
        raise ParameterError(f"|rho| must be < 1, got {rho}")
    if rho == 0.0:
        return 0.0
    policy = policy or QuadraturePolicy()
    step = policy.step
    prev = _tv_gaussian_once(rho, policy.half_width, step)
    for _ in range(policy.max_refinements):
        step /= 2.0
        cur = _tv_gaussian_once(rho, policy.half_width, step)
        if abs(cur - prev) <= policy.tol:
            return cur
        prev = cur
    raise NumericalError(
        f"TV quadrature did not stabilize to {policy.tol:g} after "
        f"{policy.max_refinements} step-halvings (rho={rho})"
    )


def beta_gaussian_ar1(
    spec: ARSpec, m: int, policy: QuadraturePolicy | None = None
) -> float:
    """True beta(m) of the stationary Gaussian AR(1) process.

    The lag-m pair is bivariate normal with correlation phi^m, so the value
    is scale-invariant in sigma and is computed at unit variance.
    """
    if m < 1:
        raise ParameterError(f"lag m must be >= 1, got {m}")
    return beta_bivariate_gaussian(spec.phi ** m, policy)


def acf_estimate(path: SamplePath, m: int) -> AcfEstimate:
    """Lag-m autocorrelation estimate

        rho_hat = sum_{t=0}^{n-m-1} X_t X_{t+m} / ((n-m) * sigma2_hat),
        sigma2_hat = (1/n) sum_t X_t^2.

    The uncentered normalizations (1/(n-m) and 1/n) are intentional; the
    target processes are zero-mean.
    """
    x = np.asarray(path.values, dtype=np.float64)
    n = x.shape[0]
    if m < 1 or m >= n:
        raise ParameterError(f"lag m must satisfy 1 <= m < n, got m={m}, n={n}")
    sigma2 = float(x @ x) / n
    if sigma2 <= 0.0:
        raise ParameterError("path has zero variance; autocorrelation undefined")
    rho = float(x[: n - m] @ x[m:]) / ((n - m) * sigma2)
    return AcfEstimate(m=m, rho_hat=rho, sigma2_hat=sigma2)


def beta_from_acf(rho_hat: float, policy: QuadraturePolicy | None = None) -> float:
    """Model-specific beta estimate that treats the pair as bivariate normal
    with the estimated correlation (exact only when the data really are a
    Gaussian AR(1) process)."""
    if not (abs(rho_hat) < 1):
        raise ParameterError(f"|rho_hat| must be < 1, got {rho_hat}")
    return beta_bivariate_gaussian(rho_hat, policy)


def jansson_bounds(rho: float) -> JanssonBounds:
    """Analytic sandwich for the beta coefficient of a Gaussian AR(1) pair
    with correlation rho:

        |rho|/pi - (rho^2 + rho^4/4) / (1-rho)^2
            <= beta <= |rho|/sqrt(2 pi) + (rho^2 + rho^4/16) / (1-rho)^2.
    """
    if not (abs(rho) < 1):
        raise ParameterError(f"|rho| must be < 1, got {rho}")
    denom = (1.0 - rho) ** 2
    lower = abs(rho) / math.pi - (rho ** 2 + rho ** 4 / 4.0) / denom
    upper = abs(rho) / math.sqrt(2.0 * math.pi) + (rho ** 2 + rho ** 4 / 16.0) / denom
    return JanssonBounds(lower=lower, upper=upper)


def skip_length_ar1(b: float, n: int) -> int:
    """Skip length for AR(1)-like data given an assumed bound |phi| <= b:

        k = floor( (log log(1/b) + (3/2) log n) / log(1/b) ).
    """
    if not (0.0 < b < 1.0):
        raise ParameterError(f"b must lie in (0, 1), got {b}")
    log_inv = math.log(1.0 / b)
    k = math.floor((math.log(log_inv) + 1.5 * math.log(n)) / log_inv)
    if k < 1:
        raise ParameterError(
            f"AR skip rule gives nonpositive k={k} for b={b}, n={n}"
        )
    return k


def ar1_envelope(b: float, m: int) -> float:
    """First-order envelope beta(m) <= b^m / sqrt(2 pi) implied by |phi| <= b."""
    if not (0.0 < b < 1.0):
        raise ParameterError(f"b must lie in (0, 1), got {b}")
    return b ** m / math.sqrt(2.0 * math.pi)
