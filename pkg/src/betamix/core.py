"""Domain types, block planning, and closed-form error-bound calculators.

A stationary, geometrically ergodic Markov process has beta-mixing
coefficients decaying at least exponentially,

    beta(m) <= eta * exp(-gamma * m),   eta, gamma > 0.

Both estimators in this package thin the sample path into nearly independent
pairs: with skip length ``k`` the path of length ``n`` yields

    N(k, n) = floor((n - k) / (2 (k + 1)))

pairs ``(X_{2i(k+1)}, X_{2i(k+1)+m})``, i = 0..N-1.  The skip-length rules
(`skip_length_continuous`, `skip_length_finite`, `skip_length_multi`) balance
the block count N against the residual dependence N*beta(k); the
``*_error_bound_*`` functions evaluate the matching closed-form guarantees on
the expected estimation error.  All logarithms are natural except where a
base-2 logarithm is written explicitly.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import ParameterError

__all__ = [
    "SamplePath",
    "MixingEnvelope",
    "SmoothnessSpec",
    "BlockPlan",
    "BoundParams",
    "BetaEstimate",
    "block_count",
    "pair_indices",
    "skip_length_continuous",
    "skip_length_finite",
    "skip_length_multi",
    "expected_error_bound_continuous",
    "expected_error_bound_finite",
    "expected_error_bound_multi",
    "highprob_error_bound_continuous",
]


@dataclass(frozen=True)
class SamplePath:
    """A single observed trajectory X_0, ..., X_{n-1}.

    ``alphabet_size`` is None for real-valued paths; for finite-state paths
    the values must be integer symbols in ``[0, alphabet_size)``.
    Stationarity is assumed, not checked.
    """

    values: np.ndarray
    alphabet_size: int | None = None

    def __post_init__(self):
        values = np.asarray(self.values)
        if values.ndim != 1:
            raise ParameterError("sample path must be one-dimensional")
        if values.shape[0] < 2:
            raise ParameterError(f"sample path needs n >= 2, got n={values.shape[0]}")
        if self.alphabet_size is None:
            values = values.astype(np.float64, copy=False)
            if not np.all(np.isfinite(values)):
                raise ParameterError("sample path contains non-finite values")
        else:
            if self.alphabet_size < 1:
                raise ParameterError("alphabet_size must be >= 1")
            ivalues = values.astype(np.int64, copy=False)
            if not np.array_equal(ivalues, values):
                raise ParameterError("finite-state path must hold integer symbols")
            if ivalues.min() < 0 or ivalues.max() >= self.alphabet_size:
                raise ParameterError(
                    f"symbols must lie in [0, {self.alphabet_size}), "
                    f"got range [{ivalues.min()}, {ivalues.max()}]"
                )
            values = ivalues
        object.__setattr__(self, "values", values)

    @property
    def n(self) -> int:
        return int(self.values.shape[0])

    @property
    def is_finite(self) -> bool:
        return self.alphabet_size is not None

    @classmethod
    def continuous(cls, values) -> "SamplePath":
        return cls(np.asarray(values, dtype=np.float64))

    @classmethod
    def finite(cls, values, alphabet_size: int) -> "SamplePath":
        return cls(np.asarray(values), alphabet_size=alphabet_size)


@dataclass(frozen=True)
class MixingEnvelope:
    """Exponential envelope beta(m) <= eta * exp(-gamma * m)."""

    eta: float
    gamma: float

    def __post_init__(self):
        if not (self.eta > 0 and math.isfinite(self.eta)):
            raise ParameterError(f"eta must be positive, got {self.eta}")
        if not (self.gamma > 0 and math.isfinite(self.gamma)):
            raise ParameterError(f"gamma must be positive, got {self.gamma}")

    def value(self, m: int) -> float:
        """Envelope value eta * exp(-gamma * m)."""
        return self.eta * math.exp(-self.gamma * m)


@dataclass(frozen=True)
class SmoothnessSpec:
    """Smoothness class of the bivariate lag density.

    ``s`` > 1 decomposes as ``s = int_part + frac_part`` with a *strictly
    positive* remainder: for integer s the integer part is ``s - 1`` and the
    remainder is 1, otherwise ``int_part = floor(s)``.  ``besov_bound`` is the
    assumed bound on the smoothness norm of the joint density (user supplied;
    it is not estimable from data).
    """

    s: float
    besov_bound: float

    def __post_init__(self):
        if not (self.s > 1 and math.isfinite(self.s)):
            raise ParameterError(f"smoothness s must be > 1, got {self.s}")
        if not (self.besov_bound > 0 and math.isfinite(self.besov_bound)):
            raise ParameterError(f"besov_bound must be positive, got {self.besov_bound}")

    @property
    def int_part(self) -> int:
        s = self.s
        if float(s).is_integer():
            return int(s) - 1
        return int(math.floor(s))

    @property
    def frac_part(self) -> float:
        return self.s - self.int_part


@dataclass(frozen=True)
class BlockPlan:
    """Skip length k, pair lag m, and the resulting block count N(k, n).

    Valid plans require m <= k <= floor(n/8) and N >= 1.  k == m is legal but
    leaves the least separation between consecutive blocks, so it triggers a
    warning.
    """

    k: int
    m: int
    n: int
    N: int = field(init=False)

    def __post_init__(self):
        if self.m < 1:
            raise ParameterError(f"lag m must be >= 1, got {self.m}")
        if self.k < self.m:
            raise ParameterError(f"skip k={self.k} must be >= lag m={self.m}")
        if self.k > self.n // 8:
            raise ParameterError(
                f"skip k={self.k} exceeds floor(n/8)={self.n // 8} for n={self.n}"
            )
        if self.k == self.m:
            warnings.warn(
                "skip length k equals lag m; blocks are only marginally separated",
                stacklevel=2,
            )
        object.__setattr__(self, "N", block_count(self.k, self.n))
        if self.N < 1:
            raise ParameterError(
                f"path too short: N(k={self.k}, n={self.n}) = {self.N} < 1"
            )


def block_count(k: int, n: int) -> int:
    """Number of disjoint pair blocks N(k, n) = floor((n-k) / (2(k+1)))."""
    if k < 1:
        raise ParameterError(f"skip k must be >= 1, got {k}")
    if k > n // 8:
        raise ParameterError(f"skip k={k} exceeds floor(n/8)={n // 8} for n={n}")
    return (n - k) // (2 * (k + 1))


def pair_indices(plan: BlockPlan) -> np.ndarray:
    """Index pairs (2i(k+1), 2i(k+1)+m) for i = 0..N-1, as an (N, 2) array."""
    starts = 2 * (plan.k + 1) * np.arange(plan.N, dtype=np.int64)
    out = np.stack([starts, starts + plan.m], axis=1)
    # by construction the largest index is 2(N-1)(k+1)+m <= n-k-2 < n
    return out


@dataclass(frozen=True)
class BoundParams:
    """Constants entering the continuous-case skip rule and error bounds.

    ``l1`` is the moment constant tying together the second moments of the
    lag-pair density and of the squared kernel; it is not computable from
    data, and 2.0 is the documented default.  With j the integer part of the
    smoothness, c0 the integral of \\|K\\| and c the degree-j absolute moment
    sum of the kernel divided by j!, the derived constants are

        c_tilde = 2 * l1^(j/(j+1)) * (c*Lambda)^(1/(j+1))
        c_bound = (2 + c0) * c_tilde / 2

    (c_bound is the constant the skip rule and the expected-error bound call
    C).  ``c1`` and ``c2`` are the offset and log-coefficient of the
    high-probability bound; they are defined only for j >= 2 and are NaN
    otherwise.
    """

    l1: float
    c_tilde: float
    c_bound: float
    c1: float = math.nan
    c2: float = math.nan

    def __post_init__(self):
        if not (self.l1 > 0 and math.isfinite(self.l1)):
            raise ParameterError(f"l1 must be positive, got {self.l1}")
        if not (self.c_tilde > 0 and math.isfinite(self.c_tilde)):
            raise ParameterError(f"c_tilde must be positive, got {self.c_tilde}")
        if not (self.c_bound > 0 and math.isfinite(self.c_bound)):
            raise ParameterError(f"c_bound must be positive, got {self.c_bound}")

    @classmethod
    def from_kernel(
        cls,
        env: MixingEnvelope,
        smooth: SmoothnessSpec,
        kernel,
        l1: float = 2.0,
    ) -> "BoundParams":
        """Derive all constants from a kernel (any object exposing ``c0``,
        ``l1_norm`` and ``abs_moment_sum(degree)``) and a smoothness spec."""
        j = smooth.int_part
        lam = smooth.besov_bound
        c = kernel.abs_moment_sum(j) / math.factorial(j)
        c_tilde = 2.0 * l1 ** (j / (j + 1)) * (c * lam) ** (1.0 / (j + 1))
        c_bound = (2.0 + kernel.c0) * c_tilde / 2.0
        if j >= 2:
            inner = 1.5 * c_tilde + lam * (c * lam) ** (-(j * j) / (j + 1)) * (
                (j - 1) / 2.0
            ) ** (-(j * j) / (2 * j + 2))
            log_term = math.log(env.gamma * env.eta / (8.0 * c_bound))
            c1 = log_term * inner / env.gamma
            c2 = 4.0 * kernel.l1_norm * log_term / env.gamma + 1.5 * inner / env.gamma
        else:
            c1 = math.nan
            c2 = math.nan
        return cls(l1=l1, c_tilde=c_tilde, c_bound=c_bound, c1=c1, c2=c2)


@dataclass(frozen=True)
class BetaEstimate:
    """Result of one beta(m) estimate plus run diagnostics."""

    m: int
    beta_hat: float
    k: int
    n_pairs: int
    estimator: str
    diagnostics: dict = field(default_factory=dict)


def _rate_exponent(j: int) -> float:
    # exponent of n in the continuous-case error rate
    return j / (2.0 * j + 2.0)


def _log_weight(j: int) -> float:
    # coefficient of log(n) inside the skip rule and the expected-error bound
    return (3.0 * j + 2.0) / (2.0 * j + 2.0)


def _check_skip_range(k: int, n: int, context: str) -> int:
    if k < 1 or k > n // 8:
        raise ParameterError(
            f"sample too short for these mixing parameters: {context} gives "
            f"k={k}, outside [1, floor(n/8)={n // 8}]"
        )
    return k


def skip_length_continuous(
    env: MixingEnvelope,
    smooth: SmoothnessSpec,
    bounds: BoundParams,
    n: int,
) -> int:
    """Rate-optimal skip length for the continuous-state estimator.

    k = floor( (1/gamma) * ( log(gamma*eta / (8*C)) + ((3j+2)/(2j+2)) log n ) )

    with j the integer smoothness part and C = ``bounds.c_bound``.  A result
    outside [1, floor(n/8)] is an error, never a silent clamp: outside that
    range the error guarantees backing this choice are void.
    """
    j = smooth.int_part
    raw = (
        math.log(env.gamma * env.eta / (8.0 * bounds.c_bound))
        + _log_weight(j) * math.log(n)
    ) / env.gamma
    return _check_skip_range(math.floor(raw), n, "continuous skip rule")


def _check_finite_admissible(env: MixingEnvelope, alphabet_size: int, n: int) -> None:
    lower1 = (math.sqrt(2.0) * alphabet_size * math.exp(2.0 * env.gamma) / (env.eta * env.gamma)) ** (2.0 / 3.0)
    lower2 = (env.eta * env.gamma / alphabet_size) ** (2.0 / 3.0)
    needed = max(lower1, lower2)
    if n < needed:
        raise ParameterError(
            f"n={n} violates the finite-state admissibility condition "
            f"n >= max((sqrt(2)|X|e^(2 gamma)/(eta gamma))^(2/3), "
            f"(eta gamma/|X|)^(2/3)) = {needed:.6g}"
        )


def skip_length_finite(env: MixingEnvelope, alphabet_size: int, n: int) -> int:
    """Skip length for single-lag estimation over a finite alphabet.

    k = floor( (1/gamma) * log( eta*gamma*n^(3/2) / (sqrt(2)*|X|) ) ),
    admissible only for n large enough (see the domain check).
    """
    if alphabet_size < 2:
        raise ParameterError(f"alphabet_size must be >= 2, got {alphabet_size}")
    _check_finite_admissible(env, alphabet_size, n)
    arg = env.eta * env.gamma * n ** 1.5 / (math.sqrt(2.0) * alphabet_size)
    raw = math.log(arg) / env.gamma
    return _check_skip_range(math.floor(raw), n, "finite-state skip rule")


def skip_length_multi(env: MixingEnvelope, alphabet_size: int, n: int) -> int:
    """Skip length for simultaneous estimation of beta(m) for all m <= k.

    k = floor( (1/gamma) * log( eta*gamma*n^(3/2)
                                / (4*sqrt(2)*|X|^2*log2(n*|X|)) ) )

    The side conditions n >= 4*sqrt(2)*|X|^3*e^gamma/(eta*gamma) and
    n >= 2k(k+1)/(3k+2) are enforced by rejection, not adjustment.
    """
    if alphabet_size < 2:
        raise ParameterError(f"alphabet_size must be >= 2, got {alphabet_size}")
    lower = 4.0 * math.sqrt(2.0) * alphabet_size ** 3 * math.exp(env.gamma) / (env.eta * env.gamma)
    if n < lower:
        raise ParameterError(
            f"n={n} violates the multi-lag admissibility condition "
            f"n >= 4*sqrt(2)*|X|^3*e^gamma/(eta*gamma) = {lower:.6g}"
        )
    denom = 4.0 * math.sqrt(2.0) * alphabet_size ** 2 * math.log2(n * alphabet_size)
    arg = env.eta * env.gamma * n ** 1.5 / denom
    if arg <= 1.0:
        raise ParameterError(
            f"skip rule degenerate: log argument {arg:.6g} <= 1 for n={n}"
        )
    k = _check_skip_range(math.floor(math.log(arg) / env.gamma), n, "multi-lag skip rule")
    side = 2.0 * k * (k + 1) / (3.0 * k + 2)
    if n < side:
        raise ParameterError(
            f"n={n} violates the side condition n >= 2k(k+1)/(3k+2) = {side:.6g} for k={k}"
        )
    return k


def expected_error_bound_continuous(
    env: MixingEnvelope,
    smooth: SmoothnessSpec,
    bounds: BoundParams,
    n: int,
) -> float:
    """Bound on the expected estimation error of the continuous estimator
    run at the rate-optimal skip length:

        (8*C*n^(-j/(2j+2)) / gamma)
            * ( e^gamma + log(gamma*eta/(8*C)) + ((3j+2)/(2j+2)) log n ).
    """
    skip_length_continuous(env, smooth, bounds, n)  # admissibility gate
    j = smooth.int_part
    c = bounds.c_bound
    log_term = math.log(env.gamma * env.eta / (8.0 * c))
    return (
        8.0 * c * n ** (-_rate_exponent(j)) / env.gamma
        * (math.exp(env.gamma) + log_term + _log_weight(j) * math.log(n))
    )


def expected_error_bound_finite(env: MixingEnvelope, alphabet_size: int, n: int) -> float:
    """Expected-error bound for the finite-alphabet single-lag estimator:

        (sqrt(8)*|X|*n^(-1/2) / gamma)
            * ( e + log(eta*gamma/(sqrt(2)*|X|)) + (3/2) log n ).
    """
    skip_length_finite(env, alphabet_size, n)  # admissibility gate
    log_term = math.log(env.eta * env.gamma / (math.sqrt(2.0) * alphabet_size))
    return (
        math.sqrt(8.0) * alphabet_size / (env.gamma * math.sqrt(n))
        * (math.e + log_term + 1.5 * math.log(n))
    )


def expected_error_bound_multi(env: MixingEnvelope, alphabet_size: int, n: int) -> float:
    """Expected-error bound on sup_m |estimate - beta(m)| over all lags
    m <= `skip_length_multi`:

        (4*sqrt(2)*|X|^2*n^(-1/2)*log2(n*|X|) / gamma) * ( e + log(A) )

    where A is the argument of the multi-lag skip rule's logarithm.
    """
    skip_length_multi(env, alphabet_size, n)  # admissibility gate
    l2 = math.log2(n * alphabet_size)
    arg = env.eta * env.gamma * n ** 1.5 / (4.0 * math.sqrt(2.0) * alphabet_size ** 2 * l2)
    return (
        4.0 * math.sqrt(2.0) * alphabet_size ** 2 * l2 / (env.gamma * math.sqrt(n))
        * (math.e + math.log(arg))
    )


def highprob_error_bound_continuous(
    env: MixingEnvelope,
    smooth: SmoothnessSpec,
    bounds: BoundParams,
    kernel,
    n: int,
) -> tuple[float, float]:
    """High-probability bound for the continuous estimator.

    Returns ``(bound, probability)``: with the stated probability,

        |error| <= 64*(1 + c0/2) * (c1 + c2*log(n) + 6*||K||_1*log^2(n)/gamma)
                   * n^(-j/(2j+2)),

    and probability >= 1 - 8*C*n^(-j/(2j+2)).  Requires integer smoothness
    part >= 2 (c1, c2 are undefined below that).
    """
    j = smooth.int_part
    if j < 2 or not (math.isfinite(bounds.c1) and math.isfinite(bounds.c2)):
        raise ParameterError(
            "high-probability bound requires integer smoothness part >= 2"
        )
    skip_length_continuous(env, smooth, bounds, n)  # admissibility gate
    logn = math.log(n)
    rate = n ** (-_rate_exponent(j))
    value = (
        64.0 * (1.0 + kernel.c0 / 2.0)
        * (bounds.c1 + bounds.c2 * logn + 6.0 * kernel.l1_norm * logn ** 2 / env.gamma)
        * rate
    )
    probability = 1.0 - 8.0 * bounds.c_bound * rate
    return value, probability
