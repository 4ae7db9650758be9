"""Continuous-state beta estimation via bivariate kernel density estimates.

The estimator forms nearly independent pairs Z_i from the path, tabulates

    f_hat(z) = (1/(N h^2)) sum_i K((z - Z_i)/h)

on a uniform square grid, integrates out the second coordinate to get the
marginal estimate, and returns half the grid-quadrature L1 distance between
the joint table and the outer product of the marginal with itself.  Grid
summation is exact (no kernel truncation); pairs are accumulated in a
canonical sort order so the result is bit-identical under any permutation of
the input pairs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.integrate import quad

from .errors import NumericalError, ParameterError
from .core import (
    BetaEstimate,
    BlockPlan,
    BoundParams,
    MixingEnvelope,
    SamplePath,
    SmoothnessSpec,
    pair_indices,
    skip_length_continuous,
)

__all__ = [
    "KernelSpec",
    "BandwidthRule",
    "GridSpec",
    "GridPolicy",
    "DensityGrid",
    "gaussian_kernel",
    "product_order4_kernel",
    "bandwidth",
    "grid_for_pairs",
    "kde_on_grid",
    "marginalize_x",
    "tv_half_distance",
    "estimate_beta_kde",
]

_MOMENT_TOL = 1e-6
_MASS_BAND = (0.98, 1.02)
# quadrature support for kernel constants; both factors decay like exp(-u^2/2)
_QUAD_LIMIT = 12.0


@dataclass(frozen=True)
class KernelSpec:
    """A bivariate kernel together with the constants the bound formulas use.

    ``evaluate(z1, z2)`` is vectorized; ``factor1d`` is the one-dimensional
    factor of a product kernel K(z1, z2) = g(z1) g(z2) (all built-in kernels
    are products, which the grid evaluation exploits).  ``order`` is the
    largest even integer such that every mixed moment of total degree below
    it vanishes; ``c0`` is the integral of |K|, equal to the L1 norm
    ``l1_norm``; ``c_ell`` is the absolute moment sum of total degree
    ``order``; ``weighted_sq_integral`` is the integral of
    K(z)^2 (1 + |z|^2).
    """

    order: int
    evaluate: Callable[[np.ndarray, np.ndarray], np.ndarray]
    factor1d: Callable[[np.ndarray], np.ndarray] | None
    c0: float
    c_ell: float
    l1_norm: float
    weighted_sq_integral: float
    kink_points: tuple = ()

    def _abs_moment_1d(self, degree: int) -> float:
        if self.factor1d is None:
            raise ParameterError("moment computation needs a product kernel (factor1d)")
        val, _ = quad(
            lambda u: abs(u) ** degree * abs(self.factor1d(u)),
            -_QUAD_LIMIT,
            _QUAD_LIMIT,
            points=self.kink_points or None,
            limit=200,
        )
        return val

    def _signed_moment_1d(self, degree: int) -> float:
        if self.factor1d is None:
            raise ParameterError("moment computation needs a product kernel (factor1d)")
        val, _ = quad(
            lambda u: u ** degree * self.factor1d(u),
            -_QUAD_LIMIT,
            _QUAD_LIMIT,
            points=self.kink_points or None,
            limit=200,
        )
        return val

    def abs_moment_sum(self, degree: int) -> float:
        """sum over i+j = degree of the integral of |z1|^i |z2|^j |K(z)|."""
        if degree < 0:
            raise ParameterError(f"moment degree must be >= 0, got {degree}")
        a = [self._abs_moment_1d(i) for i in range(degree + 1)]
        return float(sum(a[i] * a[degree - i] for i in range(degree + 1)))

    def validate(self) -> None:
        """Numeric sanity checks: unit integral, vanishing low moments,
        c0 >= 1.  Tolerance 1e-6."""
        total = self._signed_moment_1d(0) ** 2
        if abs(total - 1.0) > _MOMENT_TOL:
            raise ParameterError(f"kernel integral {total} differs from 1 beyond 1e-6")
        signed = [self._signed_moment_1d(i) for i in range(self.order)]
        for i in range(self.order):
            for j in range(self.order - i):
                if i == 0 and j == 0:
                    continue
                moment = signed[i] * signed[j]
                if abs(moment) > _MOMENT_TOL:
                    raise ParameterError(
                        f"kernel moment of degree ({i},{j}) is {moment}, not 0"
                    )
        if self.c0 < 1.0 - _MOMENT_TOL:
            raise ParameterError(f"c0 = {self.c0} < 1 is impossible for a unit-mass kernel")


def _gaussian_1d(u):
    u = np.asarray(u, dtype=np.float64)
    return np.exp(-0.5 * u * u) / math.sqrt(2.0 * math.pi)


def gaussian_kernel() -> KernelSpec:
    """Standard bivariate Gaussian kernel (order 2, c0 = 1)."""

    def evaluate(z1, z2):
        z1 = np.asarray(z1, dtype=np.float64)
        z2 = np.asarray(z2, dtype=np.float64)
        return np.exp(-0.5 * (z1 * z1 + z2 * z2)) / (2.0 * math.pi)

    # c_ell: degree-2 absolute moment sum = 1 + (sqrt(2/pi))^2 + 1
    # weighted square integral: 1/(4 pi) + 1/(4 pi)
    spec = KernelSpec(
        order=2,
        evaluate=evaluate,
        factor1d=_gaussian_1d,
        c0=1.0,
        c_ell=2.0 + 2.0 / math.pi,
        l1_norm=1.0,
        weighted_sq_integral=1.0 / (2.0 * math.pi),
    )
    spec.validate()
    return spec


def _order4_factor(u):
    u = np.asarray(u, dtype=np.float64)
    return 0.5 * (3.0 - u * u) * np.exp(-0.5 * u * u) / math.sqrt(2.0 * math.pi)


def product_order4_kernel() -> KernelSpec:
    """Fourth-order product kernel with 1D factor (1/2)(3 - u^2) phi(u).

    The factor integrates to 1 with vanishing moments of degree 1-3, so the
    product kernel has order 4.  Its constants are computed numerically at
    construction (the factor changes sign at |u| = sqrt(3), so c0 > 1).
    """

    def evaluate(z1, z2):
        return _order4_factor(z1) * _order4_factor(z2)

    root3 = math.sqrt(3.0)
    kinks = (-root3, root3)
    abs_moments = [
        quad(
            lambda u, i=i: abs(u) ** i * abs(_order4_factor(u)),
            -_QUAD_LIMIT,
            _QUAD_LIMIT,
            points=kinks,
            limit=200,
        )[0]
        for i in range(5)
    ]
    sq_plain, _ = quad(lambda u: _order4_factor(u) ** 2, -_QUAD_LIMIT, _QUAD_LIMIT, limit=200)
    sq_u2, _ = quad(lambda u: u * u * _order4_factor(u) ** 2, -_QUAD_LIMIT, _QUAD_LIMIT, limit=200)
    c0 = abs_moments[0] ** 2
    c_ell = sum(abs_moments[i] * abs_moments[4 - i] for i in range(5))
    weighted = sq_plain ** 2 + 2.0 * sq_plain * sq_u2
    spec = KernelSpec(
        order=4,
        evaluate=evaluate,
        factor1d=_order4_factor,
        c0=c0,
        c_ell=float(c_ell),
        l1_norm=c0,
        weighted_sq_integral=weighted,
        kink_points=kinks,
    )
    spec.validate()
    return spec


@dataclass(frozen=True)
class BandwidthRule:
    """Bandwidth selection: ``scott`` (h = N^(-1/6) for bivariate data),
    ``smoothness`` (the rate-optimal rule tied to the smoothness class), or
    ``fixed``."""

    kind: str
    value: float | None = None

    _KINDS = ("scott", "smoothness", "fixed")

    def __post_init__(self):
        if self.kind not in self._KINDS:
            raise ParameterError(f"unknown bandwidth rule {self.kind!r}")
        if self.kind == "fixed" and not (self.value and self.value > 0):
            raise ParameterError("fixed bandwidth rule needs a positive value")

    @classmethod
    def scott(cls) -> "BandwidthRule":
        return cls("scott")

    @classmethod
    def smoothness_adapted(cls) -> "BandwidthRule":
        return cls("smoothness")

    @classmethod
    def fixed(cls, h: float) -> "BandwidthRule":
        return cls("fixed", value=h)


def bandwidth(
    rule: BandwidthRule,
    smooth: SmoothnessSpec | None,
    kernel: KernelSpec | None,
    n_or_N: int,
) -> float:
    """Resolve a bandwidth rule to a concrete h > 0.

    ``scott``: h = n^(-1/(4+d)) with d = 2.
    ``smoothness``: h = (c*Lambda)^(-j/(j+1)) * ((j-1)/2)^(-j/(2j+2))
                        * n^(-1/(2j+2))
    with j the integer smoothness part and c the degree-j absolute kernel
    moment sum over j!.  The rule is degenerate for j = 1 (the middle factor
    is 0 to a negative power) and that case is rejected rather than guessed.
    """
    if rule.kind == "fixed":
        return float(rule.value)
    if n_or_N < 2:
        raise ParameterError(f"bandwidth rules need at least 2 points, got {n_or_N}")
    if rule.kind == "scott":
        return float(n_or_N) ** (-1.0 / 6.0)
    # smoothness-adapted rule
    if smooth is None or kernel is None:
        raise ParameterError("smoothness bandwidth rule needs a smoothness spec and kernel")
    j = smooth.int_part
    if j == 1:
        raise ParameterError("bandwidth rule degenerate for integer smoothness part 1")
    if kernel.order < j:
        raise ParameterError(
            f"kernel order {kernel.order} is below the integer smoothness part {j}"
        )
    c = kernel.abs_moment_sum(j) / math.factorial(j)
    clam = c * smooth.besov_bound
    return (
        clam ** (-j / (j + 1.0))
        * ((j - 1.0) / 2.0) ** (-j / (2.0 * j + 2.0))
        * float(n_or_N) ** (-1.0 / (2.0 * j + 2.0))
    )


@dataclass(frozen=True)
class GridSpec:
    """Geometry of a uniform rectangular grid (equal step on both axes)."""

    xmin: float
    xmax: float
    ymin: float
    ymax: float
    step: float

    def __post_init__(self):
        if self.step <= 0:
            raise ParameterError(f"grid step must be positive, got {self.step}")
        if self.xmax <= self.xmin or self.ymax <= self.ymin:
            raise ParameterError("grid bounds must be ordered")

    @property
    def nx(self) -> int:
        return int(round((self.xmax - self.xmin) / self.step)) + 1

    @property
    def ny(self) -> int:
        return int(round((self.ymax - self.ymin) / self.step)) + 1

    def nodes_x(self) -> np.ndarray:
        return self.xmin + self.step * np.arange(self.nx)

    def nodes_y(self) -> np.ndarray:
        return self.ymin + self.step * np.arange(self.ny)

    def matches(self, other: "GridSpec", tol: float = 1e-9) -> bool:
        return (
            abs(self.xmin - other.xmin) <= tol
            and abs(self.xmax - other.xmax) <= tol
            and abs(self.ymin - other.ymin) <= tol
            and abs(self.ymax - other.ymax) <= tol
            and abs(self.step - other.step) <= tol
        )


@dataclass(frozen=True)
class DensityGrid:
    """Values of a density (or signed density difference) on a GridSpec,
    stored row-major: ``values[i, j]`` is the value at (x_i, y_j)."""

    spec: GridSpec
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        if values.shape != (self.spec.nx, self.spec.ny):
            raise ParameterError(
                f"values shape {values.shape} does not match grid "
                f"({self.spec.nx}, {self.spec.ny})"
            )
        object.__setattr__(self, "values", values)

    def mass(self) -> float:
        return float(self.spec.step ** 2 * self.values.sum())

    def write_csv(self, filename) -> None:
        """CSV header line naming the geometry fields, one line with their
        values, then the table one x-row per line (>= 12 significant digits)."""
        s = self.spec
        with open(filename, "w") as fh:
            fh.write("xmin,xmax,ymin,ymax,step\n")
            fh.write(
                f"{s.xmin:.17g},{s.xmax:.17g},{s.ymin:.17g},{s.ymax:.17g},{s.step:.17g}\n"
            )
            for row in self.values:
                fh.write(",".join(f"{v:.15g}" for v in row) + "\n")

    @classmethod
    def read_csv(cls, filename) -> "DensityGrid":
        with open(filename) as fh:
            header = fh.readline().strip()
            if header.split(",") != ["xmin", "xmax", "ymin", "ymax", "step"]:
                raise ParameterError(f"unrecognized grid header {header!r}")
            xmin, xmax, ymin, ymax, step = (float(t) for t in fh.readline().split(","))
            rows = [
                [float(t) for t in line.split(",")]
                for line in fh
                if line.strip()
            ]
        return cls(GridSpec(xmin, xmax, ymin, ymax, step), np.array(rows))


@dataclass(frozen=True)
class GridPolicy:
    """How to choose grid geometry from the pair sample.

    Default bounds are [min - pad*h, max + pad*h] over all pair coordinates,
    shared by both axes so that the marginal table lives on the same nodes,
    with the step set so the grid has at most ``max_nodes`` per axis.  When
    that step cannot resolve the bandwidth (step > h/2, as happens for
    heavy-tailed samples whose extremes dwarf the bulk), the bounds fall back
    to progressively trimmed sample quantiles; the trim never exceeds 0.25%
    per tail, keeping the mass loss far inside the 2% grid-mass tolerance.
    """

    pad_bandwidths: float = 4.0
    max_nodes: int = 400
    step: float | None = None
    bounds: tuple[float, float] | None = None

    _TRIM_LEVELS = (1e-4, 5e-4, 1e-3, 2.5e-3)

    def resolve(self, pairs: np.ndarray, h: float) -> GridSpec:
        coords = np.asarray(pairs, dtype=np.float64).ravel()
        pad = self.pad_bandwidths * h
        if self.bounds is not None:
            lo, hi = self.bounds
        else:
            lo = float(coords.min()) - pad
            hi = float(coords.max()) + pad
            if self.step is None:
                for level in self._TRIM_LEVELS:
                    if (hi - lo) / (self.max_nodes - 1) <= 0.5 * h:
                        break
                    qlo, qhi = np.quantile(coords, [level, 1.0 - level])
                    lo, hi = float(qlo) - pad, float(qhi) + pad
        step = self.step if self.step is not None else (hi - lo) / (self.max_nodes - 1)
        return GridSpec(xmin=lo, xmax=hi, ymin=lo, ymax=hi, step=step)


def grid_for_pairs(pairs, h: float, policy: GridPolicy | None = None) -> GridSpec:
    """Grid geometry for a KDE of the given pairs at bandwidth h."""
    return (policy or GridPolicy()).resolve(np.asarray(pairs), h)


_CHUNK = 4096
# kernel evaluations farther than this many bandwidths from a node (in either
# coordinate) are skipped; at 8 bandwidths a Gaussian factor is ~5e-15
_TRUNC_RADIUS = 8.0


def kde_on_grid(pairs, kernel: KernelSpec, h: float, spec: GridSpec) -> DensityGrid:
    """Tabulate (1/(N h^2)) sum_i K((z - Z_i)/h) at every grid node.

    Evaluations beyond 8 bandwidths from a node are skipped; everything else
    is summed exactly.  Pairs are processed in lexicographic order so the
    output is bit-identical no matter how the input sequence is permuted.
    """
    p = np.asarray(pairs, dtype=np.float64)
    if p.ndim != 2 or p.shape[1] != 2 or p.shape[0] < 1:
        raise ParameterError("pairs must be a nonempty (N, 2) array")
    if not (h > 0 and math.isfinite(h)):
        raise ParameterError(f"bandwidth must be positive, got {h}")
    p = p[np.lexsort((p[:, 1], p[:, 0]))]
    n_pairs = p.shape[0]
    xs = spec.nodes_x()
    ys = spec.nodes_y()
    vals = np.zeros((spec.nx, spec.ny))
    if kernel.factor1d is not None:
        for lo in range(0, n_pairs, _CHUNK):
            px = p[lo : lo + _CHUNK, 0][:, None]
            py = p[lo : lo + _CHUNK, 1][:, None]
            ux = (xs[None, :] - px) / h
            uy = (ys[None, :] - py) / h
            ax = kernel.factor1d(ux)
            ay = kernel.factor1d(uy)
            # nodes beyond the truncation radius contribute < 1e-13 of a
            # single kernel's mass; zeroing them also keeps subnormals out
            # of the accumulation, which would cripple the matrix product
            ax[np.abs(ux) > _TRUNC_RADIUS] = 0.0
            ay[np.abs(uy) > _TRUNC_RADIUS] = 0.0
            vals += ax.T @ ay
    else:
        gx = xs[:, None]
        gy = ys[None, :]
        for px, py in p:
            vals += kernel.evaluate((gx - px) / h, (gy - py) / h)
    vals /= n_pairs * h * h
    return DensityGrid(spec, vals)


def marginalize_x(grid: DensityGrid) -> np.ndarray:
    """First-coordinate marginal by quadrature over y:
    out[i] = step * sum_j values[i, j], tabulated at the grid's x nodes."""
    return grid.spec.step * grid.values.sum(axis=1)


def tv_half_distance(a: DensityGrid, b: DensityGrid) -> float:
    """Half the grid-quadrature L1 distance (1/2) step^2 sum |a - b|."""
    if not a.spec.matches(b.spec):
        raise ParameterError("grids must share bounds and step")
    return 0.5 * float(a.spec.step ** 2 * np.abs(a.values - b.values).sum())


def _extract_pairs(path: SamplePath, m: int, k: int) -> np.ndarray:
    x = path.values
    if k == 0:
        if m >= path.n:
            raise ParameterError(f"lag m={m} requires n > m, got n={path.n}")
        return np.stack([x[: path.n - m], x[m:]], axis=1)
    plan = BlockPlan(k=k, m=m, n=path.n)
    idx = pair_indices(plan)
    return x[idx]


def estimate_beta_kde(
    path: SamplePath,
    m: int,
    k: int | str,
    kernel: KernelSpec | None = None,
    bandwidth_rule: BandwidthRule | None = None,
    grid_policy: GridPolicy | None = None,
    envelope: MixingEnvelope | None = None,
    smoothness: SmoothnessSpec | None = None,
    bound_params: BoundParams | None = None,
) -> BetaEstimate:
    """Beta(m) estimate for a real-valued path.

    ``k`` is the skip length; 0 uses every overlapping pair (X_t, X_{t+m}),
    and ``"auto"`` resolves the rate-optimal skip length from the mixing
    envelope, smoothness spec, and bound constants.  The returned value is
    clamped to [0, 1]; the raw quadrature value (which can exceed 1 slightly
    with signed kernels) is kept in ``diagnostics["raw_beta_hat"]``.
    """
    if path.is_finite:
        raise ParameterError("KDE estimator needs a real-valued path")
    if m < 1:
        raise ParameterError(f"lag m must be >= 1, got {m}")
    kernel = kernel or gaussian_kernel()
    bandwidth_rule = bandwidth_rule or BandwidthRule.scott()
    grid_policy = grid_policy or GridPolicy()
    if k == "auto":
        if envelope is None or smoothness is None or bound_params is None:
            raise ParameterError(
                "k='auto' needs envelope, smoothness, and bound_params"
            )
        k = skip_length_continuous(envelope, smoothness, bound_params, path.n)
    if not isinstance(k, (int, np.integer)) or k < 0:
        raise ParameterError(f"skip k must be an integer >= 0 or 'auto', got {k!r}")
    k = int(k)
    pairs = _extract_pairs(path, m, k)
    n_pairs = pairs.shape[0]
    if n_pairs < 2:
        raise ParameterError(f"need at least 2 pairs, got {n_pairs}")
    h = bandwidth(bandwidth_rule, smoothness, kernel, n_pairs)
    spec = grid_policy.resolve(pairs, h)
    joint = kde_on_grid(pairs, kernel, h, spec)
    mass = joint.mass()
    if not (_MASS_BAND[0] <= mass <= _MASS_BAND[1]):
        raise NumericalError(
            f"KDE grid mass {mass:.4f} outside [{_MASS_BAND[0]}, {_MASS_BAND[1]}]; "
            "grid bounds or step are inadequate for this sample"
        )
    marginal = marginalize_x(joint)
    product = DensityGrid(spec, np.outer(marginal, marginal))
    raw = tv_half_distance(joint, product)
    beta = min(max(raw, 0.0), 1.0)
    return BetaEstimate(
        m=m,
        beta_hat=beta,
        k=k,
        n_pairs=n_pairs,
        estimator="kde",
        diagnostics={
            "raw_beta_hat": raw,
            "bandwidth": h,
            "grid_step": spec.step,
            "grid_nodes": float(spec.nx),
            "grid_lo": spec.xmin,
            "grid_hi": spec.xmax,
            "kde_mass": mass,
            "marginal_mass": float(spec.step * marginal.sum()),
        },
    )
