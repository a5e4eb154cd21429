"""Closed-form results for the continuum cascade-size distribution.

The model: a population starts at size 1 and generation n+1 is drawn as
Gamma(2 X_n, p) given generation size X_n.  The total cascade size
Z = sum of all generations has, on the event that the cascade dies out,
the exact density

    g(x) = (x - 1)^(2x - 1) exp(-(1/p + 2 ln p) x + 1/p) / (x Gamma(2x)),

supported on x >= 1 with g(1) = 0.  This module evaluates g in log
space, its large-x exponential-power-law asymptote, the subcritical
mean and variance, the probability that the cascade is finite, and a
quadrature self-check that the density mass equals that probability.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import numerics
from .errors import CriticalityError, DomainError, ToleranceError
from .numerics import Interval, QuadratureResult

__all__ = [
    "ModelParams",
    "Moments",
    "ExtinctionReport",
    "NormalizationCheck",
    "DensityTable",
    "log_density",
    "density",
    "asymptotic_log_density",
    "moments",
    "numeric_moments",
    "extinction",
    "extinction_gap_root",
    "verify_normalization",
    "density_table",
]

_LOG_TWO_SQRT_PI = math.log(2.0) + 0.5 * math.log(math.pi)
_CRITICAL_P = 0.5


@dataclass(frozen=True)
class ModelParams:
    """Offspring scale p > 0 for Gamma(2, p) generations.

    The shape is fixed at k = 2: each unit of current population
    contributes a Gamma(2, p) block to the next generation, so the
    per-unit offspring mean is 2p and criticality sits at p = 1/2.
    """

    p: float
    k: int = 2

    def __post_init__(self):
        if self.k != 2:
            raise DomainError(f"only the shape k = 2 model is implemented, got k = {self.k!r}")
        try:
            p = float(self.p)
        except (TypeError, ValueError) as exc:
            raise DomainError(f"p must be a positive real, got {self.p!r}") from exc
        if not (math.isfinite(p) and p > 0.0):
            raise DomainError(f"p must be a positive real, got {self.p!r}")
        object.__setattr__(self, "p", p)

    @property
    def offspring_mean(self) -> float:
        return 2.0 * self.p

    @property
    def subcritical(self) -> bool:
        return self.p < _CRITICAL_P


@dataclass(frozen=True)
class Moments:
    mean: float
    variance: float

    def __post_init__(self):
        if not (math.isfinite(self.mean) and math.isfinite(self.variance)):
            raise DomainError(f"moments must be finite, got {self!r}")
        if self.variance < 0.0:
            raise DomainError(f"variance must be nonnegative, got {self.variance!r}")


@dataclass(frozen=True)
class ExtinctionReport:
    """Probability that the cascade is finite.

    decay_gap is the nonnegative root x* of x = 2 ln(1 + p x); the
    finite-cascade probability is exp(-x*).  Subcritical and critical
    cascades die out surely, so there decay_gap = 0 and prob_finite = 1.
    """

    p: float
    decay_gap: float
    log_prob_finite: float
    prob_finite: float

    def __post_init__(self):
        if self.decay_gap < 0.0:
            raise DomainError(f"decay_gap must be >= 0, got {self.decay_gap!r}")
        if not 0.0 < self.prob_finite <= 1.0:
            raise DomainError(f"prob_finite must lie in (0, 1], got {self.prob_finite!r}")
        if not math.isclose(self.prob_finite, math.exp(self.log_prob_finite), rel_tol=1e-12):
            raise DomainError("prob_finite and log_prob_finite disagree")


@dataclass(frozen=True)
class NormalizationCheck:
    """Outcome of integrating the density against its target mass."""

    integral: float
    target: float
    residual: float
    x_max: float
    tail_estimate: float
    quadrature: QuadratureResult


@dataclass(frozen=True)
class DensityTable:
    params: ModelParams
    x: np.ndarray
    density: np.ndarray
    asymptotic: np.ndarray

    def __post_init__(self):
        if not (len(self.x) == len(self.density) == len(self.asymptotic)):
            raise DomainError("table columns must share one length")
        if np.any(np.diff(self.x) <= 0.0):
            raise DomainError("abscissas must be strictly increasing")
        for column in (self.density, self.asymptotic):
            if np.any(~np.isfinite(column)) or np.any(column < 0.0):
                raise DomainError("density columns must be finite and nonnegative")


def log_density(params: ModelParams, x: float) -> float:
    """ln g(x) for x >= 1; returns -inf at x = 1 where the density vanishes."""
    x = float(x)
    if not math.isfinite(x) or x < 1.0:
        raise DomainError(f"density is supported on x >= 1, got {x!r}")
    if x == 1.0:
        return -math.inf
    p = params.p
    return (
        (2.0 * x - 1.0) * math.log(x - 1.0)
        - (1.0 / p + 2.0 * math.log(p)) * x
        + 1.0 / p
        - math.log(x)
        - numerics.log_gamma(2.0 * x)
    )


def density(params: ModelParams, x: float) -> float:
    lg = log_density(params, x)
    return 0.0 if lg == -math.inf else math.exp(lg)


def _tail_constants(params: ModelParams) -> tuple[float, float]:
    """(ln C, a) of the asymptote g(x) ~ C exp(-a x) x^(-3/2)."""
    p = params.p
    log_c = 1.0 / p - 2.0 + math.log(2.0) - _LOG_TWO_SQRT_PI
    a = (1.0 - 2.0 * p) / p + 2.0 * math.log(2.0 * p)
    return log_c, a


def asymptotic_log_density(params: ModelParams, x: float) -> float:
    """Large-x approximation ln C - a x - (3/2) ln x.

    The decay rate a = (1 - 2p)/p + 2 ln(2p) is strictly positive away
    from criticality and vanishes exactly at p = 1/2, where the density
    degenerates to the pure power law C x^(-3/2).
    """
    x = float(x)
    if not math.isfinite(x) or x < 1.0:
        raise DomainError(f"asymptote is evaluated on x >= 1, got {x!r}")
    log_c, a = _tail_constants(params)
    return log_c - a * x - 1.5 * math.log(x)


def moments(params: ModelParams) -> Moments:
    """Exact subcritical mean 1/(1 - 2p) and variance 2 p^2 / (1 - 2p)^3."""
    if not params.subcritical:
        raise CriticalityError(
            f"cascade moments require p < {_CRITICAL_P} (offspring mean below one), got p = {params.p!r}"
        )
    shortfall = 1.0 - 2.0 * params.p
    return Moments(mean=1.0 / shortfall, variance=2.0 * params.p**2 / shortfall**3)


def extinction(params: ModelParams) -> ExtinctionReport:
    """Finite-cascade probability via the lower Lambert W branch.

    For p > 1/2 the root of x = 2 ln(1 + p x) is
    x* = -(2 W_{-1}(-exp(-1/(2p)) / (2p)) + 1/p); at or below
    criticality the cascade is finite with probability one.
    """
    p = params.p
    if p <= _CRITICAL_P:
        return ExtinctionReport(p=p, decay_gap=0.0, log_prob_finite=0.0, prob_finite=1.0)
    argument = -math.exp(-1.0 / (2.0 * p)) / (2.0 * p)
    log_prob = 2.0 * numerics.lambert_w_m1(argument) + 1.0 / p
    gap = max(-log_prob, 0.0)
    return ExtinctionReport(
        p=p, decay_gap=gap, log_prob_finite=-gap, prob_finite=math.exp(-gap)
    )


def extinction_gap_root(params: ModelParams, tol: float = numerics.DEFAULT_ROOT_TOL) -> float:
    """The same decay gap found by solving x = 2 ln(1 + p x) directly.

    Independent of the Lambert route above; the two are cross-checked
    in the verification suite.  Returns 0 at or below criticality.
    """
    p = params.p
    if p <= _CRITICAL_P:
        return 0.0

    def gap_balance(x: float) -> float:
        return 2.0 * math.log1p(p * x) - x

    lo = 1e-12
    hi = 1.0
    while gap_balance(hi) > 0.0:
        hi *= 2.0
        if hi > 2.0**60:
            raise CriticalityError(f"no finite decay gap bracket found for p = {p!r}")
    return numerics.solve_bracketed(gap_balance, Interval(lo, hi), tol=tol)


def numeric_moments(params: ModelParams, abs_tol: float = 1e-8) -> Moments:
    """Mean and variance by integrating the density; subcritical only.

    A quadrature cross-check for the closed forms in moments(): the
    first and second moments are integrated on [1, X] with X chosen so
    the asymptotic tail beyond it is below abs_tol / 10, then the tail
    is added back from the asymptote.
    """
    if not params.subcritical:
        raise CriticalityError(
            f"numeric moments require p < {_CRITICAL_P}, got p = {params.p!r}"
        )
    if not (math.isfinite(abs_tol) and abs_tol > 0.0):
        raise DomainError(f"abs_tol must be positive and finite, got {abs_tol!r}")
    log_c, a = _tail_constants(params)
    c = math.exp(log_c)

    x_max = 32.0
    # Tail of the second-moment integrand: int_X x^2 C e^{-ax} x^{-3/2} dx
    # <= 2 C e^{-aX} sqrt(X) / a once a X >= 1.
    while 2.0 * c * math.exp(-a * x_max) * math.sqrt(x_max) / a > abs_tol / 10.0:
        x_max *= 2.0
        if x_max > 1.1e7:
            raise ToleranceError(
                f"second-moment tail bound not attainable at abs_tol = {abs_tol!r} "
                f"for near-critical p = {params.p!r}"
            )

    span = Interval(1.0, x_max)
    first = numerics.integrate_adaptive(
        lambda x: x * density(params, x), span, abs_tol=abs_tol * 0.25
    )
    second = numerics.integrate_adaptive(
        lambda x: x * x * density(params, x), span, abs_tol=abs_tol * 0.25
    )
    tail_first = c * math.exp(-a * x_max) / (a * math.sqrt(x_max))
    tail_second = c * math.exp(-a * x_max) * math.sqrt(x_max) / a
    mean = first.value + tail_first
    second_moment = second.value + tail_second
    return Moments(mean=mean, variance=second_moment - mean * mean)


def verify_normalization(params: ModelParams, abs_tol: float = 1e-8) -> NormalizationCheck:
    """Integrate the density and compare against the finite-cascade mass.

    Subcritically the density integrates to one; supercritically to
    exp(-decay_gap).  The integral runs over [1, X] with X chosen so
    the asymptotic tail bound is below abs_tol / 10, and the tail is
    added back in closed form.  At p = 1/2 the decay rate vanishes and
    the pure power-law tail 2 C / sqrt(X) is used instead.  Quadrature
    failures propagate as ToleranceError.
    """
    if not (math.isfinite(abs_tol) and abs_tol > 0.0):
        raise DomainError(f"abs_tol must be positive and finite, got {abs_tol!r}")
    target = extinction(params).prob_finite
    log_c, a = _tail_constants(params)
    c = math.exp(log_c)

    if a == 0.0:
        # Critical case: density ~ C x^(-3/2).  The tail integral is
        # 2 C / sqrt(X) and its own error ~ C X^(-3/2) / 36 from the
        # next asymptotic correction, which fixes the cutoff.
        x_max = max(10_000.0, 5.0 * (10.0 * c / (36.0 * abs_tol)) ** (2.0 / 3.0))
        tail = 2.0 * c / math.sqrt(x_max)
    else:
        x_max = 32.0
        while c * math.exp(-a * x_max) / (a * x_max**1.5) > abs_tol / 10.0:
            x_max *= 2.0
            if x_max > 1.1e7:
                raise ToleranceError(
                    f"tail bound not attainable at abs_tol = {abs_tol!r} for "
                    f"near-critical p = {params.p!r}"
                )
        tail = c * math.exp(-a * x_max) / (a * x_max**1.5)

    quadrature = numerics.integrate_adaptive(
        lambda x: density(params, x), Interval(1.0, x_max), abs_tol=abs_tol * 0.5
    )
    integral = quadrature.value + tail
    return NormalizationCheck(
        integral=integral,
        target=target,
        residual=abs(integral - target),
        x_max=x_max,
        tail_estimate=tail,
        quadrature=quadrature,
    )


def density_table(
    params: ModelParams, x_min: float = 1.0, x_max: float = 20.0, steps: int = 200
) -> DensityTable:
    """Evaluate density and asymptote on a uniform grid (both endpoints included)."""
    x_min, x_max = float(x_min), float(x_max)
    if not (math.isfinite(x_min) and x_min >= 1.0):
        raise DomainError(f"x_min must be >= 1, got {x_min!r}")
    if not (math.isfinite(x_max) and x_max > x_min):
        raise DomainError(f"x_max must exceed x_min, got {x_max!r}")
    steps = int(steps)
    if steps < 2:
        raise DomainError(f"steps must be >= 2, got {steps!r}")
    grid = np.linspace(x_min, x_max, steps)
    dens = np.array([density(params, x) for x in grid])
    asym = np.array([math.exp(asymptotic_log_density(params, x)) for x in grid])
    return DensityTable(params=params, x=grid, density=dens, asymptotic=asym)
