"""Discrete-generation view of the cascade with atoms of mass delta = 1/m.

Splitting the unit of population into m atoms turns each generation
into a negative binomial count: an atom's offspring block Gamma(2 delta, p)
is matched in mean and variance by delta times a NB(r*, q*) count with

    r* = 2 delta p / (p - delta),    q* = (p - delta) / p,

so the per-atom offspring count keeps mean 2p exactly at every delta
and delta -> 0 recovers the continuum law.  The total number of atoms
ever born, starting from m_start of them, has the explicit pmf

    P{T = n} = (m/n) G(n (1 + r*) - m) / (G(n r*) G(n - m + 1))
               (1 - q*)^(r* n) q*^(n - m),   n >= m,

with G the gamma function.  This module evaluates that pmf in log
space, tabulates it with a certified geometric tail bound, carries the
exact finite-delta moments, and finds the per-atom extinction
probability as the smallest fixed point of the offspring generating
function.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import numerics
from .continuum import ModelParams, Moments
from .errors import CriticalityError, DomainError
from .numerics import Interval

__all__ = [
    "DiscretizationParams",
    "CascadePmf",
    "DiscreteMoments",
    "nb_log_pmf",
    "gamma_density_limit_check",
    "cascade_log_pmf",
    "cascade_pmf_table",
    "discrete_moments",
    "martingale_alpha",
    "rescaled_density_estimate",
]

_GRID_NUDGE = 1e-9  # guards floor() at grid points that are exact multiples


@dataclass(frozen=True)
class DiscretizationParams:
    """Atom count m per unit of population; requires delta = 1/m < p."""

    p: float
    m: int
    delta: float = field(init=False)
    r_star: float = field(init=False)
    q_star: float = field(init=False)

    def __post_init__(self):
        model = ModelParams(self.p)  # validates p
        object.__setattr__(self, "p", model.p)
        if isinstance(self.m, bool) or not isinstance(self.m, (int, np.integer)):
            raise DomainError(f"m must be an integer, got {self.m!r}")
        m = int(self.m)
        if m < 1:
            raise DomainError(f"m must be >= 1, got {m}")
        delta = 1.0 / m
        if not delta < self.p:
            raise DomainError(
                f"need delta = 1/m < p, got m = {m} with p = {self.p!r}"
            )
        object.__setattr__(self, "m", m)
        object.__setattr__(self, "delta", delta)
        object.__setattr__(self, "r_star", 2.0 * delta * self.p / (self.p - delta))
        object.__setattr__(self, "q_star", (self.p - delta) / self.p)

    @property
    def model(self) -> ModelParams:
        return ModelParams(self.p)

    @property
    def offspring_count_mean(self) -> float:
        """r* q* / (1 - q*), which simplifies to 2p for every delta.

        Evaluated through q*/(1 - q*) = (p - delta)/delta, which avoids
        the cancellation in 1 - q* when delta << p.
        """
        return self.r_star * (self.p - self.delta) / self.delta


@dataclass(frozen=True)
class CascadePmf:
    """Cascade-size pmf table over consecutive counts n = m_start, m_start+1, ...

    tail_bound dominates the mass beyond the last tabulated count
    (geometric-ratio argument); truncated marks tables that stopped at
    a cap with the bound still above the requested tail mass.
    """

    params: DiscretizationParams
    m_start: int
    probabilities: np.ndarray
    tail_bound: float
    truncated: bool

    def __post_init__(self):
        probs = np.asarray(self.probabilities, dtype=np.float64)
        if probs.ndim != 1 or probs.size == 0:
            raise DomainError("probabilities must be a nonempty 1-d array")
        if np.any(probs < 0.0) or not np.all(np.isfinite(probs)):
            raise DomainError("probabilities must be finite and nonnegative")
        total = float(probs.sum())
        if total > 1.0 + 1e-9:
            raise DomainError(f"pmf mass exceeds one: {total!r}")
        if not (math.isfinite(self.tail_bound) and self.tail_bound >= 0.0):
            raise DomainError(f"tail_bound must be >= 0, got {self.tail_bound!r}")
        object.__setattr__(self, "probabilities", probs)

    @property
    def n_values(self) -> np.ndarray:
        return np.arange(self.m_start, self.m_start + self.probabilities.size)

    @property
    def total_mass(self) -> float:
        return float(self.probabilities.sum())

    def __len__(self) -> int:
        return self.probabilities.size


@dataclass(frozen=True)
class DiscreteMoments:
    """Exact cascade-size moments at finite delta, scaled to mass units."""

    per_atom: Moments
    total: Moments


def _validate_counts(n, minimum: int, name: str) -> np.ndarray:
    arr = np.asarray(n)
    if arr.dtype == object or not np.issubdtype(arr.dtype, np.integer):
        if np.issubdtype(arr.dtype, np.floating) and np.all(arr == np.floor(arr)):
            arr = arr.astype(np.int64)
        else:
            raise DomainError(f"{name} must be integer-valued, got dtype {arr.dtype}")
    if arr.size and int(arr.min()) < minimum:
        raise DomainError(f"{name} must be >= {minimum}, got {int(arr.min())}")
    return arr.astype(np.int64)


def nb_log_pmf(n, r: float, q: float):
    """log P{N = n} for the negative binomial b(n; r, q).

    b(n; r, q) = G(n + r) / (n! G(r)) (1 - q)^r q^n with r > 0 and
    0 < q < 1.  Accepts a scalar count or an array of counts.
    """
    if not (math.isfinite(r) and r > 0.0):
        raise DomainError(f"r must be positive, got {r!r}")
    if not (0.0 < q < 1.0):
        raise DomainError(f"q must lie in (0, 1), got {q!r}")
    scalar = np.ndim(n) == 0
    counts = _validate_counts(n, 0, "n")
    nf = counts.astype(np.float64)
    out = (
        numerics.log_gamma(nf + r)
        - numerics.log_gamma(r)
        - numerics.log_gamma(nf + 1.0)
        + r * math.log1p(-q)
        + nf * math.log(q)
    )
    # n = 0 contributes no q^n factor; log(q) * 0 is already 0, but the
    # log-gamma pair at n = 0 cancels exactly only in exact arithmetic,
    # so recompute the atom directly.
    if scalar:
        n_int = int(counts.reshape(-1)[0])
        return float(r * math.log1p(-q)) if n_int == 0 else float(out.reshape(-1)[0])
    zero = counts == 0
    if zero.any():
        out = np.where(zero, r * math.log1p(-q), out)
    return out


def gamma_density_limit_check(theta: float, delta: float, x: float) -> tuple[float, float]:
    """Compare the rescaled NB pmf with the Gamma(2, theta) density at x.

    The count N ~ NB(r, q) with r = 2 theta / (theta - delta) and
    q = (theta - delta) / theta makes delta N match Gamma(2, theta) in
    mean and variance exactly; delta -> 0 is the law itself.  Returns
    (delta^{-1} P{N = floor(x / delta)}, continuum density at x); the
    gap shrinks linearly in delta.
    """
    theta, delta, x = float(theta), float(delta), float(x)
    if not (math.isfinite(theta) and theta > 0.0):
        raise DomainError(f"theta must be positive, got {theta!r}")
    if not (math.isfinite(delta) and 0.0 < delta < theta):
        raise DomainError(f"delta must lie in (0, theta), got {delta!r}")
    if not (math.isfinite(x) and x > 0.0):
        raise DomainError(f"x must be positive, got {x!r}")
    r = 2.0 * theta / (theta - delta)
    q = (theta - delta) / theta
    n = int(math.floor(x / delta + _GRID_NUDGE))
    discrete = math.exp(nb_log_pmf(n, r, q)) / delta
    continuum = x * math.exp(-x / theta) / (theta * theta)
    return discrete, continuum


def cascade_log_pmf(params: DiscretizationParams, m_start: int, n):
    """log P{T = n}: total atoms ever born from m_start initial atoms.

    Returns -inf for n < m_start (the total counts the founders).  The
    n = m_start atom, where both offspring-count gamma factors cancel,
    is m_start r* log(1 - q*) and falls out of the same expression.
    Accepts a scalar count or an array.
    """
    if isinstance(m_start, bool) or not isinstance(m_start, (int, np.integer)):
        raise DomainError(f"m_start must be an integer, got {m_start!r}")
    m_start = int(m_start)
    if m_start < 1:
        raise DomainError(f"m_start must be >= 1, got {m_start}")
    scalar = np.ndim(n) == 0
    counts = _validate_counts(n, 0, "n")
    flat = counts.reshape(-1)
    out = np.full(flat.shape, -math.inf)
    live = flat >= m_start
    if live.any():
        nf = flat[live].astype(np.float64)
        r, q = params.r_star, params.q_star
        out[live] = (
            math.log(m_start)
            - np.log(nf)
            + numerics.log_gamma(nf * (1.0 + r) - m_start)
            - numerics.log_gamma(nf * r)
            - numerics.log_gamma(nf - m_start + 1.0)
            + r * nf * math.log1p(-q)
            + (nf - m_start) * math.log(q)
        )
        # Founders-only cascade: the gamma pair cancels identically.
        atom = flat[live] == m_start
        if atom.any():
            out[live] = np.where(atom, m_start * r * math.log1p(-q), out[live])
    if scalar:
        return float(out[0])
    return out.reshape(counts.shape)


def _log_tail_ratio_limit(params: DiscretizationParams) -> float:
    """log of the limiting pmf ratio P{T = n+1} / P{T = n} as n grows.

    Equals log q* + r* log(1 - q*) + (1 + r*) log(1 + r*) - r* log r*;
    strictly negative off criticality and exactly zero at p = 1/2.
    """
    r, q = params.r_star, params.q_star
    return (
        math.log(q)
        + r * math.log1p(-q)
        + (1.0 + r) * math.log1p(r)
        - r * math.log(r)
    )


_TABLE_BLOCK = 4096
_TABLE_HARD_CAP = 2_000_000


def cascade_pmf_table(
    params: DiscretizationParams,
    m_start: int,
    n_max: int | None = None,
    tail_mass: float = 1e-10,
    max_rows: int = _TABLE_HARD_CAP,
) -> CascadePmf:
    """Tabulate P{T = n} for n = m_start .. n_last.

    With n_max given the table runs exactly to n_max.  Otherwise it
    grows in blocks until the certified bound on the untabulated mass,
    last pmf value times rho / (1 - rho) with rho the larger of the
    observed and limiting ratios, drops below tail_mass or max_rows is
    reached.  truncated reports whether the bound still exceeded
    tail_mass when tabulation stopped (always the case at criticality,
    where the ratio tends to one and the tail is a power law).
    """
    if not (math.isfinite(tail_mass) and 0.0 < tail_mass < 1.0):
        raise DomainError(f"tail_mass must lie in (0, 1), got {tail_mass!r}")
    if max_rows < 2:
        raise DomainError(f"max_rows must be >= 2, got {max_rows!r}")
    if n_max is not None:
        if isinstance(n_max, bool) or not isinstance(n_max, (int, np.integer)):
            raise DomainError(f"n_max must be an integer, got {n_max!r}")
        n_max = int(n_max)
        if n_max < m_start:
            raise DomainError(f"n_max must be >= m_start = {m_start}, got {n_max}")

    log_rho_limit = _log_tail_ratio_limit(params)
    rho_limit = math.exp(min(log_rho_limit, 0.0))

    def tail_bound_from(log_last: float, log_prev: float) -> float:
        rho_seen = math.exp(min(log_last - log_prev, 0.0))
        rho = max(rho_seen, rho_limit)
        if rho >= 1.0:
            return math.inf
        return math.exp(log_last) * rho / (1.0 - rho)

    blocks: list[np.ndarray] = []
    n_next = m_start
    rows = 0
    block = _TABLE_BLOCK
    log_tail_pair = (-math.inf, -math.inf)
    target_rows = None if n_max is None else n_max - m_start + 1

    while True:
        remaining = max_rows - rows if target_rows is None else target_rows - rows
        if remaining <= 0:
            break
        size = min(block, remaining)
        ns = np.arange(n_next, n_next + size, dtype=np.int64)
        logs = cascade_log_pmf(params, m_start, ns)
        blocks.append(np.exp(logs))
        rows += size
        n_next += size
        if size >= 2:
            log_tail_pair = (float(logs[-1]), float(logs[-2]))
        elif rows >= 2:
            log_tail_pair = (float(logs[-1]), log_tail_pair[0])
        block = min(block * 2, 65536)
        if target_rows is not None:
            if rows >= target_rows:
                break
        elif rows >= 2 and tail_bound_from(*log_tail_pair) <= tail_mass:
            break

    if rows >= 2:
        bound = tail_bound_from(*log_tail_pair)
    else:
        bound = math.inf
    truncated = not bound <= tail_mass
    if math.isinf(bound):
        # Report something conservative yet finite: all unseen mass.
        probs_cat = np.concatenate(blocks)
        bound = max(0.0, 1.0 - float(probs_cat.sum()))
        return CascadePmf(params, m_start, probs_cat, bound, truncated)
    return CascadePmf(params, m_start, np.concatenate(blocks), bound, truncated)


def discrete_moments(params: DiscretizationParams) -> DiscreteMoments:
    """Exact finite-delta moments of the cascade size in mass units.

    Per founding atom the mass delta T_1 has mean delta / (1 - 2p) and
    variance 2 delta p^2 / (1 - 2p)^3; the mass-one start is a sum of
    m independent copies, so its moments reproduce the continuum mean
    1 / (1 - 2p) and variance 2 p^2 / (1 - 2p)^3 exactly at every
    delta.  Subcritical only.
    """
    p = params.p
    if not p < 0.5:
        raise CriticalityError(f"discrete moments require p < 0.5, got p = {p!r}")
    shortfall = 1.0 - 2.0 * p
    per_atom = Moments(
        mean=params.delta / shortfall,
        variance=2.0 * params.delta * p * p / shortfall**3,
    )
    total = Moments(
        mean=1.0 / shortfall,
        variance=2.0 * p * p / shortfall**3,
    )
    return DiscreteMoments(per_atom=per_atom, total=total)


def martingale_alpha(params: DiscretizationParams, tol: float = 1e-13) -> float:
    """Smallest fixed point in (0, 1] of the offspring generating function.

    alpha = ((1 - q*) / (1 - q* alpha))^{r*} is the extinction
    probability of a single atom's line.  At or below criticality the
    only root is 1; above it the interior root is found by a bracketed
    solve of r*(log(1 - q*) - log(1 - q* alpha)) = log alpha.
    """
    if params.p <= 0.5:
        return 1.0
    r, q = params.r_star, params.q_star

    def fixed_point_gap(alpha: float) -> float:
        return r * (math.log1p(-q) - math.log1p(-q * alpha)) - math.log(alpha)

    lo = params.delta * 1e-6
    hi = 1.0 - params.delta * 1e-6
    if fixed_point_gap(hi) >= 0.0:
        raise CriticalityError(
            f"no interior fixed point bracketed for p = {params.p!r}, m = {params.m}"
        )
    return numerics.solve_bracketed(fixed_point_gap, Interval(lo, hi), tol=tol)


def rescaled_density_estimate(params: DiscretizationParams, x: float) -> float:
    """delta^{-1} P{T = floor(x/delta)} from a mass-one start.

    Converges to the continuum density at x as delta -> 0; the floor
    is nudged so grid points that are exact multiples of delta land on
    their own atom.
    """
    x = float(x)
    if not (math.isfinite(x) and x > 0.0):
        raise DomainError(f"x must be positive, got {x!r}")
    n = int(math.floor(x * params.m + _GRID_NUDGE))
    if n < params.m:
        return 0.0
    return params.m * math.exp(cascade_log_pmf(params, params.m, n))
