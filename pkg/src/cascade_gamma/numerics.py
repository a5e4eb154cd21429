"""Special functions and scalar numerical routines used across the package.

Everything here is self-contained and deterministic: a Stirling-series
log-gamma, the lower real branch of the Lambert W function, a bracketed
Brent root solver, and an adaptive Gauss-Kronrod quadrature.  These are
the only numerical kernels the analytical modules rely on, so their
accuracy contracts are tested directly (see tests/test_numerics.py).
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import ConvergenceError, DomainError, NoSignChangeError, ToleranceError

__all__ = [
    "Interval",
    "QuadratureResult",
    "log_gamma",
    "lambert_w_m1",
    "solve_bracketed",
    "integrate_adaptive",
    "DEFAULT_ROOT_TOL",
    "DEFAULT_QUAD_ABS_TOL",
]

DEFAULT_ROOT_TOL = 1e-12
DEFAULT_QUAD_ABS_TOL = 1e-10


@dataclass(frozen=True)
class Interval:
    """A finite closed interval [lo, hi] with lo < hi."""

    lo: float
    hi: float

    def __post_init__(self):
        lo, hi = float(self.lo), float(self.hi)
        if not (math.isfinite(lo) and math.isfinite(hi)):
            raise DomainError(f"interval endpoints must be finite, got [{self.lo}, {self.hi}]")
        if not lo < hi:
            raise DomainError(f"interval requires lo < hi, got [{lo}, {hi}]")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @property
    def width(self) -> float:
        return self.hi - self.lo

    @property
    def midpoint(self) -> float:
        return 0.5 * (self.lo + self.hi)


@dataclass(frozen=True)
class QuadratureResult:
    """Value of an integral together with its error estimate and cost."""

    value: float
    abs_error_estimate: float
    evaluations: int

    def __post_init__(self):
        if not math.isfinite(self.value):
            raise DomainError(f"integral value must be finite, got {self.value!r}")
        if not self.abs_error_estimate >= 0.0:
            raise DomainError(f"error estimate must be >= 0, got {self.abs_error_estimate!r}")
        if self.evaluations < 1:
            raise DomainError(f"evaluations must be >= 1, got {self.evaluations!r}")


# Stirling series coefficients: B_{2k} / (2k (2k-1)), k = 1..7.  With the
# argument shifted to >= 8 the first omitted term is below 1e-15 relative,
# which keeps the overall error within the 1e-13 contract.
_STIRLING = (
    1.0 / 12.0,
    -1.0 / 360.0,
    1.0 / 1260.0,
    -1.0 / 1680.0,
    1.0 / 1188.0,
    -691.0 / 360360.0,
    1.0 / 156.0,
)
_HALF_LOG_TWO_PI = 0.5 * math.log(2.0 * math.pi)
_STIRLING_SHIFT = 8.0


def log_gamma(z):
    """Natural log of the gamma function for real z > 0.

    Accepts a scalar or an ndarray and returns the matching shape.
    Uses the recurrence ln G(z) = ln G(z + n) - sum ln(z + j) to lift the
    argument above 8, then the Stirling asymptotic series.  Relative
    error stays below 1e-13 (against max(1, |ln G|)) across [1e-6, 1e8].
    """
    arr = np.asarray(z, dtype=np.float64)
    scalar = arr.ndim == 0
    work = np.atleast_1d(arr).copy()
    if work.size and (not np.all(np.isfinite(work)) or np.any(work <= 0.0)):
        bad = work[~(np.isfinite(work) & (work > 0.0))][0]
        raise DomainError(f"log_gamma requires z > 0 and finite, got {bad!r}")

    shifted_log = np.zeros_like(work)
    for _ in range(int(_STIRLING_SHIFT)):
        low = work < _STIRLING_SHIFT
        if not low.any():
            break
        shifted_log[low] += np.log(work[low])
        work[low] += 1.0

    inv = 1.0 / work
    inv_sq = inv * inv
    series = _STIRLING[-1] * np.ones_like(work)
    for c in _STIRLING[-2::-1]:
        series = c + series * inv_sq
    series *= inv

    out = (work - 0.5) * np.log(work) - work + _HALF_LOG_TWO_PI + series - shifted_log
    if scalar:
        return float(out[0])
    return out.reshape(arr.shape)


_BRANCH_SERIES_CUT = 0.05  # on t = 1 + e x; well inside the series radius


def lambert_w_m1(x: float) -> float:
    """Lower real branch W_{-1}(x) for x in [-1/e, 0).

    Solves w e^w = x with w <= -1.  Near the branch point the expansion
    in p = -sqrt(2 (1 + e x)) seeds the iteration; away from it the
    classic ln(-x) - ln(-ln(-x)) starter is used.  Halley steps polish
    to |w e^w - x| <= 1e-13 |x|.
    """
    x = float(x)
    if not math.isfinite(x) or x >= 0.0:
        raise DomainError(f"lambert_w_m1 requires -1/e <= x < 0, got {x!r}")
    t = 1.0 + math.e * x
    if t < 0.0:
        if t < -1e-12:
            raise DomainError(f"lambert_w_m1 requires x >= -1/e, got {x!r}")
        t = 0.0
    if t == 0.0:
        return -1.0

    if t < _BRANCH_SERIES_CUT:
        q = -math.sqrt(2.0 * t)
        w = -1.0 + q * (1.0 + q * (-1.0 / 3.0 + q * (11.0 / 72.0 + q * (-43.0 / 540.0))))
    else:
        log_neg_x = math.log(-x)  # < -1 on this branch, so -log_neg_x > 1
        w = log_neg_x - math.log(-log_neg_x)
    if w > -1.0:
        w = -1.0

    tol = 1e-13 * abs(x)
    for _ in range(100):
        ew = math.exp(w)
        residual = w * ew - x
        if abs(residual) <= tol:
            return w
        if w + 1.0 == 0.0:
            # Derivative vanishes at the branch point; nudge below it.
            w = -1.0 - 1e-8
            continue
        d1 = ew * (w + 1.0)
        denom = d1 - residual * (w + 2.0) / (2.0 * (w + 1.0))
        if denom == 0.0:
            denom = d1
        w -= residual / denom
        if w > -1.0:
            w = -1.0
    ew = math.exp(w)
    if abs(w * ew - x) <= tol:
        return w
    raise ConvergenceError(f"lambert_w_m1 failed to converge for x = {x!r}")


def solve_bracketed(
    f: Callable[[float], float],
    bracket: Interval,
    tol: float = DEFAULT_ROOT_TOL,
    max_iter: int = 200,
) -> float:
    """Brent root solve on a sign-changing bracket.

    Returns a point x* inside the bracket with enclosing width <= tol
    (plus a machine-precision allowance near large roots).  Raises
    NoSignChangeError when f(lo) and f(hi) share a sign and
    ConvergenceError if the iteration budget runs out.
    """
    if not (math.isfinite(tol) and tol > 0.0):
        raise DomainError(f"tol must be positive and finite, got {tol!r}")
    a, b = bracket.lo, bracket.hi
    fa, fb = float(f(a)), float(f(b))
    if not (math.isfinite(fa) and math.isfinite(fb)):
        raise DomainError(f"f must be finite at the bracket endpoints, got f(lo)={fa!r}, f(hi)={fb!r}")
    if fa == 0.0:
        return a
    if fb == 0.0:
        return b
    if (fa > 0.0) == (fb > 0.0):
        raise NoSignChangeError(
            f"no sign change on [{a!r}, {b!r}]: f(lo)={fa!r}, f(hi)={fb!r}"
        )

    c, fc = a, fa
    d = e = b - a
    for _ in range(max_iter):
        if (fb > 0.0) == (fc > 0.0):
            c, fc = a, fa
            d = e = b - a
        if abs(fc) < abs(fb):
            a, b, c = b, c, b
            fa, fb, fc = fb, fc, fb
        tol1 = 2.0 * 2.220446049250313e-16 * abs(b) + 0.5 * tol
        xm = 0.5 * (c - b)
        if abs(xm) <= tol1 or fb == 0.0:
            return b
        if abs(e) >= tol1 and abs(fa) > abs(fb):
            s = fb / fa
            if a == c:
                pnum = 2.0 * xm * s
                pden = 1.0 - s
            else:
                qr = fa / fc
                r = fb / fc
                pnum = s * (2.0 * xm * qr * (qr - r) - (b - a) * (r - 1.0))
                pden = (qr - 1.0) * (r - 1.0) * (s - 1.0)
            if pnum > 0.0:
                pden = -pden
            pnum = abs(pnum)
            if 2.0 * pnum < min(3.0 * xm * pden - abs(tol1 * pden), abs(e * pden)):
                e = d
                d = pnum / pden
            else:
                d = xm
                e = d
        else:
            d = xm
            e = d
        a, fa = b, fb
        if abs(d) > tol1:
            b += d
        else:
            b += math.copysign(tol1, xm)
        fb = float(f(b))
    raise ConvergenceError(
        f"bracketed solve did not reach width {tol!r} in {max_iter} iterations"
    )


# Gauss-Kronrod 7-15 nodes and weights on [-1, 1]; positive abscissae only,
# ordered outermost first with the centre node last.  Odd indices are the
# embedded 7-point Gauss nodes.
_GK_NODES = (
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144838258730,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
)
_GK_WEIGHTS_K = (
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
)
_GK_WEIGHT_K_CENTRE = 0.209482141084727828012999174891714
_GK_WEIGHTS_G = (
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
)
_GK_WEIGHT_G_CENTRE = 0.417959183673469387755102040816327
_EPS = 2.220446049250313e-16


def _gk15(f: Callable[[float], float], lo: float, hi: float):
    """One 15-point Kronrod panel; returns (value, error_estimate)."""
    centre = 0.5 * (lo + hi)
    half = 0.5 * (hi - lo)
    fc = float(f(centre))
    if not math.isfinite(fc):
        raise DomainError(f"integrand returned {fc!r} at x = {centre!r}")
    res_k = _GK_WEIGHT_K_CENTRE * fc
    res_g = _GK_WEIGHT_G_CENTRE * fc
    for j, node in enumerate(_GK_NODES):
        dx = half * node
        f_lo = float(f(centre - dx))
        f_hi = float(f(centre + dx))
        if not (math.isfinite(f_lo) and math.isfinite(f_hi)):
            raise DomainError(f"integrand returned a non-finite value near x = {centre!r}")
        pair = f_lo + f_hi
        res_k += _GK_WEIGHTS_K[j] * pair
        if j % 2 == 1:
            res_g += _GK_WEIGHTS_G[j // 2] * pair
    value = res_k * half
    err = abs((res_k - res_g) * half)
    # Honest floor: a panel can never certify better than a few ulps.
    return value, max(err, 50.0 * _EPS * abs(value))


def integrate_adaptive(
    f: Callable[[float], float],
    interval: Interval,
    abs_tol: float = DEFAULT_QUAD_ABS_TOL,
    max_panels: int = 10_000,
) -> QuadratureResult:
    """Adaptive Gauss-Kronrod (7, 15) quadrature over a finite interval.

    Splits the panel with the largest error estimate until the summed
    estimate drops below abs_tol.  Raises ToleranceError (carrying the
    best QuadratureResult so far) if max_panels is exhausted first.
    Deterministic for a given integrand: ties are broken by insertion
    order.
    """
    if not (math.isfinite(abs_tol) and abs_tol > 0.0):
        raise DomainError(f"abs_tol must be positive and finite, got {abs_tol!r}")
    if max_panels < 1:
        raise DomainError(f"max_panels must be >= 1, got {max_panels!r}")

    value, err = _gk15(f, interval.lo, interval.hi)
    evaluations = 15
    counter = 1
    # heap entries: (-err, insertion_counter, lo, hi, value, err)
    heap = [(-err, 0, interval.lo, interval.hi, value, err)]
    total_err = err

    while total_err > abs_tol:
        if len(heap) >= max_panels:
            result = _collect(heap, evaluations)
            raise ToleranceError(
                f"quadrature error estimate {result.abs_error_estimate:.3e} exceeds "
                f"abs_tol {abs_tol:.3e} after {len(heap)} panels",
                result=result,
            )
        entry = heapq.heappop(heap)
        _, _, lo, hi, _, worst_err = entry
        mid = 0.5 * (lo + hi)
        if not (lo < mid < hi):
            # Panel too narrow to split further; tolerance unreachable.
            result = _collect(heap + [entry], evaluations)
            raise ToleranceError(
                f"panel [{lo!r}, {hi!r}] cannot be split further", result=result
            )
        v1, e1 = _gk15(f, lo, mid)
        v2, e2 = _gk15(f, mid, hi)
        evaluations += 30
        heapq.heappush(heap, (-e1, counter, lo, mid, v1, e1))
        heapq.heappush(heap, (-e2, counter + 1, mid, hi, v2, e2))
        counter += 2
        total_err += e1 + e2 - worst_err

    return _collect(heap, evaluations)


def _collect(heap, evaluations: int) -> QuadratureResult:
    """Sum panel contributions in insertion order (deterministic)."""
    panels = sorted(heap, key=lambda item: item[1])
    value = math.fsum(item[4] for item in panels)
    err = math.fsum(item[5] for item in panels)
    return QuadratureResult(value=value, abs_error_estimate=err, evaluations=evaluations)
