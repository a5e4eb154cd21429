"""Monte Carlo engines for the cascade-size distribution.

Three independent samplers of the same object:

- continuous: iterate X_{n+1} ~ Gamma(2 X_n, p) from X_0 = 1 and add
  the generations up; once a generation falls below epsilon the
  subcritical remainder x 2p/(1 - 2p) is added in expectation, which
  keeps the estimator exactly unbiased;
- discrete: atoms of mass delta = 1/m reproduce as NB(r*, q*) counts,
  a whole generation per draw through negative-binomial additivity;
- walk: first passage to zero of S_t = m + sum_{i<=t} (V_i - 1) with
  V_i ~ NB(r*, q*) i.i.d.; the hitting time is the total atom count.

All three censor a trial on the same event, total mass above cap, and
censored trials never enter the sums or the histogram.

Reproducibility contract: trials are processed in fixed chunks of
CHUNK_TRIALS, chunk i drawing from its own PCG64 stream spawned as
(seed, i).  Campaign results are therefore identical for any worker
count, and byte-identical once serialized.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .continuum import ModelParams
from .discrete import DiscretizationParams
from .errors import DomainError

__all__ = [
    "CHUNK_TRIALS",
    "HIST_LO",
    "HIST_HI",
    "HIST_BINS",
    "HIST_EDGES",
    "SimConfig",
    "SimSummary",
    "rng_stream",
    "gamma_sample",
    "nb_sample",
    "run_continuous_trial",
    "run_discrete_trial",
    "run_walk_trial",
    "run_campaign",
]

CHUNK_TRIALS = 16384

HIST_LO = 1.0
HIST_HI = 50.0
HIST_BINS = 980  # bin width 0.05 across [1, 50]; mass beyond goes to overflow
HIST_EDGES = np.linspace(HIST_LO, HIST_HI, HIST_BINS + 1)

_MODES = ("continuous", "discrete", "walk")


@dataclass(frozen=True)
class SimConfig:
    """Campaign description; immutable and hashable so chunks can share it.

    m is the atom count of the discretized engines and must be absent
    for the continuous one.  cap bounds the accumulated mass of one
    trial before it is censored; epsilon is the continuous stopping
    threshold.  workers is an execution detail: it never affects the
    drawn numbers, so it is excluded from config identity.
    """

    mode: str
    p: float
    trials: int
    seed: int
    m: int | None = None
    cap: float = 1e6
    epsilon: float = 1e-9
    workers: int = field(default=1, compare=False)

    def __post_init__(self):
        if self.mode not in _MODES:
            raise DomainError(f"mode must be one of {_MODES}, got {self.mode!r}")
        object.__setattr__(self, "p", ModelParams(self.p).p)
        for name in ("trials", "seed", "workers"):
            value = getattr(self, name)
            if isinstance(value, bool) or not isinstance(value, (int, np.integer)):
                raise DomainError(f"{name} must be an integer, got {value!r}")
            object.__setattr__(self, name, int(value))
        if self.trials < 1:
            raise DomainError(f"trials must be >= 1, got {self.trials}")
        if not 0 <= self.seed < 2**64:
            raise DomainError(f"seed must fit in 64 bits, got {self.seed}")
        if self.workers < 1:
            raise DomainError(f"workers must be >= 1, got {self.workers}")
        cap = float(self.cap)
        if not (math.isfinite(cap) and cap > 1.0):
            raise DomainError(f"cap must be finite and > 1, got {self.cap!r}")
        object.__setattr__(self, "cap", cap)
        epsilon = float(self.epsilon)
        if not 0.0 < epsilon < 1e-3:
            raise DomainError(f"epsilon must lie in (0, 1e-3), got {self.epsilon!r}")
        object.__setattr__(self, "epsilon", epsilon)
        if self.mode == "continuous":
            if self.m is not None:
                raise DomainError("continuous mode takes no atom count m")
        else:
            if self.m is None:
                raise DomainError(f"{self.mode} mode requires the atom count m")
            self.discretization()  # validates m against p
            object.__setattr__(self, "m", int(self.m))

    @property
    def delta(self) -> float | None:
        return None if self.m is None else 1.0 / self.m

    def discretization(self) -> DiscretizationParams:
        if self.m is None:
            raise DomainError("continuous mode has no discretization")
        return DiscretizationParams(p=self.p, m=int(self.m))


def rng_stream(seed: int, stream_index: int) -> np.random.Generator:
    """Deterministic generator for one chunk: PCG64 spawned at (seed, index)."""
    if isinstance(seed, bool) or not isinstance(seed, (int, np.integer)):
        raise DomainError(f"seed must be an integer, got {seed!r}")
    if isinstance(stream_index, bool) or not isinstance(stream_index, (int, np.integer)):
        raise DomainError(f"stream_index must be an integer, got {stream_index!r}")
    if not 0 <= int(seed) < 2**64:
        raise DomainError(f"seed must fit in 64 bits, got {seed}")
    if int(stream_index) < 0:
        raise DomainError(f"stream_index must be >= 0, got {stream_index}")
    sequence = np.random.SeedSequence(entropy=int(seed), spawn_key=(int(stream_index),))
    return np.random.Generator(np.random.PCG64(sequence))


def gamma_sample(stream: np.random.Generator, shape: float, scale: float) -> float:
    """One Gamma(shape, scale) draw."""
    shape, scale = float(shape), float(scale)
    if not (math.isfinite(shape) and shape > 0.0):
        raise DomainError(f"shape must be positive, got {shape!r}")
    if not (math.isfinite(scale) and scale > 0.0):
        raise DomainError(f"scale must be positive, got {scale!r}")
    return float(stream.gamma(shape, scale))


def nb_sample(stream: np.random.Generator, r: float, q: float) -> int:
    """One NB(r, q) draw via the gamma-mixed Poisson construction.

    N ~ Poisson(L) with L ~ Gamma(r, q / (1 - q)) has exactly the
    negative binomial pmf b(n; r, q); two stream draws per sample.
    """
    r, q = float(r), float(q)
    if not (math.isfinite(r) and r > 0.0):
        raise DomainError(f"r must be positive, got {r!r}")
    if not 0.0 < q < 1.0:
        raise DomainError(f"q must lie in (0, 1), got {q!r}")
    rate = stream.gamma(r, q / (1.0 - q))
    return int(stream.poisson(rate))


def run_continuous_trial(
    stream: np.random.Generator,
    p: float,
    cap: float = 1e6,
    epsilon: float = 1e-9,
) -> tuple[float, bool]:
    """One continuum cascade; returns (total mass z, censored).

    Censors as soon as the accumulated mass exceeds cap, which for a
    monotone running total is the event {Z > cap} itself.
    """
    p = ModelParams(p).p
    x = 1.0
    z = 1.0
    while x > epsilon:
        x = float(stream.gamma(2.0 * x, p))
        z += x
        if z > cap:
            return z, True
    if p < 0.5:
        z += x * 2.0 * p / (1.0 - 2.0 * p)
    return z, False


def run_discrete_trial(
    stream: np.random.Generator,
    params: DiscretizationParams,
    cap: float = 1e6,
) -> tuple[int, bool]:
    """One atomized cascade, a generation per draw; returns (atom count, censored).

    The alive atoms' offspring pool is a single NB(alive r*, q*) count
    by additivity.  Censoring on total atoms > cap m matches the other
    engines' event {total mass > cap}.
    """
    scale = params.q_star / (1.0 - params.q_star)
    cap_atoms = cap * params.m
    alive = params.m
    total = params.m
    while alive > 0:
        rate = stream.gamma(alive * params.r_star, scale)
        alive = int(stream.poisson(rate))
        total += alive
        if total > cap_atoms:
            return total, True
    return total, False


def run_walk_trial(
    stream: np.random.Generator,
    params: DiscretizationParams,
    cap: float = 1e6,
) -> tuple[int, bool]:
    """First-passage walk for the same atom count; returns (steps, censored).

    Each step retires one atom and adds its NB(r*, q*) offspring, so
    the first hit of zero happens exactly at the total atom count.
    Steps change the position by at least -1, hence steps + position >
    cap m already implies the total will exceed cap m: censoring there
    is exact and agrees with the other engines.
    """
    scale = params.q_star / (1.0 - params.q_star)
    cap_atoms = cap * params.m
    position = params.m
    steps = 0
    while position > 0:
        if steps + position > cap_atoms:
            return steps, True
        rate = stream.gamma(params.r_star, scale)
        position += int(stream.poisson(rate)) - 1
        steps += 1
    return steps, False


def _continuous_chunk(gen, count, p, cap, epsilon):
    x = np.ones(count)
    z = np.ones(count)
    censored = np.zeros(count, dtype=bool)
    active = np.ones(count, dtype=bool)
    while True:
        idx = np.nonzero(active)[0]
        if idx.size == 0:
            break
        draws = gen.gamma(2.0 * x[idx], p)
        x[idx] = draws
        z[idx] += draws
        over = z[idx] > cap
        censored[idx[over]] = True
        active[idx] = ~over & (draws > epsilon)
    if p < 0.5:
        finite = ~censored
        z[finite] += x[finite] * (2.0 * p / (1.0 - 2.0 * p))
    return z, censored


def _discrete_chunk(gen, count, params, cap):
    scale = params.q_star / (1.0 - params.q_star)
    cap_atoms = cap * params.m
    alive = np.full(count, params.m, dtype=np.int64)
    total = np.full(count, params.m, dtype=np.int64)
    censored = np.zeros(count, dtype=bool)
    active = np.ones(count, dtype=bool)
    while True:
        idx = np.nonzero(active)[0]
        if idx.size == 0:
            break
        rates = gen.gamma(alive[idx] * params.r_star, scale)
        born = gen.poisson(rates).astype(np.int64)
        alive[idx] = born
        total[idx] += born
        over = total[idx].astype(np.float64) > cap_atoms
        censored[idx[over]] = True
        active[idx] = ~over & (born > 0)
    return total, censored


def _walk_chunk(gen, count, params, cap):
    scale = params.q_star / (1.0 - params.q_star)
    cap_atoms = cap * params.m
    position = np.full(count, params.m, dtype=np.int64)
    steps = np.zeros(count, dtype=np.int64)
    censored = np.zeros(count, dtype=bool)
    active = np.ones(count, dtype=bool)
    while True:
        idx = np.nonzero(active)[0]
        if idx.size == 0:
            break
        doomed = (steps[idx] + position[idx]).astype(np.float64) > cap_atoms
        if doomed.any():
            censored[idx[doomed]] = True
            active[idx[doomed]] = False
            idx = idx[~doomed]
            if idx.size == 0:
                continue
        births = gen.poisson(gen.gamma(params.r_star, scale, size=idx.size)).astype(np.int64)
        position[idx] += births - 1
        steps[idx] += 1
        active[idx] = position[idx] > 0
    return steps, censored


@dataclass(frozen=True, eq=False)
class SimSummary:
    """Mergeable campaign statistics over the finite (uncensored) trials.

    Sums are held as Fractions of the chunk-level float sums, so merge
    is exact and associative; the histogram counts atoms of mass in
    0.05-wide bins on [1, 50] with a single overflow bucket.  Invariant:
    trials == n_finite + n_censored and the histogram plus overflow
    accounts for every finite trial.
    """

    config: SimConfig
    trials: int
    n_finite: int
    n_censored: int
    sum_z: Fraction
    sum_z_sq: Fraction
    bin_counts: np.ndarray
    overflow: int

    def __post_init__(self):
        if self.trials != self.n_finite + self.n_censored:
            raise DomainError("trials must equal n_finite + n_censored")
        if min(self.trials, self.n_finite, self.n_censored, self.overflow) < 0:
            raise DomainError("summary counters must be nonnegative")
        counts = np.asarray(self.bin_counts, dtype=np.int64)
        if counts.shape != (HIST_BINS,):
            raise DomainError(f"bin_counts must have shape ({HIST_BINS},)")
        if counts.min(initial=0) < 0:
            raise DomainError("bin_counts must be nonnegative")
        if int(counts.sum()) + self.overflow != self.n_finite:
            raise DomainError("histogram does not account for every finite trial")
        object.__setattr__(self, "bin_counts", counts)

    @property
    def finite_fraction(self) -> float:
        return self.n_finite / self.trials

    @property
    def mean(self) -> float | None:
        if self.n_finite == 0:
            return None
        return float(self.sum_z / self.n_finite)

    @property
    def variance(self) -> float | None:
        """Unbiased sample variance of the finite trials' mass."""
        if self.n_finite < 2:
            return None
        n = self.n_finite
        spread = self.sum_z_sq - self.sum_z * self.sum_z / n
        if spread < 0:  # exact arithmetic; only rounded inputs can graze zero
            spread = Fraction(0)
        return float(spread / (n - 1))

    @property
    def se_mean(self) -> float | None:
        variance = self.variance
        if variance is None or self.n_finite == 0:
            return None
        return math.sqrt(variance / self.n_finite)

    def merge(self, other: "SimSummary") -> "SimSummary":
        if self.config != other.config:
            raise DomainError("cannot merge summaries from different configs")
        return SimSummary(
            config=self.config,
            trials=self.trials + other.trials,
            n_finite=self.n_finite + other.n_finite,
            n_censored=self.n_censored + other.n_censored,
            sum_z=self.sum_z + other.sum_z,
            sum_z_sq=self.sum_z_sq + other.sum_z_sq,
            bin_counts=self.bin_counts + other.bin_counts,
            overflow=self.overflow + other.overflow,
        )

    def to_json_dict(self) -> dict:
        config = {
            "mode": self.config.mode,
            "p": self.config.p,
            "m": self.config.m,
            "delta": self.config.delta,
            "trials": self.config.trials,
            "seed": self.config.seed,
            "cap": self.config.cap,
            "epsilon": self.config.epsilon,
            "workers": self.config.workers,
        }
        return {
            "config": config,
            "trials": self.trials,
            "n_finite": self.n_finite,
            "n_censored": self.n_censored,
            "finite_fraction": self.finite_fraction,
            "mean": self.mean,
            "variance": self.variance,
            "se_mean": self.se_mean,
            "sum_z": float(self.sum_z),
            "sum_z_sq": float(self.sum_z_sq),
            "histogram": {
                "lo": HIST_LO,
                "hi": HIST_HI,
                "bins": HIST_BINS,
                "counts": [int(c) for c in self.bin_counts],
                "overflow": self.overflow,
            },
        }


def _summarize_chunk(config: SimConfig, trials: int, z_finite: np.ndarray, n_censored: int) -> SimSummary:
    z_finite = np.asarray(z_finite, dtype=np.float64)
    if z_finite.size and float(z_finite.min()) < 1.0:
        raise DomainError("engine produced a total mass below the founder mass")
    if z_finite.size:
        in_range = z_finite <= HIST_HI
        counts = np.histogram(z_finite[in_range], bins=HIST_EDGES)[0].astype(np.int64)
        overflow = int(z_finite.size - np.count_nonzero(in_range))
        sum_z = Fraction(float(z_finite.sum()))
        sum_z_sq = Fraction(float(np.square(z_finite).sum()))
    else:
        counts = np.zeros(HIST_BINS, dtype=np.int64)
        overflow = 0
        sum_z = Fraction(0)
        sum_z_sq = Fraction(0)
    return SimSummary(
        config=config,
        trials=trials,
        n_finite=int(z_finite.size),
        n_censored=int(n_censored),
        sum_z=sum_z,
        sum_z_sq=sum_z_sq,
        bin_counts=counts,
        overflow=overflow,
    )


def _run_chunk(task: tuple[SimConfig, int, int]) -> SimSummary:
    config, index, size = task
    gen = rng_stream(config.seed, index)
    if config.mode == "continuous":
        z, censored = _continuous_chunk(gen, size, config.p, config.cap, config.epsilon)
        z_finite = z[~censored]
    else:
        params = config.discretization()
        if config.mode == "discrete":
            atoms, censored = _discrete_chunk(gen, size, params, config.cap)
        else:
            atoms, censored = _walk_chunk(gen, size, params, config.cap)
        z_finite = atoms[~censored].astype(np.float64) * params.delta
    return _summarize_chunk(config, size, z_finite, int(np.count_nonzero(censored)))


def _chunk_sizes(trials: int) -> list[int]:
    full, remainder = divmod(trials, CHUNK_TRIALS)
    sizes = [CHUNK_TRIALS] * full
    if remainder:
        sizes.append(remainder)
    return sizes


def run_campaign(config: SimConfig) -> SimSummary:
    """Run every trial of the campaign and merge the chunk summaries.

    Chunk i always draws from rng_stream(config.seed, i) whatever the
    scheduling, so any workers setting yields the same summary.
    """
    sizes = _chunk_sizes(config.trials)
    tasks = [(config, index, size) for index, size in enumerate(sizes)]
    if config.workers == 1 or len(tasks) == 1:
        parts = [_run_chunk(task) for task in tasks]
    else:
        with ProcessPoolExecutor(max_workers=min(config.workers, len(tasks))) as pool:
            parts = list(pool.map(_run_chunk, tasks))
    summary = parts[0]
    for part in parts[1:]:
        summary = summary.merge(part)
    if summary.trials != config.trials:
        raise DomainError("chunk accounting lost trials; this is a bug")
    return summary
