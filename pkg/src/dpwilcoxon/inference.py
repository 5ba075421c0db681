"""Monte Carlo reference distribution, p-values and critical values.

Under the null hypothesis the private statistic is approximately
``Normal(0, n(n+1)(2n+1)/6) + Lap(2n/eps)``. The reference distribution is a
sorted array of ``c`` simulated draws from that sum; p-values and critical
values are read off it with binary search and order statistics.

Two sidedness conventions are supported. ``"two"`` (the default) compares
absolute values and is the convention of the published critical value
tables. ``"one"`` compares signed values in the upper tail; the normalized
comparison tables with a public column of 1.645 at alpha = 0.05 are one-sided.
"""
from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy.special import ndtr, ndtri

from .errors import ParameterError, ResourceError
from .privacy import PrivacyParams, laplace_from_uniform, private_pratt_statistic
from .ranks import PairedDataset, wilcoxon_statistic
from .rng import REFERENCE, RNGLike, derive_seed, resolve_seed, substream, uniform_open

CHUNK_SIZE = 1 << 20
MAX_DRAWS = 200_000_000

SIDEDNESS = ("one", "two")


def check_sidedness(sidedness: str) -> str:
    s = str(sidedness).lower().replace("-", "_")
    s = {"one_sided": "one", "two_sided": "two", "1": "one", "2": "two"}.get(s, s)
    if s not in SIDEDNESS:
        raise ParameterError(f"sidedness must be 'one' or 'two', got {sidedness!r}")
    return s


def check_alpha(alpha: float) -> float:
    alpha = float(alpha)
    if not 0.0 < alpha < 1.0:
        raise ParameterError(f"alpha must lie in (0, 1), got {alpha!r}")
    return alpha


def normal_quantile(q: float) -> float:
    """Standard normal inverse CDF."""
    q = float(q)
    if not 0.0 < q < 1.0:
        raise ParameterError(f"quantile level must lie in (0, 1), got {q!r}")
    return float(ndtri(q))


def null_sigma(n: int) -> float:
    """Null standard deviation of the signed-rank sum over n ranked rows."""
    if n < 1:
        raise ParameterError(f"n must be >= 1, got {n}")
    return math.sqrt(n * (n + 1) * (2 * n + 1) / 6)


@dataclass(frozen=True, eq=False)
class ReferenceDistribution:
    """Sorted draws of ``Normal(0, null_sigma(n)^2) + Lap(2 * noise_rows / epsilon)``.

    ``noise_rows`` equals ``n`` for the Pratt test; the baseline tests use a
    normal part for an assumed count of ranked rows and noise calibrated to
    the full row count. ``epsilon = inf`` gives the noiseless normal.
    """

    n: int
    epsilon: float
    c: int
    seed: int
    draws: np.ndarray = field(repr=False)
    noise_rows: int | None = None

    def __post_init__(self):
        if self.noise_rows is None:
            object.__setattr__(self, "noise_rows", self.n)
        draws = np.asarray(self.draws, dtype=np.float64)
        if draws.shape != (self.c,):
            raise ParameterError(f"expected {self.c} draws, got shape {draws.shape}")
        draws.flags.writeable = False
        object.__setattr__(self, "draws", draws)

    @property
    def sigma(self) -> float:
        return null_sigma(self.n)

    @property
    def laplace_scale(self) -> float:
        return 0.0 if math.isinf(self.epsilon) else 2.0 * self.noise_rows / self.epsilon

    @property
    def key(self) -> tuple:
        return (self.n, self.epsilon, self.c, self.seed, self.noise_rows)

    @cached_property
    def abs_draws(self) -> np.ndarray:
        out = np.abs(self.draws)
        out.sort()
        out.flags.writeable = False
        return out

    def sorted_for(self, sidedness: str) -> np.ndarray:
        return self.abs_draws if check_sidedness(sidedness) == "two" else self.draws


def _simulate_chunk(seed, index, size, sigma, scale):
    gen = substream(seed, REFERENCE, index)
    out = gen.standard_normal(size)
    out *= sigma
    if scale > 0:
        out += laplace_from_uniform(uniform_open(gen, size), scale)
    return out


def simulate_reference(
    n: int,
    epsilon: float,
    c: int,
    rng: RNGLike = None,
    *,
    noise_rows: int | None = None,
    workers: int | None = None,
    max_draws: int = MAX_DRAWS,
) -> ReferenceDistribution:
    """Simulate c null draws of the private statistic and sort them.

    Draws are produced in fixed-size chunks, chunk i from its own substream
    of the resolved seed, so the result does not depend on ``workers``.
    """
    if n < 1:
        raise ParameterError(f"n must be >= 1, got {n}")
    if c < 1:
        raise ParameterError(f"c must be >= 1, got {c}")
    if c > max_draws:
        raise ResourceError(f"c={c} exceeds the configured cap of {max_draws} draws")
    epsilon = float(epsilon)
    if not epsilon > 0:
        raise ParameterError(f"epsilon must be positive, got {epsilon!r}")
    noise_rows = n if noise_rows is None else int(noise_rows)
    seed = resolve_seed(rng)
    sigma = null_sigma(n)
    scale = 0.0 if math.isinf(epsilon) else 2.0 * noise_rows / epsilon

    sizes = [min(CHUNK_SIZE, c - start) for start in range(0, c, CHUNK_SIZE)]
    workers = workers or min(len(sizes), os.cpu_count() or 1)
    if workers == 1:
        parts = [_simulate_chunk(seed, i, m, sigma, scale) for i, m in enumerate(sizes)]
    else:
        with ThreadPoolExecutor(workers) as pool:
            parts = list(
                pool.map(lambda im: _simulate_chunk(seed, im[0], im[1], sigma, scale), enumerate(sizes))
            )
    draws = np.concatenate(parts)
    draws.sort()
    return ReferenceDistribution(n, epsilon, c, seed, draws, noise_rows)


def p_value(w_tilde: float, ref: ReferenceDistribution, sidedness: str = "two") -> float:
    """Fraction of reference draws at least as extreme as ``w_tilde``."""
    sidedness = check_sidedness(sidedness)
    arr = ref.sorted_for(sidedness)
    x = abs(w_tilde) if sidedness == "two" else w_tilde
    below = np.searchsorted(arr, x, side="left")
    return float((ref.c - below) / ref.c)


def p_values(w_tilde, ref: ReferenceDistribution, sidedness: str = "two") -> np.ndarray:
    """Vectorized ``p_value`` over an array of statistics."""
    sidedness = check_sidedness(sidedness)
    arr = ref.sorted_for(sidedness)
    x = np.asarray(w_tilde, dtype=np.float64)
    if sidedness == "two":
        x = np.abs(x)
    return (ref.c - np.searchsorted(arr, x, side="left")) / ref.c


@dataclass(frozen=True)
class CriticalValue:
    alpha: float
    sidedness: str
    value: float
    normalized: bool


def order_statistic_index(alpha: float, c: int) -> int:
    """1-based index ``ceil((1 - alpha) c)`` of the lower empirical quantile."""
    # rounding first keeps e.g. 0.95 * 10**6 from landing one index high
    k = math.ceil(round((1.0 - alpha) * c, 6))
    return min(max(k, 1), c)


def critical_value(
    ref: ReferenceDistribution,
    alpha: float,
    sidedness: str = "two",
    normalized: bool = False,
) -> CriticalValue:
    """Lower empirical (1 - alpha) quantile of |draws| (two-sided) or draws (one-sided)."""
    alpha = check_alpha(alpha)
    sidedness = check_sidedness(sidedness)
    value = float(ref.sorted_for(sidedness)[order_statistic_index(alpha, ref.c) - 1])
    if normalized:
        value /= ref.sigma
    return CriticalValue(alpha, sidedness, value, bool(normalized))


@dataclass(frozen=True)
class PrivateTestResult:
    w_tilde: float
    p: float
    n: int
    epsilon: float
    c: int
    seed: int
    sidedness: str = "two"

    def reject(self, alpha: float) -> bool:
        return self.p < alpha


def complete_test(
    dataset: PairedDataset,
    epsilon: float,
    c: int = 1_000_000,
    rng: RNGLike = None,
    sidedness: str = "two",
    reference: ReferenceDistribution | None = None,
) -> PrivateTestResult:
    """Private statistic, simulated reference over n rows, and its p-value.

    Zero differences are ignored when building the reference (it always
    uses ``dataset.n``); with many zeros this makes the test conservative.
    A prebuilt ``reference`` for the same (n, epsilon) may be passed in.
    """
    params = PrivacyParams(epsilon)
    sidedness = check_sidedness(sidedness)
    seed = resolve_seed(rng)
    stat = private_pratt_statistic(dataset, params, seed)
    if reference is None:
        reference = simulate_reference(dataset.n, params.epsilon, c, derive_seed(seed, REFERENCE))
    elif (reference.n, reference.noise_rows, reference.epsilon) != (dataset.n, dataset.n, params.epsilon):
        raise ParameterError("reference distribution does not match (n, epsilon) of the test")
    p = p_value(stat.w_tilde, reference, sidedness)
    return PrivateTestResult(stat.w_tilde, p, dataset.n, params.epsilon, reference.c, seed, sidedness)


def public_p_value(dataset: PairedDataset, sidedness: str = "two") -> float:
    """Non-private p-value of the standard statistic under its normal approximation.

    Used as the public comparison test; it reads the data directly and
    provides no privacy.
    """
    sidedness = check_sidedness(sidedness)
    w, n_r = wilcoxon_statistic(dataset)
    if n_r == 0:
        return 1.0
    z = w / null_sigma(n_r)
    return float(2.0 * ndtr(-abs(z))) if sidedness == "two" else float(ndtr(-z))
