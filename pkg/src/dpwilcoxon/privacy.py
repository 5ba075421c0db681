"""Laplace mechanism for the Pratt signed-rank statistic."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ParameterError
from .ranks import PairedDataset, pratt_statistic
from .rng import NOISE, RNGLike, as_generator, resolve_seed, substream, uniform_open


def _check_epsilon(epsilon: float) -> float:
    epsilon = float(epsilon)
    if not (epsilon > 0 and math.isfinite(epsilon)):
        raise ParameterError(f"epsilon must be positive and finite, got {epsilon!r}")
    return epsilon


@dataclass(frozen=True)
class PrivacyParams:
    epsilon: float

    def __post_init__(self):
        object.__setattr__(self, "epsilon", _check_epsilon(self.epsilon))


def laplace_from_uniform(u, scale: float):
    """Inverse CDF of the zero-centred Laplace distribution, for u in (0, 1)."""
    u = np.asarray(u, dtype=np.float64)
    # branchwise form avoids cancellation in u - 0.5 far in the tails
    x = np.where(u < 0.5, scale * np.log(2.0 * u), -scale * np.log(2.0 * (1.0 - u))) + 0.0
    return float(x) if np.ndim(x) == 0 else x


def _check_scale(scale: float) -> float:
    scale = float(scale)
    if not (scale > 0 and math.isfinite(scale)):
        raise ParameterError(f"Laplace scale must be positive and finite, got {scale!r}")
    return scale


def laplace_sample(rng: RNGLike, scale: float, size=None):
    """Draw from Lap(scale) by inverse-CDF on uniform draws.

    Args:
        rng: seed or generator; the result is a deterministic function of the
            generator state.
        scale: the Laplace scale b (variance 2 b^2).
        size: optional output shape.
    """
    scale = _check_scale(scale)
    return laplace_from_uniform(uniform_open(as_generator(rng), size), scale)


@dataclass(frozen=True)
class LaplaceNoise:
    scale: float

    def __post_init__(self):
        object.__setattr__(self, "scale", _check_scale(self.scale))

    def sample(self, rng: RNGLike, size=None):
        return laplace_sample(rng, self.scale, size)

    def upper_tail_quantile(self, gamma: float) -> float:
        return laplace_upper_tail_quantile(self.scale, gamma)

    @property
    def variance(self) -> float:
        return 2.0 * self.scale**2


def laplace_upper_tail_quantile(scale: float, gamma: float) -> float:
    """Return g with Pr[Lap(scale) > g] = gamma."""
    scale = _check_scale(scale)
    if not 0.0 < gamma < 1.0:
        raise ParameterError(f"gamma must lie in (0, 1), got {gamma!r}")
    if gamma <= 0.5:
        return -scale * math.log(2.0 * gamma)
    return scale * math.log(2.0 * (1.0 - gamma))


def pratt_sensitivity(n: int) -> float:
    """Global sensitivity bound of the Pratt statistic over n rows."""
    if n < 1:
        raise ParameterError(f"n must be >= 1, got {n}")
    return 2.0 * n


def noise_scale(n: int, epsilon: float) -> float:
    return pratt_sensitivity(n) / _check_epsilon(epsilon)


@dataclass(frozen=True)
class PrivateStatistic:
    w_tilde: float
    n: int
    epsilon: float
    seed: int


def private_pratt_statistic(
    dataset: PairedDataset, params: PrivacyParams | float, rng: RNGLike = None
) -> PrivateStatistic:
    """Pratt statistic plus Lap(2n / epsilon); spends the whole budget."""
    if not isinstance(params, PrivacyParams):
        params = PrivacyParams(params)
    seed = resolve_seed(rng)
    w = pratt_statistic(dataset)
    noise = laplace_sample(substream(seed, NOISE), noise_scale(dataset.n, params.epsilon))
    return PrivateStatistic(w + noise, dataset.n, params.epsilon, seed)


def private_pratt_releases(
    dataset: PairedDataset, params: PrivacyParams | float, size: int, rng: RNGLike = None
) -> np.ndarray:
    """``size`` independent releases of the private statistic for one dataset.

    Each release spends epsilon; this is for simulation and auditing, not
    for publishing.
    """
    if not isinstance(params, PrivacyParams):
        params = PrivacyParams(params)
    seed = resolve_seed(rng)
    w = pratt_statistic(dataset)
    return w + laplace_sample(substream(seed, NOISE), noise_scale(dataset.n, params.epsilon), size)
