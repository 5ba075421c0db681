"""Corrected Task-Clifton baseline tests.

Both variants privatize the standard (drop-zeros) signed-rank statistic with
Laplace noise of scale ``2 * rows / epsilon``. Because the number of
nonzero rows ``n_r`` cannot be released, the critical value is computed for
an assumed lower bound on it:

* high utility assumes ``n_r >= ceil(0.3 n)``. That assumption is not
  enforced, so the mechanism is not differentially private on all inputs;
* high privacy appends k rows with difference +inf and k with -inf, which
  guarantees ``n_r >= 2k``. The dummies tie at the top 2k ranks and their
  contributions cancel.

The analytic critical value splits the tail budget: with
``alpha = beta + gamma - beta * gamma``, ``b`` is the normal upper
``beta`` quantile for the assumed row count and ``g`` the Laplace upper
``gamma`` quantile; ``b + g`` bounds the private critical value. The "+"
variants keep the data handling but take the critical value from a simulated
reference distribution instead.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

from .errors import ParameterError
from .inference import (
    ReferenceDistribution,
    check_alpha,
    check_sidedness,
    critical_value,
    normal_quantile,
    null_sigma,
    simulate_reference,
)
from .privacy import PrivacyParams, laplace_sample, laplace_upper_tail_quantile
from .ranks import PairedDataset, assign_midranks, compute_signed_differences, wilcoxon_statistic
from .rng import NOISE, REFERENCE, RNGLike, derive_seed, resolve_seed, substream

VARIANTS = ("high_utility", "high_privacy")
HIGH_UTILITY_FRACTION = 0.3

RefBuilder = Callable[[int, float, int], ReferenceDistribution]


@dataclass(frozen=True)
class TcConfig:
    """Settings for one baseline test.

    ``noise_rows`` chooses the row count behind the high privacy noise
    scale: ``"augmented"`` (n + 2k, the default) or ``"original"`` (n).
    """

    variant: str = "high_utility"
    k: int = 15
    gamma: float = 0.01
    use_simulated_cv: bool = False
    alpha: float = 0.05
    sidedness: str = "two"
    noise_rows: str = "augmented"
    c: int = 1_000_000

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ParameterError(f"variant must be one of {VARIANTS}, got {self.variant!r}")
        if self.k < 1:
            raise ParameterError(f"k must be >= 1, got {self.k}")
        if self.noise_rows not in ("augmented", "original"):
            raise ParameterError(f"noise_rows must be 'augmented' or 'original', got {self.noise_rows!r}")
        check_alpha(self.alpha)
        object.__setattr__(self, "sidedness", check_sidedness(self.sidedness))
        if not 0.0 < self.gamma < self.tail_alpha:
            raise ParameterError(
                f"gamma must lie in (0, {self.tail_alpha}) for alpha={self.alpha} "
                f"({self.sidedness}-sided), got {self.gamma!r}"
            )

    @property
    def tail_alpha(self) -> float:
        """Upper-tail level fed to the bound; two-sided tests split alpha."""
        return self.alpha / 2 if self.sidedness == "two" else self.alpha

    def assumed_n_r(self, n: int) -> int:
        if self.variant == "high_utility":
            return max(1, math.ceil(round(HIGH_UTILITY_FRACTION * n, 9)))
        return 2 * self.k

    def rows(self, n: int) -> int:
        """Row count used to calibrate the Laplace noise."""
        if self.variant == "high_privacy" and self.noise_rows == "augmented":
            return n + 2 * self.k
        return n


@dataclass(frozen=True)
class TcResult:
    w_tilde: float
    critical_value: float
    reject: bool
    assumed_n_r: int
    variant: str
    simulated_cv: bool
    differentially_private: bool
    seed: int


def _analytic_bound(n_assumed, noise_rows, epsilon, alpha, gamma, normalized):
    if not 0.0 < gamma < alpha:
        raise ParameterError(f"gamma must lie in (0, alpha={alpha}), got {gamma!r}")
    beta = (alpha - gamma) / (1.0 - gamma)
    sigma = null_sigma(n_assumed)
    b = sigma * normal_quantile(1.0 - beta)
    g = laplace_upper_tail_quantile(2.0 * noise_rows / epsilon, gamma)
    return (b + g) / sigma if normalized else b + g


def tc_analytic_critical_value(
    n: int,
    n_assumed: int,
    epsilon: float,
    alpha: float = 0.05,
    gamma: float = 0.01,
    normalized: bool = False,
) -> float:
    """Upper bound ``b + g`` on the one-sided critical value.

    ``n`` is the row count behind the noise scale and ``n_assumed`` the
    assumed number of ranked rows behind the normal part.
    """
    if not 1 <= n_assumed <= n:
        raise ParameterError(f"need 1 <= n_assumed <= n, got n_assumed={n_assumed}, n={n}")
    epsilon = PrivacyParams(epsilon).epsilon
    return _analytic_bound(n_assumed, n, epsilon, check_alpha(alpha), gamma, normalized)


def augmented_statistic(dataset: PairedDataset, k: int) -> tuple[float, int]:
    """Standard statistic after appending k rows at +inf and k at -inf.

    The dummies are ranked as one tied group above every finite magnitude,
    without materializing infinities. Returns ``(w, n_r + 2k)``.
    """
    d, s = compute_signed_differences(dataset)
    keep = s != 0
    d, s = d[keep], s[keep]
    n_r = int(d.size)
    w = float((s * assign_midranks(d)).sum()) if n_r else 0.0
    dummy_rank = n_r + (2 * k + 1) / 2.0
    w += k * dummy_rank - k * dummy_rank
    return w, n_r + 2 * k


def _statistic(dataset: PairedDataset, config: TcConfig) -> float:
    if config.variant == "high_privacy":
        return augmented_statistic(dataset, config.k)[0]
    return wilcoxon_statistic(dataset)[0]


def default_ref_builder(c: int, seed: int) -> RefBuilder:
    """Memoizing builder of simulated references for the "+" variants."""
    cache: dict[tuple, ReferenceDistribution] = {}

    def build(n_assumed: int, epsilon: float, noise_rows: int) -> ReferenceDistribution:
        key = (n_assumed, epsilon, noise_rows)
        if key not in cache:
            cache[key] = simulate_reference(
                n_assumed, epsilon, c, derive_seed(seed, REFERENCE, n_assumed, noise_rows),
                noise_rows=noise_rows,
            )
        return cache[key]

    return build


def _run(dataset, epsilon, config, rng, ref_builder, plus):
    epsilon = PrivacyParams(epsilon).epsilon
    seed = resolve_seed(rng)
    n = dataset.n
    rows = config.rows(n)
    n_assumed = config.assumed_n_r(n)
    w = _statistic(dataset, config)
    w_tilde = w + laplace_sample(substream(seed, NOISE), 2.0 * rows / epsilon)
    if plus:
        if ref_builder is None:
            ref_builder = default_ref_builder(config.c, seed)
        ref = ref_builder(n_assumed, epsilon, rows)
        cv = critical_value(ref, config.alpha, config.sidedness).value
    else:
        cv = _analytic_bound(n_assumed, rows, epsilon, config.tail_alpha, config.gamma, False)
    stat = abs(w_tilde) if config.sidedness == "two" else w_tilde
    return TcResult(
        w_tilde=w_tilde,
        critical_value=cv,
        reject=bool(stat > cv),
        assumed_n_r=n_assumed,
        variant=config.variant,
        simulated_cv=plus,
        differentially_private=config.variant == "high_privacy",
        seed=seed,
    )


def tc_high_utility_test(
    dataset: PairedDataset, epsilon: float, config: TcConfig | None = None, rng: RNGLike = None
) -> TcResult:
    config = config or TcConfig("high_utility")
    if config.variant != "high_utility":
        raise ParameterError("config.variant must be 'high_utility'")
    return _run(dataset, epsilon, config, rng, None, plus=False)


def tc_high_privacy_test(
    dataset: PairedDataset, epsilon: float, config: TcConfig | None = None, rng: RNGLike = None
) -> TcResult:
    config = config or TcConfig("high_privacy")
    if config.variant != "high_privacy":
        raise ParameterError("config.variant must be 'high_privacy'")
    return _run(dataset, epsilon, config, rng, None, plus=False)


def tc_plus_test(
    dataset: PairedDataset,
    epsilon: float,
    config: TcConfig,
    ref_builder: RefBuilder | None = None,
    rng: RNGLike = None,
) -> TcResult:
    """Either variant, judged against a simulated critical value."""
    if not config.use_simulated_cv:
        raise ParameterError("tc_plus_test requires config.use_simulated_cv=True")
    return _run(dataset, epsilon, config, rng, ref_builder, plus=True)


def tc_test(
    dataset: PairedDataset,
    epsilon: float,
    config: TcConfig,
    rng: RNGLike = None,
    ref_builder: RefBuilder | None = None,
) -> TcResult:
    """Dispatch on ``config.variant`` and ``config.use_simulated_cv``."""
    return _run(dataset, epsilon, config, rng, ref_builder, plus=config.use_simulated_cv)
