"""Power, p-value uniformity, sweeps, subsampling and critical value tables.

All randomness derives from a single integer seed. Trial ``t`` uses the
substream ``(seed, TRIAL, t)`` for both its data and its noise, and the
reference distributions are drawn once per configuration and shared by
every trial, so an estimate is a deterministic function of (config, seed).
"""
from __future__ import annotations

import itertools
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, replace
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

from .errors import EmptyInputError, ParameterError
from .inference import (
    ReferenceDistribution,
    check_alpha,
    check_sidedness,
    complete_test,
    critical_value,
    normal_quantile,
    public_p_value,
    simulate_reference,
)
from .ranks import PairedDataset
from .rng import (
    CELL,
    REFERENCE,
    RESAMPLE,
    TRIAL,
    RNGLike,
    as_generator,
    derive_seed,
    resolve_seed,
    substream,
)
from .tc import TcConfig, tc_analytic_critical_value, tc_test

TESTS = ("new", "tc_hu", "tc_hp", "tc_hu_plus", "tc_hp_plus", "public")

# (n, epsilon, c, seed, noise_rows) -> reference; lets callers plug in a cache
RefProvider = Callable[[int, float, int, int, int], ReferenceDistribution]


def _simulate(n, epsilon, c, seed, noise_rows):
    return simulate_reference(n, epsilon, c, seed, noise_rows=noise_rows)


@dataclass(frozen=True)
class PowerConfig:
    """One power-simulation cell.

    ``epsilon`` may be ``"public"`` (or inf) only for the public test.
    """

    n: int
    epsilon: float | str = 1.0
    effect: float = 1.0
    tie_fraction: float = 0.0
    alpha: float = 0.05
    trials: int = 2000
    c: int = 1_000_000
    test: str = "new"
    seed: int | None = None
    sidedness: str = "two"
    k: int = 15
    gamma: float = 0.01
    correlation: float = 0.0
    tc_noise_rows: str = "augmented"

    def __post_init__(self):
        test = self.test.replace("-", "_")
        if test not in TESTS:
            raise ParameterError(f"test must be one of {TESTS}, got {self.test!r}")
        object.__setattr__(self, "test", test)
        if self.n < 1:
            raise ParameterError(f"n must be >= 1, got {self.n}")
        if self.trials < 1:
            raise ParameterError(f"trials must be >= 1, got {self.trials}")
        if self.c < 1:
            raise ParameterError(f"c must be >= 1, got {self.c}")
        if not 0.0 <= self.tie_fraction <= 1.0:
            raise ParameterError(f"tie_fraction must lie in [0, 1], got {self.tie_fraction}")
        if not -1.0 < self.correlation < 1.0:
            raise ParameterError(f"correlation must lie in (-1, 1), got {self.correlation}")
        check_alpha(self.alpha)
        object.__setattr__(self, "sidedness", check_sidedness(self.sidedness))
        eps = self.epsilon
        if isinstance(eps, str):
            if eps.lower() != "public":
                eps = float(eps)
            else:
                eps = math.inf
        eps = float(eps)
        if not eps > 0:
            raise ParameterError(f"epsilon must be positive, got {self.epsilon!r}")
        if math.isinf(eps) and test != "public":
            raise ParameterError(f"test {test!r} needs a finite epsilon")
        object.__setattr__(self, "epsilon", eps)
        if test.startswith("tc"):
            self.tc_config()  # validates k, gamma against alpha

    def tc_config(self) -> TcConfig:
        return TcConfig(
            variant="high_utility" if self.test.startswith("tc_hu") else "high_privacy",
            k=self.k,
            gamma=self.gamma,
            use_simulated_cv=self.test.endswith("_plus"),
            alpha=self.alpha,
            sidedness=self.sidedness,
            noise_rows=self.tc_noise_rows,
            c=self.c,
        )

    def as_dict(self) -> dict:
        d = asdict(self)
        if math.isinf(d["epsilon"]):
            d["epsilon"] = "public"
        return d


@dataclass(frozen=True)
class PowerEstimate:
    power: float
    stderr: float
    trials: int
    rejections: int
    config: PowerConfig

    @classmethod
    def from_counts(cls, rejections: int, trials: int, config: PowerConfig) -> "PowerEstimate":
        p = rejections / trials
        return cls(p, math.sqrt(p * (1.0 - p) / trials), trials, rejections, config)


def generate_paired_normal(
    n: int, effect: float, tie_fraction: float, rng: RNGLike = None, correlation: float = 0.0
) -> PairedDataset:
    """Paired normal data with the first ``floor(tie_fraction * n)`` rows tied.

    Untied rows draw ``u ~ N(0, 1)`` and ``v ~ N(effect, 1)`` with the given
    within-pair correlation (independent by default); tied rows set v = u.
    """
    if n < 1:
        raise ParameterError(f"n must be >= 1, got {n}")
    if not 0.0 <= tie_fraction <= 1.0:
        raise ParameterError(f"tie_fraction must lie in [0, 1], got {tie_fraction}")
    gen = as_generator(rng)
    ties = math.floor(round(tie_fraction * n, 9))
    u = gen.standard_normal(n)
    z = gen.standard_normal(n - ties)
    v = u.copy()
    v[ties:] = effect + correlation * u[ties:] + math.sqrt(1.0 - correlation**2) * z
    return PairedDataset(u, v)


class _TrialRunner:
    """Applies the configured test to datasets, sharing reference draws."""

    def __init__(self, config: PowerConfig, seed: int, ref_provider: RefProvider | None):
        self.config = config
        self.seed = seed
        self.ref_provider = ref_provider or _simulate
        self._refs: dict[tuple, ReferenceDistribution] = {}
        self._tc = config.tc_config() if config.test.startswith("tc") else None

    def _ref(self, n, noise_rows):
        key = (n, noise_rows)
        if key not in self._refs:
            ref_seed = derive_seed(self.seed, REFERENCE, n, noise_rows)
            self._refs[key] = self.ref_provider(n, self.config.epsilon, self.config.c, ref_seed, noise_rows)
        return self._refs[key]

    def reject(self, dataset: PairedDataset, gen: np.random.Generator) -> bool:
        cfg = self.config
        if cfg.test == "public":
            return public_p_value(dataset, cfg.sidedness) < cfg.alpha
        if cfg.test == "new":
            ref = self._ref(dataset.n, dataset.n)
            res = complete_test(dataset, cfg.epsilon, cfg.c, gen, cfg.sidedness, reference=ref)
            return res.p < cfg.alpha
        builder = lambda n_assumed, eps, rows: self._ref(n_assumed, rows)  # noqa: E731
        return tc_test(dataset, cfg.epsilon, self._tc, gen, ref_builder=builder).reject


def _count_rejections(config: PowerConfig, seed: int, trials: Sequence[int], ref_provider=None) -> int:
    runner = _TrialRunner(config, seed, ref_provider)
    hits = 0
    for t in trials:
        gen = substream(seed, TRIAL, t)
        data = generate_paired_normal(config.n, config.effect, config.tie_fraction, gen, config.correlation)
        hits += runner.reject(data, gen)
    return hits


def estimate_power(
    config: PowerConfig,
    rng: RNGLike = None,
    *,
    workers: int = 1,
    ref_provider: RefProvider | None = None,
) -> PowerEstimate:
    """Rejection rate of the configured test over ``config.trials`` simulated datasets.

    The seed is taken from ``config.seed`` when set, else from ``rng``; the
    returned config echo always carries the resolved seed.
    """
    seed = config.seed if config.seed is not None else resolve_seed(rng)
    config = replace(config, seed=seed)
    trials = range(config.trials)
    if workers > 1:
        blocks = [trials[i::workers] for i in range(workers)]
        with ProcessPoolExecutor(workers) as pool:
            hits = sum(pool.map(_count_rejections, [config] * workers, [seed] * workers, blocks))
    else:
        hits = _count_rejections(config, seed, trials, ref_provider)
    return PowerEstimate.from_counts(int(hits), config.trials, config)


@dataclass(frozen=True)
class UniformityReport:
    """Sorted p-values against uniform plotting positions ``(i - 0.5) / m``."""

    p_values: np.ndarray
    uniform_quantiles: np.ndarray
    max_deviation: float
    n: int
    epsilon: float
    tie_fraction: float
    seed: int

    @property
    def trials(self) -> int:
        return int(self.p_values.size)

    @property
    def excess(self) -> float:
        """Largest amount by which the empirical CDF rises above the identity.

        Positive excess means p-values come out too small somewhere, i.e. the
        test is anti-conservative there.
        """
        m = self.trials
        return float(np.max(np.arange(1, m + 1) / m - self.p_values))

    def rejection_rate(self, alpha: float) -> float:
        return float(np.count_nonzero(self.p_values < alpha) / self.trials)


def ks_statistic(sorted_p: np.ndarray) -> float:
    """Kolmogorov distance between the empirical CDF of sorted values and U(0, 1)."""
    m = sorted_p.size
    i = np.arange(1, m + 1)
    return float(max(np.max(i / m - sorted_p), np.max(sorted_p - (i - 1) / m)))


def pvalue_uniformity(
    n: int,
    epsilon: float,
    tie_fraction: float,
    trials: int,
    c: int,
    rng: RNGLike = None,
    *,
    sidedness: str = "two",
    ref_provider: RefProvider | None = None,
) -> UniformityReport:
    """p-values of the complete test on ``trials`` null datasets."""
    if trials < 1:
        raise ParameterError(f"trials must be >= 1, got {trials}")
    seed = resolve_seed(rng)
    config = PowerConfig(n, epsilon, 0.0, tie_fraction, 0.05, trials, c, "new", seed, sidedness)
    runner = _TrialRunner(config, seed, ref_provider)
    ref = runner._ref(n, n)
    p = np.empty(trials)
    for t in range(trials):
        gen = substream(seed, TRIAL, t)
        data = generate_paired_normal(n, 0.0, tie_fraction, gen)
        p[t] = complete_test(data, epsilon, c, gen, sidedness, reference=ref).p
    p.sort()
    q = (np.arange(trials) + 0.5) / trials
    return UniformityReport(p, q, ks_statistic(p), n, float(epsilon), tie_fraction, seed)


def grid_cells(grid: Mapping[str, Iterable]) -> list[dict]:
    keys = list(grid)
    return [dict(zip(keys, values)) for values in itertools.product(*(list(grid[k]) for k in keys))]


def power_sweep(
    grid: Mapping[str, Iterable],
    base: PowerConfig,
    rng: RNGLike = None,
    *,
    workers: int = 1,
    ref_provider: RefProvider | None = None,
) -> list[PowerEstimate]:
    """One power estimate per cell of the cartesian product of ``grid``.

    ``grid`` maps PowerConfig field names (``n``, ``effect``,
    ``tie_fraction``, ``epsilon``, ``test``, ...) to value lists. Cell i
    runs with seed ``derive_seed(seed, CELL, i)``.
    """
    cells = grid_cells(grid)
    if not cells:
        raise ParameterError("power sweep grid is empty")
    unknown = set(cells[0]) - set(PowerConfig.__dataclass_fields__)
    if unknown:
        raise ParameterError(f"unknown sweep fields: {sorted(unknown)}")
    seed = base.seed if base.seed is not None else resolve_seed(rng)
    # build every cell first so a bad value fails before any simulation runs
    configs = [replace(base, **cell, seed=derive_seed(seed, CELL, i)) for i, cell in enumerate(cells)]
    if workers > 1:
        with ProcessPoolExecutor(workers) as pool:
            return list(pool.map(estimate_power, configs))
    return [estimate_power(cfg, ref_provider=ref_provider) for cfg in configs]


def min_n_for_power(estimates: Sequence[PowerEstimate], target: float = 0.8, field: str = "n"):
    """Smallest swept value of ``field`` whose estimated power reaches ``target``."""
    hits = [getattr(e.config, field) for e in estimates if e.power >= target]
    return min(hits) if hits else None


def subsample_power(
    dataset: PairedDataset,
    n_sub: int,
    reps: int,
    config: PowerConfig,
    rng: RNGLike = None,
    *,
    ref_provider: RefProvider | None = None,
) -> PowerEstimate:
    """Rejection rate over ``reps`` bootstrap subsamples (with replacement) of a real dataset.

    ``config.n`` and ``config.trials`` are replaced by ``n_sub`` and ``reps``;
    the effect and tie settings are ignored since the data come from ``dataset``.
    """
    if dataset is None or dataset.n == 0:
        raise EmptyInputError("cannot subsample an empty dataset")
    if reps < 1 or n_sub < 1:
        raise ParameterError("reps and n_sub must be >= 1")
    seed = config.seed if config.seed is not None else resolve_seed(rng)
    config = replace(config, n=n_sub, trials=reps, seed=seed)
    runner = _TrialRunner(config, seed, ref_provider)
    hits = 0
    for r in range(reps):
        gen = substream(seed, RESAMPLE, r)
        idx = gen.integers(0, dataset.n, n_sub)
        hits += runner.reject(dataset.take(idx), gen)
    return PowerEstimate.from_counts(hits, reps, config)


@dataclass(frozen=True)
class CriticalValueRow:
    epsilon: float
    n: int
    alpha: float
    critical_value: float


def critical_value_table(
    epsilons: Sequence[float],
    ns: Sequence[int],
    alphas: Sequence[float],
    c: int = 10_000_000,
    sidedness: str = "two",
    normalized: bool = False,
    rng: RNGLike = None,
    *,
    ref_provider: RefProvider | None = None,
) -> list[CriticalValueRow]:
    """Simulated critical values for every (epsilon, n, alpha) cell.

    All alphas of one (epsilon, n) pair are read off the same reference.
    """
    if not (len(epsilons) and len(ns) and len(alphas)):
        raise ParameterError("critical value table needs nonempty epsilon, n and alpha grids")
    alphas = [check_alpha(a) for a in alphas]
    provider = ref_provider or _simulate
    seed = resolve_seed(rng)
    rows = []
    for i, eps in enumerate(epsilons):
        for j, n in enumerate(ns):
            ref = provider(int(n), float(eps), c, derive_seed(seed, CELL, i, j), int(n))
            for a in alphas:
                cv = critical_value(ref, a, sidedness, normalized)
                rows.append(CriticalValueRow(float(eps), int(n), a, cv.value))
    return rows


@dataclass(frozen=True)
class ComparisonRow:
    epsilon: float
    alpha: float
    public: float
    new: float
    tc: float


def comparison_table(
    n: int,
    epsilons: Sequence[float],
    alphas: Sequence[float],
    c: int = 10_000_000,
    gamma: float = 0.01,
    rng: RNGLike = None,
    *,
    ref_provider: RefProvider | None = None,
) -> list[ComparisonRow]:
    """Normalized one-sided critical values: public normal, simulated, and analytic bound."""
    provider = ref_provider or _simulate
    seed = resolve_seed(rng)
    rows = []
    for i, eps in enumerate(epsilons):
        ref = provider(int(n), float(eps), c, derive_seed(seed, CELL, i, 0), int(n))
        for a in alphas:
            rows.append(
                ComparisonRow(
                    float(eps),
                    float(a),
                    normal_quantile(1.0 - a),
                    critical_value(ref, a, "one", normalized=True).value,
                    tc_analytic_critical_value(n, n, eps, a, gamma, normalized=True),
                )
            )
    return rows
