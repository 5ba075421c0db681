"""Command-line interface.

Commands: test, power, uniformity, tables, compare, and the explicitly
non-private debug-nonprivate. Every command writes a result envelope (JSON
by default, CSV with ``--format csv``) that records all parameters,
including the seed, so a run can be repeated exactly.
"""
from __future__ import annotations

import argparse
import math
import sys
from dataclasses import asdict, dataclass, field
from pathlib import Path

from . import __version__
from .cache import ReferenceCache
from .dataio import ResultEnvelope, read_paired_csv
from .errors import DPWilcoxonError, ParameterError
from .experiments import (
    TESTS,
    PowerConfig,
    comparison_table,
    critical_value_table,
    power_sweep,
    pvalue_uniformity,
    subsample_power,
)
from .inference import check_alpha, check_sidedness, complete_test, simulate_reference
from .privacy import PrivacyParams
from .ranks import pratt_statistic, wilcoxon_statistic
from .rng import REFERENCE, derive_seed, fresh_seed
from .tc import tc_test

COMMANDS = ("test", "power", "uniformity", "tables", "compare", "debug-nonprivate")
_DATA = ("input", "u_col", "v_col", "delimiter")
PARAMETERS = {
    "test": _DATA + ("epsilon", "alpha", "c", "seed", "test", "sidedness", "k", "gamma"),
    "power": _DATA + ("n", "n_sub", "epsilon", "effect", "tie_fraction", "alpha", "trials", "c",
                      "seed", "test", "sidedness", "k", "gamma"),
    "uniformity": ("n", "epsilon", "tie_fraction", "trials", "c", "seed", "sidedness", "alpha"),
    "tables": ("epsilon", "n", "alpha", "c", "seed", "sidedness", "normalized"),
    "compare": ("n", "epsilon", "alpha", "c", "seed", "gamma"),
    "debug-nonprivate": _DATA,
}
POWER_COLUMNS = ("test", "n", "epsilon", "effect", "tie_fraction", "alpha", "trials", "power", "stderr")
TABLE_COLUMNS = ("epsilon", "n", "alpha", "critical_value")


def parse_list(text: str, kind=float) -> list:
    """Comma-separated values; ``a,b,...,z`` expands to the progression a, b, ..., z."""
    parts = [p.strip() for p in str(text).split(",") if p.strip()]
    if "..." in parts:
        i = parts.index("...")
        if i < 2 or i != len(parts) - 2:
            raise argparse.ArgumentTypeError(f"cannot expand {text!r}; use a,b,...,z")
        a, b, z = (kind(parts[i - 2]), kind(parts[i - 1]), kind(parts[-1]))
        step = b - a
        if step <= 0:
            raise argparse.ArgumentTypeError(f"progression in {text!r} must increase")
        head = [kind(p) for p in parts[: i - 2]]
        count = int(math.floor((z - a) / step + 1e-9)) + 1
        return head + [kind(a + j * step) for j in range(count)]
    try:
        return [kind(p) for p in parts]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _eps(text: str) -> float:
    return math.inf if text.strip().lower() in ("public", "inf") else float(text)


def _int_list(text):
    return parse_list(text, int)


def _float_list(text):
    return parse_list(text, float)


def _eps_list(text):
    return [_eps(p) for p in str(text).split(",") if p.strip()]


@dataclass
class RunConfig:
    command: str
    input: str | None = None
    u_col: str = "u"
    v_col: str = "v"
    delimiter: str = ","
    epsilon: list = field(default_factory=lambda: [1.0])
    n: list = field(default_factory=list)
    alpha: list = field(default_factory=lambda: [0.05])
    c: int | None = None
    trials: int = 2000
    seed: int | None = None
    test: list = field(default_factory=lambda: ["new"])
    sidedness: str = "two"
    effect: list = field(default_factory=lambda: [1.0])
    tie_fraction: list = field(default_factory=lambda: [0.0])
    k: int = 15
    gamma: float = 0.01
    normalized: bool = False
    n_sub: int | None = None
    out: str | None = None
    format: str = "json"
    cache_dir: str | None = None
    workers: int = 1

    def validate(self) -> "RunConfig":
        if self.command not in COMMANDS:
            raise ParameterError(f"unknown command {self.command!r}")
        self.test = [t.replace("-", "_") for t in self.test]
        for t in self.test:
            if t not in TESTS:
                raise ParameterError(f"unknown test {t!r}; choose from {TESTS}")
        self.sidedness = check_sidedness(self.sidedness)
        for a in self.alpha:
            check_alpha(a)
        for e in self.epsilon:
            if not e > 0:
                raise ParameterError(f"epsilon must be positive, got {e}")
        if self.c is None:
            self.c = 10_000_000 if self.command in ("tables", "compare") else 1_000_000
        if self.c < 1 or self.trials < 1:
            raise ParameterError("c and trials must be >= 1")
        if any(n < 1 for n in self.n):
            raise ParameterError("every n must be >= 1")
        if any(not 0 <= t <= 1 for t in self.tie_fraction):
            raise ParameterError("tie fractions must lie in [0, 1]")
        if self.format not in ("json", "csv"):
            raise ParameterError(f"format must be json or csv, got {self.format!r}")
        if self.command in ("test", "debug-nonprivate") and not self.input:
            raise ParameterError(f"{self.command} needs --input")
        if self.command == "test":
            if len(self.epsilon) != 1 or math.isinf(self.epsilon[0]):
                raise ParameterError("test needs a single finite --epsilon")
            if len(self.test) != 1 or self.test[0] == "public":
                raise ParameterError("test runs exactly one private test (public is not private)")
            if len(self.alpha) != 1:
                raise ParameterError("test takes a single --alpha")
        if self.command in ("power", "uniformity", "compare") and not self.n and not (
            self.command == "power" and self.input
        ):
            raise ParameterError(f"{self.command} needs --n")
        if self.command == "power" and self.input and not self.n_sub:
            raise ParameterError("subsample power (--input) needs --n-sub")
        if self.command == "uniformity" and (len(self.n) != 1 or len(self.epsilon) != 1):
            raise ParameterError("uniformity takes a single --n and --epsilon")
        if self.command == "tables" and not self.n:
            raise ParameterError("tables needs --n")
        if self.seed is None:
            self.seed = fresh_seed()
        return self

    def parameters(self) -> dict:
        d = {k: v for k, v in asdict(self).items() if k in PARAMETERS[self.command]}
        if "epsilon" in d:
            d["epsilon"] = ["public" if math.isinf(e) else e for e in d["epsilon"]]
        return d


def _provider(cfg: RunConfig):
    return ReferenceCache(cfg.cache_dir).provider if cfg.cache_dir else None


def _run_test(cfg: RunConfig) -> dict:
    data = read_paired_csv(cfg.input, cfg.u_col, cfg.v_col, cfg.delimiter)
    eps, alpha, test = PrivacyParams(cfg.epsilon[0]).epsilon, cfg.alpha[0], cfg.test[0]
    provider = _provider(cfg)
    if test == "new":
        ref_seed = derive_seed(cfg.seed, REFERENCE)
        ref = (provider or (lambda n, e, c, s, r: simulate_reference(n, e, c, s, noise_rows=r)))(
            data.n, eps, cfg.c, ref_seed, data.n
        )
        res = complete_test(data, eps, cfg.c, cfg.seed, cfg.sidedness, reference=ref)
        return {
            "test": test,
            "w_tilde": res.w_tilde,
            "p": res.p,
            "reject": res.p < alpha,
            "n": res.n,
        }
    tc_cfg = PowerConfig(
        data.n, eps, test=test, alpha=alpha, c=cfg.c, sidedness=cfg.sidedness, k=cfg.k, gamma=cfg.gamma
    ).tc_config()
    def cached(n_assumed, e, rows):
        return provider(n_assumed, e, cfg.c, derive_seed(cfg.seed, REFERENCE, n_assumed, rows), rows)

    res = tc_test(data, eps, tc_cfg, cfg.seed, ref_builder=cached if provider else None)
    return {
        "test": test,
        "w_tilde": res.w_tilde,
        "critical_value": res.critical_value,
        "reject": res.reject,
        "assumed_n_r": res.assumed_n_r,
        "differentially_private": res.differentially_private,
        "n": data.n,
    }


def _power_rows(estimates) -> list:
    rows = []
    for e in estimates:
        cfg = e.config
        eps = "public" if math.isinf(cfg.epsilon) else cfg.epsilon
        rows.append([cfg.test, cfg.n, eps, cfg.effect, cfg.tie_fraction, cfg.alpha, e.trials, e.power, e.stderr])
    return rows


def run(cfg: RunConfig) -> ResultEnvelope:
    """Validate ``cfg``, dispatch, and wrap the result in an envelope."""
    cfg.validate()
    provider = _provider(cfg)
    env = ResultEnvelope(cfg.command, cfg.parameters(), {}, __version__)
    if cfg.command == "test":
        env.payload = _run_test(cfg)
    elif cfg.command == "debug-nonprivate":
        data = read_paired_csv(cfg.input, cfg.u_col, cfg.v_col, cfg.delimiter)
        w, n_r = wilcoxon_statistic(data)
        env.payload = {
            "warning": "NON-PRIVATE: exact statistics of the input data",
            "n": data.n,
            "wilcoxon_statistic": w,
            "n_r": n_r,
            "pratt_statistic": pratt_statistic(data),
        }
    elif cfg.command == "power":
        base = PowerConfig(
            n=(cfg.n or [cfg.n_sub])[0], epsilon=cfg.epsilon[0], effect=cfg.effect[0],
            tie_fraction=cfg.tie_fraction[0], alpha=cfg.alpha[0], trials=cfg.trials, c=cfg.c,
            test=cfg.test[0], seed=cfg.seed, sidedness=cfg.sidedness, k=cfg.k, gamma=cfg.gamma,
        )
        if cfg.input:
            data = read_paired_csv(cfg.input, cfg.u_col, cfg.v_col, cfg.delimiter)
            estimates = []
            for i, (test, eps) in enumerate((t, e) for t in cfg.test for e in cfg.epsilon):
                conf = PowerConfig(**{**asdict(base), "test": test, "epsilon": eps,
                                      "seed": derive_seed(cfg.seed, i)})
                estimates.append(subsample_power(data, cfg.n_sub, cfg.trials, conf, ref_provider=provider))
            env.columns = POWER_COLUMNS
            env.rows = _power_rows(estimates)
            for row in env.rows:
                row[3] = None
        else:
            grid = {"test": cfg.test, "epsilon": cfg.epsilon, "n": cfg.n,
                    "effect": cfg.effect, "tie_fraction": cfg.tie_fraction}
            estimates = power_sweep(grid, base, workers=cfg.workers, ref_provider=provider)
            env.columns = POWER_COLUMNS
            env.rows = _power_rows(estimates)
    elif cfg.command == "uniformity":
        rep = pvalue_uniformity(cfg.n[0], cfg.epsilon[0], cfg.tie_fraction[0], cfg.trials, cfg.c,
                                cfg.seed, sidedness=cfg.sidedness, ref_provider=provider)
        env.columns = ("theoretical", "empirical")
        env.rows = [[q, p] for q, p in zip(rep.uniform_quantiles.tolist(), rep.p_values.tolist())]
        env.payload = {
            "max_deviation": rep.max_deviation,
            "excess": rep.excess,
            "rejection_rate": {repr(a): rep.rejection_rate(a) for a in cfg.alpha},
        }
    elif cfg.command == "tables":
        rows = critical_value_table(cfg.epsilon, cfg.n, cfg.alpha, cfg.c, cfg.sidedness,
                                    cfg.normalized, cfg.seed, ref_provider=provider)
        env.columns = TABLE_COLUMNS
        env.rows = [[r.epsilon, r.n, r.alpha, r.critical_value] for r in rows]
    elif cfg.command == "compare":
        if len(cfg.n) != 1:
            raise ParameterError("compare takes a single --n")
        rows = comparison_table(cfg.n[0], cfg.epsilon, cfg.alpha, cfg.c, cfg.gamma, cfg.seed,
                                ref_provider=provider)
        env.columns = ("epsilon", "alpha", "public", "new", "tc")
        env.rows = [[r.epsilon, r.alpha, r.public, r.new, r.tc] for r in rows]
    return env


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dpwilcoxon", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, *, c_default_note=""):
        p.add_argument("--seed", type=int, help="RNG seed (drawn from system entropy and recorded if omitted)")
        p.add_argument("--out", help="write the envelope here instead of stdout")
        p.add_argument("--format", choices=("json", "csv"), default="json")
        p.add_argument("--cache-dir", help="directory for cached reference distributions")
        p.add_argument("--c", type=int, help=f"reference draws{c_default_note}")
        p.add_argument("--sidedness", choices=("one", "two"), default="two")

    def data_args(p, required):
        p.add_argument("--input", required=required, help="paired CSV with a header row")
        p.add_argument("--u-col", default="u")
        p.add_argument("--v-col", default="v")
        p.add_argument("--delimiter", default=",")

    tc_choices = [t.replace("_", "-") for t in TESTS]

    p = sub.add_parser("test", help="run one private test on a paired CSV")
    data_args(p, True)
    common(p, c_default_note=" (default 10^6)")
    p.add_argument("--epsilon", type=_eps_list, default=[1.0])
    p.add_argument("--alpha", type=_float_list, default=[0.05])
    p.add_argument("--test", type=lambda s: [s], default=["new"], help="|".join(tc_choices[:-1]))
    p.add_argument("--k", type=int, default=15)
    p.add_argument("--gamma", type=float, default=0.01)

    p = sub.add_parser("power", help="simulated power over a grid, or subsample power on a CSV")
    data_args(p, False)
    common(p, c_default_note=" (default 10^6)")
    p.add_argument("--n", type=_int_list, default=[])
    p.add_argument("--n-sub", type=int)
    p.add_argument("--epsilon", type=_eps_list, default=[1.0], help="comma list; 'public' allowed")
    p.add_argument("--effect", type=_float_list, default=[1.0])
    p.add_argument("--tie-fraction", type=_float_list, default=[0.0])
    p.add_argument("--alpha", type=_float_list, default=[0.05])
    p.add_argument("--trials", type=int, default=2000)
    p.add_argument("--test", type=lambda s: parse_list(s, str), default=["new"], help=",".join(tc_choices))
    p.add_argument("--k", type=int, default=15)
    p.add_argument("--gamma", type=float, default=0.01)
    p.add_argument("--workers", type=int, default=1)

    p = sub.add_parser("uniformity", help="p-values under the null against the uniform")
    common(p, c_default_note=" (default 10^6)")
    p.add_argument("--n", type=_int_list, required=True)
    p.add_argument("--epsilon", type=_eps_list, default=[1.0])
    p.add_argument("--tie-fraction", type=_float_list, default=[0.0])
    p.add_argument("--trials", type=int, default=10_000)
    p.add_argument("--alpha", type=_float_list, default=[0.05])

    p = sub.add_parser("tables", help="simulated critical value tables")
    common(p, c_default_note=" (default 10^7)")
    p.add_argument("--epsilon", type=_eps_list, default=[1.0])
    p.add_argument("--n", type=_int_list, required=True)
    p.add_argument("--alpha", type=_float_list, default=[0.05, 0.025, 0.01, 0.005])
    p.add_argument("--normalized", action="store_true")

    p = sub.add_parser("compare", help="normalized one-sided critical values: public, simulated, analytic bound")
    common(p, c_default_note=" (default 10^7)")
    p.add_argument("--n", type=_int_list, required=True)
    p.add_argument("--epsilon", type=_eps_list, default=[1.0, 0.1, 0.01])
    p.add_argument("--alpha", type=_float_list, default=[0.1, 0.05, 0.025])
    p.add_argument("--gamma", type=float, default=0.01)

    p = sub.add_parser("debug-nonprivate", help="NON-PRIVATE exact statistics, for development only")
    data_args(p, True)
    p.add_argument("--out")
    p.add_argument("--format", choices=("json", "csv"), default="json")
    return parser


def config_from_args(args: argparse.Namespace) -> RunConfig:
    known = RunConfig.__dataclass_fields__
    return RunConfig(**{k: v for k, v in vars(args).items() if k in known and v is not None})


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = config_from_args(args)
        env = run(cfg)
    except (DPWilcoxonError, OSError) as exc:
        print(f"dpwilcoxon {args.command}: error: {exc}", file=sys.stderr)
        return 1
    text = env.to_csv() if cfg.format == "csv" else env.to_json()
    if cfg.out:
        Path(cfg.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    if cfg.command == "debug-nonprivate":
        print("warning: debug-nonprivate output is NOT differentially private", file=sys.stderr)
    return 0


if __name__ == "__main__":
    sys.exit(main())
