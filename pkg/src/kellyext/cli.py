"""Command line entry point: ``kellyext {rates,solve,compare,simulate,report}``.

Every command writes plain CSV/JSON data into ``--out`` and is
deterministic given its configuration (seeds included).  Exit codes: 0 on
success, 2 for a bad configuration, 3 when a numerical diagnostic fails.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
import warnings
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from . import __version__
from .asymptotics import DiffusionEvaluator, WkbEvaluator
from .dp import GridSpec, GridWarning, Solution, query_policy, solve
from .export import write_csv, write_json
from .gamble import (
    EXAMPLE_GAMBLE,
    Gamble,
    RateSpectrum,
    attractiveness_threshold,
    diffusion_params,
)
from .simulator import (
    AllIn,
    default_threads,
    FixedFraction,
    Idle,
    PolicyDriven,
    exact_distribution,
    simulate,
)

EXIT_CONFIG = 2
EXIT_NUMERIC = 3


class ConfigError(Exception):
    pass


class DiagnosticError(Exception):
    pass


@dataclass
class ExperimentConfig:
    gamble: dict = field(default_factory=EXAMPLE_GAMBLE.to_dict)
    rounds: int = 1000
    grid: dict = field(default_factory=lambda: GridSpec().to_dict())
    x_init: float = 10**-3.3
    external: float | None = None
    stake: float | None = None
    paths: int = 100_000
    seed: int = 20240101
    out: str = "out"
    strategy: str = "optimal"
    dollars: bool = False
    exact: bool = False
    export_rounds: list = field(default_factory=lambda: [0, 1, 10, 100, 1000])

    def __post_init__(self):
        self.validate()

    def validate(self):
        try:
            Gamble.from_dict(self.gamble)
            GridSpec(**self.grid)
        except (ValueError, KeyError, TypeError) as exc:
            raise ConfigError(str(exc)) from exc
        if self.rounds < 0:
            raise ConfigError("rounds must be nonnegative")
        if self.paths < 1:
            raise ConfigError("paths must be positive")
        if self.seed < 0 or self.seed >= 2**64:
            raise ConfigError("seed must be an unsigned 64-bit integer")
        if self.stake is not None:
            if self.external is None or self.external <= 0 or self.stake <= 0:
                raise ConfigError("a stake needs a positive external capital")
            self.x_init = self.stake / self.external
        if not self.x_init > 0:
            raise ConfigError("x_init must be positive")
        if self.dollars and not self.external:
            raise ConfigError("--dollars needs the external capital")
        parse_strategy(self.strategy)

    @property
    def gamble_obj(self) -> Gamble:
        return Gamble.from_dict(self.gamble)

    @property
    def grid_obj(self) -> GridSpec:
        return GridSpec(**self.grid)

    @property
    def scale(self) -> float:
        return float(self.external) if self.dollars else 1.0

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        known = set(cls.__dataclass_fields__)
        extra = set(d) - known
        if extra:
            raise ConfigError(f"unknown config keys: {sorted(extra)}")
        return cls(**d)

    @classmethod
    def from_json(cls, text: str) -> "ExperimentConfig":
        try:
            return cls.from_dict(json.loads(text))
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config is not valid JSON: {exc}") from exc


PRESETS = {
    "paper": dict(
        gamble=EXAMPLE_GAMBLE.to_dict(),
        rounds=1000,
        x_init=10**-3.3,
        external=2_000_000.0,
    ),
}


def parse_strategy(name: str):
    """``optimal`` is returned as the string; everything else as a Strategy."""
    if name == "optimal":
        return "optimal"
    if name == "kelly":
        return "kelly"
    if name == "allin":
        return AllIn()
    if name == "idle":
        return Idle()
    if name.startswith("fixed:"):
        try:
            return FixedFraction(float(name.split(":", 1)[1]))
        except ValueError as exc:
            raise ConfigError(f"bad fixed fraction in {name!r}") from exc
    raise ConfigError(f"unknown strategy {name!r}")


# -- commands ------------------------------------------------------------------


def cmd_rates(cfg: ExperimentConfig) -> list[Path]:
    g = cfg.gamble_obj
    if not g.is_favorable:
        raise ConfigError("rate tables need a favorable gamble")
    out = Path(cfg.out)
    sp = RateSpectrum.build(g)
    rates = write_csv(out / "rates.csv", ["alpha", "lambda_star", "kappa", "kappa_prime"], sp.rows())
    vs = np.linspace(sp.v0, sp.v1, 201)
    al = np.atleast_1d(sp.alpha_of_v(vs))
    hv = np.atleast_1d(sp.h(vs))
    hfile = write_csv(out / "failure_rate.csv", ["v", "alpha", "h"], zip(vs, al, hv))
    dp = diffusion_params(g)
    summary = {
        "gamble": g.to_dict(),
        "mean_gain": g.mean_gain,
        "lambda_kelly": dp.lambda_kelly,
        "attractiveness_threshold": attractiveness_threshold(g),
        "v0": sp.v0,
        "v1": sp.v1,
        "D": dp.D,
    }
    sfile = write_json(out / "rates_summary.json", summary)
    return [rates, hfile, sfile]


def checkpoint_path(cfg: ExperimentConfig) -> Path:
    g = cfg.gamble_obj
    gr = cfg.grid_obj
    return Path(cfg.out) / f"solution_{g.digest()}_n{cfg.rounds}_g{gr.num_points}.npz"


def load_or_solve(cfg: ExperimentConfig) -> Solution:
    path = checkpoint_path(cfg)
    if path.exists():
        sol = Solution.load(path)
        if sol.grid == cfg.grid_obj and sol.gamble == cfg.gamble_obj and sol.n == cfg.rounds:
            return sol
    sol = solve(cfg.gamble_obj, cfg.rounds, cfg.grid_obj)
    path.parent.mkdir(parents=True, exist_ok=True)
    sol.save(path)
    return sol


def check_solution(sol: Solution) -> None:
    """Raise DiagnosticError if a stored value function is not monotone and concave."""
    x = sol.grid.x
    for k in range(sol.n + 1):
        z = sol.values[k]
        if np.any(np.diff(z) < -1e-12 * np.abs(z[1:])):
            raise DiagnosticError(f"f_{k} is not monotone")
        w = (x[1:-1] - x[:-2]) / (x[2:] - x[:-2])
        excess = (1 - w) * z[:-2] + w * z[2:] - z[1:-1]
        if np.any(excess > 1e-9 * np.abs(z[1:-1]) + 1e-300):
            raise DiagnosticError(f"f_{k} is not concave")


def cmd_solve(cfg: ExperimentConfig) -> list[Path]:
    out = Path(cfg.out)
    sol = load_or_solve(cfg)
    check_solution(sol)
    q, x = sol.grid.q, sol.grid.x
    files = [checkpoint_path(cfg)]
    rounds = sorted({k for k in cfg.export_rounds if 0 <= k <= sol.n} | {sol.n})
    for k in rounds:
        lam = sol.policy[k - 1] if k >= 1 else [None] * len(q)
        files.append(write_csv(out / f"round_{k}.csv", ["q", "x", "f_k", "lambda_k"], zip(q, x, sol.values[k], lam)))
    info = {"rounds": sol.n, "x_init": cfg.x_init, "key": sol.key()}
    if sol.n >= 1:
        g = sol.gamble
        first = query_policy(sol, sol.n, cfg.x_init)
        info["first_move"] = first
        info["f_n_at_x_init"] = float(sol.f(sol.n, cfg.x_init))
        if sol.n >= 2:
            info["after_win"] = query_policy(sol, sol.n - 1, cfg.x_init * (1 + first * (max(g.gains) - 1)))
            info["after_loss"] = query_policy(sol, sol.n - 1, cfg.x_init * (1 + first * (min(g.gains) - 1)))
    files.append(write_json(out / "solve_summary.json", info))
    return files


def compare_rows(sol: Solution, n: int, xs) -> list[tuple]:
    g = sol.gamble
    wkb = WkbEvaluator.for_gamble(g)
    v0 = wkb.v0
    diff = DiffusionEvaluator.for_gamble(g) if n >= 1 else None
    boundary = math.exp(-n * v0)
    rows = []
    for x in xs:
        if n == 0:
            f_dp = f_w = f_d = math.log1p(x)
        else:
            f_dp = float(sol.f(n, x))
            f_w = wkb(x, n)
            f_d = float(diff(x, n))
        rel_w = abs(math.log(f_w) - math.log(f_dp)) / abs(math.log(f_dp)) if f_dp != 1.0 else math.inf
        rel_d = abs(f_d - f_dp) / f_dp
        rows.append((x, math.log(x), f_dp, f_w, f_d, rel_w, rel_d, boundary))
    return rows


COMPARE_HEADER = ["x", "ln_x", "f_dp", "f_wkb", "f_diffusion", "rel_err_wkb", "rel_err_diffusion", "kelly_boundary_x"]


def cmd_compare(cfg: ExperimentConfig) -> list[Path]:
    out = Path(cfg.out)
    sol = load_or_solve(cfg)
    n = sol.n
    gr = sol.grid
    qs = np.linspace(gr.q_min, gr.q_max, 401)
    rows = compare_rows(sol, n, np.exp(qs))
    files = [write_csv(out / "compare.csv", COMPARE_HEADER, rows)]
    if n >= 1:
        wkb = WkbEvaluator.for_gamble(sol.gamble)
        chars = wkb.characteristics(np.linspace(0.05, 0.95, 19), n, 51)
        files.append(write_csv(out / "characteristics.csv", ["alpha", "n", "ln_x"], chars))
    return files


def default_thresholds(cfg: ExperimentConfig):
    if cfg.dollars:
        return [1e3, 1e4, 1e5, 1e6, 2e6, 5e6]
    return [cfg.x_init, 1e-2, 1e-1, 1.0, 10.0]


def cmd_simulate(cfg: ExperimentConfig, strategy: str | None = None) -> list[Path]:
    out = Path(cfg.out)
    g = cfg.gamble_obj
    name = strategy or cfg.strategy
    strat = parse_strategy(name)
    if strat == "kelly":
        strat = FixedFraction(diffusion_params(g).lambda_kelly) if g.is_favorable else Idle()
    thresholds = default_thresholds(cfg)
    scale = cfg.scale
    tag = name.replace(":", "_")
    if cfg.exact:
        if not isinstance(strat, FixedFraction) or g.num_outcomes != 2:
            raise ConfigError("exact mode needs a fixed-fraction strategy on a two-outcome gamble")
        dist = exact_distribution(g, strat.lam, cfg.x_init, cfg.rounds)
        summary = {
            "mode": "exact",
            "strategy": name,
            "median": dist.median() * scale,
            "mean": dist.mean() * scale,
            "tail_probs": {float(t): dist.tail(t / scale) for t in thresholds},
        }
        tails = [(x * scale, p) for x, p in dist.tail_table()]
        return [
            write_csv(out / f"tail_{tag}_exact.csv", ["x0", "cum_prob"], tails),
            write_json(out / f"summary_{tag}_exact.json", summary),
        ]
    if strat == "optimal":
        strat = PolicyDriven(load_or_solve(cfg))
    dist = simulate(g, strat, cfg.x_init, cfg.rounds, cfg.paths, cfg.seed)
    summary = dist.summary(thresholds, scale)
    summary.update(mode="monte_carlo", strategy=name)
    grid_pts = np.exp(np.linspace(dist.log_samples[0], dist.log_samples[-1], 400))
    tails = [(x * scale, p) for x, p in dist.tail_table(grid_pts)]
    hist = [(a * scale, b * scale, d) for a, b, d in dist.histogram()]
    return [
        write_csv(out / f"tail_{tag}.csv", ["x0", "cum_prob"], tails),
        write_csv(out / f"hist_{tag}.csv", ["bin_left", "bin_right", "density"], hist),
        write_json(out / f"summary_{tag}.json", summary),
    ]


def cmd_report(cfg: ExperimentConfig) -> list[Path]:
    files = cmd_rates(cfg)
    files += cmd_solve(cfg)
    files += cmd_compare(cfg)
    g = cfg.gamble_obj
    for s in ("optimal", "kelly"):
        files += cmd_simulate(cfg, s)
    if g.num_outcomes == 2:
        intro = replace(cfg, x_init=1000.0, stake=None, external=None, dollars=False, exact=True)
        intro_out = Path(cfg.out) / "intro"
        intro.out = str(intro_out)
        for s in ("allin", "kelly"):
            files += cmd_simulate(intro, s)
    return files


COMMANDS = {
    "rates": cmd_rates,
    "solve": cmd_solve,
    "compare": cmd_compare,
    "simulate": cmd_simulate,
    "report": cmd_report,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="JSON experiment config")
    common.add_argument("--preset", choices=sorted(PRESETS))
    common.add_argument("--out", help="output directory")
    common.add_argument("--seed", type=int)
    common.add_argument("--rounds", type=int)
    common.add_argument("--paths", type=int)
    common.add_argument("--grid-points", type=int)
    common.add_argument("--qmin", type=float)
    common.add_argument("--qmax", type=float)
    common.add_argument("--x-init", type=float)
    common.add_argument("--stake", type=float, help="stake in dollars (needs --external)")
    common.add_argument("--external", type=float, help="external capital in dollars")
    common.add_argument("--strategy", help="optimal|kelly|allin|idle|fixed:LAMBDA")
    common.add_argument("--dollars", action="store_true", help="report capitals in dollars")
    common.add_argument("--exact", action="store_true", help="exact binomial law (fixed fractions)")

    p = argparse.ArgumentParser(prog="kellyext", description="Finite-horizon betting with an external capital reserve.")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sub.add_parser(name, parents=[common])
    return p


def config_from_args(args) -> ExperimentConfig:
    data: dict = {}
    if args.preset:
        data.update(PRESETS[args.preset])
    if args.config:
        try:
            data.update(json.loads(args.config.read_text()))
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from exc
    grid = dict(data.get("grid") or GridSpec().to_dict())
    if args.grid_points is not None:
        grid["num_points"] = args.grid_points
    if args.qmin is not None:
        grid["q_min"] = args.qmin
    if args.qmax is not None:
        grid["q_max"] = args.qmax
    data["grid"] = grid
    for flag, key in [
        ("out", "out"),
        ("seed", "seed"),
        ("rounds", "rounds"),
        ("paths", "paths"),
        ("x_init", "x_init"),
        ("stake", "stake"),
        ("external", "external"),
        ("strategy", "strategy"),
    ]:
        v = getattr(args, flag)
        if v is not None:
            data[key] = v
    if args.dollars:
        data["dollars"] = True
    if args.exact:
        data["exact"] = True
    cfg = ExperimentConfig.from_dict(data)
    try:
        default_threads()
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    return cfg


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = config_from_args(args)
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always", GridWarning)
            files = COMMANDS[args.command](cfg)
        for w in caught:
            print(f"warning: {w.message}", file=sys.stderr)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DiagnosticError as exc:
        print(f"numerical diagnostic failed: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    write_json(Path(cfg.out) / "config.json", cfg.to_dict())
    for f in files:
        print(f)
    return 0


if __name__ == "__main__":
    sys.exit(main())
