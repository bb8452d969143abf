"""Experiment runner: P_r sweeps, relay-count sweeps, diversity fits.

Usage::

    python -m mecrelay fig2 --trials 1000000 --seed 2024 --out fig2.csv
    python -m mecrelay fig3 --out fig3.csv
    python -m mecrelay diversity
    python -m mecrelay point --set pr_db=20

Configuration is a flat ``key = value`` file (``--config``); ``--set`` and
the dedicated flags override it. Every output starts with ``#`` lines
recording the resolved configuration, then a CSV header and rows.
"""

from __future__ import annotations

import argparse
import csv
import io
import sys
from dataclasses import asdict, dataclass, fields, replace
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from . import __version__
from .analytic import analytic_outage, diversity_order, predicted_diversity
from .channel import uniform_cpu_freqs
from .model import RelayNode, SystemConfig, TaskSpec, eligibility
from .montecarlo import ANALYTIC, ANALYTIC_BOUND, estimate_all_schemes_shared_draws
from .quadrature import DEFAULT_INNER_TOL, DEFAULT_OUTER_TOL, ConvergenceError
from .schemes import Scheme

__all__ = [
    "ConfigError",
    "ExperimentConfig",
    "CurveRow",
    "DiversityRow",
    "load_config",
    "run_fig2",
    "run_fig3",
    "run_diversity",
    "run_point",
    "main",
]

CURVE_COLUMNS = ("sweep_value", "scheme_id", "method", "p_out", "ci_low", "ci_high", "n_trials", "seed")
UNCONVERGED = "+unconverged"


class ConfigError(ValueError):
    pass


def _floats(value) -> tuple[float, ...]:
    if isinstance(value, str):
        return tuple(float(v) for v in value.replace(";", ",").split(",") if v.strip())
    if isinstance(value, (int, float)):
        return (float(value),)
    return tuple(float(v) for v in value)


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything needed to resolve a :class:`SystemConfig` per sweep point.

    Defaults reproduce the published simulation setup; relay distances
    default to 1 because the relay positions were never stated.
    """

    input_bits: float = 50e6
    cycles_per_bit: float = 10.0
    compute_ratio: float = 0.5
    ps_db: float = 25.0
    pr_db: float = 20.0
    noise: float = 1.0
    bandwidth: float = 100e6
    pathloss_exp: float = 3.0
    deadline: float = 0.2
    n_relays: int = 4
    dist_src: tuple[float, ...] = (1.0,)
    dist_dst: tuple[float, ...] = (1.0,)
    cpu_policy: str = "uniform"
    cpu_low: float = 5e9
    cpu_high: float = 30e9
    cpu_freqs: tuple[float, ...] = ()
    sweep_var: str = ""
    sweep_start: float = 0.0
    sweep_stop: float = 30.0
    sweep_points: int = 7
    sweep_scale: str = "dB"
    trials: int = 1_000_000
    seed: int = 2024
    scheme: str = "all"
    quad_inner_tol: float = DEFAULT_INNER_TOL
    quad_outer_tol: float = DEFAULT_OUTER_TOL
    fig3_means: tuple[float, ...] = (5e9, 20e9)
    fig3_spread: float = 0.5
    gamma_start: float = 1e3
    gamma_stop: float = 1e6
    gamma_points: int = 8

    def __post_init__(self):
        if self.cpu_policy not in ("uniform", "explicit"):
            raise ConfigError(f"cpu.policy must be 'uniform' or 'explicit', got {self.cpu_policy!r}")
        if self.cpu_policy == "explicit" and len(self.cpu_freqs) < self.n_relays:
            raise ConfigError(f"cpu.freqs lists {len(self.cpu_freqs)} values for {self.n_relays} relays")
        if self.sweep_scale not in ("dB", "linear", "count"):
            raise ConfigError(f"sweep.scale must be dB, linear or count, got {self.sweep_scale!r}")
        if self.scheme.lower() not in ("all", "lbrs", "cors", "cpors"):
            raise ConfigError(f"scheme must be lbrs, cors, cpors or all, got {self.scheme!r}")
        if self.trials < 1 or self.n_relays < 1 or self.sweep_points < 1:
            raise ConfigError("trials, n_relays and sweep.points must be positive")
        if not 0 <= self.seed < 2**64:
            raise ConfigError("seed must be an unsigned 64-bit integer")
        for name in ("dist_src", "dist_dst"):
            n = len(getattr(self, name))
            if n == 0 or (n != 1 and n < self.n_relays):
                raise ConfigError(f"{name} needs 1 value or one per relay ({self.n_relays})")

    @property
    def schemes(self) -> tuple[Scheme, ...]:
        return tuple(Scheme) if self.scheme.lower() == "all" else (Scheme.parse(self.scheme),)

    def sweep_values(self) -> np.ndarray:
        if self.sweep_scale == "count":
            return np.arange(int(self.sweep_start), int(self.sweep_stop) + 1)
        return np.linspace(self.sweep_start, self.sweep_stop, self.sweep_points)

    def gamma_grid(self) -> np.ndarray:
        return np.logspace(np.log10(self.gamma_start), np.log10(self.gamma_stop), self.gamma_points)

    def resolve_freqs(self, n: int | None = None, low: float | None = None, high: float | None = None) -> np.ndarray:
        """CPU frequencies for the first ``n`` relays, drawn once from ``seed``."""
        n = self.n_relays if n is None else n
        if self.cpu_policy == "explicit":
            if n > len(self.cpu_freqs):
                raise ConfigError(f"need {n} cpu.freqs values, have {len(self.cpu_freqs)}")
            return np.array(self.cpu_freqs[:n])
        lo = self.cpu_low if low is None else low
        hi = self.cpu_high if high is None else high
        return uniform_cpu_freqs(self.seed, n, lo, hi)

    def _distance(self, values: tuple[float, ...], i: int) -> float:
        return values[0] if len(values) == 1 else values[i]

    def system(self, freqs: Sequence[float] | None = None, **overrides) -> SystemConfig:
        cfg = replace(self, **overrides) if overrides else self
        freqs = cfg.resolve_freqs() if freqs is None else freqs
        relays = [
            RelayNode(float(f), cfg._distance(cfg.dist_src, i), cfg._distance(cfg.dist_dst, i))
            for i, f in enumerate(freqs)
        ]
        try:
            return SystemConfig.from_db(
                cfg.ps_db,
                cfg.pr_db,
                relays,
                TaskSpec(cfg.input_bits, cfg.cycles_per_bit, cfg.compute_ratio),
                bandwidth=cfg.bandwidth,
                pathloss_exp=cfg.pathloss_exp,
                deadline=cfg.deadline,
                noise=cfg.noise,
            )
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc


# file key -> (field name, converter)
_KEYS = {
    "L": ("input_bits", float),
    "K": ("cycles_per_bit", float),
    "rho": ("compute_ratio", float),
    "ps_db": ("ps_db", float),
    "pr_db": ("pr_db", float),
    "noise": ("noise", float),
    "bandwidth": ("bandwidth", float),
    "alpha": ("pathloss_exp", float),
    "deadline": ("deadline", float),
    "n_relays": ("n_relays", int),
    "relays.d_src": ("dist_src", _floats),
    "relays.d_dst": ("dist_dst", _floats),
    "cpu.policy": ("cpu_policy", str),
    "cpu.low": ("cpu_low", float),
    "cpu.high": ("cpu_high", float),
    "cpu.freqs": ("cpu_freqs", _floats),
    "sweep.var": ("sweep_var", str),
    "sweep.start": ("sweep_start", float),
    "sweep.stop": ("sweep_stop", float),
    "sweep.points": ("sweep_points", int),
    "sweep.scale": ("sweep_scale", str),
    "trials": ("trials", int),
    "seed": ("seed", int),
    "scheme": ("scheme", str),
    "quad.inner_tol": ("quad_inner_tol", float),
    "quad.outer_tol": ("quad_outer_tol", float),
    "fig3.means": ("fig3_means", _floats),
    "fig3.spread": ("fig3_spread", float),
    "gamma.start": ("gamma_start", float),
    "gamma.stop": ("gamma_stop", float),
    "gamma.points": ("gamma_points", int),
}
_FIELD_TO_KEY = {fname: key for key, (fname, _) in _KEYS.items()}


def parse_assignments(lines: Iterable[str], source: str = "<config>") -> dict:
    """Parse ``key = value`` lines into :class:`ExperimentConfig` field values."""
    out = {}
    for lineno, raw in enumerate(lines, 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value', got {raw.strip()!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in _KEYS:
            raise ConfigError(f"{source}:{lineno}: unknown key {key!r}")
        fname, conv = _KEYS[key]
        try:
            out[fname] = conv(value)
        except ValueError as exc:
            raise ConfigError(f"{source}:{lineno}: bad value for {key}: {value!r}") from exc
    return out


def load_config(path: str | Path | None = None, overrides: dict | None = None, base: ExperimentConfig | None = None) -> ExperimentConfig:
    values = {}
    if path is not None:
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        values.update(parse_assignments(text.splitlines(), str(path)))
    values.update(overrides or {})
    try:
        return replace(base or ExperimentConfig(), **values)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc


@dataclass(frozen=True)
class CurveRow:
    sweep_value: float | str
    scheme_id: str
    method: str
    p_out: float
    ci_low: float
    ci_high: float
    n_trials: int
    seed: int | str


@dataclass(frozen=True)
class DiversityRow:
    scheme_id: str
    phi_size: int
    predicted_order: int
    slope: float
    fit_residual: float
    tolerance: float
    passed: bool


def _fmt(v) -> str:
    if isinstance(v, bool):
        return str(v).lower()
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def _header(command: str, cfg: ExperimentConfig, extra: dict | None = None) -> list[str]:
    lines = [f"# mecrelay {__version__}", f"# command = {command}"]
    for f in fields(cfg):
        v = getattr(cfg, f.name)
        if isinstance(v, tuple):
            v = ",".join(_fmt(x) for x in v)
        lines.append(f"# {_FIELD_TO_KEY.get(f.name, f.name)} = {_fmt(v)}")
    for k, v in (extra or {}).items():
        lines.append(f"# {k} = {v}")
    return lines


def format_table(header: list[str], columns: Sequence[str], rows: Iterable) -> str:
    buf = io.StringIO()
    for line in header:
        buf.write(line + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([_fmt(v) for v in asdict(r).values()])
    return buf.getvalue()


def _evaluate_point(sweep_value, cfg: ExperimentConfig, system: SystemConfig) -> list[CurveRow]:
    """MC rows for every scheme (shared draws) followed by analytic rows."""
    mc = estimate_all_schemes_shared_draws(system, cfg.trials, cfg.seed)
    rows = []
    for s in cfg.schemes:
        r = mc[s]
        rows.append(CurveRow(sweep_value, s.value, r.method, r.p_hat, r.ci_low, r.ci_high, r.n_trials, cfg.seed))
    for s in cfg.schemes:
        method = ANALYTIC_BOUND if s is Scheme.CORS else ANALYTIC
        try:
            p = analytic_outage(system, s, cfg.quad_inner_tol)
        except ConvergenceError as exc:
            p, method = exc.value, method + UNCONVERGED
        rows.append(CurveRow(sweep_value, s.value, method, p, p, p, 0, ""))
    return rows


_SWEEPABLE = {"pr_db", "ps_db", "deadline", "compute_ratio", "cycles_per_bit", "input_bits", "bandwidth", "n_relays"}


def _sweep_field(name: str) -> str:
    fname = _KEYS[name][0] if name in _KEYS else name
    if fname not in _SWEEPABLE:
        raise ConfigError(f"cannot sweep over {name!r}")
    return fname


def _sweep(cfg: ExperimentConfig, default_var: str, freqs_for=None) -> list[CurveRow]:
    var = _sweep_field(cfg.sweep_var or default_var)
    rows = []
    for x in cfg.sweep_values():
        value = int(x) if var == "n_relays" else float(x)
        point = replace(cfg, **{var: value})
        freqs = freqs_for(point) if freqs_for else point.resolve_freqs()
        rows.extend(_evaluate_point(value, point, point.system(freqs)))
    return rows


def _emit(text: str, out: str | Path | None) -> None:
    if out is None:
        sys.stdout.write(text)
        return
    path = Path(out)
    if path.parent and not path.parent.exists():
        path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)


def run_fig2(config: ExperimentConfig, out: str | Path | None = None) -> list[CurveRow]:
    """Outage versus ``P_r/sigma2`` with CPU frequencies fixed across the sweep."""
    cfg = config if config.sweep_var else replace(config, sweep_var="pr_db")
    freqs = cfg.resolve_freqs()
    rows = _sweep(cfg, "pr_db", lambda point: freqs)
    text = format_table(_header("fig2", cfg, {"cpu_freqs_resolved": ",".join(_fmt(f) for f in freqs)}), CURVE_COLUMNS, rows)
    _emit(text, out)
    return rows


def fig3_population_path(out: str | Path, mean: float) -> Path:
    out = Path(out)
    return out.with_name(f"{out.stem}_mean{mean:.3g}{out.suffix or '.csv'}")


FIG3_DEFAULTS = dict(sweep_var="n_relays", sweep_start=1, sweep_stop=8, sweep_scale="count", pr_db=20.0)


def run_fig3(config: ExperimentConfig, out: str | Path | None = None) -> dict[float, list[CurveRow]]:
    """Outage versus relay count for each CPU population.

    Population ``m`` draws ``f ~ U[m(1-s), m(1+s)]`` with spread ``s``.
    All populations share the underlying uniforms and channel draws, and a
    sweep point with ``N`` relays reuses the draws of the first ``N``
    relays of any larger point. One file per population is written, named
    by :func:`fig3_population_path`.
    """
    cfg = config
    result = {}
    for mean in cfg.fig3_means:
        lo, hi = mean * (1 - cfg.fig3_spread), mean * (1 + cfg.fig3_spread)
        if cfg.cpu_policy == "explicit":
            raise ConfigError("fig3 draws CPU frequencies per population; cpu.policy must be uniform")

        def freqs_for(point, lo=lo, hi=hi):
            return point.resolve_freqs(point.n_relays, lo, hi)

        rows = _sweep(cfg, "n_relays", freqs_for)
        n_max = int(max(cfg.sweep_values())) if cfg.sweep_var in ("", "n_relays") else cfg.n_relays
        freqs = cfg.resolve_freqs(n_max, lo, hi)
        extra = {
            "population_mean": _fmt(float(mean)),
            "population_range": f"{_fmt(lo)},{_fmt(hi)}",
            "cpu_freqs_resolved": ",".join(_fmt(f) for f in freqs),
        }
        text = format_table(_header("fig3", cfg, extra), CURVE_COLUMNS, rows)
        _emit(text, None if out is None else fig3_population_path(out, mean))
        result[float(mean)] = rows
    return result


DIVERSITY_TOL = {Scheme.LBRS: 0.3, Scheme.CORS: 0.3, Scheme.CPORS: 0.1}
DIVERSITY_COLUMNS = tuple(f.name for f in fields(DiversityRow))


def run_diversity(config: ExperimentConfig, out: str | Path | None = None) -> list[DiversityRow]:
    """Fit high-SNR slopes and compare with the eligible-set prediction."""
    system = config.system()
    grid = config.gamma_grid()
    phi = eligibility(system).size
    rows = []
    for s in config.schemes:
        try:
            fit = diversity_order(system, s, grid, config.quad_inner_tol)
            slope, resid = fit.slope, fit.fit_residual
        except ConvergenceError:
            slope, resid = float("nan"), float("nan")
        pred = predicted_diversity(system, s)
        tol = DIVERSITY_TOL[s]
        rows.append(DiversityRow(s.value, phi, pred, slope, resid, tol, bool(abs(slope - pred) <= tol)))
    extra = {
        "gamma_grid": ",".join(_fmt(g) for g in grid),
        "cpu_freqs_resolved": ",".join(_fmt(f) for f in system.cpu_freqs),
    }
    _emit(format_table(_header("diversity", config, extra), DIVERSITY_COLUMNS, rows), out)
    return rows


def run_point(config: ExperimentConfig, out: str | Path | None = None) -> list[CurveRow]:
    system = config.system()
    rows = _evaluate_point("", config, system)
    extra = {"cpu_freqs_resolved": ",".join(_fmt(f) for f in system.cpu_freqs)}
    _emit(format_table(_header("point", config, extra), CURVE_COLUMNS, rows), out)
    return rows


def build_parser() -> argparse.ArgumentParser:
    shared = argparse.ArgumentParser(add_help=False)
    shared.add_argument("--config", metavar="PATH", help="flat key = value configuration file")
    shared.add_argument("--trials", type=int, help="Monte Carlo trials per point")
    shared.add_argument("--seed", type=int, help="master seed (unsigned 64-bit)")
    shared.add_argument("--out", metavar="PATH", help="output CSV (default: stdout)")
    shared.add_argument("--scheme", choices=["lbrs", "cors", "cpors", "all"])
    shared.add_argument("--quad-inner-tol", type=float)
    shared.add_argument("--quad-outer-tol", type=float)
    shared.add_argument("--set", action="append", default=[], metavar="KEY=VALUE", help="override any config key")

    parser = argparse.ArgumentParser(prog="mecrelay", description=__doc__.split("\n\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("fig2", parents=[shared], help="outage vs P_r/sigma2")
    sub.add_parser("fig3", parents=[shared], help="outage vs number of relays")
    sub.add_parser("diversity", parents=[shared], help="high-SNR slope fits")
    sub.add_parser("point", parents=[shared], help="all schemes at one operating point")
    return parser


def config_from_args(args: argparse.Namespace) -> ExperimentConfig:
    base = ExperimentConfig()
    if args.command == "fig3":
        base = replace(base, **FIG3_DEFAULTS)
    overrides = parse_assignments(args.set, "--set")
    for flag, fname in (
        ("trials", "trials"),
        ("seed", "seed"),
        ("scheme", "scheme"),
        ("quad_inner_tol", "quad_inner_tol"),
        ("quad_outer_tol", "quad_outer_tol"),
    ):
        v = getattr(args, flag)
        if v is not None:
            overrides[fname] = v
    return load_config(args.config, overrides, base)


RUNNERS = {"fig2": run_fig2, "fig3": run_fig3, "diversity": run_diversity, "point": run_point}


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = config_from_args(args)
        RUNNERS[args.command](cfg, args.out)
    except ConfigError as exc:
        print(f"mecrelay: configuration error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"mecrelay: I/O error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
