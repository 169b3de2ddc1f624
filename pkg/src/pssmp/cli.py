"""Command-line front end.

Configuration is an INI file with ``[model]``, ``[experiment]`` and
``[run]`` sections. Values are resolved in this order, later wins: built-in
defaults, the config file, the ``--model`` preset, dedicated flags such as
``--x`` or ``--n``, and finally ``--set section.key=value`` overrides.
Every run writes ``manifest.json`` with the resolved configuration before
any computation starts; it is the only output that carries a timestamp.

Exit codes: 0 success, 1 invalid input, 2 failure during computation.
"""
from __future__ import annotations

import argparse
import configparser
import datetime as _dt
import json
import math
import os
import sys
from importlib import resources
from pathlib import Path

import numpy as np

from . import __version__
from .lamperti import Scheme, sample_pssmp
from .levy import LevyModel, ModelValidationError, make_model
from .limits import ErrorRecord
from .mc import (
    COMPARISONS,
    ExperimentConfig,
    HistogramSpec,
    csv_emit,
    frac_uniformity,
    ks_distance,
    normal_cdf,
    run_experiment,
    summarize,
    trimmed_histogram,
    uniform_cdf,
    zoom_experiment,
)
from .rng import Stream

OUT_ENV = "PSSMP_OUT_DIR"
DEFAULT_OUT = "pssmp-out"

PRESETS = {
    "bessel3": {"model": {"kind": "brownian_drift", "mu": "0.5", "sigma": "1"}, "experiment": {"alpha": "2"}},
    "zero": {"model": {"kind": "zero"}},
}

DEFAULTS = {
    "model": {"kind": "brownian_drift", "mu": "0.5", "sigma": "1"},
    "experiment": {
        "alpha": "2",
        "x": "1",
        "times": "1",
        "n_list": "10,100",
        "N": "100000",
        "replications": "1000",
        "scheme": "left_riemann",
        "initial_horizon": "1",
        "s": "1",
        "bins": "60",
    },
    "run": {"seed": "12345", "workers": str(os.cpu_count() or 1)},
}

SUBCOMMANDS = ("simulate", "error-experiment", "zoom-experiment", "oracle-compare", "frac-uniformity")

_FLAG_KEYS = {
    "x": ("experiment", "x"),
    "alpha": ("experiment", "alpha"),
    "times": ("experiment", "times"),
    "n": ("experiment", "n_list"),
    "N": ("experiment", "N"),
    "reps": ("experiment", "replications"),
    "scheme": ("experiment", "scheme"),
    "seed": ("run", "seed"),
    "workers": ("run", "workers"),
}


class UsageError(Exception):
    """Invalid command line or configuration (exit code 1)."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="pssmp", description="Lamperti-based pssMp simulator and error experiments.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="subcommand", required=True, parser_class=_Parser)
    helps = {
        "simulate": "sample X^(n)_t for one replication and print the values",
        "error-experiment": "coupled prelimit/limit error records, histograms and KS summary",
        "zoom-experiment": "a_n (X_{s/n} - x) samples with a KS summary against the Gaussian limit",
        "oracle-compare": "Lamperti Bessel-3 samples against the exact three-dimensional oracle",
        "frac-uniformity": "fractional parts {tau(r) n} of sampled hitting times against Uniform(0,1)",
    }
    for name in SUBCOMMANDS:
        p = sub.add_parser(name, help=helps[name], description=helps[name] + ". " + _schema_text())
        p.add_argument("--config", help="INI file with [model], [experiment], [run] sections; "
                       "a bare name such as bessel3.cfg also resolves to the bundled configs")
        p.add_argument("--model", help=f"model preset: {', '.join(PRESETS)}")
        p.add_argument("--set", action="append", default=[], metavar="SECTION.KEY=VALUE",
                       help="override one config value (repeatable)")
        p.add_argument("--out", help=f"output directory (default ${OUT_ENV} or ./{DEFAULT_OUT})")
        p.add_argument("--x", help="starting point x > 0")
        p.add_argument("--alpha", help="self-similarity index alpha > 0")
        p.add_argument("--times", help="comma-separated sampling times")
        p.add_argument("--n", help="grid resolution or comma-separated list of coarse resolutions")
        p.add_argument("--N", help="fine resolution (error-experiment, frac-uniformity)")
        p.add_argument("--reps", help="number of replications")
        p.add_argument("--scheme", help="left_riemann or trapezoid")
        p.add_argument("--seed", help="master seed")
        p.add_argument("--workers", help="worker processes (default: available cores)")
    return parser


def _schema_text() -> str:
    lines = []
    for section, keys in DEFAULTS.items():
        lines.append(f"[{section}] " + ", ".join(f"{k} (default {v})" for k, v in keys.items()))
    lines.append("[model] also accepts mu, sigma, stability, positivity, jump_rate, jump_dist, jump_params.")
    return " Config schema: " + " ".join(lines)


def _find_config(name: str) -> Path:
    p = Path(name)
    if p.is_file():
        return p
    bundled = resources.files("pssmp") / "configs" / p.name
    if bundled.is_file():
        return Path(str(bundled))
    raise UsageError(f"config file not found: {name}")


def resolve(args) -> dict[str, dict[str, str]]:
    conf = {s: dict(v) for s, v in DEFAULTS.items()}

    def merge(src):
        for section, values in src.items():
            conf.setdefault(section, {}).update(values)

    if args.config:
        cp = configparser.ConfigParser()
        cp.optionxform = str
        try:
            cp.read(_find_config(args.config), encoding="utf-8")
        except configparser.Error as exc:
            raise UsageError(f"malformed config {args.config}: {exc}") from exc
        unknown = set(cp.sections()) - set(DEFAULTS)
        if unknown:
            raise UsageError(f"unknown config sections: {', '.join(sorted(unknown))}")
        if cp.has_section("model") and cp.has_option("model", "preset"):
            preset = cp.get("model", "preset")
            if preset not in PRESETS:
                raise UsageError(f"unknown model preset {preset!r} in {args.config}")
            conf["model"] = {}
            merge(PRESETS[preset])
        if cp.has_section("model") and cp.has_option("model", "kind"):
            conf["model"] = {}
        merge({s: {k: v for k, v in cp.items(s) if k != "preset"} for s in cp.sections()})
    if args.model:
        if args.model not in PRESETS:
            raise UsageError(f"unknown model preset {args.model!r}; choose from {', '.join(PRESETS)}")
        conf["model"] = {}
        merge(PRESETS[args.model])
    for flag, (section, key) in _FLAG_KEYS.items():
        value = getattr(args, flag)
        if value is not None:
            conf[section][key] = value
    for item in args.set:
        lhs, sep, value = item.partition("=")
        section, dot, key = lhs.partition(".")
        if not sep or not dot or section not in DEFAULTS:
            raise UsageError(f"--set expects section.key=value with section in {', '.join(DEFAULTS)}, got {item!r}")
        conf[section][key] = value
    return conf


def _floats(text: str) -> tuple[float, ...]:
    return tuple(float(v) for v in text.split(",") if v.strip())


def _ints(text: str) -> tuple[int, ...]:
    out = []
    for v in text.split(","):
        if v.strip():
            f = float(v)
            if f != int(f):
                raise ValueError(f"expected an integer, got {v!r}")
            out.append(int(f))
    return tuple(out)


def _model(conf) -> LevyModel:
    spec = dict(conf["model"])
    if "jump_params" in spec:
        spec["jump_params"] = _floats(spec["jump_params"])
    for k in ("mu", "sigma", "stability", "positivity", "jump_rate"):
        if k in spec:
            spec[k] = float(spec[k])
    return make_model(spec)


def _experiment(conf, subcommand: str) -> ExperimentConfig:
    e, run = conf["experiment"], conf["run"]
    n_list = _ints(e["n_list"])
    N = _ints(e["N"])[0]
    if subcommand in ("simulate", "zoom-experiment", "oracle-compare"):
        N = math.lcm(*n_list)  # the fine grid is unused; keep the divisibility check trivially true
    return ExperimentConfig(
        model=_model(conf),
        alpha=float(e["alpha"]),
        x=float(e["x"]),
        times=_floats(e["times"]),
        n_list=n_list,
        N=N,
        replications=_ints(e["replications"])[0],
        master_seed=_ints(run["seed"])[0],
        scheme=Scheme(e["scheme"]),
        initial_horizon=float(e["initial_horizon"]),
        workers=_ints(run["workers"])[0],
    )


def _write_manifest(out: Path, subcommand: str, conf: dict) -> None:
    manifest = {
        "subcommand": subcommand,
        "version": __version__,
        "created": _dt.datetime.now(_dt.timezone.utc).isoformat(),
        "config": conf,
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _tag(v: float) -> str:
    return format(v, "g").replace("-", "m").replace(".", "p")


def _cmd_simulate(cfg: ExperimentConfig, conf, out: Path) -> None:
    n = cfg.n_list[0]
    s = sample_pssmp(cfg.model, cfg.x, cfg.alpha, cfg.times, n, cfg.scheme, Stream(cfg.master_seed, (0,)))
    rows = [
        {"t": t, "value": v, "tau_n": h.tau_n, "time_shift": ts}
        for t, v, h, ts in zip(s.times, s.values, s.hitting, s.time_shift)
    ]
    csv_emit(rows, out / "simulate.csv")
    for t, v in zip(s.times, s.values):
        print(f"X^({n})_{t:g} = {format(float(v), '.17g')}")


def _cmd_error(cfg: ExperimentConfig, conf, out: Path) -> None:
    result = run_experiment(cfg)
    csv_emit(result.records, out / "records.csv", ErrorRecord.field_names())
    spec = HistogramSpec(bin_count=int(conf["experiment"]["bins"]))
    for n in cfg.n_list:
        for t in cfg.times:
            suffix = f"n{n}_t{_tag(t)}"
            for pre, lim in COMPARISONS:
                a, b = result.column(pre, n, t), result.column(lim, n, t)
                if np.isfinite(b).all():
                    csv_emit(trimmed_histogram(a, b, spec), out / f"hist_{pre}_{suffix}.csv")
            frac = result.column("frac_part", n, t)
            csv_emit(trimmed_histogram(frac, frac, HistogramSpec(spec.bin_count, "none", 0.0, 1.0)),
                     out / f"hist_frac_part_{suffix}.csv")
    rows = summarize(result)
    csv_emit(rows, out / "summary.csv")
    for row in rows:
        print(", ".join(f"{k}={v:.6g}" if isinstance(v, float) else f"{k}={v}" for k, v in row.items()))


def _zoom_scale(model: LevyModel, x: float, alpha: float, s: float) -> float | None:
    """Standard deviation of the Gaussian zooming limit, or None if it is not Gaussian."""
    if model.beta != 2 or model.kind.value == "stable" or model.sigma <= 0:
        return None
    return model.sigma * x ** (1 - alpha / 2) * math.sqrt(s)


def _cmd_zoom(cfg: ExperimentConfig, conf, out: Path) -> None:
    n = cfg.n_list[0]
    s = float(conf["experiment"]["s"])
    vals = zoom_experiment(cfg.model, cfg.x, cfg.alpha, n, [s], cfg.replications, cfg.master_seed)[:, 0]
    csv_emit(({"value": v} for v in vals), out / "zoom.csv", ["value"])
    scale = _zoom_scale(cfg.model, cfg.x, cfg.alpha, s)
    ks = ks_distance(vals, normal_cdf(scale)) if scale else math.nan
    row = {"n": n, "s": s, "replications": cfg.replications, "limit_sd": scale or math.nan,
           "sample_var": float(np.var(vals, ddof=1)) if vals.size > 1 else math.nan, "ks_vs_normal": ks}
    csv_emit([row], out / "summary.csv")
    print(", ".join(f"{k}={v:.6g}" if isinstance(v, float) else f"{k}={v}" for k, v in row.items()))


def _cmd_oracle(cfg: ExperimentConfig, conf, out: Path) -> None:
    from .mc import oracle_compare

    n, t = cfg.n_list[0], cfg.times[0]
    lam, exact = oracle_compare(cfg.model, cfg.x, cfg.alpha, t, n, cfg.replications, cfg.master_seed, cfg.scheme)
    csv_emit(({"lamperti": a, "exact": b} for a, b in zip(lam, exact)), out / "oracle.csv", ["lamperti", "exact"])
    row = {"n": n, "t": t, "ks": ks_distance(lam, exact)}
    csv_emit([row], out / "summary.csv")
    print(f"n={n}, t={t:g}, ks={row['ks']:.6g}")


def _cmd_frac(cfg: ExperimentConfig, conf, out: Path) -> None:
    t = cfg.times[0]
    r = t * cfg.x ** (-cfg.alpha)
    frac = frac_uniformity(cfg.model, cfg.alpha, r, cfg.N, cfg.replications, cfg.master_seed, cfg.scheme)
    csv_emit(({"frac_part": v} for v in frac), out / "frac.csv", ["frac_part"])
    row = {"N": cfg.N, "r": r, "ks_vs_uniform": ks_distance(frac, uniform_cdf)}
    csv_emit([row], out / "summary.csv")
    print(f"N={cfg.N}, r={r:g}, ks_vs_uniform={row['ks_vs_uniform']:.6g}")


_COMMANDS = {
    "simulate": _cmd_simulate,
    "error-experiment": _cmd_error,
    "zoom-experiment": _cmd_zoom,
    "oracle-compare": _cmd_oracle,
    "frac-uniformity": _cmd_frac,
}


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except UsageError as exc:
        print(f"pssmp: error: {exc}", file=sys.stderr)
        return 1
    except SystemExit as exc:  # --help and --version
        return int(exc.code or 0)
    try:
        conf = resolve(args)
        cfg = _experiment(conf, args.subcommand)
        if args.subcommand == "oracle-compare" and conf["model"] != PRESETS["bessel3"]["model"]:
            raise UsageError("oracle-compare needs the bessel3 model")
        out = Path(args.out or os.environ.get(OUT_ENV) or DEFAULT_OUT)
        try:
            out.mkdir(parents=True, exist_ok=True)
            _write_manifest(out, args.subcommand, conf)
        except OSError as exc:
            raise UsageError(f"cannot write to output directory {out}: {exc}") from exc
    except (UsageError, ModelValidationError, ValueError, KeyError) as exc:
        print(f"pssmp: error: {exc}", file=sys.stderr)
        return 1
    try:
        _COMMANDS[args.subcommand](cfg, conf, out)
    except Exception as exc:
        print(f"pssmp: runtime error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
