"""Command-line front end.

    robustgen <subcommand> [--config FILE] [--set key=value ...] [--out PATH]
                           [--format csv|json] [--seed N] [--workers N]

Config files are flat ``key=value`` lines (``#`` comments allowed); list
values are comma separated and integer/float ranges use ``start:stop:step``
with an inclusive stop, e.g. ``sweep.n_values=1:100:1``.
"""
from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional

import numpy as np

from . import gauss_linear as gl
from . import gauss_zeroone as gz
from . import harness as hs
from . import manhattan as mh
from . import trainers as tr
from . import verify as vf
from .errors import ConfigError, DivergenceError, DomainError, EmissionError

EXIT_OK, EXIT_USAGE, EXIT_NUMERIC, EXIT_IO = 0, 2, 3, 4
SUBCOMMANDS = ("regimes", "curve", "mc", "zeroone", "manhattan", "svm", "linreg", "verify")
STDOUT = "-"


def parse_float_list(text: str) -> list[float]:
    text = text.strip()
    if ":" in text:
        parts = [float(p) for p in text.split(":")]
        if len(parts) != 3 or parts[2] <= 0:
            raise ValueError(f"bad range {text!r}")
        start, stop, step = parts
        count = int(np.floor((stop - start) / step + 1e-9)) + 1
        return [round(start + i * step, 12) for i in range(max(count, 0))]
    return [float(p) for p in text.split(",") if p.strip()]


def parse_int_list(text: str) -> list[int]:
    text = text.strip()
    if ":" in text:
        parts = [int(p) for p in text.split(":")]
        if len(parts) != 3 or parts[2] <= 0:
            raise ValueError(f"bad range {text!r}")
        return list(range(parts[0], parts[1] + 1, parts[2]))
    return [int(p) for p in text.split(",") if p.strip()]


def parse_bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


# key -> (parser, default text)
Schema = dict[str, tuple[Callable[[str], object], str]]

_GAUSS = {"mu": (parse_float_list, "1"), "sigma": (parse_float_list, "2"), "weight_bound": (float, "1")}


def _sweep(eps: str, ns: str, reps: str) -> Schema:
    return {"sweep.epsilons": (parse_float_list, eps), "sweep.n_values": (parse_int_list, ns),
            "sweep.replications": (int, reps), "trend.noise_multiplier": (float, "3")}


SCHEMAS: dict[str, Schema] = {
    "regimes": {**_GAUSS, "epsilon": (float, "0.95"), "n_max": (float, "10000")},
    "curve": {**_GAUSS, **_sweep("0.1,0.5,0.95,1.5", "1:100:1", "1")},
    "mc": {**_GAUSS, "slow": (parse_bool, "false"), **_sweep("0.5,0.95,1.5", "1,10,100", "10000")},
    "zeroone": {"mu": (float, "1"), "sigma": (float, "1"), "policy": (str, "agnostic"),
                **_sweep("0.1,0.5,1.0,2.0", "5,10,20,50,100", "10000")},
    "manhattan": {"columns": (int, "5"), "mu": (float, "0.1"), **_sweep("0.1,0.4", "1,2,5,10,20,50", "10000")},
    "svm": {"mu": (parse_float_list, "1,1"), "lambda": (float, "0.001"), "step_size": (float, "0.05"),
            "iterations": (int, "5000"), **_sweep("0.2,0.5,0.7,1.5", "5,20,80,320", "200")},
    "linreg": {"w_star": (float, "1"), "x_dist": (str, "gaussian"), "tol": (float, "1e-9"),
               **_sweep("0.4,1.2", "5,20,80,320", "500")},
    "verify": {"verify.quick": (parse_bool, "false")},
}


@dataclass
class CliInvocation:
    subcommand: str
    config_path: Optional[str] = None
    overrides: list[str] = field(default_factory=list)
    output_path: str = STDOUT
    format: str = "csv"
    seed: int = 0
    workers: int = 1


def _u64(text: str) -> int:
    v = int(text)
    if not 0 <= v < 1 << 64:
        raise argparse.ArgumentTypeError(f"seed {text!r} is not a 64-bit unsigned integer")
    return v


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", dest="config_path", metavar="PATH", help="key=value config file")
    common.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE",
                        help="override one config key (repeatable, applied in order)")
    common.add_argument("--out", dest="output_path", default=STDOUT, metavar="PATH",
                        help="output file (default: standard output)")
    common.add_argument("--format", choices=("csv", "json"), default="csv")
    common.add_argument("--seed", type=_u64, default=0, help="master seed (64-bit unsigned)")
    common.add_argument("--workers", type=int, default=1, help="worker processes for Monte Carlo cells")
    parser = argparse.ArgumentParser(prog="robustgen", description="Generalization curves of adversarially "
                                     "trained models versus training-set size.")
    sub = parser.add_subparsers(dest="subcommand", required=True, metavar="SUBCOMMAND")
    helps = {
        "regimes": "classify the Gaussian/linear-loss regime and locate its thresholds (JSON)",
        "curve": "exact Gaussian/linear-loss curves",
        "mc": "Monte Carlo Gaussian/linear-loss curves",
        "zeroone": "1-D Gaussian mixture under 0-1 loss",
        "manhattan": "Manhattan model Monte Carlo curves",
        "svm": "adversarially trained soft-margin SVM",
        "linreg": "adversarially trained 1-D linear regression",
        "verify": "run the oracle cross-check suite",
    }
    for name in SUBCOMMANDS:
        sp = sub.add_parser(name, parents=[common], help=helps[name], description=helps[name])
        sp.epilog = "keys: " + ", ".join(sorted(SCHEMAS[name]))
    return parser


def parse_invocation(argv: list[str]) -> CliInvocation:
    ns = build_parser().parse_args(argv)
    return CliInvocation(ns.subcommand, ns.config_path, list(ns.overrides), ns.output_path,
                         ns.format, ns.seed, ns.workers)


def _split_kv(line: str, origin: str) -> tuple[str, str]:
    if "=" not in line:
        raise ConfigError(f"{origin}: expected key=value, got {line!r}")
    key, value = line.split("=", 1)
    return key.strip(), value.strip()


def load_config_file(path: str) -> list[tuple[str, str]]:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise EmissionError(f"cannot read config file {path}: {exc.strerror or exc}") from exc
    items = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if line:
            items.append(_split_kv(line, f"{path}:{lineno}"))
    return items


def effective_config(inv: CliInvocation) -> dict[str, object]:
    """Defaults, then file entries, then --set overrides in order."""
    schema = SCHEMAS[inv.subcommand]
    raw = {k: default for k, (_, default) in schema.items()}
    pairs = load_config_file(inv.config_path) if inv.config_path else []
    pairs += [_split_kv(o, "--set") for o in inv.overrides]
    for key, value in pairs:
        if key not in schema:
            raise ConfigError(f"unknown key {key!r} for '{inv.subcommand}' (known: {', '.join(sorted(schema))})")
        raw[key] = value
    out = {}
    for key, text in raw.items():
        try:
            out[key] = schema[key][0](text)
        except ValueError as exc:
            raise ConfigError(f"bad value for {key!r}: {text!r} ({exc})") from exc
    return out


def _gauss_spec(cfg) -> gl.GaussianMixtureSpec:
    return gl.GaussianMixtureSpec(tuple(cfg["mu"]), tuple(cfg["sigma"]))


def _experiment(inv: CliInvocation, cfg: dict) -> hs.ExperimentConfig:
    sub = inv.subcommand
    if sub in ("curve", "mc"):
        params = hs.GaussLinearParams(_gauss_spec(cfg), cfg["weight_bound"], bool(cfg.get("slow", False)))
        family = "GaussLinearExact" if sub == "curve" else "GaussLinearMC"
    elif sub == "zeroone":
        params = hs.ZeroOneParams(cfg["mu"], cfg["sigma"], gz.TiebreakPolicy.parse(cfg["policy"]))
        family = "GaussZeroOne"
    elif sub == "manhattan":
        params = mh.ManhattanSpec(cfg["columns"], cfg["mu"])
        family = "Manhattan"
    elif sub == "svm":
        if len(cfg["mu"]) != 2:
            raise ConfigError("svm mu must have exactly 2 entries")
        params = hs.SvmParams(tuple(cfg["mu"]), cfg["lambda"], cfg["step_size"], cfg["iterations"])
        family = "Svm"
    elif sub == "linreg":
        params = hs.LinRegParams(cfg["w_star"], tr.XDist.parse(cfg["x_dist"]), cfg["tol"])
        family = "LinReg"
    else:
        raise ConfigError(f"{sub} is not a sweep subcommand")
    return hs.ExperimentConfig(family, params, cfg["sweep.epsilons"], cfg["sweep.n_values"],
                               cfg["sweep.replications"], inv.seed)


def _echo(cfg: dict) -> dict:
    return {k: v for k, v in cfg.items()}


def _run_regimes(inv: CliInvocation, cfg: dict) -> str:
    spec = _gauss_spec(cfg)
    setting = gl.AdversarySetting(cfg["epsilon"], cfg["weight_bound"])
    report = gl.classify_regime(spec, setting, cfg["n_max"])
    lo, hi = gl.critical_epsilon_prime()
    payload = report.to_dict()
    payload["critical_eps_prime"] = [lo, hi]
    payload["config"] = _echo(cfg)
    return json.dumps(payload, indent=2) + "\n"


def _run_sweep(inv: CliInvocation, cfg: dict) -> str:
    exp = _experiment(inv, cfg)
    curves = hs.run_sweep(exp, workers=max(1, inv.workers))
    trends = []
    for c in curves:
        if len(c.points) >= 4:
            v = hs.detect_trend(c, cfg["trend.noise_multiplier"])
            trends.append({"epsilon": c.epsilon, "label": v.label, "change_points": v.change_points})
            print(f"epsilon={c.epsilon:g} trend={v.label} change_points={v.change_points}", file=sys.stderr)
    if inv.format == "json":
        text = hs.curves_to_json(curves, {"subcommand": inv.subcommand, "seed": inv.seed, **_echo(cfg),
                                          "experiment": exp.to_dict()})
        data = json.loads(text)
        data["trends"] = trends
        return json.dumps(data, indent=2) + "\n"
    return hs.curves_to_csv(curves, inv.seed)


def _run_verify(inv: CliInvocation, cfg: dict) -> tuple[str, bool]:
    results = vf.run_checks(quick=cfg["verify.quick"])
    lines = [r.line() for r in results]
    ok = all(r.passed for r in results)
    lines.append(f"{sum(r.passed for r in results)}/{len(results)} checks passed")
    return "\n".join(lines) + "\n", ok


def run(inv: CliInvocation) -> int:
    try:
        cfg = effective_config(inv)
        ok = True
        if inv.subcommand == "regimes":
            text = _run_regimes(inv, cfg)
        elif inv.subcommand == "verify":
            text, ok = _run_verify(inv, cfg)
        else:
            text = _run_sweep(inv, cfg)
        hs.write_text(text, inv.output_path)
        return EXIT_OK if ok else 1
    except (ConfigError, DomainError) as exc:
        print(f"robustgen: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DivergenceError, FloatingPointError) as exc:
        print(f"robustgen: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (EmissionError, OSError) as exc:
        print(f"robustgen: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


def main(argv: Optional[list[str]] = None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    return run(parse_invocation(argv))


if __name__ == "__main__":
    sys.exit(main())
