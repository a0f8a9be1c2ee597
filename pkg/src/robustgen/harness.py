"""Sweeps over (epsilon, n) for every model family, trend detection, CSV/JSON output."""
from __future__ import annotations

import csv
import dataclasses
import io
import json
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional, Sequence

import numpy as np

from . import gauss_linear as gl
from . import gauss_zeroone as gz
from . import manhattan as mh
from . import trainers as tr
from .curves import CurvePoint, LossCurve, summarize
from .errors import ConfigError, DivergenceError, DomainError, EmissionError
from .numerics import derive_substream

FAMILY_IDS = {
    "GaussLinearExact": 0,
    "GaussLinearMC": 1,
    "GaussZeroOne": 2,
    "Manhattan": 3,
    "Svm": 4,
    "LinReg": 5,
}
EXACT_FAMILIES = {"GaussLinearExact"}
CSV_HEADER = ["family", "epsilon", "n", "mean_loss", "stderr", "replications", "seed"]
DEFAULT_NOISE_MULTIPLIER = 3.0


@dataclass(frozen=True)
class GaussLinearParams:
    spec: gl.GaussianMixtureSpec = gl.GaussianMixtureSpec((1.0,), (2.0,))
    weight_bound: float = 1.0
    slow: bool = False


@dataclass(frozen=True)
class ZeroOneParams:
    mu: float = 1.0
    sigma: float = 1.0
    policy: gz.TiebreakPolicy = gz.TiebreakPolicy.AGNOSTIC


@dataclass(frozen=True)
class SvmParams:
    mu: tuple[float, float] = (1.0, 1.0)
    lam: float = 1e-3
    step_size: float = 0.05
    iterations: int = 5000


@dataclass(frozen=True)
class LinRegParams:
    w_star: float = 1.0
    x_dist: tr.XDist = tr.XDist.STANDARD_GAUSSIAN
    tol: float = 1e-9
    search_bracket: Optional[tuple[float, float]] = None


PARAM_TYPES = {
    "GaussLinearExact": GaussLinearParams,
    "GaussLinearMC": GaussLinearParams,
    "GaussZeroOne": ZeroOneParams,
    "Manhattan": mh.ManhattanSpec,
    "Svm": SvmParams,
    "LinReg": LinRegParams,
}


def _jsonable(obj):
    if dataclasses.is_dataclass(obj):
        return {f.name: _jsonable(getattr(obj, f.name)) for f in dataclasses.fields(obj)}
    if hasattr(obj, "value") and hasattr(obj, "name") and not isinstance(obj, (int, float)):
        return obj.value
    if isinstance(obj, (list, tuple)):
        return [_jsonable(x) for x in obj]
    return obj


@dataclass
class ExperimentConfig:
    family: str
    family_params: Any
    epsilons: list[float]
    n_values: list[int]
    replications: int = 1000
    master_seed: int = 0

    def validate(self) -> None:
        if self.family not in FAMILY_IDS:
            raise ConfigError(f"unknown family {self.family!r}")
        if not isinstance(self.family_params, PARAM_TYPES[self.family]):
            raise ConfigError(f"family {self.family} expects {PARAM_TYPES[self.family].__name__} "
                              f"parameters, got {type(self.family_params).__name__}")
        if not self.epsilons:
            raise ConfigError("epsilons must be nonempty")
        if any(not (math.isfinite(e) and e >= 0) for e in self.epsilons):
            raise ConfigError("epsilons must be finite and nonnegative")
        if not self.n_values or any(n < 1 for n in self.n_values):
            raise ConfigError("n_values must be nonempty positive integers")
        if any(b <= a for a, b in zip(self.n_values, self.n_values[1:])):
            raise ConfigError("n_values must be strictly increasing")
        if self.replications < 1:
            raise ConfigError("replications must be at least 1")
        if not 0 <= self.master_seed < 1 << 64:
            raise ConfigError("master_seed must be a 64-bit unsigned integer")

    def to_dict(self) -> dict:
        return {
            "family": self.family,
            "family_params": _jsonable(self.family_params),
            "epsilons": list(self.epsilons),
            "n_values": list(self.n_values),
            "replications": self.replications,
            "master_seed": self.master_seed,
        }


def cell_streams(config: ExperimentConfig, ei: int, ni: int):
    fid = FAMILY_IDS[config.family]
    return [derive_substream(config.master_seed, (fid, ei, ni, r)) for r in range(config.replications)]


def _cell_losses(config: ExperimentConfig, ei: int, ni: int) -> np.ndarray:
    eps, n, p = config.epsilons[ei], config.n_values[ni], config.family_params
    streams = cell_streams(config, ei, ni)
    fam = config.family
    if fam == "GaussLinearMC":
        setting = gl.AdversarySetting(eps, p.weight_bound)
        return gl.gauss_linear_mc_losses(p.spec, setting, n, streams, slow=p.slow)
    if fam == "GaussZeroOne":
        return gz.zero_one_mc_losses(p.mu, p.sigma, eps, p.policy, n, streams)
    if fam == "Manhattan":
        return mh.manhattan_mc_losses(p, eps, n, streams)
    if fam == "Svm":
        cfg = tr.SvmConfig(p.lam, eps, p.step_size, p.iterations)
        return tr.svm_mc_losses(np.asarray(p.mu), cfg, n, streams)
    if fam == "LinReg":
        cfg = tr.LinRegConfig(eps, p.w_star, p.x_dist, p.search_bracket, p.tol)
        return tr.linreg_mc_losses(cfg, n, streams)
    raise ConfigError(f"family {fam} has no Monte Carlo kernel")


def _run_cell(args) -> CurvePoint:
    config, ei, ni = args
    eps, n = config.epsilons[ei], config.n_values[ni]
    try:
        if config.family in EXACT_FAMILIES:
            p = config.family_params
            val = gl.exact_generalization_loss(p.spec, gl.AdversarySetting(eps, p.weight_bound), n)
            return CurvePoint(n, val, 0.0, 0)
        losses = _cell_losses(config, ei, ni)
    except DivergenceError as exc:
        raise DivergenceError(f"{config.family} cell epsilon={eps!r} n={n}: {exc}") from exc
    mean, se = summarize(losses)
    return CurvePoint(n, mean, se, config.replications)


def run_sweep(config: ExperimentConfig, workers: int = 1) -> list[LossCurve]:
    """One curve per epsilon. Cells may run in worker processes; output does not depend on it."""
    config.validate()
    tasks = [(config, ei, ni) for ei in range(len(config.epsilons)) for ni in range(len(config.n_values))]
    if workers > 1 and config.family not in EXACT_FAMILIES:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            points = list(pool.map(_run_cell, tasks))
    else:
        points = [_run_cell(t) for t in tasks]
    curves = []
    k = len(config.n_values)
    for ei, eps in enumerate(config.epsilons):
        curves.append(LossCurve(float(eps), points[ei * k:(ei + 1) * k], config.family))
    return curves


@dataclass
class TrendVerdict:
    label: str
    change_points: list[int] = field(default_factory=list)
    confidence_note: str = ""


def significant_signs(curve: LossCurve, noise_multiplier: float = DEFAULT_NOISE_MULTIPLIER) -> list[int]:
    """Per-difference sign: +1/-1 when beyond the noise gate, else 0."""
    m, se = curve.means, curve.stderrs
    se = np.where(np.isfinite(se), se, 0.0)
    out = []
    for i in range(len(m) - 1):
        delta = m[i + 1] - m[i]
        gate = noise_multiplier * math.hypot(se[i], se[i + 1])
        # differences below float resolution are never significant
        gate = max(gate, 4.0 * np.finfo(float).eps * max(abs(m[i]), abs(m[i + 1])))
        out.append(0 if abs(delta) <= gate else (1 if delta > 0 else -1))
    return out


def detect_trend(curve: LossCurve, noise_multiplier: float = DEFAULT_NOISE_MULTIPLIER) -> TrendVerdict:
    if len(curve.points) < 4:
        raise DomainError("trend detection needs at least 4 points")
    if not noise_multiplier > 0:
        raise DomainError("noise_multiplier must be positive")
    signs = significant_signs(curve, noise_multiplier)
    runs: list[int] = []
    change_points: list[int] = []
    last_idx = None
    for i, s in enumerate(signs):
        if s == 0:
            continue
        if runs and s != runs[-1]:
            # turning point: the shared endpoint after the last difference of the previous run
            change_points.append(curve.points[last_idx + 1].n)
        if not runs or s != runs[-1]:
            runs.append(s)
        last_idx = i
    n_sig = sum(1 for s in signs if s != 0)
    note = f"{n_sig}/{len(signs)} differences beyond {noise_multiplier:g} x combined stderr"
    if not runs:
        label = "Flat"
    elif runs == [-1]:
        label = "Decreasing"
    elif runs == [1]:
        label = "Increasing"
    elif runs == [-1, 1, -1]:
        label = "DoubleDescentLike"
    else:
        label = "Inconclusive"
    return TrendVerdict(label, change_points, note)


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def curves_to_csv(curves: Sequence[LossCurve], seed: int) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for c in curves:
        for p in c.points:
            w.writerow([c.family, _fmt(c.epsilon), p.n, _fmt(p.mean_loss), _fmt(p.stderr),
                        p.replications, seed])
    return buf.getvalue()


def curves_to_json(curves: Sequence[LossCurve], config: Optional[dict] = None) -> str:
    payload = {"config": config or {}, "curves": [c.to_dict() for c in curves]}
    return json.dumps(payload, indent=2, allow_nan=True) + "\n"


def curves_from_json(text: str) -> list[LossCurve]:
    return [LossCurve.from_dict(d) for d in json.loads(text)["curves"]]


def write_text(text: str, destination) -> None:
    if destination is None or destination == "-":
        sys.stdout.write(text)
        sys.stdout.flush()
        return
    if hasattr(destination, "write"):
        destination.write(text)
        return
    path = Path(destination)
    try:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    except OSError as exc:
        raise EmissionError(f"cannot write results to {path}: {exc.strerror or exc}") from exc


def emit_results(curves: Sequence[LossCurve], fmt: str, destination, seed: int = 0,
                 config: Optional[dict] = None) -> None:
    fmt = fmt.lower()
    if fmt == "csv":
        text = curves_to_csv(curves, seed)
    elif fmt == "json":
        text = curves_to_json(curves, config)
    else:
        raise ConfigError(f"unknown output format {fmt!r}")
    write_text(text, destination)
