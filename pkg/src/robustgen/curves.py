"""Loss-curve containers shared by the Monte Carlo modules and the harness."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class CurvePoint:
    n: int
    mean_loss: float
    stderr: float
    replications: int


@dataclass
class LossCurve:
    epsilon: float
    points: list[CurvePoint] = field(default_factory=list)
    family: str = ""

    @property
    def n_values(self) -> list[int]:
        return [p.n for p in self.points]

    @property
    def means(self) -> np.ndarray:
        return np.array([p.mean_loss for p in self.points])

    @property
    def stderrs(self) -> np.ndarray:
        return np.array([p.stderr for p in self.points])

    def to_dict(self) -> dict:
        return {
            "family": self.family,
            "epsilon": self.epsilon,
            "points": [
                {"n": p.n, "mean_loss": p.mean_loss, "stderr": p.stderr,
                 "replications": p.replications}
                for p in self.points
            ],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "LossCurve":
        pts = [CurvePoint(int(p["n"]), float(p["mean_loss"]), float(p["stderr"]),
                          int(p["replications"])) for p in d["points"]]
        return cls(float(d["epsilon"]), pts, d.get("family", ""))


def summarize(losses: np.ndarray) -> tuple[float, float]:
    """Mean and standard error of per-replication losses (fixed summation order)."""
    losses = np.asarray(losses, dtype=float)
    r = losses.size
    if r == 0:
        raise ValueError("no replications")
    mean = float(np.mean(losses))
    if r < 2:
        return mean, math.nan
    if np.all(losses == losses[0]):
        return mean, 0.0
    return mean, float(np.std(losses, ddof=1) / math.sqrt(r))


def standardized_gap(mean: float, stderr: float, reference: float, rel_floor: float = 1e-12) -> float:
    """|mean - reference| in stderr units, ignoring differences at round-off level.

    A deterministic cell (stderr 0) scores 0 when it matches to the floor and inf otherwise.
    """
    gap = abs(mean - reference) - rel_floor * max(1.0, abs(reference))
    if gap <= 0:
        return 0.0
    return gap / stderr if stderr > 0 else math.inf
