"""One-dimensional Gaussian mixture under the 0-1 loss.

A threshold classifier w labels x positive when x > w. Against an interval
adversary of radius eps the robust empirical objective reduces to the plain
count sum_i y_i * 1[x'_i < w] on the neutralized points x'_i = x_i - y_i*eps,
which is piecewise constant between consecutive x'. The minimizing set is a
union of those pieces; a tiebreak policy picks one point from it.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Iterable, NamedTuple, Sequence

import numpy as np

from .curves import CurvePoint, LossCurve, summarize
from .errors import DomainError
from .numerics import RandomStream, as_generator, derive_substream, std_normal_cdf

LEFT_OPEN = "left-open right-closed"
SPECIAL_LEFT = "special-left"
SPECIAL_RIGHT = "special-right"


class LabeledSample1D(NamedTuple):
    x: float
    y: int


class TiebreakPolicy(enum.Enum):
    AGNOSTIC = "agnostic"
    OPTIMAL_HINDSIGHT = "optimal"

    @classmethod
    def parse(cls, value) -> "TiebreakPolicy":
        if isinstance(value, cls):
            return value
        key = str(value).strip().lower()
        aliases = {"agnostic": cls.AGNOSTIC, "optimal": cls.OPTIMAL_HINDSIGHT,
                   "optimalhindsight": cls.OPTIMAL_HINDSIGHT, "optimal_hindsight": cls.OPTIMAL_HINDSIGHT,
                   "hindsight": cls.OPTIMAL_HINDSIGHT}
        if key not in aliases:
            raise DomainError(f"unknown tiebreak policy {value!r}")
        return aliases[key]


@dataclass(frozen=True)
class Segment:
    lo: float
    hi: float
    closure: str

    @property
    def bounded(self) -> bool:
        return self.closure == LEFT_OPEN

    def contains(self, w: float) -> bool:
        if self.closure == SPECIAL_LEFT:
            return w <= self.hi
        if self.closure == SPECIAL_RIGHT:
            return w > self.lo
        return self.lo < w <= self.hi


@dataclass(frozen=True)
class MinimizerRegion:
    segments: tuple[Segment, ...]
    objective_value: float
    # offset used to represent "just above the largest point"
    eta: float = 0.0

    def contains(self, w: float) -> bool:
        return any(s.contains(w) for s in self.segments)


def neutralize(dataset: Sequence[LabeledSample1D], epsilon: float) -> list[LabeledSample1D]:
    return [LabeledSample1D(s.x - s.y * epsilon, s.y) for s in dataset]


def empirical_robust_objective(neutralized: Sequence[LabeledSample1D], w: float) -> float:
    return float(sum(s.y for s in neutralized if s.x < w))


def _region_from_arrays(xp: np.ndarray, y: np.ndarray) -> MinimizerRegion:
    n = xp.size
    if n == 0:
        raise DomainError("minimizer_region needs at least one point")
    order = np.argsort(xp, kind="stable")
    xs, ys = xp[order], y[order]
    # objective on piece k (k points strictly below w) is the k-th prefix sum
    obj = np.concatenate(([0], np.cumsum(ys)))
    # a split between equal x' values is not a real piece of the line
    real = np.ones(n + 1, dtype=bool)
    real[1:n] = xs[:-1] < xs[1:]
    best = obj[real].min()
    eta = 1e-9 * (1.0 + float(np.max(np.abs(xs))))
    segs = []
    for k in np.flatnonzero(real & (obj == best)):
        if k == 0:
            segs.append(Segment(-math.inf, float(xs[0]), SPECIAL_LEFT))
        elif k == n:
            segs.append(Segment(float(xs[-1]), math.inf, SPECIAL_RIGHT))
        else:
            segs.append(Segment(float(xs[k - 1]), float(xs[k]), LEFT_OPEN))
    return MinimizerRegion(tuple(segs), float(best), eta)


def minimizer_region(neutralized: Sequence[LabeledSample1D]) -> MinimizerRegion:
    xp = np.array([s.x for s in neutralized], dtype=float)
    y = np.array([s.y for s in neutralized], dtype=int)
    return _region_from_arrays(xp, y)


def _representative(seg: Segment, eta: float) -> float:
    if seg.closure == SPECIAL_LEFT:
        return seg.hi
    if seg.closure == SPECIAL_RIGHT:
        return seg.lo + eta
    return seg.hi


def _closest_to_zero(seg: Segment) -> float:
    lo, hi = seg.lo, seg.hi
    if lo <= 0.0 <= hi:
        return 0.0
    return lo if abs(lo) < abs(hi) else hi


def tiebreak(region: MinimizerRegion, policy, rng) -> float:
    policy = TiebreakPolicy.parse(policy)
    if not region.segments:
        raise DomainError("empty minimizer region")
    if policy is TiebreakPolicy.OPTIMAL_HINDSIGHT:
        return min((_closest_to_zero(s) for s in region.segments), key=abs)

    gen = as_generator(rng)
    bounded = [s for s in region.segments if s.bounded]
    if bounded:
        seg = bounded[0]
        if len(bounded) > 1:
            # length-weighted choice among tied pieces
            cum = np.cumsum([s.hi - s.lo for s in bounded])
            k = int(np.searchsorted(cum, gen.random() * cum[-1], side="right"))
            seg = bounded[min(k, len(bounded) - 1)]
        # uniform on (lo, hi]
        return seg.hi - gen.random() * (seg.hi - seg.lo)
    points = [_representative(s, region.eta) for s in region.segments]
    return points[int(gen.integers(len(points)))] if len(points) > 1 else points[0]


def zero_one_test_loss(w: float, mu: float, sigma: float) -> float:
    if not sigma > 0:
        raise DomainError("sigma must be positive")
    if math.isinf(w):
        return 0.5
    return 0.5 + 0.5 * (std_normal_cdf((w - mu) / sigma) - std_normal_cdf((w + mu) / sigma))


def _replicate_once(gen: np.random.Generator, mu: float, sigma: float, epsilon: float,
                    policy: TiebreakPolicy, n: int) -> float:
    y = np.where(gen.random(n) < 0.5, -1, 1)
    x = y * mu + sigma * gen.standard_normal(n)
    region = _region_from_arrays(x - y * epsilon, y)
    w = tiebreak(region, policy, gen)
    return zero_one_test_loss(w, mu, sigma)


def zero_one_mc_losses(mu: float, sigma: float, epsilon: float, policy, n: int,
                       streams: Iterable[RandomStream]) -> np.ndarray:
    policy = TiebreakPolicy.parse(policy)
    return np.array([_replicate_once(s.generator(), mu, sigma, epsilon, policy, int(n)) for s in streams])


def mc_zero_one_curve(mu: float, sigma: float, epsilon: float, policy, n_values: Sequence[int],
                      replications: int, seed: int) -> LossCurve:
    if replications < 2:
        raise DomainError("need at least 2 replications")
    curve = LossCurve(float(epsilon), family="GaussZeroOne")
    for ni, n in enumerate(n_values):
        streams = (derive_substream(seed, (ni, r)) for r in range(replications))
        mean, se = summarize(zero_one_mc_losses(mu, sigma, epsilon, policy, n, streams))
        curve.points.append(CurvePoint(int(n), mean, se, replications))
    return curve
