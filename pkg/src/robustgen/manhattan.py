"""The Manhattan model: 2N support points (j, +-mu) and step-function boundaries.

A point (s, t) is labelled +1 when t > f(s), -1 when t < f(s), and by a fair
coin on the boundary. Robust training against an open l-infinity ball of
radius eps < 1/2 decouples into one level alpha_j per column on (j-eps, j+eps).
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Iterable, NamedTuple, Sequence

import numpy as np

from .curves import summarize
from .errors import DomainError
from .numerics import RandomStream, as_generator, derive_substream


@dataclass(frozen=True)
class ManhattanSpec:
    columns: int
    mu: float

    def __post_init__(self):
        if int(self.columns) != self.columns or self.columns < 1:
            raise DomainError("columns must be a positive integer")
        if not 0.0 < self.mu < 0.25:
            raise DomainError("mu must lie in (0, 1/4)")


class ManhattanSample(NamedTuple):
    s: int
    t: float
    y: int


@dataclass(frozen=True)
class StepClassifier:
    """f(s) = alphas[j-1] on (j-eps, j+eps), zero elsewhere."""
    alphas: tuple[float, ...]
    epsilon: float

    @property
    def levels(self) -> list[tuple[int, float]]:
        return [(j + 1, a) for j, a in enumerate(self.alphas)]

    def __call__(self, s: float) -> float:
        j = int(round(s))
        if 1 <= j <= len(self.alphas) and abs(s - j) < self.epsilon:
            return self.alphas[j - 1]
        return 0.0


def sample_manhattan(spec: ManhattanSpec, n: int, rng) -> list[ManhattanSample]:
    if n < 0:
        raise DomainError("n must be nonnegative")
    gen = as_generator(rng)
    cols, ys = _draw(gen, spec.columns, n)
    return [ManhattanSample(int(c), float(y) * spec.mu, int(y)) for c, y in zip(cols, ys)]


def _draw(gen: np.random.Generator, columns: int, n: int) -> tuple[np.ndarray, np.ndarray]:
    # one draw over the 2N support points: index // 2 is the column, parity the label
    idx = gen.integers(0, 2 * columns, size=n)
    return idx // 2 + 1, np.where(idx % 2 == 0, 1, -1)


def _check_eps(epsilon: float) -> None:
    if not 0.0 < epsilon < 0.5:
        raise DomainError("epsilon must lie in (0, 1/2) so the column intervals stay disjoint")


def fit_levels(pos: np.ndarray, neg: np.ndarray, mu: float, epsilon: float) -> np.ndarray:
    """Per-column robust levels from positive/negative counts."""
    pos = np.asarray(pos)
    neg = np.asarray(neg)
    up = mu - epsilon
    alpha = np.zeros(pos.shape, dtype=float)
    only_pos = (pos > 0) & (neg == 0)
    only_neg = (neg > 0) & (pos == 0)
    alpha[only_pos] = min(0.0, up)
    alpha[only_neg] = max(0.0, -up)
    if up < 0:
        both = (pos > 0) & (neg > 0)
        # ties go to the positive class (same standard loss either way)
        alpha[both & (pos >= neg)] = up
        alpha[both & (pos < neg)] = -up
    return alpha


def fit_manhattan_robust(training: Sequence[ManhattanSample], spec: ManhattanSpec, epsilon: float) -> StepClassifier:
    _check_eps(epsilon)
    pos = np.zeros(spec.columns, dtype=int)
    neg = np.zeros(spec.columns, dtype=int)
    for smp in training:
        if smp.y > 0:
            pos[smp.s - 1] += 1
        else:
            neg[smp.s - 1] += 1
    alphas = fit_levels(pos, neg, spec.mu, epsilon)
    return StepClassifier(tuple(float(a) for a in alphas), float(epsilon))


def classify(clf: StepClassifier, point: tuple[float, float], rng) -> int:
    s, t = point
    level = clf(s)
    if t > level:
        return 1
    if t < level:
        return -1
    return 1 if as_generator(rng).random() < 0.5 else -1


def _heaviside(z: np.ndarray) -> np.ndarray:
    return np.where(z > 0, 1.0, np.where(z == 0, 0.5, 0.0))


def support_loss(alphas: np.ndarray, mu: float) -> float:
    """Expected 0-1 loss over the uniform 2N-point support (boundary counts 1/2)."""
    alphas = np.asarray(alphas, dtype=float)
    per_col = _heaviside(alphas - mu) + _heaviside(-mu - alphas)
    return float(per_col.sum() / (2 * alphas.size))


def l1_norm(clf: StepClassifier) -> float:
    return float(sum(abs(a) for a in clf.alphas) * 2.0 * clf.epsilon)


def occupied_column_constant(mu: float, epsilon: float) -> float:
    """Per-occupied-column loss constant, by exhaustive evaluation at N = 1.

    Every nonempty single-column training set is a multiset of +/- labels;
    fitting and scoring over the two support points gives the same value for
    each of them when 2*mu < eps.
    """
    spec = ManhattanSpec(1, mu)
    values = set()
    for n in range(1, 5):
        for labels in itertools.product((1, -1), repeat=n):
            train = [ManhattanSample(1, y * mu, y) for y in labels]
            clf = fit_manhattan_robust(train, spec, epsilon)
            values.add(support_loss(np.array(clf.alphas), mu))
    if len(values) != 1:
        raise DomainError(f"occupied-column loss is not constant: {sorted(values)}")
    return values.pop()


def _check_exact_eps(spec: ManhattanSpec, epsilon: float) -> None:
    if not 0.0 < epsilon <= 0.5:
        raise DomainError("epsilon must lie in (0, 1/2]")
    if epsilon == 2.0 * spec.mu:
        raise DomainError("eps = 2*mu is the excluded boundary case")


def exact_manhattan_loss(spec: ManhattanSpec, epsilon: float, n: int) -> float:
    _check_exact_eps(spec, epsilon)
    if n < 0:
        raise DomainError("n must be nonnegative")
    if epsilon < 2.0 * spec.mu:
        return 0.0
    # fit at eps = 1/2 would overlap intervals; the per-column constant is eps-independent above 2*mu
    c = occupied_column_constant(spec.mu, min(epsilon, math.nextafter(0.5, 0.0)))
    empty = (1.0 - 1.0 / spec.columns) ** n
    return c * (1.0 - empty)


def expected_empty_columns(columns: int, n: int) -> float:
    return columns * (1.0 - 1.0 / columns) ** n


def manhattan_mc_losses(spec: ManhattanSpec, epsilon: float, n: int,
                        streams: Iterable[RandomStream]) -> np.ndarray:
    _check_eps(epsilon)
    out = []
    for stream in streams:
        gen = stream.generator()
        cols, ys = _draw(gen, spec.columns, int(n))
        pos = np.bincount(cols[ys > 0] - 1, minlength=spec.columns)
        neg = np.bincount(cols[ys < 0] - 1, minlength=spec.columns)
        out.append(support_loss(fit_levels(pos, neg, spec.mu, epsilon), spec.mu))
    return np.array(out)


def mc_manhattan_loss(spec: ManhattanSpec, epsilon: float, n: int, replications: int,
                      seed: int) -> tuple[float, float]:
    if replications < 2:
        raise DomainError("need at least 2 replications")
    streams = (derive_substream(seed, r) for r in range(replications))
    return summarize(manhattan_mc_losses(spec, epsilon, n, streams))


# brute-force oracle -----------------------------------------------------------

def candidate_levels(mu: float, epsilon: float) -> tuple[float, ...]:
    up = mu - epsilon
    return tuple(sorted({0.0, up, -up, mu, -mu, mu + epsilon, -(mu + epsilon)}))


def adversarial_count(alphas: Sequence[float], training: Sequence[ManhattanSample],
                      mu: float, epsilon: float) -> int:
    """Worst-case training 0-1 count of a per-column step classifier.

    The open ball keeps s~ inside (j-eps, j+eps), so f(s~) = alpha_j; the
    adversary moves t over the open interval (t-eps, t+eps). A positive point
    can be pushed to the wrong side iff alpha_j > mu - eps, a negative one iff
    alpha_j < -(mu - eps).
    """
    up = mu - epsilon
    count = 0
    for smp in training:
        a = alphas[smp.s - 1]
        if smp.y > 0 and a > up:
            count += 1
        elif smp.y < 0 and a < -up:
            count += 1
    return count


def brute_force_fit(training: Sequence[ManhattanSample], spec: ManhattanSpec, epsilon: float):
    """Minimal adversarial count, then minimal l1 norm, over the discretized family."""
    levels = candidate_levels(spec.mu, epsilon)
    best = None
    for combo in itertools.product(levels, repeat=spec.columns):
        key = (adversarial_count(combo, training, spec.mu, epsilon),
               sum(abs(a) for a in combo) * 2.0 * epsilon)
        if best is None or key < best:
            best = key
    return best
