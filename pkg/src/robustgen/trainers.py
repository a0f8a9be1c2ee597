"""Adversarially trained soft-margin SVM (2-D) and 1-D least squares.

Both inner maximizations over the l-infinity ball have closed forms because
the losses are monotone in a linear function of x: the worst case sits at a
corner of the ball.
"""
from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

import numpy as np

from .errors import DivergenceError, DomainError
from .numerics import RandomStream, as_generator, std_normal_cdf, std_normal_pdf


class BoundaryWarning(UserWarning):
    """Minimizer landed on the edge of the search bracket."""


@dataclass(frozen=True)
class SvmModel:
    w: tuple[float, float]
    b: float


@dataclass(frozen=True)
class SvmConfig:
    lam: float = 1e-3
    epsilon: float = 0.0
    step_size: float = 0.05
    iterations: int = 5000

    def __post_init__(self):
        if not self.lam > 0 or not self.step_size > 0 or self.iterations < 1:
            raise DomainError("lam, step_size and iterations must be positive")
        if not self.epsilon >= 0:
            raise DomainError("epsilon must be nonnegative")


class XDist(enum.Enum):
    STANDARD_GAUSSIAN = "gaussian"
    SHIFTED_POISSON = "poisson"

    @classmethod
    def parse(cls, value) -> "XDist":
        if isinstance(value, cls):
            return value
        key = str(value).strip().lower()
        for member in cls:
            if key in (member.value, member.name.lower(), member.name.lower().replace("_", "")):
                return member
        raise DomainError(f"unknown x distribution {value!r}")


POISSON_RATE = 5.0
POISSON_SHIFT = 1.0


@dataclass(frozen=True)
class LinRegConfig:
    epsilon: float = 0.0
    w_star: float = 1.0
    x_dist: XDist = XDist.STANDARD_GAUSSIAN
    search_bracket: Optional[tuple[float, float]] = None
    tol: float = 1e-9

    def __post_init__(self):
        object.__setattr__(self, "x_dist", XDist.parse(self.x_dist))
        if self.search_bracket is None:
            half = 10.0 * (1.0 + abs(self.w_star))
            object.__setattr__(self, "search_bracket", (-half, half))
        lo, hi = self.search_bracket
        if not lo < hi:
            raise DomainError("search bracket needs lo < hi")
        if not self.tol > 0 or not self.epsilon >= 0:
            raise DomainError("tol must be positive and epsilon nonnegative")


# --- SVM --------------------------------------------------------------------

def robust_hinge_loss(model: SvmModel, sample, epsilon: float) -> float:
    x, y = sample
    w = np.asarray(model.w, dtype=float)
    margin = y * (float(np.dot(w, x)) - model.b)
    return max(0.0, 1.0 - margin + epsilon * float(np.abs(w).sum()))


def _as_arrays(dataset) -> tuple[np.ndarray, np.ndarray]:
    if isinstance(dataset, tuple) and len(dataset) == 2 and isinstance(dataset[0], np.ndarray):
        X, y = dataset
    else:
        X = np.array([np.asarray(x, dtype=float) for x, _ in dataset])
        y = np.array([float(lbl) for _, lbl in dataset])
    return np.asarray(X, dtype=float), np.asarray(y, dtype=float)


def svm_objective(w, b, X, y, config: SvmConfig) -> float:
    w = np.asarray(w, dtype=float)
    h = 1.0 - y * (X @ w - b) + config.epsilon * np.abs(w).sum()
    return float(np.maximum(h, 0.0).mean() + 0.5 * config.lam * np.dot(w, w))


def train_svm_batch(X: np.ndarray, Y: np.ndarray, config: SvmConfig):
    """Subgradient descent on a stack of equally sized datasets.

    X has shape (R, n, 2), Y shape (R, n). Each dataset runs its own
    independent descent from w = 0, b = 0 with step size/sqrt(k); the iterate
    with the lowest objective so far is returned, so the result never gets
    worse with more iterations. Returns (w, b, objective) arrays.
    """
    X = np.asarray(X, dtype=float)
    Y = np.asarray(Y, dtype=float)
    R = X.shape[0]
    eps, lam = config.epsilon, config.lam
    w = np.zeros((R, 2))
    b = np.zeros(R)
    best_obj = np.full(R, np.inf)
    best_w = w.copy()
    best_b = b.copy()
    # overflow is caught below as a non-finite objective
    with np.errstate(over="ignore", invalid="ignore"):
        for k in range(config.iterations + 1):
            score = X[:, :, 0] * w[:, 0:1] + X[:, :, 1] * w[:, 1:2] - b[:, None]
            h = 1.0 - Y * score + eps * np.abs(w).sum(axis=1)[:, None]
            obj = np.maximum(h, 0.0).mean(axis=1) + 0.5 * lam * (w * w).sum(axis=1)
            if not np.all(np.isfinite(obj)):
                bad = int(np.flatnonzero(~np.isfinite(obj))[0])
                raise DivergenceError(f"non-finite SVM objective at iteration {k} (dataset {bad})")
            better = obj < best_obj
            best_obj = np.where(better, obj, best_obj)
            best_w[better] = w[better]
            best_b[better] = b[better]
            if k == config.iterations:
                break
            active = (h > 0).astype(float)  # subgradient 0 at the kink
            ay = active * Y
            gw = np.stack([-(ay * X[:, :, 0]).mean(axis=1), -(ay * X[:, :, 1]).mean(axis=1)], axis=1)
            gw += eps * active.mean(axis=1)[:, None] * np.sign(w) + lam * w
            gb = ay.mean(axis=1)
            lr = config.step_size / math.sqrt(k + 1)
            w = w - lr * gw
            b = b - lr * gb
    return best_w, best_b, best_obj


def train_svm_robust(dataset, config: SvmConfig) -> SvmModel:
    X, y = _as_arrays(dataset)
    if X.shape[0] == 0:
        raise DomainError("empty dataset")
    w, b, _ = train_svm_batch(X[None], y[None], config)
    return SvmModel((float(w[0, 0]), float(w[0, 1])), float(b[0]))


def svm_standard_test_loss(model: SvmModel, mu) -> float:
    """Closed-form clean hinge loss under x | y ~ N(y*mu, I)."""
    w = np.asarray(model.w, dtype=float)
    s = float(np.linalg.norm(w))
    wm = float(np.dot(w, np.asarray(mu, dtype=float)))
    total = 0.0
    for y in (1.0, -1.0):
        m = wm - y * model.b
        if s > 0:
            z = (1.0 - m) / s
            total += (1.0 - m) * std_normal_cdf(z) + s * std_normal_pdf(z)
        else:
            total += max(0.0, 1.0 - m)
    return 0.5 * total


def sample_gaussian_mixture_2d(mu, n: int, rng) -> tuple[np.ndarray, np.ndarray]:
    if n < 1:
        raise DomainError("n must be at least 1")
    gen = as_generator(rng)
    mu = np.asarray(mu, dtype=float)
    y = np.where(gen.random(n) < 0.5, -1.0, 1.0)
    X = y[:, None] * mu + gen.standard_normal((n, mu.size))
    return X, y


def svm_mc_losses(mu, config: SvmConfig, n: int, streams: Iterable[RandomStream]) -> np.ndarray:
    data = [sample_gaussian_mixture_2d(mu, n, s) for s in streams]
    X = np.stack([d[0] for d in data])
    Y = np.stack([d[1] for d in data])
    w, b, _ = train_svm_batch(X, Y, config)
    return np.array([svm_standard_test_loss(SvmModel(tuple(wi), float(bi)), mu) for wi, bi in zip(w, b)])


# --- linear regression -------------------------------------------------------

def robust_squared_loss(w: float, sample, epsilon: float) -> float:
    x, y = sample
    return (abs(y - w * x) + epsilon * abs(w)) ** 2


def linreg_objective(w: float, x: np.ndarray, y: np.ndarray, epsilon: float) -> float:
    r = np.abs(y - w * x) + epsilon * abs(w)
    return float(np.dot(r, r))


_INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


def golden_section(fn, lo: float, hi: float, tol: float) -> tuple[float, float, float]:
    """Golden-section search; returns (argmin estimate, final lo, final hi)."""
    a, b = lo, hi
    c = b - _INV_PHI * (b - a)
    d = a + _INV_PHI * (b - a)
    fc, fd = fn(c), fn(d)
    while b - a > tol:
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - _INV_PHI * (b - a)
            fc = fn(c)
        else:
            a, c, fc = c, d, fd
            d = a + _INV_PHI * (b - a)
            fd = fn(d)
    return 0.5 * (a + b), a, b


def _right_slope(w: float, x: np.ndarray, y: np.ndarray, epsilon: float) -> float:
    """Right derivative of the robust objective; nondecreasing in w by convexity."""
    e = y - w * x
    r = np.abs(e) + epsilon * abs(w)
    dr = np.where(e > 0, -x, np.where(e < 0, x, np.abs(x))) + (epsilon if w >= 0 else -epsilon)
    return float(2.0 * np.dot(r, dr))


def train_linreg_robust(dataset, config: LinRegConfig) -> float:
    """Minimize sum_i (|y_i - w x_i| + eps|w|)^2 over scalar w.

    Golden-section search finds the neighbourhood; objective values are flat
    to rounding there, so the final digits come from bisecting the sign of the
    right derivative. A kink (w = 0 or y_i/x_i) in the last interval is
    returned exactly.
    """
    x, y = _as_xy(dataset)
    if x.size == 0:
        raise DomainError("empty dataset")
    eps = config.epsilon
    lo, hi = config.search_bracket
    w, a, b = golden_section(lambda v: linreg_objective(v, x, y, eps), lo, hi, config.tol)
    slope = lambda v: _right_slope(v, x, y, eps)
    pad = max(config.tol, 1e-6 * (1.0 + abs(w)))
    left, right = max(lo, a - pad), min(hi, b + pad)
    if slope(left) >= 0 or slope(right) < 0:
        left, right = lo, hi
    if slope(left) < 0 <= slope(right):
        # invariant: slope(left) < 0 <= slope(right)
        for _ in range(200):
            mid = 0.5 * (left + right)
            if not left < mid < right:
                break
            if slope(mid) < 0:
                left = mid
            else:
                right = mid
        w = right
        with np.errstate(divide="ignore", invalid="ignore"):
            kinks = np.concatenate(([0.0], y[x != 0] / x[x != 0]))
        inside = kinks[(kinks > left) & (kinks <= right)]
        if inside.size:
            w = float(inside.min())
    else:
        w = lo if slope(lo) >= 0 else hi
    if w - lo <= config.tol or hi - w <= config.tol:
        warnings.warn(f"linreg minimizer {w} at the search bracket edge [{lo}, {hi}]", BoundaryWarning)
    return float(w)


def _as_xy(dataset) -> tuple[np.ndarray, np.ndarray]:
    if isinstance(dataset, tuple) and len(dataset) == 2 and isinstance(dataset[0], np.ndarray):
        return np.asarray(dataset[0], dtype=float), np.asarray(dataset[1], dtype=float)
    arr = np.asarray(dataset, dtype=float).reshape(-1, 2)
    return arr[:, 0], arr[:, 1]


def scaled_test_loss(w: float, w_star: float) -> float:
    return (w - w_star) ** 2


def sample_linreg(config: LinRegConfig, n: int, rng) -> tuple[np.ndarray, np.ndarray]:
    if n < 1:
        raise DomainError("n must be at least 1")
    gen = as_generator(rng)
    if config.x_dist is XDist.STANDARD_GAUSSIAN:
        x = gen.standard_normal(n)
    else:
        x = gen.poisson(POISSON_RATE, n) + POISSON_SHIFT
    y = config.w_star * x + gen.standard_normal(n)
    return x.astype(float), y


def linreg_mc_losses(config: LinRegConfig, n: int, streams: Iterable[RandomStream]) -> np.ndarray:
    out = []
    for s in streams:
        w = train_linreg_robust(sample_linreg(config, n, s), config)
        out.append(scaled_test_loss(w, config.w_star))
    return np.array(out)
