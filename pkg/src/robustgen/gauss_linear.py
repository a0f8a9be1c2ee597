"""Gaussian mixture under the linear loss: exact loss, its n-derivative, regimes.

Data model: y uniform on {+1, -1}, x | y ~ N(y*mu, diag(sigma^2)) with mu >= 0.
The robust classifier under an l-infinity adversary of radius epsilon and the
box constraint |w_j| <= W has the closed form W*sign(u - eps*sign(u)) where u is
the label-weighted sample mean. Everything here is expressed in the reduced
coordinates v = sqrt(n)*mu/(sqrt(2)*sigma), eps' = eps/mu and t = exp(-v^2).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .curves import summarize
from .errors import DomainError
from .numerics import (
    SCAN_MARGIN,
    Bracket,
    RandomStream,
    derive_substream,
    erf,
    find_root,
    scan_grid_sign_changes,
    signed_log_sum,
)

# sign intervals narrower than this (in t) are treated as bisection noise
MIN_SIGN_INTERVAL = 1e-6
PROFILE_GRID_POINTS = 4096
DERIVATIVE_SCAN_POINTS = 4096
DERIVATIVE_SCAN_N_MIN = 1e-6


@dataclass(frozen=True)
class GaussianMixtureSpec:
    mu: tuple[float, ...]
    sigma: tuple[float, ...]

    def __post_init__(self):
        mu = tuple(float(m) for m in np.atleast_1d(self.mu))
        sigma = tuple(float(s) for s in np.atleast_1d(self.sigma))
        if len(sigma) == 1 and len(mu) > 1:
            sigma = sigma * len(mu)
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "sigma", sigma)
        if len(mu) == 0 or len(mu) != len(sigma):
            raise DomainError("mu and sigma must be nonempty and of equal length")
        if any(not math.isfinite(m) or m < 0 for m in mu):
            raise DomainError("mu must be finite and nonnegative")
        if any(not math.isfinite(s) or s <= 0 for s in sigma):
            raise DomainError("sigma must be finite and positive")

    @property
    def d(self) -> int:
        return len(self.mu)

    @property
    def common_ratio(self) -> bool:
        r = [m / s for m, s in zip(self.mu, self.sigma)]
        return all(math.isclose(x, r[0], rel_tol=1e-12) for x in r)


@dataclass(frozen=True)
class AdversarySetting:
    epsilon: float
    weight_bound: float = 1.0

    def __post_init__(self):
        if not (math.isfinite(self.epsilon) and self.epsilon >= 0):
            raise DomainError("epsilon must be finite and nonnegative")
        if not (math.isfinite(self.weight_bound) and self.weight_bound > 0):
            raise DomainError("weight_bound must be positive")


@dataclass(frozen=True)
class ReducedCoords:
    v: float
    eps_prime: float
    t: float


def _eps_prime(mu_j: float, epsilon: float) -> float:
    if mu_j == 0:
        if epsilon > 0:
            raise DomainError("eps' = eps/mu is undefined for a zero mean coordinate")
        return 0.0
    return epsilon / mu_j


def reduced_coords(spec: GaussianMixtureSpec, setting: AdversarySetting, n: float) -> list[ReducedCoords]:
    if not n > 0:
        raise DomainError("n must be positive")
    out = []
    for m, s in zip(spec.mu, spec.sigma):
        v = math.sqrt(n) * m / (math.sqrt(2.0) * s)
        out.append(ReducedCoords(v, _eps_prime(m, setting.epsilon), math.exp(-v * v)))
    return out


def robust_weights(u, setting: AdversarySetting) -> np.ndarray:
    """W * sign(u - eps*sign(u)) coordinatewise, with sign(0) = 0."""
    u = np.asarray(u, dtype=float)
    return setting.weight_bound * np.sign(u - setting.epsilon * np.sign(u))


def loss_kernel_L(v: float, eps_prime: float) -> float:
    return erf(v) + erf(v * (eps_prime - 1.0)) - erf(v * (eps_prime + 1.0))


def exact_generalization_loss(spec: GaussianMixtureSpec, setting: AdversarySetting, n: float) -> float:
    total = 0.0
    for m, rc in zip(spec.mu, reduced_coords(spec, setting, n)):
        if m == 0:
            continue
        total += m * loss_kernel_L(rc.v, rc.eps_prime)
    return setting.weight_bound * total


def _check_t(t: float) -> None:
    if not 0.0 < t < 1.0:
        raise DomainError(f"t must lie in (0, 1), got {t}")


def f_kernel(t: float, eps_prime: float) -> float:
    _check_t(t)
    a, b = 1.0 + eps_prime, 1.0 - eps_prime
    return t - a * t ** (a * a) - b * t ** (b * b)


def f_prime(t: float, eps_prime: float) -> float:
    _check_t(t)
    a, b = 1.0 + eps_prime, 1.0 - eps_prime
    return 1.0 - a ** 3 * t ** (a * a - 1.0) - b ** 3 * t ** (b * b - 1.0)


def _f_terms(log_t: float, eps_prime: float, log_weight: float = 0.0) -> list[tuple[float, float]]:
    # f(t) as signed exponentials, so the sign survives when t underflows
    a, b = 1.0 + eps_prime, 1.0 - eps_prime
    terms = [(1.0, log_weight + log_t), (-1.0, log_weight + math.log(a) + a * a * log_t)]
    if b != 0.0:
        terms.append((-math.copysign(1.0, b), log_weight + math.log(abs(b)) + b * b * log_t))
    return terms


def critical_point_t0(eps_prime: float) -> float:
    """Unique maximiser in t of f_prime for 0 < eps' < 1."""
    if not 0.0 < eps_prime < 1.0:
        raise DomainError("critical_point_t0 needs 0 < eps' < 1")
    e = eps_prime
    log_a = 3.0 * (math.log1p(e) - math.log1p(-e)) + math.log((2.0 + e) / (2.0 - e))
    return math.exp(-log_a / (4.0 * e))


def _profile_grid() -> np.ndarray:
    lin = np.linspace(SCAN_MARGIN, 1.0 - SCAN_MARGIN, PROFILE_GRID_POINTS)
    # extra resolution near 0, where tau_1 -> 0 as eps' -> 1
    geo = np.geomspace(1e-12, 1.0 / PROFILE_GRID_POINTS, 256)
    return np.union1d(lin, geo)


def _merge_short(intervals: list[tuple[tuple[float, float], int]], min_len: float):
    changed = True
    while changed and len(intervals) > 1:
        changed = False
        for i, ((lo, hi), _) in enumerate(intervals):
            if hi - lo < min_len and 0 < i < len(intervals) - 1:
                (plo, _), ps = intervals[i - 1]
                (_, nhi), ns = intervals[i + 1]
                if ps == ns:
                    intervals[i - 1:i + 2] = [((plo, nhi), ps)]
                    changed = True
                    break
    return intervals


def f_sign_profile(eps_prime: float, tol: float = 1e-14) -> list[tuple[tuple[float, float], int]]:
    """Maximal sub-intervals of (0, 1) on which f(., eps') has constant strict sign."""
    if not eps_prime >= 0:
        raise DomainError("eps' must be nonnegative")
    fn = lambda t: f_kernel(t, eps_prime)
    grid = _profile_grid()
    roots = [find_root(fn, br, tol) for br in scan_grid_sign_changes(fn, grid)]
    edges = [0.0] + roots + [1.0]
    first_sign = 1 if fn(float(grid[0])) > 0 else -1
    intervals = []
    sign = first_sign
    for lo, hi in zip(edges[:-1], edges[1:]):
        intervals.append(((lo, hi), sign))
        sign = -sign
    return _merge_short(intervals, MIN_SIGN_INTERVAL)


def f_crossovers(eps_prime: float) -> list[float]:
    prof = f_sign_profile(eps_prime)
    return [hi for (_, hi), _ in prof[:-1]]


def t_to_n(t: float, mu: float, sigma: float) -> float:
    """Invert t = exp(-n mu^2 / (2 sigma^2))."""
    return 2.0 * math.log(1.0 / t) * sigma * sigma / (mu * mu)


def _derivative_scaled(spec: GaussianMixtureSpec, setting: AdversarySetting, n: float) -> tuple[float, float]:
    terms: list[tuple[float, float]] = []
    for m, s in zip(spec.mu, spec.sigma):
        if m == 0:
            continue
        eps_p = _eps_prime(m, setting.epsilon)
        log_t = -n * m * m / (2.0 * s * s)
        terms.extend(_f_terms(log_t, eps_p, math.log(m * m / s)))
    scaled, log_scale = signed_log_sum(terms)
    return scaled, log_scale


def loss_derivative_in_n(spec: GaussianMixtureSpec, setting: AdversarySetting, n: float) -> float:
    """dL_n/dn = W/sqrt(2 n pi) * sum_j mu_j^2/sigma_j * f(t_j, eps'_j)."""
    if not n > 0:
        raise DomainError("n must be positive")
    scaled, log_scale = _derivative_scaled(spec, setting, n)
    if scaled == 0.0:
        return 0.0
    return setting.weight_bound / math.sqrt(2.0 * n * math.pi) * scaled * math.exp(log_scale)


def loss_derivative_sign(spec: GaussianMixtureSpec, setting: AdversarySetting, n: float) -> int:
    scaled, _ = _derivative_scaled(spec, setting, n)
    return (scaled > 0) - (scaled < 0)


def derivative_sign_pattern(spec: GaussianMixtureSpec, setting: AdversarySetting, n_max: float,
                            grid_points: int = DERIVATIVE_SCAN_POINTS,
                            n_min: float = DERIVATIVE_SCAN_N_MIN) -> list[tuple[tuple[float, float], int]]:
    """Partition (0, n_max] by the sign of dL_n/dn.

    The scan runs on a log-n grid; sign changes are refined by bisection in
    log n, so thresholds carry ~1e-14 relative error.
    """
    if not n_max > 0:
        raise DomainError("n_max must be positive")
    n_min = min(n_min, n_max / 2.0)
    g = lambda s: _derivative_scaled(spec, setting, math.exp(s))[0]
    grid = np.linspace(math.log(n_min), math.log(n_max), grid_points)
    roots = [math.exp(find_root(g, br, tol=1e-14)) for br in scan_grid_sign_changes(g, grid)]
    first = 0
    for s in grid:
        v = g(float(s))
        if v != 0:
            first = 1 if v > 0 else -1
            break
    edges = [0.0] + roots + [float(n_max)]
    pattern, sign = [], first
    for lo, hi in zip(edges[:-1], edges[1:]):
        pattern.append(((lo, hi), sign))
        sign = -sign
    return pattern


@dataclass
class RegimeReport:
    label: str
    thresholds: list[tuple[str, float]] = field(default_factory=list)
    sign_pattern: list[tuple[tuple[float, float], int]] = field(default_factory=list)
    eps_prime_range: tuple[float, float] = (0.0, 0.0)

    def threshold(self, name: str) -> float:
        for k, v in self.thresholds:
            if k == name:
                return v
        raise KeyError(name)

    def to_dict(self) -> dict:
        return {
            "label": self.label,
            "thresholds": [{"name": k, "n_value": v} for k, v in self.thresholds],
            "sign_pattern": [{"n_lo": lo, "n_hi": hi, "sign": "+" if s > 0 else "-"}
                             for (lo, hi), s in self.sign_pattern],
            "eps_prime_range": list(self.eps_prime_range),
        }


def classify_regime(spec: GaussianMixtureSpec, setting: AdversarySetting, n_max: float) -> RegimeReport:
    if not n_max > 0:
        raise DomainError("n_max must be positive")
    if any(m == 0 for m in spec.mu):
        raise DomainError("regime classification needs mu(j) > 0 for all j")
    eps_primes = [setting.epsilon / m for m in spec.mu]
    eps_range = (min(eps_primes), max(eps_primes))
    pattern = derivative_sign_pattern(spec, setting, n_max)
    signs = [s for _, s in pattern]
    report = RegimeReport("Indeterminate", [], pattern, eps_range)

    if all(s < 0 for s in signs):
        report.label = "Weak"
    elif setting.epsilon >= max(spec.mu):
        if signs[-1] > 0:
            report.label = "Strong"
            report.thresholds = [("N5", pattern[-1][0][0])]
    elif signs == [-1, 1, -1] and spec.common_ratio:
        report.label = "Medium"
        report.thresholds = [("N1", pattern[1][0][0]), ("N2", pattern[2][0][0])]
    return report


def _interior_peak(eps_prime: float) -> tuple[float, float] | None:
    """Location and value of the interior local maximum of f, if f' ever turns positive."""
    t0 = critical_point_t0(eps_prime)
    if f_prime(t0, eps_prime) <= 0:
        return None
    t2 = find_root(lambda t: f_prime(t, eps_prime), Bracket(t0, 1.0 - SCAN_MARGIN), tol=1e-15)
    return t2, f_kernel(t2, eps_prime)


def sup_f_is_positive(eps_prime: float) -> bool:
    if eps_prime >= 1.0:
        return True
    peak = _interior_peak(eps_prime)
    return peak is not None and peak[1] > 0


def critical_epsilon_prime(tol: float = 1e-6, lo: float = 0.05, hi: float = 0.99) -> tuple[float, float]:
    """Bracket [lo, hi] (width <= tol) around the eps' where sup_t f turns positive."""
    if sup_f_is_positive(lo) or not sup_f_is_positive(hi):
        raise DomainError("initial eps' bracket does not straddle the transition")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if sup_f_is_positive(mid):
            hi = mid
        else:
            lo = mid
    return lo, hi


def _coords_arrays(spec: GaussianMixtureSpec):
    return np.asarray(spec.mu), np.asarray(spec.sigma)


def gauss_linear_mc_losses(spec: GaussianMixtureSpec, setting: AdversarySetting, n: int,
                           streams: Iterable[RandomStream], slow: bool = False) -> np.ndarray:
    """Per-replication test loss -<w_rob, mu>, one stream per replication."""
    if any(m == 0 for m in spec.mu) and setting.epsilon > 0:
        raise DomainError("eps' = eps/mu is undefined for a zero mean coordinate")
    n = int(n)
    if n < 1:
        raise DomainError("n must be a positive integer")
    mu, sigma = _coords_arrays(spec)
    out = []
    for stream in streams:
        rng = stream.generator()
        if slow:
            y = rng.choice(np.array([-1.0, 1.0]), size=n)
            x = y[:, None] * mu + sigma * rng.standard_normal((n, spec.d))
            u = (y[:, None] * x).mean(axis=0)
        else:
            u = mu + sigma / math.sqrt(n) * rng.standard_normal(spec.d)
        w = robust_weights(u, setting)
        out.append(-float(np.dot(w, mu)))
    return np.array(out)


def mc_generalization_loss(spec: GaussianMixtureSpec, setting: AdversarySetting, n: int,
                           replications: int, seed: int, slow: bool = False) -> tuple[float, float]:
    if replications < 2:
        raise DomainError("need at least 2 replications for a standard error")
    streams = (derive_substream(seed, r) for r in range(replications))
    return summarize(gauss_linear_mc_losses(spec, setting, n, streams, slow=slow))
