"""Scalar numerics: erf / normal CDF, bisection, sign scanning, seeded substreams."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence, Union

import numpy as np

from .errors import BracketError, ConvergenceError, DomainError

MAX_BISECTION_ITERATIONS = 200
DEFAULT_ROOT_TOL = 1e-12
DEFAULT_SCAN_POINTS = 4096
SCAN_MARGIN = 1e-9
_UINT64 = 1 << 64


def _check_finite(x: float) -> float:
    x = float(x)
    if not math.isfinite(x):
        raise DomainError(f"non-finite argument {x!r}")
    return x


def erf(x: float) -> float:
    """Error function 2/sqrt(pi) * int_0^x exp(-t^2) dt."""
    x = _check_finite(x)
    # libm erf is correctly odd, but enforce it bit-for-bit
    if x < 0.0:
        return -math.erf(-x)
    return math.erf(x)


def std_normal_cdf(x: float) -> float:
    x = _check_finite(x)
    if x < 0.0:
        # complement form keeps the lower tail accurate
        return 0.5 * math.erfc(-x / math.sqrt(2.0))
    return 0.5 * (1.0 + erf(x / math.sqrt(2.0)))


def std_normal_pdf(x: float) -> float:
    return math.exp(-0.5 * x * x) / math.sqrt(2.0 * math.pi)


@dataclass(frozen=True)
class Bracket:
    lo: float
    hi: float

    def __post_init__(self):
        if not (self.lo < self.hi):
            raise BracketError(f"bracket requires lo < hi, got [{self.lo}, {self.hi}]")

    @property
    def width(self) -> float:
        return self.hi - self.lo

    def __contains__(self, x: float) -> bool:
        return self.lo <= x <= self.hi


def _sign(v: float) -> int:
    return (v > 0) - (v < 0)


def find_root(fn: Callable[[float], float], bracket: Bracket, tol: float = DEFAULT_ROOT_TOL,
              max_iter: int = MAX_BISECTION_ITERATIONS) -> float:
    """Bisection on a bracket with strictly opposite endpoint signs.

    Returns the midpoint of the final enclosing interval, whose width is at
    most ``tol`` (or which cannot be split further in floating point).
    """
    if not tol > 0:
        raise DomainError("tol must be positive")
    lo, hi = float(bracket.lo), float(bracket.hi)
    s_lo, s_hi = _sign(fn(lo)), _sign(fn(hi))
    if s_lo == 0 or s_hi == 0 or s_lo == s_hi:
        raise BracketError(f"no strict sign change on [{lo}, {hi}] (signs {s_lo}, {s_hi})")
    for _ in range(max_iter):
        if hi - lo <= tol:
            return 0.5 * (lo + hi)
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            # interval is down to adjacent floats
            return mid
        s_mid = _sign(fn(mid))
        if s_mid == 0:
            return mid
        if s_mid == s_lo:
            lo = mid
        else:
            hi = mid
    if hi - lo <= tol:
        return 0.5 * (lo + hi)
    raise ConvergenceError(f"bisection did not reach tol={tol} in {max_iter} iterations")


def scan_sign_changes(fn: Callable[[float], float], lo: float, hi: float,
                      grid_points: int = DEFAULT_SCAN_POINTS) -> list[Bracket]:
    """Brackets around every consecutive grid pair where ``fn`` flips strict sign."""
    if not lo < hi:
        raise DomainError("scan requires lo < hi")
    if grid_points < 2:
        raise DomainError("grid_points must be at least 2")
    return scan_grid_sign_changes(fn, np.linspace(lo, hi, grid_points))


def scan_grid_sign_changes(fn: Callable[[float], float], grid: Sequence[float]) -> list[Bracket]:
    """Same as :func:`scan_sign_changes` on an explicit increasing grid.

    Grid points where ``fn`` is exactly zero are skipped over, so a bracket
    always has strictly opposite signs at its ends.
    """
    out: list[Bracket] = []
    prev_x, prev_s = None, 0
    for x in grid:
        x = float(x)
        s = _sign(fn(x))
        if s == 0:
            continue
        if prev_s != 0 and s != prev_s:
            out.append(Bracket(prev_x, x))
        prev_x, prev_s = x, s
    return out


StreamIndex = Union[int, Sequence[int]]


@dataclass(frozen=True)
class RandomStream:
    """A named, reproducible random substream.

    Two streams with equal ``(master_seed, stream_index)`` produce identical
    draws; distinct indices map to distinct ``SeedSequence`` spawn keys.
    """
    master_seed: int
    stream_index: tuple[int, ...]

    def generator(self) -> np.random.Generator:
        seq = np.random.SeedSequence(self.master_seed, spawn_key=self.stream_index)
        return np.random.Generator(np.random.PCG64(seq))


def derive_substream(master_seed: int, index: StreamIndex) -> RandomStream:
    master_seed = int(master_seed)
    if not 0 <= master_seed < _UINT64:
        raise DomainError(f"master seed must be a 64-bit unsigned integer, got {master_seed}")
    key = (int(index),) if np.ndim(index) == 0 else tuple(int(i) for i in index)
    if any(k < 0 for k in key):
        raise DomainError("stream indices must be unsigned")
    return RandomStream(master_seed, key)


def as_generator(rng) -> np.random.Generator:
    if isinstance(rng, RandomStream):
        return rng.generator()
    if isinstance(rng, np.random.Generator):
        return rng
    raise TypeError(f"expected RandomStream or numpy Generator, got {type(rng).__name__}")


def signed_log_sum(terms: Sequence[tuple[float, float]]) -> tuple[float, float]:
    """Sum of ``sign * exp(log_abs)`` terms as ``(scaled_sum, log_scale)``.

    The true sum equals ``scaled_sum * exp(log_scale)``; ``scaled_sum`` keeps
    the sign even when the sum itself would underflow.
    """
    finite = [la for s, la in terms if s != 0 and la != -math.inf]
    if not finite:
        return 0.0, -math.inf
    m = max(finite)
    total = math.fsum(s * math.exp(la - m) for s, la in terms if s != 0 and la != -math.inf)
    return total, m
