"""Oracle cross-checks: every closed form against an independent brute-force route."""
from __future__ import annotations

import itertools
import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from . import gauss_linear as gl
from . import gauss_zeroone as gz
from . import manhattan as mh
from . import trainers as tr
from .curves import standardized_gap
from .numerics import derive_substream, erf, std_normal_cdf

VERIFY_SEED = 20210301


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str

    def line(self) -> str:
        return f"{'PASS' if self.passed else 'FAIL'} {self.name}: {self.detail}"


def erf_quadrature(x: float) -> float:
    with warnings.catch_warnings():
        # tolerances sit at the float floor; quad warns but still converges
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        val, _ = integrate.quad(lambda t: math.exp(-t * t), 0.0, x, epsabs=1e-16, epsrel=1e-15, limit=200)
    return 2.0 / math.sqrt(math.pi) * val


def check_erf(points: int = 10_000) -> CheckResult:
    xs = np.linspace(-6.0, 6.0, points)
    err = max(abs(erf(x) - erf_quadrature(x)) for x in xs)
    return CheckResult("erf_vs_quadrature", err <= 1e-13, f"max |err| = {err:.3e} on {points} points")


def check_normal_cdf(points: int = 10_000) -> CheckResult:
    xs = np.linspace(-8.0, 8.0, points)
    err = max(abs(std_normal_cdf(x) + std_normal_cdf(-x) - 1.0) for x in xs)
    return CheckResult("normal_cdf_complement", err <= 1e-13, f"max |Phi(x)+Phi(-x)-1| = {err:.3e}")


def check_robust_hinge(cases: int = 1000) -> CheckResult:
    rng = derive_substream(VERIFY_SEED, 1).generator()
    worst = 0.0
    for _ in range(cases):
        w = rng.normal(0, 2, 2)
        b = rng.normal()
        x = rng.normal(0, 2, 2)
        y = rng.choice([-1, 1])
        eps = rng.uniform(0, 2)
        model = tr.SvmModel(tuple(w), b)
        corners = [x + eps * np.array(c) for c in itertools.product((-1, 1), repeat=2)]
        oracle = max(max(0.0, 1.0 - y * (float(np.dot(w, c)) - b)) for c in corners)
        worst = max(worst, abs(tr.robust_hinge_loss(model, (x, y), eps) - oracle))
    return CheckResult("robust_hinge_vs_corners", worst <= 1e-12, f"max |diff| = {worst:.3e} on {cases} cases")


def check_robust_squared(cases: int = 1000, grid: int = 4001) -> CheckResult:
    rng = derive_substream(VERIFY_SEED, 2).generator()
    worst = 0.0
    for _ in range(cases):
        w, x, y = rng.normal(0, 2, 3)
        eps = rng.uniform(0, 2)
        xt = np.linspace(x - eps, x + eps, grid)
        oracle = float(np.max((y - w * xt) ** 2))
        got = tr.robust_squared_loss(w, (x, y), eps)
        worst = max(worst, abs(got - oracle) / max(1.0, oracle))
    return CheckResult("robust_squared_vs_grid", worst <= 1e-9, f"max rel diff = {worst:.3e} on {cases} cases")


def brute_force_region_ok(neutralized) -> bool:
    xs = sorted({s.x for s in neutralized})
    probes = [xs[0] - 1.0, xs[-1] + 1.0] + xs + [0.5 * (a + b) for a, b in zip(xs, xs[1:])]
    values = [gz.empirical_robust_objective(neutralized, w) for w in probes]
    best = min(values)
    region = gz.minimizer_region(neutralized)
    if region.objective_value != best:
        return False
    return all(region.contains(w) == (v == best) for w, v in zip(probes, values))


def check_minimizer_region(cases: int = 1000) -> CheckResult:
    rng = derive_substream(VERIFY_SEED, 3).generator()
    bad = 0
    for k in range(cases):
        n = int(rng.integers(1, 9))
        # half the cases on a coarse lattice to force duplicate points
        x = rng.integers(-3, 4, n).astype(float) if k % 2 else rng.normal(0, 1.5, n)
        y = rng.choice([-1, 1], n)
        data = [gz.LabeledSample1D(float(a), int(b)) for a, b in zip(x, y)]
        # every fourth case skips the adversary so opposite labels can share a point
        eps = 0.0 if k % 4 == 1 else float(rng.uniform(0, 1.5))
        if not brute_force_region_ok(gz.neutralize(data, eps)):
            bad += 1
    return CheckResult("minimizer_region_vs_brute_force", bad == 0, f"{bad} mismatches in {cases} datasets")


def check_svm_test_loss(models: int = 20, draws: int = 1_000_000) -> CheckResult:
    rng = derive_substream(VERIFY_SEED, 4).generator()
    mu = np.array([1.0, 1.0])
    worst = 0.0
    for _ in range(models):
        model = tr.SvmModel(tuple(rng.normal(0, 1, 2)), float(rng.normal(0, 0.5)))
        X, y = tr.sample_gaussian_mixture_2d(mu, draws, rng)
        h = np.maximum(0.0, 1.0 - y * (X @ np.asarray(model.w) - model.b))
        se = h.std(ddof=1) / math.sqrt(draws)
        worst = max(worst, standardized_gap(h.mean(), se, tr.svm_standard_test_loss(model, mu)))
    return CheckResult("svm_test_loss_vs_mc", worst <= 4.0, f"max |z| = {worst:.2f} over {models} models")


def check_gauss_linear_mc(replications: int = 20_000) -> CheckResult:
    spec = gl.GaussianMixtureSpec((1.0,), (2.0,))
    worst = 0.0
    for i, (n, eps) in enumerate(itertools.product((1, 10, 100), (0.5, 1.5))):
        setting = gl.AdversarySetting(eps)
        mean, se = gl.mc_generalization_loss(spec, setting, n, replications, VERIFY_SEED + i)
        worst = max(worst, standardized_gap(mean, se, gl.exact_generalization_loss(spec, setting, n)))
    return CheckResult("gauss_linear_exact_vs_mc", worst <= 4.0, f"max |z| = {worst:.2f} over 6 cells")


def check_manhattan_fit(max_columns: int = 2, max_size: int = 3) -> CheckResult:
    mu = 0.1
    bad = total = 0
    for columns in range(1, max_columns + 1):
        spec = mh.ManhattanSpec(columns, mu)
        support = [mh.ManhattanSample(j, y * mu, y) for j in range(1, columns + 1) for y in (1, -1)]
        for eps in (0.05, 0.4):
            for size in range(0, max_size + 1):
                for train in itertools.product(support, repeat=size):
                    clf = mh.fit_manhattan_robust(train, spec, eps)
                    count, l1 = mh.brute_force_fit(train, spec, eps)
                    ok = (mh.adversarial_count(clf.alphas, train, mu, eps) == count
                          and math.isclose(mh.l1_norm(clf), l1, abs_tol=1e-12))
                    bad += not ok
                    total += 1
    return CheckResult("manhattan_fit_vs_brute_force", bad == 0, f"{bad} mismatches in {total} training sets")


def check_manhattan_mc(replications: int = 10_000) -> CheckResult:
    spec = mh.ManhattanSpec(5, 0.1)
    worst = 0.0
    for n in (1, 5, 20):
        mean, se = mh.mc_manhattan_loss(spec, 0.4, n, replications, VERIFY_SEED + n)
        worst = max(worst, standardized_gap(mean, se, mh.exact_manhattan_loss(spec, 0.4, n)))
    return CheckResult("manhattan_exact_vs_mc", worst <= 4.0, f"max |z| = {worst:.2f} over 3 cells")


def run_checks(quick: bool = False) -> list[CheckResult]:
    if quick:
        return [
            check_erf(500), check_normal_cdf(500), check_robust_hinge(100), check_robust_squared(100),
            check_minimizer_region(100), check_svm_test_loss(3, 200_000), check_gauss_linear_mc(5_000),
            check_manhattan_fit(1, 3), check_manhattan_mc(2_000),
        ]
    return [
        check_erf(), check_normal_cdf(), check_robust_hinge(), check_robust_squared(),
        check_minimizer_region(), check_svm_test_loss(), check_gauss_linear_mc(),
        check_manhattan_fit(), check_manhattan_mc(),
    ]
