"""Named property suites with their independent oracles.

Each suite returns a :class:`SuiteResult` carrying a pass flag, the measured
quantity, the tolerance it was held to and the wall time. ``run_suites``
drives them for the ``bench`` command and the acceptance tests.
"""

from __future__ import annotations

import itertools
import math
import time
from dataclasses import asdict, dataclass
from typing import Callable

import numpy as np
from scipy.optimize import minimize
from scipy.special import logsumexp

from .evaluation import hungarian
from .losses import LossConfig, cidm_gradient, cidm_loss
from .pipeline import PipelineConfig, run_pipeline
from .procedure import SegmentContext, chain_energy, expansion_move, order_key_steps, segment
from .solver import (
    SolverConfig,
    assign_virtual,
    build_problem,
    gibbs_kernel,
    gw_energy,
    gw_gradient,
    solve_entropic_kot,
    solve_rfpgwot,
    unbalanced_sinkhorn,
)
from .synth import BACKGROUND, SynthConfig, generate_pair

__all__ = [
    "SuiteResult",
    "SUITES",
    "ORDERING_SAMPLE",
    "ORDERING_EXPECTED",
    "run_suites",
    "textbook_sinkhorn",
    "entropic_ot_dual_oracle",
    "brute_force_assignment",
    "brute_force_expansion",
]

ORDERING_SAMPLE = [
    6, 2, 1, 3, 5, 1, 1, 0, 0, 6, 4, 4, 6, 1, 2, 3, 0, 4, 0, 4, 5, 5, 3, 1, 3,
    2, 0, 4, 3, 6, 0, 1, 2, 4, 2, 3, 5, 4, 6, 2, 5, 1, 2, 4, 3, 2, 2, 3, 4, 1,
]
ORDERING_EXPECTED = [6, 1, 0, 5, 3, 2, 4]


@dataclass
class SuiteResult:
    criterion: int
    name: str
    passed: bool
    measured: str
    tolerance: str
    seconds: float
    time_limit: float

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        limit = "no limit" if math.isinf(self.time_limit) else f"limit {self.time_limit:g}s"
        return (
            f"[{status}] {self.criterion:>2} {self.name}: {self.measured} "
            f"(tolerance {self.tolerance}; {self.seconds:.3f}s / {limit})"
        )

    def to_dict(self) -> dict:
        return asdict(self)


# --- independent oracles ------------------------------------------------------


def textbook_sinkhorn(k: np.ndarray, a: np.ndarray, b: np.ndarray, tol: float = 1e-15, max_iter: int = 100_000):
    """Plain alternating balanced scaling, iterated until the row marginal error is below ``tol``."""
    u = np.ones(a.size) / a.size
    v = np.ones(b.size) / b.size
    for _ in range(max_iter):
        v = b / (k.T @ u)
        u = a / (k @ v)
        if np.abs(v * (k.T @ u) - b).sum() < tol:
            break
    return u[:, None] * k * v[None, :]


def entropic_ot_dual_oracle(c: np.ndarray, a: np.ndarray, b: np.ndarray, eps: float) -> np.ndarray:
    """Entropic OT through its smooth semi-dual, maximized with BFGS.

    Eliminating the column potential leaves a concave function of the row
    potential ``f``; the optimal plan is ``exp((f_i + g_j - C_ij) / eps)``.
    """
    la, lb = np.log(a), np.log(b)

    def g_of(f):
        return eps * (lb - logsumexp((f[:, None] - c) / eps, axis=0))

    def neg_dual(f):
        g = g_of(f)
        logt = (f[:, None] + g[None, :] - c) / eps
        t = np.exp(logt)
        value = f @ a + g @ b - eps * t.sum()
        grad = a - t.sum(1)
        return -value, -grad

    f0 = eps * la
    res = minimize(neg_dual, f0, jac=True, method="BFGS", options={"gtol": 1e-13, "maxiter": 10_000})
    f = res.x
    g = g_of(f)
    return np.exp((f[:, None] + g[None, :] - c) / eps)


def brute_force_assignment(c: np.ndarray) -> float:
    r, k = c.shape
    if r <= k:
        return min(sum(c[i, p[i]] for i in range(r)) for p in itertools.permutations(range(k), r))
    return min(sum(c[p[j], j] for j in range(k)) for p in itertools.permutations(range(r), k))


def brute_force_expansion(labels: np.ndarray, alpha: int, ctx: SegmentContext) -> float:
    best = math.inf
    for mask in itertools.product((0, 1), repeat=labels.size):
        cand = np.where(np.array(mask, bool), alpha, labels)
        best = min(best, chain_energy(cand, ctx))
    return best


def _random_psd(rng, n):
    a = rng.standard_normal((n, n))
    return a @ a.T / n


def _timed(fn: Callable[[], tuple[bool, str]]) -> tuple[bool, str, float]:
    t0 = time.perf_counter()
    ok, measured = fn()
    return ok, measured, time.perf_counter() - t0


# --- suites -------------------------------------------------------------------


def suite_ordering(**_) -> SuiteResult:
    def run():
        t0 = time.perf_counter()
        got = order_key_steps(ORDERING_SAMPLE, 7).as_list()
        ms = (time.perf_counter() - t0) * 1e3
        return got == ORDERING_EXPECTED, f"got {got}, expected {ORDERING_EXPECTED} ({ms:.3f} ms)"

    ok, measured, sec = _timed(run)
    return SuiteResult(1, "ordering_exactness", ok and sec < 1e-3, measured, "exact", sec, 1e-3)


def suite_balanced_sinkhorn(**_) -> SuiteResult:
    def run():
        rng = np.random.default_rng(2)
        worst_marg = worst_plan = 0.0
        for _ in range(100):
            n, m = rng.integers(1, 33, size=2)
            k = rng.uniform(0.05, 1.0, size=(n, m))
            a = rng.uniform(0.5, 1.5, n)
            a /= a.sum()
            b = rng.uniform(0.5, 1.5, m)
            b /= b.sum()
            _, _, plan, _ = unbalanced_sinkhorn(k, a, b, 1.0, inner_max=20_000, inner_tol=1e-15)
            ref = textbook_sinkhorn(k, a, b)
            marg = np.abs(plan.sum(1) - a).sum() + np.abs(plan.sum(0) - b).sum()
            worst_marg = max(worst_marg, marg)
            worst_plan = max(worst_plan, float(np.abs(plan - ref).max()))
        ok = worst_marg <= 1e-6 and worst_plan <= 1e-10
        return ok, f"max marginal L1 {worst_marg:.2e}, max plan Linf vs textbook {worst_plan:.2e}"

    ok, measured, sec = _timed(run)
    return SuiteResult(2, "balanced_sinkhorn", ok and sec < 5, measured, "marginals 1e-6 L1, plan 1e-10 Linf", sec, 5)


def suite_entropic_kot(**_) -> SuiteResult:
    def run():
        rng = np.random.default_rng(3)
        worst = 0.0
        for _ in range(20):
            c = rng.uniform(0, 1, (5, 5))
            a = np.full(5, 0.2)
            b = np.full(5, 0.2)
            plan = solve_entropic_kot(c, a, b, 0.07, max_iter=100_000, tol=1e-15).plan.data
            worst = max(worst, float(np.abs(plan - entropic_ot_dual_oracle(c, a, b, 0.07)).max()))
        return worst <= 1e-4, f"max plan Linf vs dual oracle {worst:.2e}"

    ok, measured, sec = _timed(run)
    return SuiteResult(3, "entropic_kot_oracle", ok and sec < 30, measured, "1e-4 Linf", sec, 30)


def suite_gw_gradient(inject_wrong_sign_gradient: bool = False, **_) -> SuiteResult:
    sign = -1.0 if inject_wrong_sign_gradient else 1.0

    def run():
        rng = np.random.default_rng(4)
        worst = 0.0
        h = 1e-5
        for _ in range(50):
            n, m = rng.integers(1, 11, size=2)
            cx, cy = _random_psd(rng, n), _random_psd(rng, m)
            t = rng.uniform(0, 1, (n, m))
            g = sign * gw_gradient(cx, cy, t, "A")
            fd = np.empty_like(t)
            for i in range(n):
                for j in range(m):
                    e = np.zeros_like(t)
                    e[i, j] = h
                    fd[i, j] = (gw_energy(cx, cy, t + e) - gw_energy(cx, cy, t - e)) / (2 * h)
            rel = float(np.abs(g - fd).max() / max(np.abs(fd).max(), 1e-12))
            worst = max(worst, rel)
        return worst <= 1e-5, f"max relative error {worst:.2e}"

    ok, measured, sec = _timed(run)
    return SuiteResult(4, "gw_gradient_fd", ok and sec < 10, measured, "1e-5 relative", sec, 10)


def suite_monotonicity(**_) -> SuiteResult:
    def run():
        rng = np.random.default_rng(5)
        worst = -math.inf
        cfg = SolverConfig(option="A", outer_max=6, outer_tol=1e-300)
        for _ in range(100):
            n, m = rng.integers(1, 17, size=2)
            d = int(rng.integers(1, 6))
            x = rng.standard_normal((n, d)) * rng.uniform(0.5, 10)
            y = rng.standard_normal((m, d)) * rng.uniform(0.5, 10)
            totals = solve_rfpgwot(x, y, cfg).totals
            if len(totals) > 1:
                worst = max(worst, float(np.max(np.diff(totals))))
        return worst <= 1e-9, f"largest step-to-step increase {worst:.2e}"

    ok, measured, sec = _timed(run)
    return SuiteResult(5, "outer_monotonicity", ok and sec < 60, measured, "slack 1e-9", sec, 60)


def suite_kot_reduction(**_) -> SuiteResult:
    def run():
        worst = 0.0
        cfg = SolverConfig(rho=0.0)
        for seed in range(20):
            rng = np.random.default_rng(600 + seed)
            n, m = rng.integers(2, 20, size=2)
            x = rng.standard_normal((n, 4)) * 3
            y = rng.standard_normal((m, 4)) * 3
            problem = build_problem(x, y, cfg)
            plan = solve_rfpgwot(x, y, cfg, problem).plan.data
            rc = problem.cfg
            k = gibbs_kernel(problem.cost, problem.prior(), problem.scores(), rc.lambda2)
            ref = unbalanced_sinkhorn(k, problem.alpha, problem.beta, rc.kappa, rc.inner_max, rc.inner_tol)[2]
            worst = max(worst, float(np.abs(plan - ref).max()))
        return worst <= 1e-12, f"max plan Linf vs single pass {worst:.2e}"

    ok, measured, sec = _timed(run)
    return SuiteResult(6, "kot_reduction", ok, measured, "1e-12 Linf", sec, math.inf)


def suite_background_routing(seeds: int = 50, **_) -> SuiteResult:
    def run():
        recalls, fps = [], []
        cfg = SolverConfig()
        for seed in range(seeds):
            syn = SynthConfig(background_rate=0.2, seed=seed)
            assert syn.separable
            x, y, gx, gy = generate_pair(syn)
            sol = solve_rfpgwot(x, y, cfg)
            rows, cols = assign_virtual(sol.plan, cfg.resolve(x.length, y.length).zeta)
            flags = np.concatenate([rows, cols])
            bg = np.concatenate([gx.labels, gy.labels]) == BACKGROUND
            if bg.any():
                recalls.append(flags[bg].mean())
            fps.append(flags[~bg].mean())
        recall, fp = float(np.mean(recalls)), float(np.mean(fps))
        return recall >= 0.90 and fp <= 0.05, f"background flagged {recall:.3f}, real frames flagged {fp:.3f}"

    ok, measured, sec = _timed(run)
    return SuiteResult(7, "background_routing", ok and sec < 120, measured, ">=0.90 flagged, <=0.05 false", sec, 120)


ABLATIONS = {
    "full": {},
    "rho0": {"rho": 0.0},
    "no_priors": {"use_priors": False},
    "no_virtual": {"use_virtual": False},
}


def ablation_f1(seeds: int = 50, k: int = 4) -> dict[str, float]:
    scores = {name: [] for name in ABLATIONS}
    for seed in range(seeds):
        x, y, gx, gy = generate_pair(SynthConfig(k=k, permute=True, repeat_rate=0.15, seed=seed))
        for name, kw in ABLATIONS.items():
            res = run_pipeline([x, y], SolverConfig(**kw), PipelineConfig(k=k), [gx, gy], threads=1)
            scores[name].append(res.metrics.f1)
    return {name: float(np.mean(v)) for name, v in scores.items()}


def suite_ablation(seeds: int = 50, **_) -> SuiteResult:
    def run():
        f1 = ablation_f1(seeds)
        ok = all(f1["full"] > f1[name] for name in ("rho0", "no_priors", "no_virtual"))
        return ok, "mean F1 " + ", ".join(f"{n}={v:.4f}" for n, v in f1.items())

    ok, measured, sec = _timed(run)
    return SuiteResult(8, "ablation_direction", ok and sec < 600, measured, "full strictly best", sec, 600)


def suite_hungarian(**_) -> SuiteResult:
    def run():
        rng = np.random.default_rng(9)
        worst = 0.0
        for _ in range(200):
            r, k = rng.integers(1, 8, size=2)
            c = rng.uniform(-5, 5, (r, k))
            worst = max(worst, abs(hungarian(c).total - brute_force_assignment(c)))
        return worst <= 1e-9, f"max |hungarian - brute force| {worst:.2e}"

    ok, measured, sec = _timed(run)
    return SuiteResult(9, "hungarian_exactness", ok and sec < 5, measured, "exact (1e-9)", sec, 5)


def _kink_safe_sequence(rng, cfg: LossConfig, margin: float = 1e-3) -> np.ndarray:
    while True:
        n = int(rng.integers(2, 9))
        x = rng.standard_normal((n, int(rng.integers(1, 5)))) * rng.uniform(0.3, 2.5)
        d = np.linalg.norm(x[:, None] - x[None], axis=2)[np.triu_indices(n, 1)]
        if d.min() > margin and np.abs(d - cfg.lambda3).min() > margin:
            return x


def suite_cidm_gradient(**_) -> SuiteResult:
    def run():
        rng = np.random.default_rng(10)
        worst = 0.0
        h = 1e-6
        for _ in range(50):
            cfg = LossConfig(delta=int(rng.integers(0, 4)))
            x = _kink_safe_sequence(rng, cfg)
            g = cidm_gradient(x, cfg)
            fd = np.empty_like(x)
            for idx in np.ndindex(*x.shape):
                e = np.zeros_like(x)
                e[idx] = h
                fd[idx] = (cidm_loss(x + e, cfg) - cidm_loss(x - e, cfg)) / (2 * h)
            worst = max(worst, float(np.abs(g - fd).max() / max(np.abs(fd).max(), 1e-12)))
        return worst <= 1e-5, f"max relative error {worst:.2e}"

    ok, measured, sec = _timed(run)
    return SuiteResult(10, "cidm_gradient_fd", ok and sec < 5, measured, "1e-5 relative", sec, 5)


def suite_alpha_expansion(**_) -> SuiteResult:
    def run():
        mismatch = 0
        increases = 0
        for seed in range(100):
            rng = np.random.default_rng(1100 + seed)
            k = int(rng.integers(2, 5))
            ctx = SegmentContext(rng.uniform(0, 5, (6, k)), rng.uniform(0, 3, 5))
            labels = rng.integers(0, k, 6)
            alpha = int(rng.integers(0, k))
            moved = expansion_move(labels, alpha, ctx)
            e_move = chain_energy(moved, ctx)
            if abs(e_move - brute_force_expansion(labels, alpha, ctx)) > 1e-12:
                mismatch += 1
            if e_move > chain_energy(labels, ctx) + 1e-12:
                increases += 1
            x = rng.standard_normal((int(rng.integers(6, 30)), 3))
            trace = segment(x, k, float(rng.uniform(0, 2)), seed).energy_trace
            increases += int(np.sum(np.diff(trace) > 1e-9))
        ok = mismatch == 0 and increases == 0
        return ok, f"{mismatch} DP/brute-force mismatches, {increases} energy increases over 100 seeds"

    ok, measured, sec = _timed(run)
    return SuiteResult(11, "alpha_expansion", ok and sec < 10, measured, "exact, non-increasing", sec, 10)


def suite_separable_recovery(seeds: int = 20, **_) -> SuiteResult:
    def run():
        f1s, exact = [], 0
        for seed in range(seeds):
            syn = SynthConfig(k=4, noise_sigma=2.0, seed=seed)
            x, y, gx, gy = generate_pair(syn)
            res = run_pipeline([x, y], SolverConfig(), PipelineConfig(k=4), [gx, gy], threads=1)
            f1s.append(res.metrics.f1)
            exact += res.canonical_gt == list(gx.order)
        ok = min(f1s) >= 0.95 and exact == seeds
        return ok, f"min F1 {min(f1s):.4f}, mean F1 {np.mean(f1s):.4f}, exact order {exact}/{seeds}"

    ok, measured, sec = _timed(run)
    return SuiteResult(12, "separable_recovery", ok and sec < 120, measured, "F1>=0.95, exact order", sec, 120)


SUITES: dict[str, Callable[..., SuiteResult]] = {
    "ordering_exactness": suite_ordering,
    "balanced_sinkhorn": suite_balanced_sinkhorn,
    "entropic_kot_oracle": suite_entropic_kot,
    "gw_gradient_fd": suite_gw_gradient,
    "outer_monotonicity": suite_monotonicity,
    "kot_reduction": suite_kot_reduction,
    "background_routing": suite_background_routing,
    "ablation_direction": suite_ablation,
    "hungarian_exactness": suite_hungarian,
    "cidm_gradient_fd": suite_cidm_gradient,
    "alpha_expansion": suite_alpha_expansion,
    "separable_recovery": suite_separable_recovery,
}


def run_suites(names=None, **options) -> list[SuiteResult]:
    names = list(SUITES) if names is None else list(names)
    unknown = [n for n in names if n not in SUITES]
    if unknown:
        raise KeyError(f"unknown suites: {', '.join(unknown)}")
    return [SUITES[n](**options) for n in names]
