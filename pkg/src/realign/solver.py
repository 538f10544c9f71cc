"""Regularized fused partial Gromov-Wasserstein alignment.

The outer loop linearizes the quadratic structure term at the current plan,
folds the IDM score and the prior into a Gibbs kernel, and rescales that
kernel with unbalanced Sinkhorn iterations. Every accepted outer step is
checked against the true objective, so the recorded trace never increases.
"""

from __future__ import annotations

import logging
import math
from dataclasses import asdict, dataclass, field, replace

import numpy as np
from scipy.optimize import minimize_scalar
from scipy.special import kl_div, logsumexp

from .geometry import (
    CostMatrix,
    EmbeddingSequence,
    StructureMatrix,
    VirtualCostPolicy,
    augment_structure,
    augment_virtual,
    pairwise_cost,
    structure_matrix,
)
from .priors import (
    PriorMatrix,
    ScoreMatrix,
    anneal_phi,
    augment_prior,
    default_center,
    idm_score,
    idm_value,
    laplace_prior,
    uniform_prior,
)

logger = logging.getLogger(__name__)

EXPONENT_CLAMP = 700.0
BALANCED = math.inf

__all__ = [
    "TransportPlan",
    "SolverConfig",
    "ResolvedConfig",
    "ObjectiveBreakdown",
    "Problem",
    "Solution",
    "gibbs_kernel",
    "unbalanced_sinkhorn",
    "kappa_from_tau",
    "gw_gradient",
    "gw_energy",
    "fused_cost",
    "build_problem",
    "objective",
    "inner_solve",
    "solve_rfpgwot",
    "assign_virtual",
    "solve_entropic_kot",
]


@dataclass(frozen=True)
class TransportPlan:
    data: np.ndarray
    n_real: int
    m_real: int

    def __post_init__(self):
        data = np.array(self.data, dtype=float)
        if data.ndim != 2:
            raise ValueError("plan must be 2-D")
        if np.any(~np.isfinite(data)) or np.any(data < 0):
            raise ValueError("plan entries must be finite and nonnegative")
        if data.shape not in ((self.n_real, self.m_real), (self.n_real + 1, self.m_real + 1)):
            raise ValueError(f"plan shape {data.shape} inconsistent with n={self.n_real}, m={self.m_real}")
        data.setflags(write=False)
        object.__setattr__(self, "data", data)

    @property
    def augmented(self) -> bool:
        return self.data.shape == (self.n_real + 1, self.m_real + 1)

    @property
    def real(self) -> np.ndarray:
        return self.data[: self.n_real, : self.m_real]

    @property
    def mass(self) -> float:
        return float(self.data.sum())


@dataclass(frozen=True)
class SolverConfig:
    """Hyperparameters of one alignment solve.

    Size-dependent defaults (``lambda1``, ``lambda2``, ``zeta``) are left as
    ``None`` and filled in by :meth:`resolve` from the sequence lengths.
    ``tau`` is given in units of ``lambda2`` when ``tau_relative`` is true.
    """

    rho: float = 0.3
    lambda1: float | None = None
    lambda2: float | None = None
    tau: float = 0.3
    tau_relative: bool = True
    epsilon: float = 0.07
    b: float = 2.0
    zeta: float | None = None
    inner_max: int = 20
    inner_tol: float = 1e-3
    outer_max: int = 6
    outer_tol: float = 1e-4
    option: str = "A"
    kernel: str = "laplace"
    phi: float = 1.0
    anneal: bool = False
    center_policy: str = "plan_argmax"
    metric: str = "euclidean"
    normalize_cost: bool = False
    virtual_factor: float = 3.0
    virtual_floor: float = 1.0
    virtual_reference: str = "nn_median"
    virtual_mass: float = 0.1
    virtual_prior: float | None = None
    use_priors: bool = True
    use_virtual: bool = True

    def __post_init__(self):
        if not 0.0 <= self.rho <= 1.0:
            raise ValueError("rho must lie in [0, 1]")
        if self.inner_max < 1 or self.outer_max < 1:
            raise ValueError("iteration budgets must be >= 1")
        if not (self.inner_tol > 0 and self.outer_tol > 0):
            raise ValueError("tolerances must be positive")
        if not self.tau > 0:
            raise ValueError("tau must be positive (use inf for balanced marginals)")
        if self.option not in ("A", "B"):
            raise ValueError("option must be 'A' or 'B'")
        if self.center_policy not in ("fixed_mid", "plan_argmax"):
            raise ValueError("center_policy must be 'fixed_mid' or 'plan_argmax'")
        if not 0.5 <= self.phi <= 1.0:
            raise ValueError("phi must lie in [0.5, 1]")
        for name in ("lambda1",):
            v = getattr(self, name)
            if v is not None and v < 0:
                raise ValueError(f"{name} must be nonnegative")
        for name in ("lambda2", "epsilon", "b"):
            v = getattr(self, name)
            if v is not None and not v > 0:
                raise ValueError(f"{name} must be positive")
        if not self.virtual_mass > 0:
            raise ValueError("virtual_mass must be positive")

    def resolve(self, n: int, m: int) -> "ResolvedConfig":
        lambda1 = 1.0 / (n + m) if self.lambda1 is None else float(self.lambda1)
        if not self.use_priors:
            lambda1 = 0.0
        lambda2 = 0.1 * n * m / 4.0 if self.lambda2 is None else float(self.lambda2)
        zeta = 2.0 * 5.0 / (n + m) if self.zeta is None else float(self.zeta)
        tau = self.tau * lambda2 if (self.tau_relative and math.isfinite(self.tau)) else float(self.tau)
        return ResolvedConfig(
            base=self, n=n, m=m, lambda1=lambda1, lambda2=lambda2, zeta=zeta, tau=tau,
            kappa=kappa_from_tau(tau, lambda2),
        )

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class ResolvedConfig:
    base: SolverConfig
    n: int
    m: int
    lambda1: float
    lambda2: float
    zeta: float
    tau: float
    kappa: float

    def __getattr__(self, name):
        return getattr(self.base, name)

    def to_dict(self) -> dict:
        d = self.base.to_dict()
        d.update(lambda1=self.lambda1, lambda2=self.lambda2, zeta=self.zeta, tau=self.tau, kappa=self.kappa)
        return d


@dataclass(frozen=True)
class ObjectiveBreakdown:
    fused_linear: float
    gw_quadratic: float
    idm_reward: float
    prior_kl: float
    marginal_kl_row: float
    marginal_kl_col: float
    total: float

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class Solution:
    """Result of one solve.

    ``u`` and ``v`` are the scalings of the last inner solve; after a
    line-search step they no longer factor ``plan`` exactly.
    """

    plan: TransportPlan
    u: np.ndarray
    v: np.ndarray
    objective_trace: list[ObjectiveBreakdown]
    inner_residuals: list[list[float]]
    converged: bool
    outer_steps_used: int
    center: tuple[int, int] | None = None
    line_search_steps: list[float] = field(default_factory=list)

    @property
    def totals(self) -> list[float]:
        return [o.total for o in self.objective_trace]


# --- kernel and scaling -------------------------------------------------------


def kappa_from_tau(tau: float, lambda2: float) -> float:
    """Scaling exponent of the KL-relaxed marginals, ``tau / (tau + lambda2)``.

    Tends to 1 (balanced updates) as ``tau`` grows; ``inf`` gives exactly 1.
    """
    if not tau > 0 or not lambda2 > 0:
        raise ValueError("tau and lambda2 must be positive")
    if math.isinf(tau):
        return 1.0
    return tau / (tau + lambda2)


def _log_kernel(d_tilde, q_hat, scores, lambda2) -> np.ndarray:
    d = np.asarray(getattr(d_tilde, "data", d_tilde), dtype=float)
    q = np.asarray(getattr(q_hat, "data", q_hat), dtype=float)
    s = np.asarray(getattr(scores, "data", scores), dtype=float)
    if not (d.shape == q.shape == s.shape):
        raise ValueError(f"shape mismatch: cost {d.shape}, prior {q.shape}, scores {s.shape}")
    if not lambda2 > 0:
        raise ValueError("lambda2 must be positive")
    if np.any(q <= 0):
        raise ValueError("prior must be strictly positive")
    return np.clip(np.log(q) + (s - d) / lambda2, -EXPONENT_CLAMP, EXPONENT_CLAMP)


def gibbs_kernel(d_tilde, q_hat, scores, lambda2: float) -> np.ndarray:
    """``q * exp((s - d) / lambda2)``, evaluated in the log domain and clamped."""
    k = np.exp(_log_kernel(d_tilde, q_hat, scores, lambda2))
    assert np.all(k > 0) and np.all(np.isfinite(k))
    return k


def _marginal_change(r, c, r_prev, c_prev) -> float:
    mass = max(float(r.sum()), np.finfo(float).tiny)
    return float((np.abs(r - r_prev).sum() + np.abs(c - c_prev).sum()) / mass)


def unbalanced_sinkhorn(kernel, alpha, beta, kappa: float = 1.0, inner_max: int = 20, inner_tol: float = 1e-3):
    """Scale a positive kernel towards (soft) marginals ``alpha``, ``beta``.

    Iterates ``u <- (alpha / K v)^kappa``, ``v <- (beta / K^T u)^kappa`` from
    ``u = v = 1``. Stops once the L1 change of both plan marginals, relative
    to the plan mass, drops to ``inner_tol``. Kernels whose dynamic range
    would underflow the scaling vectors are handled in the log domain.

    Returns ``(u, v, plan, residuals)``.
    """
    K = np.asarray(kernel, dtype=float)
    a = np.asarray(alpha, dtype=float)
    b = np.asarray(beta, dtype=float)
    if K.ndim != 2 or K.shape != (a.size, b.size):
        raise ValueError(f"kernel shape {K.shape} does not match marginals ({a.size}, {b.size})")
    if np.any(~(K > 0)) or np.any(~np.isfinite(K)):
        raise ValueError("kernel entries must be positive and finite")
    if np.any(~(a > 0)) or np.any(~(b > 0)):
        raise ValueError("marginals must be strictly positive")
    if not 0 < kappa <= 1:
        raise ValueError("kappa must lie in (0, 1]")
    if inner_max < 1:
        raise ValueError("inner_max must be >= 1")

    log_range = np.log(K.max()) - np.log(K.min())
    if log_range > 600.0:
        return _sinkhorn_log(np.log(K), a, b, kappa, inner_max, inner_tol)

    u = np.ones_like(a)
    v = np.ones_like(b)
    r_prev, c_prev = K.sum(1), K.sum(0)
    residuals: list[float] = []
    for _ in range(inner_max):
        if kappa == 1.0:
            u = a / (K @ v)
            v = b / (K.T @ u)
        else:
            u = (a / (K @ v)) ** kappa
            v = (b / (K.T @ u)) ** kappa
        if not (np.all(np.isfinite(u)) and np.all(np.isfinite(v)) and u.min() > 0 and v.min() > 0):
            return _sinkhorn_log(np.log(K), a, b, kappa, inner_max, inner_tol)
        r = u * (K @ v)
        c = v * (K.T @ u)
        residuals.append(_marginal_change(r, c, r_prev, c_prev))
        r_prev, c_prev = r, c
        if residuals[-1] <= inner_tol:
            break
    plan = u[:, None] * K * v[None, :]
    return u, v, plan, residuals


def _sinkhorn_log(logK, a, b, kappa, inner_max, inner_tol):
    f = np.zeros(a.size)
    g = np.zeros(b.size)
    la, lb = np.log(a), np.log(b)
    r_prev, c_prev = np.exp(logsumexp(logK, axis=1)), np.exp(logsumexp(logK, axis=0))
    residuals: list[float] = []
    for _ in range(inner_max):
        f = kappa * (la - logsumexp(logK + g[None, :], axis=1))
        g = kappa * (lb - logsumexp(logK + f[:, None], axis=0))
        logT = f[:, None] + logK + g[None, :]
        r = np.exp(logsumexp(logT, axis=1))
        c = np.exp(logsumexp(logT, axis=0))
        residuals.append(_marginal_change(r, c, r_prev, c_prev))
        r_prev, c_prev = r, c
        if residuals[-1] <= inner_tol:
            break
    plan = np.exp(f[:, None] + logK + g[None, :])
    return np.exp(f), np.exp(g), plan, residuals


# --- structure term -----------------------------------------------------------


def _mat(x) -> np.ndarray:
    return np.asarray(getattr(x, "data", x), dtype=float)


def gw_energy(cx, cy, plan) -> float:
    """Quadratic structure energy ``<Cx T Cy, T>``."""
    cx, cy, t = _mat(cx), _mat(cy), _mat(plan)
    return float(np.sum((cx @ t @ cy) * t))


def gw_gradient(cx, cy, plan, option: str = "A") -> np.ndarray:
    """Gradient of ``<Cx T Cy, T>`` at ``T``.

    Option A assumes symmetric structure matrices and returns ``2 Cx T Cy``.
    Option B makes no symmetry assumption: ``Cx T Cy + Cx^T T Cy^T``.
    """
    cx, cy, t = _mat(cx), _mat(cy), _mat(plan)
    if cx.shape[0] != cx.shape[1] or cy.shape[0] != cy.shape[1]:
        raise ValueError("structure matrices must be square")
    if t.shape != (cx.shape[0], cy.shape[0]):
        raise ValueError(f"plan shape {t.shape} does not match structure sizes {cx.shape[0]}, {cy.shape[0]}")
    if option == "A":
        return 2.0 * (cx @ t @ cy)
    if option == "B":
        return cx @ t @ cy + cx.T @ t @ cy.T
    raise ValueError(f"unknown option {option!r}")


def fused_cost(c, g, rho: float) -> CostMatrix:
    """``(1 - rho) C + rho G``."""
    cm, gm = _mat(c), _mat(g)
    if cm.shape != gm.shape:
        raise ValueError(f"shape mismatch: {cm.shape} vs {gm.shape}")
    if not 0.0 <= rho <= 1.0:
        raise ValueError("rho must lie in [0, 1]")
    return CostMatrix((1.0 - rho) * cm + rho * gm, augmented=getattr(c, "augmented", False))


# --- problem assembly ---------------------------------------------------------


@dataclass(frozen=True)
class Problem:
    """Everything the objective and the outer loop need, fixed for one solve."""

    cfg: ResolvedConfig
    cost: CostMatrix
    cx: StructureMatrix
    cy: StructureMatrix
    alpha: np.ndarray
    beta: np.ndarray
    n: int
    m: int

    @property
    def augmented(self) -> bool:
        return self.cost.augmented

    @property
    def shape(self) -> tuple[int, int]:
        return self.cost.shape

    def prior(self, center=None, phi: float | None = None) -> np.ndarray:
        """Unit-mass prior tether on the plan grid.

        The real block is the Laplace mixture scaled to unit mass; the
        virtual row/column is appended afterwards and the whole renormalized.
        """
        cfg = self.cfg
        phi = cfg.phi if phi is None else phi
        if cfg.use_priors:
            q = laplace_prior(self.n, self.m, cfg.b, phi, center or default_center(self.n, self.m))
            q = PriorMatrix(q.data / q.data.sum(), q.phi, q.center)
        else:
            q = uniform_prior(self.n, self.m, 1.0 / (self.n * self.m))
        if self.augmented:
            q = augment_prior(q, cfg.virtual_prior)
        return q.data / q.data.sum()

    def scores(self, center=None) -> np.ndarray:
        s = idm_score(self.n, self.m, self.cfg.lambda1, center or default_center(self.n, self.m)).data
        return s if self.augmented else s[: self.n, : self.m]


def _marginals(n: int, m: int, augmented: bool, virtual_mass: float):
    alpha = np.full(n, 1.0 / n)
    beta = np.full(m, 1.0 / m)
    if augmented:
        alpha = np.append(alpha, virtual_mass) / (1.0 + virtual_mass)
        beta = np.append(beta, virtual_mass) / (1.0 + virtual_mass)
    return alpha, beta


def build_problem(x, y, cfg: SolverConfig | None = None) -> Problem:
    """Costs, structure matrices and marginals for aligning ``x`` to ``y``."""
    cfg = cfg or SolverConfig()
    x = x if isinstance(x, EmbeddingSequence) else EmbeddingSequence(x)
    y = y if isinstance(y, EmbeddingSequence) else EmbeddingSequence(y)
    n, m = x.length, y.length
    rcfg = cfg.resolve(n, m)
    c = pairwise_cost(x, y, cfg.metric)
    if cfg.normalize_cost and c.data.max() > 0:
        c = CostMatrix(c.data / c.data.max())
    scale = cfg.b
    cx = structure_matrix(n, cfg.option, scale, cfg.kernel)
    cy = structure_matrix(m, cfg.option, scale, cfg.kernel)
    if cfg.use_virtual:
        c = augment_virtual(c, VirtualCostPolicy(cfg.virtual_factor, cfg.virtual_floor, cfg.virtual_reference))
        cx, cy = augment_structure(cx), augment_structure(cy)
    alpha, beta = _marginals(n, m, cfg.use_virtual, cfg.virtual_mass)
    return Problem(rcfg, c, cx, cy, alpha, beta, n, m)


def objective(plan, problem: Problem, center=None, phi: float | None = None) -> ObjectiveBreakdown:
    """Full penalized objective with the exact quadratic structure term.

    Balanced problems (``tau = inf``) treat the marginals as constraints: the
    marginal KL values are reported but do not enter ``total``.
    """
    t = _mat(plan)
    if t.shape != problem.shape:
        raise ValueError(f"plan shape {t.shape} does not match problem {problem.shape}")
    if np.any(t < 0):
        raise ValueError("plan has negative entries")
    cfg = problem.cfg
    phi = cfg.phi if phi is None else phi
    center = center or default_center(problem.n, problem.m)
    rho = cfg.rho
    fused_linear = (1.0 - rho) * float(np.sum(problem.cost.data * t))
    gw = rho * gw_energy(problem.cx, problem.cy, t) if rho > 0 else 0.0
    idm = idm_value(t, problem.n, problem.m, phi, center)
    prior_kl = float(np.sum(kl_div(t, problem.prior(center, phi))))
    kl_row = float(np.sum(kl_div(t.sum(1), problem.alpha)))
    kl_col = float(np.sum(kl_div(t.sum(0), problem.beta)))
    total = fused_linear + gw - cfg.lambda1 * idm + cfg.lambda2 * prior_kl
    if math.isfinite(cfg.tau):
        total += cfg.tau * (kl_row + kl_col)
    return ObjectiveBreakdown(fused_linear, gw, idm, prior_kl, kl_row, kl_col, total)


def inner_solve(problem: Problem, plan, center=None, phi: float | None = None):
    """One linearize-kernelize-scale pass at ``plan``; returns ``(u, v, T, residuals)``."""
    cfg = problem.cfg
    center = center or default_center(problem.n, problem.m)
    if cfg.rho > 0:
        g = gw_gradient(problem.cx, problem.cy, plan, cfg.option)
    else:
        g = np.zeros(problem.shape)
    d = fused_cost(problem.cost, g, cfg.rho)
    k = gibbs_kernel(d, problem.prior(center, phi), problem.scores(center), cfg.lambda2)
    return unbalanced_sinkhorn(k, problem.alpha, problem.beta, cfg.kappa, cfg.inner_max, cfg.inner_tol)


def _plan_argmax(t: np.ndarray, n: int, m: int) -> tuple[int, int]:
    flat = int(np.argmax(t[:n, :m]))
    return (flat // m + 1, flat % m + 1)


def _line_search(problem, t_old, t_new, f_old, center, phi):
    direction = t_new - t_old

    def f(gamma):
        return objective(t_old + gamma * direction, problem, center, phi).total

    res = minimize_scalar(f, bounds=(0.0, 1.0), method="bounded", options={"xatol": 1e-10})
    gamma = float(res.x)
    if res.fun < f_old:
        return gamma, t_old + gamma * direction
    return 0.0, t_old


def solve_rfpgwot(x, y, cfg: SolverConfig | None = None, problem: Problem | None = None) -> Solution:
    """Align two embedding sequences.

    Each outer step builds the fused cost from the structure gradient at the
    current plan, forms the Gibbs kernel and rescales it. A candidate plan
    that does not lower the objective is replaced by the best point on the
    segment towards it (``rho > 0`` only; with ``rho = 0`` there is nothing
    to linearize and a single exact pass is returned). With the
    ``plan_argmax`` policy the ridge center moves to the current plan's
    argmax whenever that does not raise the objective.
    """
    cfg = cfg or SolverConfig()
    problem = problem or build_problem(x, y, cfg)
    rcfg = problem.cfg
    n, m = problem.n, problem.m
    center = default_center(n, m)

    def phi_at(step):
        return anneal_phi(step, rcfg.outer_max) if rcfg.anneal else rcfg.phi

    t = problem.prior(center, phi_at(0))
    if math.isinf(rcfg.tau):
        # balanced marginals are hard constraints: start from a feasible plan
        t = unbalanced_sinkhorn(t, problem.alpha, problem.beta, 1.0, 1000, 1e-12)[2]
    current = objective(t, problem, center, phi_at(0))
    trace = [current]
    residual_log: list[list[float]] = []
    gammas: list[float] = []
    converged = False
    u = np.ones(problem.shape[0])
    v = np.ones(problem.shape[1])
    steps = 0
    for s in range(rcfg.outer_max):
        phi = phi_at(s)
        u, v, t_new, residuals = inner_solve(problem, t, center, phi)
        residual_log.append(residuals)
        steps = s + 1
        if rcfg.rho == 0:
            t = t_new
            current = objective(t, problem, center, phi)
            trace.append(current)
            converged = True
            break
        if rcfg.anneal:
            current = objective(t, problem, center, phi)
        candidate = objective(t_new, problem, center, phi)
        if candidate.total <= current.total:
            t, new, gamma = t_new, candidate, 1.0
        else:
            gamma, t = _line_search(problem, t, t_new, current.total, center, phi)
            new = objective(t, problem, center, phi)
        gammas.append(gamma)
        if rcfg.center_policy == "plan_argmax":
            moved = _plan_argmax(t, n, m)
            if moved != center:
                shifted = objective(t, problem, moved, phi)
                if shifted.total <= new.total:
                    center, new = moved, shifted
        prev_total = current.total
        current = new
        trace.append(current)
        decrease = (prev_total - current.total) / max(abs(prev_total), np.finfo(float).tiny)
        if decrease <= rcfg.outer_tol:
            converged = True
            break
    if not converged:
        logger.info("outer loop stopped after %d steps without meeting outer_tol", steps)
    return Solution(
        plan=TransportPlan(t, n, m),
        u=u,
        v=v,
        objective_trace=trace,
        inner_residuals=residual_log,
        converged=converged,
        outer_steps_used=steps,
        center=center,
        line_search_steps=gammas,
    )


# --- background routing and baseline --------------------------------------------


def assign_virtual(plan, zeta: float, normalize: bool = True):
    """Flag rows/columns whose best real match probability is below ``zeta``.

    With ``normalize`` the plan is first turned into matching probabilities:
    row ``i`` is divided by its total mass (virtual column included), and
    symmetrically for columns. Returns boolean masks over real rows and
    real columns; a flagged frame belongs to the virtual sink.
    """
    if isinstance(plan, TransportPlan):
        t, n, m = plan.data, plan.n_real, plan.m_real
    else:
        t = np.asarray(plan, dtype=float)
        n, m = t.shape[0] - 1, t.shape[1] - 1
    rows = t[:n]
    cols = t[:, :m]
    if normalize:
        rs = rows.sum(1, keepdims=True)
        cs = cols.sum(0, keepdims=True)
        rows = np.divide(rows, rs, out=np.zeros_like(rows), where=rs > 0)
        cols = np.divide(cols, cs, out=np.zeros_like(cols), where=cs > 0)
    row_best = rows[:, :m].max(1) if m > 0 else np.zeros(n)
    col_best = cols[:n, :].max(0) if n > 0 else np.zeros(m)
    return row_best < zeta, col_best < zeta


def solve_entropic_kot(c, alpha, beta, epsilon: float = 0.07, max_iter: int = 1000, tol: float = 1e-12) -> Solution:
    """Balanced entropic OT with kernel ``exp(-C / epsilon)``."""
    if not epsilon > 0:
        raise ValueError("epsilon must be positive")
    cm = _mat(c)
    a = np.asarray(alpha, dtype=float)
    b = np.asarray(beta, dtype=float)
    if not math.isclose(a.sum(), b.sum(), rel_tol=1e-9):
        raise ValueError("entropic KOT needs balanced marginals")
    k = np.exp(np.clip(-cm / epsilon, -EXPONENT_CLAMP, EXPONENT_CLAMP))
    u, v, t, residuals = unbalanced_sinkhorn(k, a, b, 1.0, max_iter, tol)
    n, m = cm.shape
    t = np.maximum(t, 0.0)
    transport = float(np.sum(cm * t))
    ent = float(np.sum(kl_div(t, np.ones_like(t))))
    total = transport + epsilon * ent
    trace = [ObjectiveBreakdown(transport, 0.0, 0.0, ent, 0.0, 0.0, total)]
    return Solution(
        plan=TransportPlan(t, n, m),
        u=u,
        v=v,
        objective_trace=trace,
        inner_residuals=[residuals],
        converged=bool(residuals and residuals[-1] <= tol),
        outer_steps_used=1,
    )
