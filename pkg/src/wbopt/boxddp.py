"""Control-limited, feasibility-driven differential dynamic programming.

Generic trajectory optimizer over user-supplied differentiable dynamics and
costs with per-dimension control bounds. The backward pass solves a
box-constrained quadratic subproblem at every step (projected-Newton box QP),
so returned controls satisfy their bounds exactly; clamped coordinates get
zero feedback gain. Infeasible warm starts are handled through dynamics gaps
that the forward pass contracts by (1 - alpha) per accepted step.

Regularization is Levenberg-style and dual: a common factor is added both to
Quu and to the state term (through Vxx when forming Quu/Qux), scaled x10 on
failure and /2 on acceptance. Line-search step lengths are {1, 1/2, ...,
2^-10}; a candidate is accepted when the actual-vs-expected cost-reduction
ratio clears the configured band and the total cost does not increase.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np


class NonFiniteError(RuntimeError):
    """Non-finite state, cost or derivative; the message names the step."""


class NotPsdError(RuntimeError):
    """Hessian not positive definite after maximum regularization."""


@dataclass
class OcProblem:
    """Discrete-time optimal-control problem over horizon N.

    Callbacks receive the step index k (terminal callbacks do not). Cost
    derivatives follow the (lx, lu, lxx, luu, lux) convention with lux of
    shape (nu, nx). Control bounds may contain +/-inf entries.
    """

    nx: int
    nu: int
    horizon: int
    dynamics: Callable
    dynamics_derivs: Callable
    cost: Callable
    cost_derivs: Callable
    terminal_cost: Callable
    terminal_derivs: Callable
    u_min: np.ndarray | None = None
    u_max: np.ndarray | None = None
    strict: bool = False
    # Optional vectorized callbacks over step batches; semantics must match
    # the per-step ones (the solver falls back to those when absent).
    cost_batch: Callable | None = None
    cost_derivs_batch: Callable | None = None
    dynamics_batch: Callable | None = None

    def __post_init__(self):
        if self.horizon < 1:
            raise ValueError("horizon must be >= 1")
        if self.u_min is None:
            self.u_min = np.full(self.nu, -np.inf)
        if self.u_max is None:
            self.u_max = np.full(self.nu, np.inf)
        self.u_min = np.asarray(self.u_min, dtype=float)
        self.u_max = np.asarray(self.u_max, dtype=float)
        if not np.all(self.u_min < self.u_max):
            raise ValueError("u_min must be < u_max elementwise")
        if self.strict:
            audit_derivatives(self)

    @property
    def bounded(self) -> bool:
        return bool(np.any(np.isfinite(self.u_min)) or np.any(np.isfinite(self.u_max)))


@dataclass
class SolveStats:
    iterations: int = 0
    final_cost: float = float("nan")
    gap_norm: float = float("nan")
    regularization: float = float("nan")
    converged: bool = False
    grad_norm: float = float("nan")
    accepted_ratios: list = field(default_factory=list)
    cost_trace: list = field(default_factory=list)  # cost after each accepted step
    gap_trace: list = field(default_factory=list)


@dataclass
class Trajectory:
    states: np.ndarray  # (N+1, nx)
    controls: np.ndarray  # (N, nu)
    stats: SolveStats


@dataclass
class SolverOptions:
    max_iterations: int = 200
    tol_cost: float = 1e-9
    tol_grad: float = 1e-9
    tol_gap: float = 1e-8
    reg_init: float = 1e-6
    reg_min: float = 1e-9
    reg_max: float = 1e9
    ratio_min: float = 0.1
    ratio_max: float = float("inf")
    n_alphas: int = 11


@dataclass
class BoxQpResult:
    x: np.ndarray
    free: np.ndarray  # bool mask
    chol_free: np.ndarray | None  # lower Cholesky factor of H[free][:, free]
    proj_grad_norm: float
    iterations: int
    converged: bool


def box_qp(H: np.ndarray, g: np.ndarray, lb: np.ndarray, ub: np.ndarray,
           x_init: np.ndarray, *, tol: float = 1e-9, max_iter: int = 100) -> BoxQpResult:
    """Projected-Newton solver for min 0.5 x'Hx + g'x s.t. lb <= x <= ub.

    H must be symmetric PSD (regularized upstream; raises NotPsdError
    otherwise). Returns the solution, the free/clamped partition and the
    Cholesky factor of the free block for downstream gain computation.
    """
    n = g.shape[0]
    x = np.clip(x_init, lb, ub)
    # Fast path: when the unconstrained Newton point is interior, it is the
    # solution (the common case for rarely-binding bounds).
    try:
        L = np.linalg.cholesky(H)
    except np.linalg.LinAlgError:
        raise NotPsdError("box-QP Hessian is not positive definite")
    xn = -_chol_solve(L, g)
    if np.all(xn > lb) and np.all(xn < ub):
        return BoxQpResult(xn, np.ones(n, dtype=bool), L,
                           float(np.linalg.norm(g + H @ xn)), 0, True)
    free = np.ones(n, dtype=bool)
    chol = None
    for it in range(max_iter):
        grad = g + H @ x
        at_lo = (x <= lb) & (grad > 0)
        at_hi = (x >= ub) & (grad < 0)
        clamped = at_lo | at_hi
        free = ~clamped
        pg = np.where(clamped, 0.0, grad)
        pg_norm = float(np.linalg.norm(pg))
        if pg_norm <= tol:
            chol = _chol_free(H, free)
            return BoxQpResult(x, free, chol, pg_norm, it, True)
        if not free.any():
            return BoxQpResult(x, free, None, pg_norm, it, True)
        chol = _chol_free(H, free)
        dx = np.zeros(n)
        rhs = grad[free]
        dx[free] = -_chol_solve(chol, rhs)

        accepted = False
        step = 1.0
        f0 = 0.5 * x @ H @ x + g @ x
        for _ in range(20):
            xc = np.clip(x + step * dx, lb, ub)
            fc = 0.5 * xc @ H @ xc + g @ xc
            if fc <= f0 + 0.01 * grad @ (xc - x):
                x = xc
                accepted = True
                break
            step *= 0.5
        if not accepted:
            break
    grad = g + H @ x
    clamped = ((x <= lb) & (grad > 0)) | ((x >= ub) & (grad < 0))
    pg = np.where(clamped, 0.0, grad)
    free = ~clamped
    return BoxQpResult(x, free, _chol_free(H, free), float(np.linalg.norm(pg)),
                       max_iter, float(np.linalg.norm(pg)) <= tol)


def _chol_free(H: np.ndarray, free: np.ndarray) -> np.ndarray | None:
    if not free.any():
        return None
    try:
        return np.linalg.cholesky(H[np.ix_(free, free)])
    except np.linalg.LinAlgError:
        raise NotPsdError("box-QP Hessian free block is not positive definite")


def _chol_solve(L: np.ndarray, b: np.ndarray) -> np.ndarray:
    y = np.linalg.solve(L, b if b.ndim > 1 else b[:, None])
    z = np.linalg.solve(L.T, y)
    return z if b.ndim > 1 else z[:, 0]


def rollout(problem: OcProblem, x0: np.ndarray,
            controls: np.ndarray) -> tuple[np.ndarray, float]:
    """Sequential dynamics application; cost is the exact sum of step costs
    plus the terminal cost."""
    N = problem.horizon
    xs = np.zeros((N + 1, problem.nx))
    xs[0] = x0
    total = 0.0
    for k in range(N):
        total += problem.cost(k, xs[k], controls[k])
        xs[k + 1] = problem.dynamics(k, xs[k], controls[k])
        if not np.all(np.isfinite(xs[k + 1])):
            raise NonFiniteError(f"non-finite state at step {k + 1}")
    total += problem.terminal_cost(xs[N])
    if not np.isfinite(total):
        raise NonFiniteError("non-finite cost")
    return xs, float(total)


def audit_derivatives(problem: OcProblem, *, rng: np.random.Generator | None = None,
                      n_points: int = 5, rtol: float = 1e-4, scale: float = 1.0) -> None:
    """Check fx, fu and cost gradients against central finite differences.

    Raises ValueError on disagreement beyond `rtol` relative (strict mode).
    """
    rng = rng or np.random.default_rng(0)
    h = 1e-6
    for _ in range(n_points):
        k = int(rng.integers(0, problem.horizon))
        x = rng.normal(0, scale, problem.nx)
        u = np.clip(rng.normal(0, scale, problem.nu), problem.u_min, problem.u_max)
        fx, fu = problem.dynamics_derivs(k, x, u)
        lx, lu, *_ = problem.cost_derivs(k, x, u)
        for i in range(problem.nx):
            d = np.zeros(problem.nx)
            d[i] = h
            col = (problem.dynamics(k, x + d, u) - problem.dynamics(k, x - d, u)) / (2 * h)
            _check_close(fx[:, i], col, rtol, f"fx[:,{i}] at step {k}")
            gi = (problem.cost(k, x + d, u) - problem.cost(k, x - d, u)) / (2 * h)
            _check_close(lx[i], gi, rtol, f"lx[{i}] at step {k}")
        for i in range(problem.nu):
            d = np.zeros(problem.nu)
            d[i] = h
            col = (problem.dynamics(k, x, u + d) - problem.dynamics(k, x, u - d)) / (2 * h)
            _check_close(fu[:, i], col, rtol, f"fu[:,{i}] at step {k}")
            gi = (problem.cost(k, x, u + d) - problem.cost(k, x, u - d)) / (2 * h)
            _check_close(lu[i], gi, rtol, f"lu[{i}] at step {k}")


def _check_close(a, b, rtol, what):
    a = np.atleast_1d(np.asarray(a, dtype=float))
    b = np.atleast_1d(np.asarray(b, dtype=float))
    denom = max(1.0, float(np.max(np.abs(a))), float(np.max(np.abs(b))))
    err = float(np.max(np.abs(a - b))) / denom
    if err > rtol:
        raise ValueError(f"derivative audit failed for {what}: relative error {err:.2e}")


def solve(problem: OcProblem, x0: np.ndarray,
          warm_start: Trajectory | None = None,
          options: SolverOptions | None = None) -> Trajectory:
    """Solve the problem; deterministic for identical inputs.

    Accepts infeasible warm starts (states inconsistent with controls); the
    dynamics-gap norm contracts across accepted iterations and is below
    options.tol_gap at convergence. Returned controls are within bounds
    exactly. On iteration exhaustion the best-so-far trajectory is returned
    with converged=False.
    """
    opt = options or SolverOptions()
    x0 = np.asarray(x0, dtype=float)
    if x0.shape != (problem.nx,):
        raise ValueError(f"x0 must have dim {problem.nx}")
    N = problem.horizon
    if warm_start is not None:
        xs = warm_start.states.copy()
        us = np.clip(warm_start.controls.copy(), problem.u_min, problem.u_max)
    else:
        us = np.zeros((N, problem.nu))
        xs, _ = rollout(problem, x0, us)

    cost, xnext = _trajectory_cost(problem, xs, us)
    gaps = _compute_gaps(x0, xs, xnext)
    gap_norm = float(np.linalg.norm(gaps.ravel()))

    reg = opt.reg_init
    alphas = 0.5 ** np.arange(opt.n_alphas)
    stats = SolveStats(regularization=reg)
    stall = 0

    for it in range(opt.max_iterations):
        stats.iterations = it + 1
        feasible = gap_norm <= opt.tol_gap
        # Backward pass, bumping regularization until the QPs stay PSD.
        while True:
            try:
                k_ff, K, dg, dq, grad_norm = _backward(problem, xs, us, gaps, reg)
                break
            except NotPsdError:
                reg *= 10.0
                if reg > opt.reg_max:
                    raise NotPsdError("Hessian not PSD after max regularization")
        stats.grad_norm = grad_norm

        if grad_norm <= opt.tol_grad and feasible:
            stats.converged = True
            break

        accepted = False
        for alpha in alphas:
            try:
                xs_try, us_try, cost_try = _forward(problem, xs, us, gaps, k_ff, K, alpha)
            except NonFiniteError:
                continue
            expected = -(alpha * dg + 0.5 * alpha * alpha * dq)
            actual = cost - cost_try
            if feasible:
                if expected <= 0:
                    continue
                ratio = actual / expected
                if not (opt.ratio_min <= ratio <= opt.ratio_max):
                    continue
                stats.accepted_ratios.append(float(ratio))
            else:
                # Gap-closing step: require nonincreasing cost; the ratio
                # test is meaningless while the rollout is infeasible.
                if cost_try > cost:
                    continue
            xs, us = xs_try, us_try
            new_cost, xnext = _trajectory_cost(problem, xs, us)
            gaps = _compute_gaps(x0, xs, xnext)
            gap_norm = float(np.linalg.norm(gaps.ravel()))
            improvement = cost - new_cost
            cost = new_cost
            stats.cost_trace.append(cost)
            stats.gap_trace.append(gap_norm)
            reg = max(opt.reg_min, reg * 0.5)
            accepted = True
            break

        if not accepted:
            reg *= 10.0
            if reg > opt.reg_max:
                break
            continue

        # Small line-search steps can make a single improvement tiny without
        # optimality; stop on sustained stagnation of closed-gap iterates.
        if improvement <= opt.tol_cost and gap_norm <= opt.tol_gap:
            stall += 1
            if stall >= 3 or alpha == 1.0:
                stats.converged = True
                break
        else:
            stall = 0

    # Accepted iterates never increase the cost, so the last iterate is the
    # best-so-far. Once the gaps are closed, re-integrate the controls so the
    # returned states are the exact rollout and the cost matches it exactly.
    if gap_norm <= opt.tol_gap:
        xs, cost = rollout(problem, x0, us)
        gap_norm = 0.0
    stats.final_cost = cost
    stats.gap_norm = gap_norm
    stats.regularization = reg
    return Trajectory(states=xs, controls=us, stats=stats)


def _trajectory_cost(problem: OcProblem, xs: np.ndarray,
                     us: np.ndarray) -> tuple[float, np.ndarray]:
    N = problem.horizon
    if problem.cost_batch is not None:
        total = float(np.sum(problem.cost_batch(xs[:N], us)))
        if problem.dynamics_batch is not None:
            xnext = problem.dynamics_batch(xs[:N], us)
        else:
            xnext = np.array([problem.dynamics(k, xs[k], us[k]) for k in range(N)])
    else:
        total = 0.0
        xnext = np.zeros((N, problem.nx))
        for k in range(N):
            total += problem.cost(k, xs[k], us[k])
            xnext[k] = problem.dynamics(k, xs[k], us[k])
    total += problem.terminal_cost(xs[N])
    if not np.isfinite(total):
        raise NonFiniteError("non-finite trajectory cost")
    return float(total), xnext


def _compute_gaps(x0: np.ndarray, xs: np.ndarray, xnext: np.ndarray) -> np.ndarray:
    gaps = np.zeros_like(xs)
    gaps[0] = x0 - xs[0]
    gaps[1:] = xnext - xs[1:]
    return gaps


def _backward(problem: OcProblem, xs, us, gaps, reg):
    N = problem.horizon
    nx, nu = problem.nx, problem.nu
    k_ff = np.zeros((N, nu))
    K = np.zeros((N, nu, nx))
    lxN, lxxN = problem.terminal_derivs(xs[N])
    Vx = np.asarray(lxN, dtype=float)
    Vxx = np.asarray(lxxN, dtype=float)
    dg = 0.0
    dq = 0.0
    grad_sq = 0.0
    I_x = np.eye(nx)
    batch = None
    if problem.cost_derivs_batch is not None:
        batch = problem.cost_derivs_batch(xs[:N], us)
        if not np.all(np.isfinite(batch[0])):
            raise NonFiniteError("non-finite cost derivative")
    for k in range(N - 1, -1, -1):
        fx, fu = problem.dynamics_derivs(k, xs[k], us[k])
        if batch is not None:
            lx, lu, lxx, luu, lux = (b[k] for b in batch)
        else:
            lx, lu, lxx, luu, lux = problem.cost_derivs(k, xs[k], us[k])
        if not (np.all(np.isfinite(fx)) and np.all(np.isfinite(fu))
                and np.all(np.isfinite(lx)) and np.all(np.isfinite(lu))):
            raise NonFiniteError(f"non-finite derivative at step {k}")
        Vx_def = Vx + Vxx @ gaps[k + 1]
        Qx = lx + fx.T @ Vx_def
        Qu = lu + fu.T @ Vx_def
        Vxx_reg = Vxx + reg * I_x
        Qxx = lxx + fx.T @ Vxx @ fx
        Qux = lux + fu.T @ Vxx_reg @ fx
        Quu = luu + fu.T @ Vxx_reg @ fu
        Quu_reg = Quu + reg * np.eye(nu)

        lb = problem.u_min - us[k]
        ub = problem.u_max - us[k]
        qp = box_qp(Quu_reg, Qu, lb, ub, np.zeros(nu))
        k_ff[k] = qp.x
        if qp.free.any():
            K[k][qp.free] = -_chol_solve(qp.chol_free, Qux[qp.free])
        # First-order stationarity at the *current* control: coordinates
        # resting on a bound only count gradient pointing off the bound.
        at_lo = us[k] <= problem.u_min
        at_hi = us[k] >= problem.u_max
        pg = np.where(at_lo, np.minimum(Qu, 0.0),
                      np.where(at_hi, np.maximum(Qu, 0.0), Qu))
        grad_sq += float(pg @ pg)

        dg += float(k_ff[k] @ Qu)
        dq += float(k_ff[k] @ Quu @ k_ff[k])

        Kk = K[k]
        Vx = Qx + Kk.T @ Quu @ k_ff[k] + Kk.T @ Qu + Qux.T @ k_ff[k]
        Vxx = Qxx + Kk.T @ Quu @ Kk + Kk.T @ Qux + Qux.T @ Kk
        Vxx = 0.5 * (Vxx + Vxx.T)
    return k_ff, K, dg, dq, float(np.sqrt(grad_sq))


def _forward(problem: OcProblem, xs, us, gaps, k_ff, K, alpha):
    N = problem.horizon
    xs_try = np.zeros_like(xs)
    us_try = np.zeros_like(us)
    xs_try[0] = xs[0] + alpha * gaps[0]
    batched = problem.cost_batch is not None
    total = 0.0
    for k in range(N):
        u = us[k] + alpha * k_ff[k] + K[k] @ (xs_try[k] - xs[k])
        u = np.clip(u, problem.u_min, problem.u_max)
        us_try[k] = u
        if not batched:
            total += problem.cost(k, xs_try[k], u)
        xn = problem.dynamics(k, xs_try[k], u)
        xs_try[k + 1] = xn - (1.0 - alpha) * gaps[k + 1]
        if not np.all(np.isfinite(xs_try[k + 1])):
            raise NonFiniteError(f"non-finite state at step {k + 1}")
    if batched:
        total = float(np.sum(problem.cost_batch(xs_try[:N], us_try)))
    total += problem.terminal_cost(xs_try[N])
    if not np.isfinite(total):
        raise NonFiniteError("non-finite cost in forward pass")
    return xs_try, us_try, float(total)
