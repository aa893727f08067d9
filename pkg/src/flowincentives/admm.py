"""Operator-splitting solver for the congestion-aware incentive relaxation.

The binary offer assignment is relaxed to column-stochastic S in [0,1] and
split into consensus copies so every block update has a closed form:

    u      aggregate offer mass per (route, incentive) column, u = S 1
    W, H   copies of S carrying the column-sum and box/binary structure
    gamma  expected link volume per (time, link) row, gamma = A u + bg
    beta   slack in the budget row, c @ u + beta = budget

An optional concave regularizer with weight ``lambda_reg`` pushes the
entries of H toward {0, 1}; with weight zero the problem is convex and the
iteration is a plain two-block alternation whose block order is randomly
permuted each sweep. Seven dual vectors track the seven coupling
constraints; each dual ascent step adds rho times its residual exactly,
which the test suite asserts.

The update formulas come from differentiating the augmented Lagrangian
directly. In the u step the budget terms enter as
(-lam6 - rho * beta + rho * budget) * c; dropping rho on the beta and
budget terms is a common transcription slip that breaks the dual-update
identity, so keep the rho-scaled form.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DivergenceError, InputError
from .kernels import gamma_solve
from .lp import LinearProgram, solve_binary_mip

RESIDUAL_LABELS = (
    "offer_mass",  # ||S 1 - u||
    "column_sum",  # ||W^T 1 - 1||
    "demand",  # ||D u - q||
    "volume",  # ||A u + bg - gamma||
    "h_consensus",  # ||H - S||
    "budget",  # |c @ u + beta - budget|
    "w_consensus",  # ||W - S||
)


@dataclass
class AdmmConfig:
    """Penalty, regularization and stopping parameters.

    ``rho`` must differ from ``lambda_reg``: the H step divides by their
    difference. ``rho > lambda_reg`` keeps the H subproblem convex (interval
    projection); the ``rho < lambda_reg`` branch snaps H to the nearer of
    {0, 1} and is experimental. Iteration stops at ``max_iters`` or once all
    seven residual norms fall below ``residual_tol``.
    """

    rho: float = 1.0
    lambda_reg: float = 0.5
    max_iters: int = 5000
    residual_tol: float = 1e-4
    seed: int = 0
    init_jitter: float = 0.0

    def __post_init__(self):
        if self.rho <= 0:
            raise InputError("rho must be positive")
        if self.lambda_reg < 0:
            raise InputError("lambda_reg must be nonnegative")
        if self.rho == self.lambda_reg:
            raise InputError("rho and lambda_reg must differ (the H step divides by rho - lambda_reg)")
        if self.max_iters < 1:
            raise InputError("max_iters must be at least 1")
        if self.init_jitter < 0:
            raise InputError("init_jitter must be nonnegative")


@dataclass
class AdmmProblem:
    """Problem data shared by every iteration.

    ``a_matrix`` maps offer-column mass to expected (time, link) volume,
    ``d_matrix`` maps columns to OD pairs, ``columns`` lists each driver's
    allowed columns, ``t0_row``/``w_row`` carry per-row BPR parameters, and
    ``background`` is fixed non-decision volume added to A @ u.
    """

    a_matrix: np.ndarray
    d_matrix: np.ndarray
    costs: np.ndarray
    q: np.ndarray
    budget: float
    t0_row: np.ndarray
    w_row: np.ndarray
    columns: list
    background: np.ndarray = None

    def __post_init__(self):
        self.a_matrix = np.asarray(self.a_matrix, dtype=float)
        self.d_matrix = np.asarray(self.d_matrix, dtype=float)
        self.costs = np.asarray(self.costs, dtype=float)
        self.q = np.asarray(self.q, dtype=float)
        self.t0_row = np.asarray(self.t0_row, dtype=float)
        self.w_row = np.asarray(self.w_row, dtype=float)
        rows, cols = self.a_matrix.shape
        if self.d_matrix.shape[1] != cols or self.costs.shape != (cols,):
            raise InputError("column dimensions disagree")
        if self.d_matrix.shape[0] != self.q.shape[0]:
            raise InputError("demand vector must have one entry per OD pair")
        if self.t0_row.shape != (rows,) or self.w_row.shape != (rows,):
            raise InputError("per-row link parameters must match the volume rows")
        if self.budget < 0:
            raise InputError("budget must be nonnegative")
        if self.background is None:
            self.background = np.zeros(rows)
        self.background = np.asarray(self.background, dtype=float)
        if self.background.shape != (rows,):
            raise InputError("background volume must have one entry per volume row")

    @property
    def num_columns(self):
        return self.a_matrix.shape[1]

    @property
    def num_drivers(self):
        return len(self.columns)


@dataclass
class AdmmState:
    u: np.ndarray
    s_mat: np.ndarray
    w_mat: np.ndarray
    h_mat: np.ndarray
    gamma: np.ndarray
    beta: float
    lam1: np.ndarray
    lam2: np.ndarray
    lam3: np.ndarray
    lam4: np.ndarray
    lam5: np.ndarray
    lam6: float
    lam7: np.ndarray
    iteration: int = 0
    residual_history: list = field(default_factory=list)
    objective_history: list = field(default_factory=list)


@dataclass
class AdmmResult:
    u: np.ndarray
    s_relaxed: np.ndarray
    residuals: np.ndarray  # iterations x 7
    objectives: np.ndarray
    iterations: int
    converged: bool
    state: AdmmState


def initial_state(problem, jitter=0.0, seed=0):
    """Uniform offer mass over each driver's own columns; duals at zero.

    A positive ``jitter`` perturbs the per-driver mass (renormalized) with a
    seeded draw. The regularized problem has symmetric stationary ridges
    whenever offer columns are interchangeable; starting exactly on one
    keeps the iteration there, so restarts break the tie at the start.
    """
    n_cols = problem.num_columns
    n_drivers = problem.num_drivers
    s_mat = np.zeros((n_cols, n_drivers))
    rng = np.random.default_rng(seed + 7)
    for n, allowed in enumerate(problem.columns):
        mass = np.full(len(allowed), 1.0 / len(allowed))
        if jitter > 0:
            mass = mass + rng.uniform(0.0, jitter, size=len(allowed))
            mass /= mass.sum()
        s_mat[allowed, n] = mass
    u = s_mat.sum(axis=1)
    gamma = problem.a_matrix @ u + problem.background
    beta = max(0.0, problem.budget - float(problem.costs @ u))
    k = problem.q.shape[0]
    rows = problem.a_matrix.shape[0]
    return AdmmState(
        u=u,
        s_mat=s_mat,
        w_mat=s_mat.copy(),
        h_mat=s_mat.copy(),
        gamma=gamma,
        beta=beta,
        lam1=np.zeros(n_cols),
        lam2=np.zeros(n_drivers),
        lam3=np.zeros(k),
        lam4=np.zeros(rows),
        lam5=np.zeros((n_cols, n_drivers)),
        lam6=0.0,
        lam7=np.zeros((n_cols, n_drivers)),
    )


def build_u_factor(problem):
    """Inverse of I + D^T D + A^T A + c c^T, constant across iterations."""
    n_cols = problem.num_columns
    m = (
        np.eye(n_cols)
        + problem.d_matrix.T @ problem.d_matrix
        + problem.a_matrix.T @ problem.a_matrix
        + np.outer(problem.costs, problem.costs)
    )
    return np.linalg.inv(m)


def u_update(state, problem, rho, u_factor):
    p = problem
    rhs = (
        (state.lam1 - p.d_matrix.T @ state.lam3 - p.a_matrix.T @ state.lam4 - state.lam6 * p.costs)
        / rho
        + state.s_mat.sum(axis=1)
        + p.d_matrix.T @ p.q
        + p.a_matrix.T @ (state.gamma - p.background)
        + (p.budget - state.beta) * p.costs
    )
    return u_factor @ rhs


def w_update(s_mat, lam2, lam7, rho):
    """Closed form for the column-sum copy; rank-one inverse applied in place."""
    m = s_mat.shape[0]
    g = 1.0 + s_mat - (lam7 + lam2[None, :]) / rho
    return g - g.sum(axis=0, keepdims=True) / (m + 1.0)


def h_update(s_mat, lam5, rho, lambda_reg):
    """Box projection when rho > lambda_reg, nearest-binary snap otherwise.

    Ties at one half snap to 1.
    """
    x = (rho * s_mat - lam5 - lambda_reg / 2.0) / (rho - lambda_reg)
    if rho > lambda_reg:
        return np.clip(x, 0.0, 1.0)
    return np.where(x >= 0.5, 1.0, 0.0)


def s_update(u, h_mat, w_mat, lam1, lam5, lam7, rho):
    """Assignment update via the rank-one inverse of (rho 1 1^T + 2 rho I).

    Columns decouple given one shared row-sum reduction, so the work is a
    single dense expression.
    """
    n = h_mat.shape[1]
    g = u[:, None] + (lam5 + lam7 - lam1[:, None]) / rho + h_mat + w_mat
    return (g - g.sum(axis=1, keepdims=True) / (n + 2.0)) / 2.0


def gamma_subproblem(a_u, lam4, rho, t0, w):
    """Prox of v -> v * delay(v) at the current volume target, per row.

    Minimizes g * t0 (1 + 0.15 (g/w)^4) - lam4 * g + (rho/2)(a_u - g)^2 over
    g >= 0; the derivative is strictly increasing so the safeguarded Newton
    in the kernel module always lands within 1e-10 of the root (or at 0).
    """
    scalar = np.isscalar(a_u) or np.ndim(a_u) == 0
    out = gamma_solve(a_u, lam4, rho, t0, w)
    return float(out[0]) if scalar else out


def beta_update(u, lam6, rho, costs, budget):
    return max(0.0, budget - float(costs @ u) - lam6 / rho)


def residual_vectors(state, problem):
    """The seven coupling residuals at the state's current primal values."""
    p = problem
    return (
        state.s_mat.sum(axis=1) - state.u,
        state.w_mat.sum(axis=0) - 1.0,
        p.d_matrix @ state.u - p.q,
        p.a_matrix @ state.u + p.background - state.gamma,
        state.h_mat - state.s_mat,
        np.array([float(p.costs @ state.u) + state.beta - p.budget]),
        state.w_mat - state.s_mat,
    )


def residual_norms(state, problem):
    return np.array([np.linalg.norm(r) for r in residual_vectors(state, problem)])


def relaxed_objective(u, problem):
    """Total travel time of the expected volumes implied by offer mass u."""
    v = problem.a_matrix @ u + problem.background
    v = np.maximum(v, 0.0)
    return float(np.sum(v * problem.t0_row * (1.0 + 0.15 * (v / problem.w_row) ** 4)))


def _check_finite(state, iteration):
    for block, value in (
        ("u", state.u),
        ("S", state.s_mat),
        ("W", state.w_mat),
        ("H", state.h_mat),
        ("gamma", state.gamma),
        ("beta", np.array([state.beta])),
    ):
        if not np.all(np.isfinite(value)):
            raise DivergenceError(block, iteration)


def admm_iterate(state, problem, cfg, u_factor=None, order=(0, 1)):
    """One full sweep: both primal blocks in the given order, then all duals.

    Block 0 updates {u, W, H}; block 1 updates {S, gamma, beta}. Every
    update reads the most recent values of the other variables. Appends the
    seven residual norms and the relaxed objective to the state's history.
    """
    if u_factor is None:
        u_factor = build_u_factor(problem)
    rho = cfg.rho
    p = problem
    for block in order:
        if block == 0:
            state.u = u_update(state, p, rho, u_factor)
            state.w_mat = w_update(state.s_mat, state.lam2, state.lam7, rho)
            state.h_mat = h_update(state.s_mat, state.lam5, rho, cfg.lambda_reg)
        else:
            state.s_mat = s_update(
                state.u, state.h_mat, state.w_mat, state.lam1, state.lam5, state.lam7, rho
            )
            target = p.a_matrix @ state.u + p.background
            state.gamma = gamma_subproblem(target, state.lam4, rho, p.t0_row, p.w_row)
            state.beta = beta_update(state.u, state.lam6, rho, p.costs, p.budget)
    _check_finite(state, state.iteration)

    r1, r2, r3, r4, r5, r6, r7 = residual_vectors(state, p)
    state.lam1 = state.lam1 + rho * r1
    state.lam2 = state.lam2 + rho * r2
    state.lam3 = state.lam3 + rho * r3
    state.lam4 = state.lam4 + rho * r4
    state.lam5 = state.lam5 + rho * r5
    state.lam6 = state.lam6 + rho * float(r6[0])
    state.lam7 = state.lam7 + rho * r7

    state.iteration += 1
    norms = np.array([np.linalg.norm(r) for r in (r1, r2, r3, r4, r5, r6, r7)])
    state.residual_history.append(norms)
    state.objective_history.append(relaxed_objective(state.u, p))
    return state


def run_admm(problem, cfg=None):
    """Iterate to the relaxed solution; early exit once residuals pass tol.

    The order of the two primal blocks is permuted each sweep by a generator
    seeded from the config, so runs are reproducible.
    """
    cfg = cfg or AdmmConfig()
    state = initial_state(problem, jitter=cfg.init_jitter, seed=cfg.seed)
    u_factor = build_u_factor(problem)
    rng = np.random.default_rng(cfg.seed)
    converged = False
    for _ in range(cfg.max_iters):
        order = tuple(rng.permutation(2))
        admm_iterate(state, problem, cfg, u_factor, order)
        if np.max(state.residual_history[-1]) < cfg.residual_tol:
            converged = True
            break
    return AdmmResult(
        u=state.u.copy(),
        s_relaxed=state.s_mat.copy(),
        residuals=np.array(state.residual_history),
        objectives=np.array(state.objective_history),
        iterations=state.iteration,
        converged=converged,
        state=state,
    )


def _greedy_rounding_seed(u_star, demand, columns, costs, budget):
    """Feasible warm start: per-OD largest-remainder counts, then budget repair."""
    n_cols = u_star.size
    counts = np.zeros(n_cols, dtype=int)
    od_cols = {}
    for k in range(demand.q.size):
        cols = np.nonzero(demand.d_matrix[k] > 0)[0]
        od_cols[k] = cols
        target = np.clip(u_star[cols], 0.0, None)
        need = int(round(demand.q[k]))
        base = np.floor(target).astype(int)
        base = np.minimum(base, need)
        while base.sum() > need:  # guard against overshoot from u* noise
            base[np.argmax(base)] -= 1
        remainder = target - base
        order = np.argsort(-remainder, kind="stable")
        short = need - base.sum()
        for idx in order[:short]:
            base[idx] += 1
        counts[cols] = base
    # repair the budget by demoting the most expensive offers to $0
    zero_col = {k: od_cols[k][np.argmin(costs[od_cols[k]])] for k in od_cols}
    while counts @ costs > budget + 1e-9:
        paid = np.nonzero((counts > 0) & (costs > 0))[0]
        col = paid[np.argmax(costs[paid])]
        k = int(np.nonzero(demand.d_matrix[:, col])[0][0])
        counts[col] -= 1
        counts[zero_col[k]] += 1
    s_mat = np.zeros((n_cols, demand.num_drivers))
    remaining = counts.copy()
    for n, od in enumerate(demand.driver_to_od):
        for col in od_cols[od]:
            if remaining[col] > 0:
                s_mat[col, n] = 1.0
                remaining[col] -= 1
                break
    return s_mat


def round_assignment(u_star, demand, costs, budget, rel_gap=0.0, node_limit=20_000):
    """Nearest feasible binary assignment in L1 distance on column sums.

    Minimizes ||S 1 - u*||_1 subject to one offer per driver (inside the
    driver's own OD block), the budget row, and per-OD totals. The absolute
    values are linearized with auxiliary variables e >= +/-(S 1 - u*) and
    the model is solved by branch-and-bound, warm-started from a greedy
    largest-remainder rounding.
    """
    u_star = np.clip(np.asarray(u_star, dtype=float), 0.0, None)
    costs = np.asarray(costs, dtype=float)
    n_cols = u_star.size
    n_drivers = demand.num_drivers
    columns = [np.nonzero(demand.d_matrix[od] > 0)[0] for od in demand.driver_to_od]
    var_index = {}
    for n, cols in enumerate(columns):
        for col in cols:
            var_index[(n, int(col))] = len(var_index)
    n_bin = len(var_index)
    n_vars = n_bin + n_cols  # binaries then one e per column row

    c_vec = np.zeros(n_vars)
    c_vec[n_bin:] = 1.0
    a_eq = np.zeros((n_drivers, n_vars))
    for (n, col), j in var_index.items():
        a_eq[n, j] = 1.0
    b_eq = np.ones(n_drivers)
    rows = []
    rhs = []
    budget_row = np.zeros(n_vars)
    for (n, col), j in var_index.items():
        budget_row[j] = costs[col]
    rows.append(budget_row)
    rhs.append(budget)
    for r in range(n_cols):
        plus = np.zeros(n_vars)
        minus = np.zeros(n_vars)
        for (n, col), j in var_index.items():
            if col == r:
                plus[j] = 1.0
                minus[j] = -1.0
        plus[n_bin + r] = -1.0
        minus[n_bin + r] = -1.0
        rows.append(plus)
        rhs.append(u_star[r])
        rows.append(minus)
        rhs.append(-u_star[r])
    # drivers of one OD pair are interchangeable, which makes the search
    # tree factorially symmetric; force same-OD drivers to pick columns in
    # nondecreasing rank order so each column-count pattern has exactly one
    # representative (objective and column sums are unaffected)
    for n in range(n_drivers - 1):
        if demand.driver_to_od[n] != demand.driver_to_od[n + 1]:
            continue
        row = np.zeros(n_vars)
        for rank, col in enumerate(columns[n]):
            row[var_index[(n, int(col))]] = rank
            row[var_index[(n + 1, int(col))]] = -rank
        rows.append(row)
        rhs.append(0.0)
    # the per-driver sum-to-one rows cap the binaries, so no explicit x <= 1
    lp = LinearProgram(c=c_vec, a_ub=np.array(rows), b_ub=np.array(rhs), a_eq=a_eq, b_eq=b_eq)

    seed_s = _greedy_rounding_seed(u_star, demand, columns, costs, budget)
    x0 = np.zeros(n_vars)
    for (n, col), j in var_index.items():
        x0[j] = seed_s[col, n]
    x0[n_bin:] = np.abs(seed_s.sum(axis=1) - u_star)

    res = solve_binary_mip(
        lp,
        range(n_bin),
        rel_gap=rel_gap,
        node_limit=node_limit,
        initial_solution=x0,
        capped_by_structure=True,
    )
    if res.status == "infeasible":
        raise AssertionError(
            "rounding model infeasible; the $0 offer should always admit a solution"
        )
    s_mat = np.zeros((n_cols, n_drivers))
    for (n, col), j in var_index.items():
        s_mat[col, n] = round(res.x[j])
    row_mass = s_mat.sum(axis=0)
    if not np.all(row_mass == 1.0):
        raise AssertionError("rounded assignment lost the one-offer-per-driver structure")
    if float(costs @ s_mat.sum(axis=1)) > budget + 1e-6:
        raise AssertionError("rounded assignment exceeds the budget")
    if not np.allclose(demand.d_matrix @ s_mat.sum(axis=1), demand.q):
        raise AssertionError("rounded assignment broke the per-OD totals")
    return s_mat
