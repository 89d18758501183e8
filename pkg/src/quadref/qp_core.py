"""Dense convex QP solver with KKT-residual verification.

Problems are stated in the canonical form

    minimize    1/2 x' H x + g' x
    subject to  A x  = b
                C x <= d

with a symmetric positive-semidefinite H; C may be given sparse. The
solver is a primal active-set method. The equality constraints are
eliminated once through a QR-derived null-space basis and the whole
iteration runs in the reduced coordinates; every equality-constrained
subproblem on the working set is solved through a Schur complement
whose Cholesky factor is updated row by row as the set changes. The
reduction is cached and reused whenever consecutive solves share the
same hessian and equality-matrix arrays, which is what the
receding-horizon callers do.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from enum import Enum

import numpy as np
import scipy.sparse as sp
from scipy.linalg import cho_factor, cho_solve, solve_triangular

logger = logging.getLogger(__name__)

#: Tikhonov term added when the (reduced) Hessian is singular.
HESSIAN_REGULARIZATION = 1e-9

_DEFAULT_TOL = 1e-8
_DEFAULT_MAX_ITER = 200
_DUAL_TOL = 1e-10
_FEAS_TOL = 1e-7
_ACTIVE_TOL = 1e-10

# Problems whose hessian array was already validated, keyed by object
# identity; holding the reference keeps the id from being recycled.
_VALIDATED_HESSIANS: dict[int, np.ndarray] = {}


class ConfigurationError(ValueError):
    """Structurally invalid problem: bad dimensions or a non-PSD cost."""


class QpStatus(Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    MAX_ITER = "max_iter"


def _as_float_array(value, name: str) -> np.ndarray:
    arr = np.asarray(value, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise ConfigurationError(f"{name} contains non-finite entries")
    return arr


def _as_matrix(value, cols: int, name: str):
    """2-D float matrix; preserves identity (and sparsity) when already shaped."""
    if sp.issparse(value):
        if value.shape[1] != cols:
            raise ConfigurationError(f"{name} has {value.shape[1]} columns, expected {cols}")
        csr = value.tocsr()
        if csr.nnz and not np.all(np.isfinite(csr.data)):
            raise ConfigurationError(f"{name} contains non-finite entries")
        return csr
    arr = _as_float_array(value, name)
    if arr.ndim == 2 and arr.shape[1] == cols:
        return arr
    return arr.reshape(-1, cols)


def _as_vector(value, name: str) -> np.ndarray:
    arr = _as_float_array(value, name)
    if arr.ndim == 1:
        return arr
    return arr.reshape(-1)


@dataclass(frozen=True)
class QpProblem:
    """Canonical dense QP data. Inequalities follow ineq_matrix @ x <= ineq_rhs."""

    hessian: np.ndarray
    linear_cost: np.ndarray
    eq_matrix: np.ndarray
    eq_rhs: np.ndarray
    ineq_matrix: np.ndarray
    ineq_rhs: np.ndarray

    def __post_init__(self):
        h_in = self.hessian if isinstance(self.hessian, np.ndarray) else None
        revalidate = h_in is None or _VALIDATED_HESSIANS.get(id(h_in)) is not h_in
        h = _as_float_array(self.hessian, "hessian")
        g = _as_vector(self.linear_cost, "linear_cost")
        if h.ndim != 2 or h.shape[0] != h.shape[1]:
            raise ConfigurationError(f"hessian must be square, got {h.shape}")
        n = h.shape[0]
        if g.shape[0] != n:
            raise ConfigurationError(f"linear_cost has length {g.shape[0]}, expected {n}")
        a = _as_matrix(self.eq_matrix, n, "eq_matrix")
        if sp.issparse(a):
            a = a.toarray()
        b = _as_vector(self.eq_rhs, "eq_rhs")
        c = _as_matrix(self.ineq_matrix, n, "ineq_matrix")
        d = _as_vector(self.ineq_rhs, "ineq_rhs")
        if a.shape[0] != b.shape[0]:
            raise ConfigurationError(
                f"eq_matrix has {a.shape[0]} rows but eq_rhs has {b.shape[0]}"
            )
        if c.shape[0] != d.shape[0]:
            raise ConfigurationError(
                f"ineq_matrix has {c.shape[0]} rows but ineq_rhs has {d.shape[0]}"
            )
        if revalidate and n:
            scale = max(1.0, float(np.abs(h).max()) if h.size else 1.0)
            asymmetry = float(np.abs(h - h.T).max())
            if asymmetry > 1e-12 * scale:
                raise ConfigurationError("hessian is not symmetric within 1e-12")
            if asymmetry > 0.0:
                h = np.ascontiguousarray(0.5 * (h + h.T))
            # PSD check: Cholesky of H + 1e-9 I succeeds iff min eig > -1e-9.
            try:
                np.linalg.cholesky(h + HESSIAN_REGULARIZATION * np.eye(n))
            except np.linalg.LinAlgError:
                raise ConfigurationError("hessian is not positive semidefinite") from None
            if len(_VALIDATED_HESSIANS) > 16:
                _VALIDATED_HESSIANS.clear()
            _VALIDATED_HESSIANS[id(h)] = h
        object.__setattr__(self, "hessian", h)
        object.__setattr__(self, "linear_cost", g)
        object.__setattr__(self, "eq_matrix", a)
        object.__setattr__(self, "eq_rhs", b)
        object.__setattr__(self, "ineq_matrix", c)
        object.__setattr__(self, "ineq_rhs", d)

    @property
    def n(self) -> int:
        return self.hessian.shape[0]

    @property
    def n_eq(self) -> int:
        return self.eq_matrix.shape[0]

    @property
    def n_ineq(self) -> int:
        return self.ineq_matrix.shape[0]

    def ineq_dense(self) -> np.ndarray:
        if sp.issparse(self.ineq_matrix):
            return self.ineq_matrix.toarray()
        return self.ineq_matrix

    def cost(self, x: np.ndarray) -> float:
        x = np.asarray(x, dtype=float).reshape(-1)
        return float(0.5 * x @ self.hessian @ x + self.linear_cost @ x)


@dataclass
class QpSolution:
    x_opt: np.ndarray
    eq_duals: np.ndarray
    ineq_duals: np.ndarray
    status: QpStatus
    objective: float
    iterations: int = 0
    #: Residual infeasibility certificate (minimum achievable constraint
    #: violation from the phase-one subproblem) when status is INFEASIBLE.
    infeasibility: float | None = None
    #: Inequality rows active at the returned point; feed back as
    #: active_init to warm-start a structurally similar solve.
    active_set: tuple[int, ...] = ()


def kkt_residuals(problem: QpProblem, solution: QpSolution) -> tuple[float, float, float]:
    """Infinity norms of the stationarity, primal and complementarity blocks."""
    x = np.asarray(solution.x_opt, dtype=float).reshape(-1)
    if x.shape[0] != problem.n:
        raise ConfigurationError(f"x_opt has length {x.shape[0]}, expected {problem.n}")
    nu = np.asarray(solution.eq_duals, dtype=float).reshape(-1)
    lam = np.asarray(solution.ineq_duals, dtype=float).reshape(-1)
    if nu.shape[0] != problem.n_eq or lam.shape[0] != problem.n_ineq:
        raise ConfigurationError("dual vector dimensions do not match the problem")

    grad = problem.hessian @ x + problem.linear_cost
    if problem.n_eq:
        grad = grad + problem.eq_matrix.T @ nu
    if problem.n_ineq:
        grad = grad + problem.ineq_matrix.T @ lam
    stationarity = float(np.abs(grad).max()) if grad.size else 0.0

    primal = 0.0
    if problem.n_eq:
        primal = float(np.abs(problem.eq_matrix @ x - problem.eq_rhs).max())
    if problem.n_ineq:
        viol = problem.ineq_matrix @ x - problem.ineq_rhs
        primal = max(primal, float(max(0.0, viol.max())))

    complementarity = 0.0
    if problem.n_ineq:
        slack = problem.ineq_rhs - problem.ineq_matrix @ x
        complementarity = float(np.abs(lam * slack).max())
    return stationarity, primal, complementarity


@dataclass
class _Reduction:
    """Cached elimination of the equality constraints of one problem family."""

    hessian_id: int
    eq_id: int
    null_basis: np.ndarray            # columns span null(A), orthonormal
    q1: np.ndarray | None             # range-space basis of A' (full-rank path)
    r1: np.ndarray | None             # leading triangular factor of qr(A')
    reduced: np.ndarray               # Z' H Z
    reduced_chol: tuple | None        # cho_factor of Z' H Z when it is PD


class _WorkingSet:
    """Active rows with an incrementally maintained Schur-complement factor.

    For a PD reduced Hessian G, keeps Y = G^-1 Bw' and the Cholesky
    factor of S = Bw G^-1 Bw' in step with row additions and removals:
    an addition costs one G-solve plus a triangular solve, a removal a
    Givens sweep, and dual solves two triangular backsolves.
    """

    def __init__(self, chol, nz: int):
        self._chol = chol
        self._nz = nz
        self.rows: list[int] = []
        cap = 32
        self._bw = np.empty((cap, nz))
        self._y = np.empty((cap, nz))
        self._r = np.zeros((cap, cap))   # upper triangular, S = R' R

    def __len__(self) -> int:
        return len(self.rows)

    def _grow(self) -> None:
        cap = 2 * self._bw.shape[0]
        m = len(self.rows)
        for name in ("_bw", "_y"):
            new = np.empty((cap, self._nz))
            new[:m] = getattr(self, name)[:m]
            setattr(self, name, new)
        r_new = np.zeros((cap, cap))
        r_new[:m, :m] = self._r[:m, :m]
        self._r = r_new

    def add(self, i: int, reduced_row: np.ndarray) -> bool:
        """Append row i; returns False (no change) when it is linearly
        dependent on the current set."""
        m = len(self.rows)
        if m == self._bw.shape[0]:
            self._grow()
        y = cho_solve(self._chol, reduced_row, check_finite=False)
        s_nn = float(reduced_row @ y)
        if m:
            cross = self._bw[:m] @ y
            u = solve_triangular(
                self._r[:m, :m].T, cross, lower=True, check_finite=False
            )
            d_sq = s_nn - float(u @ u)
        else:
            cross = u = np.zeros(0)
            d_sq = s_nn
        if d_sq <= 1e-10 * max(s_nn, 1e-30):
            return False
        self._bw[m] = reduced_row
        self._y[m] = y
        self._r[:m, m] = u
        self._r[m, m] = math.sqrt(d_sq)
        self.rows.append(i)
        return True

    def drop(self, position: int) -> int:
        removed = self.rows.pop(position)
        m = len(self.rows) + 1
        j = position
        if j < m - 1:
            for mat in (self._bw, self._y):
                mat[j : m - 1] = mat[j + 1 : m]
        r = self._r
        r[:m, j : m - 1] = r[:m, j + 1 : m]
        # Re-triangularize the subdiagonal spike left by the deletion.
        for k in range(j, m - 1):
            a, b = r[k, k], r[k + 1, k]
            if abs(b) < 1e-300:
                continue
            hyp = math.hypot(a, b)
            c, s = a / hyp, b / hyp
            top = c * r[k, k : m - 1] + s * r[k + 1, k : m - 1]
            bot = -s * r[k, k : m - 1] + c * r[k + 1, k : m - 1]
            r[k, k : m - 1] = top
            r[k + 1, k : m - 1] = bot
        r[m - 1, : m - 1] = 0.0
        return removed

    def rebuild(self) -> bool:
        """Refactor S from scratch (numerical repair); False if singular."""
        m = len(self.rows)
        s_mat = self._bw[:m] @ self._y[:m].T
        try:
            factor = np.linalg.cholesky(0.5 * (s_mat + s_mat.T))
        except np.linalg.LinAlgError:
            return False
        self._r[:m, :m] = factor.T
        return True

    def bw_matrix(self) -> np.ndarray:
        return self._bw[: len(self.rows)]

    def y_matrix(self) -> np.ndarray:
        return self._y[: len(self.rows)]

    def solve_duals(self, rhs: np.ndarray) -> np.ndarray | None:
        m = len(self.rows)
        r = self._r[:m, :m]
        try:
            t = solve_triangular(r.T, rhs, lower=True, check_finite=False)
            lam = solve_triangular(r, t, check_finite=False)
        except (np.linalg.LinAlgError, ValueError):
            return None
        if not np.all(np.isfinite(lam)) or (lam.size and float(np.abs(lam).max()) > 1e14):
            return None
        return lam


class ActiveSetSolver:
    """Primal active-set solver for small dense convex QPs.

    Instances are independent and safe to use concurrently with each
    other; a single instance must not be shared across threads
    mid-solve. Reusing one instance across solves that share hessian
    and eq_matrix arrays (by identity) skips the QR/Cholesky setup.
    """

    def __init__(self, tol: float = _DEFAULT_TOL, max_iter: int = _DEFAULT_MAX_ITER):
        if tol <= 0:
            raise ConfigurationError("tol must be positive")
        self.tol = float(tol)
        self.max_iter = int(max_iter)
        self._cached: _Reduction | None = None

    # -- equality elimination -------------------------------------------------

    def _reduction(self, problem: QpProblem) -> _Reduction:
        cached = self._cached
        if (
            cached is not None
            and cached.hessian_id == id(problem.hessian)
            and cached.eq_id == id(problem.eq_matrix)
        ):
            return cached

        n, me = problem.n, problem.n_eq
        if me == 0:
            z = np.eye(n)
            q1 = r1 = None
        else:
            q, r = np.linalg.qr(problem.eq_matrix.T, mode="complete")
            diag = np.abs(np.diag(r[:me, :me]))
            scale = max(1.0, float(diag.max()) if diag.size else 1.0)
            if diag.size and diag.min() > 1e-12 * scale:
                q1 = q[:, :me]
                r1 = np.ascontiguousarray(r[:me, :me])
                z = np.ascontiguousarray(q[:, me:])
            else:
                # Rank-deficient equalities: fall back to an SVD null space.
                _, svals, vt = np.linalg.svd(problem.eq_matrix)
                rank = int(np.sum(svals > 1e-12 * max(1.0, float(svals[0]))))
                q1 = r1 = None
                z = np.ascontiguousarray(vt[rank:].T)

        reduced = z.T @ problem.hessian @ z if z.shape[1] else np.zeros((0, 0))
        reduced_chol = None
        if z.shape[1]:
            try:
                factor = cho_factor(reduced)
                pivots = np.abs(np.diag(factor[0]))
                # A vanishing pivot means the reduced Hessian is only
                # semidefinite; use saddle-point solves in that case.
                if pivots.min() > 1e-6 * max(pivots.max(), 1.0):
                    reduced_chol = factor
            except np.linalg.LinAlgError:
                reduced_chol = None

        reduction = _Reduction(
            hessian_id=id(problem.hessian),
            eq_id=id(problem.eq_matrix),
            null_basis=z,
            q1=q1,
            r1=r1,
            reduced=reduced,
            reduced_chol=reduced_chol,
        )
        self._cached = reduction
        return reduction

    def _particular_solution(self, problem: QpProblem, red: _Reduction) -> np.ndarray | None:
        """Minimum-norm x with A x = b, or None when the equalities are inconsistent."""
        if problem.n_eq == 0:
            return np.zeros(problem.n)
        if red.q1 is not None:
            y = solve_triangular(red.r1.T, problem.eq_rhs, lower=True, check_finite=False)
            x_p = red.q1 @ y
        else:
            x_p = np.linalg.lstsq(problem.eq_matrix, problem.eq_rhs, rcond=None)[0]
        resid = problem.eq_matrix @ x_p - problem.eq_rhs
        scale = 1.0 + float(np.abs(problem.eq_rhs).max()) if problem.eq_rhs.size else 1.0
        if float(np.abs(resid).max()) > 1e-8 * scale:
            return None
        return x_p

    # -- phase one ------------------------------------------------------------

    def _phase_one(self, problem: QpProblem, x_eq: np.ndarray) -> tuple[np.ndarray | None, float]:
        """Minimize the worst inequality violation over the equality manifold.

        Returns (feasible start, residual violation). The auxiliary
        problem has one extra variable bounding all violations, and its
        own start is feasible by construction, so the recursion is one
        level deep.
        """
        n, me, mi = problem.n, problem.n_eq, problem.n_ineq
        c_dense = problem.ineq_dense()
        h_aux = np.zeros((n + 1, n + 1))
        h_aux[-1, -1] = 1.0
        g_aux = np.zeros(n + 1)
        g_aux[-1] = 1.0
        a_aux = np.hstack([problem.eq_matrix, np.zeros((me, 1))])
        c_aux = np.zeros((mi + 1, n + 1))
        c_aux[:mi, :n] = c_dense
        c_aux[:mi, -1] = -1.0
        c_aux[-1, -1] = -1.0
        d_aux = np.concatenate([problem.ineq_rhs, [0.0]])
        aux = QpProblem(h_aux, g_aux, a_aux, problem.eq_rhs, c_aux, d_aux)

        t0 = max(0.0, float((c_dense @ x_eq - problem.ineq_rhs).max()))
        x0_aux = np.concatenate([x_eq, [t0]])
        sub = ActiveSetSolver(tol=self.tol, max_iter=max(self.max_iter, 4 * (mi + 2)))
        sol = sub.solve(aux, x0=x0_aux, _phase_one=True)
        if sol.status is not QpStatus.OPTIMAL:
            return None, float("inf")
        t_star = max(0.0, float(sol.x_opt[-1]))
        if t_star > _FEAS_TOL:
            return None, t_star
        return sol.x_opt[:n], t_star

    # -- main solve -----------------------------------------------------------

    def solve(
        self,
        problem: QpProblem,
        x0: np.ndarray | None = None,
        tol: float | None = None,
        max_iter: int | None = None,
        active_init=None,
        _phase_one: bool = False,
        _trace: list | None = None,
    ) -> QpSolution:
        """Solve the QP.

        An optional feasible x0 skips the phase-one start; active_init
        (row indices of a previous solution's working set) seeds the
        working set, which need not be tight at x0: the first subproblem
        step walks onto that face while feasibility is maintained.
        """
        tol = self.tol if tol is None else float(tol)
        max_iter = self.max_iter if max_iter is None else int(max_iter)
        n, me, mi = problem.n, problem.n_eq, problem.n_ineq
        red = self._reduction(problem)
        z_basis = red.null_basis
        nz = z_basis.shape[1]
        c_mat = problem.ineq_matrix

        def failure(status: QpStatus, x: np.ndarray, infeas: float | None = None) -> QpSolution:
            return QpSolution(
                x_opt=x,
                eq_duals=np.zeros(me),
                ineq_duals=np.zeros(mi),
                status=status,
                objective=problem.cost(x),
                iterations=0,
                infeasibility=infeas,
            )

        x_p = self._particular_solution(problem, red)
        if x_p is None:
            return failure(QpStatus.INFEASIBLE, np.zeros(n), infeas=float("inf"))

        # Feasible starting point (full coordinates).
        x_start = None
        if x0 is not None:
            cand = np.asarray(x0, dtype=float).reshape(-1)
            if cand.shape[0] != n:
                raise ConfigurationError(f"x0 has length {cand.shape[0]}, expected {n}")
            eq_ok = me == 0 or float(np.abs(problem.eq_matrix @ cand - problem.eq_rhs).max()) <= 1e-7
            in_ok = mi == 0 or float((c_mat @ cand - problem.ineq_rhs).max()) <= _FEAS_TOL
            if eq_ok and in_ok:
                x_start = cand
            else:
                logger.debug("warm start rejected (eq_ok=%s, ineq_ok=%s)", eq_ok, in_ok)
        if x_start is None:
            if mi == 0 or float((c_mat @ x_p - problem.ineq_rhs).max()) <= _FEAS_TOL:
                x_start = x_p
            elif _phase_one:
                return failure(QpStatus.INFEASIBLE, x_p)
            else:
                x_start, t_star = self._phase_one(problem, x_p)
                if x_start is None:
                    status = QpStatus.INFEASIBLE if np.isfinite(t_star) else QpStatus.MAX_ITER
                    return failure(status, x_p, infeas=t_star if np.isfinite(t_star) else None)

        # Everything below runs in the reduced coordinates z with
        # x = x_p + Z z; margins are maintained incrementally.
        z_cur = z_basis.T @ (x_start - x_p)
        grad_base = problem.hessian @ x_p + problem.linear_cost
        r1_full = -(z_basis.T @ grad_base) if nz else np.zeros(0)
        r1_scale = 1.0 + float(np.abs(r1_full).max()) if nz else 1.0

        if mi:
            c_red = np.asarray(c_mat @ z_basis) if nz else np.zeros((mi, 0))
            base_margin = problem.ineq_rhs - c_mat @ x_p
            if sp.issparse(c_mat):
                row_scale = abs(c_mat).max(axis=1).toarray().reshape(-1)
            else:
                row_scale = np.abs(c_mat).max(axis=1)
            c_norm = np.linalg.norm(c_red, axis=1) if nz else np.zeros(mi)
        else:
            c_red = np.zeros((0, nz))
            base_margin = np.zeros(0)
            row_scale = np.zeros(0)
            c_norm = np.zeros(0)
        # Margins are evaluated lazily: exact values at the reference
        # point plus a norm bound on the drift since the last refresh
        # prune the rows that could possibly block an iteration.
        margin_ref = base_margin - (c_red @ z_cur if nz and mi else 0.0)
        drift = 0.0

        if nz and red.reduced_chol is not None:
            z0 = cho_solve(red.reduced_chol, r1_full, check_finite=False)
        elif nz:
            z0 = np.linalg.lstsq(red.reduced, r1_full, rcond=None)[0]
            if float(np.abs(red.reduced @ z0 - r1_full).max()) > 1e-7 * r1_scale:
                z0 = None   # descent direction with no curvature: unbounded below
        else:
            z0 = np.zeros(0)

        pd_path = red.reduced_chol is not None
        work = _WorkingSet(red.reduced_chol, nz) if pd_path else None
        work_list: list[int] = []   # used by the saddle-point path

        def active_rows() -> list[int]:
            return work.rows if pd_path else work_list

        bz0: list[float] = []   # cached c_red[i] @ z0 per working-set row (PD path)

        def eqp_verified(z_new, lam, bw, rhs_w, scale) -> bool:
            return (
                float(np.abs(red.reduced @ z_new + bw.T @ lam - r1_full).max()) <= 1e-7 * scale
                and float(np.abs(bw @ z_new - rhs_w).max()) <= 1e-7 * scale
            )

        def solve_eqp(verify: bool) -> tuple[np.ndarray, np.ndarray] | None:
            """Reduced minimizer over the working set with its duals.

            Returns None for (near) dependent active rows, telling the
            caller to shed one. A singular reduced Hessian is resolved
            by minimum-norm solves, the same point selected by the
            small identity regularization.
            """
            active = active_rows()
            if nz == 0:
                return np.zeros(0), np.zeros(len(active))
            if not active:
                if z0 is None:
                    return None
                return z0, np.zeros(0)
            rhs_w = base_margin[active]
            if pd_path:
                lam = work.solve_duals(np.asarray(bz0) - rhs_w)
                if lam is None:
                    return None
                z_new = z0 - lam @ work.y_matrix()
                if verify:
                    scale = r1_scale + float(np.abs(rhs_w).max())
                    bw = work.bw_matrix()
                    if not eqp_verified(z_new, lam, bw, rhs_w, scale):
                        if not work.rebuild():
                            return None
                        lam = work.solve_duals(np.asarray(bz0) - rhs_w)
                        if lam is None:
                            return None
                        z_new = z0 - lam @ work.y_matrix()
                        if not eqp_verified(z_new, lam, bw, rhs_w, scale):
                            return None
                return z_new, lam
            # Semidefinite reduced Hessian: saddle-point system, direct
            # then minimum-norm least squares (only hit at small sizes).
            scale = r1_scale + float(np.abs(rhs_w).max())
            bw = c_red[active]
            na = len(active)
            kkt = np.zeros((nz + na, nz + na))
            kkt[:nz, :nz] = red.reduced
            kkt[:nz, nz:] = bw.T
            kkt[nz:, :nz] = bw
            rhs = np.concatenate([r1_full, rhs_w])

            def verified(sol_vec):
                z_new, lam = sol_vec[:nz], sol_vec[nz:]
                if not np.all(np.isfinite(sol_vec)):
                    return None
                if not eqp_verified(z_new, lam, bw, rhs_w, scale):
                    return None
                return z_new, lam

            try:
                result = verified(np.linalg.solve(kkt, rhs))
                if result is not None:
                    return result
            except np.linalg.LinAlgError:
                pass
            return verified(np.linalg.lstsq(kkt, rhs, rcond=None)[0])

        def try_add(i: int) -> bool:
            if float(np.abs(c_red[i]).max()) <= 1e-12 * (1.0 + row_scale[i]):
                return False   # constant on the equality manifold
            if pd_path:
                if work.add(i, c_red[i]):
                    bz0.append(float(c_red[i] @ z0))
                    return True
                return False
            work_list.append(i)
            return True

        # Working set: an independent subset of the caller-provided seed
        # followed by the rows tight at the start, so a carried-over set
        # is completed instead of being reassembled one row per iteration.
        in_work = np.zeros(mi, dtype=bool)
        if mi:
            seed = [int(i) for i in active_init if 0 <= int(i) < mi] if active_init is not None else []
            seed.extend(int(i) for i in np.where(margin_ref <= _ACTIVE_TOL)[0])
            for i in seed:
                if not in_work[i] and try_add(i):
                    in_work[i] = True

        iterations = 0
        status = QpStatus.MAX_ITER
        lam_active = np.zeros(len(active_rows()))
        # Past this point the heuristic pivoting has likely started to
        # cycle on a degenerate vertex; switch to Bland's smallest-index
        # rule, which terminates finitely.
        bland_after = max(nz + mi, 150)
        # Rows that cannot join the working set at the current iterate
        # (dependent); cleared as soon as the iterate moves.
        banned = np.zeros(mi, dtype=bool)

        def drop_at(pos: int, ban: bool = False) -> None:
            row = active_rows()[pos]
            in_work[row] = False
            if ban:
                banned[row] = True
            if pd_path:
                work.drop(pos)
                bz0.pop(pos)
            else:
                work_list.pop(pos)

        restarted = False
        while iterations < max_iter:
            iterations += 1
            if iterations == max(max_iter // 2, 50) and not restarted and pd_path and mi:
                # Likely trapped on a degenerate fan: rebuild the working
                # set from the rows tight at the current iterate.
                restarted = True
                while active_rows():
                    drop_at(len(active_rows()) - 1)
                banned[:] = False
                margin_now = base_margin - c_red @ z_cur
                drift = 0.0
                margin_ref = margin_now
                for i in np.where(margin_now <= _ACTIVE_TOL)[0]:
                    if try_add(int(i)):
                        in_work[int(i)] = True
            eqp = solve_eqp(verify=iterations % 32 == 0)
            if eqp is None:
                if not active_rows():
                    break   # unbounded or irrecoverably ill-posed subproblem
                if _trace is not None:
                    _trace.append(("dep", active_rows()[-1], 0.0))
                drop_at(len(active_rows()) - 1, ban=True)
                continue
            z_eqp, lam_active = eqp
            dz = z_eqp - z_cur
            z_scale = 1.0 + (float(np.abs(z_cur).max()) if nz else 0.0)

            if (float(np.abs(dz).max()) if nz else 0.0) <= 1e-11 * z_scale:
                z_cur = z_eqp
                if len(active_rows()) == 0 or lam_active.min() >= -_DUAL_TOL:
                    if pd_path and active_rows():
                        # Candidate optimum reached with cheap solves:
                        # confirm against the exact subsystem once.
                        confirmed = solve_eqp(verify=True)
                        if confirmed is None:
                            drop_at(len(active_rows()) - 1, ban=True)
                            continue
                        z_cur, lam_active = confirmed
                    status = QpStatus.OPTIMAL
                    break
                if iterations > bland_after:
                    # Bland: smallest row index among all negative duals.
                    pos = min(
                        (j for j in range(len(lam_active)) if lam_active[j] < -_DUAL_TOL),
                        key=lambda j: active_rows()[j],
                    )
                else:
                    # Most negative dual, smallest row index on ties.
                    worst = float(lam_active.min())
                    pos = min(
                        (j for j in range(len(lam_active)) if lam_active[j] <= worst + _DUAL_TOL),
                        key=lambda j: active_rows()[j],
                    )
                if _trace is not None:
                    _trace.append(("drop", active_rows()[pos], float(lam_active[pos])))
                drop_at(pos)
                continue

            # Largest feasible step toward the EQP minimizer; only rows
            # whose margin bound could be crossed are examined exactly.
            alpha = 1.0
            blocking = -1
            if mi:
                dz_norm = float(np.linalg.norm(dz))
                reach = c_norm * (drift + dz_norm)
                candidates = np.where(~in_work & ~banned & (margin_ref < reach))[0]
                if candidates.size > max(64, mi // 8) and drift > 0.0:
                    margin_ref = base_margin - c_red @ z_cur
                    drift = 0.0
                    reach = c_norm * dz_norm
                    candidates = np.where(~in_work & ~banned & (margin_ref < reach))[0]
                if candidates.size:
                    rows_sel = c_red[candidates]
                    advance = rows_sel @ dz
                    margin_sel = (
                        base_margin[candidates] - rows_sel @ z_cur
                        if drift > 0.0
                        else margin_ref[candidates]
                    )
                    step_scale = 1e-11 * (1.0 + float(np.abs(dz).max()))
                    ok = advance > step_scale
                    if ok.any():
                        ratios = margin_sel[ok] / advance[ok]
                        lowest = float(ratios.min())
                        if lowest < alpha - 1e-15:
                            # Smallest row index among tied minimal ratios.
                            best = int(np.where(ratios <= lowest + 1e-12)[0][0])
                            alpha = max(lowest, 0.0)
                            blocking = int(candidates[ok][best])
                drift += alpha * dz_norm
            z_cur = z_cur + alpha * dz
            if alpha > 1e-12 and banned.any():
                banned[:] = False   # the iterate moved; bans no longer apply
            if _trace is not None:
                _trace.append(("step", blocking, alpha))
            if blocking >= 0 and alpha < 1.0:
                if try_add(blocking):
                    in_work[blocking] = True
                else:
                    banned[blocking] = True

        final_rows = list(active_rows())
        if status is QpStatus.OPTIMAL and not pd_path and nz:
            # Singular reduced Hessian: among tied optima return the
            # minimum-norm representative (the point selected by the
            # identity regularization) by releasing weakly active rows.
            strict = [i for j, i in enumerate(final_rows) if lam_active[j] > tol]
            if len(strict) < len(final_rows):
                work_list[:] = strict
                polished = solve_eqp(verify=True)
                if polished is not None:
                    z_pol, lam_pol = polished
                    feas = mi == 0 or float((c_red @ z_pol - base_margin).max()) <= 1e-9
                    if feas and (lam_pol.size == 0 or lam_pol.min() >= -_DUAL_TOL):
                        z_cur, final_rows, lam_active = z_pol, strict, lam_pol

        x = x_p + z_basis @ z_cur if nz else x_p
        lam_full = np.zeros(mi)
        if final_rows and lam_active.size == len(final_rows):
            lam_full[final_rows] = lam_active

        # Equality duals from stationarity: A' nu = -(H x + g + C' lam).
        nu = np.zeros(me)
        if me:
            rhs = -(problem.hessian @ x + problem.linear_cost)
            if mi:
                rhs = rhs - c_mat.T @ lam_full
            if red.q1 is not None:
                nu = solve_triangular(red.r1, red.q1.T @ rhs, check_finite=False)
            else:
                nu = np.linalg.lstsq(problem.eq_matrix.T, rhs, rcond=None)[0]

        solution = QpSolution(
            x_opt=x,
            eq_duals=nu,
            ineq_duals=lam_full,
            status=status,
            objective=problem.cost(x),
            iterations=iterations,
            active_set=tuple(final_rows),
        )
        if status is QpStatus.OPTIMAL:
            residuals = kkt_residuals(problem, solution)
            if max(residuals) > tol:
                logger.warning("KKT residuals %s exceed tol %.1e; reporting MAX_ITER", residuals, tol)
                solution.status = QpStatus.MAX_ITER
        return solution


def solve(
    problem: QpProblem,
    tol: float = _DEFAULT_TOL,
    max_iter: int = _DEFAULT_MAX_ITER,
    x0: np.ndarray | None = None,
) -> QpSolution:
    """One-shot convenience wrapper around ActiveSetSolver."""
    return ActiveSetSolver(tol=tol, max_iter=max_iter).solve(problem, x0=x0)
