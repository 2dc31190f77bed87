"""Small dense semidefinite programs over Hermitian matrices.

Problem form::

    max / min  tr(X C)
    s.t.       tr(X A_k) == b_k     (equalities)
               tr(X G_j) <= c_j     (inequalities)
               X >= 0               (Hermitian PSD)

The complex problem is mapped to a real one through the embedding
``A -> [[Re A, -Im A], [Im A, Re A]]``, for which
``tr(emb(X) emb(A)) == 2 tr(X A)``; constraint matrices are halved so values
match the complex problem.  The real problem is solved by an
infeasible-start primal-dual path-following method (Nesterov-Todd scaling,
Mehrotra predictor-corrector).  Inequalities get nonnegative slacks, which
form a linear block of the cone.
"""
from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
import scipy.linalg as sla

from .errors import ValidationError
from .linalg import hermitian

log = logging.getLogger(__name__)

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
NUMERICAL_FAILURE = "numerical-failure"

MAX_ITER = 200
STEP_FRACTION = 0.98
DEFAULT_TOL = 1e-10
STALL_ITERS = 5
STALL_ACCEPT = 100.0


@dataclass(frozen=True)
class SdpProblem:
    objective: np.ndarray
    eq_constraints: tuple = ()
    ineq_constraints: tuple = ()
    sense: str = "max"

    def __post_init__(self):
        if self.sense not in ("max", "min"):
            raise ValidationError("sense must be 'max' or 'min'")
        c = hermitian(self.objective)
        n = c.shape[0]

        def check(cons, what):
            out = []
            for k, (a, b) in enumerate(cons):
                a = hermitian(a)
                if a.shape != (n, n):
                    raise ValidationError(f"{what} constraint {k} has shape {a.shape}, expected {(n, n)}")
                out.append((a, float(b)))
            return tuple(out)

        object.__setattr__(self, "objective", c)
        object.__setattr__(self, "eq_constraints", check(self.eq_constraints, "equality"))
        object.__setattr__(self, "ineq_constraints", check(self.ineq_constraints, "inequality"))

    @property
    def dim(self) -> int:
        return self.objective.shape[0]

    @property
    def constraint_matrices(self) -> list:
        return [a for a, _ in self.eq_constraints] + [g for g, _ in self.ineq_constraints]

    @property
    def rhs(self) -> np.ndarray:
        return np.array([b for _, b in self.eq_constraints] + [c for _, c in self.ineq_constraints])

    def to_json(self) -> str:
        """Debug dump for cross-checking with other solvers (not a stable format)."""

        def mat(a):
            return {"re": a.real.tolist(), "im": a.imag.tolist()}

        return json.dumps({
            "sense": self.sense,
            "objective": mat(self.objective),
            "eq": [{"A": mat(a), "b": b} for a, b in self.eq_constraints],
            "ineq": [{"G": mat(g), "c": c} for g, c in self.ineq_constraints],
        })


@dataclass(frozen=True)
class SdpSolution:
    """``duals`` follow the problem's constraint order (equalities first).

    With these duals the dual slack matrix is ``sum_k duals_k A_k - C`` for
    a max problem and ``C + sum_k duals_k A_k`` for a min problem; inequality
    duals are nonnegative.
    """

    x: np.ndarray
    duals: np.ndarray
    objective_value: float
    gap: float
    status: str
    iterations: int = 0
    slack: np.ndarray | None = None
    history: list = field(default_factory=list, repr=False, compare=False)

    @property
    def ok(self) -> bool:
        return self.status == OPTIMAL


class Iterate(NamedTuple):
    """Per-iteration record, in the problem's own objective sense."""

    primal_obj: float
    dual_obj: float
    primal_residual: float
    dual_residual: float
    mu: float


class Certificate(NamedTuple):
    primal_residuals: np.ndarray  # signed; inequality entries clipped at 0 from below
    max_primal_violation: float
    x_min_eig: float
    dual_slack: np.ndarray
    dual_slack_min_eig: float
    min_ineq_dual: float
    complementarity: float        # tr(X G)
    gap: float
    passed: bool
    failures: tuple


# ---------------------------------------------------------------------------
# complex <-> real embedding


def embed(a: np.ndarray) -> np.ndarray:
    """Real symmetric image ``[[Re A, -Im A], [Im A, Re A]]`` of Hermitian A."""
    re, im = a.real, a.imag
    return np.block([[re, -im], [im, re]])


def unembed(x: np.ndarray) -> np.ndarray:
    """Average the two conjugate blocks of a real 2n x 2n matrix back to C^{n x n}."""
    n = x.shape[0] // 2
    p = 0.5 * (x[:n, :n] + x[n:, n:])
    q = 0.5 * (x[n:, :n] - x[:n, n:])
    z = p + 1j * q
    return 0.5 * (z + z.conj().T)


# ---------------------------------------------------------------------------
# solver core


def _sym(a):
    return 0.5 * (a + a.T)


def _max_step(lam, d_scaled):
    """Largest a with diag(lam) + a * d_scaled >= 0."""
    s = 1.0 / np.sqrt(lam)
    m = d_scaled * s[:, None] * s[None, :]
    w = np.linalg.eigvalsh(_sym(m))[0]
    return np.inf if w >= 0 else -1.0 / w


def _max_step_lp(x, dx):
    neg = dx < 0
    if not np.any(neg):
        return np.inf
    return float(np.min(-x[neg] / dx[neg]))


class _RealSdp:
    """min <C, X> + 0 . s  s.t.  <A_k, X> + L_k . s = b_k,  X psd, s >= 0."""

    def __init__(self, c, a, lp, b):
        self.c = c
        self.a = a          # (m, n, n)
        self.lp = lp        # (m, p)
        self.b = b
        self.n = c.shape[0]
        self.m, self.p = lp.shape

        self.flat = a.reshape(self.m, -1)
        # diagonal constraints get a cheap Schur-complement path
        off = a.copy()
        off[:, np.arange(self.n), np.arange(self.n)] = 0.0
        self.is_diag = ~np.any(off, axis=(1, 2))
        self.dense_idx = np.flatnonzero(~self.is_diag)
        self.diag_idx = np.flatnonzero(self.is_diag)
        self.diags = np.einsum("kii->ki", a[self.diag_idx])

    def schur(self, w):
        """``M_kl = <A_k, W A_l W>``."""
        m = np.empty((self.m, self.m))
        di, de = self.diag_idx, self.dense_idx
        if di.size:
            m[np.ix_(di, di)] = self.diags @ (w * w) @ self.diags.T
        if de.size:
            waw = (w @ self.a[de] @ w).reshape(de.size, -1)
            m[np.ix_(de, de)] = self.flat[de] @ waw.T
            if di.size:
                diag_waw = waw[:, :: self.n + 1]
                cross = diag_waw @ self.diags.T
                m[np.ix_(de, di)] = cross
                m[np.ix_(di, de)] = cross.T
        return m

    def op(self, x, s):
        return self.flat @ x.ravel() + self.lp @ s

    def adj(self, y):
        return (y @ self.flat).reshape(self.n, self.n), self.lp.T @ y


def _run(prob: _RealSdp, tol, max_iter, start, on_iter):
    n, m, p = prob.n, prob.m, prob.p
    nu = n + p
    X, s, y, Z, z = start
    bnorm = 1.0 + np.linalg.norm(prob.b)
    cnorm = 1.0 + np.linalg.norm(prob.c)
    status = NUMERICAL_FAILURE
    best = None

    for it in range(max_iter + 1):
        aty, lty = prob.adj(y)
        rd = prob.c - Z - aty
        rd_lp = -z - lty
        rp = prob.b - prob.op(X, s)
        pobj = float(np.sum(prob.c * X))
        dobj = float(prob.b @ y)
        gap = float(np.sum(X * Z) + s @ z)
        mu = gap / nu
        pres = np.linalg.norm(rp) / bnorm
        dres = (np.linalg.norm(rd) + np.linalg.norm(rd_lp)) / cnorm
        rgap = abs(pobj - dobj) / (1.0 + abs(pobj) + abs(dobj))
        if on_iter is not None:
            on_iter(pobj, dobj, pres, dres, mu)
        err = max(pres, dres, rgap, gap / (1 + abs(pobj)))
        if best is None or err < best[0]:
            best = (err, it, X, s, y, Z, z)
        if err <= tol:
            status = OPTIMAL
            break
        if it - best[1] >= STALL_ITERS:
            log.debug("sdp: no progress for %d iterations", STALL_ITERS)
            break
        # unbounded dual ray => primal infeasible; unbounded primal ray => dual infeasible
        if dobj > 1e10 * (1 + abs(pobj)) and np.linalg.norm(rd) < 1e-8 * abs(dobj) + 1e-6:
            status = INFEASIBLE
            break
        if -pobj > 1e10 * (1 + abs(dobj)) and pres * bnorm < 1e-8 * abs(pobj):
            status = INFEASIBLE
            break
        if it == max_iter:
            break

        try:
            # Nesterov-Todd scaling W = R R^T with R^{-1} X R^{-T} = R^T Z R = diag(lam)
            lx = np.linalg.cholesky(X)
            lz = np.linalg.cholesky(Z)
            u, lam, vt = np.linalg.svd(lz.T @ lx)
            r = (lx @ vt.T) / np.sqrt(lam)
            rinv = (np.sqrt(lam)[:, None] * vt) @ sla.solve_triangular(lx, np.eye(n), lower=True)
        except np.linalg.LinAlgError:
            log.debug("sdp: scaling failed at iteration %d", it)
            break
        w = r @ r.T
        wlp = s / z
        rlp = np.sqrt(wlp)
        lam_lp = np.sqrt(s * z)

        schur = prob.schur(w) + (prob.lp * wlp) @ prob.lp.T
        schur = _sym(schur)
        try:
            fac = sla.cho_factor(schur, lower=True, check_finite=False)
            solve = lambda v: sla.cho_solve(fac, v, check_finite=False)  # noqa: E731
        except np.linalg.LinAlgError:
            lu = sla.lu_factor(schur + 1e-14 * np.trace(schur) / m * np.eye(m), check_finite=False)
            solve = lambda v: sla.lu_solve(lu, v, check_finite=False)  # noqa: E731

        wrdw = w @ rd @ w
        base = rp + prob.op(wrdw, wlp * rd_lp)
        denom = lam[:, None] + lam[None, :]

        def direction(rc, rc_lp):
            dc = 2.0 * rc / denom
            dc_lp = rc_lp / lam_lp
            rdr = _sym(r @ dc @ r.T)
            dy = solve(base - prob.op(rdr, rlp * dc_lp))
            aty_, lty_ = prob.adj(dy)
            dZ = _sym(rd - aty_)
            dz = rd_lp - lty_
            dX = _sym(rdr - w @ dZ @ w)
            ds = rlp * dc_lp - wlp * dz
            return dX, ds, dy, dZ, dz

        def scaled(dX, ds, dZ, dz):
            return _sym(rinv @ dX @ rinv.T), ds / rlp, _sym(r.T @ dZ @ r), dz * rlp

        def steps(dXs, dss, dZs, dzs):
            ap = min(_max_step(lam, dXs), _max_step_lp(lam_lp, dss))
            ad = min(_max_step(lam, dZs), _max_step_lp(lam_lp, dzs))
            return ap, ad

        # predictor
        lam2 = np.diag(-lam ** 2)
        dX, ds, dy, dZ, dz = direction(lam2, -lam_lp ** 2)
        dXs, dss, dZs, dzs = scaled(dX, ds, dZ, dz)
        ap, ad = steps(dXs, dss, dZs, dzs)
        ap, ad = min(1.0, ap), min(1.0, ad)
        mu_aff = (np.sum((X + ap * dX) * (Z + ad * dZ)) + (s + ap * ds) @ (z + ad * dz)) / nu
        sigma = min(1.0, max(0.0, mu_aff / mu)) ** 3

        # corrector
        cross = _sym(dXs @ dZs)
        rc = sigma * mu * np.eye(n) - np.diag(lam ** 2) - cross
        rc_lp = sigma * mu - lam_lp ** 2 - dss * dzs
        dX, ds, dy, dZ, dz = direction(rc, rc_lp)
        dXs, dss, dZs, dzs = scaled(dX, ds, dZ, dz)
        ap, ad = steps(dXs, dss, dZs, dzs)
        ap = min(1.0, STEP_FRACTION * ap)
        ad = min(1.0, STEP_FRACTION * ad)

        X = _sym(X + ap * dX)
        s = s + ap * ds
        y = y + ad * dy
        Z = _sym(Z + ad * dZ)
        z = z + ad * dz

    if status != OPTIMAL and best is not None and status != INFEASIBLE:
        err, _, X, s, y, Z, z = best
        # roundoff floors the residuals near 1e-11; accept the best iterate when close
        if err <= STALL_ACCEPT * tol:
            status = OPTIMAL
    return status, it, X, s, y, Z, z


def _default_start(prob: _RealSdp):
    # SDPT3-style scale heuristic for the initial iterate
    n, p = prob.n, prob.p
    anorm = np.array([np.sqrt(np.sum(prob.a[k] ** 2) + np.sum(prob.lp[k] ** 2)) for k in range(prob.m)])
    xi = max(10.0, np.sqrt(n), n * np.max((1 + np.abs(prob.b)) / (1 + anorm)))
    eta = max(10.0, np.sqrt(n), np.max(anorm), np.linalg.norm(prob.c))
    return xi * np.eye(n), xi * np.ones(p), np.zeros(prob.m), eta * np.eye(n), eta * np.ones(p)


def solve(problem: SdpProblem, *, tol: float = DEFAULT_TOL, max_iter: int = MAX_ITER,
          init_x=None, init_duals=None, record: bool = False) -> SdpSolution:
    """Solve ``problem`` to relative accuracy ``tol``.

    ``init_x`` (Hermitian PD, strictly feasible for the inequalities) and
    ``init_duals`` (duals whose slack is PD) seed the iteration when given.
    With ``record=True`` the per-iteration objectives and residuals are kept
    in ``solution.history``.
    """
    mats = problem.constraint_matrices
    rhs = problem.rhs
    n_eq = len(problem.eq_constraints)
    n_in = len(problem.ineq_constraints)
    m = n_eq + n_in
    if m == 0:
        raise ValidationError("SDP needs at least one constraint")

    sign = -1.0 if problem.sense == "max" else 1.0
    c = sign * problem.objective
    # row and objective scaling; undone on output
    rownorm = np.array([max(np.linalg.norm(a), 1e-300) for a in mats])
    cscale = max(np.linalg.norm(c), 1e-300)
    a_r = np.stack([embed(a) / (2.0 * rn) for a, rn in zip(mats, rownorm)])
    lp = np.zeros((m, n_in))
    lp[n_eq + np.arange(n_in), np.arange(n_in)] = 1.0 / rownorm[n_eq:]
    b_r = rhs / rownorm
    c_r = embed(c) / (2.0 * cscale)
    prob = _RealSdp(c_r, a_r, lp, b_r)

    start = list(_default_start(prob))
    if init_x is not None:
        x0 = hermitian(init_x)
        s0 = np.array([cj - np.trace(x0 @ g).real for g, cj in problem.ineq_constraints])
        if np.linalg.eigvalsh(x0)[0] <= 0 or np.any(s0 <= 0):
            raise ValidationError("init_x must be positive definite and strictly satisfy the inequalities")
        start[0], start[1] = embed(x0), s0
    if init_duals is not None:
        # duals_k = -y_k  in the unscaled problem
        y0 = -np.asarray(init_duals, dtype=float) * rownorm / cscale
        aty, lty = prob.adj(y0)
        z_mat = _sym(prob.c - aty)
        z_lp = -lty
        if np.linalg.eigvalsh(z_mat)[0] <= 0 or np.any(z_lp <= 0):
            raise ValidationError("init_duals must give a positive definite dual slack")
        start[2], start[3], start[4] = y0, z_mat, z_lp

    history = []

    def on_iter(pobj, dobj, pres, dres, mu):
        # back to the problem's own sense and scale
        history.append(Iterate(sign * cscale * pobj, sign * cscale * dobj, pres, dres, cscale * mu))

    status, iters, X, s, y, Z, z = _run(prob, tol, max_iter, start, on_iter if record else None)

    x = unembed(X)
    duals = -y * cscale / rownorm
    pval = float(np.trace(x @ problem.objective).real)
    dval = float(-sign * (duals @ rhs))
    gap = abs(pval - dval)
    if status == OPTIMAL:
        log.debug("sdp: optimal in %d iterations, obj=%.12g gap=%.3g", iters, pval, gap)
    else:
        log.warning("sdp: status %s after %d iterations", status, iters)
    return SdpSolution(x, duals, pval, gap, status, iters, s * cscale, history)


def dual_slack(problem: SdpProblem, duals) -> np.ndarray:
    sign = -1.0 if problem.sense == "max" else 1.0
    g = sign * problem.objective + sum(d * a for d, a in zip(duals, problem.constraint_matrices))
    return 0.5 * (g + g.conj().T)


def check_certificate(problem: SdpProblem, solution: SdpSolution, *,
                      feas_tol: float = 1e-7, psd_tol: float = 1e-8, gap_tol: float = 1e-7) -> Certificate:
    """Audit an optimal primal-dual pair.

    Checks primal feasibility, PSD-ness of X and of the dual slack G,
    nonnegative inequality duals, complementary slackness ``tr(X G)`` and
    the duality gap, each against the given thresholds.
    """
    x = solution.x
    n_eq = len(problem.eq_constraints)
    vals = np.array([np.trace(x @ a).real for a in problem.constraint_matrices])
    res = vals - problem.rhs
    res[n_eq:] = np.maximum(res[n_eq:], 0.0)
    viol = float(np.max(np.abs(res))) if res.size else 0.0
    g = dual_slack(problem, solution.duals)
    g_min = float(np.linalg.eigvalsh(g)[0])
    x_min = float(np.linalg.eigvalsh(x)[0])
    min_in = float(np.min(solution.duals[n_eq:])) if len(solution.duals) > n_eq else 0.0
    comp = float(np.trace(x @ g).real)
    obj = solution.objective_value
    scale = 1.0 + abs(obj)
    failures = []
    if viol > feas_tol:
        failures.append(f"primal infeasibility {viol:.3e}")
    if x_min < -psd_tol:
        failures.append(f"X min eigenvalue {x_min:.3e}")
    if g_min < -psd_tol * max(1.0, np.linalg.norm(g)):
        failures.append(f"dual slack min eigenvalue {g_min:.3e}")
    if min_in < -psd_tol:
        failures.append(f"negative inequality dual {min_in:.3e}")
    if abs(comp) > gap_tol * scale:
        failures.append(f"complementary slackness residual {comp:.3e}")
    if solution.gap > gap_tol * scale:
        failures.append(f"duality gap {solution.gap:.3e}")
    return Certificate(res, viol, x_min, g, g_min, min_in, comp, solution.gap, not failures, tuple(failures))
