"""Transmission-gain allocation for one channel realization.

Four problems are covered:

* minimum MSE under a sum-power budget (closed form),
* minimum MSE under per-sensor budgets (rank-relaxed SDP, rank-one recovery),
* minimum sum power for a target MSE (generalized eigenvector),
* minimum peak sensor power for a target MSE (rank-relaxed SDP),

plus the equal-power baseline, the high/low FC-SNR limits of the sum-power
solution, the infinite-power MSE floor and large-N sum-power bounds.

Internally the optimization variable is the conjugated vector ``x`` with
``x = conj(gains)``, so that ``x^H h = sum_i gains_i h_i``.  All returned
gains are rotated so this effective gain is real and positive.
"""
from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from . import sdp
from .errors import InfeasibleTargetError, NumericalError, RankOneError, ValidationError, ZeroChannelError
from .linalg import herm_eig, rayleigh_max, solve_hpd
from .model import ChannelRealization, GainAllocation, NetworkScenario, sensor_powers
from .track import filtered_mse

log = logging.getLogger(__name__)

RANK_ONE_TOL = 1e-6
RANK_ONE_RETRY = 1e-3
BOUNDARY_TOL = 1e-12


class DegenerateBoundWarning(RuntimeWarning):
    pass


def _channel(scenario: NetworkScenario, channel) -> np.ndarray:
    h = channel.gains if isinstance(channel, ChannelRealization) else np.asarray(channel, dtype=complex)
    if h.shape != (scenario.n_sensors,):
        raise ValidationError(f"channel has shape {h.shape}, expected ({scenario.n_sensors},)")
    if not np.all(np.isfinite(h)):
        raise ValidationError("channel has non-finite entries")
    if not np.any(h):
        raise ZeroChannelError("channel vector is identically zero")
    return h


def _prior(scenario, prior_mse):
    p = scenario.initial_mse if prior_mse is None else float(prior_mse)
    if not (np.isfinite(p) and p > 0):
        raise ValidationError("prior_mse must be finite and > 0")
    return p


def canonical_phase(gains, h) -> np.ndarray:
    """Rotate gains so that ``sum_i gains_i h_i`` is real and positive."""
    s = np.sum(gains * h)
    if abs(s) == 0:
        return gains
    return gains * (abs(s) / s)


def pack(scenario: NetworkScenario, channel, gains, prior_mse: float) -> GainAllocation:
    """Wrap gains with their power accounting and filtered MSE."""
    gains = np.asarray(gains, dtype=complex)
    h = channel.gains if isinstance(channel, ChannelRealization) else np.asarray(channel, dtype=complex)
    p = sensor_powers(gains, scenario)
    mse = float(filtered_mse(prior_mse, scenario, h, gains))
    return GainAllocation(gains, p, float(p.sum()), mse)


def measurement_matrix(scenario: NetworkScenario, h) -> np.ndarray:
    """``H V H^H``: diagonal of |h_i|^2 sigma_v,i^2."""
    return np.diag(np.abs(h) ** 2 * scenario.meas_noise_vars).astype(complex)


def power_matrix(scenario: NetworkScenario) -> np.ndarray:
    return np.diag(scenario.power_weights).astype(complex)


# ---------------------------------------------------------------------------
# MSE minimization


def sum_power_objective(scenario, channel) -> float:
    """Optimal ``|x^H h|^2 / (x^H H V H^H x + sigma_w^2)`` under the sum budget."""
    h = _channel(scenario, channel)
    b = measurement_matrix(scenario, h) + scenario.fc_noise_var / scenario.sum_power * power_matrix(scenario)
    return float(np.real(np.vdot(h, solve_hpd(b, h))))


def min_mse_sum_power(scenario: NetworkScenario, channel, prior_mse: float | None = None) -> GainAllocation:
    """Closed-form minimum-MSE gains under ``sum_i |g_i|^2 D_i <= P_T``.

    ``x = sqrt(P_T / h^H B^-1 D B^-1 h) B^-1 h`` with
    ``B = H V H^H + (sigma_w^2 / P_T) D``; the budget is used in full.
    """
    h = _channel(scenario, channel)
    prior = _prior(scenario, prior_mse)
    dmat = power_matrix(scenario)
    b = measurement_matrix(scenario, h) + scenario.fc_noise_var / scenario.sum_power * dmat
    bh = solve_hpd(b, h)
    scale = np.sqrt(scenario.sum_power / np.real(np.vdot(bh, dmat @ bh)))
    gains = canonical_phase(np.conj(scale * bh), h)
    return pack(scenario, h, gains, prior)


def individual_power_sdp(scenario: NetworkScenario, channel) -> sdp.SdpProblem:
    """Rank-relaxed per-sensor-budget problem over the (N+1)x(N+1) matrix.

    ``max tr(A Hb)  s.t.  tr(A Cb) = 1,  tr(A Db_i) <= 0,  A >= 0`` where
    ``Hb = diag(h h^H, 0)``, ``Cb = diag(H V H^H, sigma_w^2)`` and
    ``Db_i = diag(D_i, -P_T,i)``.
    """
    h = _channel(scenario, channel)
    n = h.size
    hb = np.zeros((n + 1, n + 1), complex)
    hb[:n, :n] = np.outer(h, h.conj())
    cb = np.diag(np.append(np.abs(h) ** 2 * scenario.meas_noise_vars, scenario.fc_noise_var)).astype(complex)
    ineq = []
    for i in range(n):
        d = np.zeros(n + 1)
        d[i] = scenario.power_weights[i]
        d[n] = -scenario.indiv_powers[i]
        ineq.append((np.diag(d).astype(complex), 0.0))
    return sdp.SdpProblem(hb, eq_constraints=[(cb, 1.0)], ineq_constraints=ineq, sense="max")


def individual_power_start(scenario: NetworkScenario, channel):
    """Strictly feasible primal/dual pair for :func:`individual_power_sdp`.

    Primal ``diag(ab, ..., ab, b)`` with ``a`` inside every budget and ``b``
    normalizing the equality; dual ``y_i`` sized to dominate ``h h^H`` and ``z``
    large enough for the corner entry.
    """
    h = _channel(scenario, channel)
    w = scenario.power_weights
    a = 0.5 * np.min(scenario.indiv_powers / w)
    b = 1.0 / (a * np.sum(np.abs(h) ** 2 * scenario.meas_noise_vars) + scenario.fc_noise_var)
    x0 = np.diag(np.append(np.full(h.size, a * b), b))
    hh = np.real(np.vdot(h, h))
    y = 2.0 * hh / w
    z = 2.0 * (np.sum(y * scenario.indiv_powers) + hh) / scenario.fc_noise_var
    return x0, np.append(z, y)


def _rank_one(block: np.ndarray):
    eig = herm_eig(block)
    lam = eig.values
    if lam[0] <= 0:
        return np.inf, np.zeros(block.shape[0], complex)
    ratio = max(lam[1], 0.0) / lam[0] if lam.size > 1 else 0.0
    return ratio, np.sqrt(lam[0]) * eig.vectors[:, 0]


def _solve_rank_one(problem, start, what, tol=sdp.DEFAULT_TOL):
    """Solve, check rank-one-ness of the leading block, retry tighter once."""
    for attempt, t in enumerate((tol, tol * 1e-2)):
        sol = sdp.solve(problem, tol=t, init_x=start[0], init_duals=start[1])
        if not sol.ok:
            if attempt == 0:
                continue
            raise NumericalError(f"{what}: SDP solver returned status {sol.status!r}")
        n = problem.dim - 1
        ratio, vec = _rank_one(sol.x[:n, :n])
        if ratio <= RANK_ONE_TOL:
            return sol, vec, ratio
        if ratio > RANK_ONE_RETRY or attempt == 1:
            break
        log.info("%s: rank-one ratio %.2e, retrying with tighter tolerance", what, ratio)
    raise RankOneError(f"{what}: leading block is not rank-one (lambda2/lambda1 = {ratio:.3e})", ratio)


def min_mse_individual_power(scenario: NetworkScenario, channel, prior_mse: float | None = None,
                             *, return_sdp: bool = False):
    """Minimum-MSE gains under ``|g_i|^2 D_i <= P_T,i`` for every sensor.

    Solves the relaxed SDP, factors its leading N x N block as ``a a^H``
    and rescales by the corner entry.  With ``return_sdp`` also returns the
    SdpSolution and the rank-one ratio.
    """
    h = _channel(scenario, channel)
    prior = _prior(scenario, prior_mse)
    prob = individual_power_sdp(scenario, h)
    sol, a, ratio = _solve_rank_one(prob, individual_power_start(scenario, h), "individual-power")
    corner = sol.x[-1, -1].real
    if corner <= 0:
        raise NumericalError("individual-power: nonpositive corner entry in SDP solution")
    x = a / np.sqrt(corner)
    gains = np.conj(x)
    # the MSE falls with the gain norm, so scale until the tightest budget binds
    over = sensor_powers(gains, scenario) / scenario.indiv_powers
    gains = gains / np.sqrt(over.max())
    gains = canonical_phase(gains, h)
    alloc = pack(scenario, h, gains, prior)
    if return_sdp:
        return alloc, sol, ratio
    return alloc


def equal_power_gains(scenario: NetworkScenario) -> np.ndarray:
    return np.sqrt(scenario.sum_power / scenario.n_sensors / scenario.power_weights).astype(complex)


def equal_power_allocation(scenario: NetworkScenario, prior_mse: float | None = None,
                           channel=None) -> GainAllocation:
    """Every sensor spends ``P_T / N``, zero phase.

    The achieved MSE needs a channel; without one it is reported as NaN.
    """
    prior = _prior(scenario, prior_mse)
    g = equal_power_gains(scenario)
    if channel is None:
        p = sensor_powers(g, scenario)
        return GainAllocation(g, p, float(p.sum()), float("nan"))
    return pack(scenario, _channel(scenario, channel), g, prior)


def mse_lower_bound(scenario: NetworkScenario, prior_mse: float | None = None) -> float:
    """Infinite-power MSE floor ``P / (1 + P sum_i 1/sigma_v,i^2)``.

    A noiseless sensor makes the floor 0; that case warns with
    DegenerateBoundWarning and returns 0.
    """
    prior = _prior(scenario, prior_mse)
    s = scenario.meas_noise_vars
    if np.any(s == 0):
        warnings.warn("a sensor has zero measurement noise; MSE floor degenerates to 0", DegenerateBoundWarning, 2)
        return 0.0
    return prior / (1.0 + np.sum(1.0 / s) * prior)


def asymptotic_gains(scenario: NetworkScenario, channel, regime: str) -> GainAllocation:
    """Limits of the sum-power solution, scaled to spend ``P_T``.

    ``high_snr`` (sigma_w^2 / P_T -> 0): ``g_i ~ 1 / (h_i sigma_v,i^2)``.
    ``low_snr``  (sigma_w^2 / P_T -> inf): ``g_i ~ conj(h_i) / D_i``.
    """
    h = _channel(scenario, channel)
    w = scenario.power_weights
    if regime == "high_snr":
        s = scenario.meas_noise_vars
        if np.any(s == 0):
            raise ValidationError("high_snr limit needs sigma_v,i^2 > 0 for every sensor")
        if np.any(h == 0):
            raise ValidationError("high_snr limit needs every channel gain nonzero")
        c = np.sqrt(scenario.sum_power / np.sum(w / (s ** 2 * np.abs(h) ** 2)))
        g = c / (h * s)
    elif regime == "low_snr":
        g = np.conj(h) / w
        g = g * np.sqrt(scenario.sum_power / np.sum(np.abs(g) ** 2 * w))
    else:
        raise ValidationError(f"regime must be 'high_snr' or 'low_snr', got {regime!r}")
    return pack(scenario, h, canonical_phase(g, h), scenario.initial_mse)


# ---------------------------------------------------------------------------
# power minimization


@dataclass(frozen=True)
class MseTarget:
    """An MSE constraint with its feasibility classification.

    ``status`` is one of ``interior``, ``upper-boundary`` (epsilon equals the
    prior MSE: zero power), ``lower-boundary`` (epsilon equals the
    infinite-power floor) or ``infeasible``.
    """

    epsilon: float
    prior_mse: float
    floor: float
    status: str

    @property
    def feasible(self) -> bool:
        return self.status != "infeasible"

    @property
    def attainable(self) -> bool:
        """Reachable with finite power."""
        return self.status in ("interior", "upper-boundary")

    @property
    def excess(self) -> float:
        """``P / epsilon - 1``."""
        return self.prior_mse / self.epsilon - 1.0


def check_feasibility(scenario: NetworkScenario, prior_mse: float | None, epsilon: float) -> MseTarget:
    prior = _prior(scenario, prior_mse)
    if not (np.isfinite(epsilon) and epsilon > 0):
        raise ValidationError("epsilon must be finite and > 0")
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", DegenerateBoundWarning)
        floor = mse_lower_bound(scenario, prior)
    if abs(epsilon - prior) <= BOUNDARY_TOL * prior:
        status = "upper-boundary"
    elif abs(epsilon - floor) <= BOUNDARY_TOL * prior:
        status = "lower-boundary"
    elif floor < epsilon < prior:
        status = "interior"
    else:
        status = "infeasible"
    return MseTarget(float(epsilon), prior, floor, status)


def _require(target: MseTarget):
    if not target.attainable:
        raise InfeasibleTargetError(
            f"epsilon = {target.epsilon:.6g} is not attainable with finite power; "
            f"need {target.floor:.6g} < epsilon <= {target.prior_mse:.6g}"
        )


def mse_constraint_matrix(scenario: NetworkScenario, h, target: MseTarget) -> np.ndarray:
    """``E = P h h^H - (P/epsilon - 1) H V H^H``."""
    return target.prior_mse * np.outer(h, h.conj()) - target.excess * measurement_matrix(scenario, h)


def _zero(scenario, h, target):
    return pack(scenario, h, np.zeros(scenario.n_sensors, complex), target.prior_mse)


def min_sum_power_mse(scenario: NetworkScenario, channel, target: MseTarget) -> GainAllocation:
    """Least sum power achieving filtered MSE ``epsilon``.

    The optimal direction is the top generalized eigenvector of ``(E, D)``;
    the required power is ``(P - eps) sigma_w^2 / (eps lambda_max)``.
    """
    h = _channel(scenario, channel)
    _require(target)
    if target.status == "upper-boundary":
        return _zero(scenario, h, target)
    e = mse_constraint_matrix(scenario, h, target)
    lam, x = rayleigh_max(e, power_matrix(scenario))
    if lam <= 0:
        raise InfeasibleTargetError(
            f"lambda_max = {lam:.3e} <= 0: epsilon = {target.epsilon:.6g} not attainable "
            f"(floor {target.floor:.6g})"
        )
    need = target.excess * scenario.fc_noise_var
    x = x * np.sqrt(need / np.real(np.vdot(x, e @ x)))
    return pack(scenario, h, canonical_phase(np.conj(x), h), target.prior_mse)


def min_sum_power_value(scenario: NetworkScenario, channel, target: MseTarget) -> float:
    """``P_T*`` from the eigenvalue formula."""
    h = _channel(scenario, channel)
    _require(target)
    if target.status == "upper-boundary":
        return 0.0
    lam, _ = rayleigh_max(mse_constraint_matrix(scenario, h, target), power_matrix(scenario))
    if lam <= 0:
        raise InfeasibleTargetError(f"lambda_max = {lam:.3e} <= 0")
    return (target.prior_mse - target.epsilon) * scenario.fc_noise_var / (target.epsilon * lam)


def sum_power_sdp(scenario: NetworkScenario, channel, target: MseTarget) -> sdp.SdpProblem:
    """Rank-relaxed sum-power problem ``min tr(A D) s.t. tr(A E) >= (P/eps - 1) sigma_w^2``."""
    h = _channel(scenario, channel)
    e = mse_constraint_matrix(scenario, h, target)
    need = target.excess * scenario.fc_noise_var
    return sdp.SdpProblem(power_matrix(scenario), ineq_constraints=[(-e, -need)], sense="min")


def min_max_power_sdp(scenario: NetworkScenario, channel, target: MseTarget) -> sdp.SdpProblem:
    """Rank-relaxed peak-power problem over ``[[A, w], [w^H, t]]``.

    ``min t  s.t.  tr(A E) >= (P/eps - 1) sigma_w^2,  D_i A_ii - t <= 0``.
    """
    h = _channel(scenario, channel)
    n = h.size
    e = np.zeros((n + 1, n + 1), complex)
    e[:n, :n] = mse_constraint_matrix(scenario, h, target)
    t = np.zeros((n + 1, n + 1), complex)
    t[n, n] = 1.0
    ineq = [(-e, -target.excess * scenario.fc_noise_var)]
    for i in range(n):
        f = np.zeros(n + 1)
        f[i] = scenario.power_weights[i]
        f[n] = -1.0
        ineq.append((np.diag(f).astype(complex), 0.0))
    return sdp.SdpProblem(t, ineq_constraints=ineq, sense="min")


def min_max_power_start(scenario: NetworkScenario, channel, target: MseTarget):
    """Strictly feasible primal point for :func:`min_max_power_sdp`.

    Built from the sum-power-optimal gains scaled up by 10% (so the MSE
    constraint holds strictly), a small ridge for definiteness and a corner
    entry above every resulting sensor power.
    """
    h = _channel(scenario, channel)
    n = h.size
    x = 1.1 * np.conj(min_sum_power_mse(scenario, h, target).gains)
    e = mse_constraint_matrix(scenario, h, target)
    need = target.excess * scenario.fc_noise_var
    a0 = np.outer(x, x.conj())
    slack = np.real(np.vdot(x, e @ x)) - need
    delta = 0.5 * slack / (np.abs(np.trace(e)) + 1e-300)
    a0 = a0 + delta * np.eye(n)
    t0 = 1.5 * np.max(np.real(np.diag(a0)) * scenario.power_weights)
    out = np.zeros((n + 1, n + 1), complex)
    out[:n, :n] = a0
    out[n, n] = t0
    return out, None


def min_max_power_mse(scenario: NetworkScenario, channel, target: MseTarget, *, return_sdp: bool = False):
    """Least peak sensor power achieving filtered MSE ``epsilon``.

    The leading N x N block of the relaxed SDP solution is rank-one; its
    principal factor is the gain vector (conjugated).
    """
    h = _channel(scenario, channel)
    _require(target)
    if target.status == "upper-boundary":
        alloc = _zero(scenario, h, target)
        return (alloc, None, 0.0) if return_sdp else alloc
    prob = min_max_power_sdp(scenario, h, target)
    sol, a, ratio = _solve_rank_one(prob, min_max_power_start(scenario, h, target), "min-max-power")
    e = mse_constraint_matrix(scenario, h, target)
    need = target.excess * scenario.fc_noise_var
    got = np.real(np.vdot(a, e @ a))
    if got <= 0:
        raise NumericalError("min-max-power: recovered vector does not meet the MSE constraint")
    if got < need:
        a = a * np.sqrt(need / got)
    alloc = pack(scenario, h, canonical_phase(np.conj(a), h), target.prior_mse)
    if return_sdp:
        return alloc, sol, ratio
    return alloc


class PowerBounds(NamedTuple):
    lower: float
    upper: float      # inf when zeta >= 1
    xi: float
    zeta: float
    approx: float
    exact: float

    @property
    def defined(self) -> bool:
        return self.zeta < 1.0


def sum_power_bounds(scenario: NetworkScenario, channel, target: MseTarget) -> PowerBounds:
    """Sandwich on ``P_T*`` from the rank-one-plus-diagonal structure.

    ``xi`` and ``zeta`` measure how far the smallest and largest diagonal
    perturbations pull ``lambda_max`` below ``P h^H D^-1 h``; ``approx`` drops
    them altogether.
    """
    h = _channel(scenario, channel)
    _require(target)
    if target.status == "upper-boundary":
        return PowerBounds(0.0, 0.0, 0.0, 0.0, 0.0, 0.0)
    prior, eps = target.prior_mse, target.epsilon
    w = scenario.power_weights
    hdh = float(np.sum(np.abs(h) ** 2 / w))
    pert = np.abs(h) ** 2 * scenario.meas_noise_vars / w
    xi = target.excess * pert.min()
    zeta = target.excess * pert.max() / (prior * hdh)
    num = (prior - eps) * scenario.fc_noise_var / eps
    lower = num / (prior * hdh - xi)
    upper = num / (prior * hdh * (1.0 - zeta)) if zeta < 1.0 else np.inf
    approx = num / (prior * hdh)
    exact = min_sum_power_value(scenario, h, target)
    return PowerBounds(float(lower), float(upper), float(xi), float(zeta), float(approx), float(exact))
