"""MSE outage probability of the equal-power allocation.

With ``h_i = d_i^-gamma z_i``, ``z ~ CN(0, I)`` and equal-power gains, the
filtered MSE exceeds ``epsilon`` exactly when ``z^H R z < c`` where

    R = M a a^H M - beta Q,   beta = (P - eps) / (eps P),   c = beta sigma_w^2 / P_T,

``M = diag(d^-gamma)``, ``a`` is the equal-power gain vector normalized by
``sqrt(P_T)`` and ``Q = diag(|a_i|^2 sigma_v,i^2 d_i^-2gamma)``.  ``z^H R z`` is
a weighted sum of unit exponentials, and R has at most one positive
eigenvalue, which gives a one-term closed form.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .allocate import MseTarget, equal_power_gains
from .errors import NumericalError, ValidationError
from .linalg import herm_eig
from .model import NetworkScenario, standard_cn
from .track import filtered_mse

DEGENERACY_GAP = 1e-10
DEGENERACY_SHIFT = 1e-8
RAW_SLACK = 1e-9


class DegenerateSpectrumWarning(RuntimeWarning):
    pass


@dataclass(frozen=True)
class OutageInstance:
    beta: float
    r_matrix: np.ndarray
    eigenvalues: np.ndarray   # descending
    threshold: float
    scaled_gains: np.ndarray  # equal-power gains / sqrt(P_T)
    q_diag: np.ndarray        # diagonal of Q


def _check_target(scenario, target: MseTarget):
    if not isinstance(target, MseTarget):
        raise ValidationError("target must be an MseTarget")
    if target.epsilon > target.prior_mse * (1 + 1e-12):
        raise ValidationError("epsilon above the prior MSE: outage is impossible by construction")


def outage_instance(scenario: NetworkScenario, target: MseTarget) -> OutageInstance:
    _check_target(scenario, target)
    beta = max((target.prior_mse - target.epsilon) / (target.epsilon * target.prior_mse), 0.0)
    a = equal_power_gains(scenario).real / np.sqrt(scenario.sum_power)
    m = scenario.path_gains
    q = a ** 2 * scenario.meas_noise_vars * m ** 2
    ma = m * a
    r = np.outer(ma, ma) - beta * np.diag(q)
    lam = herm_eig(r).values
    return OutageInstance(beta, r.astype(complex), lam, beta * scenario.fc_noise_var / scenario.sum_power, a, q)


def _separate(lam: np.ndarray, scale: float) -> np.ndarray:
    """Split eigenvalues crowding the top one so the one-term formula is usable."""
    gap = DEGENERACY_GAP * scale
    close = (lam[0] - lam[1:]) < gap
    if not np.any(close):
        return lam
    warnings.warn("largest eigenvalue of R is numerically repeated; perturbing by 1e-8 relative",
                  DegenerateSpectrumWarning, 3)
    lam = lam.copy()
    shift = DEGENERACY_SHIFT * scale
    lam[0] += shift
    lam[1:][close] -= shift
    return lam


def _log_weight(lam: np.ndarray) -> float:
    """``log(lambda_1^{N-1} / prod_{l>1} (lambda_1 - lambda_l))``."""
    return float(np.sum(np.log(lam[0]) - np.log(lam[0] - lam[1:])))


def _finish(raw: float) -> float:
    if not (-RAW_SLACK <= raw <= 1 + RAW_SLACK):
        raise NumericalError(f"outage probability evaluated to {raw!r}, outside [0, 1]")
    return float(min(max(raw, 0.0), 1.0))


def _outage(scenario, target, high_power: bool) -> float:
    inst = outage_instance(scenario, target)
    if inst.beta == 0.0:
        return 0.0
    lam = inst.eigenvalues
    if lam[0] <= 0.0:
        return 1.0
    if lam.size > 1:
        lam = _separate(lam, float(np.linalg.norm(inst.r_matrix)))
    expo = 0.0 if high_power else -inst.threshold / lam[0]
    return _finish(1.0 - np.exp(_log_weight(lam) + expo))


def outage_probability(scenario: NetworkScenario, target: MseTarget) -> float:
    """``Pr(P_{n|n} > epsilon)`` over Rayleigh fading for equal-power gains.

    ``1 - lambda_1^{N-1} / prod_{l != 1}(lambda_1 - lambda_l) * exp(-c / lambda_1)``
    when ``lambda_1 > 0``, else 1.
    """
    return _outage(scenario, target, high_power=False)


def outage_limit_high_power(scenario: NetworkScenario, target: MseTarget) -> float:
    """Limit of :func:`outage_probability` as ``P_T -> inf`` (``c -> 0``)."""
    return _outage(scenario, target, high_power=True)


def mixture_tail(weights, c: float) -> float:
    """``Pr(sum_i w_i E_i >= c)`` for independent unit exponentials ``E_i``.

    Partial-fraction form summed over the positive weights; weights must be
    pairwise distinct.  Plain products, no log-space tricks.
    """
    w = np.asarray(weights, dtype=float)
    if np.unique(w).size != w.size:
        raise ValidationError("weights must be pairwise distinct")
    total = 0.0
    for i in np.flatnonzero(w > 0):
        others = np.delete(w, i)
        total += np.prod(w[i] / (w[i] - others)) * np.exp(-c / w[i])
    return float(total)


def outage_general(scenario: NetworkScenario, target: MseTarget) -> float:
    """Outage via the all-terms partial-fraction sum (no single-positive shortcut)."""
    inst = outage_instance(scenario, target)
    return 1.0 - mixture_tail(inst.eigenvalues, inst.threshold)


class WeylBounds(NamedTuple):
    lambda1_lo: float
    lambda1_hi: float
    tail_bounds: list  # (lo, hi) for lambda_2 .. lambda_N


def weyl_bounds(scenario: NetworkScenario, target: MseTarget) -> WeylBounds:
    """Interlacing bounds for R = rank-one + (-beta Q).

    ``s - beta e_1 <= lambda_1 <= s - beta e_N`` and
    ``-beta e_{N-i+1} <= lambda_i <= -beta e_{N-i+2}`` for ``i >= 2``, with
    ``e`` the sorted diagonal of Q and ``s = a^H M^2 a``.
    """
    inst = outage_instance(scenario, target)
    e = np.sort(inst.q_diag)[::-1]
    s = float(np.sum((scenario.path_gains * inst.scaled_gains) ** 2))
    b = inst.beta
    n = e.size
    tail = [(-b * e[n - i], -b * e[n - i + 1]) for i in range(2, n + 1)]
    return WeylBounds(s - b * e[0], s - b * e[-1], tail)


def empirical_outage(scenario: NetworkScenario, target: MseTarget, trials: int,
                     rng: np.random.Generator, chunk: int = 20000):
    """Monte Carlo outage of equal-power gains: ``(estimate, standard error)``.

    Evaluates the filtered MSE directly on fresh channel draws, so it shares
    no algebra with the closed form.
    """
    if trials < 1:
        raise ValidationError("trials must be >= 1")
    g = equal_power_gains(scenario)
    hits = 0
    done = 0
    while done < trials:
        k = min(chunk, trials - done)
        h = scenario.path_gains * standard_cn(rng, (k, scenario.n_sensors))
        mse = filtered_mse(target.prior_mse, scenario, h, g, check=False)
        hits += int(np.count_nonzero(mse > target.epsilon))
        done += k
    p = hits / trials
    return p, float(np.sqrt(max(p * (1 - p), 0.0) / trials))
