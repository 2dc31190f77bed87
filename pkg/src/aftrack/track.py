"""Scalar Kalman filter at the fusion center.

With effective gain ``s = sum_i gains_i h_i`` and effective noise variance
``nu = sum_i |gains_i h_i|^2 sigma_v,i^2 + sigma_w^2`` the measurement model
is ``y = s theta + noise``; everything below is the scalar Kalman recursion
for that model.
"""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .errors import NumericalError
from .model import ChannelRealization, GaussMarkovModel, NetworkScenario, standard_cn


@dataclass(frozen=True)
class TrackState:
    estimate: complex
    pred_mse: float
    filt_mse: float
    step: int = 0


def initial_state(prior_mse: float, estimate: complex = 0.0) -> TrackState:
    """State ready for the first measurement update (post-predict form)."""
    return TrackState(complex(estimate), float(prior_mse), float(prior_mse), 0)


def predict(state: TrackState, model: GaussMarkovModel) -> TrackState:
    # |alpha|^2 keeps the recursion a variance for complex alpha
    pred = abs(model.alpha) ** 2 * state.filt_mse + model.sigma_u_sq
    return replace(state, estimate=model.alpha * state.estimate, pred_mse=pred)


def _h(channel):
    return channel.gains if isinstance(channel, ChannelRealization) else np.asarray(channel, dtype=complex)


def effective_terms(scenario: NetworkScenario, channel, gains):
    """``(s, nu)``: effective gain and effective noise variance at the FC."""
    gh = np.asarray(gains, dtype=complex) * _h(channel)
    s = gh.sum(axis=-1)
    nu = (np.abs(gh) ** 2 * scenario.meas_noise_vars).sum(axis=-1) + scenario.fc_noise_var
    return s, nu


def kalman_gain(pred_mse, scenario, channel, gains):
    s, nu = effective_terms(scenario, channel, gains)
    return pred_mse * np.conj(s) / (nu + pred_mse * np.abs(s) ** 2)


def measurement_snr(scenario: NetworkScenario, channel, gains):
    """``|s|^2 / nu``: the quantity every allocator maximizes."""
    s, nu = effective_terms(scenario, channel, gains)
    return np.abs(s) ** 2 / nu


def filtered_mse(pred_mse, scenario: NetworkScenario, channel, gains, *, check: bool = True):
    """Posterior MSE after one measurement update.

    Evaluates ``(1 - k s) P`` and ``P / (1 + P q)``; with ``check`` the two
    forms must agree to 1e-12 relative to ``pred_mse``.  Vectorized over leading axes of
    ``channel``/``gains``.
    """
    s, nu = effective_terms(scenario, channel, gains)
    k = pred_mse * np.conj(s) / (nu + pred_mse * np.abs(s) ** 2)
    p1 = np.real(1.0 - k * s) * pred_mse
    p2 = pred_mse / (1.0 + pred_mse * np.abs(s) ** 2 / nu)
    # (1 - k s) P cancels near perfect observation, so compare on the scale of P
    if check and np.any(np.abs(p1 - p2) > 1e-12 * np.abs(pred_mse)):
        raise NumericalError("filtered MSE forms disagree")
    return p2


def observe(theta: complex, scenario: NetworkScenario, channel, gains, rng: np.random.Generator) -> complex:
    """Draw ``y = sum_i h_i g_i (theta + v_i) + w``."""
    h = _h(channel)
    v = standard_cn(rng, h.size) * np.sqrt(scenario.meas_noise_vars)
    w = standard_cn(rng, ()) * np.sqrt(scenario.fc_noise_var)
    return complex(np.sum(h * np.asarray(gains) * (theta + v)) + w)


def update(state: TrackState, model: GaussMarkovModel, scenario: NetworkScenario, channel, gains,
           observation: complex) -> TrackState:
    """Measurement update; completes the current step."""
    s, _ = effective_terms(scenario, channel, gains)
    k = kalman_gain(state.pred_mse, scenario, channel, gains)
    est = state.estimate + k * (observation - s * state.estimate)
    filt = filtered_mse(state.pred_mse, scenario, channel, gains)
    return TrackState(complex(est), state.pred_mse, float(filt), state.step + 1)


def step_theta(theta: complex, model: GaussMarkovModel, rng: np.random.Generator) -> complex:
    return complex(model.alpha * theta + standard_cn(rng, ()) * np.sqrt(model.sigma_u_sq))
