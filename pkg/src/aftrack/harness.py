"""Monte Carlo sweeps over channel draws and tracked runs.

Every trial owns RNG streams derived from ``(seed, trial, stream)`` so results
do not depend on evaluation order.  Within a trial the same draws are reused
across sweep values (channels and geometries are drawn for the largest N and
truncated), which keeps the curves of one sweep directly comparable.
"""
from __future__ import annotations

import hashlib
import io
import json
import logging
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import allocate as al
from .errors import NumericalError, ValidationError
from .model import GaussMarkovModel, NetworkScenario, ScenarioTemplate, sensor_powers, standard_cn
from .outage import empirical_outage, outage_limit_high_power, outage_probability
from .track import initial_state, observe, predict, step_theta, update

log = logging.getLogger(__name__)

GEOMETRY, CHANNEL, NOISE = 0, 1, 2
MSE_STRATEGIES = ("equal", "individual-constraint", "sum-constraint", "lower-bound")
TRACK_STRATEGIES = ("equal", "individual-constraint", "sum-constraint")
SWEEP_VARIABLES = ("n_sensors", "sum_power", "epsilon")
MIN_OUTAGE_TRIALS = 10_000


def stream(seed: int, trial: int, kind: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([seed, trial, kind]))


@dataclass(frozen=True)
class SweepSpec:
    variable: str
    values: tuple
    trials: int
    seed: int = 0
    redraw_geometry: bool = False

    def __post_init__(self):
        if self.variable not in SWEEP_VARIABLES:
            raise ValidationError(f"variable must be one of {SWEEP_VARIABLES}, got {self.variable!r}")
        vals = tuple(int(v) if self.variable == "n_sensors" else float(v) for v in self.values)
        if not vals:
            raise ValidationError("sweep values must be nonempty")
        diffs = np.diff(np.asarray(vals, dtype=float))
        if not (np.all(diffs > 0) or np.all(diffs < 0)):
            raise ValidationError("sweep values must be strictly monotone")
        if self.variable == "n_sensors" and min(vals) < 1:
            raise ValidationError("n_sensors values must be >= 1")
        if self.variable != "n_sensors" and min(vals) <= 0:
            raise ValidationError(f"{self.variable} values must be > 0")
        if self.trials < 1:
            raise ValidationError("trials must be >= 1")
        if self.seed < 0:
            raise ValidationError("seed must be >= 0")
        object.__setattr__(self, "values", vals)


@dataclass
class SweepResult:
    columns: list
    rows: list = field(default_factory=list)
    config: dict = field(default_factory=dict)

    @property
    def config_hash(self) -> str:
        blob = json.dumps(self.config, sort_keys=True, default=_jsonable).encode()
        return hashlib.sha256(blob).hexdigest()

    def column(self, name) -> np.ndarray:
        return np.array([r[name] for r in self.rows], dtype=float)

    def to_csv(self, path=None) -> str:
        buf = io.StringIO()
        buf.write(f"# config_sha256={self.config_hash}\n")
        buf.write(",".join(self.columns) + "\n")
        for r in self.rows:
            buf.write(",".join(_fmt(r[c]) for c in self.columns) + "\n")
        text = buf.getvalue()
        if path is not None:
            Path(path).write_text(text)
        return text


def _fmt(v) -> str:
    if isinstance(v, (int, np.integer)) and not isinstance(v, bool):
        return str(int(v))
    return repr(float(v))


def _jsonable(v):
    if isinstance(v, np.ndarray):
        return v.tolist()
    if isinstance(v, complex):
        return [v.real, v.imag]
    if isinstance(v, (np.floating, np.integer)):
        return v.item()
    if isinstance(v, GaussMarkovModel):
        return {"alpha": [v.alpha.real, v.alpha.imag], "sigma_u_sq": v.sigma_u_sq}
    return str(v)


def template_config(t: ScenarioTemplate) -> dict:
    return {k: getattr(t, k) for k in t.__dataclass_fields__}


def _mean_se(x):
    x = np.asarray(x, dtype=float)
    if x.size == 0:
        return float("nan"), float("nan")
    se = float(np.std(x, ddof=1) / np.sqrt(x.size)) if x.size > 1 else 0.0
    return float(np.mean(x)), se


class _Draws:
    """Geometry and channel draws for one trial, truncated to any N <= n_max."""

    def __init__(self, template: ScenarioTemplate, spec: SweepSpec, trial: int, n_max: int, fixed_geometry):
        if spec.redraw_geometry:
            self.geometry = template.draw_geometry(n_max, stream(spec.seed, trial, GEOMETRY))
        else:
            self.geometry = fixed_geometry
        self.z = standard_cn(stream(spec.seed, trial, CHANNEL), n_max)

    def scenario(self, template, n, **overrides) -> NetworkScenario:
        d, s = self.geometry
        indiv = template.indiv_powers
        kw = dict(distances=d[:n], meas_noise_vars=s[:n], model=template.model,
                  path_loss_exp=template.path_loss_exp, fc_noise_var=template.fc_noise_var,
                  sum_power=template.sum_power, initial_mse=template.initial_mse,
                  indiv_powers=indiv if indiv is not None and len(indiv) == n else None)
        kw.update(overrides)
        if "sum_power" in overrides and indiv is None:
            kw["indiv_powers"] = None
        return NetworkScenario(**kw)

    def channel(self, sc: NetworkScenario) -> np.ndarray:
        return self.z[: sc.n_sensors] * sc.path_gains


def _sweep_points(template, spec):
    """Yields (value, n, scenario overrides) per sweep value."""
    for v in spec.values:
        if spec.variable == "n_sensors":
            yield v, v, {}
        elif spec.variable == "sum_power":
            yield v, template.n_sensors, {"sum_power": v}
        else:
            yield v, template.n_sensors, {}


def _n_max(template, spec):
    return max(spec.values) if spec.variable == "n_sensors" else template.n_sensors


def _fixed_geometry(template, spec, geometry_seed):
    if spec.redraw_geometry:
        return None
    seed = spec.seed if geometry_seed is None else geometry_seed
    return template.draw_geometry(_n_max(template, spec), stream(seed, 0, GEOMETRY))


def _mse(strategy, sc, h):
    if strategy == "equal":
        return al.equal_power_allocation(sc, channel=h).achieved_mse
    if strategy == "individual-constraint":
        return al.min_mse_individual_power(sc, h).achieved_mse
    if strategy == "sum-constraint":
        return al.min_mse_sum_power(sc, h).achieved_mse
    if strategy == "lower-bound":
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", al.DegenerateBoundWarning)
            return al.mse_lower_bound(sc)
    raise ValidationError(f"unknown strategy {strategy!r}; choose from {MSE_STRATEGIES}")


def run_mse_sweep(template: ScenarioTemplate, spec: SweepSpec, strategies=MSE_STRATEGIES,
                  geometry_seed: int | None = None) -> SweepResult:
    """Mean filtered MSE from the prior ``initial_mse`` for each strategy.

    A trial in which any strategy raises is excluded from every column and
    counted in ``trials_failed``.
    """
    strategies = tuple(strategies)
    for s in strategies:
        if s not in MSE_STRATEGIES:
            raise ValidationError(f"unknown strategy {s!r}; choose from {MSE_STRATEGIES}")
    if spec.variable == "epsilon":
        raise ValidationError("an MSE sweep varies n_sensors or sum_power")
    cols = [spec.variable]
    for s in strategies:
        cols += [f"mse_{s}", f"se_{s}"]
    cols += ["trials_requested", "trials_used", "trials_failed"]
    res = SweepResult(cols, config=dict(kind="mse-sweep", template=template_config(template), spec=vars(spec),
                                        strategies=strategies, geometry_seed=geometry_seed))

    fixed = _fixed_geometry(template, spec, geometry_seed)
    n_max = _n_max(template, spec)
    acc = {v: {s: [] for s in strategies} for v in spec.values}
    failed = {v: 0 for v in spec.values}
    for trial in range(spec.trials):
        draws = _Draws(template, spec, trial, n_max, fixed)
        for v, n, over in _sweep_points(template, spec):
            sc = draws.scenario(template, n, **over)
            h = draws.channel(sc)
            try:
                vals = {s: _mse(s, sc, h) for s in strategies}
            except (ValidationError, NumericalError) as exc:
                log.warning("mse-sweep: %s=%s trial %d excluded: %s", spec.variable, v, trial, exc)
                failed[v] += 1
                continue
            for s in strategies:
                acc[v][s].append(vals[s])
    for v in spec.values:
        row = {spec.variable: v}
        for s in strategies:
            row[f"mse_{s}"], row[f"se_{s}"] = _mean_se(acc[v][s])
        used = len(acc[v][strategies[0]]) if strategies else 0
        row.update(trials_requested=spec.trials, trials_used=used, trials_failed=failed[v])
        res.rows.append(row)
    return res


POWER_COLUMNS = ("sum_power", "peak_power", "peak_sum_power")
BOUND_COLUMNS = ("bound_lower", "bound_exact", "bound_approx", "bound_upper")


def run_power_sweep(template: ScenarioTemplate, spec: SweepSpec, epsilons=None,
                    geometry_seed: int | None = None, include_peak: bool = True) -> SweepResult:
    """Required transmit power to reach each MSE target.

    Columns: least sum power (``sum_power``), least peak sensor power
    (``peak_power``) and the sum power of that peak-optimal allocation
    (``peak_sum_power``).  The large-N bound columns are averaged over the
    draws on which the upper bound is defined (``bound_trials``).  Draws with
    an unattainable target count as failed.
    """
    if spec.variable == "epsilon":
        eps_list = spec.values
        points = [(None, template.n_sensors, {})]
    else:
        if not epsilons:
            raise ValidationError("power sweep needs at least one epsilon")
        eps_list = tuple(float(e) for e in epsilons)
        points = list(_sweep_points(template, spec))
    cols = ([spec.variable] if spec.variable != "epsilon" else []) + ["epsilon"]
    for c in POWER_COLUMNS if include_peak else POWER_COLUMNS[:1]:
        cols += [f"{c}_mean", f"{c}_se"]
    cols += [f"{c}_mean" for c in BOUND_COLUMNS] + ["bound_trials"]
    cols += ["trials_requested", "trials_used", "trials_failed"]
    res = SweepResult(cols, config=dict(kind="power-sweep", template=template_config(template), spec=vars(spec),
                                        epsilons=eps_list, geometry_seed=geometry_seed, include_peak=include_peak))

    fixed = _fixed_geometry(template, spec, geometry_seed)
    n_max = _n_max(template, spec)
    keys = [(v, e) for v, _, _ in points for e in eps_list]
    acc = {k: {c: [] for c in POWER_COLUMNS + BOUND_COLUMNS} for k in keys}
    failed = {k: 0 for k in keys}
    for trial in range(spec.trials):
        draws = _Draws(template, spec, trial, n_max, fixed)
        for v, n, over in points:
            sc = draws.scenario(template, n, **over)
            h = draws.channel(sc)
            for e in eps_list:
                k = (v, e)
                try:
                    tg = al.check_feasibility(sc, None, e)
                    got = {"sum_power": al.min_sum_power_mse(sc, h, tg).sum_power}
                    if include_peak:
                        mm = al.min_max_power_mse(sc, h, tg)
                        got["peak_power"] = float(mm.per_sensor_power.max())
                        got["peak_sum_power"] = mm.sum_power
                    b = al.sum_power_bounds(sc, h, tg)
                except (ValidationError, NumericalError) as exc:
                    log.info("power-sweep: %s trial %d excluded: %s", k, trial, exc)
                    failed[k] += 1
                    continue
                for c, x in got.items():
                    acc[k][c].append(x)
                if b.defined:
                    for c, x in zip(BOUND_COLUMNS, (b.lower, b.exact, b.approx, b.upper)):
                        acc[k][c].append(x)
    for v, e in keys:
        a = acc[(v, e)]
        row = {} if spec.variable == "epsilon" else {spec.variable: v}
        row["epsilon"] = e
        for c in POWER_COLUMNS if include_peak else POWER_COLUMNS[:1]:
            row[f"{c}_mean"], row[f"{c}_se"] = _mean_se(a[c])
        for c in BOUND_COLUMNS:
            row[f"{c}_mean"] = _mean_se(a[c])[0]
        row["bound_trials"] = len(a["bound_exact"])
        row.update(trials_requested=spec.trials, trials_used=len(a["sum_power"]), trials_failed=failed[(v, e)])
        res.rows.append(row)
    return res


def run_outage(scenario: NetworkScenario, p_t_grid, epsilon: float, trials: int, seed: int = 0,
               prior_mse: float | None = None) -> SweepResult:
    """Closed-form and Monte Carlo outage of the equal-power allocation.

    ``halfwidth`` is the 95% normal-approximation binomial half-width.
    """
    if trials < MIN_OUTAGE_TRIALS:
        warnings.warn(f"{trials} trials give a coarse empirical outage; >= {MIN_OUTAGE_TRIALS} recommended",
                      RuntimeWarning, 2)
    grid = tuple(float(p) for p in p_t_grid)
    if not grid:
        raise ValidationError("p_t_grid must be nonempty")
    cols = ["sum_power", "epsilon", "analytic", "high_power_limit", "empirical", "halfwidth", "trials"]
    res = SweepResult(cols, config=dict(kind="outage", scenario=vars(scenario), grid=grid, epsilon=epsilon,
                                        trials=trials, seed=seed, prior_mse=prior_mse))
    for j, pt in enumerate(grid):
        sc = scenario.with_(sum_power=pt)
        tg = al.check_feasibility(sc, prior_mse, epsilon)
        p_emp, se = empirical_outage(sc, tg, trials, stream(seed, j, CHANNEL))
        res.rows.append(dict(sum_power=pt, epsilon=float(epsilon), analytic=outage_probability(sc, tg),
                             high_power_limit=outage_limit_high_power(sc, tg), empirical=p_emp,
                             halfwidth=1.96 * se, trials=trials))
    return res


def _track_gains(strategy, sc, h):
    if strategy == "equal":
        return al.equal_power_gains(sc)
    if strategy == "individual-constraint":
        return al.min_mse_individual_power(sc, h).gains
    if strategy == "sum-constraint":
        return al.min_mse_sum_power(sc, h).gains
    raise ValidationError(f"unknown strategy {strategy!r}; choose from {TRACK_STRATEGIES}")


def run_track(scenario: NetworkScenario, steps: int, strategy: str, seed: int = 0,
              hold_gains: bool = False) -> SweepResult:
    """Simulate the tracked process with fresh Rayleigh fading each step.

    The true state starts from CN(0, initial_mse) to match the filter's
    prior.  Channels and noises come from separate streams, so runs with
    different strategies and the same seed see identical randomness.  Gains
    are re-optimized for every channel unless ``hold_gains``, which keeps
    the step-0 gains.
    """
    if steps < 1:
        raise ValidationError("steps must be >= 1")
    if strategy not in TRACK_STRATEGIES:
        raise ValidationError(f"unknown strategy {strategy!r}; choose from {TRACK_STRATEGIES}")
    n = scenario.n_sensors
    cols = ["step", "theta_re", "theta_im", "estimate_re", "estimate_im", "sq_error", "pred_mse", "filt_mse"]
    cols += [f"power_{i}" for i in range(n)]
    res = SweepResult(cols, config=dict(kind="track", scenario=vars(scenario), steps=steps, strategy=strategy,
                                        seed=seed, hold_gains=hold_gains))
    ch_rng = stream(seed, 0, CHANNEL)
    nz_rng = stream(seed, 0, NOISE)
    model = scenario.model
    theta = complex(standard_cn(nz_rng, ()) * np.sqrt(scenario.initial_mse))
    state = initial_state(scenario.initial_mse)
    gains = None
    for k in range(steps):
        if k > 0:
            theta = step_theta(theta, model, nz_rng)
            state = predict(state, model)
        h = standard_cn(ch_rng, n) * scenario.path_gains
        if gains is None or not hold_gains:
            gains = _track_gains(strategy, scenario, h)
        y = observe(theta, scenario, h, gains, nz_rng)
        state = update(state, model, scenario, h, gains, y)
        row = dict(step=k, theta_re=theta.real, theta_im=theta.imag, estimate_re=state.estimate.real,
                   estimate_im=state.estimate.imag, sq_error=abs(theta - state.estimate) ** 2,
                   pred_mse=state.pred_mse, filt_mse=state.filt_mse)
        row.update({f"power_{i}": p for i, p in enumerate(sensor_powers(gains, scenario))})
        res.rows.append(row)
    return res
