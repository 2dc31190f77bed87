"""Domain types, scenario presets and random channel generation.

Conventions used across the package:

* ``gains`` always hold the multipliers the sensors actually apply, so the
  fusion center receives ``y = sum_i h_i * gains_i * (theta + v_i) + w``.
* ``CN(0, s)`` means circular complex normal with total variance ``s``
  (``s/2`` per real dimension), so ``|h~|^2`` is exponential with mean 1.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .errors import ScenarioError, ValidationError


def _frozen(a, dtype=float) -> np.ndarray:
    arr = np.array(a, dtype=dtype)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class GaussMarkovModel:
    """First-order autoregression ``theta_n = alpha * theta_{n-1} + u_n``."""

    alpha: complex
    sigma_u_sq: float

    def __post_init__(self):
        alpha = complex(self.alpha)
        if not np.isfinite(alpha.real) or not np.isfinite(alpha.imag):
            raise ValidationError("alpha must be finite")
        if abs(alpha) >= 1.0:
            raise ValidationError(f"alpha: |alpha| = {abs(alpha):g} violates stationarity (|alpha| < 1)")
        if not self.sigma_u_sq >= 0.0:
            raise ValidationError("sigma_u_sq must be >= 0")
        object.__setattr__(self, "alpha", alpha)
        object.__setattr__(self, "sigma_u_sq", float(self.sigma_u_sq))

    @property
    def sigma_theta_sq(self) -> float:
        return self.sigma_u_sq / (1.0 - abs(self.alpha) ** 2)

    @classmethod
    def from_stationary(cls, alpha: complex, sigma_theta_sq: float) -> "GaussMarkovModel":
        if not sigma_theta_sq > 0:
            raise ValidationError("sigma_theta_sq must be > 0")
        alpha = complex(alpha)
        if abs(alpha) >= 1.0:
            raise ValidationError(f"alpha: |alpha| = {abs(alpha):g} violates stationarity (|alpha| < 1)")
        return cls(alpha, sigma_theta_sq * (1.0 - abs(alpha) ** 2))


@dataclass(frozen=True)
class NetworkScenario:
    """Static description of the sensor network.

    ``indiv_powers`` defaults to an equal split of ``sum_power``.
    ``initial_mse`` is the filter's prior MSE P_{0|-1}.
    """

    distances: np.ndarray
    meas_noise_vars: np.ndarray
    model: GaussMarkovModel
    path_loss_exp: float = 1.0
    fc_noise_var: float = 0.5
    sum_power: float = 300.0
    indiv_powers: np.ndarray | None = None
    initial_mse: float = 0.5

    def __post_init__(self):
        d = _frozen(self.distances)
        s = _frozen(self.meas_noise_vars)
        if d.ndim != 1 or d.size == 0:
            raise ValidationError("distances must be a nonempty 1-D array")
        n = d.size
        if s.shape != (n,):
            raise ValidationError(f"meas_noise_vars: length {s.size} does not match n_sensors = {n}")
        if not np.all(np.isfinite(d)) or np.any(d <= 0):
            raise ValidationError("distances: every entry must be finite and > 0")
        if not np.all(np.isfinite(s)) or np.any(s < 0):
            raise ValidationError("meas_noise_vars: every entry must be finite and >= 0")
        if not (np.isfinite(self.path_loss_exp) and self.path_loss_exp >= 0):
            raise ValidationError("path_loss_exp must be >= 0")
        for name in ("fc_noise_var", "sum_power", "initial_mse"):
            v = getattr(self, name)
            if not (np.isfinite(v) and v > 0):
                raise ValidationError(f"{name} must be finite and > 0")
        if self.indiv_powers is None:
            p = np.full(n, self.sum_power / n)
        else:
            p = np.asarray(self.indiv_powers, dtype=float)
            if p.ndim == 0:
                p = np.full(n, float(p))
        p = _frozen(p)
        if p.shape != (n,):
            raise ValidationError(f"indiv_powers: length {p.size} does not match n_sensors = {n}")
        if not np.all(np.isfinite(p)) or np.any(p <= 0):
            raise ValidationError("indiv_powers: every entry must be finite and > 0")
        object.__setattr__(self, "distances", d)
        object.__setattr__(self, "meas_noise_vars", s)
        object.__setattr__(self, "indiv_powers", p)
        for name in ("path_loss_exp", "fc_noise_var", "sum_power", "initial_mse"):
            object.__setattr__(self, name, float(getattr(self, name)))
        if np.any(self.power_weights <= 0):
            raise ValidationError("sigma_theta^2 + sigma_v,i^2 must be > 0 for every sensor")

    @property
    def n_sensors(self) -> int:
        return self.distances.size

    @property
    def sigma_theta_sq(self) -> float:
        return self.model.sigma_theta_sq

    @property
    def power_weights(self) -> np.ndarray:
        """Diagonal of D: transmit power per unit |gain|^2 at each sensor."""
        return self.sigma_theta_sq + self.meas_noise_vars

    @property
    def path_gains(self) -> np.ndarray:
        """Large-scale amplitude factors 1 / d_i^gamma."""
        return self.distances ** (-self.path_loss_exp)

    def with_(self, **changes) -> "NetworkScenario":
        """Copy with fields replaced.  Individual budgets are re-split when
        ``sum_power`` changes and ``indiv_powers`` is not given explicitly."""
        if "sum_power" in changes and "indiv_powers" not in changes:
            changes["indiv_powers"] = None
        return replace(self, **changes)

    def subset(self, n: int) -> "NetworkScenario":
        """The first ``n`` sensors, with budgets re-split as P_T / n."""
        return replace(
            self,
            distances=self.distances[:n],
            meas_noise_vars=self.meas_noise_vars[:n],
            indiv_powers=None,
        )


@dataclass(frozen=True)
class ChannelRealization:
    gains: np.ndarray

    def __post_init__(self):
        h = _frozen(self.gains, complex)
        if h.ndim != 1:
            raise ValidationError("channel gains must be a 1-D array")
        if not np.all(np.isfinite(h)):
            raise ValidationError("channel gains must be finite")
        object.__setattr__(self, "gains", h)

    @property
    def is_zero(self) -> bool:
        return not np.any(self.gains)

    def __len__(self):
        return self.gains.size


@dataclass(frozen=True)
class GainAllocation:
    """Sensor gains with their power accounting and resulting filtered MSE."""

    gains: np.ndarray
    per_sensor_power: np.ndarray
    sum_power: float
    achieved_mse: float

    def to_dict(self) -> dict:
        return {
            "gains_re": self.gains.real.tolist(),
            "gains_im": self.gains.imag.tolist(),
            "per_sensor_power": self.per_sensor_power.tolist(),
            "sum_power": self.sum_power,
            "achieved_mse": self.achieved_mse,
        }


def sensor_powers(gains, scenario: NetworkScenario) -> np.ndarray:
    return np.abs(np.asarray(gains)) ** 2 * scenario.power_weights


# ---------------------------------------------------------------------------
# random generation


def standard_cn(rng: np.random.Generator, size) -> np.ndarray:
    """Draws from CN(0, 1)."""
    z = rng.standard_normal(size) + 1j * rng.standard_normal(size)
    return z * np.sqrt(0.5)


def sample_channel(scenario: NetworkScenario, seed=None) -> ChannelRealization:
    """One Rayleigh draw ``h_i = h~_i / d_i^gamma`` with ``h~_i ~ CN(0, 1)``.

    ``seed`` may be an int, a SeedSequence or a Generator.
    """
    rng = np.random.default_rng(seed)
    return ChannelRealization(standard_cn(rng, scenario.n_sensors) * scenario.path_gains)


def sample_channels(scenario: NetworkScenario, rng: np.random.Generator, size: int) -> np.ndarray:
    """``size`` independent channel vectors, shape ``(size, N)``."""
    return standard_cn(rng, (size, scenario.n_sensors)) * scenario.path_gains


def _uniform_open_low(rng, low, high, size):
    # draws from (low, high] so a zero noise variance is never produced
    return high - (high - low) * rng.random(size)


@dataclass(frozen=True)
class ScenarioTemplate:
    """Recipe for drawing network geometries of any size.

    Distances and measurement noise variances are drawn uniformly from the
    given ranges unless fixed arrays are supplied, in which case the first
    ``n`` entries are used.
    """

    model: GaussMarkovModel
    distance_range: tuple[float, float] = (2.0, 8.0)
    noise_var_range: tuple[float, float] = (0.0, 0.5)
    path_loss_exp: float = 1.0
    fc_noise_var: float = 0.5
    sum_power: float = 300.0
    initial_mse: float = 0.5
    n_sensors: int = 10
    fixed_distances: np.ndarray | None = None
    fixed_noise_vars: np.ndarray | None = None
    indiv_powers: np.ndarray | None = None

    def draw_geometry(self, n: int, rng: np.random.Generator):
        lo, hi = self.distance_range
        d = rng.uniform(lo, hi, n) if self.fixed_distances is None else None
        lo, hi = self.noise_var_range
        s = _uniform_open_low(rng, lo, hi, n) if self.fixed_noise_vars is None else None
        if d is None:
            if n > len(self.fixed_distances):
                raise ValidationError(f"scenario fixes {len(self.fixed_distances)} distances; cannot realize n = {n}")
            d = np.asarray(self.fixed_distances)[:n]
        if s is None:
            if n > len(self.fixed_noise_vars):
                raise ValidationError(f"scenario fixes {len(self.fixed_noise_vars)} noise variances; cannot realize n = {n}")
            s = np.asarray(self.fixed_noise_vars)[:n]
        return d, s

    def realize(self, n: int | None = None, rng=None, **overrides) -> NetworkScenario:
        n = self.n_sensors if n is None else n
        d, s = self.draw_geometry(n, np.random.default_rng(rng))
        indiv = self.indiv_powers
        if indiv is not None and len(indiv) != n:
            indiv = None
        kw = dict(
            distances=d,
            meas_noise_vars=s,
            model=self.model,
            path_loss_exp=self.path_loss_exp,
            fc_noise_var=self.fc_noise_var,
            sum_power=self.sum_power,
            indiv_powers=indiv,
            initial_mse=self.initial_mse,
        )
        kw.update(overrides)
        return NetworkScenario(**kw)

    @property
    def geometry_is_fixed(self) -> bool:
        return self.fixed_distances is not None and self.fixed_noise_vars is not None


# The simulation section fixes sigma_theta^2 = 1 but not alpha; 0.9 is our pick.
DEFAULT_ALPHA = 0.9

PRESETS = {
    "paper-sec7": dict(distance_range=(2.0, 8.0), noise_var_range=(0.0, 0.5)),
    "paper-fig5": dict(distance_range=(2.0, 8.0), noise_var_range=(0.4, 0.5)),
}


def preset(name: str = "paper-sec7", n_sensors: int = 10, **overrides) -> ScenarioTemplate:
    if name not in PRESETS:
        raise ValidationError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}")
    kw = dict(
        model=GaussMarkovModel.from_stationary(DEFAULT_ALPHA, 1.0),
        path_loss_exp=1.0,
        fc_noise_var=0.5,
        sum_power=300.0,
        initial_mse=0.5,
        n_sensors=n_sensors,
    )
    kw.update(PRESETS[name])
    kw.update(overrides)
    return ScenarioTemplate(**kw)


# ---------------------------------------------------------------------------
# scenario files

SCENARIO_KEYS = {
    "preset", "n_sensors", "distances", "meas_noise_vars", "path_loss_exp",
    "fc_noise_var", "sum_power", "indiv_powers", "alpha", "sigma_u_sq",
    "sigma_theta_sq", "initial_mse", "distance_range", "noise_var_range",
    "geometry_seed",
}


def _parse_alpha(v):
    if isinstance(v, (int, float)):
        return complex(v)
    if isinstance(v, list) and len(v) == 2 and all(isinstance(x, (int, float)) for x in v):
        return complex(v[0], v[1])
    if isinstance(v, dict) and set(v) <= {"re", "im"}:
        return complex(v.get("re", 0.0), v.get("im", 0.0))
    raise ScenarioError("field 'alpha': expected a number, [re, im] or {\"re\": .., \"im\": ..}")


def _number(doc, key, default=None, integer=False):
    if key not in doc:
        return default
    v = doc[key]
    ok = isinstance(v, int) if integer else isinstance(v, (int, float))
    if isinstance(v, bool) or not ok:
        raise ScenarioError(f"field {key!r}: expected {'an integer' if integer else 'a number'}, got {v!r}")
    return v


def _vector(doc, key):
    if key not in doc:
        return None
    v = doc[key]
    if not isinstance(v, list) or not all(isinstance(x, (int, float)) and not isinstance(x, bool) for x in v):
        raise ScenarioError(f"field {key!r}: expected a list of numbers")
    return np.array(v, dtype=float)


def _pair(doc, key, default):
    if key not in doc:
        return default
    v = doc[key]
    if not (isinstance(v, list) and len(v) == 2 and all(isinstance(x, (int, float)) for x in v) and v[0] <= v[1]):
        raise ScenarioError(f"field {key!r}: expected [low, high] with low <= high")
    return float(v[0]), float(v[1])


def template_from_dict(doc: dict) -> ScenarioTemplate:
    """Build a ScenarioTemplate from a parsed scenario document."""
    if not isinstance(doc, dict):
        raise ScenarioError("scenario document must be a JSON object")
    unknown = set(doc) - SCENARIO_KEYS
    if unknown:
        raise ScenarioError(f"unknown field(s): {', '.join(sorted(unknown))}")
    base = preset(doc.get("preset", "paper-sec7"))

    alpha = _parse_alpha(doc["alpha"]) if "alpha" in doc else base.model.alpha
    su = _number(doc, "sigma_u_sq")
    st = _number(doc, "sigma_theta_sq")
    try:
        if su is not None and st is not None:
            m = GaussMarkovModel(alpha, su)
            if not np.isclose(m.sigma_theta_sq, st, rtol=1e-12):
                raise ScenarioError("fields 'sigma_u_sq' and 'sigma_theta_sq' are inconsistent for the given alpha")
        elif su is not None:
            m = GaussMarkovModel(alpha, su)
        else:
            m = GaussMarkovModel.from_stationary(alpha, base.model.sigma_theta_sq if st is None else st)
    except ScenarioError:
        raise
    except ValidationError as exc:
        raise ScenarioError(f"field 'alpha'/'sigma': {exc}") from exc

    d = _vector(doc, "distances")
    s = _vector(doc, "meas_noise_vars")
    p = _vector(doc, "indiv_powers")
    n = _number(doc, "n_sensors", integer=True)
    lengths = {k: len(v) for k, v in (("distances", d), ("meas_noise_vars", s), ("indiv_powers", p)) if v is not None}
    if n is None:
        n = next(iter(lengths.values()), base.n_sensors)
    if n < 1:
        raise ScenarioError("field 'n_sensors': must be a positive integer")
    for k, ln in lengths.items():
        if ln != n:
            raise ScenarioError(f"field {k!r}: length {ln} does not match n_sensors = {n}")

    try:
        return replace(
            base,
            model=m,
            n_sensors=n,
            path_loss_exp=float(_number(doc, "path_loss_exp", base.path_loss_exp)),
            fc_noise_var=float(_number(doc, "fc_noise_var", base.fc_noise_var)),
            sum_power=float(_number(doc, "sum_power", base.sum_power)),
            initial_mse=float(_number(doc, "initial_mse", base.initial_mse)),
            distance_range=_pair(doc, "distance_range", base.distance_range),
            noise_var_range=_pair(doc, "noise_var_range", base.noise_var_range),
            fixed_distances=d,
            fixed_noise_vars=s,
            indiv_powers=p,
        )
    except ValidationError as exc:
        raise ScenarioError(str(exc)) from exc


def load_template(path) -> tuple[ScenarioTemplate, int]:
    """Parse a scenario file into a template plus its geometry seed."""
    text = Path(path).read_text()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"{path}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
    tmpl = template_from_dict(doc)
    seed = _number(doc, "geometry_seed", 0, integer=True)
    return tmpl, seed


def load_scenario(path) -> NetworkScenario:
    """Load and validate a scenario file.

    Omitted fields take the ``paper-sec7`` preset values; omitted distances or
    noise variances are drawn from the preset ranges using ``geometry_seed``.
    """
    tmpl, seed = load_template(path)
    try:
        return tmpl.realize(tmpl.n_sensors, np.random.default_rng(seed))
    except ScenarioError:
        raise
    except ValidationError as exc:
        raise ScenarioError(str(exc)) from exc


def scenario_to_dict(sc: NetworkScenario) -> dict:
    return {
        "n_sensors": sc.n_sensors,
        "distances": sc.distances.tolist(),
        "meas_noise_vars": sc.meas_noise_vars.tolist(),
        "path_loss_exp": sc.path_loss_exp,
        "fc_noise_var": sc.fc_noise_var,
        "sum_power": sc.sum_power,
        "indiv_powers": sc.indiv_powers.tolist(),
        "alpha": [sc.model.alpha.real, sc.model.alpha.imag],
        "sigma_u_sq": sc.model.sigma_u_sq,
        "initial_mse": sc.initial_mse,
    }
