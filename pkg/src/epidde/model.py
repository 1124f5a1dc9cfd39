"""Six-compartment SEIQRD model with delayed isolation and quarantine exit.

Compartments are population fractions::

    S' = Ω - β S I - μ S
    E' = β S I - (ε + μ) E
    I' = ε E - γ I - p e^{-γτ} I(t-τ) - μ I
    Q' = p e^{-γτ} I(t-τ) - ρ(1-α) Q(t-κ) - δα Q - μ Q
    R' = γ I + ρ(1-α) Q(t-κ) - μ R
    D' = δα Q - μ D

β may depend on the ambient temperature (linear or quadratic response).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field, replace
from typing import NamedTuple

import numba as nb
import numpy as np

from .dde import DelayedVectorField, Trajectory, integrate_compiled

__all__ = [
    "COMPARTMENTS",
    "DEFAULT_INITIAL",
    "BetaClampedWarning",
    "ModelParams",
    "ParameterError",
    "State",
    "TempBetaModel",
    "beta_at",
    "rhs",
    "simulate",
    "time_average",
    "vector_field",
]

COMPARTMENTS = ("S", "E", "I", "Q", "R", "D")


class State(NamedTuple):
    s: float
    e: float
    i: float
    q: float
    r: float
    d: float


DEFAULT_INITIAL = State(0.999, 0.0, 0.001, 0.0, 0.0, 0.0)


class ParameterError(ValueError):
    pass


class BetaClampedWarning(UserWarning):
    """β(T) evaluated below zero and was clamped."""


@dataclass(frozen=True)
class TempBetaModel:
    """Transmission rate as a function of temperature (°C).

    ``linear``: β₀ + β₁·T. ``quadratic``: β₀ − β₁·(T − T_M)². ``fixed``: a
    constant that ignores T.
    """

    kind: str = "linear"
    beta0: float = 0.84
    beta1: float = -0.00425
    t_m: float = 7.73
    fixed_value: float | None = None

    def __post_init__(self):
        if self.kind not in ("linear", "quadratic", "fixed"):
            raise ParameterError(f"unknown beta kind {self.kind!r}")
        if self.kind == "fixed":
            if self.fixed_value is None or not math.isfinite(self.fixed_value):
                raise ParameterError("fixed beta needs a finite fixed_value")
            if self.fixed_value < 0:
                raise ParameterError("fixed beta must be nonnegative")

    @classmethod
    def linear(cls, beta0: float = 0.84, beta1: float = -0.00425) -> "TempBetaModel":
        return cls("linear", beta0, beta1)

    @classmethod
    def quadratic(cls, beta0: float = 0.792, beta1: float = 0.000345,
                  t_m: float = 7.73) -> "TempBetaModel":
        return cls("quadratic", beta0, beta1, t_m)

    @classmethod
    def fixed(cls, value: float) -> "TempBetaModel":
        return cls("fixed", fixed_value=float(value))

    def __call__(self, temperature: float) -> float:
        return beta_at(self, temperature)


def beta_at(model: TempBetaModel, temperature: float) -> float:
    """Evaluate β at ``temperature``, clamped at zero (with a warning)."""
    if model.kind == "fixed":
        return float(model.fixed_value)
    if model.kind == "linear":
        value = model.beta0 + model.beta1 * temperature
    else:
        value = model.beta0 - model.beta1 * (temperature - model.t_m) ** 2
    if value < 0.0:
        warnings.warn(f"beta({temperature}) = {value:.6g} < 0 clamped to 0",
                      BetaClampedWarning, stacklevel=2)
        return 0.0
    return float(value)


_RATE_FIELDS = ("mu", "epsilon", "gamma", "tau", "kappa", "rho", "delta")


@dataclass(frozen=True)
class ModelParams:
    """Rate constants (1/day), probabilities and delays (days).

    ``omega`` (the birth rate Ω) follows ``mu`` unless set explicitly.
    Setting ``exploratory`` lifts the [0, 1] bounds on ``p`` and ``alpha``,
    which sensitivity scans need.
    """

    mu: float = 0.062
    epsilon: float = 0.1961
    gamma: float = 1 / 7
    p: float = 0.4
    tau: float = 4.0
    kappa: float = 14.0
    rho: float = 1 / 14
    alpha: float = 0.0043
    delta: float = 1.0
    omega: float | None = None
    beta_model: TempBetaModel = field(default_factory=TempBetaModel)
    exploratory: bool = False

    def __post_init__(self):
        bad = []
        for name in _RATE_FIELDS + ("p", "alpha"):
            v = getattr(self, name)
            if not (isinstance(v, (int, float)) and math.isfinite(v)) or v < 0:
                bad.append(f"{name}={v!r} must be finite and >= 0")
        if self.omega is not None and (not math.isfinite(self.omega) or self.omega < 0):
            bad.append(f"omega={self.omega!r} must be finite and >= 0")
        if not self.exploratory:
            for name in ("p", "alpha"):
                v = getattr(self, name)
                if isinstance(v, (int, float)) and v > 1:
                    bad.append(f"{name}={v!r} exceeds 1 (allowed only in exploratory mode)")
        if bad:
            raise ParameterError("; ".join(bad))

    @property
    def birth_rate(self) -> float:
        return self.mu if self.omega is None else float(self.omega)

    @property
    def isolation_rate(self) -> float:
        """Effective removal factor p·e^{-γτ} applied to I(t-τ)."""
        return self.p * math.exp(-self.gamma * self.tau)

    def beta(self, temperature: float = 0.0) -> float:
        return beta_at(self.beta_model, temperature)

    def with_beta(self, value: float) -> "ModelParams":
        return replace(self, beta_model=TempBetaModel.fixed(value))

    def replace(self, **changes) -> "ModelParams":
        return replace(self, **changes)

    def as_array(self, beta: float) -> np.ndarray:
        """Packed layout consumed by the compiled right-hand side."""
        return np.array([self.birth_rate, self.mu, self.epsilon, self.gamma, self.p,
                         self.tau, self.kappa, self.rho, self.alpha, self.delta, beta])


def rhs(t: float, x, i_lag: float, q_lag: float, params: ModelParams,
        temperature: float = 0.0) -> np.ndarray:
    """Right-hand side with ``i_lag`` = I(t-τ) and ``q_lag`` = Q(t-κ)."""
    s, e, i, q, r, d = x
    beta = params.beta(temperature)
    mu = params.mu
    infection = beta * s * i
    isolation = params.isolation_rate * i_lag
    release = params.rho * (1.0 - params.alpha) * q_lag
    dying = params.delta * params.alpha * q
    return np.array([
        params.birth_rate - infection - mu * s,
        infection - (params.epsilon + mu) * e,
        params.epsilon * e - params.gamma * i - isolation - mu * i,
        isolation - release - dying - mu * q,
        params.gamma * i + release - mu * r,
        dying - mu * d,
    ])


def vector_field(params: ModelParams, temperature: float = 0.0) -> DelayedVectorField:
    """The model as a generic delayed field (lags τ on I and κ on Q)."""

    def f(t, x, delayed):
        return rhs(t, x, delayed[0][2], delayed[1][3], params, temperature)

    return DelayedVectorField(6, (params.tau, params.kappa), f)


@nb.njit(cache=True, nogil=True)
def _compiled_rhs(t, x, delayed, P, out):
    omega, mu, eps, gam, p, tau, _kappa, rho, alpha, delta, beta = (
        P[0], P[1], P[2], P[3], P[4], P[5], P[6], P[7], P[8], P[9], P[10])
    infection = beta * x[0] * x[2]
    isolation = p * math.exp(-gam * tau) * delayed[0, 2]
    release = rho * (1.0 - alpha) * delayed[1, 3]
    dying = delta * alpha * x[3]
    out[0] = omega - infection - mu * x[0]
    out[1] = infection - (eps + mu) * x[1]
    out[2] = eps * x[1] - gam * x[2] - isolation - mu * x[2]
    out[3] = isolation - release - dying - mu * x[3]
    out[4] = gam * x[2] + release - mu * x[4]
    out[5] = dying - mu * x[5]


def simulate(params: ModelParams, temperature: float = 0.0, horizon: float = 500.0,
             step: float = 0.01, init=DEFAULT_INITIAL) -> Trajectory:
    """Integrate the model on ``[0, horizon]`` with history ≡ ``init`` for t ≤ 0.

    Raises :class:`~epidde.dde.IntegrationError` if the solution blows up and
    :class:`~epidde.dde.ConfigurationError` if ``step`` exceeds a positive lag.
    """
    if not horizon > 0:
        raise ParameterError(f"horizon must be positive, got {horizon}")
    beta = params.beta(temperature)
    return integrate_compiled(_compiled_rhs, params.as_array(beta),
                              (params.tau, params.kappa), np.asarray(init, dtype=float),
                              0.0, float(horizon), step)


def _component_index(component) -> int:
    if isinstance(component, str):
        try:
            return COMPARTMENTS.index(component.upper())
        except ValueError:
            raise ValueError(f"unknown compartment {component!r}") from None
    return int(component)


def time_average(traj: Trajectory, component, window: tuple[float, float] | None = None) -> float:
    """Trapezoidal time-mean of one compartment over ``window``.

    ``component`` is an index or one of ``"SEIQRD"``. The window defaults to
    the whole trajectory; interior grid points are used as they are and the
    endpoints are interpolated when they fall between grid points.
    """
    idx = _component_index(component)
    t_a, t_b = (traj.t0, traj.t_end) if window is None else window
    slack = 1e-9 * max(1.0, abs(traj.t_end))
    if not (traj.t0 - slack <= t_a < t_b <= traj.t_end + slack):
        raise ValueError(f"window {window} outside trajectory span [{traj.t0}, {traj.t_end}]")
    t_a = max(t_a, traj.t0)
    t_b = min(t_b, traj.t_end)
    times = traj.times
    y = traj.states[:, idx]
    inner = (times > t_a) & (times < t_b)
    ts = np.concatenate(([t_a], times[inner], [t_b]))
    ys = np.concatenate(([traj(t_a)[idx]], y[inner], [traj(t_b)[idx]]))
    return float(np.trapezoid(ys, ts) / (t_b - t_a))
