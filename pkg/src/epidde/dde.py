"""Fixed-step RK4 integration of systems with constant discrete delays.

The solver advances with the classical four-stage Runge-Kutta scheme and keeps
the state and its derivative at every grid point, so any past time can be
recovered by cubic Hermite interpolation. Delayed arguments that fall before
``t0`` are served by the history function; zero lags are served from the stage
state itself.

Two entry points share the same stage scheme:

* :func:`integrate` takes any Python callable and is the reference route.
* :func:`integrate_compiled` takes a numba-jitted right-hand side and a
  constant history. It is what the epidemic model uses for long runs and
  sweeps.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numba as nb
import numpy as np

__all__ = [
    "ConfigurationError",
    "IntegrationError",
    "DelayedVectorField",
    "Trajectory",
    "constant_history",
    "grid_length",
    "integrate",
    "integrate_compiled",
    "interpolate",
]

# relative slack used when deciding whether a delayed time lies on the history side
_EDGE = 1e-10


class ConfigurationError(ValueError):
    """Raised for invalid integrator settings (bad step, lags, span)."""


class IntegrationError(ArithmeticError):
    """Raised when the solution stops being finite.

    The failing time is available as ``exc.time``.
    """

    def __init__(self, time: float, message: str | None = None):
        self.time = float(time)
        super().__init__(message or f"non-finite state encountered at t = {self.time:.6g}")


HistoryFunction = Callable[[float], np.ndarray]


def constant_history(value) -> HistoryFunction:
    """History that returns ``value`` for every ``t <= t0``."""
    v = np.array(value, dtype=float)
    v.setflags(write=False)

    def history(t: float) -> np.ndarray:
        return v

    history.value = v  # lets the compiled route recognise constant histories
    return history


@dataclass(frozen=True)
class DelayedVectorField:
    """Right-hand side ``rhs(t, x, delayed)`` with constant lags.

    ``delayed`` is a list holding one state vector per entry of ``delays``,
    in the same order.
    """

    dimension: int
    delays: tuple[float, ...]
    rhs: Callable[[float, np.ndarray, list], np.ndarray]

    def __post_init__(self):
        object.__setattr__(self, "delays", tuple(float(d) for d in self.delays))
        if self.dimension < 1:
            raise ConfigurationError("dimension must be a positive integer")
        if any(d < 0 or not math.isfinite(d) for d in self.delays):
            raise ConfigurationError("delays must be finite and nonnegative")

    @property
    def max_delay(self) -> float:
        return max(self.delays, default=0.0)


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Solution on a uniform grid plus what is needed for dense output.

    ``states[k]`` and ``derivatives[k]`` belong to ``t0 + k*step``. The arrays
    are read-only. ``history`` serves queries before ``t0``.
    """

    t0: float
    step: float
    states: np.ndarray
    derivatives: np.ndarray
    history: HistoryFunction | None = field(default=None, repr=False)

    def __post_init__(self):
        for name in ("states", "derivatives"):
            arr = np.array(getattr(self, name), dtype=float)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        if self.states.shape != self.derivatives.shape:
            raise ValueError("states and derivatives must have the same shape")

    @property
    def t_end(self) -> float:
        return self.t0 + (len(self.states) - 1) * self.step

    @property
    def times(self) -> np.ndarray:
        return self.t0 + self.step * np.arange(len(self.states))

    def __len__(self) -> int:
        return len(self.states)

    def __call__(self, t: float) -> np.ndarray:
        """State at ``t``; times before ``t0`` come from the history."""
        if t < self.t0:
            if self.history is None:
                raise ValueError(f"t = {t} precedes t0 and no history is attached")
            return np.asarray(self.history(t), dtype=float)
        return interpolate(self, t)

    def component(self, index: int) -> np.ndarray:
        return self.states[:, index]


def grid_length(t0: float, t_end: float, step: float) -> int:
    """Number of grid points, ``floor((t_end - t0)/step) + 1``.

    A relative tolerance absorbs representation error so that e.g. a span of
    1000 with step 0.01 gives 100001 points.
    """
    ratio = (t_end - t0) / step
    return int(math.floor(ratio * (1 + 1e-12) + 1e-9)) + 1


def _hermite(theta, h, y0, y1, m0, m1):
    t2 = theta * theta
    t3 = t2 * theta
    return ((2 * t3 - 3 * t2 + 1) * y0 + (t3 - 2 * t2 + theta) * h * m0
            + (-2 * t3 + 3 * t2) * y1 + (t3 - t2) * h * m1)


def interpolate(traj: Trajectory, t: float) -> np.ndarray:
    """Cubic Hermite value of the trajectory at ``t``.

    Exact at grid points. Raises ``ValueError`` outside ``[t0, t_end]``.
    """
    n = len(traj.states)
    h = traj.step
    t_last = traj.t_end
    slack = _EDGE * max(1.0, abs(t_last))
    if not (traj.t0 - slack <= t <= t_last + slack):
        raise ValueError(f"t = {t} outside trajectory span [{traj.t0}, {t_last}]")
    s = (t - traj.t0) / h
    k = int(math.floor(s))
    if k >= n - 1:
        if n == 1 or s <= n - 1:
            return traj.states[-1].copy()
        k = n - 2
    k = max(k, 0)
    theta = s - k
    if theta == 0.0:
        return traj.states[k].copy()
    return _hermite(theta, h, traj.states[k], traj.states[k + 1],
                    traj.derivatives[k], traj.derivatives[k + 1])


def _check_setup(delays: Sequence[float], t0: float, t_end: float, step: float) -> None:
    if not (step > 0 and math.isfinite(step)):
        raise ConfigurationError(f"step must be positive and finite, got {step}")
    if not (t_end > t0):
        raise ConfigurationError(f"t_end ({t_end}) must exceed t0 ({t0})")
    if any(d < 0 for d in delays):
        raise ConfigurationError("lags must be nonnegative")
    positive = [d for d in delays if d > 0]
    if positive and step > min(positive) * (1 + 1e-12):
        raise ConfigurationError(
            f"step {step} exceeds the smallest positive lag {min(positive)}")


def integrate(field: DelayedVectorField, history: HistoryFunction, t0: float,
              t_end: float, step: float) -> Trajectory:
    """Integrate ``field`` from ``t0`` to ``t_end`` with a fixed RK4 step.

    Parameters
    ----------
    field : DelayedVectorField
    history : callable
        State for ``t <= t0``; must cover ``[t0 - max_delay, t0]``.
    t0, t_end : float
    step : float
        Must not exceed the smallest positive lag.

    Returns
    -------
    Trajectory
        ``grid_length(t0, t_end, step)`` points; the last one may fall short
        of ``t_end`` by less than a step.
    """
    delays = field.delays
    _check_setup(delays, t0, t_end, step)
    n = grid_length(t0, t_end, step)
    dim = field.dimension
    h = float(step)

    states = np.empty((n, dim))
    derivs = np.empty((n, dim))
    states[0] = np.asarray(history(t0), dtype=float)
    if not np.all(np.isfinite(states[0])):
        raise IntegrationError(t0)

    def lookup(s: float, j: int) -> np.ndarray:
        # j: newest grid index whose state and derivative are both known
        if s <= t0 + _EDGE * max(1.0, abs(t0)) or j == 0:
            return np.asarray(history(min(s, t0)), dtype=float)
        u = (s - t0) / h
        k = int(math.floor(u))
        if k >= j:
            # only reached through rounding; extrapolate the last completed segment
            k = j - 1
        theta = u - k
        if theta == 0.0:
            return states[k]
        return _hermite(theta, h, states[k], states[k + 1], derivs[k], derivs[k + 1])

    def evaluate(t: float, x: np.ndarray, j: int) -> np.ndarray:
        delayed = [x if lag == 0.0 else lookup(t - lag, j) for lag in delays]
        return np.asarray(field.rhs(t, x, delayed), dtype=float)

    for j in range(n - 1):
        t = t0 + j * h
        x = states[j]
        k1 = evaluate(t, x, j - 1 if j else 0)
        derivs[j] = k1
        k2 = evaluate(t + 0.5 * h, x + 0.5 * h * k1, j)
        k3 = evaluate(t + 0.5 * h, x + 0.5 * h * k2, j)
        k4 = evaluate(t + h, x + h * k3, j)
        nxt = x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if not np.all(np.isfinite(nxt)):
            raise IntegrationError(t + h)
        states[j + 1] = nxt
    derivs[n - 1] = evaluate(t0 + (n - 1) * h, states[n - 1], max(n - 2, 0))
    if not np.all(np.isfinite(derivs[n - 1])):
        raise IntegrationError(t0 + (n - 1) * h)
    return Trajectory(t0=t0, step=h, states=states, derivatives=derivs, history=history)


# ---------------------------------------------------------------------------
# compiled route


@nb.njit(cache=True, nogil=True)
def _lookup_into(states, derivs, x0, t0, h, j, s, out):
    if s <= t0 + 1e-10 * max(1.0, abs(t0)) or j == 0:
        out[:] = x0
        return
    u = (s - t0) / h
    k = int(math.floor(u))
    if k >= j:
        k = j - 1
    theta = u - k
    if theta == 0.0:
        out[:] = states[k]
        return
    t2 = theta * theta
    t3 = t2 * theta
    a0 = 2 * t3 - 3 * t2 + 1
    a1 = (t3 - 2 * t2 + theta) * h
    a2 = -2 * t3 + 3 * t2
    a3 = (t3 - t2) * h
    for c in range(out.shape[0]):
        out[c] = (a0 * states[k, c] + a1 * derivs[k, c]
                  + a2 * states[k + 1, c] + a3 * derivs[k + 1, c])


@nb.njit(cache=True, nogil=True)
def _stage(rhs, params, lags, states, derivs, x0, t0, h, j, t, y, delayed, out):
    for m in range(lags.shape[0]):
        if lags[m] == 0.0:
            delayed[m, :] = y
        else:
            _lookup_into(states, derivs, x0, t0, h, j, t - lags[m], delayed[m])
    rhs(t, y, delayed, params, out)


@nb.njit(cache=True, nogil=True)
def _rk4_constant_history(rhs, params, lags, x0, t0, h, n):
    """Returns (states, derivs, failed_index); failed_index < 0 on success."""
    dim = x0.shape[0]
    states = np.empty((n, dim))
    derivs = np.empty((n, dim))
    states[0, :] = x0
    delayed = np.empty((lags.shape[0], dim))
    k1 = np.empty(dim)
    k2 = np.empty(dim)
    k3 = np.empty(dim)
    k4 = np.empty(dim)
    y = np.empty(dim)
    for j in range(n - 1):
        t = t0 + j * h
        _stage(rhs, params, lags, states, derivs, x0, t0, h, max(j - 1, 0), t, states[j],
               delayed, k1)
        derivs[j, :] = k1
        for c in range(dim):
            y[c] = states[j, c] + 0.5 * h * k1[c]
        _stage(rhs, params, lags, states, derivs, x0, t0, h, j, t + 0.5 * h, y, delayed, k2)
        for c in range(dim):
            y[c] = states[j, c] + 0.5 * h * k2[c]
        _stage(rhs, params, lags, states, derivs, x0, t0, h, j, t + 0.5 * h, y, delayed, k3)
        for c in range(dim):
            y[c] = states[j, c] + h * k3[c]
        _stage(rhs, params, lags, states, derivs, x0, t0, h, j, t + h, y, delayed, k4)
        ok = True
        for c in range(dim):
            v = states[j, c] + (h / 6.0) * (k1[c] + 2.0 * k2[c] + 2.0 * k3[c] + k4[c])
            states[j + 1, c] = v
            if not np.isfinite(v):
                ok = False
        if not ok:
            return states, derivs, j + 1
    t = t0 + (n - 1) * h
    _stage(rhs, params, lags, states, derivs, x0, t0, h, max(n - 2, 0), t, states[n - 1],
           delayed, k1)
    derivs[n - 1, :] = k1
    for c in range(dim):
        if not np.isfinite(k1[c]):
            return states, derivs, n - 1
    return states, derivs, -1


def integrate_compiled(rhs, params: np.ndarray, lags: Sequence[float], initial,
                       t0: float, t_end: float, step: float) -> Trajectory:
    """Compiled twin of :func:`integrate` for a constant history.

    ``rhs`` must be a numba ``njit`` function with signature
    ``rhs(t, x, delayed, params, out)`` writing the derivative into ``out``;
    ``delayed`` is a ``(len(lags), dim)`` array. The numba kernel releases the
    GIL, so several integrations can run on threads at once.
    """
    lags_arr = np.ascontiguousarray(lags, dtype=float)
    _check_setup(lags_arr, t0, t_end, step)
    x0 = np.ascontiguousarray(initial, dtype=float)
    if not np.all(np.isfinite(x0)):
        raise IntegrationError(t0)
    n = grid_length(t0, t_end, step)
    states, derivs, failed = _rk4_constant_history(
        rhs, np.ascontiguousarray(params, dtype=float), lags_arr, x0, float(t0), float(step), n)
    if failed >= 0:
        raise IntegrationError(t0 + failed * step)
    return Trajectory(t0=t0, step=float(step), states=states, derivatives=derivs,
                      history=constant_history(x0))
