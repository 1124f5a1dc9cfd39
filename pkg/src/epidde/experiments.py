"""Parameter sweeps, bifurcation diagrams and interval sensitivity scans.

Every grid point is an independent simulation. With ``jobs > 1`` the points
run on a thread pool (the compiled integrator releases the GIL); results are
always assembled in grid order, so tables do not depend on ``jobs``.
"""

from __future__ import annotations

import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Callable, Iterable, Sequence

import numpy as np

from .analysis import reproduction_number
from .dde import ConfigurationError, IntegrationError
from .model import (
    COMPARTMENTS,
    ModelParams,
    ParameterError,
    TempBetaModel,
    simulate,
    time_average,
)

__all__ = [
    "SENSITIVITY_PARAMETERS",
    "REFERENCE_VERDICTS",
    "SensitivityResult",
    "SweepSpec",
    "SweepTable",
    "UnmappedParameterWarning",
    "bifurcation_onset",
    "bifurcation_sweep",
    "grid",
    "isolation_delay_sweep",
    "isolation_probability_sweep",
    "mse_by_moments",
    "r0_sweep",
    "check_reference_verdicts",
    "run_sweep",
    "sensitivity_scan",
    "temperature_sweep",
]

AVG_COLUMNS = tuple(f"avg_{c}" for c in COMPARTMENTS)


class UnmappedParameterWarning(UserWarning):
    pass


def grid(start: float, stop: float, step: float) -> np.ndarray:
    """Inclusive uniform grid; values are rounded to 12 decimals."""
    if not step > 0:
        raise ConfigurationError(f"grid step must be positive, got {step}")
    if stop < start:
        raise ConfigurationError(f"grid stop {stop} is below start {start}")
    n = int(math.floor((stop - start) / step + 1e-9)) + 1
    return np.round(start + step * np.arange(n), 12)


def _map(fn: Callable, items: Sequence, jobs: int) -> list:
    if jobs <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, items))


@dataclass(frozen=True)
class SweepTable:
    """One row per grid point. Failed points keep their row with NaN
    responses and a non-empty entry in ``flags``."""

    columns: tuple[str, ...]
    data: np.ndarray
    flags: tuple[str, ...]
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        arr = np.array(self.data, dtype=float)
        arr.setflags(write=False)
        object.__setattr__(self, "data", arr)
        if arr.shape != (len(self.flags), len(self.columns)):
            raise ValueError("table shape does not match columns/flags")

    def column(self, name: str) -> np.ndarray:
        return self.data[:, self.columns.index(name)]

    def __len__(self) -> int:
        return len(self.flags)

    @property
    def failed(self) -> list[int]:
        return [k for k, f in enumerate(self.flags) if f]


@dataclass(frozen=True)
class SweepSpec:
    """What to vary and what to measure.

    ``swept`` is ``temperature``, ``beta``, ``p``, ``tau`` or a model field
    name. ``response`` is ``averages`` (time-averaged compartments), ``r0``
    or ``amplitude`` (min/max of I over the tail window).
    """

    swept: str
    values: tuple[float, ...]
    response: str = "averages"
    base: ModelParams = field(default_factory=ModelParams)
    temperature: float = 0.0
    horizon: float = 500.0
    step: float = 0.01
    tail_window: float = 0.25
    window: tuple[float, float] | None = None

    def __post_init__(self):
        object.__setattr__(self, "values", tuple(float(v) for v in self.values))
        if self.response not in ("averages", "r0", "amplitude"):
            raise ConfigurationError(f"unknown response {self.response!r}")
        if not 0 < self.tail_window <= 1:
            raise ConfigurationError("tail_window must lie in (0, 1]")
        if not self.values:
            raise ConfigurationError("empty sweep grid")

    def point(self, value: float) -> tuple[ModelParams, float]:
        """Parameters and temperature for one grid value."""
        params, temp = self.base, self.temperature
        if self.swept == "temperature":
            temp = value
        elif self.swept == "beta":
            params = params.with_beta(value)
        elif self.swept in _FIELDS:
            params = params.replace(**{self.swept: value})
        else:
            raise ConfigurationError(f"cannot sweep {self.swept!r}")
        return params, temp


_FIELDS = ("mu", "epsilon", "gamma", "p", "tau", "kappa", "rho", "alpha", "delta", "omega")


def run_sweep(spec: SweepSpec, jobs: int = 1) -> SweepTable:
    name = spec.swept
    if spec.response == "r0":
        columns = (name, "beta", "R0")
    elif spec.response == "averages":
        columns = (name, "beta") + AVG_COLUMNS
    else:
        columns = (name, "I_min", "I_max", "amplitude")

    if spec.response != "r0":
        # reject lag/step conflicts before any work starts
        for v in spec.values:
            params, _ = spec.point(v)
            lags = [x for x in (params.tau, params.kappa) if x > 0]
            if lags and spec.step > min(lags) * (1 + 1e-12):
                raise ConfigurationError(
                    f"{name} = {v:g}: step {spec.step} exceeds the smallest positive lag")

    def one(v: float):
        params, temp = spec.point(v)
        beta = params.beta(temp)
        if spec.response == "r0":
            return (v, beta, reproduction_number(params, beta)), ""
        try:
            traj = simulate(params, temp, spec.horizon, spec.step)
        except IntegrationError as exc:
            n_resp = len(columns) - 1
            return (v,) + (math.nan,) * n_resp, f"integration failed at t={exc.time:g}"
        if spec.response == "averages":
            avgs = tuple(time_average(traj, c, spec.window) for c in COMPARTMENTS)
            return (v, beta) + avgs, ""
        start = traj.t_end - spec.tail_window * (traj.t_end - traj.t0)
        tail = traj.states[traj.times >= start - 1e-9, 2]
        lo, hi = float(tail.min()), float(tail.max())
        return (v, lo, hi, hi - lo), ""

    results = _map(one, spec.values, jobs)
    return SweepTable(columns, [r for r, _ in results], tuple(f for _, f in results),
                      metadata={"swept": name, "response": spec.response,
                                "horizon": spec.horizon, "step": spec.step,
                                "temperature": spec.temperature,
                                "tail_window": spec.tail_window, "base": spec.base})


def _with_kind(base: ModelParams, kind: str) -> ModelParams:
    if kind not in ("linear", "quadratic"):
        raise ConfigurationError("temperature sweeps need a linear or quadratic beta")
    if base.beta_model.kind == kind:
        return base
    return base.replace(beta_model=getattr(TempBetaModel, kind)())


def temperature_sweep(base: ModelParams | None = None, kind: str = "linear",
                      temperatures: Iterable[float] | None = None, horizon: float = 500.0,
                      step: float = 0.01, window=None, jobs: int = 1) -> SweepTable:
    """Time-averaged compartments against temperature (default −10..40 °C by 5).

    Columns ``T, beta, avg_S .. avg_D``.
    """
    base = _with_kind(base or ModelParams(), kind)
    temps = grid(-10, 40, 5) if temperatures is None else temperatures
    spec = SweepSpec("temperature", tuple(temps), "averages", base, horizon=horizon,
                     step=step, window=window)
    table = run_sweep(spec, jobs)
    return replace(table, columns=("T",) + table.columns[1:],
                   metadata={**table.metadata, "kind": kind})


def isolation_probability_sweep(base: ModelParams | None = None, values=None,
                                temperature: float = 0.0, horizon: float = 500.0,
                                step: float = 0.01, window=None, jobs: int = 1) -> SweepTable:
    values = grid(0, 1, 0.1) if values is None else values
    return run_sweep(SweepSpec("p", tuple(values), "averages", base or ModelParams(),
                               temperature, horizon, step, window=window), jobs)


def isolation_delay_sweep(base: ModelParams | None = None, values=None,
                          temperature: float = 0.0, horizon: float = 500.0,
                          step: float = 0.01, window=None, jobs: int = 1) -> SweepTable:
    values = grid(0, 10, 1) if values is None else values
    return run_sweep(SweepSpec("tau", tuple(values), "averages", base or ModelParams(),
                               temperature, horizon, step, window=window), jobs)


def r0_sweep(vs: str, values, base: ModelParams | None = None,
             temperature: float = 0.0) -> SweepTable:
    """R₀ against ``T``, ``p``, ``tau`` or ``beta`` (closed form, no simulation)."""
    swept = {"T": "temperature"}.get(vs, vs)
    if swept not in ("temperature", "p", "tau", "beta"):
        raise ConfigurationError(f"R0 sweeps support T, p, tau, beta; got {vs!r}")
    table = run_sweep(SweepSpec(swept, tuple(values), "r0", base or ModelParams(),
                                temperature))
    return replace(table, columns=(vs,) + table.columns[1:])


def bifurcation_sweep(base: ModelParams, beta: float, taus, horizon: float = 2000.0,
                      step: float = 0.01, tail_window: float = 0.25,
                      jobs: int = 1) -> SweepTable:
    """min/max/amplitude of I over the last ``tail_window`` of each run."""
    spec = SweepSpec("tau", tuple(taus), "amplitude", base.with_beta(beta),
                     horizon=horizon, step=step, tail_window=tail_window)
    return run_sweep(spec, jobs)


def bifurcation_onset(table: SweepTable, threshold: float = 1e-3) -> tuple[float, float] | None:
    """``(tau_before, tau_first)`` around the first amplitude above ``threshold``.

    Failed (diverging) runs count as above threshold.
    """
    taus = table.column("tau")
    amp = table.column("amplitude")
    for k in range(len(taus)):
        if table.flags[k] or amp[k] > threshold:
            return (float(taus[k - 1]) if k else -math.inf, float(taus[k]))
    return None


# ---------------------------------------------------------------------------
# sensitivity


SENSITIVITY_PARAMETERS = ("mu", "beta", "alpha", "gamma", "epsilon", "delta", "rho", "p",
                          "tau", "kappa", "birth_rate", "omega")

# rows of the reference sensitivity verdicts: (parameter, interval, sensitive?)
REFERENCE_VERDICTS = (
    ("mu", (0.0, 0.5), True),
    ("mu", (0.5, 2.5), False),
    ("beta", (0.0, 0.5), True),
    ("beta", (2.0, 3.0), False),
    ("alpha", (0.0, 1.0), False),
    ("alpha", (2.0, 5.0), False),
    ("gamma", (0.0, 1.0), True),
    ("gamma", (1.0, 2.5), False),
    ("epsilon", (0.0, 0.5), True),
    ("epsilon", (1.5, 2.5), False),
    ("omega", (0.0, 2.0), True),
    ("omega", (2.0, 4.0), True),
    ("delta", (0.0, 1.0), False),
    ("delta", (1.0, 2.5), False),
)


@dataclass(frozen=True)
class SensitivityResult:
    """Fan of I(t) curves for one parameter interval and its spread.

    ``mse`` is the pointwise mean squared deviation from ``mean`` over the
    members that integrated successfully. Any diverging member makes
    ``max_mse`` infinite and the verdict ``sensitive``.
    """

    parameter: str
    mapped_to: str
    interval: tuple[float, float]
    step: float
    values: np.ndarray
    times: np.ndarray
    fan: np.ndarray
    mean: np.ndarray
    mse: np.ndarray
    threshold: float
    failed: tuple[float, ...] = ()
    notes: tuple[str, ...] = ()

    @property
    def max_mse(self) -> float:
        if self.failed:
            return math.inf
        return float(self.mse.max()) if self.mse.size else 0.0

    @property
    def sensitive(self) -> bool:
        return self.max_mse > self.threshold

    @property
    def verdict(self) -> str:
        return "sensitive" if self.sensitive else "insensitive"


def _resolve_parameter(name: str, exploratory: bool) -> tuple[str, list[str]]:
    if name not in SENSITIVITY_PARAMETERS:
        raise ConfigurationError(
            f"unknown sensitivity parameter {name!r}; choose from {', '.join(SENSITIVITY_PARAMETERS)}")
    if name != "omega":
        return name, []
    msg = "parameter 'omega' does not appear in the model equations (unmapped parameter)"
    warnings.warn(msg, UnmappedParameterWarning, stacklevel=3)
    if not exploratory:
        raise ConfigurationError(msg + "; rerun in exploratory mode to map it to rho")
    return "rho", [msg, "mapped to rho under exploratory mode"]


def _member(base: ModelParams, name: str, value: float, temperature: float):
    if name == "beta":
        return base.with_beta(value), temperature
    if name == "birth_rate":
        return base.replace(omega=value), temperature
    return base.replace(**{name: value}), temperature


def sensitivity_scan(parameter: str, interval: tuple[float, float], step: float = 0.01,
                     base: ModelParams | None = None, temperature: float = 0.0,
                     horizon: float = 500.0, sim_step: float = 0.01,
                     threshold: float = 1e-4, exploratory: bool = False,
                     record_every: float = 0.1, jobs: int = 1) -> SensitivityResult:
    """Vary one parameter across ``interval`` and measure the spread of I(t).

    ``omega`` stands for the row of the reference verdicts that names a symbol
    absent from the model; it is only accepted in exploratory mode, where it
    is mapped to ``rho``. ``birth_rate`` varies Ω on its own (Ω ≠ μ).
    """
    target, notes = _resolve_parameter(parameter, exploratory)
    base = base or ModelParams()
    base = replace(base, exploratory=exploratory or base.exploratory)
    a, b = interval
    values = grid(a, b, step) if b > a else np.array([float(a)])
    stride = max(1, int(round(record_every / sim_step)))

    members = []
    for v in values:
        try:
            members.append(_member(base, target, float(v), temperature))
        except ParameterError as exc:
            raise ConfigurationError(
                f"{parameter} = {v:g} is outside the epidemiological range ({exc}); "
                "use exploratory mode") from None
    for params, _ in members:
        lags = [x for x in (params.tau, params.kappa) if x > 0]
        if lags and sim_step > min(lags) * (1 + 1e-12):
            raise ConfigurationError("sim_step exceeds the smallest positive lag")

    def one(member):
        params, temp = member
        try:
            traj = simulate(params, temp, horizon, sim_step)
        except IntegrationError:
            return None
        return traj.states[::stride, 2].copy()

    curves = _map(one, members, jobs)
    n_t = (len(next((c for c in curves if c is not None), np.empty(0))) or
           len(np.arange(0, horizon + 1e-9, sim_step)[::stride]))
    times = np.arange(n_t) * sim_step * stride
    fan = np.full((len(values), n_t), np.nan)
    failed = []
    for k, c in enumerate(curves):
        if c is None:
            failed.append(float(values[k]))
        else:
            fan[k] = c
    ok = fan[~np.isnan(fan).any(axis=1)]
    if len(ok):
        mean = ok.mean(axis=0)
        mse = ((ok - mean) ** 2).mean(axis=0)
    else:
        mean = np.full(n_t, np.nan)
        mse = np.full(n_t, np.nan)
    if failed:
        notes = notes + [f"{len(failed)} of {len(values)} members diverged"]
    return SensitivityResult(parameter, target, (float(a), float(b)), step, values, times,
                             fan, mean, mse, threshold, tuple(failed), tuple(notes))


def mse_by_moments(fan: np.ndarray) -> np.ndarray:
    """E[I²] − Ī² per time point with compensated (``math.fsum``) sums."""
    n = fan.shape[0]
    out = np.empty(fan.shape[1])
    for j in range(fan.shape[1]):
        col = fan[:, j]
        m = math.fsum(col) / n
        out[j] = math.fsum(col * col) / n - m * m
    return out


def check_reference_verdicts(base: ModelParams | None = None, threshold: float = 1e-4,
                     horizon: float = 500.0, jobs: int = 1, exploratory: bool = True):
    """Run every row of the reference sensitivity verdicts.

    Returns a list of dicts with the computed verdict, the reference one and
    whether they agree. Rows that cannot run (the unmapped ``omega`` row
    outside exploratory mode) carry ``verdict = None``.
    """
    rows = []
    for name, interval, expected in REFERENCE_VERDICTS:
        entry = {"parameter": name, "interval": interval, "expected_sensitive": expected}
        try:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", UnmappedParameterWarning)
                res = sensitivity_scan(name, interval, base=base, threshold=threshold,
                                       horizon=horizon, exploratory=exploratory, jobs=jobs)
        except ConfigurationError as exc:
            entry.update(verdict=None, max_mse=math.nan, match=False, note=str(exc))
            rows.append(entry)
            continue
        entry.update(verdict=res.verdict, max_mse=res.max_mse,
                     match=res.sensitive == expected, mapped_to=res.mapped_to,
                     failed=len(res.failed), note="; ".join(res.notes))
        rows.append(entry)
    return rows
