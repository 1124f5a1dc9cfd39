"""Flat ``key = value`` run configuration.

Keys are the model parameters (``mu``, ``epsilon``, ``gamma``, ``p``,
``tau``, ``kappa``, ``rho``, ``alpha``, ``delta``, ``omega``; Greek symbols
are accepted as aliases), the transmission settings under ``beta.*``, the
initial state under ``init.*``, numerics and optional grids. ``omega`` follows
``mu`` unless it is given.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, fields

from .dde import ConfigurationError
from .model import DEFAULT_INITIAL, ModelParams, ParameterError, State, TempBetaModel

__all__ = ["ConfigError", "RunConfig", "format_config", "load_config", "parse_config"]


class ConfigError(ConfigurationError):
    """Every problem found in one configuration text, with line numbers."""

    def __init__(self, problems: list[tuple[int, str]]):
        self.problems = list(problems)
        lines = [f"line {n}: {msg}" if n else msg for n, msg in self.problems]
        super().__init__("invalid configuration:\n  " + "\n  ".join(lines))


@dataclass(frozen=True)
class RunConfig:
    params: ModelParams = field(default_factory=ModelParams)
    init: State = DEFAULT_INITIAL
    temperature: float = 0.0
    step: float = 0.01
    horizon: float = 500.0
    tail_window: float = 0.25
    threshold: float = 1e-4
    grid: tuple[float, float, float] | None = None
    exploratory: bool = False
    jobs: int = 1
    out: str | None = None

    @property
    def beta(self) -> float:
        return self.params.beta(self.temperature)


_PARAM_KEYS = ("mu", "epsilon", "gamma", "p", "tau", "kappa", "rho", "alpha", "delta", "omega")
_ALIASES = {"μ": "mu", "ε": "epsilon", "γ": "gamma", "τ": "tau", "κ": "kappa", "ρ": "rho",
            "α": "alpha", "δ": "delta", "Ω": "omega", "β": "beta", "T": "temperature"}
_BETA_KEYS = ("beta.kind", "beta.beta0", "beta.beta1", "beta.t_m", "beta.value")
_INIT_KEYS = tuple(f"init.{c}" for c in "SEIQRD")
_NUM_KEYS = ("temperature", "step", "horizon", "tail_window", "threshold",
             "grid.start", "grid.stop", "grid.step")
_OTHER_KEYS = ("beta", "exploratory", "jobs", "out")
KNOWN_KEYS = _PARAM_KEYS + _BETA_KEYS + _INIT_KEYS + _NUM_KEYS + _OTHER_KEYS
_NONNEG = ("mu", "epsilon", "gamma", "p", "tau", "kappa", "rho", "alpha", "delta", "omega")


def _canonical(key: str) -> str:
    head, _, rest = key.partition(".")
    head = _ALIASES.get(head, head)
    return f"{head}.{rest}" if rest else head


def _parse_bool(text: str) -> bool:
    low = text.lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"expected a boolean, got {text!r}")


def parse_config(text: str, overrides: dict[str, str] | None = None) -> RunConfig:
    """Parse configuration text; ``overrides`` are applied after the text.

    All problems are collected and raised together as :class:`ConfigError`.
    """
    problems: list[tuple[int, str]] = []
    raw: dict[str, tuple[int, str]] = {}
    for n, line in enumerate(text.splitlines(), start=1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        if "=" not in body:
            problems.append((n, f"expected 'key = value', got {body!r}"))
            continue
        key, value = (s.strip() for s in body.split("=", 1))
        key = _canonical(key)
        if key not in KNOWN_KEYS:
            problems.append((n, f"unknown key {key!r}"))
            continue
        if key in raw:
            problems.append((n, f"duplicate key {key!r} (first on line {raw[key][0]})"))
            continue
        raw[key] = (n, value)
    for key, value in (overrides or {}).items():
        key = _canonical(key)
        if key not in KNOWN_KEYS:
            problems.append((0, f"unknown key {key!r} in override"))
            continue
        raw[key] = (0, str(value))

    vals: dict[str, object] = {}
    for key, (n, value) in raw.items():
        try:
            if key in ("beta.kind", "out"):
                vals[key] = value
            elif key == "exploratory":
                vals[key] = _parse_bool(value)
            elif key == "jobs":
                vals[key] = int(value)
                if vals[key] < 1:
                    raise ValueError("jobs must be >= 1")
            else:
                x = float(value)
                if not math.isfinite(x):
                    raise ValueError(f"{key} must be finite, got {value!r}")
                vals[key] = x
        except ValueError as exc:
            msg = str(exc)
            if "could not convert" in msg or "invalid literal" in msg:
                msg = f"{key}: non-numeric value {value!r}"
            problems.append((n, msg))

    def line(key):
        return raw[key][0]

    exploratory = bool(vals.get("exploratory", False))
    for key in _NONNEG:
        if key in vals and vals[key] < 0:
            problems.append((line(key), f"{key} = {vals[key]:g} violates {key} >= 0"))
    for key in ("p", "alpha"):
        if key in vals and vals[key] > 1 and not exploratory:
            problems.append((line(key), f"{key} = {vals[key]:g} exceeds 1; "
                                        "set exploratory = true to allow it"))
    for key in ("step", "horizon"):
        if key in vals and not vals[key] > 0:
            problems.append((line(key), f"{key} must be > 0"))
    if "tail_window" in vals and not 0 < vals["tail_window"] <= 1:
        problems.append((line("tail_window"), "tail_window must lie in (0, 1]"))
    if "threshold" in vals and vals["threshold"] < 0:
        problems.append((line("threshold"), "threshold must be >= 0"))

    beta_model = TempBetaModel()
    kind = vals.get("beta.kind")
    if "beta" in vals:
        if kind not in (None, "fixed"):
            problems.append((line("beta"), "beta = <value> conflicts with beta.kind"))
        kind = "fixed"
        vals.setdefault("beta.value", vals["beta"])
    try:
        if kind in (None, "linear"):
            beta_model = TempBetaModel.linear(vals.get("beta.beta0", 0.84),
                                              vals.get("beta.beta1", -0.00425))
        elif kind == "quadratic":
            beta_model = TempBetaModel.quadratic(vals.get("beta.beta0", 0.792),
                                                 vals.get("beta.beta1", 0.000345),
                                                 vals.get("beta.t_m", 7.73))
        elif kind == "fixed":
            if "beta.value" not in vals:
                problems.append((line("beta.kind"), "beta.kind = fixed needs beta.value"))
            else:
                beta_model = TempBetaModel.fixed(vals["beta.value"])
        else:
            problems.append((line("beta.kind"), f"unknown beta.kind {kind!r}"))
    except ParameterError as exc:
        problems.append((0, str(exc)))

    grid = None
    gkeys = ("grid.start", "grid.stop", "grid.step")
    if any(k in vals for k in gkeys):
        if not all(k in vals for k in gkeys):
            problems.append((0, "grid needs grid.start, grid.stop and grid.step"))
        else:
            grid = tuple(vals[k] for k in gkeys)
            if not grid[2] > 0:
                problems.append((line("grid.step"), "grid.step must be > 0"))
            if not grid[1] > grid[0]:
                problems.append((line("grid.stop"), "grid.stop must exceed grid.start"))

    init = State(*(vals.get(f"init.{c}", v) for c, v in zip("SEIQRD", DEFAULT_INITIAL)))
    for c, v in zip("SEIQRD", init):
        if v < 0:
            problems.append((line(f"init.{c}"), f"init.{c} must be >= 0"))

    if problems:
        raise ConfigError(problems)
    kw = {k: vals[k] for k in _PARAM_KEYS if k in vals}
    try:
        params = ModelParams(beta_model=beta_model, exploratory=exploratory, **kw)
    except ParameterError as exc:
        raise ConfigError([(0, str(exc))]) from None
    return RunConfig(params=params, init=init,
                     temperature=vals.get("temperature", 0.0),
                     step=vals.get("step", 0.01), horizon=vals.get("horizon", 500.0),
                     tail_window=vals.get("tail_window", 0.25),
                     threshold=vals.get("threshold", 1e-4), grid=grid,
                     exploratory=exploratory, jobs=vals.get("jobs", 1), out=vals.get("out"))


def load_config(path: str | None, overrides: dict[str, str] | None = None) -> RunConfig:
    """Read a config file; ``None`` or ``"defaults"`` means the built-in defaults."""
    if path in (None, "defaults"):
        return parse_config("", overrides)
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError([(0, f"cannot read {path}: {exc.strerror}")]) from None
    return parse_config(text, overrides)


def format_config(cfg: RunConfig) -> str:
    """Every resolved value, in a form :func:`parse_config` reads back exactly."""
    p = cfg.params
    out = ["# resolved configuration"]
    for f in fields(ModelParams):
        if f.name in ("beta_model", "exploratory"):
            continue
        v = getattr(p, f.name)
        if v is None:
            out.append(f"# {f.name} follows mu")
        else:
            out.append(f"{f.name} = {v!r}")
    bm = p.beta_model
    out.append(f"beta.kind = {bm.kind}")
    if bm.kind == "fixed":
        out.append(f"beta.value = {bm.fixed_value!r}")
    else:
        out.append(f"beta.beta0 = {bm.beta0!r}")
        out.append(f"beta.beta1 = {bm.beta1!r}")
        if bm.kind == "quadratic":
            out.append(f"beta.t_m = {bm.t_m!r}")
    for c, v in zip("SEIQRD", cfg.init):
        out.append(f"init.{c} = {float(v)!r}")
    for key in ("temperature", "step", "horizon", "tail_window", "threshold"):
        out.append(f"{key} = {getattr(cfg, key)!r}")
    if cfg.grid is not None:
        for key, v in zip(("grid.start", "grid.stop", "grid.step"), cfg.grid):
            out.append(f"{key} = {v!r}")
    out.append(f"exploratory = {str(cfg.exploratory).lower()}")
    out.append(f"jobs = {cfg.jobs}")
    if cfg.out is not None:
        out.append(f"out = {cfg.out}")
    return "\n".join(out) + "\n"
