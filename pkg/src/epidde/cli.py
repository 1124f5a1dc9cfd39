"""Command-line front end.

Exit codes: 0 success, 1 configuration or usage error, 2 numerical failure.
"""

from __future__ import annotations

import argparse
import os
import sys
import warnings

import numpy as np

from . import analysis, experiments
from .config import RunConfig, format_config, load_config
from .dde import ConfigurationError, IntegrationError
from .io import ResultBundle
from .model import COMPARTMENTS, ParameterError, simulate
from .validation import run_validation

COMMANDS = ("simulate", "r0", "equilibria", "stability", "critical-delay", "bifurcation",
            "sweep-temperature", "sweep-isolation", "sensitivity", "validate")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def _grid_arg(text: str) -> tuple[float, float, float]:
    try:
        parts = tuple(float(x) for x in text.split(":"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected start:stop:step, got {text!r}") from None
    if len(parts) != 3:
        raise argparse.ArgumentTypeError(f"expected start:stop:step, got {text!r}")
    return parts


def _interval_arg(text: str) -> tuple[float, float]:
    try:
        a, b = (float(x) for x in text.split(":"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a:b, got {text!r}") from None
    return a, b


def _add_globals(p: argparse.ArgumentParser, suppress: bool) -> None:
    d = (lambda v: argparse.SUPPRESS) if suppress else (lambda v: v)
    p.add_argument("--config", default=d(None),
                   help="config file, or 'defaults' for the built-in parameter set")
    p.add_argument("--out", default=d(None),
                   help="output directory (default: $EPIDDE_OUT or ./epidde-out)")
    p.add_argument("--exploratory", action="store_true", default=d(False),
                   help="allow parameter values outside the epidemiological range")
    p.add_argument("--jobs", type=int, default=d(None), help="worker threads for sweeps")
    p.add_argument("--set", action="append", default=d([]), metavar="KEY=VALUE",
                   help="override one config key (repeatable)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="epidde", description="Delayed SEIQRD epidemic model toolkit.")
    _add_globals(parser, suppress=False)
    sub = parser.add_subparsers(dest="command", metavar="COMMAND", parser_class=_Parser)

    def add(name, help_text):
        p = sub.add_parser(name, help=help_text, description=help_text)
        _add_globals(p, suppress=True)
        return p

    add("simulate", "integrate the model and write the trajectory")
    add("r0", "basic reproduction number and threshold verdict")
    add("equilibria", "disease-free and endemic equilibria")
    add("stability", "local stability reports for both equilibria")
    p = add("critical-delay", "critical isolation delay and transversality check")
    p.add_argument("--track", type=_grid_arg, metavar="START:STOP:STEP",
                   help="also locate the crossing by tracking the leading root over a tau grid")
    p = add("bifurcation", "tail amplitude of I against tau")
    p.add_argument("--taus", type=_grid_arg, metavar="START:STOP:STEP",
                   help="tau grid (default from grid.* config keys)")
    p.add_argument("--onset-threshold", type=float, default=1e-3)
    p = add("sweep-temperature", "time-averaged compartments against temperature")
    p.add_argument("--kind", choices=("linear", "quadratic"), default=None,
                   help="beta(T) response (default: the configured beta.kind)")
    p.add_argument("--temps", type=_grid_arg, metavar="START:STOP:STEP", default=(-10, 40, 5))
    p = add("sweep-isolation", "time-averaged compartments against p or tau")
    p.add_argument("--vary", choices=("p", "tau"), default="p")
    p.add_argument("--values", type=_grid_arg, metavar="START:STOP:STEP")
    p = add("sensitivity", "interval sensitivity scan of I(t)")
    p.add_argument("--parameter", help="parameter to vary")
    p.add_argument("--interval", type=_interval_arg, metavar="A:B")
    p.add_argument("--step", type=float, default=0.01, help="spacing of sampled values")
    p.add_argument("--table", action="store_true",
                   help="run every row of the reference sensitivity verdicts")
    add("validate", "run the integrator test problems")
    return parser


def _resolve(args) -> tuple[RunConfig, str]:
    overrides = {}
    for item in args.set:
        if "=" not in item:
            raise ConfigurationError(f"--set expects KEY=VALUE, got {item!r}")
        k, v = item.split("=", 1)
        overrides[k.strip()] = v.strip()
    if args.exploratory:
        overrides["exploratory"] = "true"
    if args.jobs is not None:
        overrides["jobs"] = str(args.jobs)
    cfg = load_config(args.config, overrides)
    out = args.out or cfg.out or os.environ.get("EPIDDE_OUT") or "epidde-out"
    return cfg, out


def _fmt_state(state) -> str:
    return ", ".join(f"{c}={v:.6g}" for c, v in zip(COMPARTMENTS, state))


def _thin(n: int, limit: int = 2000) -> slice:
    return slice(None, None, max(1, n // limit))


def cmd_simulate(cfg, bundle):
    traj = simulate(cfg.params, cfg.temperature, cfg.horizon, cfg.step, cfg.init)
    bundle.add_csv("trajectory.csv", traj)
    sl = _thin(len(traj))
    bundle.add_svg("trajectory.svg",
                   [(c, traj.times[sl], traj.states[sl, k]) for k, c in enumerate(COMPARTMENTS)],
                   xlabel="t (days)", ylabel="fraction of population",
                   title=f"beta = {cfg.beta:g}")
    total = traj.states.sum(axis=1)
    print(f"integrated {len(traj)} points to t = {traj.t_end:g} (beta = {cfg.beta:g})")
    print(f"final state: {_fmt_state(traj.states[-1])}")
    print(f"max |sum - 1| = {np.abs(total - 1).max():.3e}")
    return 0


def cmd_r0(cfg, bundle):
    r0 = analysis.reproduction_number(cfg.params, cfg.beta)
    verdict = ("R0 > 1: the infection persists (endemic equilibrium exists)" if r0 > 1 else
               "R0 <= 1: the infection dies out (disease-free equilibrium only)")
    print(f"beta = {cfg.beta:.6g}")
    print(f"R0 = {r0:.6g}")
    print(verdict)
    bundle.add_json("r0.json", {"beta": cfg.beta, "R0": r0, "above_threshold": r0 > 1})
    return 0


def cmd_equilibria(cfg, bundle):
    dfe = analysis.disease_free_equilibrium()
    eq = analysis.endemic_equilibrium(cfg.params, cfg.beta)
    r0 = analysis.reproduction_number(cfg.params, cfg.beta)
    print(f"R0 = {r0:.6g}")
    print(f"disease-free equilibrium: {_fmt_state(dfe)}")
    if eq is None:
        print("endemic equilibrium does not exist (R0 <= 1)")
    else:
        print(f"endemic equilibrium: {_fmt_state(eq)}")
    bundle.add_json("equilibria.json", {"R0": r0, "dfe": list(dfe),
                                        "endemic": None if eq is None else list(eq)})
    return 0


def _print_report(rep):
    print(f"[{rep.equilibrium}] verdict: {rep.verdict}")
    for k, v in rep.conditions.items():
        print(f"  {k}: {v}")
    if rep.tau_star is not None:
        print(f"  tau* = {rep.tau_star:.6g}, omega* = {rep.omega_star:.6g}")
    for note in rep.notes:
        print(f"  note: {note}")


def cmd_stability(cfg, bundle):
    dfe = analysis.classify_dfe(cfg.params, cfg.beta)
    end = analysis.classify_endemic(cfg.params, cfg.beta)
    _print_report(dfe)
    if end is None:
        print("[endemic] does not exist (R0 <= 1)")
    else:
        _print_report(end)
    bundle.add_json("stability.json", {"dfe": dfe, "endemic": end})
    return 0


def cmd_critical_delay(cfg, bundle, args):
    crit = analysis.critical_delay(cfg.params, cfg.beta)
    out = {"fixed_point": crit._asdict()}
    if not crit.found:
        print(f"no critical delay: {crit.diagnostic}")
    else:
        tr = analysis.transversality(cfg.params, cfg.beta, crit.omega_star, crit.tau_star)
        out["transversality"] = tr._asdict()
        print(f"tau* = {crit.tau_star:.8g} days, omega* = {crit.omega_star:.8g} "
              f"({crit.iterations} iterations)")
        print(f"transversality: x = {tr.x:.6g}, y = {tr.y:.6g}, z = {tr.z:.6g}, "
              f"holds = {tr.holds}")
    if args.track:
        taus = experiments.grid(*args.track)
        tracked = analysis.critical_delay_by_root_tracking(cfg.params, cfg.beta, taus)
        out["root_tracking"] = tracked
        print("root tracking: " + ("no crossing on grid" if tracked is None
                                   else f"tau* = {tracked:.8g}"))
    bundle.add_json("critical_delay.json", out)
    return 0


def cmd_bifurcation(cfg, bundle, args):
    g = args.taus or cfg.grid
    if g is None:
        raise ConfigurationError("bifurcation needs --taus START:STOP:STEP or grid.* keys")
    table = experiments.bifurcation_sweep(cfg.params, cfg.beta, experiments.grid(*g),
                                          horizon=cfg.horizon, step=cfg.step,
                                          tail_window=cfg.tail_window, jobs=cfg.jobs)
    bundle.add_csv("bifurcation.csv", table)
    tau = table.column("tau")
    bundle.add_svg("bifurcation.svg", [("I_min", tau, table.column("I_min")),
                                       ("I_max", tau, table.column("I_max"))],
                   xlabel="tau (days)", ylabel="I over tail window")
    for row, flag in zip(table.data, table.flags):
        print(f"tau = {row[0]:8.4g}  amplitude = {row[3]:.4g}" + (f"  [{flag}]" if flag else ""))
    onset = experiments.bifurcation_onset(table, args.onset_threshold)
    print("onset: none on grid" if onset is None else
          f"onset between tau = {onset[0]:g} and {onset[1]:g}")
    return 0


def _sweep_output(bundle, table, name, xlabel):
    bundle.add_csv(f"{name}.csv", table)
    x = table.data[:, 0]
    bundle.add_svg(f"{name}.svg", [(c, x, table.column(c)) for c in experiments.AVG_COLUMNS],
                   xlabel=xlabel, ylabel="time-averaged fraction")
    print(",".join(table.columns))
    for row in table.data:
        print(",".join("%.6g" % v for v in row))
    for k in table.failed:
        print(f"row {k}: {table.flags[k]}")


def cmd_sweep_temperature(cfg, bundle, args):
    kind = args.kind or (cfg.params.beta_model.kind
                         if cfg.params.beta_model.kind != "fixed" else "linear")
    table = experiments.temperature_sweep(cfg.params, kind, experiments.grid(*args.temps),
                                          cfg.horizon, cfg.step, jobs=cfg.jobs)
    _sweep_output(bundle, table, f"temperature_{kind}", "T (degC)")
    return 0


def cmd_sweep_isolation(cfg, bundle, args):
    if args.vary == "p":
        values = experiments.grid(*(args.values or (0, 1, 0.1)))
        table = experiments.isolation_probability_sweep(cfg.params, values, cfg.temperature,
                                                        cfg.horizon, cfg.step, jobs=cfg.jobs)
    else:
        values = experiments.grid(*(args.values or (0, 10, 1)))
        table = experiments.isolation_delay_sweep(cfg.params, values, cfg.temperature,
                                                  cfg.horizon, cfg.step, jobs=cfg.jobs)
    _sweep_output(bundle, table, f"isolation_{args.vary}", args.vary)
    return 0


def cmd_sensitivity(cfg, bundle, args):
    if args.table:
        rows = experiments.check_reference_verdicts(cfg.params, cfg.threshold, cfg.horizon, cfg.jobs,
                                            exploratory=cfg.exploratory)
        for r in rows:
            a, b = r["interval"]
            print(f"{r['parameter']:>8} [{a:g}, {b:g}]  computed = {r['verdict']}  "
                  f"reference = {'sensitive' if r['expected_sensitive'] else 'insensitive'}  "
                  f"max MSE = {r['max_mse']:.3g}  {'match' if r['match'] else 'MISMATCH'}")
        bundle.add_json("sensitivity_table.json", rows)
        return 0
    if not args.parameter or not args.interval:
        raise ConfigurationError("sensitivity needs --parameter and --interval (or --table)")
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", experiments.UnmappedParameterWarning)
        res = experiments.sensitivity_scan(args.parameter, args.interval, args.step,
                                           cfg.params, cfg.temperature, cfg.horizon, cfg.step,
                                           cfg.threshold, cfg.exploratory, jobs=cfg.jobs)
    for w in caught:
        print(f"warning: {w.message}", file=sys.stderr)
    name = f"sensitivity_{args.parameter}"
    summary = experiments.SweepTable(("t", "mean_I", "mse"),
                                     np.column_stack([res.times, res.mean, res.mse]),
                                     ("",) * len(res.times))
    bundle.add_csv(f"{name}.csv", summary, units={"mean_I": "fraction", "mse": "fraction^2"})
    sl = _thin(len(res.times))
    fan = [(f"{res.parameter}={v:g}", res.times[sl], res.fan[k, sl])
           for k, v in enumerate(res.values) if not np.isnan(res.fan[k]).any()]
    stride = max(1, len(fan) // 10)
    if fan:
        bundle.add_svg(f"{name}_fan.svg", fan[::stride], xlabel="t (days)", ylabel="I")
    if np.isfinite(res.mse).any():
        bundle.add_svg(f"{name}_mse.svg", [("MSE", res.times[sl], res.mse[sl])],
                       xlabel="t (days)", ylabel="mean square error")
    bundle.add_json(f"{name}.json", {"parameter": res.parameter, "mapped_to": res.mapped_to,
                                     "interval": res.interval, "verdict": res.verdict,
                                     "max_mse": res.max_mse, "threshold": res.threshold,
                                     "failed": res.failed, "notes": res.notes})
    print(f"{res.parameter} over [{res.interval[0]:g}, {res.interval[1]:g}]: "
          f"max MSE = {res.max_mse:.4g} -> {res.verdict} (threshold {res.threshold:g})")
    for note in res.notes:
        print(f"note: {note}")
    return 0


def cmd_validate(cfg, bundle):
    results = run_validation()
    for r in results:
        print(f"{'PASS' if r.passed else 'FAIL'}  {r.name}: {r.detail}")
    bundle.add_json("validation.json", [r._asdict() for r in results])
    return 0 if all(r.passed for r in results) else 2


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return 1
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    if args.command is None:
        parser.print_help(sys.stderr)
        return 1
    try:
        cfg, out = _resolve(args)
        bundle = ResultBundle(out, " ".join(["epidde"] + list(argv if argv is not None
                                                               else sys.argv[1:])),
                              format_config(cfg))
        bundle.add_text("config.txt", format_config(cfg))
        handler = globals()["cmd_" + args.command.replace("-", "_")]
        takes_args = handler.__code__.co_argcount == 3
        code = handler(cfg, bundle, args) if takes_args else handler(cfg, bundle)
        bundle.finalize()
        return code
    except (ConfigurationError, ParameterError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 1
    except (IntegrationError, FloatingPointError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
