"""Command-line front end.

    squeezed-qfi qfi     --gamma-t 5 --r 1 --phi 0.3 --theta 0.6
    squeezed-qfi evolve  --t-end 5 --stride 100 --output traj.csv
    squeezed-qfi figure  fig4c --out-dir out --plot-script
    squeezed-qfi verify  --grid-density 1

Every subcommand accepts ``--config FILE`` (flat ``key = value`` lines whose
keys are the long flag names without leading dashes; flags given on the
command line win) and ``--print-config`` (echo the effective configuration
in the same format and exit).

Exit codes: 0 ok, 1 usage/config error, 2 numerical failure, 3 verification
failure.
"""
from __future__ import annotations

import argparse
import math
import sys
from pathlib import Path

import numpy as np

from .core import (
    ConfigError,
    DomainError,
    IntegrationError,
    ReservoirSpec,
    SingularityError,
    prepare_output_state,
)
from .dynamics import DEFAULT_DT, EvolutionMode, decay_clock, evolve_numeric, solution_coefficients
from .experiments import DEFAULT_POINTS, FIGURES, PARAMETERS, figure_preset, format_float, run_sweep
from .metrology import cramer_rao_bound, qfi_report
from .verification import verify_suite

EXIT_OK, EXIT_USAGE, EXIT_NUMERIC, EXIT_VERIFY = 0, 1, 2, 3
EVOLVE_HEADER = "gamma_t,rho_ee,re_rho_eg,im_rho_eg,purity"
_META = {"config", "print_config", "command", "func"}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def __init__(self, *args, **kwargs):
        kwargs.setdefault("allow_abbrev", False)
        super().__init__(*args, **kwargs)

    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def _mode(value):
    try:
        return EvolutionMode.parse(value).value
    except DomainError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _positive_int(value):
    n = int(value)
    if n < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {value}")
    return n


def _reservoir_flags(p):
    p.add_argument("--gamma-t", type=float, default=0.0, help="dimensionless time gamma*t")
    p.add_argument("--lambda", dest="lambda_", type=float, default=0.1,
                   help="spectral width lambda/gamma")
    p.add_argument("--r", type=float, default=0.0, help="squeezing magnitude")
    p.add_argument("--theta", type=float, default=0.0, help="squeezing phase (rad)")
    p.add_argument("--phi", type=float, default=0.0, help="imprinted phase (rad)")
    p.add_argument("--kT", dest="kT", type=float, default=0.0, help="temperature kT/omega0")
    p.add_argument("--mode", type=_mode, default=EvolutionMode.NON_MARKOVIAN.value,
                   help="nonMarkovian (Lorentzian spectrum) or markovian")


def build_parser():
    common = _Parser(add_help=False)
    common.add_argument("--config", help="flat key = value file with defaults for the flags")
    common.add_argument("--print-config", action="store_true",
                        help="print the effective configuration and exit")

    parser = _Parser(prog="squeezed-qfi", description=__doc__.split("\n\n")[0])
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True

    p = sub.add_parser("qfi", parents=[common], help="QFI by all routes at one point")
    _reservoir_flags(p)
    p.add_argument("--nu", type=_positive_int, default=1, help="number of repetitions")
    p.add_argument("--csv", help="also write a single-row CSV here")
    p.set_defaults(func=cmd_qfi)

    p = sub.add_parser("evolve", parents=[common], help="integrate the master equation")
    _reservoir_flags(p)
    p.add_argument("--t-end", type=float, default=10.0, help="final gamma*t")
    p.add_argument("--dt", type=float, default=DEFAULT_DT, help="RK4 step (1/gamma)")
    p.add_argument("--stride", type=_positive_int, default=1, help="keep every n-th step")
    p.add_argument("--output", help="CSV path (default: stdout)")
    p.set_defaults(func=cmd_evolve)

    p = sub.add_parser("figure", parents=[common], help="write a figure sweep as CSV")
    p.add_argument("id", help="one of " + ", ".join(FIGURES))
    p.add_argument("--points", type=_positive_int, default=DEFAULT_POINTS,
                   help="samples per continuous axis")
    p.add_argument("--out-dir", default=".", help="output directory")
    p.add_argument("--plot-script", action="store_true",
                   help="also write a matplotlib script that plots the CSV")
    p.add_argument("--set", dest="overrides", action="append", default=[],
                   metavar="NAME=VALUE", help="override a fixed parameter, e.g. lambda=0.01")
    p.set_defaults(func=cmd_figure)

    p = sub.add_parser("verify", parents=[common], help="run the self-verification suite")
    p.add_argument("--grid-density", type=_positive_int, default=1)
    p.set_defaults(func=cmd_verify)
    return parser


def _options(subparser):
    """Map config keys (long flag names) to argparse actions."""
    out = {}
    for action in subparser._actions:
        for opt in action.option_strings:
            if opt.startswith("--"):
                out[opt[2:]] = action
    return out


def load_config(path):
    """Read a flat ``key = value`` file; '#' starts a comment."""
    entries = {}
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
        key = key.strip().lstrip("-")
        if key in entries:
            raise ConfigError(f"{path}:{lineno}: duplicate key {key!r}")
        entries[key] = value.strip()
    return entries


def _apply_config(subparser, entries):
    options = _options(subparser)
    defaults = {}
    for key, value in entries.items():
        action = options.get(key)
        if action is None or action.dest in _META or action.dest == "help":
            raise ConfigError(f"unknown config key {key!r}; allowed: "
                              + ", ".join(k for k, a in options.items()
                                          if a.dest not in _META and a.dest != "help"))
        if isinstance(action, argparse._StoreTrueAction):
            defaults[action.dest] = value.lower() in ("1", "true", "yes", "on")
        elif isinstance(action, argparse._AppendAction):
            defaults[action.dest] = [v.strip() for v in value.split(",") if v.strip()]
        else:
            try:
                defaults[action.dest] = action.type(value) if action.type else value
            except (ValueError, argparse.ArgumentTypeError) as exc:
                raise ConfigError(f"bad value for {key!r}: {exc}") from None
    subparser.set_defaults(**defaults)


def effective_config(subparser, args):
    lines = []
    for key, action in _options(subparser).items():
        if action.dest in _META or action.dest == "help":
            continue
        value = getattr(args, action.dest, None)
        if value is None:
            continue
        if isinstance(value, list):
            value = ",".join(value)
        elif isinstance(value, bool):
            value = "true" if value else "false"
        elif isinstance(value, float):
            value = repr(value)
        lines.append(f"{key} = {value}")
    return "\n".join(lines)


def _spec(args):
    return ReservoirSpec(lambda_over_gamma=args.lambda_, r=args.r, theta=args.theta,
                         kT_over_omega=args.kT)


def _fmt6(v):
    if isinstance(v, bool):
        return "true" if v else "false"
    return format(float(v) + 0.0, ".6g")


def cmd_qfi(args, out):
    spec = _spec(args)
    n = spec.n
    vt = decay_clock(args.gamma_t, spec.lambda_over_gamma, args.mode)
    coeffs = solution_coefficients(vt, n, spec.r)
    rep = qfi_report(args.phi, args.theta, coeffs, n)
    delta = cramer_rao_bound(rep.qfi_analytic, args.nu) if rep.qfi_analytic > 0 else math.inf
    rows = [
        ("gamma_t", args.gamma_t), ("mode", args.mode), ("n", n), ("vartheta", vt),
        ("A", coeffs.A), ("B1", coeffs.B1), ("B2", coeffs.B2),
        ("qfi_analytic", rep.qfi_analytic), ("qfi_eigen", rep.qfi_eigen),
        ("qfi_bloch", rep.qfi_bloch),
        ("max_pairwise_disagreement", rep.max_pairwise_disagreement),
        ("thermal_baseline", rep.thermal_baseline), ("advantage", rep.advantage),
        ("margin", rep.margin), ("phase_threshold", rep.threshold),
        ("phase_threshold_advantage", rep.threshold_advantage),
        ("printed_threshold", rep.printed_threshold),
        ("printed_threshold_advantage", rep.printed_advantage),
        ("nu", args.nu), ("delta_phi", delta),
    ]
    for key, value in rows:
        text = value if isinstance(value, str) else (
            str(value) if isinstance(value, int) and not isinstance(value, bool) else _fmt6(value))
        out.write(f"{key} = {text}\n")
    if args.csv:
        numeric = [(k, v) for k, v in rows if not isinstance(v, str)]
        text = (",".join(k for k, _ in numeric) + "\n"
                + ",".join(format_float(v) for _, v in numeric) + "\n")
        _write(args.csv, text)
    return EXIT_OK


def cmd_evolve(args, out):
    spec = _spec(args)
    traj = evolve_numeric(prepare_output_state(args.phi), spec, args.mode,
                          t_end=args.t_end, dt=args.dt, stride=args.stride)
    rho = traj.rhos
    purity = np.real(np.einsum("tij,tji->t", rho, rho))
    lines = [EVOLVE_HEADER]
    for t, r, p in zip(traj.times * spec.gamma, rho, purity):
        lines.append(",".join(format_float(v) for v in
                              (t, r[0, 0].real, r[0, 1].real, r[0, 1].imag, p)))
    text = "\n".join(lines) + "\n"
    if args.output:
        _write(args.output, text)
    else:
        out.write(text)
    return EXIT_OK


PLOT_TEMPLATE = '''"""Plot {csv}. Generated file; edit freely."""
import numpy as np
import matplotlib.pyplot as plt

data = np.genfromtxt({csv!r}, delimiter=",", names=True)
axes = {axes!r}
value = {value!r}

fig, ax = plt.subplots(figsize=(6, 4))
if len(axes) == 1:
    ax.plot(data[axes[0]], data[value])
    ax.set_xlabel(axes[0])
else:
    x, y = axes[0], axes[1]
    ys = np.unique(data[y])
    xs = np.unique(data[x])
    if len(ys) <= 8:
        for v in ys:
            sel = data[y] == v
            ax.plot(data[x][sel], data[value][sel], label=f"{{y}} = {{v:g}}")
        ax.legend()
        ax.set_xlabel(x)
    else:
        grid = data[value].reshape(len(xs), len(ys))
        mesh = ax.pcolormesh(ys, xs, grid, shading="auto")
        fig.colorbar(mesh, ax=ax, label=value)
        ax.set_xlabel(y)
        ax.set_ylabel(x)
if len(axes) == 1 or len(ys) <= 8:
    ax.set_ylabel(value)
fig.tight_layout()
fig.savefig({png!r}, dpi=150)
'''


def cmd_figure(args, out):
    if args.id not in FIGURES:
        raise ConfigError(f"unknown figure id {args.id!r}; valid ids: " + ", ".join(FIGURES))
    overrides = {}
    for item in args.overrides:
        name, sep, value = item.partition("=")
        name = name.strip()
        if not sep or name not in PARAMETERS:
            raise ConfigError(f"--set expects NAME=VALUE with NAME in {', '.join(PARAMETERS)}")
        try:
            overrides[name] = float(value)
        except ValueError:
            raise ConfigError(f"--set {name}: not a number: {value!r}") from None
    spec = figure_preset(args.id, points=args.points, **overrides)
    table = run_sweep(spec)
    out_dir = Path(args.out_dir)
    csv_path = out_dir / f"{args.id}.csv"
    files = {csv_path: table.to_csv()}
    if args.plot_script:
        script = PLOT_TEMPLATE.format(csv=csv_path.name, axes=list(spec.axis_names),
                                      value=spec.outputs[0], png=f"{args.id}.png")
        files[out_dir / f"{args.id}_plot.py"] = script
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise ConfigError(f"cannot create {out_dir}: {exc}") from None
    for path, text in files.items():
        _write(path, text)
        out.write(f"wrote {path} ({len(table)} rows)\n" if path == csv_path else f"wrote {path}\n")
    return EXIT_OK


def cmd_verify(args, out):
    report = verify_suite(args.grid_density)
    out.write(report.format() + "\n")
    return EXIT_OK if report.passed else EXIT_VERIFY


def _write(path, text):
    try:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    except OSError as exc:
        raise ConfigError(f"cannot write {path}: {exc}") from None


def main(argv=None, out=None):
    out = out or sys.stdout
    parser = build_parser()
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        args = parser.parse_args(argv)
        subparser = parser._subparsers._group_actions[0].choices[args.command]
        if args.config:
            _apply_config(subparser, load_config(args.config))
            args = parser.parse_args(argv)
        if args.print_config:
            out.write(effective_config(subparser, args) + "\n")
            return EXIT_OK
        return args.func(args, out)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except (ConfigError, DomainError) as exc:
        print(f"squeezed-qfi: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (SingularityError, IntegrationError, FloatingPointError) as exc:
        print(f"squeezed-qfi: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
