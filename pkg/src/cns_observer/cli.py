"""Command line: ``run``, ``config``, ``design`` and ``theory``."""

from __future__ import annotations

import argparse
import csv
import itertools
import math
import sys
from typing import Optional, Sequence

from . import kernels as kernel_backend
from .experiments import (
    SCENARIOS,
    ConfigError,
    ScenarioConfig,
    emit_plot_data,
    load_config,
    run_scenario,
)
from .spectral import (
    FluidParams,
    KernelCoeffs,
    design_kernels_density,
    design_kernels_velocity,
    eigenvalues_closed_form,
)


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _fmt3(v) -> str:
    if v is None or v == "":
        return "-"
    if isinstance(v, float):
        if math.isinf(v):
            return "inf"
        return f"{v:.3f}"
    if isinstance(v, complex):
        return f"{v.real:.3f}{v.imag:+.3f}j"
    return str(v)


def _print_table(header: Sequence[str], rows: Sequence[Sequence], out) -> None:
    cells = [[_fmt3(v) for v in row] for row in rows]
    widths = [max(len(h), *(len(r[i]) for r in cells)) if cells else len(h) for i, h in enumerate(header)]
    out.write("  ".join(h.rjust(w) for h, w in zip(header, widths)) + "\n")
    for r in cells:
        out.write("  ".join(c.rjust(w) for c, w in zip(r, widths)) + "\n")


def _params(args) -> FluidParams:
    return FluidParams.from_nu(args.nu, gamma=args.gamma, rho0=args.rho0, n=args.dim)


def cmd_run(args, out) -> int:
    cfg = load_config(args.config, args.set or ())
    result = run_scenario(cfg, workers=args.workers)
    paths = emit_plot_data(result, args.out)
    cols = ("value", "theory_rate", "numeric_rate", "theory_period", "numeric_period",
            "theory_amplitude", "numeric_amplitude", "final_err_rho")
    used = [c for c in cols if c == "value" or any(c in r for r in result.rows)]
    rows = [[r.get(c) for c in used] + [r["status"]] for r in result.rows]
    header = [cfg.sweep_param if c == "value" else c for c in used] + ["status"]
    out.write(f"scenario {cfg.scenario} (backend {kernel_backend.BACKEND})\n")
    _print_table(header, rows, out)
    if result.fit is not None:
        slope, intercept, r2 = result.fit
        out.write(f"rate = {slope:.3f} L + {intercept:.3f}  (r^2 = {r2:.3f})\n")
    out.write(f"wrote {len(paths)} files to {paths[-1].parent}\n")
    failed = [r for r in result.rows if r["status"] != "ok"]
    return 1 if failed and len(failed) == len(result.rows) else 0


def cmd_config(args, out) -> int:
    cfg = ScenarioConfig.default(args.scenario)
    out.write(cfg.to_ini())
    return 0


def cmd_design(args, out) -> int:
    params = _params(args)
    design = design_kernels_velocity if args.observe == "velocity" else design_kernels_density
    kern = design(args.rate, args.cutoff, params)
    kmax = int(math.floor(args.cutoff))
    header = ("k", "coeff_rho", "coeff_u", "decay_rate", "discriminant")
    rows = []
    for k in range(1, kmax + 1):
        eig = eigenvalues_closed_form(params, kern, k if params.n == 1 else [k] + [0] * (params.n - 1))
        rows.append((k, kern.rho_at(k * k), kern.u_at(k * k), eig.decay_rate, eig.discriminant))
    if args.csv:
        _write_csv(header, rows, out)
    else:
        out.write(f"{args.observe} kernels for rate {args.rate} on |k| <= {args.cutoff}\n")
        _print_table(header, rows, out)
    return 0


def cmd_theory(args, out) -> int:
    params = _params(args)
    header = ("phi_rho", "phi_u", "decay_rate", "period", "discriminant", "lambda_plus", "lambda_minus")
    rows = []
    mode = args.mode if params.n == 1 else [args.mode] + [0] * (params.n - 1)
    for phi_rho, phi_u in itertools.product(args.phi_rho, args.phi_u):
        kern = KernelCoeffs.uniform(phi_rho, phi_u, target=args.observe)
        eig = eigenvalues_closed_form(params, kern, mode)
        rows.append((phi_rho, phi_u, eig.decay_rate, eig.period, eig.discriminant,
                     eig.lambda_plus, eig.lambda_minus))
    if args.csv:
        _write_csv(header, rows, out)
    else:
        _print_table(header, rows, out)
    return 0


def _write_csv(header, rows, out) -> None:
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow(["" if v is None else repr(v) if isinstance(v, (float, complex)) else v for v in row])


def _add_physics(p) -> None:
    p.add_argument("--gamma", type=float, default=1.4)
    p.add_argument("--nu", type=float, default=0.05, help="1D viscosity 2 mu + lambda")
    p.add_argument("--rho0", type=float, default=1.0)
    p.add_argument("--dim", type=int, default=1, help="space dimension n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="cns-observer", description="Observers for the barotropic compressible Navier-Stokes system.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    run = sub.add_parser("run", help="run a scenario and write CSV results")
    run.add_argument("config", help=f"config file, or a scenario id ({', '.join(SCENARIOS)})")
    run.add_argument("--set", action="append", metavar="KEY=VALUE", help="override a config key")
    run.add_argument("--out", default="out", help="output directory (default: out)")
    run.add_argument("--workers", type=int, default=None, help="parallel sweep entries")
    run.set_defaults(func=cmd_run)

    cfg = sub.add_parser("config", help="print the default config of a scenario")
    cfg.add_argument("scenario", choices=SCENARIOS)
    cfg.set_defaults(func=cmd_config)

    design = sub.add_parser("design", help="print kernel coefficients for a target decay rate")
    design.add_argument("--rate", type=float, required=True)
    design.add_argument("--cutoff", type=float, required=True)
    design.add_argument("--observe", choices=("velocity", "density"), default="velocity")
    design.add_argument("--csv", action="store_true", help="full-precision CSV output")
    _add_physics(design)
    design.set_defaults(func=cmd_design)

    theory = sub.add_parser("theory", help="closed-form eigenvalues of one mode")
    theory.add_argument("--phi-u", type=float, nargs="+", default=[0.0])
    theory.add_argument("--phi-rho", type=float, nargs="+", default=[0.0])
    theory.add_argument("--mode", type=int, default=1)
    theory.add_argument("--observe", choices=("velocity", "density"), default="velocity",
                        help="density: phi values are the psi coefficients")
    theory.add_argument("--csv", action="store_true", help="full-precision CSV output")
    _add_physics(theory)
    theory.set_defaults(func=cmd_theory)
    return parser


def _error_line(kind: str, message: str, field: Optional[str] = None) -> str:
    message = " ".join(str(message).split()).replace('"', "'")
    where = f" field={field}" if field else ""
    return f'error kind={kind}{where} message="{message}"\n'


def main(argv: Optional[Sequence[str]] = None, out=None, err=None) -> int:
    out = out or sys.stdout
    err = err or sys.stderr
    try:
        args = build_parser().parse_args(argv)
        return args.func(args, out)
    except UsageError as exc:
        err.write(_error_line("usage", exc))
        return 2
    except ConfigError as exc:
        err.write(_error_line("config", exc, exc.field))
        return 2
    except (ValueError, ArithmeticError) as exc:
        err.write(_error_line("value", exc))
        return 2
    except OSError as exc:
        err.write(_error_line("io", exc))
        return 1


if __name__ == "__main__":
    sys.exit(main())
