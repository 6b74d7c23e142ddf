"""Command-line entry point ``afm``.

Exit codes: 0 success, 2 invalid input, 3 numerical non-convergence.
"""

from __future__ import annotations

import argparse
import csv
import io
import os
import sys
import warnings

from . import fabry_perot as fp
from . import optimizer as opt
from . import zeno
from .amplitude import DiscriminationPair, bound_rhs, eta, identity_gap, object_from_alpha, parse_complex
from .engine import EngineError, ev_report, run_pair
from .serialize import dumps, format_float
from .sweep import property_sweep

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_NONCONVERGED = 3


class NonConvergence(Exception):
    """Raised after a report was written for a run that did not converge."""


def _complex_arg(text: str) -> complex:
    try:
        return parse_complex(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text!r}")
    return value


def _float_list(text: str) -> list[float]:
    try:
        return [float(part) for part in text.split(",") if part.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _real_part(z: complex, name: str) -> float:
    if z.imag != 0.0:
        raise ValueError(f"{name} must be real here")
    return z.real


def _cx(z: complex) -> dict:
    return {"re": z.real, "im": z.imag}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("-o", "--output", help="write to this file instead of stdout")
    common.add_argument("--quiet", action="store_true", help="no progress messages on stderr")
    common.add_argument("--seed", type=int, default=0, help="RNG seed (AFM_SEED overrides)")

    parser = argparse.ArgumentParser(prog="afm", description="Absorption-free discrimination of grey objects.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("bound", parents=[common], help="discrimination bound for two objects")
    p.add_argument("--alpha1", type=_complex_arg, required=True)
    p.add_argument("--alpha2", type=_complex_arg, required=True)

    p = sub.add_parser("ev", parents=[common], help="Elitzur-Vaidman bomb tester")
    p.add_argument("--alpha", type=_complex_arg, default=0j, help="transparency of the probed object")

    p = sub.add_parser("zeno", parents=[common], help="Zeno interferometer with n rounds")
    p.add_argument("--alpha2", type=_complex_arg, required=True)
    p.add_argument("--n", type=_positive_int, required=True)
    p.add_argument("--schedule-out", help="CSV file for the rotation schedule")

    p = sub.add_parser("optimize", parents=[common], help="near-optimal schedule search")
    p.add_argument("--alpha1", type=_complex_arg, required=True)
    p.add_argument("--alpha2", type=_complex_arg, required=True)
    p.add_argument("--eps", type=float, default=1e-4)
    p.add_argument("--lambda-lo", type=float, default=0.5)
    p.add_argument("--lambda-hi", type=float, default=2.0)
    p.add_argument("--orth-tol", type=float, default=1e-8)
    p.add_argument("--max-steps", type=_positive_int, default=10**6)
    p.add_argument("--grid-points", type=_positive_int, default=200)
    p.add_argument("--out", help="CSV file for the schedule")

    p = sub.add_parser("fp", parents=[common], help="Fabry-Perot cavity simulation")
    p.add_argument("--c", type=float, required=True)
    p.add_argument("--alpha", type=_complex_arg, required=True)
    p.add_argument("--cells", type=_positive_int, default=4, help="lattice half-width")
    p.add_argument("--pulse", type=_positive_int, default=None)
    p.add_argument("--steps", type=_positive_int, default=None)

    p = sub.add_parser("fp-sweep", parents=[common], help="Fabry-Perot reflection over several c")
    p.add_argument("--c-list", type=_float_list, required=True)
    p.add_argument("--alpha", type=_complex_arg, required=True)
    p.add_argument("--pulse", type=_positive_int, default=None)

    p = sub.add_parser("verify", parents=[common], help="random-protocol check of the bound")
    p.add_argument("--trials", type=_positive_int, default=1000)
    p.add_argument("--dim-max", type=int, default=8)
    p.add_argument("--max-steps", type=_positive_int, default=20)
    return parser


def _progress(args, message: str) -> None:
    if not args.quiet:
        print(message, file=sys.stderr)


def cmd_bound(args) -> str:
    pair = DiscriminationPair.from_alphas(args.alpha1, args.alpha2)
    return dumps({
        "alpha1": _cx(pair.obj1.alpha),
        "alpha2": _cx(pair.obj2.alpha),
        "eta": eta(pair),
        "eta_sq": bound_rhs(pair),
        "identity_gap": identity_gap(pair),
    })


def cmd_ev(args) -> str:
    return dumps(ev_report(args.alpha))


def cmd_zeno(args) -> str:
    alpha2 = args.alpha2
    real = alpha2.imag == 0.0 and alpha2.real >= 0.0
    if real:
        schedule = zeno.zeno_schedule_real(alpha2.real, args.n)
        protocol = zeno.build_zeno_real(alpha2.real, args.n)
    else:
        schedule = zeno.zeno_schedule_complex(alpha2, args.n)
        protocol = zeno.build_zeno_complex(alpha2, args.n)
    theta = schedule.thetas[0]
    trace = run_pair(protocol, DiscriminationPair.from_alphas(1.0, alpha2))
    p1, p2 = trace.p_ident
    g = zeno.gamma(theta, alpha2)
    if args.schedule_out:
        rows = schedule.rotations() if real else list(schedule.thetas)
        with open(args.schedule_out, "w", newline="") as fh:
            opt.write_schedule_rows(fh, rows)
    return dumps({
        "theta": theta,
        "theta_prime": zeno.theta_prime(theta, abs(alpha2)),
        "gamma": g,
        "p_ident_1": p1,
        "p_ident_2": p2,
        "p_interact_2": trace.trace2.p_interact,
        "predicted_p_ident_2": g ** (2 * args.n),
    })


def cmd_optimize(args) -> str:
    with warnings.catch_warnings():
        if args.quiet:
            warnings.simplefilter("ignore")
        config = opt.OptimizerConfig(
            _real_part(args.alpha1, "alpha1"),
            _real_part(args.alpha2, "alpha2"),
            epsilon=args.eps,
            lambda_range=(args.lambda_lo, args.lambda_hi),
            orth_tol=args.orth_tol,
            max_steps=args.max_steps,
            grid_points=args.grid_points,
        )
    _progress(args, f"searching lambda in [{args.lambda_lo}, {args.lambda_hi}] on {config.grid_points} points")
    report = opt.search_lambda(config)
    _progress(args, f"lambda* = {report.lambda_star!r}, {report.n_steps} steps, success={report.success}")
    if args.out and report.success:
        opt.emit_schedule(report, args.out)
    text = dumps(report.to_dict())
    if not report.success:
        raise NonConvergence(text)
    return text


def cmd_fp(args) -> str:
    obj = object_from_alpha(args.alpha)
    auto = fp.FPConfig.auto(args.c, obj.alpha, args.pulse, args.cells)
    config = fp.FPConfig(args.c, args.cells, auto.pulse_len, args.steps or auto.t_steps)
    return dumps(fp.simulate_fp(config, obj).to_dict())


def cmd_fp_sweep(args) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["c", "fL_sim", "fL_closed", "abs_err", "p_interact"])
    for c, report in fp.fp_sweep(args.c_list, args.alpha, args.pulse):
        _progress(args, f"c={c}: abs_err={report.abs_err:.3e}")
        writer.writerow([
            format_float(c),
            format_float(report.fL_sim.real),
            format_float(report.fL_closed.real),
            format_float(report.abs_err),
            format_float(report.p_interact),
        ])
    return buf.getvalue()


def cmd_verify(args) -> str:
    seed = int(os.environ.get("AFM_SEED", args.seed))
    _progress(args, f"checking {args.trials} random protocols (seed {seed})")
    return dumps(property_sweep(args.trials, dim_max=args.dim_max, seed=seed, max_steps=args.max_steps))


COMMANDS = {
    "bound": cmd_bound,
    "ev": cmd_ev,
    "zeno": cmd_zeno,
    "optimize": cmd_optimize,
    "fp": cmd_fp,
    "fp-sweep": cmd_fp_sweep,
    "verify": cmd_verify,
}


def _emit(args, text: str) -> None:
    if args.output:
        with open(args.output, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)  # exits with 2 on usage errors
    try:
        text = COMMANDS[args.command](args)
    except NonConvergence as exc:
        _emit(args, str(exc))
        return EXIT_NONCONVERGED
    except (zeno.NoRootError, fp.PlateauError, EngineError, ArithmeticError) as exc:
        print(f"afm: not converged: {exc}", file=sys.stderr)
        return EXIT_NONCONVERGED
    except (ValueError, TypeError) as exc:
        print(f"afm: invalid input: {exc}", file=sys.stderr)
        return EXIT_INVALID
    _emit(args, text)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
