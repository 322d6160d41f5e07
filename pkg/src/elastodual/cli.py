"""Command-line front end: runs the 1D/3D certifications, amplitude sweeps,
and the K-feasibility exploration, emitting machine-readable JSON/CSV.

Exit codes: 0 all checks pass, 1 solver error, 2 hypothesis violated,
3 no admissible K.  stdout carries data only; the DUALITY_LOG environment
variable (quiet | info | debug) controls stderr verbosity.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys

import numpy as np

from . import dual1d, fem3d, tensor3d
from .tensor3d import LameParams

EXIT_PASS = 0
EXIT_SOLVER_ERROR = 1
EXIT_HYPOTHESIS_VIOLATED = 2
EXIT_NO_ADMISSIBLE_K = 3

MAX_ELEMS_1D = 4096

log = logging.getLogger("elastodual")


def _setup_logging() -> None:
    level = {"quiet": logging.ERROR, "info": logging.INFO, "debug": logging.DEBUG}
    verbosity = os.environ.get("DUALITY_LOG", "quiet")
    logging.basicConfig(
        stream=sys.stderr,
        level=level.get(verbosity, logging.ERROR),
        format="%(levelname)s %(name)s: %(message)s",
    )


def _fmt(x: float) -> str:
    """Locale-free scientific notation with 17 significant digits."""
    return f"{x:.16e}"


def _emit(text: str, out_path: str | None) -> None:
    if out_path:
        with open(out_path, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
        if not text.endswith("\n"):
            sys.stdout.write("\n")


def _parse_vec3(text: str) -> np.ndarray:
    parts = [float(v) for v in text.split(",")]
    if len(parts) != 3:
        raise argparse.ArgumentTypeError("expected three comma-separated values")
    return np.array(parts)


def _parse_int3(text: str) -> tuple[int, int, int]:
    parts = [int(v) for v in text.split(",")]
    if len(parts) != 3:
        raise argparse.ArgumentTypeError("expected three comma-separated integers")
    return tuple(parts)  # type: ignore[return-value]


def _report_exit_code(report: dual1d.GapReport) -> int:
    if any(e.startswith("newton:") for e in report.errors):
        return EXIT_SOLVER_ERROR
    if not report.condition_ok:
        return EXIT_HYPOTHESIS_VIOLATED
    if report.errors:
        return EXIT_SOLVER_ERROR
    return EXIT_PASS if report.passed else EXIT_SOLVER_ERROR


def cmd_certify1d(args: argparse.Namespace) -> int:
    if args.n > MAX_ELEMS_1D:
        raise SystemExit(f"1D mesh capped at {MAX_ELEMS_1D} elements")
    model = dual1d.sine_load_model(args.E, args.A, args.L, args.amp, args.n)
    report = dual1d.certify(model, seed=args.seed)
    echo = {
        "subcommand": "certify1d",
        "E": args.E, "A": args.A, "L": args.L,
        "amp": args.amp, "n": args.n, "seed": args.seed,
    }
    _emit(report.to_json(config_echo=echo), args.out)
    log.info("certify1d gap=%.3e passed=%s", report.gap, report.passed)
    return _report_exit_code(report)


def cmd_sweep1d(args: argparse.Namespace) -> int:
    amps = [float(a) for a in args.amps.split(",")] if args.amps else []
    header = (
        "amp,J_primal,J_dual,gap,ux_sup_norm,min_positivity_margin,"
        "min_hessian_z,saddle_pass_fraction,newton_iters,status"
    )
    rows = [header]
    worst = EXIT_PASS
    for amp in amps:
        model = dual1d.sine_load_model(args.E, args.A, args.L, amp, args.n)
        report = dual1d.certify(model, seed=args.seed)
        if report.errors and not report.condition_ok:
            status = "HYPOTHESIS"
        elif report.errors:
            status = "FAILED"
        else:
            status = "OK" if report.passed else "FAILED"
        total = 2 * report.saddle_samples_total
        frac = (
            sum(report.saddle_samples_passed) / total if total else 0.0
        )
        rows.append(
            ",".join(
                [
                    _fmt(amp), _fmt(report.J_primal), _fmt(report.J_dual),
                    _fmt(report.gap), _fmt(report.condition_norm),
                    _fmt(report.min_positivity_margin),
                    _fmt(report.min_hessian_z), _fmt(frac),
                    str(report.newton_iters), status,
                ]
            )
        )
        worst = max(worst, _report_exit_code(report))
    _emit("\n".join(rows) + "\n", args.out)
    return worst


def cmd_certify3d(args: argparse.Namespace) -> int:
    nx, ny, nz = args.mesh
    box = args.box
    model = fem3d.SolidModel(
        lx=box[0], ly=box[1], lz=box[2], nx=nx, ny=ny, nz=nz,
        lame=LameParams(args.lam, args.mu),
        body_force=args.body, traction=args.traction,
    )
    report = fem3d.certify_3d(model, K=args.K, seed=args.seed, mode=args.mode)
    echo = {
        "subcommand": "certify3d",
        "lam": args.lam, "mu": args.mu,
        "box": list(map(float, box)), "mesh": [nx, ny, nz],
        "body": list(map(float, args.body)),
        "traction": list(map(float, args.traction)),
        "K": args.K, "mode": args.mode, "seed": args.seed,
    }
    _emit(report.to_json(config_echo=echo), args.out)
    log.info("certify3d gap=%.3e passed=%s", report.gap, report.passed)
    if any(e.startswith("newton:") for e in report.errors):
        return EXIT_SOLVER_ERROR
    if not report.condition_ok:
        return EXIT_HYPOTHESIS_VIOLATED
    if not report.k_feasible:
        return EXIT_NO_ADMISSIBLE_K
    if report.errors or not report.passed:
        return EXIT_SOLVER_ERROR
    return EXIT_PASS


def cmd_ktensor(args: argparse.Namespace) -> int:
    lame = LameParams(args.lam, args.mu)
    doc: dict = {"lam": args.lam, "mu": args.mu, "modes": {}}
    for mode in tensor3d.M_TENSOR_MODES:
        k_max = tensor3d.admissible_k_max(lame, mode)
        samples = []
        for frac in (0.25, 0.5, 0.75, 0.9, 1.1, 2.0):
            K = k_max * frac
            if K <= 0:
                continue
            _, eig = tensor3d.m_tensor_check(lame, K, mode)
            samples.append({"K": K, "min_eig_sym": eig})
        doc["modes"][mode] = {"K_max": k_max, "samples": samples}
    _emit(json.dumps(doc, indent=2, sort_keys=True), args.out)
    return EXIT_PASS


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="elastodual",
        description="Duality-gap certification for 1D and 3D nonlinear elasticity",
    )
    sub = parser.add_subparsers(dest="subcommand", required=True)

    p1 = sub.add_parser("certify1d", help="certify the 1D bar duality principle")
    p1.add_argument("--E", type=float, default=1.0)
    p1.add_argument("--A", type=float, default=1.0)
    p1.add_argument("--L", type=float, default=1.0)
    p1.add_argument("--amp", type=float, default=0.1, help="sine load amplitude")
    p1.add_argument("--n", type=int, default=64, help="number of elements")
    p1.add_argument("--seed", type=int, default=0)
    p1.add_argument("--out", default=None, help="report file (default stdout)")
    p1.set_defaults(func=cmd_certify1d)

    ps = sub.add_parser("sweep1d", help="certification sweep over amplitudes")
    ps.add_argument("--E", type=float, default=1.0)
    ps.add_argument("--A", type=float, default=1.0)
    ps.add_argument("--L", type=float, default=1.0)
    ps.add_argument("--amps", default="", help="comma-separated amplitudes")
    ps.add_argument("--n", type=int, default=64)
    ps.add_argument("--seed", type=int, default=0)
    ps.add_argument("--out", default=None)
    ps.set_defaults(func=cmd_sweep1d)

    p3 = sub.add_parser("certify3d", help="certify the 3D solid duality principle")
    p3.add_argument("--lam", type=float, default=1.0)
    p3.add_argument("--mu", type=float, default=1.0)
    p3.add_argument("--box", type=_parse_vec3, default=np.array([1.0, 1.0, 1.0]))
    p3.add_argument("--mesh", type=_parse_int3, default=(4, 4, 4))
    p3.add_argument("--body", type=_parse_vec3, default=np.zeros(3))
    p3.add_argument(
        "--traction", type=_parse_vec3, default=np.array([0.02, 0.0, 0.0]),
        help="traction vector on the x = lx face",
    )
    p3.add_argument("--K", type=float, default=None)
    p3.add_argument("--mode", choices=tensor3d.M_TENSOR_MODES, default="identity")
    p3.add_argument("--seed", type=int, default=0)
    p3.add_argument("--out", default=None)
    p3.set_defaults(func=cmd_certify3d)

    pk = sub.add_parser("ktensor", help="explore the admissible K interval")
    pk.add_argument("--lam", type=float, default=1.0)
    pk.add_argument("--mu", type=float, default=1.0)
    pk.add_argument("--out", default=None)
    pk.set_defaults(func=cmd_ktensor)

    return parser


def main(argv: list[str] | None = None) -> int:
    _setup_logging()
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
