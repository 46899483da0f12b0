"""Command-line front end: solve and info subcommands.

`solve` reads a Matrix Market file, runs the eigensolver, writes the
eigenvalues as JSON and (optionally) the per-block potential trace as CSV,
and prints a short summary.  `info` derives and prints the parameters a run
would use, without solving.  All randomness flows from --seed; when absent a
seed is drawn from the system entropy source and recorded in the outputs.
Exit codes: 0 success, 2 bad input or configuration, 3 probabilistic failure
that survived all retries.
"""

import argparse
import json
import sys
import time
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .driver import SolveConfig, solve
from .errors import (
    BudgetExceeded,
    HessqrError,
    ParseError,
    SolveFailure,
)
from .mmio import read_matrix_market
from .params import derive_globals, derive_run_params, required_precision

EXIT_OK = 0
EXIT_BAD_INPUT = 2
EXIT_PROBABILISTIC = 3


@dataclass
class RunConfig:
    input_path: str
    delta: float = 1e-6
    phi: float = 0.01
    seed: Optional[int] = None
    bits: int = 53
    B: Optional[float] = None
    Gamma: Optional[float] = None
    Sigma: Optional[float] = None
    preprocess: bool = True
    threads: int = 1
    out_json: Optional[str] = None
    out_trace: Optional[str] = None

    def validate(self):
        if self.delta <= 0:
            raise ParseError(f"--delta must be > 0, got {self.delta}")
        if not (0.0 < self.phi < 1.0):
            raise ParseError(f"--phi must be in (0,1), got {self.phi}")
        if self.bits < 24:
            raise ParseError(f"--bits must be >= 24, got {self.bits}")
        if self.threads < 1:
            raise ParseError(f"--threads must be >= 1, got {self.threads}")


@dataclass
class RunReport:
    document: dict
    trace_rows: list
    wall_time: float
    seed: int

    @property
    def eigenvalues(self):
        return [complex(e["re"], e["im"]) for e in self.document["eigenvalues"]]


def _json_document(result, config):
    gd = result.globals_used
    rp = result.run_params
    eigs = []
    for node in sorted(result.tree.leaves(), key=lambda nd: nd.start):
        for v in node.eigenvalues:
            eigs.append({"re": v.real, "im": v.imag, "block": node.block_id})
    return {
        "n": int(gd.n0),
        "seed": int(result.seed),
        "delta": config.delta,
        "phi": config.phi,
        "bits": config.bits,
        "globals": {
            "B": gd.B,
            "Gamma": gd.Gamma,
            "Sigma": gd.Sigma,
            "k": gd.k,
            "alpha": gd.alpha,
            "theta": gd.theta,
            "gamma": gd.gamma,
        },
        "params": {
            "omega": rp.omega,
            "phi_working": rp.phi_working,
            "n_dec": rp.n_dec,
            "n_dec_budget": rp.n_dec_budget,
            "required_bits": result.required_bits,
        },
        "eigenvalues": eigs,
    }


def _trace_rows(result):
    rows = []
    for node in result.tree.ordered():
        for rec in node.trace:
            shift = rec.shift if rec.shift is not None else 0.0
            rows.append(
                (
                    node.block_id,
                    rec.index,
                    rec.psi_before,
                    rec.branch,
                    complex(shift).real,
                    complex(shift).imag,
                )
            )
    return rows


def run(config):
    """Execute a solve per the config; writes outputs, returns a RunReport."""
    config.validate()
    a = read_matrix_market(config.input_path)
    solve_cfg = SolveConfig(
        delta=config.delta,
        phi=config.phi,
        seed=config.seed,
        bits=config.bits,
        B=config.B,
        Gamma=config.Gamma,
        Sigma=config.Sigma,
        preprocess=config.preprocess,
        threads=config.threads,
    )
    t0 = time.perf_counter()
    result = solve(a, solve_cfg)
    wall = time.perf_counter() - t0

    document = _json_document(result, config)
    rows = _trace_rows(result)
    if config.out_json:
        with open(config.out_json, "w", encoding="ascii") as fh:
            json.dump(document, fh, indent=2, sort_keys=True)
            fh.write("\n")
    if config.out_trace:
        with open(config.out_trace, "w", encoding="ascii") as fh:
            fh.write("block_id,iteration,psi_k,branch,shift_re,shift_im\n")
            for block_id, it, psi, branch, sre, sim in rows:
                fh.write(f"{block_id},{it},{psi!r},{branch},{sre!r},{sim!r}\n")
    return RunReport(document=document, trace_rows=rows, wall_time=wall, seed=result.seed)


def info(config):
    """Derived parameters for the configured run; no solve.  Returns lines."""
    config.validate()
    a = read_matrix_market(config.input_path)
    n = a.shape[0]
    norm_f = float(np.linalg.norm(a))
    sigma = config.Sigma if config.Sigma is not None else 2.0 * max(norm_f, 1e-300)
    delta_abs = config.delta * max(norm_f, 1e-300) / 2.0
    if config.B is not None:
        B = config.B
    else:
        B = max(1.0, n / max(delta_abs, 1e-300))
    Gamma = config.Gamma if config.Gamma is not None else (max(delta_abs, 1e-300) / n) ** 2
    gd = derive_globals(B, Gamma, sigma, n)
    rp = derive_run_params(n, min(delta_abs, sigma), config.phi, gd)
    bits = required_precision(n, gd.k, gd.Sigma, gd.B, gd.Gamma, rp.delta, config.phi)
    lines = [
        f"n = {n}",
        f"B = {gd.B:.6g}",
        f"Gamma = {gd.Gamma:.6g}",
        f"Sigma = {gd.Sigma:.6g}",
        f"k = {gd.k}",
        f"alpha = {gd.alpha:.6g}",
        f"theta = {gd.theta:.6g}",
        f"gamma = {gd.gamma}",
        f"omega = {rp.omega:.6g}",
        f"phi_working = {rp.phi_working:.6g}",
        f"N_dec = {rp.n_dec:.6g} (budget {rp.n_dec_budget})",
        f"required bits = {bits}",
        f"configured bits = {config.bits}",
    ]
    if config.bits < bits:
        lines.append(
            f"WARNING: configured precision ({config.bits} bits) is below the "
            f"requirement ({bits} bits)"
        )
    return lines


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="hessqr",
        description="Randomized shifted QR eigensolver for complex matrices",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, helptext in (
        ("solve", "compute eigenvalues of a Matrix Market file"),
        ("info", "print derived run parameters without solving"),
    ):
        p = sub.add_parser(name, help=helptext)
        p.add_argument("input", help="Matrix Market file (array or coordinate)")
        p.add_argument("--delta", type=float, default=1e-6,
                       help="relative backward accuracy (default 1e-6)")
        p.add_argument("--phi", type=float, default=0.01,
                       help="failure probability tolerance (default 0.01)")
        p.add_argument("--seed", type=int, default=None,
                       help="master seed; drawn from entropy when omitted")
        p.add_argument("--bits", type=int, default=53,
                       help="working mantissa bits (default 53; >53 uses the slow extended backend)")
        p.add_argument("--B", type=float, default=None,
                       help="eigenvector condition bound override")
        p.add_argument("--gamma-gap", type=float, default=None, dest="gamma_gap",
                       help="minimum eigenvalue gap bound override (Gamma)")
        p.add_argument("--sigma", type=float, default=None,
                       help="norm bound override (Sigma)")
        p.add_argument("--no-preprocess", action="store_true",
                       help="input is already Hessenberg; skip perturb+reduce")
        p.add_argument("--threads", type=int, default=1,
                       help="worker threads for independent blocks")
        if name == "solve":
            p.add_argument("--out-json", default=None,
                           help="eigenvalue output file (JSON)")
            p.add_argument("--out-trace", default=None,
                           help="potential-trace output file (CSV)")
    return parser


def _config_from_args(args):
    return RunConfig(
        input_path=args.input,
        delta=args.delta,
        phi=args.phi,
        seed=args.seed,
        bits=args.bits,
        B=args.B,
        Gamma=args.gamma_gap,
        Sigma=args.sigma,
        preprocess=not args.no_preprocess,
        threads=args.threads,
        out_json=getattr(args, "out_json", None),
        out_trace=getattr(args, "out_trace", None),
    )


def main(argv=None):
    parser = _build_parser()
    args = parser.parse_args(argv)
    config = _config_from_args(args)
    try:
        if args.command == "info":
            for line in info(config):
                print(line)
            return EXIT_OK
        report = run(config)
        doc = report.document
        print(
            f"solved n={doc['n']} seed={report.seed} "
            f"eigenvalues={len(doc['eigenvalues'])} wall={report.wall_time:.3f}s"
        )
        if not config.out_json:
            print(json.dumps(doc, indent=2, sort_keys=True))
        return EXIT_OK
    except (SolveFailure, BudgetExceeded) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PROBABILISTIC
    except (HessqrError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BAD_INPUT


if __name__ == "__main__":
    sys.exit(main())
