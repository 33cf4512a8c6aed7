"""Command-line front end.

Exit codes: 0 success, 2 invalid input, 3 low confidence (the report is still
written), 4 shot budget exhausted.
"""

from __future__ import annotations

import argparse
import json
import secrets
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .encoding import encode_density, verify_encoding
from .errors import (
    InfeasibleShotBudget,
    InvalidSpec,
    PureStateSuspected,
    RenyiError,
    ValidationError,
)
from .estimator import (
    PIPELINE_SHOT_CAP,
    estimate_entropy_additive,
    estimate_entropy_multiplicative,
    trace_bounds,
)
from .poly import power_encoding
from .report import SCHEMA_VERSION, csv_text, dumps, entropy_to_dict, flat_report_csv, pretty
from .states import (
    DensityMatrix,
    StateSpec,
    build_state,
    exact_renyi_entropy,
    exact_trace_power,
    load_state_file,
    maximally_mixed,
    purify,
)
from .sweep import SWEEP_COLUMNS, run_sweep

EXIT_OK, EXIT_INVALID, EXIT_LOW_CONFIDENCE, EXIT_BUDGET = 0, 2, 3, 4


def _floats(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise InvalidSpec(f"cannot parse numbers from {text!r}") from None


def parse_state(text: str) -> DensityMatrix:
    """State mini-language.

    ``eig:p1,p2,...`` and ``classical:p1,...`` (diagonal), ``mixed:d``,
    ``pure:d`` (``|0><0|``), ``random:d,delta,seed`` and ``file:path``.
    """
    kind, sep, body = text.partition(":")
    if not sep:
        raise InvalidSpec(f"state {text!r} must look like kind:payload")
    if kind in ("eig", "classical"):
        return build_state(StateSpec("classical", _floats(body)))
    if kind == "mixed":
        return maximally_mixed(_int(body))
    if kind == "pure":
        d = _int(body)
        w = np.zeros(d)
        w[:1] = 1.0
        return build_state(StateSpec("classical", w))
    if kind == "random":
        parts = body.split(",")
        if len(parts) != 3:
            raise InvalidSpec("random state needs d,delta,seed")
        return build_state(StateSpec("random", (_int(parts[0]), float(parts[1])), _int(parts[2])))
    if kind == "file":
        return load_state_file(body)
    raise InvalidSpec(f"unknown state kind {kind!r}")


def _int(text: str) -> int:
    try:
        return int(text)
    except ValueError:
        raise InvalidSpec(f"expected an integer, got {text!r}") from None


def _csv_list(cast):
    def parse(text):
        try:
            return [cast(v) for v in text.split(",") if v.strip()]
        except ValueError:
            raise argparse.ArgumentTypeError(f"cannot parse list {text!r}") from None
    return parse


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="renyi-dqc1",
        description="Simulated one-clean-qubit estimation of Renyi entropies.",
    )
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, estimate=True):
        sp.add_argument("--state", required=True, help="state spec, e.g. eig:0.75,0.25 or mixed:4")
        sp.add_argument("--alpha", type=float, required=True)
        sp.add_argument("--log-base", choices=["natural", "two"], default="natural")
        sp.add_argument("--output", choices=["json", "csv", "pretty"], default="json")
        sp.add_argument("--out", type=Path, help="write the report here instead of stdout")
        if estimate:
            sp.add_argument("--delta", type=float,
                            help="trusted eigenvalue cutoff (default: half the smallest eigenvalue)")
            sp.add_argument("--confidence", type=float, default=0.9)
            sp.add_argument("--seed", type=int, help="root seed (generated and echoed if absent)")
            sp.add_argument("--shot-cap", type=int, default=PIPELINE_SHOT_CAP)

    sp = sub.add_parser("exact", help="exact entropy from the spectrum")
    common(sp, estimate=False)

    sp = sub.add_parser("estimate-additive", help="entropy to additive precision eps")
    common(sp)
    sp.add_argument("--eps", type=float, required=True)
    sp.add_argument("--strategy", choices=["iterative", "amplified"], default="iterative")

    sp = sub.add_parser("estimate-multiplicative", help="entropy to relative precision eps-rel")
    common(sp)
    sp.add_argument("--eps-rel", type=float, required=True)

    sp = sub.add_parser("verify-encoding", help="check the rho^alpha block encoding")
    common(sp, estimate=False)
    sp.add_argument("--delta", type=float)
    sp.add_argument("--eps", type=float, required=True, help="requested encoding error")

    sp = sub.add_parser("sweep", help="mean measurement counts over a grid, as CSV")
    sp.add_argument("--d", type=_csv_list(int), required=True, help="comma-separated dimensions")
    sp.add_argument("--alpha", type=_csv_list(float), required=True)
    sp.add_argument("--eps-rel", type=_csv_list(float), required=True)
    sp.add_argument("--x", type=_csv_list(float), help="explicit normalized-trace targets")
    sp.add_argument("--points", type=int, default=6, help="log-spaced targets per series")
    sp.add_argument("--trials", type=int, default=30)
    sp.add_argument("--confidence", type=float, default=0.9)
    sp.add_argument("--delta", type=float)
    sp.add_argument("--seed", type=int, help="seed base (generated and echoed if absent)")
    sp.add_argument("--shot-cap", type=int, default=PIPELINE_SHOT_CAP)
    sp.add_argument("--workers", type=int, help="default from RENYI_DQC1_WORKERS")
    sp.add_argument("--output", choices=["csv", "json"], default="csv")
    sp.add_argument("--out", type=Path)
    return p


def _default_delta(rho: DensityMatrix, delta) -> float:
    return 0.5 * rho.min_eigenvalue if delta is None else float(delta)


def _base_report(args, rho: DensityMatrix | None) -> dict:
    cfg = {k: v for k, v in vars(args).items() if k not in ("out",) and v is not None}
    if "out" in vars(args) and args.out is not None:
        cfg["out"] = str(args.out)
    rep = {"schema_version": SCHEMA_VERSION, "command": args.command, "config": cfg}
    if rho is not None:
        rep["dim"] = rho.dim
    return rep


def cmd_exact(args) -> tuple[dict, int]:
    rho = parse_state(args.state)
    rep = _base_report(args, rho)
    s = exact_renyi_entropy(rho, args.alpha, args.log_base)
    tr = exact_trace_power(rho, args.alpha)
    rep.update(exact_reference=s, entropy=s, trace_power=tr, normalized_trace=tr / rho.dim,
               log_base=args.log_base)
    return rep, EXIT_OK


def _estimate(args, multiplicative: bool) -> tuple[dict, int]:
    rho = parse_state(args.state)
    delta = _default_delta(rho, args.delta)
    args.delta = delta
    rep = _base_report(args, rho)
    oracle = purify(rho)
    if multiplicative:
        est = estimate_entropy_multiplicative(
            oracle, args.alpha, delta, args.eps_rel, args.confidence, args.seed,
            args.log_base, args.shot_cap,
        )
    else:
        est = estimate_entropy_additive(
            oracle, args.alpha, delta, args.eps, args.confidence, args.seed,
            args.log_base, args.shot_cap, args.strategy,
        )
    exact = exact_renyi_entropy(rho, args.alpha, args.log_base)
    rep.update(
        exact_reference=exact,
        estimate=est.value,
        error_vs_reference=est.value - exact,
        total_measurements=est.total_measurements,
        per_round=entropy_to_dict(est)["per_round"],
        result=entropy_to_dict(est),
        low_confidence=est.low_confidence,
    )
    if est.trace is not None:
        x = exact_trace_power(rho, args.alpha) / rho.dim
        rep["trace_reference"] = x
        rep["trace_error_vs_reference"] = est.trace.x_hat - x
    return rep, EXIT_LOW_CONFIDENCE if est.low_confidence else EXIT_OK


def cmd_verify(args) -> tuple[dict, int]:
    rho = parse_state(args.state)
    delta = _default_delta(rho, args.delta)
    args.delta = delta
    rep = _base_report(args, rho)
    tr = power_encoding(encode_density(purify(rho)), args.alpha, delta, args.eps)
    enc = tr.encoding
    dev = verify_encoding(enc, rho.power(args.alpha))
    rep.update(
        deviation=dev,
        requested_error=args.eps,
        error_bound=enc.error_bound,
        within_requested=dev <= args.eps,
        polynomial_degree=tr.achieved_degree,
        theory_degree_bound=tr.theory_degree_bound,
        polynomial_cap=tr.polynomial.cap,
        encoding_scale=enc.scale,
        ancilla_qubits=enc.ancilla_qubits,
        system_qubits=enc.system_qubits,
        unitary=enc.check_unitary(),
        spectrum_in_cutoff=rho.min_eigenvalue >= delta - 1e-9,
    )
    return rep, EXIT_OK


def cmd_sweep(args) -> tuple[dict | list, int]:
    for d in args.d:
        for a in args.alpha:
            trace_bounds(d, a)
    rows = run_sweep(
        args.d, args.alpha, args.eps_rel, points=args.points, x_targets=args.x,
        trials=args.trials, seed_base=args.seed, confidence=args.confidence,
        shot_cap=args.shot_cap, workers=args.workers, delta=args.delta,
    )
    return rows, EXIT_OK


def _emit(text: str, out: Path | None):
    if out is None:
        sys.stdout.write(text if text.endswith("\n") else text + "\n")
    else:
        out.write_text(text if text.endswith("\n") else text + "\n")


def _error(kind: str, exc: Exception, code: int, **extra) -> int:
    payload = {"error": kind, "exception": type(exc).__name__, "message": str(exc),
               "exit_code": code, **extra}
    sys.stderr.write(json.dumps(payload, sort_keys=True) + "\n")
    return code


def run(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "seed", ...) is None:
        args.seed = secrets.randbits(63)
    started = time.perf_counter()
    try:
        if args.command == "exact":
            rep, code = cmd_exact(args)
        elif args.command == "estimate-additive":
            rep, code = _estimate(args, multiplicative=False)
        elif args.command == "estimate-multiplicative":
            rep, code = _estimate(args, multiplicative=True)
        elif args.command == "verify-encoding":
            rep, code = cmd_verify(args)
        else:
            rows, code = cmd_sweep(args)
            if args.output == "csv":
                _emit(csv_text(rows, SWEEP_COLUMNS), args.out)
            else:
                _emit(dumps({"schema_version": SCHEMA_VERSION, "command": "sweep",
                             "seed_base": args.seed, "rows": rows}), args.out)
            return code
    except InfeasibleShotBudget as exc:
        return _error("shot_budget", exc, EXIT_BUDGET, required=exc.required, cap=exc.cap,
                      seed=getattr(args, "seed", None))
    except PureStateSuspected as exc:
        return _error("low_confidence", exc, EXIT_LOW_CONFIDENCE, seed=getattr(args, "seed", None))
    except (ValidationError, RenyiError) as exc:
        return _error("invalid_input", exc, EXIT_INVALID)
    rep["wall_time_ms"] = int(round((time.perf_counter() - started) * 1000))
    if args.output == "json":
        text = dumps(rep)
    elif args.output == "csv":
        text = flat_report_csv(rep)
    else:
        text = pretty(rep)
    _emit(text, args.out)
    if code == EXIT_LOW_CONFIDENCE:
        sys.stderr.write(json.dumps({"warning": "low_confidence", "seed": args.seed}) + "\n")
    return code


def main(argv=None):
    sys.exit(run(argv))


if __name__ == "__main__":
    main()
