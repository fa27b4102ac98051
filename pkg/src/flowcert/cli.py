"""Command-line front end.

Subcommands: seq-check, grad-flow, mcf, fit, close, verify-all.
Exit codes: 0 pass, 1 suite failure, 2 certificate violation,
3 hypothesis failure, 64 usage error.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import __version__, acceptance, harness
from . import gradientflow as gf
from . import mcf, sequences
from .cylinder import profile_to_csv
from .errors import (
    BlowupError,
    ConfigError,
    FlowcertError,
    InsufficientDataError,
    InvalidInputError,
    ParameterError,
)

EXIT_OK = 0
EXIT_SUITE = 1
EXIT_CERT = 2
EXIT_HYP = 3
EXIT_USAGE = 64


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # usage problems exit 64, not argparse's 2
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _build_parser() -> _Parser:
    parser = _Parser(prog="flowcert", description=__doc__)
    parser.add_argument("--version", action="version", version=f"flowcert {__version__}")
    parser.add_argument("--out", default="out", help="output directory (default: ./out)")
    parser.add_argument("--seed", type=int, default=1234, help="seed for randomized suites")
    parser.add_argument("--quiet", action="store_true", help="suppress progress output")
    # the same globals are accepted after the subcommand; SUPPRESS keeps the
    # subparser from clobbering values given before it
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", default=argparse.SUPPRESS)
    common.add_argument("--seed", type=int, default=argparse.SUPPRESS)
    common.add_argument("--quiet", action="store_true", default=argparse.SUPPRESS)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p_seq = sub.add_parser("seq-check", parents=[common],
                           help="check the drop law on a sequence and certify the bound")
    src = p_seq.add_mutually_exclusive_group(required=True)
    src.add_argument("--file", help="sequence file (newline decimals or JSON array)")
    src.add_argument("--geometric", action="store_true", help="use the sequence 2^-j")
    src.add_argument("--extremal", action="store_true",
                     help="generate the equality-saturating sequence")
    p_seq.add_argument("--C", type=float, default=1.0)
    p_seq.add_argument("--tau", type=float, default=0.5)
    p_seq.add_argument("--n", type=int, default=40, help="length (geometric) or steps (extremal)")
    p_seq.add_argument("--x1", type=float, default=1.0, help="extremal start value")

    p_flow = sub.add_parser("grad-flow", parents=[common],
                            help="integrate a bundled gradient problem and certify the bound")
    p_flow.add_argument("--problem", required=True,
                        help="one of: " + ", ".join(p.name for p in gf.builtin_problems()))
    p_flow.add_argument("--x0", required=True, help="start point, comma separated")
    p_flow.add_argument("--t-end", type=float, default=2e12,
                        help="integration horizon (default runs essentially to convergence)")
    p_flow.add_argument("--tol", type=float, default=1e-10)
    p_flow.add_argument("--epsilon", type=float, default=0.5)
    p_flow.add_argument("--check-envelope", action="store_true",
                        help="also require the pointwise decay envelope")

    for name, desc in (("mcf", "evolve a profile (optionally fit and certify)"),
                       ("fit", "evolve and fit the window inequality"),
                       ("close", "run the full closeness experiment")):
        p = sub.add_parser(name, parents=[common], help=desc)
        p.add_argument("--config", required=True, help="run config file (key = value lines)")
        if name == "mcf":
            p.add_argument("--fit", action="store_true", help="also fit the window inequality")
            p.add_argument("--close", action="store_true", help="also run the closeness experiment")

    sub.add_parser("verify-all", parents=[common],
                   help="run the full acceptance suite against the bundled configs")
    return parser


def _cmd_seq_check(args, out: Path, log: harness.RunLog) -> int:
    if args.file:
        try:
            text = Path(args.file).read_text()
        except OSError as exc:
            log.say(f"error: cannot read {args.file}: {exc}")
            return EXIT_USAGE
        seq = sequences.parse_sequence_text(text)
    elif args.geometric:
        seq = sequences.MonotoneSequence(2.0 ** -np.arange(1, args.n + 1, dtype=float))
    else:
        seq = sequences.extremal_sequence(args.C, args.tau, x1=args.x1, n_steps=args.n)
    report = sequences.check_hypothesis(seq, args.C, args.tau)
    harness.write_json(out / "report.json", report.to_json_dict())
    code = EXIT_OK
    if report.ok:
        consts = sequences.constructive_bound(args.C, args.tau)
        cap = consts.cap(float(seq.values[0]))
        bound_ok = report.sqrt_diff_sum <= cap
        payload = consts.to_json_dict()
        payload.update({"x1": float(seq.values[0]), "cap": cap,
                        "sqrt_diff_sum": report.sqrt_diff_sum, "bound_ok": bound_ok})
        harness.write_json(out / "bound.json", payload)
        log.say(f"hypothesis: pass; sqrt_diff_sum={report.sqrt_diff_sum:.6f} "
                f"<= cap={cap:.6f}: {bound_ok}")
        if not bound_ok:
            code = EXIT_CERT
    else:
        log.say(f"hypothesis: violation at step {report.first_violation} "
                f"(sqrt_diff_sum={report.sqrt_diff_sum:.6f})")
        code = EXIT_CERT
    log.say(f"report written to {out / 'report.json'}")
    return code


def _cmd_grad_flow(args, out: Path, log: harness.RunLog) -> int:
    try:
        problem = gf.problem_by_name(args.problem)
    except InvalidInputError as exc:
        log.say(f"error: {exc}")
        return EXIT_USAGE
    try:
        x0 = [float(v) for v in args.x0.split(",")]
    except ValueError:
        log.say(f"error: cannot parse --x0 {args.x0!r}")
        return EXIT_USAGE
    traj = gf.integrate(problem, x0, t_end=args.t_end, tol=args.tol)
    with open(out / "trajectory.csv", "w", newline="") as fh:
        cols = ["t"] + [f"x_{i + 1}" for i in range(problem.dim)] + ["F"]
        fh.write(",".join(cols) + "\n")
        for i, t in enumerate(traj.times):
            row = [repr(float(t))] + [repr(float(v)) for v in traj.points[i]]
            row.append(repr(float(traj.F_values[i])))
            fh.write(",".join(row) + "\n")
    report = gf.effective_bound(problem, traj, epsilon=args.epsilon)
    payload = report.to_json_dict()
    payload["problem"] = problem.name
    payload["exited_ball"] = bool(traj.exited_ball)
    if args.check_envelope:
        payload["envelope_ok"] = gf.decay_envelope_check(traj)
    harness.write_json(out / "report.json", payload)
    log.say(f"case {report.case_tag}: length {report.length:.6g} "
            f"<= bound {report.bound_value:.6g}: {report.holds}")
    if args.check_envelope:
        log.say(f"envelope: {payload['envelope_ok']}")
    code = EXIT_OK if report.holds and payload.get("envelope_ok", True) else EXIT_CERT
    log.say(f"outputs written to {out}")
    return code


def _write_history(hist: mcf.FlowHistory, out: Path) -> None:
    hist.to_csv(out / "history.csv")
    profdir = out / "profiles"
    profdir.mkdir(parents=True, exist_ok=True)
    for t in hist.mark_times:
        profile_to_csv(hist.graph_at_mark(float(t)), profdir / f"profile_t{int(t):04d}.csv")


def _cmd_mcf(args, out: Path, log: harness.RunLog, do_fit: bool, do_close: bool) -> int:
    cfg = harness.load_run_config(args.config)
    hist = mcf.evolve(cfg.initial_state(), t_end=float(cfg.t2), controls=cfg.controls())
    _write_history(hist, out)
    checks = [{"name": "run-completed", "passed": hist.stop_reason == "completed",
               "measured": f"stop_reason={hist.stop_reason}, t_final={hist.t_final}"}]
    max_rise = float(np.max(np.diff(hist.mark_F))) if hist.mark_F.size >= 2 else 0.0
    checks.append({"name": "area-monotone", "passed": max_rise <= 1e-8,
                   "measured": f"max unit-mark increase {max_rise:.3e}"})
    code = EXIT_OK
    if hist.stop_reason != "completed":
        code = EXIT_HYP
    if do_fit and code == EXIT_OK:
        try:
            fit = mcf.lojasiewicz_fit(hist, R=cfg.R1, eps=cfg.eps1)
            harness.write_json(out / "fit.json", fit.to_json_dict())
            slack_ok = bool(np.min(fit.residuals) >= 0.0)
            checks.append({"name": "fit-slack", "passed": slack_ok,
                           "measured": f"tau_fit={fit.tau_fit}, C_fit={fit.C_fit:.6g}"})
            log.say(f"fit: tau={fit.tau_fit} (in range: {fit.tau_in_range}), C={fit.C_fit:.6g}")
        except InsufficientDataError as exc:
            checks.append({"name": "fit-slack", "passed": False, "measured": str(exc)})
            log.say(f"fit unavailable: {exc}")
            code = EXIT_HYP
    if do_close:
        report = mcf.close_experiment(cfg, hist=hist)
        harness.write_json(out / "close.json", report.to_json_dict())
        ok = report.hypotheses_ok and report.certified and report.bound_holds
        checks.append({"name": "close-certified", "passed": bool(ok),
                       "measured": f"case={report.case_tag}, "
                                   f"max_dist={report.max_dist_to_ref:.6g}, "
                                   f"bound={report.bound_value:.6g}"})
        log.say(f"close: hypotheses_ok={report.hypotheses_ok} certified={report.certified} "
                f"bound_holds={report.bound_holds}")
        if not ok:
            code = EXIT_HYP
    manifest = harness.manifest_dict(command="mcf", seed=cfg.seed,
                                     config=cfg.to_dict(), checks=checks)
    harness.write_json(out / "manifest.json", manifest)
    log.say(f"outputs written to {out}")
    return code


def _cmd_verify_all(args, out: Path, log: harness.RunLog) -> int:
    results, manifest = acceptance.run_all(seed=args.seed, log=log)
    harness.write_json(out / "manifest.json", manifest)
    n_pass = sum(r.passed for r in results)
    log.say(f"{n_pass}/{len(results)} criteria passed; manifest at {out / 'manifest.json'}")
    return EXIT_OK if manifest["all_passed"] else EXIT_SUITE


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    log = harness.RunLog(out / "run.log", quiet=args.quiet)
    try:
        if args.command == "seq-check":
            return _cmd_seq_check(args, out, log)
        if args.command == "grad-flow":
            return _cmd_grad_flow(args, out, log)
        if args.command == "mcf":
            return _cmd_mcf(args, out, log, do_fit=args.fit, do_close=args.close)
        if args.command == "fit":
            return _cmd_mcf(args, out, log, do_fit=True, do_close=False)
        if args.command == "close":
            return _cmd_mcf(args, out, log, do_fit=False, do_close=True)
        if args.command == "verify-all":
            return _cmd_verify_all(args, out, log)
        parser.error(f"unknown command {args.command}")
    except (ConfigError, ParameterError, InvalidInputError) as exc:
        log.say(f"error: {exc}")
        return EXIT_USAGE
    except (BlowupError, InsufficientDataError) as exc:
        log.say(f"run aborted: {exc}")
        return EXIT_HYP
    except FlowcertError as exc:
        log.say(f"error: {exc}")
        return EXIT_SUITE
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
