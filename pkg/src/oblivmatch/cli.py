"""obliv-match: generate instances, run trials, estimate ratios, verify lemmas.

Exit codes: 0 success / all checks pass, 1 a check failed, 2 usage or I/O error.
Reports depend only on the arguments and seed, never on timing or thread count;
wall time goes to stderr.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
import time

import numpy as np

from . import analysis
from .graph import (IndependentBernoulli, InstanceError, blocking_instance, generate_random,
                    generate_upper_triangular, read_instance, write_instance)
from .optimal import max_weight_matching
from .probe import new_env, write_probe_log
from .ranking import draw_ranks, run_greedy, run_ranking
from .seeding import MAX_SEED, trial_seed

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2

RUN_COLUMNS = ("trial", "seed", "alg_weight", "opt_weight", "probes")
RATIO_FIELDS = ("algorithm", "n_trials", "seed", "alg_mean", "opt_mean", "ratio", "ci_half_width",
                "lower", "target", "slack", "passed")
VERIFY_COLUMNS = ("check", "passed", "value", "detail")


class UsageError(Exception):
    pass


def _seed(text: str) -> int:
    value = int(text, 0)
    if not 0 <= value <= MAX_SEED:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit value")
    return value


def _emit(text: str, out: str | None) -> None:
    if out:
        try:
            with open(out, "w", newline="") as fh:
                fh.write(text)
        except OSError as exc:
            raise UsageError(f"cannot write {out}: {exc}") from None
    else:
        sys.stdout.write(text)


def _csv(header, rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue()


def _json(doc) -> str:
    return json.dumps(doc, indent=2) + "\n"


def _load(path):
    try:
        return read_instance(path)
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc}") from None
    except InstanceError as exc:
        raise UsageError(f"parse error in {path}: {exc}") from None


def _trials(args) -> int:
    if args.trials < 1:
        raise UsageError("--trials must be >= 1")
    return args.trials


def cmd_gen(args) -> int:
    try:
        if args.family == "upper-triangular":
            if args.n is None:
                raise UsageError("--n is required for the upper-triangular family")
            instance, realization = generate_upper_triangular(args.n)
        elif args.family == "blocking":
            instance, realization = blocking_instance()
        else:
            instance, realization = generate_random(args.nl, args.nr, args.weights, args.p, args.seed)
            if args.stochastic:
                realization = IndependentBernoulli(np.full(instance.shape, args.p))
    except InstanceError as exc:
        raise UsageError(str(exc)) from None
    if not args.out:
        raise UsageError("--out is required")
    try:
        write_instance(args.out, instance, realization)
    except OSError as exc:
        raise UsageError(f"cannot write {args.out}: {exc}") from None
    if realization.is_stochastic:
        print(f"{instance.n_left}x{instance.n_right} {realization.kind}: "
              f"expected edges {float(realization.probs.sum())!r}, W* depends on the draw")
    else:
        opt = max_weight_matching(instance, realization.edges)
        print(f"{instance.n_left}x{instance.n_right} adversarial: "
              f"{int(realization.edges.sum())} present edges, W*={opt.value!r}")
    return EXIT_OK


def cmd_run(args) -> int:
    n = _trials(args)
    instance, realization = _load(args.instance)
    batch = analysis.simulate_trials(instance, realization, n, args.seed, args.algo)
    rows = [(t, int(batch.seeds[t]), float(batch.alg[t]), float(batch.opt[t]), int(batch.probes[t]))
            for t in range(n)]
    est = analysis.ratio_of_means(batch.alg, batch.opt)
    summary = {"algorithm": args.algo, "n_trials": n, "seed": args.seed, **est.as_dict()}
    if args.format == "json":
        text = _json({"trials": [dict(zip(RUN_COLUMNS, r)) for r in rows], "summary": summary})
    else:
        text = _csv(RUN_COLUMNS, rows)
    _emit(text, args.out)
    if args.log:
        _write_logs(args, instance, realization, batch)
    if args.out:
        print(" ".join(f"{k}={v!r}" for k, v in summary.items()))
    return EXIT_OK


def _write_logs(args, instance, realization, batch):
    """Replay every trial through a ProbeEnv and dump its probe log."""
    logs = []
    for t, seed in enumerate(batch.seeds):
        env = new_env(instance, realization, int(seed))
        if args.algo == "greedy":
            m = run_greedy(instance, env)
        else:
            m = run_ranking(instance, env, draw_ranks(instance.n_left, int(seed))).matching
        if abs(m.total_weight - batch.alg[t]) > 1e-9 * (1 + m.total_weight):
            raise RuntimeError(f"trial {t}: probe replay disagrees with the batch run")
        logs.append((t, env.log))
    try:
        with open(args.log, "w", newline="") as fh:
            write_probe_log(fh, logs)
    except OSError as exc:
        raise UsageError(f"cannot write {args.log}: {exc}") from None


def cmd_ratio(args) -> int:
    n = _trials(args)
    instance, realization = _load(args.instance)
    start = time.perf_counter()
    est = analysis.estimate_ratio(instance, realization, n, args.seed, args.algo)
    elapsed = time.perf_counter() - start
    passed = est.passes(analysis.RATIO_TARGET, args.slack)
    report = {"algorithm": args.algo, "n_trials": n, "seed": args.seed, "alg_mean": est.alg_mean,
              "opt_mean": est.opt_mean, "ratio": est.ratio, "ci_half_width": est.ci_half_width,
              "lower": est.lower, "target": analysis.RATIO_TARGET, "slack": args.slack, "passed": passed}
    if args.format == "json":
        text = _json(report)
    else:
        text = _csv(RATIO_FIELDS, [[report[k] for k in RATIO_FIELDS]])
    _emit(text, args.out)
    print(f"wall time {elapsed:.2f}s", file=sys.stderr)
    return EXIT_OK if passed else EXIT_FAIL


def cmd_verify(args) -> int:
    n = _trials(args)
    if args.grid < 2:
        raise UsageError("--grid must be >= 2")
    instance, realization = _load(args.instance)
    rows = analysis.run_verification(instance, realization, args.seed, trials=max(n, 100), grid=args.grid,
                                     configs=args.configs, theta_tol=args.theta_tol)
    if args.format == "json":
        text = _json({"seed": args.seed, "checks": [
            {"check": r.check, "passed": r.passed, "value": r.value, "detail": r.detail} for r in rows]})
    else:
        text = _csv(VERIFY_COLUMNS, [(r.check, r.passed, r.value, r.detail) for r in rows])
    _emit(text, args.out)
    return EXIT_OK if all(r.passed for r in rows) else EXIT_FAIL


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="obliv-match", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, trials=10_000):
        p.add_argument("--instance", required=True, help="instance file (JSON)")
        p.add_argument("--seed", type=_seed, default=0)
        p.add_argument("--trials", type=int, default=trials)
        p.add_argument("--out", help="report path (default stdout)")
        p.add_argument("--format", choices=("csv", "json"), default="json")

    p = sub.add_parser("gen", help="write an instance file")
    p.add_argument("--family", choices=("random", "upper-triangular", "blocking"), required=True)
    p.add_argument("--n", type=int)
    p.add_argument("--nl", type=int, default=10)
    p.add_argument("--nr", type=int, default=10)
    p.add_argument("--p", type=float, default=0.5, help="edge probability")
    p.add_argument("--weights", choices=("uniform", "constant", "exponential", "integer"), default="uniform")
    p.add_argument("--stochastic", action="store_true",
                   help="store a Bernoulli(p) realization instead of one fixed draw")
    p.add_argument("--seed", type=_seed, default=0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("run", help="per-trial results of one algorithm")
    common(p)
    p.add_argument("--algo", choices=("ranking", "greedy"), default="ranking")
    p.add_argument("--log", help="also write the probe log of every trial as CSV")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("ratio", help="Monte Carlo estimate of E[ALG]/E[W*]")
    common(p)
    p.add_argument("--algo", choices=("ranking", "greedy"), default="ranking")
    p.add_argument("--slack", type=float, default=0.0,
                   help="exit 0 iff the lower CI bound is >= 1-1/e minus this")
    p.set_defaults(func=cmd_ratio)

    p = sub.add_parser("verify", help="run every lemma check on an instance")
    common(p)
    p.add_argument("--grid", type=int, default=200, help="monotonicity grid size")
    p.add_argument("--configs", type=int, default=20, help="random (ranks, vertex) configurations per check")
    p.add_argument("--theta-tol", type=float, default=1e-6, help="binary-search tolerance for the marginal rank")
    p.set_defaults(func=cmd_verify)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"obliv-match {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
