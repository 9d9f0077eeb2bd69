"""Command-line interface: the full pipeline as subcommands.

Exit codes: 0 success, 1 usage error, 2 data/validation error. Machine
output goes to --output (default stdout) or the artifact file named by
--out; diagnostics go to stderr.
"""

from __future__ import annotations

import argparse
import json
import sys
from typing import Sequence

from .bayes import DEFAULT_MIN_SUPPORT, PosteriorMode, sequential_posterior
from .errors import InsufficientSupportError, IvrAuthError
from .estimator import NullPolicy, correlation_matrix, credential_stats, missingness_profile
from .ingest import load_csv, write_csv
from .model import Dataset, Outcome, prior_fraud
from .pairs import RankObjective, rank_pairs
from .sequencer import (
    SelectionCriterion,
    Thresholds,
    backtest,
    compile_policy,
)
from .service import load_policy, serve_stdio, serve_tcp
from .synthgen import GeneratorSpec, default_spec, generate

_NULL_POLICY_FLAGS = {
    "pairwise-delete": NullPolicy.PAIRWISE_DELETE,
    "null-as-fail": NullPolicy.NULL_AS_FAIL,
}


class _Parser(argparse.ArgumentParser):
    """argparse with usage failures remapped to exit code 1."""

    def error(self, message: str):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _ev_flag(text: str) -> tuple[str, Outcome]:
    cred, sep, outcome = text.partition("=")
    if not sep or not cred or outcome not in ("pass", "fail"):
        raise argparse.ArgumentTypeError(
            f"expected CRED=pass or CRED=fail, got {text!r}"
        )
    return cred, Outcome.PASS if outcome == "pass" else Outcome.FAIL


def _listen_flag(text: str) -> tuple[str, int]:
    host, sep, port = text.rpartition(":")
    if not sep or not host:
        raise argparse.ArgumentTypeError(f"expected HOST:PORT, got {text!r}")
    try:
        return host, int(port)
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad port in {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="ivrauth", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_gen = sub.add_parser("gen", help="generate a synthetic call log")
    src = p_gen.add_mutually_exclusive_group(required=True)
    src.add_argument("--spec", metavar="FILE", help="generator spec JSON")
    src.add_argument(
        "--defaults",
        action="store_true",
        help="use the built-in ten-credential profile",
    )
    p_gen.add_argument("--seed", type=int, default=None, help="override the spec seed")
    p_gen.add_argument("--n", type=int, default=None, help="override the record count")
    p_gen.add_argument(
        "--out", metavar="FILE", help="write the dataset CSV here; omit to emit the spec JSON"
    )
    p_gen.add_argument("--output", metavar="FILE", help="report destination (default stdout)")

    p_stats = sub.add_parser("stats", help="empirical statistics report")
    p_stats.add_argument("--input", metavar="FILE", required=True)
    p_stats.add_argument(
        "--null-policy",
        choices=sorted(_NULL_POLICY_FLAGS),
        default="pairwise-delete",
        help="how correlation treats missing cells",
    )
    p_stats.add_argument("--output", metavar="FILE")

    p_post = sub.add_parser("posterior", help="posterior fraud probability for evidence")
    p_post.add_argument("--input", metavar="FILE", required=True)
    p_post.add_argument(
        "--ev",
        metavar="CRED=pass|fail",
        type=_ev_flag,
        action="append",
        required=True,
        help="one observation; repeatable",
    )
    p_post.add_argument(
        "--mode",
        choices=[m.value for m in PosteriorMode],
        default=PosteriorMode.EMPIRICAL_JOINT.value,
    )
    p_post.add_argument("--min-support", type=int, default=DEFAULT_MIN_SUPPORT)
    p_post.add_argument(
        "--fallback",
        action="store_true",
        help="retry in naive mode when empirical support is insufficient",
    )
    p_post.add_argument("--output", metavar="FILE")

    p_pairs = sub.add_parser("pairs", help="rank all credential pairs as two-factor gates")
    p_pairs.add_argument("--input", metavar="FILE", required=True)
    p_pairs.add_argument(
        "--objective",
        choices=[o.value for o in RankObjective],
        default=RankObjective.MIN_POSTERIOR.value,
    )
    p_pairs.add_argument("--fpr-cap", type=float, default=None)
    p_pairs.add_argument("--top", type=int, default=None, metavar="K")
    p_pairs.add_argument("--format", choices=["csv", "json"], default="csv")
    p_pairs.add_argument("--output", metavar="FILE")

    p_policy = sub.add_parser("policy", help="policy operations")
    policy_sub = p_policy.add_subparsers(dest="policy_command", required=True)
    p_build = policy_sub.add_parser("build", help="compile an adaptive policy")
    p_build.add_argument("--input", metavar="FILE", required=True)
    p_build.add_argument("--out", metavar="FILE", required=True, help="policy JSON destination")
    p_build.add_argument("--accept-below", type=float, default=Thresholds.accept_below)
    p_build.add_argument("--block-above", type=float, default=Thresholds.block_above)
    p_build.add_argument("--max-steps", type=int, default=Thresholds.max_steps)
    p_build.add_argument("--fpr-step-cap", type=float, default=None)
    p_build.add_argument(
        "--mode",
        choices=[m.value for m in PosteriorMode],
        default=PosteriorMode.EMPIRICAL_JOINT.value,
    )
    p_build.add_argument("--min-support", type=int, default=DEFAULT_MIN_SUPPORT)
    p_build.add_argument(
        "--criterion",
        choices=[c.value for c in SelectionCriterion],
        default=SelectionCriterion.POSTERIOR_IF_PASSED.value,
    )
    p_build.add_argument("--output", metavar="FILE")

    p_sim = sub.add_parser("simulate", help="backtest a policy against a call log")
    p_sim.add_argument("--input", metavar="FILE", required=True)
    p_sim.add_argument("--policy", metavar="FILE", required=True)
    p_sim.add_argument("--output", metavar="FILE")

    p_serve = sub.add_parser("serve", help="run the scoring service")
    p_serve.add_argument("--policy", metavar="FILE", required=True)
    endpoint = p_serve.add_mutually_exclusive_group(required=True)
    endpoint.add_argument("--listen", metavar="HOST:PORT", type=_listen_flag)
    endpoint.add_argument("--stdio", action="store_true")

    return parser


def _emit(text: str, output: str | None) -> None:
    if output:
        with open(output, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _emit_json(obj, output: str | None) -> None:
    _emit(json.dumps(obj, indent=2, sort_keys=True) + "\n", output)


def _load_dataset(path: str) -> Dataset:
    return load_csv(path)


def _cmd_gen(args) -> int:
    spec = GeneratorSpec.load(args.spec) if args.spec else default_spec()
    if args.seed is not None:
        spec = spec.with_seed(args.seed)
    if args.n is not None:
        spec = spec.with_n_total(args.n)
    if not args.out:
        _emit_json(spec.to_json_dict(), args.output)
        return 0
    dataset = generate(spec)
    write_csv(dataset, args.out)
    _emit_json(
        {
            "path": args.out,
            "n_total": dataset.n_total,
            "n_fraud": dataset.n_fraud,
            "seed": spec.seed,
        },
        args.output,
    )
    return 0


def _cmd_stats(args) -> int:
    d = _load_dataset(args.input)
    stats = credential_stats(d)
    corr = correlation_matrix(d, _NULL_POLICY_FLAGS[args.null_policy])
    report = {
        "n_total": d.n_total,
        "n_fraud": d.n_fraud,
        "prior_fraud": prior_fraud(d),
        "credentials": {
            name: {
                "pass_rate_overall": s.pass_rate_overall,
                "fail_or_null_rate": s.fail_or_null_rate,
                "fraud_rate_given_pass": s.fraud_rate_given_pass,
                "missing_count": s.missing_count,
                "p_pass_given_fraud": s.class_conditional.p_pass_given_fraud,
                "p_pass_given_legit": s.class_conditional.p_pass_given_legit,
                "support_fraud": s.class_conditional.support_fraud,
                "support_legit": s.class_conditional.support_legit,
            }
            for name, s in stats.items()
        },
        "missingness": missingness_profile(d),
        "correlation": corr.to_json_dict(),
    }
    _emit_json(report, args.output)
    return 0


def _cmd_posterior(args) -> int:
    d = _load_dataset(args.input)
    mode = PosteriorMode(args.mode)
    try:
        belief = sequential_posterior(d, args.ev, mode=mode, min_support=args.min_support)
    except InsufficientSupportError:
        if not (args.fallback and mode is PosteriorMode.EMPIRICAL_JOINT):
            raise
        belief = sequential_posterior(
            d, args.ev, mode=PosteriorMode.NAIVE_INDEPENDENCE, min_support=args.min_support
        )
    _emit_json(
        {
            "posterior": belief.posterior_fraud,
            "mode": belief.mode.value,
            "evidence": [
                {"credential": c, "outcome": "pass" if o == Outcome.PASS else "fail"}
                for c, o in belief.evidence_trail
            ],
        },
        args.output,
    )
    return 0


def _cmd_pairs(args) -> int:
    d = _load_dataset(args.input)
    reports = rank_pairs(d, RankObjective(args.objective), fpr_cap=args.fpr_cap)
    if args.top is not None:
        reports = reports[: max(args.top, 0)]
    if args.format == "json":
        _emit_json([r.to_json_dict() for r in reports], args.output)
        return 0
    lines = [
        "credential_1,credential_2,fraud_rate_given_both_pass,tpr,fpr,pass_both_rate,youden_j"
    ]
    for r in reports:
        posterior = "" if r.fraud_rate_given_both_pass is None else repr(r.fraud_rate_given_both_pass)
        lines.append(
            f"{r.pair[0]},{r.pair[1]},{posterior},{r.tpr!r},{r.fpr!r},"
            f"{r.pass_both_rate!r},{r.youden_j!r}"
        )
    _emit("\n".join(lines) + "\n", args.output)
    return 0


def _cmd_policy_build(args) -> int:
    d = _load_dataset(args.input)
    thresholds = Thresholds(
        accept_below=args.accept_below,
        block_above=args.block_above,
        max_steps=args.max_steps,
        fpr_step_cap=args.fpr_step_cap,
    )
    policy = compile_policy(
        d,
        thresholds=thresholds,
        mode=PosteriorMode(args.mode),
        min_support=args.min_support,
        criterion=SelectionCriterion(args.criterion),
    )
    policy.save(args.out)
    n_nodes = sum(1 for _ in policy.iter_nodes())
    _emit_json(
        {"path": args.out, "fingerprint": policy.fingerprint, "nodes": n_nodes},
        args.output,
    )
    return 0


def _cmd_simulate(args) -> int:
    d = _load_dataset(args.input)
    policy = load_policy(args.policy)
    summary = backtest(d, policy)
    _emit_json(summary.to_json_dict(), args.output)
    return 0


def _cmd_serve(args) -> int:
    policy = load_policy(args.policy)
    if args.stdio:
        serve_stdio(policy)
    else:
        host, port = args.listen
        serve_tcp(policy, host, port)
    return 0


_COMMANDS = {
    "gen": _cmd_gen,
    "stats": _cmd_stats,
    "posterior": _cmd_posterior,
    "pairs": _cmd_pairs,
    "simulate": _cmd_simulate,
    "serve": _cmd_serve,
}


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "policy":
            return _cmd_policy_build(args)
        return _COMMANDS[args.command](args)
    except IvrAuthError as exc:
        print(f"ivrauth: error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"ivrauth: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
