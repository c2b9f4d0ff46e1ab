"""Command-line interface: parse, train, eval, force-decode, trace."""

from __future__ import annotations

import argparse
import sys

from . import evalkit, learner
from .features import default_templates, FeatureTemplateSet, load_model, save_model
from .lexicon import load_domain_file, to_simple_types, tokenize
from .mr import print_mr
from .parser import action_label, beam_decode, derivation_of, final_mr, initial_state, step
from .typesys import parse_type, substitute_bases, validate_type


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--domain", required=True, help="domain file")
    p.add_argument("--simple-types", action="store_true",
                   help="collapse entity types to a single base type e")


def _add_decode(p: argparse.ArgumentParser) -> None:
    p.add_argument("--model", help="model file (omitted: zero weights)")
    p.add_argument("--beam", type=int, default=16, help="beam width (0 = unlimited)")
    p.add_argument("--goal-type", help="restrict full parses to subtypes of this type")


def build_arg_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="typeshift",
        description="Type-driven incremental semantic parsing.",
    )
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("parse", help="parse one question to an MR")
    _add_common(p)
    _add_decode(p)
    p.add_argument("--trace", action="store_true", help="print the derivation table")
    p.add_argument("question", nargs="+", help="question text")

    p = sub.add_parser("trace", help="parse and always print the derivation table")
    _add_common(p)
    _add_decode(p)
    p.add_argument("question", nargs="+", help="question text")

    p = sub.add_parser("train", help="forced decoding + max-violation perceptron")
    _add_common(p)
    p.add_argument("--data", required=True, help="training tsv (question<TAB>mr)")
    p.add_argument("--model", required=True, help="output model file")
    p.add_argument("--iters", type=int, default=20)
    p.add_argument("--beam", type=int, default=16)
    p.add_argument("--time-limit", type=float, default=60.0,
                   help="per-example pass-1 enumeration limit (seconds)")
    p.add_argument("--pass2-beam", type=int, default=1024)
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--no-average", action="store_true", help="skip weight averaging")
    p.add_argument("--cache", help="reference-derivation cache file (read if present, else written)")
    p.add_argument("--templates", help="feature template file (default: built-in 84)")
    p.add_argument("--workers", type=int, default=1)

    p = sub.add_parser("eval", help="exact-match evaluation of a model")
    _add_common(p)
    _add_decode(p)
    p.add_argument("--data", required=True, help="test tsv")
    p.add_argument("--workers", type=int, default=1)

    p = sub.add_parser("force-decode", help="enumerate reference derivations only")
    _add_common(p)
    p.add_argument("--data", required=True)
    p.add_argument("--time-limit", type=float, default=60.0)
    p.add_argument("--cache", help="write the reference cache here")
    p.add_argument("--workers", type=int, default=1)

    return ap


def _load_domain(args):
    domain = load_domain_file(args.domain)
    if args.simple_types:
        domain = to_simple_types(domain)
    return domain


def _load_weights(args, domain):
    if getattr(args, "model", None):
        weights, templates, _ = load_model(args.model)
        if not templates.templates:
            templates = default_templates()
        return weights, templates
    return {}, default_templates()


def _beam(args):
    return None if args.beam == 0 else args.beam


def _goal(args, domain):
    if getattr(args, "goal_type", None):
        goal = substitute_bases(parse_type(args.goal_type), domain.base_alias)
        validate_type(goal, domain.hierarchy)
        return goal
    return None


def _print_trace(final_state, out=None) -> None:
    out = out if out is not None else sys.stdout
    chain = []
    state = final_state
    while state.action is not None:
        chain.append(state)
        state = state.parent
    for i, s in enumerate(reversed(chain), 1):
        types = s.stack_types() or "-"
        head = s.tokens[s.queue_pos] if s.queue_pos < len(s.tokens) else "-"
        print(f"{i}\t{action_label(s.action)}\t{types}\t{head}", file=out)


def cmd_parse(args, trace: bool) -> int:
    domain = _load_domain(args)
    weights, templates = _load_weights(args, domain)
    from .features import LinearScorer

    tokens = tokenize(" ".join(args.question))
    if not tokens:
        print("error: empty question", file=sys.stderr)
        return 2
    final = beam_decode(
        tokens, domain, LinearScorer(weights, templates), _beam(args),
        goal_type=_goal(args, domain),
    )
    if final is None:
        print("no parse found", file=sys.stderr)
        return 1
    if trace:
        _print_trace(final)
    mr = final_mr(final)
    print(f"{print_mr(mr)}\t{final.stack.item.result.type}")
    return 0


def cmd_train(args) -> int:
    import os

    domain = _load_domain(args)
    examples = learner.load_dataset_file(args.data, domain)
    templates = (
        FeatureTemplateSet.from_lines(open(args.templates, encoding="utf-8").read())
        if args.templates
        else default_templates()
    )
    cfg = learner.TrainerConfig(
        iterations=args.iters,
        beam_width=args.beam,
        pass1_time_limit=args.time_limit,
        pass2_beam=args.pass2_beam,
        averaging=not args.no_average,
        seed=args.seed,
        workers=args.workers,
    )
    cached = False
    if args.cache and os.path.exists(args.cache):
        learner.load_reference_cache_file(args.cache, examples)
        cached = True
        print(f"loaded reference cache {args.cache} (skipping forced decoding)")
    weights, coverage, stats = learner.run_training(
        examples, domain, cfg, templates, references_cached=cached
    )
    if args.cache and not cached:
        learner.save_reference_cache(args.cache, examples)
        print(f"wrote reference cache {args.cache}")
    print(coverage.summary())
    for s in stats:
        print(f"epoch {s.epoch}: {s.updates} updates over {s.examples} examples")
    meta = {
        "iterations": cfg.iterations,
        "beam_width": cfg.beam_width,
        "seed": cfg.seed,
        "averaging": cfg.averaging,
        "train_examples": len(examples),
    }
    save_model(args.model, weights, templates, meta)
    print(f"wrote model {args.model} ({len(weights)} features)")
    return 0


def cmd_eval(args) -> int:
    domain = _load_domain(args)
    weights, templates = _load_weights(args, domain)
    examples = learner.load_dataset_file(args.data, domain)
    report = evalkit.evaluate(
        weights, templates, examples, domain, _beam(args),
        goal_type=_goal(args, domain), workers=args.workers,
    )
    print(evalkit.report_table(report))
    print(evalkit.report_kv_lines(report))
    return 0


def cmd_force_decode(args) -> int:
    domain = _load_domain(args)
    examples = learner.load_dataset_file(args.data, domain)
    report = learner.forced_decode_pass1(
        examples, domain, args.time_limit, workers=args.workers
    )
    print(report.summary())
    if args.cache:
        learner.save_reference_cache(args.cache, examples)
        print(f"wrote reference cache {args.cache}")
    return 0 if report.covered == report.total else 1


def main(argv: list[str] | None = None) -> int:
    args = build_arg_parser().parse_args(argv)
    if args.command == "parse":
        return cmd_parse(args, trace=args.trace)
    if args.command == "trace":
        return cmd_parse(args, trace=True)
    if args.command == "train":
        return cmd_train(args)
    if args.command == "eval":
        return cmd_eval(args)
    if args.command == "force-decode":
        return cmd_force_decode(args)
    raise AssertionError(f"unhandled command {args.command!r}")


if __name__ == "__main__":
    sys.exit(main())
