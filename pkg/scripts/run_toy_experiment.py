#!/usr/bin/env python
"""Train on the bundled toy corpus and report exact-match accuracy.

Runs the full pipeline once: forced decoding to recover reference
derivations, max-violation perceptron training, then evaluation on both
splits plus a couple of fully traced example parses.  Everything is
deterministic for a fixed seed, so two runs print identical numbers.
"""

from __future__ import annotations

import argparse
import sys
import time
from importlib import resources
from pathlib import Path

from typeshift.evalkit import evaluate, report_table
from typeshift.features import LinearScorer, default_templates, save_model
from typeshift.learner import TrainerConfig, load_dataset_file, run_training
from typeshift.lexicon import load_domain_file, to_simple_types, tokenize
from typeshift.parser import action_label, beam_decode, final_mr
from typeshift.mr import print_mr

DATA = resources.files("typeshift") / "data"

SHOWCASE = [
    "what is the capital of the largest state by area ?",
    "the biggest major city ?",
]


def trace_parse(question: str, domain, scorer, beam: int) -> None:
    tokens = tokenize(question)
    final = beam_decode(tokens, domain, scorer, beam)
    print(f"\n  {question}")
    if final is None:
        print("    (no parse)")
        return
    state, rows = final, []
    while state.action is not None:
        rows.append(state)
        state = state.parent
    for i, s in enumerate(reversed(rows), 1):
        head = s.tokens[s.queue_pos] if s.queue_pos < len(s.tokens) else "-"
        print(f"    {i:>2} {action_label(s.action):<4} {s.stack_types() or '-':<40} {head}")
    print(f"    -> {print_mr(final_mr(final))} : {final.stack.item.result.type}")


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--domain", default=str(DATA / "geo_mini.domain"))
    ap.add_argument("--train", default=str(DATA / "geo_toy_train.tsv"))
    ap.add_argument("--test", default=str(DATA / "geo_toy_test.tsv"))
    ap.add_argument("--iters", type=int, default=20)
    ap.add_argument("--beam", type=int, default=16)
    ap.add_argument("--seed", type=int, default=1)
    ap.add_argument("--simple-types", action="store_true",
                    help="collapse entity types to one base type before training")
    ap.add_argument("--model-out", type=Path, help="optionally save the trained model")
    args = ap.parse_args()

    domain = load_domain_file(args.domain)
    if args.simple_types:
        domain = to_simple_types(domain)
    train_examples = load_dataset_file(args.train, domain)
    test_examples = load_dataset_file(args.test, domain)
    templates = default_templates()
    cfg = TrainerConfig(iterations=args.iters, beam_width=args.beam, seed=args.seed)

    start = time.perf_counter()
    weights, coverage, stats = run_training(train_examples, domain, cfg, templates)
    print(coverage.summary())
    converged = next((s.epoch for s in stats if s.updates == 0), None)
    trail = ", ".join(f"{s.epoch}:{s.updates}" for s in stats[:8])
    print(f"updates per epoch: {trail}{', ...' if len(stats) > 8 else ''}")
    if converged is not None:
        print(f"no updates from epoch {converged} on")
    print(f"trained {len(weights)} feature weights in {time.perf_counter() - start:.1f}s")

    for name, examples in (("train", train_examples), ("test", test_examples)):
        report = evaluate(weights, templates, examples, domain, args.beam)
        print(f"\n== {name} ==")
        print(report_table(report))

    scorer = LinearScorer(weights, templates)
    for question in SHOWCASE:
        trace_parse(question, domain, scorer, args.beam)

    if args.model_out:
        meta = {"iterations": cfg.iterations, "beam_width": cfg.beam_width,
                "seed": cfg.seed, "train_examples": len(train_examples)}
        save_model(str(args.model_out), weights, templates, meta)
        print(f"\nwrote model {args.model_out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
