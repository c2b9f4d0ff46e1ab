"""Exact-match evaluation of a trained model over a dataset."""

from __future__ import annotations

import time
import warnings
from concurrent import futures
from dataclasses import dataclass
from typing import Sequence

from .features import FeatureTemplateSet, LinearScorer
from .lexicon import Domain
from .mr import mr_equal
from .parser import beam_decode, final_mr
from .typesys import Type


@dataclass(frozen=True)
class EvalReport:
    total: int
    parsed: int
    correct: int
    precision: float
    recall: float
    f1: float
    seconds_total: float
    seconds_per_sentence: float
    notes: tuple[str, ...] = ()


def compute_metrics(total: int, parsed: int, correct: int) -> tuple[float, float, float, tuple[str, ...]]:
    """Precision over parsed, recall over total, harmonic-mean F1.

    Empty denominators yield 0.0 and a note (also emitted as a Python
    warning) instead of an error.
    """
    notes = []
    if parsed:
        precision = correct / parsed
    else:
        precision = 0.0
        notes.append("precision 0/0 treated as 0.0")
    if total:
        recall = correct / total
    else:
        recall = 0.0
        notes.append("recall 0/0 treated as 0.0")
    if precision + recall > 0.0:
        f1 = 2.0 * precision * recall / (precision + recall)
    else:
        f1 = 0.0
        notes.append("f1 0/0 treated as 0.0")
    for note in notes:
        warnings.warn(note, stacklevel=2)
    return precision, recall, f1, tuple(notes)


_EVAL_CTX: dict = {}


def _eval_init(domain, weights, templates, beam_width, goal_type) -> None:
    _EVAL_CTX["domain"] = domain
    _EVAL_CTX["scorer"] = LinearScorer(weights, templates)
    _EVAL_CTX["beam_width"] = beam_width
    _EVAL_CTX["goal_type"] = goal_type


def _eval_one(args) -> tuple[bool, str | None, float]:
    from .mr import canonical_key

    tokens, pos_tags = args
    start = time.perf_counter()
    final = beam_decode(
        tokens,
        _EVAL_CTX["domain"],
        _EVAL_CTX["scorer"],
        _EVAL_CTX["beam_width"],
        pos_tags,
        _EVAL_CTX["goal_type"],
    )
    elapsed = time.perf_counter() - start
    if final is None:
        return False, None, elapsed
    return True, canonical_key(final_mr(final)), elapsed


def evaluate(
    weights: dict[str, float],
    templates: FeatureTemplateSet,
    examples: Sequence,
    domain: Domain,
    beam_width: int | None = 16,
    goal_type: Type | None = None,
    workers: int = 1,
) -> EvalReport:
    """Decode every example and compare MRs exactly (up to variable
    names and conjunct order).  The model is read, never mutated."""
    from .mr import canonical_key

    scorer = LinearScorer(weights, templates)
    parsed = 0
    correct = 0
    seconds = 0.0
    if workers > 1:
        jobs = [(ex.tokens, ex.pos_tags) for ex in examples]
        with futures.ProcessPoolExecutor(
            max_workers=workers,
            initializer=_eval_init,
            initargs=(domain, weights, templates, beam_width, goal_type),
        ) as pool:
            for ex, (ok, key, elapsed) in zip(examples, pool.map(_eval_one, jobs)):
                seconds += elapsed
                if ok:
                    parsed += 1
                    if key == canonical_key(ex.gold):
                        correct += 1
    else:
        for ex in examples:
            start = time.perf_counter()
            final = beam_decode(ex.tokens, domain, scorer, beam_width, ex.pos_tags, goal_type)
            seconds += time.perf_counter() - start
            if final is not None:
                parsed += 1
                if mr_equal(final_mr(final), ex.gold):
                    correct += 1
    total = len(examples)
    precision, recall, f1, notes = compute_metrics(total, parsed, correct)
    return EvalReport(
        total=total,
        parsed=parsed,
        correct=correct,
        precision=precision,
        recall=recall,
        f1=f1,
        seconds_total=seconds,
        seconds_per_sentence=seconds / total if total else 0.0,
        notes=notes,
    )


def report_kv_lines(report: EvalReport) -> str:
    """Machine-readable key=value lines."""
    pairs = [
        ("total", report.total),
        ("parsed", report.parsed),
        ("correct", report.correct),
        ("precision", f"{report.precision:.6f}"),
        ("recall", f"{report.recall:.6f}"),
        ("f1", f"{report.f1:.6f}"),
        ("seconds_total", f"{report.seconds_total:.3f}"),
        ("seconds_per_sentence", f"{report.seconds_per_sentence:.4f}"),
    ]
    return "\n".join(f"{k}={v}" for k, v in pairs)


def report_table(report: EvalReport) -> str:
    rows = [
        ("sentences", str(report.total)),
        ("parsed", str(report.parsed)),
        ("correct", str(report.correct)),
        ("precision", f"{report.precision:.4f}"),
        ("recall", f"{report.recall:.4f}"),
        ("f1", f"{report.f1:.4f}"),
        ("time (s)", f"{report.seconds_total:.2f}"),
        ("s/sentence", f"{report.seconds_per_sentence:.4f}"),
    ]
    width = max(len(k) for k, _ in rows)
    lines = [f"{k.rjust(width)}  {v}" for k, v in rows]
    for note in report.notes:
        lines.append(f"{'note'.rjust(width)}  {note}")
    return "\n".join(lines)
