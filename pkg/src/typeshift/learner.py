"""Training: forced decoding of reference derivations and a
latent-variable max-violation perceptron.

Correct action sequences are not annotated, so each example first gets
a reference set: every derivation that produces the gold MR (pass 1,
exhaustive with pruning and a time limit; pass 2 retries the leftovers
with the partially trained model and a large constrained beam).  The
perceptron then compares, per step, the best reference prefix against
the best non-reference beam item and updates at the step where the
model is most wrong.
"""

from __future__ import annotations

import json
import random
from concurrent import futures
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .features import (
    FeatureTemplateSet,
    LinearScorer,
    add_scaled,
    default_templates,
    feature_diff,
    path_features,
)
from .lexicon import Domain, tokenize
from .mr import Expression, mr_equal, parse_expression, print_mr, resolve_expr
from .parser import (
    Derivation,
    TargetFilter,
    action_from_code,
    action_to_code,
    beam_search,
    constrained_decode,
    derivation_of,
    enumerate_derivations,
    final_mr,
)


class DatasetError(ValueError):
    """Malformed dataset line."""


@dataclass
class TrainingExample:
    index: int
    question: str
    tokens: tuple[str, ...]
    pos_tags: tuple[str, ...] | None
    mr_text: str
    gold: Expression
    references: list[Derivation] = field(default_factory=list)
    enumeration_complete: bool = True


def load_dataset(source: Iterable[str] | str, domain: Domain) -> list[TrainingExample]:
    """Read ``question<TAB>mr[<TAB>pos tags]`` lines."""
    if isinstance(source, str):
        lines = source.splitlines()
    else:
        lines = list(source)
    examples = []
    for lineno, raw in enumerate(lines, 1):
        line = raw.rstrip("\n")
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        fields = line.split("\t")
        if len(fields) not in (2, 3):
            raise DatasetError(f"line {lineno}: expected 2 or 3 tab-separated fields")
        question, mr_text = fields[0].strip(), fields[1].strip()
        tokens = tuple(tokenize(question))
        pos_tags = None
        if len(fields) == 3 and fields[2].strip():
            pos_tags = tuple(fields[2].split())
            if len(pos_tags) != len(tokens):
                raise DatasetError(
                    f"line {lineno}: {len(pos_tags)} tags for {len(tokens)} tokens"
                )
        try:
            parsed = parse_expression(mr_text, domain)
        except ValueError as exc:
            raise DatasetError(f"line {lineno}: {exc}") from exc
        gold = resolve_expr(parsed.expr, parsed.binding)
        examples.append(
            TrainingExample(
                index=len(examples),
                question=question,
                tokens=tokens,
                pos_tags=pos_tags,
                mr_text=mr_text,
                gold=gold,
            )
        )
    return examples


def load_dataset_file(path: str, domain: Domain) -> list[TrainingExample]:
    with open(path, encoding="utf-8") as fh:
        return load_dataset(fh.read(), domain)


# ---------------------------------------------------------------------------
# Forced decoding


@dataclass
class CoverageReport:
    total: int
    covered: int
    uncovered: tuple[int, ...]
    incomplete: tuple[int, ...]  # indices where enumeration hit the time limit

    @property
    def fraction(self) -> float:
        return self.covered / self.total if self.total else 0.0

    def summary(self) -> str:
        lines = [
            f"coverage {self.covered}/{self.total} ({self.fraction:.1%})",
        ]
        if self.uncovered:
            lines.append("uncovered examples: " + " ".join(map(str, self.uncovered)))
        if self.incomplete:
            lines.append(
                "incomplete enumerations (time limit): "
                + " ".join(map(str, self.incomplete))
            )
        return "\n".join(lines)


def _coverage(examples: Sequence[TrainingExample]) -> CoverageReport:
    uncovered = tuple(ex.index for ex in examples if not ex.references)
    incomplete = tuple(ex.index for ex in examples if not ex.enumeration_complete)
    return CoverageReport(len(examples), len(examples) - len(uncovered), uncovered, incomplete)


_WORKER_DOMAIN: Domain | None = None
_WORKER_LIMIT: float | None = None


def _pass1_init(domain: Domain, time_limit: float | None) -> None:
    global _WORKER_DOMAIN, _WORKER_LIMIT
    _WORKER_DOMAIN = domain
    _WORKER_LIMIT = time_limit


def _pass1_one(args) -> tuple[list[list[list]], bool]:
    tokens, pos_tags, gold = args
    res = enumerate_derivations(
        tokens, _WORKER_DOMAIN, _WORKER_LIMIT, target=gold, pos_tags=pos_tags
    )
    return [[action_to_code(a) for a in d.actions] for d in res.derivations], res.complete


def forced_decode_pass1(
    examples: Sequence[TrainingExample],
    domain: Domain,
    time_limit: float | None = 60.0,
    workers: int = 1,
) -> CoverageReport:
    """Exhaustively enumerate target-producing derivations per example."""
    if workers > 1:
        jobs = [(ex.tokens, ex.pos_tags, ex.gold) for ex in examples]
        with futures.ProcessPoolExecutor(
            max_workers=workers, initializer=_pass1_init, initargs=(domain, time_limit)
        ) as pool:
            for ex, (codes, complete) in zip(examples, pool.map(_pass1_one, jobs)):
                ex.references = [
                    Derivation(ex.tokens, ex.pos_tags, tuple(action_from_code(c) for c in seq))
                    for seq in codes
                ]
                ex.enumeration_complete = complete
    else:
        for ex in examples:
            res = enumerate_derivations(
                ex.tokens, domain, time_limit, target=ex.gold, pos_tags=ex.pos_tags
            )
            ex.references = res.derivations
            ex.enumeration_complete = res.complete
    return _coverage(examples)


def forced_decode_pass2(
    examples: Sequence[TrainingExample],
    domain: Domain,
    scorer: LinearScorer,
    beam_width: int = 1024,
) -> int:
    """Retry uncovered examples with a model-guided constrained beam.

    Returns how many previously uncovered examples gained references.
    """
    recovered = 0
    for ex in examples:
        if ex.references:
            continue
        filt = TargetFilter(ex.gold)
        run = beam_search(
            ex.tokens, domain, scorer, beam_width, ex.pos_tags, state_filter=filt.admits
        )
        refs = [
            derivation_of(s) for s in run.finals if mr_equal(final_mr(s), ex.gold)
        ]
        if refs:
            ex.references = refs
            recovered += 1
    return recovered


def verify_references(examples: Sequence[TrainingExample], domain: Domain) -> None:
    """Every reference derivation must replay to the example's gold MR."""
    for ex in examples:
        for ref in ex.references:
            state = ref.replay(domain)
            if not mr_equal(final_mr(state), ex.gold):
                raise ValueError(
                    f"example {ex.index}: reference derivation does not replay to gold"
                )


# ---------------------------------------------------------------------------
# Reference cache files


def format_reference_cache(examples: Sequence[TrainingExample]) -> str:
    records = []
    for ex in examples:
        records.append(
            json.dumps(
                {
                    "id": ex.index,
                    "question": ex.question,
                    "mr": print_mr(ex.gold),
                    "complete": ex.enumeration_complete,
                    "derivations": [
                        [action_to_code(a) for a in ref.actions] for ref in ex.references
                    ],
                },
                sort_keys=True,
                separators=(",", ":"),
            )
        )
    return "\n".join(records) + "\n"


def load_reference_cache(text: str, examples: Sequence[TrainingExample]) -> None:
    """Fill reference sets from cached action sequences.

    The cache must describe the same dataset: ids, questions, and gold
    MRs are all checked.
    """
    records = [json.loads(line) for line in text.splitlines() if line.strip()]
    if len(records) != len(examples):
        raise ValueError(
            f"cache has {len(records)} records for {len(examples)} examples"
        )
    for rec, ex in zip(records, examples):
        if rec["id"] != ex.index or rec["question"] != ex.question:
            raise ValueError(f"cache record {rec['id']} does not match example {ex.index}")
        if rec["mr"] != print_mr(ex.gold):
            raise ValueError(f"cache record {rec['id']}: gold MR changed")
        ex.references = [
            Derivation(ex.tokens, ex.pos_tags, tuple(action_from_code(c) for c in seq))
            for seq in rec["derivations"]
        ]
        ex.enumeration_complete = bool(rec["complete"])


def save_reference_cache(path: str, examples: Sequence[TrainingExample]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(format_reference_cache(examples))


def load_reference_cache_file(path: str, examples: Sequence[TrainingExample]) -> None:
    with open(path, encoding="utf-8") as fh:
        load_reference_cache(fh.read(), examples)


# ---------------------------------------------------------------------------
# Max-violation perceptron


@dataclass
class ViolationRecord:
    """What one example contributed: the step picked, the violation
    (best wrong score minus best reference score at that step), and the
    applied feature delta."""

    step: int | None
    violation: float
    updated: bool
    delta: dict[str, int] = field(default_factory=dict)
    good_score: float = 0.0
    bad_score: float = 0.0


def max_violation_update(
    example: TrainingExample,
    weights: dict[str, float],
    templates: FeatureTemplateSet,
    domain: Domain,
    beam_width: int,
    final_fallback: bool = False,
) -> ViolationRecord:
    """One perceptron step on one example.

    Runs the beam, classifies beam items by whether their action prefix
    belongs to the reference set, and finds the step where the best
    wrong item most outscores the best reference prefix.  No update
    happens when the references strictly win everywhere (unless
    ``final_fallback`` forces an update at the last comparable step).
    """
    if not example.references:
        raise ValueError(f"example {example.index} has no reference derivations")
    scorer = LinearScorer(weights, templates)
    run = beam_search(example.tokens, domain, scorer, beam_width, example.pos_tags)
    prefixes = set()
    for ref in example.references:
        acts = ref.actions
        for i in range(1, len(acts) + 1):
            prefixes.add(acts[:i])
    good_best = constrained_decode(
        example.tokens, domain, scorer, example.references, pos_tags=example.pos_tags
    )
    best = None  # (violation, step, good, bad)
    last = None
    for step_count in range(1, len(run.buckets)):
        if step_count - 1 >= len(good_best):
            break
        bad = None
        for s in run.buckets[step_count]:
            if s.actions() not in prefixes and (bad is None or s.score > bad.score):
                bad = s
        if bad is None:
            continue
        good = good_best[step_count - 1]
        violation = bad.score - good.score
        last = (violation, step_count, good, bad)
        if best is None or violation > best[0]:
            best = last
    if best is None:
        return ViolationRecord(None, 0.0, False)
    if best[0] < 0.0:
        if not final_fallback:
            return ViolationRecord(best[1], best[0], False)
        best = last
    violation, step_count, good, bad = best
    plus = path_features(good, templates, domain)
    minus = path_features(bad, templates, domain)
    delta = feature_diff(plus, minus)
    add_scaled(weights, delta, 1.0)
    return ViolationRecord(step_count, violation, True, delta, good.score, bad.score)


@dataclass
class TrainerConfig:
    iterations: int = 20
    beam_width: int = 16
    pass1_time_limit: float = 60.0
    pass2_beam: int = 1024
    averaging: bool = True
    seed: int = 1
    final_fallback: bool = False
    workers: int = 1


@dataclass
class EpochStats:
    epoch: int
    updates: int
    examples: int


def train(
    examples: Sequence[TrainingExample],
    domain: Domain,
    cfg: TrainerConfig,
    templates: FeatureTemplateSet | None = None,
) -> tuple[dict[str, float], list[EpochStats]]:
    """Run the perceptron over examples that have references.

    Examples are shuffled per epoch with the seeded RNG; with averaging
    the returned vector is the mean of the weight vector over all
    example visits, which is what should be used for decoding.
    """
    templates = templates if templates is not None else default_templates()
    trainable = [ex for ex in examples if ex.references]
    verify_references(trainable, domain)
    rng = random.Random(cfg.seed)
    weights: dict[str, float] = {}
    accum: dict[str, float] = {}
    visits = 0
    stats: list[EpochStats] = []
    for epoch in range(cfg.iterations):
        order = list(trainable)
        rng.shuffle(order)
        updates = 0
        for ex in order:
            visits += 1
            rec = max_violation_update(
                ex, weights, templates, domain, cfg.beam_width, cfg.final_fallback
            )
            if rec.updated:
                add_scaled(accum, rec.delta, float(visits))
                updates += 1
        stats.append(EpochStats(epoch, updates, len(order)))
    if cfg.averaging and visits > 0:
        averaged = {}
        for key in set(weights) | set(accum):
            value = ((visits + 1) * weights.get(key, 0.0) - accum.get(key, 0.0)) / visits
            if value != 0.0:
                averaged[key] = value
        return averaged, stats
    return weights, stats


def run_training(
    examples: Sequence[TrainingExample],
    domain: Domain,
    cfg: TrainerConfig,
    templates: FeatureTemplateSet | None = None,
    references_cached: bool = False,
) -> tuple[dict[str, float], CoverageReport, list[EpochStats]]:
    """Full pipeline: pass 1, train, pass 2, retrain when pass 2 helped.

    With ``references_cached`` both forced-decoding passes are skipped
    (the cache holds the final reference sets), which reproduces the
    original model bit for bit under the same seed.
    """
    templates = templates if templates is not None else default_templates()
    if references_cached:
        verify_references(examples, domain)
        weights, stats = train(examples, domain, cfg, templates)
        return weights, _coverage(examples), stats
    forced_decode_pass1(examples, domain, cfg.pass1_time_limit, cfg.workers)
    weights, stats = train(examples, domain, cfg, templates)
    recovered = forced_decode_pass2(
        examples, domain, LinearScorer(weights, templates), cfg.pass2_beam
    )
    if recovered:
        weights, stats = train(examples, domain, cfg, templates)
    return weights, _coverage(examples), stats
