"""Sparse action-scoring features over parser states.

Each feature template combines a few atomic values read off the state
and the candidate action: printed types and span boundary words of the
top three stack items, the next three queue words, the grounded
predicate names and template id of a shift, and the action name.  One
template yields one human-readable feature string per step, e.g.
``t2_q0:T2=st->t|Q0=by|ACT=reR``.
"""

from __future__ import annotations

import hashlib
import json
import re
from dataclasses import dataclass
from importlib import resources
from typing import Iterable, Mapping

from .lexicon import Domain
from .parser import Action, ParserState, Shift, action_label

NONE = "NONE"

TYPE_CLASSES = ("T0", "T1", "T2")
WORD_CLASSES = ("L0", "L1", "L2", "R0", "R1", "R2", "Q0", "Q1", "Q2")
GROUND_CLASSES = ("PRED", "TID")
ATOMIC_CLASSES = TYPE_CLASSES + WORD_CLASSES + GROUND_CLASSES + ("ACT",)

# Per-template combination budgets.
MAX_TYPE_ATOMS = 3
MAX_WORD_ATOMS = 2
MAX_GROUND_ATOMS = 2


class TemplateError(ValueError):
    """Malformed feature-template definition."""


@dataclass(frozen=True)
class FeatureTemplate:
    name: str
    classes: tuple[str, ...]

    def check_budget(self) -> None:
        kinds = {"type": 0, "word": 0, "ground": 0}
        for c in self.classes:
            if c not in ATOMIC_CLASSES:
                raise TemplateError(f"template {self.name!r}: unknown class {c!r}")
            if c in TYPE_CLASSES:
                kinds["type"] += 1
            elif c in WORD_CLASSES:
                kinds["word"] += 1
            elif c in GROUND_CLASSES:
                kinds["ground"] += 1
        if kinds["type"] > MAX_TYPE_ATOMS:
            raise TemplateError(f"template {self.name!r}: too many type atoms")
        if kinds["word"] > MAX_WORD_ATOMS:
            raise TemplateError(f"template {self.name!r}: too many word atoms")
        if kinds["ground"] > MAX_GROUND_ATOMS:
            raise TemplateError(f"template {self.name!r}: too many grounding atoms")


_TEMPLATE_LINE = re.compile(r"([A-Za-z0-9_]+)\s*:\s*([A-Z0-9]+(?:\s*,\s*[A-Z0-9]+)*)")


@dataclass(frozen=True)
class FeatureTemplateSet:
    templates: tuple[FeatureTemplate, ...]

    def __len__(self) -> int:
        return len(self.templates)

    @classmethod
    def from_lines(cls, lines: Iterable[str] | str) -> "FeatureTemplateSet":
        if isinstance(lines, str):
            lines = lines.splitlines()
        templates = []
        names = set()
        for lineno, raw in enumerate(lines, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            m = _TEMPLATE_LINE.fullmatch(line)
            if m is None:
                raise TemplateError(f"line {lineno}: cannot parse {line!r}")
            name = m.group(1)
            if name in names:
                raise TemplateError(f"line {lineno}: duplicate template {name!r}")
            names.add(name)
            tmpl = FeatureTemplate(name, tuple(c.strip() for c in m.group(2).split(",")))
            tmpl.check_budget()
            templates.append(tmpl)
        return cls(tuple(templates))

    def to_lines(self) -> str:
        return "\n".join(f"{t.name}: {','.join(t.classes)}" for t in self.templates) + "\n"


def default_templates() -> FeatureTemplateSet:
    text = resources.files("typeshift").joinpath("data/feature_templates.txt").read_text()
    return FeatureTemplateSet.from_lines(text)


# ---------------------------------------------------------------------------
# Extraction


def atomic_features(state: ParserState, action: Action, domain: Domain) -> dict[str, str]:
    """Atomic class values for one (state, action) pair; absent
    positions yield the reserved NONE value."""
    vals: dict[str, str] = {}
    items = state.stack_items(3)
    for i in range(3):
        if i < len(items):
            item = items[i]
            vals[f"T{i}"] = str(item.result.type)
            vals[f"L{i}"] = state.tokens[item.span[0]]
            vals[f"R{i}"] = state.tokens[item.span[1] - 1]
        else:
            vals[f"T{i}"] = NONE
            vals[f"L{i}"] = NONE
            vals[f"R{i}"] = NONE
    queue = state.queue()
    for i in range(3):
        vals[f"Q{i}"] = queue[i] if i < len(queue) else NONE
    if isinstance(action, Shift):
        entry = domain.by_id[action.template_id]
        vals["PRED"] = entry.pred_names
        vals["TID"] = str(action.template_id)
    else:
        vals["PRED"] = NONE
        vals["TID"] = NONE
    vals["ACT"] = action_label(action)
    return vals


def extract(
    state: ParserState, action: Action, templates: FeatureTemplateSet, domain: Domain
) -> dict[str, int]:
    """One feature string per template, each with count 1."""
    vals = atomic_features(state, action, domain)
    feats: dict[str, int] = {}
    for t in templates.templates:
        key = t.name + ":" + "|".join(f"{c}={vals[c]}" for c in t.classes)
        feats[key] = feats.get(key, 0) + 1
    return feats


def path_features(
    final: ParserState, templates: FeatureTemplateSet, domain: Domain
) -> dict[str, int]:
    """Accumulated features of a whole (partial) derivation."""
    total: dict[str, int] = {}
    chain = []
    state = final
    while state.action is not None:
        chain.append(state)
        state = state.parent
    for s in reversed(chain):
        for key, n in extract(s.parent, s.action, templates, domain).items():
            total[key] = total.get(key, 0) + n
    return total


def feature_diff(plus: Mapping[str, int], minus: Mapping[str, int]) -> dict[str, int]:
    out: dict[str, int] = {}
    for key, n in plus.items():
        out[key] = out.get(key, 0) + n
    for key, n in minus.items():
        out[key] = out.get(key, 0) - n
    return {k: v for k, v in out.items() if v != 0}


def dot(weights: Mapping[str, float], feats: Mapping[str, int]) -> float:
    return sum(weights.get(key, 0.0) * n for key, n in feats.items())


def add_scaled(weights: dict[str, float], feats: Mapping[str, int], scale: float = 1.0) -> None:
    for key, n in feats.items():
        value = weights.get(key, 0.0) + scale * n
        if value == 0.0:
            weights.pop(key, None)
        else:
            weights[key] = value


def hashed_features(feats: Mapping[str, int], digest_size: int = 8) -> dict[str, int]:
    """Optional space saver: replace feature strings with short digests."""
    out: dict[str, int] = {}
    for key, n in feats.items():
        h = hashlib.blake2b(key.encode(), digest_size=digest_size).hexdigest()
        out[h] = out.get(h, 0) + n
    return out


class LinearScorer:
    """Dot product of extracted features against a weight vector."""

    def __init__(self, weights: Mapping[str, float], templates: FeatureTemplateSet):
        self.weights = weights
        self.templates = templates

    def score(self, state: ParserState, action: Action, domain: Domain) -> float:
        return dot(self.weights, extract(state, action, self.templates, domain))


# ---------------------------------------------------------------------------
# Model files

MODEL_HEADER = "typeshift-model v1"


def format_model(weights: Mapping[str, float], templates: FeatureTemplateSet, meta: dict) -> str:
    """Versioned, sorted text serialization; exact float round trip."""
    lines = [MODEL_HEADER]
    lines.append("# config " + json.dumps(meta, sort_keys=True))
    for t in templates.templates:
        lines.append(f"template\t{t.name}\t{','.join(t.classes)}")
    for key in sorted(weights):
        lines.append(f"w\t{key}\t{weights[key]!r}")
    return "\n".join(lines) + "\n"


def parse_model(text: str) -> tuple[dict[str, float], FeatureTemplateSet, dict]:
    lines = text.splitlines()
    if not lines or lines[0] != MODEL_HEADER:
        raise ValueError(f"not a model file (expected {MODEL_HEADER!r} header)")
    meta: dict = {}
    templates: list[FeatureTemplate] = []
    weights: dict[str, float] = {}
    for line in lines[1:]:
        if not line.strip():
            continue
        if line.startswith("# config "):
            meta = json.loads(line[len("# config ") :])
            continue
        if line.startswith("#"):
            continue
        kind, _, rest = line.partition("\t")
        if kind == "template":
            name, _, classes = rest.partition("\t")
            tmpl = FeatureTemplate(name, tuple(classes.split(",")))
            tmpl.check_budget()
            templates.append(tmpl)
        elif kind == "w":
            key, _, value = rest.rpartition("\t")
            weights[key] = float(value)
        else:
            raise ValueError(f"unknown model line kind {kind!r}")
    return weights, FeatureTemplateSet(tuple(templates)), meta


def save_model(path: str, weights: Mapping[str, float], templates: FeatureTemplateSet, meta: dict) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(format_model(weights, templates, meta))


def load_model(path: str) -> tuple[dict[str, float], FeatureTemplateSet, dict]:
    with open(path, encoding="utf-8") as fh:
        return parse_model(fh.read())
