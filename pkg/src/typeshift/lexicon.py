"""Domain files: type hierarchy, typed atoms, and the trigger lexicon.

A domain file mixes five line kinds (``#`` starts a comment anywhere):

    type <name> <: <name>
    const <name> : <type>
    pred <name> : <type>
    lex "<phrase>" => <template s-expression>
    lexpos <TAG> => <template s-expression>

Types may be declared before or after they are used as parents; atoms
may share a name as long as their types differ.  A ``lex`` template
whose atoms admit several typed readings yields one lexicon entry per
reading, in declaration order.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .mr import (
    AND_NAME,
    AND_PRED,
    AND_TYPE,
    Const,
    Pred,
    TypedResult,
    leaf_atoms,
    parse_expression_candidates,
    print_mr,
    resolve_expr,
)
from .typesys import (
    Arrow,
    Base,
    Type,
    TypeHierarchy,
    TypeVar,
    load_hierarchy,
    parse_type,
    resolve,
    validate_type,
)


class DomainError(ValueError):
    """Malformed domain file."""


def tokenize(text: str) -> list[str]:
    """Lowercase, split on whitespace, detach punctuation."""
    return re.findall(r"[a-z0-9_']+|[^\sa-z0-9_']", text.lower())


@dataclass(frozen=True)
class LexiconEntry:
    """One shift option: a trigger plus an instantiable typed template."""

    phrase: tuple[str, ...] | None
    pos_tag: str | None
    template: TypedResult
    template_id: int
    pred_names: str  # '+'-joined atom names, used as a grounding feature

    def trigger_text(self) -> str:
        if self.phrase is not None:
            return " ".join(self.phrase)
        return f"<{self.pos_tag}>"


@dataclass(frozen=True)
class LexSpec:
    """A lexicon source line, kept verbatim for round-trip saves."""

    kind: str  # "lex" or "lexpos"
    trigger: str
    template_text: str


class _AtomView:
    """Minimal atom source used while a domain is still being built."""

    def __init__(self, hierarchy: TypeHierarchy, atoms: dict[str, list[TypedResult]]):
        self.hierarchy = hierarchy
        self._atoms = atoms

    def atom_candidates(self, name: str) -> Sequence[TypedResult]:
        if name == AND_NAME:
            return (TypedResult(AND_PRED, AND_TYPE),)
        return tuple(self._atoms.get(name, ()))


@dataclass
class Domain:
    """An immutable-by-convention bundle of hierarchy, atoms, and lexicon."""

    hierarchy: TypeHierarchy
    constants: tuple[tuple[str, Type], ...]
    predicates: tuple[tuple[str, Type], ...]
    entries: tuple[LexiconEntry, ...]
    lex_specs: tuple[LexSpec, ...]
    # annotation spellings from another hierarchy, e.g. rich entity
    # names read against a collapsed domain; empty for loaded domains
    base_alias: dict[str, str] = field(default_factory=dict)
    _atoms: dict = field(init=False, repr=False, compare=False)
    _by_phrase: dict = field(init=False, repr=False, compare=False)
    _by_pos: dict = field(init=False, repr=False, compare=False)
    by_id: dict = field(init=False, repr=False, compare=False)
    max_phrase_len: int = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        atoms: dict[str, list[TypedResult]] = {}
        for name, ty in self.constants:
            atoms.setdefault(name, []).append(TypedResult(Const(name, ty), ty))
        for name, ty in self.predicates:
            atoms.setdefault(name, []).append(TypedResult(Pred(name, ty), ty))
        by_phrase: dict[tuple[str, ...], list[LexiconEntry]] = {}
        by_pos: dict[str, list[LexiconEntry]] = {}
        for entry in self.entries:
            if entry.phrase is not None:
                by_phrase.setdefault(entry.phrase, []).append(entry)
            else:
                by_pos.setdefault(entry.pos_tag, []).append(entry)
        self._atoms = atoms
        self._by_phrase = by_phrase
        self._by_pos = by_pos
        self.by_id = {e.template_id: e for e in self.entries}
        self.max_phrase_len = max((len(p) for p in by_phrase), default=0)

    def atom_candidates(self, name: str) -> Sequence[TypedResult]:
        if name == AND_NAME:
            return (TypedResult(AND_PRED, AND_TYPE),)
        return tuple(self._atoms.get(name, ()))


def lookup_shifts(
    queue_tokens: Sequence[str], pos_tags: Sequence[str] | None, domain: Domain
) -> list[tuple[int, LexiconEntry]]:
    """Shift options for the queue head: (tokens consumed, entry) pairs,
    longest trigger first, then by template id."""
    hits: list[tuple[int, LexiconEntry]] = []
    if not queue_tokens:
        return hits
    top = min(domain.max_phrase_len, len(queue_tokens))
    for length in range(top, 0, -1):
        for entry in domain._by_phrase.get(tuple(queue_tokens[:length]), ()):
            hits.append((length, entry))
    if pos_tags:
        for entry in domain._by_pos.get(pos_tags[0], ()):
            hits.append((1, entry))
    hits.sort(key=lambda pair: (-pair[0], pair[1].template_id))
    return hits


# ---------------------------------------------------------------------------
# Loading and saving

_CONST_PRED = re.compile(r"(const|pred)\s+([A-Za-z_][A-Za-z0-9_]*)\s*:\s*(.+)")
_LEX = re.compile(r'lex\s+"([^"]+)"\s*=>\s*(.+)')
_LEXPOS = re.compile(r"lexpos\s+(\S+)\s*=>\s*(.+)")


def load_domain(source: Iterable[str] | str) -> Domain:
    """Build a Domain from file lines (or one newline-joined string)."""
    if isinstance(source, str):
        lines = source.splitlines()
    else:
        lines = list(source)

    type_lines: list[str] = []
    decls: list[tuple[int, str, str, str]] = []  # lineno, kind, name, type text
    specs: list[tuple[int, LexSpec]] = []
    for lineno, raw in enumerate(lines, 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        head = line.split(None, 1)[0]
        if head == "type":
            type_lines.append(line)
        elif head in ("const", "pred"):
            m = _CONST_PRED.fullmatch(line)
            if m is None:
                raise DomainError(f"line {lineno}: cannot parse {line!r}")
            decls.append((lineno, m.group(1), m.group(2), m.group(3).strip()))
        elif head == "lex":
            m = _LEX.fullmatch(line)
            if m is None:
                raise DomainError(f"line {lineno}: cannot parse {line!r}")
            specs.append((lineno, LexSpec("lex", m.group(1), m.group(2).strip())))
        elif head == "lexpos":
            m = _LEXPOS.fullmatch(line)
            if m is None:
                raise DomainError(f"line {lineno}: cannot parse {line!r}")
            specs.append((lineno, LexSpec("lexpos", m.group(1), m.group(2).strip())))
        else:
            raise DomainError(f"line {lineno}: unknown directive {head!r}")

    try:
        hierarchy = load_hierarchy(type_lines)
    except ValueError as exc:
        raise DomainError(str(exc)) from exc

    constants: list[tuple[str, Type]] = []
    predicates: list[tuple[str, Type]] = []
    for lineno, kind, name, type_text in decls:
        try:
            ty = parse_type(type_text)
            validate_type(ty, hierarchy)
        except ValueError as exc:
            raise DomainError(f"line {lineno}: {exc}") from exc
        if name == AND_NAME:
            if kind != "pred" or ty != AND_TYPE:
                raise DomainError(
                    f"line {lineno}: {AND_NAME!r} is reserved with type {AND_TYPE}"
                )
            continue  # built in; not stored, not re-emitted
        bucket = constants if kind == "const" else predicates
        if (name, ty) in bucket:
            raise DomainError(f"line {lineno}: duplicate {kind} {name} : {ty}")
        bucket.append((name, ty))

    atoms: dict[str, list[TypedResult]] = {}
    for name, ty in constants:
        atoms.setdefault(name, []).append(TypedResult(Const(name, ty), ty))
    for name, ty in predicates:
        atoms.setdefault(name, []).append(TypedResult(Pred(name, ty), ty))
    view = _AtomView(hierarchy, atoms)

    entries: list[LexiconEntry] = []
    next_id = 0
    for lineno, spec in specs:
        try:
            candidates = parse_expression_candidates(spec.template_text, view)
        except ValueError as exc:
            raise DomainError(f"line {lineno}: {exc}") from exc
        if not candidates:
            raise DomainError(
                f"line {lineno}: template {spec.template_text!r} has no well-typed reading"
            )
        if spec.kind == "lex":
            phrase = tuple(tokenize(spec.trigger))
            if not phrase:
                raise DomainError(f"line {lineno}: empty trigger phrase")
            pos_tag = None
        else:
            phrase = None
            pos_tag = spec.trigger
        for cand in candidates:
            template = TypedResult(
                resolve_expr(cand.expr, cand.binding), resolve(cand.type, cand.binding)
            )
            names = [a.name for a in leaf_atoms(template.expr)]
            entries.append(
                LexiconEntry(
                    phrase=phrase,
                    pos_tag=pos_tag,
                    template=template,
                    template_id=next_id,
                    pred_names="+".join(names) if names else "NONE",
                )
            )
            next_id += 1

    return Domain(
        hierarchy=hierarchy,
        constants=tuple(constants),
        predicates=tuple(predicates),
        entries=tuple(entries),
        lex_specs=tuple(spec for _, spec in specs),
    )


def load_domain_file(path: str) -> Domain:
    with open(path, encoding="utf-8") as fh:
        return load_domain(fh.read())


def save_domain(domain: Domain) -> str:
    """Serialize back to domain-file text; load(save(load(x))) is
    identical to load(x) and the text is a fixpoint of save∘load."""
    out = []
    for child, parent in domain.hierarchy.edges:
        out.append(f"type {child} <: {parent}")
    for name, ty in domain.constants:
        out.append(f"const {name} : {ty}")
    for name, ty in domain.predicates:
        out.append(f"pred {name} : {ty}")
    for spec in domain.lex_specs:
        if spec.kind == "lex":
            out.append(f'lex "{spec.trigger}" => {spec.template_text}')
        else:
            out.append(f"lexpos {spec.trigger} => {spec.template_text}")
    return "\n".join(out) + "\n"


# ---------------------------------------------------------------------------
# Simple-type collapse


def to_simple_types(domain: Domain) -> Domain:
    """Collapse the entity hierarchy to a single base type ``e``.

    Every base type other than ``top``, ``t``, and the integer type
    ``i`` becomes ``e``; type variables become ``e`` as well, so
    polymorphic templates turn monomorphic.  Atoms and lexicon entries
    that become indistinguishable are merged (first declaration wins).
    The collapsed domain aliases the original entity names to ``e`` so
    datasets annotated against the full hierarchy still load.
    """
    kept = {"top", "t", "i"}

    def map_type(t: Type) -> Type:
        if isinstance(t, Base):
            return t if t.name in kept else Base("e")
        if isinstance(t, TypeVar):
            return Base("e")
        return Arrow(map_type(t.input), map_type(t.output))

    edges = [("e", "top")]
    if "i" in domain.hierarchy.nodes:
        edges.append(("i", "top"))
    hierarchy = TypeHierarchy(tuple(edges))

    def dedup(pairs: Iterable[tuple[str, Type]]) -> tuple[tuple[str, Type], ...]:
        seen = set()
        out = []
        for name, ty in pairs:
            mapped = (name, map_type(ty))
            if mapped not in seen:
                seen.add(mapped)
                out.append(mapped)
        return tuple(out)

    constants = dedup(domain.constants)
    predicates = dedup(domain.predicates)

    entries: list[LexiconEntry] = []
    specs: list[LexSpec] = []
    seen_entries = set()
    next_id = 0
    for entry in domain.entries:
        expr = _map_expr_types(entry.template.expr, map_type)
        template = TypedResult(expr, map_type(entry.template.type))
        key = (
            entry.phrase,
            entry.pos_tag,
            print_mr(template.expr),
            str(template.type),
        )
        if key in seen_entries:
            continue
        seen_entries.add(key)
        entries.append(
            LexiconEntry(
                phrase=entry.phrase,
                pos_tag=entry.pos_tag,
                template=template,
                template_id=next_id,
                pred_names=entry.pred_names,
            )
        )
        kind = "lex" if entry.phrase is not None else "lexpos"
        trigger = " ".join(entry.phrase) if entry.phrase is not None else entry.pos_tag
        specs.append(LexSpec(kind, trigger, print_mr(template.expr)))
        next_id += 1

    return Domain(
        hierarchy=hierarchy,
        constants=constants,
        predicates=predicates,
        entries=tuple(entries),
        lex_specs=tuple(specs),
        base_alias={n: "e" for n in domain.hierarchy.nodes if n not in kept},
    )


def _map_expr_types(e, map_type):
    from .mr import App, Lam, TermVar

    if isinstance(e, Const):
        return Const(e.name, map_type(e.type))
    if isinstance(e, Pred):
        if e.name == AND_NAME and e.type == AND_TYPE:
            return e
        return Pred(e.name, map_type(e.type))
    if isinstance(e, TermVar):
        return TermVar(e.name, map_type(e.type))
    if isinstance(e, Lam):
        return Lam(_map_expr_types(e.var, map_type), _map_expr_types(e.body, map_type))
    return App(_map_expr_types(e.fun, map_type), _map_expr_types(e.arg, map_type))
