"""Domain type hierarchies, curried function types, subtyping, and
type-variable binding.

A domain declares base types arranged in two disjoint trees: one rooted
at ``top`` (the task-domain entities) and a lone boolean root ``t`` that
never relates to anything but itself.  Function types are curried
arrows, contravariant in the input and covariant in the output.  Type
variables (written ``'a``) stand for an arbitrary type and are bound at
application time by matching against a ground argument type.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Mapping

DOMAIN_ROOT = "top"
BOOL_ROOT = "t"

# Separator used when renaming variables apart ("a" becomes "a#7").
# '#' is not a legal identifier character, so renamed names can never
# collide with anything a domain author wrote.
FRESH_SEP = "#"


class HierarchyError(ValueError):
    """Malformed type-hierarchy declarations."""


class TypeSyntaxError(ValueError):
    """Unparsable type expression text."""


class UnboundTypeVariable(ValueError):
    """A ground-only operation met a free type variable."""


class BindingError(ValueError):
    """Inconsistent or circular type-variable assignment."""


# ---------------------------------------------------------------------------
# Type terms


class Type:
    """Base class for type terms; concrete nodes are frozen dataclasses."""

    __slots__ = ()


@dataclass(frozen=True)
class Base(Type):
    name: str

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True)
class Arrow(Type):
    input: Type
    output: Type

    def __str__(self) -> str:
        # '->' is right-associative, so only the input side ever needs
        # parentheses.
        left = f"({self.input})" if isinstance(self.input, Arrow) else str(self.input)
        return f"{left}->{self.output}"


@dataclass(frozen=True)
class TypeVar(Type):
    name: str

    def __str__(self) -> str:
        # Renamed-apart variables print with their original name.
        return "'" + self.name.split(FRESH_SEP, 1)[0]


TOP = Base(DOMAIN_ROOT)
BOOL = Base(BOOL_ROOT)


def is_ground(t: Type) -> bool:
    """True when ``t`` contains no type variables."""
    if isinstance(t, TypeVar):
        return False
    if isinstance(t, Arrow):
        return is_ground(t.input) and is_ground(t.output)
    return True


def contains_var(t: Type, name: str) -> bool:
    if isinstance(t, TypeVar):
        return t.name == name
    if isinstance(t, Arrow):
        return contains_var(t.input, name) or contains_var(t.output, name)
    return False


def free_type_vars(t: Type) -> Iterator[str]:
    if isinstance(t, TypeVar):
        yield t.name
    elif isinstance(t, Arrow):
        yield from free_type_vars(t.input)
        yield from free_type_vars(t.output)


def rename_type_vars(t: Type, suffix: str) -> Type:
    """Rename every variable in ``t`` apart by appending ``suffix``."""
    if isinstance(t, TypeVar):
        return TypeVar(t.name + FRESH_SEP + suffix)
    if isinstance(t, Arrow):
        return Arrow(rename_type_vars(t.input, suffix), rename_type_vars(t.output, suffix))
    return t


def substitute_bases(t: Type, mapping: Mapping[str, str]) -> Type:
    """Rename base types through ``mapping``; unlisted names are kept.

    Lets annotations written against one hierarchy be read in another,
    e.g. entity types of the full hierarchy against a collapsed domain.
    """
    if isinstance(t, Base):
        return Base(mapping.get(t.name, t.name))
    if isinstance(t, Arrow):
        return Arrow(substitute_bases(t.input, mapping), substitute_bases(t.output, mapping))
    return t


# ---------------------------------------------------------------------------
# Hierarchy


@dataclass(frozen=True)
class TypeHierarchy:
    """Immutable forest of base types.

    ``edges`` keeps the declared (child, parent) pairs in declaration
    order so a hierarchy can be serialized back out byte-identically.
    """

    edges: tuple[tuple[str, str], ...]
    parent: dict[str, str] = field(init=False, repr=False, compare=False)
    nodes: frozenset[str] = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        parent: dict[str, str] = {}
        for child, par in self.edges:
            if child in (DOMAIN_ROOT, BOOL_ROOT):
                raise HierarchyError(f"root type {child!r} cannot be given a parent")
            if par == BOOL_ROOT:
                raise HierarchyError(f"boolean root {BOOL_ROOT!r} cannot have children")
            if child in parent:
                raise HierarchyError(f"duplicate declaration of type {child!r}")
            parent[child] = par
        nodes = set(parent) | {DOMAIN_ROOT, BOOL_ROOT}
        for child, par in self.edges:
            if par not in nodes:
                raise HierarchyError(f"parent type {par!r} of {child!r} is not declared")
        # Every chain must terminate at the domain root.
        for name in parent:
            seen = set()
            cur = name
            while cur in parent:
                if cur in seen:
                    raise HierarchyError(f"cycle in type hierarchy at {cur!r}")
                seen.add(cur)
                cur = parent[cur]
        object.__setattr__(self, "parent", parent)
        object.__setattr__(self, "nodes", frozenset(nodes))

    def has(self, name: str) -> bool:
        return name in self.nodes

    def base_subtype(self, a: str, b: str) -> bool:
        """Reflexive-transitive closure of the parent relation."""
        for name in (a, b):
            if name not in self.nodes:
                raise HierarchyError(f"unknown base type {name!r}")
        cur = a
        while True:
            if cur == b:
                return True
            nxt = self.parent.get(cur)
            if nxt is None:
                return False
            cur = nxt


def load_hierarchy(lines: Iterable[str] | str) -> TypeHierarchy:
    """Read ``type <child> <: <parent>`` lines; '#' starts a comment."""
    if isinstance(lines, str):
        lines = lines.splitlines()
    edges = []
    for lineno, raw in enumerate(lines, 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        m = re.fullmatch(r"type\s+(\S+)\s*<:\s*(\S+)", line)
        if m is None:
            raise HierarchyError(f"line {lineno}: cannot parse {raw.strip()!r}")
        edges.append((m.group(1), m.group(2)))
    return TypeHierarchy(tuple(edges))


# ---------------------------------------------------------------------------
# Subtyping


def is_subtype(s: Type, t: Type, h: TypeHierarchy) -> bool:
    """Ground subtype test: s <: t.

    Arrows are contravariant in the input, covariant in the output, and
    never relate to base types (not even ``top``).
    """
    if isinstance(s, TypeVar) or isinstance(t, TypeVar):
        raise UnboundTypeVariable(f"free type variable in subtype test: {s} <: {t}")
    if isinstance(s, Base) and isinstance(t, Base):
        return h.base_subtype(s.name, t.name)
    if isinstance(s, Arrow) and isinstance(t, Arrow):
        return is_subtype(t.input, s.input, h) and is_subtype(s.output, t.output, h)
    return False


def greatest_lower_bound(a: Type, b: Type, h: TypeHierarchy) -> Type | None:
    """Lower bound of two ground base types, or None when incomparable.

    In a tree-shaped hierarchy two types have a common lower bound only
    when one descends from the other, so the bound is always one of the
    two arguments.
    """
    if not (isinstance(a, Base) and isinstance(b, Base)):
        return None
    if is_subtype(a, b, h):
        return a
    if is_subtype(b, a, h):
        return b
    return None


# ---------------------------------------------------------------------------
# Variable binding


class Binding:
    """Immutable map from type-variable names to types.

    ``extend`` returns a new binding; an occurs check rejects circular
    assignments at construction time, which also makes ``resolve``
    terminate.
    """

    __slots__ = ("_map",)

    def __init__(self, assignments: dict[str, Type] | None = None):
        self._map: dict[str, Type] = dict(assignments or {})
        for name, value in self._map.items():
            if contains_var(value, name):
                raise BindingError(f"occurs check failed: {name} := {value}")

    def get(self, name: str) -> Type | None:
        return self._map.get(name)

    def extend(self, name: str, value: Type) -> "Binding":
        if contains_var(value, name):
            raise BindingError(f"occurs check failed: {name} := {value}")
        old = self._map.get(name)
        if old is not None:
            if old == value:
                return self
            raise BindingError(f"conflicting assignment: {name} is {old}, not {value}")
        new = dict(self._map)
        new[name] = value
        return Binding(new)

    def as_dict(self) -> dict[str, Type]:
        return dict(self._map)

    def __len__(self) -> int:
        return len(self._map)

    def __contains__(self, name: str) -> bool:
        return name in self._map

    def __eq__(self, other: object) -> bool:
        return isinstance(other, Binding) and self._map == other._map

    def __repr__(self) -> str:
        inner = ", ".join(f"{k}:={v}" for k, v in self._map.items())
        return "{" + inner + "}"


EMPTY_BINDING = Binding()


def merge_bindings(a: Binding, b: Binding) -> Binding:
    """Union of two bindings with disjoint (renamed-apart) domains."""
    merged = a.as_dict()
    for name, value in b.as_dict().items():
        if name in merged and merged[name] != value:
            raise BindingError(f"conflicting assignments for {name!r}")
        merged[name] = value
    return Binding(merged)


def resolve(t: Type, b: Binding) -> Type:
    """Substitute assignments into ``t`` until it stops changing."""
    while True:
        t2 = _subst(t, b)
        if t2 == t:
            return t
        t = t2


def _subst(t: Type, b: Binding) -> Type:
    if isinstance(t, TypeVar):
        bound = b.get(t.name)
        return bound if bound is not None else t
    if isinstance(t, Arrow):
        return Arrow(_subst(t.input, b), _subst(t.output, b))
    return t


def match_argument(param: Type, arg: Type, h: TypeHierarchy, binding: Binding) -> Binding | None:
    """Bind variables in ``param`` so that ``arg`` <: ``param`` holds.

    ``arg`` must be ground under ``binding``.  Each fresh variable is
    bound to the exact type the argument exhibits at its first
    structural occurrence; the final subtype check then validates the
    whole match (including repeated occurrences and contravariance).
    Returns the extended binding, or None when no match exists.
    """
    p = resolve(param, binding)
    a = resolve(arg, binding)
    if not is_ground(a):
        return None
    b = _collect(p, a, binding)
    if b is None:
        return None
    p_resolved = resolve(p, b)
    if not is_ground(p_resolved):
        return None
    if not is_subtype(a, p_resolved, h):
        return None
    return b


def _collect(p: Type, a: Type, b: Binding) -> Binding | None:
    if isinstance(p, TypeVar):
        if p.name in b:
            return b  # validated by the final subtype check
        return b.extend(p.name, a)
    if isinstance(p, Arrow) and isinstance(a, Arrow):
        b2 = _collect(p.input, a.input, b)
        if b2 is None:
            return None
        return _collect(p.output, a.output, b2)
    if isinstance(p, Arrow) and not isinstance(a, Arrow):
        # A variable buried in p has no counterpart to bind against.
        if any(True for _ in free_type_vars(p)):
            return None
    return b


# ---------------------------------------------------------------------------
# Textual syntax

_TYPE_TOKEN = re.compile(r"\s*(->|\(|\)|'[A-Za-z_][A-Za-z0-9_]*|[A-Za-z_][A-Za-z0-9_]*)")


def tokenize_type(text: str) -> list[str]:
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TYPE_TOKEN.match(text, pos)
        if m is None:
            rest = text[pos:].strip()
            if not rest:
                break
            raise TypeSyntaxError(f"bad character in type {text!r} at {rest[:10]!r}")
        tokens.append(m.group(1))
        pos = m.end()
    return tokens


def parse_type(text: str | list[str]) -> Type:
    """Parse ``st->ct``-style type text; '->' associates to the right."""
    tokens = tokenize_type(text) if isinstance(text, str) else list(text)
    ty, rest = _parse_arrow(tokens)
    if rest:
        raise TypeSyntaxError(f"trailing tokens in type: {' '.join(rest)!r}")
    return ty


def _parse_arrow(tokens: list[str]) -> tuple[Type, list[str]]:
    left, rest = _parse_atom(tokens)
    if rest and rest[0] == "->":
        right, rest = _parse_arrow(rest[1:])
        return Arrow(left, right), rest
    return left, rest


def _parse_atom(tokens: list[str]) -> tuple[Type, list[str]]:
    if not tokens:
        raise TypeSyntaxError("unexpected end of type")
    head, rest = tokens[0], tokens[1:]
    if head == "(":
        ty, rest = _parse_arrow(rest)
        if not rest or rest[0] != ")":
            raise TypeSyntaxError("missing ')' in type")
        return ty, rest[1:]
    if head in (")", "->"):
        raise TypeSyntaxError(f"unexpected {head!r} in type")
    if head.startswith("'"):
        return TypeVar(head[1:]), rest
    return Base(head), rest


def validate_type(t: Type, h: TypeHierarchy) -> None:
    """Check every base name in ``t`` against the hierarchy."""
    if isinstance(t, Base):
        if not h.has(t.name):
            raise HierarchyError(f"unknown base type {t.name!r}")
    elif isinstance(t, Arrow):
        validate_type(t.input, h)
        validate_type(t.output, h)
