"""Typed lambda-calculus meaning representations.

Expressions are built from constants, predicates, variables, lambda
abstraction, and application; conjunction is ordinary application of
the reserved predicate ``and : t->t->t``.  Application performs the
subtype/variable-binding check from the type system and beta-reduces
eagerly, so stack items in the parser are always in normal form.
"""

from __future__ import annotations

import itertools
import re
from collections import Counter
from dataclasses import dataclass
from typing import Iterator, Protocol, Sequence

from .typesys import (
    BOOL,
    FRESH_SEP,
    Arrow,
    Base,
    Binding,
    EMPTY_BINDING,
    Type,
    TypeHierarchy,
    TypeVar,
    greatest_lower_bound,
    is_ground,
    is_subtype,
    match_argument,
    merge_bindings,
    parse_type,
    rename_type_vars,
    resolve,
    substitute_bases,
    validate_type,
)

AND_NAME = "and"
AND_TYPE = Arrow(BOOL, Arrow(BOOL, BOOL))


class MrSyntaxError(ValueError):
    """Unparsable meaning-representation text."""


class MrTypeError(ValueError):
    """Meaning-representation text that does not type-check."""


# ---------------------------------------------------------------------------
# Expression terms


class Expression:
    __slots__ = ()


@dataclass(frozen=True)
class Const(Expression):
    name: str
    type: Type


@dataclass(frozen=True)
class Pred(Expression):
    name: str
    type: Type


@dataclass(frozen=True)
class TermVar(Expression):
    name: str
    type: Type


@dataclass(frozen=True)
class Lam(Expression):
    var: TermVar
    body: Expression


@dataclass(frozen=True)
class App(Expression):
    fun: Expression
    arg: Expression


AND_PRED = Pred(AND_NAME, AND_TYPE)


@dataclass(frozen=True)
class TypedResult:
    """An expression with its (resolved) type and variable assignments."""

    expr: Expression
    type: Type
    binding: Binding = EMPTY_BINDING

    def grounded_expr(self) -> Expression:
        return resolve_expr(self.expr, self.binding)


def subterms(e: Expression) -> Iterator[Expression]:
    yield e
    if isinstance(e, Lam):
        yield from subterms(e.body)
    elif isinstance(e, App):
        yield from subterms(e.fun)
        yield from subterms(e.arg)


def leaf_atoms(e: Expression) -> Iterator[Const | Pred]:
    for sub in subterms(e):
        if isinstance(sub, (Const, Pred)):
            yield sub


def atom_counts(e: Expression) -> Counter:
    """Multiset of (kind, name) over constant and predicate leaves."""
    return Counter(
        ("const" if isinstance(a, Const) else "pred", a.name) for a in leaf_atoms(e)
    )


# ---------------------------------------------------------------------------
# Substitution and normalization


def substitute(e: Expression, var: TermVar, value: Expression) -> Expression:
    """Replace free occurrences of ``var`` (by name) with ``value``.

    Callers substitute closed values, so no capture can occur.
    """
    if isinstance(e, TermVar):
        return value if e.name == var.name else e
    if isinstance(e, Lam):
        if e.var.name == var.name:  # shadowed
            return e
        return Lam(e.var, substitute(e.body, var, value))
    if isinstance(e, App):
        return App(substitute(e.fun, var, value), substitute(e.arg, var, value))
    return e


def normalize(e: Expression) -> Expression:
    """Eagerly beta-reduce; terms are simply typed, so this terminates."""
    if isinstance(e, App):
        fun = normalize(e.fun)
        arg = normalize(e.arg)
        if isinstance(fun, Lam):
            return normalize(substitute(fun.body, fun.var, arg))
        return App(fun, arg)
    if isinstance(e, Lam):
        return Lam(e.var, normalize(e.body))
    return e


def rename_apart(e: Expression, suffix: str) -> Expression:
    """Rename type variables and bound term variables with ``suffix``.

    Used when a lexicon template is instantiated at shift time so two
    stack items can never share a variable.
    """
    def rec(x: Expression, env: dict[str, str]) -> Expression:
        if isinstance(x, Const):
            return Const(x.name, rename_type_vars(x.type, suffix))
        if isinstance(x, Pred):
            return Pred(x.name, rename_type_vars(x.type, suffix))
        if isinstance(x, TermVar):
            return TermVar(env.get(x.name, x.name), rename_type_vars(x.type, suffix))
        if isinstance(x, Lam):
            new_name = x.var.name + FRESH_SEP + suffix
            new_var = TermVar(new_name, rename_type_vars(x.var.type, suffix))
            inner = dict(env)
            inner[x.var.name] = new_name
            return Lam(new_var, rec(x.body, inner))
        return App(rec(x.fun, env), rec(x.arg, env))

    return rec(e, {})


def resolve_expr(e: Expression, b: Binding) -> Expression:
    """Substitute type-variable assignments into every stored type."""
    if isinstance(e, Const):
        return Const(e.name, resolve(e.type, b))
    if isinstance(e, Pred):
        return Pred(e.name, resolve(e.type, b))
    if isinstance(e, TermVar):
        return TermVar(e.name, resolve(e.type, b))
    if isinstance(e, Lam):
        return Lam(TermVar(e.var.name, resolve(e.var.type, b)), resolve_expr(e.body, b))
    return App(resolve_expr(e.fun, b), resolve_expr(e.arg, b))


def recompute_type(e: Expression, h: TypeHierarchy) -> Type:
    """Re-derive the type of a resolved expression bottom-up.

    Audit helper: application demands the argument type be a subtype of
    the input.  Because subtype arguments may refine a beta-reduced
    body, the recomputed type of a combined item is a subtype of the
    reported one rather than always identical.
    """
    def rec(x: Expression, env: dict[str, Type]) -> Type:
        if isinstance(x, TermVar):
            return env.get(x.name, x.type)
        if isinstance(x, (Const, Pred)):
            return x.type
        if isinstance(x, Lam):
            inner = dict(env)
            inner[x.var.name] = x.var.type
            return Arrow(x.var.type, rec(x.body, inner))
        fun_t = rec(x.fun, env)
        arg_t = rec(x.arg, env)
        if not isinstance(fun_t, Arrow):
            raise MrTypeError(f"application of non-function type {fun_t}")
        b = match_argument(fun_t.input, arg_t, h, EMPTY_BINDING)
        if b is None:
            raise MrTypeError(f"argument type {arg_t} does not match input {fun_t.input}")
        return resolve(fun_t.output, b)

    return rec(e, {})


# ---------------------------------------------------------------------------
# Application and union


def apply(fun: TypedResult, arg: TypedResult, h: TypeHierarchy) -> TypedResult | None:
    """Apply ``fun`` to ``arg`` with subtyping and variable binding.

    Succeeds exactly when the type system's argument match succeeds:
    ``fun`` must have an arrow type and ``arg`` must be ground.  The
    resulting expression is beta-reduced eagerly.
    """
    if not isinstance(fun.type, Arrow):
        return None
    if not is_ground(arg.type):
        return None
    merged = merge_bindings(fun.binding, arg.binding)
    b = match_argument(fun.type.input, arg.type, h, merged)
    if b is None:
        return None
    out = resolve(fun.type.output, b)
    if isinstance(fun.expr, Lam):
        expr = normalize(substitute(fun.expr.body, fun.expr.var, arg.expr))
    else:
        expr = App(fun.expr, arg.expr)
    return TypedResult(expr, out, b)


def union(a: TypedResult, b: TypedResult, h: TypeHierarchy, var_name: str = "x") -> TypedResult | None:
    """Conjoin two boolean-valued functions into one.

    Both operands must have type ``X->t`` with ground base inputs; the
    result is ``lambda x:G. (and (a x) (b x))`` where G is the greatest
    lower bound of the two input types.
    """
    for operand in (a, b):
        if not (isinstance(operand.type, Arrow) and operand.type.output == BOOL):
            return None
    bound = greatest_lower_bound(a.type.input, b.type.input, h)
    if bound is None:
        return None
    x = TermVar(var_name, bound)
    left = _apply_to_var(a.expr, x)
    right = _apply_to_var(b.expr, x)
    body = App(App(AND_PRED, left), right)
    return TypedResult(Lam(x, body), Arrow(bound, BOOL), merge_bindings(a.binding, b.binding))


def _apply_to_var(fun: Expression, x: TermVar) -> Expression:
    if isinstance(fun, Lam):
        return normalize(substitute(fun.body, fun.var, x))
    return App(fun, x)


# ---------------------------------------------------------------------------
# Printing, canonical forms, and equality


def print_mr(e: Expression) -> str:
    """Canonical text: binders renamed x0, x1, ... in traversal order,
    applications fully parenthesized with curried chains flattened."""
    counter = itertools.count()

    def rec(x: Expression, env: dict[str, str]) -> str:
        if isinstance(x, (Const, Pred)):
            return x.name
        if isinstance(x, TermVar):
            return env.get(x.name, x.name.split(FRESH_SEP, 1)[0])
        if isinstance(x, Lam):
            name = f"x{next(counter)}"
            inner = dict(env)
            inner[x.var.name] = name
            return f"(lambda ({name} : {x.var.type}) {rec(x.body, inner)})"
        head, args = _uncurry(x)
        parts = [rec(head, env)] + [rec(a, env) for a in args]
        return "(" + " ".join(parts) + ")"

    return rec(e, {})


def _uncurry(e: Expression) -> tuple[Expression, list[Expression]]:
    args: list[Expression] = []
    while isinstance(e, App):
        args.append(e.arg)
        e = e.fun
    args.reverse()
    return e, args


def _conjuncts(e: Expression) -> list[Expression] | None:
    """Flatten a fully applied ``and`` chain; None when not one."""
    if (
        isinstance(e, App)
        and isinstance(e.fun, App)
        and isinstance(e.fun.fun, Pred)
        and e.fun.fun.name == AND_NAME
    ):
        left = _conjuncts(e.fun.arg) or [e.fun.arg]
        right = _conjuncts(e.arg) or [e.arg]
        return left + right
    return None


def _key(x: Expression, depth: int, env: dict[str, int], typed: bool) -> str:
    conj = _conjuncts(x)
    if conj is not None:
        keys = sorted(_key(c, depth, env, typed) for c in conj)
        return "(and " + " ".join(keys) + ")"
    if isinstance(x, Const):
        return f"c:{x.name}" + (f":{x.type}" if typed else "")
    if isinstance(x, Pred):
        return f"p:{x.name}" + (f":{x.type}" if typed else "")
    if isinstance(x, TermVar):
        if x.name in env:
            return f"v{env[x.name]}"
        return f"free:{x.name}"
    if isinstance(x, Lam):
        inner = dict(env)
        inner[x.var.name] = depth
        ann = f" : {x.var.type}" if typed else ""
        return f"(lam v{depth}{ann} {_key(x.body, depth + 1, inner, typed)})"
    return f"({_key(x.fun, depth, env, typed)} {_key(x.arg, depth, env, typed)})"


def canonical_key(e: Expression, typed: bool = True) -> str:
    """Order-insensitive, alpha-insensitive canonical string.

    Binders are named by nesting depth and conjuncts of ``and`` are
    sorted, so two expressions are equal as meaning representations
    exactly when their keys coincide.  With ``typed=False`` leaf types
    are dropped (a structural skeleton used for search pruning).
    """
    return _key(e, 0, {}, typed)


def mr_equal(a: Expression, b: Expression) -> bool:
    """Equality up to bound-variable renaming and conjunct order."""
    return canonical_key(a) == canonical_key(b)


def skeleton(e: Expression) -> str:
    return canonical_key(e, typed=False)


def prefix_skeletons(e: Expression) -> frozenset[str]:
    """Skeletons of every subterm plus every partial conjunction.

    Curried application prefixes are subterms already; partial
    conjunctions cover the intermediate results of building an ``and``
    chain by repeated unions, both bare and directly under the binder
    that the union introduces.  A stack item that can still grow into
    (part of) ``e`` through applications or unions therefore always has
    its skeleton in this set, which keeps target-directed pruning sound.
    """
    keys: set[str] = set()
    for sub in subterms(e):
        keys.add(skeleton(sub))
        conj = _conjuncts(sub)
        if conj is not None and len(conj) <= 6:
            child_keys = sorted(_key(c, 0, {}, False) for c in conj)
            for r in range(2, len(conj) + 1):
                for combo in itertools.combinations(child_keys, r):
                    keys.add("(and " + " ".join(combo) + ")")
        if isinstance(sub, Lam):
            conj = _conjuncts(sub.body)
            if conj is not None and len(conj) <= 6:
                env = {sub.var.name: 0}
                child_keys = sorted(_key(c, 1, env, False) for c in conj)
                for r in range(1, len(conj) + 1):
                    for combo in itertools.combinations(child_keys, r):
                        if r == 1:
                            keys.add(f"(lam v0 {combo[0]})")
                        else:
                            keys.add("(lam v0 (and " + " ".join(combo) + "))")
    return frozenset(keys)


# ---------------------------------------------------------------------------
# Parsing


class AtomSource(Protocol):
    """What the s-expression reader needs from a domain."""

    hierarchy: TypeHierarchy

    def atom_candidates(self, name: str) -> Sequence[TypedResult]:
        ...


_MR_TOKEN = re.compile(r"\s*(\(|\)|:|->|'[A-Za-z_][A-Za-z0-9_]*|[A-Za-z_][A-Za-z0-9_]*)")


def _tokenize_mr(text: str) -> list[str]:
    tokens = []
    pos = 0
    while pos < len(text):
        m = _MR_TOKEN.match(text, pos)
        if m is None:
            rest = text[pos:].strip()
            if not rest:
                break
            raise MrSyntaxError(f"bad character near {rest[:12]!r}")
        tokens.append(m.group(1))
        pos = m.end()
    return tokens


def _flatten_type_tokens(items) -> list[str]:
    """Turn a parsed binder-type tree back into flat type tokens."""
    out: list[str] = []
    for it in items:
        if isinstance(it, list):
            out.append("(")
            out.extend(_flatten_type_tokens(it))
            out.append(")")
        else:
            out.append(it)
    return out


def _read_sexpr(tokens: list[str], pos: int):
    if pos >= len(tokens):
        raise MrSyntaxError("unexpected end of expression")
    tok = tokens[pos]
    if tok == "(":
        items = []
        pos += 1
        while pos < len(tokens) and tokens[pos] != ")":
            node, pos = _read_sexpr(tokens, pos)
            items.append(node)
        if pos >= len(tokens):
            raise MrSyntaxError("missing ')'")
        return items, pos + 1
    if tok == ")":
        raise MrSyntaxError("unexpected ')'")
    return tok, pos + 1


def parse_expression_candidates(text: str, domain: AtomSource) -> list[TypedResult]:
    """All well-typed readings of an s-expression, in declaration order.

    Atoms with several declared types (for example a name that is both
    a state and a river) make the reading ambiguous until application
    contexts filter the alternatives.
    """
    tokens = _tokenize_mr(text)
    tree, end = _read_sexpr(tokens, 0)
    if end != len(tokens):
        raise MrSyntaxError(f"trailing tokens after expression: {' '.join(tokens[end:])!r}")
    seen_binders: set[str] = set()

    def type_of(node, env: dict[str, TermVar]) -> list[TypedResult]:
        if isinstance(node, str):
            if node in env:
                v = env[node]
                return [TypedResult(v, v.type)]
            cands = list(domain.atom_candidates(node))
            if not cands:
                raise MrTypeError(f"unknown atom {node!r}")
            return cands
        if not node:
            raise MrSyntaxError("empty '()' expression")
        if node[0] == "lambda":
            if len(node) != 3 or not isinstance(node[1], list):
                raise MrSyntaxError("lambda needs a binder list and a body")
            binder = node[1]
            if len(binder) < 3 or binder[1] != ":" or not isinstance(binder[0], str):
                raise MrSyntaxError("binder must look like (x : type)")
            var_type = parse_type(_flatten_type_tokens(binder[2:]))
            var_type = substitute_bases(var_type, getattr(domain, "base_alias", {}))
            validate_type(var_type, domain.hierarchy)
            name = binder[0]
            while name in seen_binders:
                name = name + FRESH_SEP + "b"
            seen_binders.add(name)
            var = TermVar(name, var_type)
            inner = dict(env)
            inner[binder[0]] = var
            out = []
            for body in type_of(node[2], inner):
                out.append(
                    TypedResult(Lam(var, body.expr), Arrow(var_type, body.type), body.binding)
                )
            return out
        if len(node) == 1:
            return type_of(node[0], env)
        results = type_of(node[0], env)
        for arg_node in node[1:]:
            arg_cands = type_of(arg_node, env)
            next_results = []
            for fun, arg in itertools.product(results, arg_cands):
                applied = apply(fun, arg, domain.hierarchy)
                if applied is not None:
                    next_results.append(applied)
            results = next_results
            if not results:
                break
        return results

    out = type_of(tree, {})
    deduped = []
    seen_keys = set()
    for cand in out:
        key = (canonical_key(resolve_expr(cand.expr, cand.binding)), str(resolve(cand.type, cand.binding)))
        if key not in seen_keys:
            seen_keys.add(key)
            deduped.append(cand)
    return deduped


def parse_expression(text: str, domain: AtomSource) -> TypedResult:
    """First well-typed reading of ``text``; raises when none exists."""
    cands = parse_expression_candidates(text, domain)
    if not cands:
        raise MrTypeError(f"no well-typed reading of {text!r}")
    return cands[0]
