"""Incremental shift-reduce derivations over a stack of typed expressions.

A state pairs a stack of partial meaning representations with a queue
position into the token sequence.  Actions: skip a token, shift a
lexicon template for the queue head, reduce one of the top two stack
items with the other (rightward or leftward application), or union two
boolean-valued neighbors.  States are persistent: stepping returns a
fresh state that shares stack structure with its parent, so the set of
live hypotheses forms a tree of states.

Every derivation of an n-token sentence takes at most 2n-1 actions:
each token is consumed exactly once and each reduce or union removes
one of at most n shifted items.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Callable, Iterable, Protocol, Sequence

from .lexicon import Domain, LexiconEntry, lookup_shifts
from .mr import (
    Expression,
    Lam,
    TypedResult,
    apply,
    atom_counts,
    mr_equal,
    prefix_skeletons,
    rename_apart,
    skeleton,
    union,
)
from .typesys import Base, Type, is_ground, is_subtype, rename_type_vars, resolve


class IllegalActionError(ValueError):
    """An action was stepped in a state where it is not legal."""


# ---------------------------------------------------------------------------
# Actions


@dataclass(frozen=True)
class Skip:
    pass


@dataclass(frozen=True)
class Shift:
    tokens_consumed: int
    template_id: int


@dataclass(frozen=True)
class ReduceRight:
    """Apply the second stack item (function) to the top (argument)."""


@dataclass(frozen=True)
class ReduceLeft:
    """Apply the top stack item (function) to the second (argument)."""


@dataclass(frozen=True)
class Union:
    """Conjoin the top two boolean-valued stack items."""


Action = Skip | Shift | ReduceRight | ReduceLeft | Union


def action_label(a: Action) -> str:
    if isinstance(a, Skip):
        return "skip"
    if isinstance(a, Shift):
        return "sh"
    if isinstance(a, ReduceRight):
        return "reR"
    if isinstance(a, ReduceLeft):
        return "reL"
    return "un"


def action_to_code(a: Action) -> list:
    """JSON-friendly encoding used by the reference-derivation cache."""
    if isinstance(a, Shift):
        return ["sh", a.tokens_consumed, a.template_id]
    return [action_label(a)]


def action_from_code(code: Sequence) -> Action:
    tag = code[0]
    if tag == "sh":
        return Shift(int(code[1]), int(code[2]))
    if tag == "skip":
        return Skip()
    if tag == "reR":
        return ReduceRight()
    if tag == "reL":
        return ReduceLeft()
    if tag == "un":
        return Union()
    raise ValueError(f"unknown action code {code!r}")


# ---------------------------------------------------------------------------
# States


@dataclass(frozen=True)
class StackItem:
    result: TypedResult
    span: tuple[int, int]  # half-open token range covered by this item


@dataclass(frozen=True)
class StackNode:
    item: StackItem
    below: "StackNode | None"
    depth: int


@dataclass(frozen=True, eq=False)
class ParserState:
    tokens: tuple[str, ...]
    pos_tags: tuple[str, ...] | None
    stack: StackNode | None
    queue_pos: int
    num_actions: int
    score: float
    parent: "ParserState | None"
    action: Action | None

    @property
    def stack_depth(self) -> int:
        return self.stack.depth if self.stack is not None else 0

    def stack_items(self, limit: int | None = None) -> list[StackItem]:
        """Items from the top down, optionally at most ``limit`` of them."""
        out = []
        node = self.stack
        while node is not None and (limit is None or len(out) < limit):
            out.append(node.item)
            node = node.below
        return out

    def queue(self) -> tuple[str, ...]:
        return self.tokens[self.queue_pos :]

    def actions(self) -> tuple[Action, ...]:
        out = []
        state = self
        while state.action is not None:
            out.append(state.action)
            state = state.parent
        out.reverse()
        return tuple(out)

    def stack_types(self) -> str:
        """Bottom-to-top printed types, space-joined (trace format)."""
        items = self.stack_items()
        return " ".join(str(i.result.type) for i in reversed(items))


def initial_state(tokens: Sequence[str], pos_tags: Sequence[str] | None = None) -> ParserState:
    return ParserState(
        tokens=tuple(tokens),
        pos_tags=tuple(pos_tags) if pos_tags is not None else None,
        stack=None,
        queue_pos=0,
        num_actions=0,
        score=0.0,
        parent=None,
        action=None,
    )


class Scorer(Protocol):
    def score(self, state: ParserState, action: Action, domain: Domain) -> float:
        ...


# ---------------------------------------------------------------------------
# Transition system


def _instantiate(entry: LexiconEntry, index: int) -> TypedResult:
    """Ground a template for shifting, renaming its variables apart.

    ``index`` is the position of the shift within the derivation, so
    replaying the same actions always produces identical names.
    """
    suffix = str(index)
    return TypedResult(
        rename_apart(entry.template.expr, suffix),
        rename_type_vars(entry.template.type, suffix),
        entry.template.binding,
    )


def legal_actions(s: ParserState, d: Domain) -> list[Action]:
    """Legal actions in a fixed order: skip, shifts (longest trigger
    first, then template id), reduce right, reduce left, union."""
    acts: list[Action] = []
    if s.queue_pos < len(s.tokens):
        acts.append(Skip())
        remaining_pos = s.pos_tags[s.queue_pos :] if s.pos_tags is not None else None
        for consumed, entry in lookup_shifts(s.queue(), remaining_pos, d):
            acts.append(Shift(consumed, entry.template_id))
    if s.stack_depth >= 2:
        top = s.stack.item.result
        second = s.stack.below.item.result
        if apply(second, top, d.hierarchy) is not None:
            acts.append(ReduceRight())
        if apply(top, second, d.hierarchy) is not None:
            acts.append(ReduceLeft())
        if union(second, top, d.hierarchy) is not None:
            acts.append(Union())
    return acts


def step(s: ParserState, a: Action, d: Domain, scorer: Scorer | None = None) -> ParserState:
    """Apply one action, returning a fresh state sharing stack structure."""
    gain = scorer.score(s, a, d) if scorer is not None else 0.0
    common = dict(
        tokens=s.tokens,
        pos_tags=s.pos_tags,
        num_actions=s.num_actions + 1,
        score=s.score + gain,
        parent=s,
        action=a,
    )
    if isinstance(a, Skip):
        if s.queue_pos >= len(s.tokens):
            raise IllegalActionError("skip on an empty queue")
        return ParserState(stack=s.stack, queue_pos=s.queue_pos + 1, **common)
    if isinstance(a, Shift):
        entry = d.by_id.get(a.template_id)
        if entry is None:
            raise IllegalActionError(f"unknown template id {a.template_id}")
        end = s.queue_pos + a.tokens_consumed
        if end > len(s.tokens):
            raise IllegalActionError("shift consumes past the end of the queue")
        if entry.phrase is not None and tuple(s.tokens[s.queue_pos : end]) != entry.phrase:
            raise IllegalActionError(f"trigger {entry.phrase} does not match the queue")
        item = StackItem(_instantiate(entry, s.num_actions), (s.queue_pos, end))
        node = StackNode(item, s.stack, s.stack_depth + 1)
        return ParserState(stack=node, queue_pos=end, **common)
    if s.stack_depth < 2:
        raise IllegalActionError(f"{action_label(a)} needs two stack items")
    top = s.stack.item
    second = s.stack.below.item
    if isinstance(a, ReduceRight):
        result = apply(second.result, top.result, d.hierarchy)
    elif isinstance(a, ReduceLeft):
        result = apply(top.result, second.result, d.hierarchy)
    else:
        result = union(second.result, top.result, d.hierarchy, var_name=f"u{s.num_actions}")
    if result is None:
        raise IllegalActionError(f"{action_label(a)} does not type-check here")
    span = (min(second.span[0], top.span[0]), max(second.span[1], top.span[1]))
    node = StackNode(StackItem(result, span), s.stack.below.below, s.stack_depth - 1)
    return ParserState(stack=node, queue_pos=s.queue_pos, **common)


def is_final(s: ParserState) -> bool:
    """Queue exhausted and exactly one stack item of ground base type."""
    if s.queue_pos != len(s.tokens) or s.stack_depth != 1:
        return False
    t = s.stack.item.result.type
    return isinstance(t, Base)


def final_mr(s: ParserState) -> Expression:
    if s.stack is None:
        raise ValueError("empty stack has no meaning representation")
    return s.stack.item.result.grounded_expr()


# ---------------------------------------------------------------------------
# Derivations


@dataclass(frozen=True)
class Derivation:
    tokens: tuple[str, ...]
    pos_tags: tuple[str, ...] | None
    actions: tuple[Action, ...]

    def replay(self, d: Domain, scorer: Scorer | None = None) -> ParserState:
        state = initial_state(self.tokens, self.pos_tags)
        for a in self.actions:
            state = step(state, a, d, scorer)
        return state


def derivation_of(state: ParserState) -> Derivation:
    return Derivation(state.tokens, state.pos_tags, state.actions())


# ---------------------------------------------------------------------------
# Beam search


@dataclass
class BeamRun:
    """All pruned buckets of a beam pass, bucket k = states after k actions."""

    buckets: list[list[ParserState]]
    finals: list[ParserState]
    best_final: ParserState | None


def _goal_ok(s: ParserState, goal_type: Type | None, d: Domain) -> bool:
    if goal_type is None:
        return True
    t = s.stack.item.result.type
    return is_ground(t) and is_subtype(t, goal_type, d.hierarchy)


def beam_search(
    tokens: Sequence[str],
    d: Domain,
    scorer: Scorer | None = None,
    beam_width: int | None = None,
    pos_tags: Sequence[str] | None = None,
    goal_type: Type | None = None,
    state_filter: Callable[[ParserState], bool] | None = None,
) -> BeamRun:
    """Breadth-first beam over action counts.

    ``beam_width=None`` means no pruning (exhaustive breadth-first
    search).  Ties are broken by insertion order, which is itself fixed
    by the legal-action order, so runs are deterministic.
    """
    bucket = [initial_state(tokens, pos_tags)]
    buckets = [list(bucket)]
    finals: list[ParserState] = []
    while bucket:
        candidates: list[ParserState] = []
        for s in bucket:
            for a in legal_actions(s, d):
                child = step(s, a, d, scorer)
                if state_filter is not None and not state_filter(child):
                    continue
                candidates.append(child)
        if beam_width is not None and len(candidates) > beam_width:
            order = sorted(range(len(candidates)), key=lambda i: (-candidates[i].score, i))
            bucket = [candidates[i] for i in sorted(order[:beam_width])]
        else:
            bucket = candidates
        if bucket:
            buckets.append(list(bucket))
        for s in bucket:
            if is_final(s) and _goal_ok(s, goal_type, d):
                finals.append(s)
    best = None
    for s in finals:
        if best is None or s.score > best.score:
            best = s
    return BeamRun(buckets, finals, best)


def beam_decode(
    tokens: Sequence[str],
    d: Domain,
    scorer: Scorer | None = None,
    beam_width: int | None = None,
    pos_tags: Sequence[str] | None = None,
    goal_type: Type | None = None,
) -> ParserState | None:
    """Highest-scoring final state, or None when no full parse survives."""
    return beam_search(tokens, d, scorer, beam_width, pos_tags, goal_type).best_final


# ---------------------------------------------------------------------------
# Exhaustive and target-directed enumeration


class TargetFilter:
    """Prunes hypotheses that cannot grow into a given target MR.

    A state is admitted when every shifted atom still fits into the
    target's atom multiset and the newest stack item's skeleton occurs
    in the target's subterm/partial-conjunction skeleton set.  Lambda
    items are exempt from the skeleton test: lexical templates such as
    ``lambda f . (argmax f len)`` only match the target after they are
    applied and beta-reduced, so they are constrained by the atom check
    alone until a reduce exposes their normal form.
    """

    def __init__(self, target: Expression):
        self.target = target
        self.atoms = atom_counts(target)
        self.skeletons = prefix_skeletons(target)

    def admits(self, state: ParserState) -> bool:
        if state.stack is None:
            return True
        newest = state.stack.item.result.expr
        if not isinstance(newest, Lam) and skeleton(newest) not in self.skeletons:
            return False
        total: dict = {}
        node = state.stack
        while node is not None:
            for key, n in atom_counts(node.item.result.expr).items():
                total[key] = total.get(key, 0) + n
            node = node.below
        return all(n <= self.atoms.get(key, 0) for key, n in total.items())


@dataclass
class EnumerationResult:
    derivations: list[Derivation]
    complete: bool
    states_visited: int = 0


def enumerate_derivations(
    tokens: Sequence[str],
    d: Domain,
    time_limit: float | None = None,
    target: Expression | None = None,
    pos_tags: Sequence[str] | None = None,
    goal_type: Type | None = None,
) -> EnumerationResult:
    """Depth-first enumeration of complete derivations.

    With a ``target`` MR the search is pruned to hypotheses that can
    still produce it and only derivations whose final MR equals the
    target (up to variable renaming and conjunct order) are kept.  A
    time limit makes the result potentially incomplete, which is
    reported rather than raised.
    """
    deadline = time.monotonic() + time_limit if time_limit is not None else None
    filt = TargetFilter(target) if target is not None else None
    found: list[Derivation] = []
    visited = 0
    complete = True
    stack = [initial_state(tokens, pos_tags)]
    while stack:
        visited += 1
        if deadline is not None and time.monotonic() > deadline:
            complete = False
            break
        state = stack.pop()
        if is_final(state) and _goal_ok(state, goal_type, d):
            if target is None or mr_equal(final_mr(state), target):
                found.append(derivation_of(state))
            continue
        children = []
        for a in legal_actions(state, d):
            child = step(state, a, d)
            if filt is not None and not filt.admits(child):
                continue
            children.append(child)
        stack.extend(reversed(children))
    return EnumerationResult(found, complete, visited)


def constrained_decode(
    tokens: Sequence[str],
    d: Domain,
    scorer: Scorer | None,
    references: Iterable[Derivation | Sequence[Action]],
    beam_width: int | None = None,
    pos_tags: Sequence[str] | None = None,
) -> list[ParserState]:
    """Best reference prefix per step, scored with the current model.

    References sharing a prefix collapse to a single candidate (the
    walk follows a trie of action sequences).  Returns the best state
    after i+1 actions at index i.
    """
    root: dict = {}
    for ref in references:
        actions = ref.actions if isinstance(ref, Derivation) else tuple(ref)
        node = root
        for a in actions:
            node = node.setdefault(a, {})
    level: list[tuple[dict, ParserState]] = [(root, initial_state(tokens, pos_tags))]
    best_per_step: list[ParserState] = []
    while True:
        nxt: list[tuple[dict, ParserState]] = []
        for node, state in level:
            for action, child_node in node.items():
                nxt.append((child_node, step(state, action, d, scorer)))
        if not nxt:
            break
        if beam_width is not None and len(nxt) > beam_width:
            order = sorted(range(len(nxt)), key=lambda i: (-nxt[i][1].score, i))
            nxt = [nxt[i] for i in sorted(order[:beam_width])]
        best = nxt[0][1]
        for _, state in nxt[1:]:
            if state.score > best.score:
                best = state
        best_per_step.append(best)
        level = nxt
    return best_per_step
