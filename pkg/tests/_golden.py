"""Shared helpers: the running-example derivation and a hash scorer."""

import hashlib

from typeshift.lexicon import tokenize
from typeshift.parser import Derivation, ReduceRight, Shift, Skip, action_label, action_to_code

GOLDEN = "what is the capital of the largest state by area ?"


def entry_id(domain, trigger: str) -> int:
    matches = [e for e in domain.entries if e.trigger_text() == trigger]
    assert len(matches) == 1, trigger
    return matches[0].template_id


def golden_derivation(domain) -> Derivation:
    sh = lambda word: Shift(1, entry_id(domain, word))
    actions = (
        Skip(), Skip(), Skip(),
        sh("capital"),
        Skip(), Skip(),
        sh("largest"), sh("state"),
        ReduceRight(),
        Skip(),
        sh("area"),
        ReduceRight(), ReduceRight(),
        Skip(),
    )
    return Derivation(tuple(tokenize(GOLDEN)), None, actions)


class HashScorer:
    """Deterministic pseudo-random scores keyed by (action, state shape)."""

    def __init__(self, seed: int):
        self.seed = seed

    def score(self, state, action, domain) -> float:
        key = (
            f"{self.seed}|{state.num_actions}|{state.stack_types()}"
            f"|{action_label(action)}|{action_to_code(action)}"
        )
        digest = hashlib.blake2b(key.encode(), digest_size=8).digest()
        return int.from_bytes(digest, "big") / 2**64 - 0.5
