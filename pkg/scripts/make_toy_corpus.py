#!/usr/bin/env python
"""Regenerate the bundled toy corpus TSV files.

The corpus is hand-designed rather than sampled: every pattern is kept
short (at most 8 tokens), every content word in the held-out split also
appears in training, and the ambiguous river/state names are placed so
that the correct reading is either type-forced or learnable from the
training split.
"""

from __future__ import annotations

import argparse
from pathlib import Path

TRAIN = [
    ("what is the capital of texas ?", "(capital texas)"),
    ("what is the capital of georgia ?", "(capital georgia)"),
    ("what is the capital of mississippi ?", "(capital mississippi)"),
    ("what is the capital of colorado ?", "(capital colorado)"),
    ("what is the capital of montana ?", "(capital montana)"),
    ("what is the population of austin ?", "(population austin)"),
    ("what is the population of texas ?", "(population texas)"),
    ("what is the population of mississippi ?", "(population mississippi)"),
    ("the population of mississippi ?", "(population mississippi)"),
    ("what is the population of chicago ?", "(population chicago)"),
    ("what is the population of dallas ?", "(population dallas)"),
    ("what is the size of texas ?", "(size texas)"),
    ("what is the size of colorado ?", "(size colorado)"),
    ("what is the size of ohio ?", "(size ohio)"),
    ("what is the size of florida ?", "(size florida)"),
    ("what is the size of tahoe ?", "(size tahoe)"),
    ("what is the size of erie ?", "(size erie)"),
    ("what is the length of the mississippi ?", "(len mississippi)"),
    ("how long is the colorado ?", "(len colorado)"),
    ("how long is the mississippi ?", "(len mississippi)"),
    ("how long is the ohio ?", "(len ohio)"),
    ("what is the largest state by area ?", "(argmax state size)"),
    ("what is the largest city by population ?", "(argmax city population)"),
    ("what is the largest lake by area ?", "(argmax lake size)"),
    ("what is the smallest state by area ?", "(argmin state size)"),
    ("what is the smallest city by population ?", "(argmin city population)"),
    ("what is the longest river ?", "(argmax river len)"),
    ("what is the biggest city ?", "(argmax city population)"),
    (
        "what is the biggest major city ?",
        "(argmax (lambda (x : ct) (and (major x) (city x))) population)",
    ),
    (
        "the largest major lake by area ?",
        "(argmax (lambda (x : lk) (and (major x) (lake x))) size)",
    ),
    (
        "the largest major state by population ?",
        "(argmax (lambda (x : st) (and (major x) (state x))) population)",
    ),
]

TEST = [
    ("what is the capital of florida ?", "(capital florida)"),
    ("what is the capital of ohio ?", "(capital ohio)"),
    ("what is the population of georgia ?", "(population georgia)"),
    ("what is the population of montana ?", "(population montana)"),
    ("what is the size of montana ?", "(size montana)"),
    ("what is the size of mississippi ?", "(size mississippi)"),
    ("what is the length of the colorado ?", "(len colorado)"),
    ("what is the largest state by population ?", "(argmax state population)"),
    (
        "the biggest major city ?",
        "(argmax (lambda (x : ct) (and (major x) (city x))) population)",
    ),
    ("what is the smallest lake by area ?", "(argmin lake size)"),
]


def write_tsv(path: Path, pairs: list[tuple[str, str]]) -> None:
    lines = [f"{q}\t{mr}" for q, mr in pairs]
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def main() -> None:
    default_out = Path(__file__).resolve().parents[1] / "src" / "typeshift" / "data"
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", type=Path, default=default_out)
    args = ap.parse_args()
    args.out.mkdir(parents=True, exist_ok=True)
    write_tsv(args.out / "geo_toy_train.tsv", TRAIN)
    write_tsv(args.out / "geo_toy_test.tsv", TEST)
    print(f"wrote {len(TRAIN)} train / {len(TEST)} test pairs to {args.out}")


if __name__ == "__main__":
    main()
