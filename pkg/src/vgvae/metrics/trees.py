"""Constituency trees: Penn-bracket reading, token stripping, ordered tree edit
distance and the syntactic-match (ST) score."""
from __future__ import annotations

import re
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from ..kernels import zhang_shasha


class ParseError(ValueError):
    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} at offset {offset}")
        self.offset = offset


@dataclass
class ParseTree:
    label: str
    children: list["ParseTree"] = field(default_factory=list)
    is_token: bool = False

    def __post_init__(self):
        if not self.label:
            raise ValueError("tree labels must be nonempty")

    def __str__(self):
        if self.is_token:
            return self.label
        if not self.children:
            return f"({self.label})"
        return f"({self.label} {' '.join(str(c) for c in self.children)})"

    def nodes(self) -> Iterable["ParseTree"]:
        yield self
        for c in self.children:
            yield from c.nodes()

    def size(self) -> int:
        return sum(1 for _ in self.nodes())

    def tokens(self) -> list[str]:
        return [n.label for n in self.nodes() if n.is_token]

    def leaves(self) -> list["ParseTree"]:
        if not self.children:
            return [self]
        return [leaf for c in self.children for leaf in c.leaves()]


_TOKEN = re.compile(r"\(|\)|[^\s()]+")


def parse_bracketed(text: str) -> ParseTree:
    """Read one Penn-style tree, e.g. ``(S (NP (PRP it)) (VP (VBZ works)))``.

    A bare word inside a bracket becomes a token leaf.  An unlabeled outer
    bracket wrapping a single tree, as in ``( (S ...) )``, is dropped.
    """
    toks = [(m.group(), m.start()) for m in _TOKEN.finditer(text)]
    if not toks:
        raise ParseError("empty input", 0)
    pos = 0

    def node():
        nonlocal pos
        tok, off = toks[pos]
        if tok != "(":
            raise ParseError(f"expected '(' but found {tok!r}", off)
        pos += 1
        if pos == len(toks):
            raise ParseError("unexpected end of input", len(text))
        label = None
        if toks[pos][0] not in "()":
            label = toks[pos][0]
            pos += 1
        children = []
        while True:
            if pos == len(toks):
                raise ParseError(f"unclosed '(' opened at offset {off}; unexpected end of input", len(text))
            tok, toff = toks[pos]
            if tok == ")":
                pos += 1
                break
            if tok == "(":
                children.append(node())
            else:
                children.append(ParseTree(tok, is_token=True))
                pos += 1
        if label is None:
            if len(children) == 1 and not children[0].is_token:
                return children[0]
            raise ParseError("unlabeled bracket", off)
        return ParseTree(label, children)

    tree = node()
    if pos != len(toks):
        raise ParseError(f"trailing input {toks[pos][0]!r}", toks[pos][1])
    return tree


def strip_tokens(tree: ParseTree) -> ParseTree:
    """Copy of ``tree`` without token leaves; preterminals become leaves."""
    return ParseTree(tree.label, [strip_tokens(c) for c in tree.children if not c.is_token])


def postorder_arrays(tree: ParseTree, table: dict[str, int]):
    """(label ids, leftmost-leaf indices, keyroots) in postorder."""
    labels: list[int] = []
    lml: list[int] = []

    def walk(n):
        first = None
        for c in n.children:
            leftmost = walk(c)
            if first is None:
                first = leftmost
        idx = len(labels)
        labels.append(table.setdefault(n.label, len(table)))
        lml.append(idx if first is None else first)
        return lml[idx]

    walk(tree)
    last_with_lml: dict[int, int] = {}
    for i, l in enumerate(lml):
        last_with_lml[l] = i
    keyroots = sorted(last_with_lml.values())
    return (np.asarray(labels, dtype=np.int64), np.asarray(lml, dtype=np.int64),
            np.asarray(keyroots, dtype=np.int64))


def tree_edit_distance(t1: ParseTree, t2: ParseTree) -> int:
    """Ordered tree edit distance with unit insert, delete and relabel costs."""
    table: dict[str, int] = {}
    return int(zhang_shasha(*postorder_arrays(t1, table), *postorder_arrays(t2, table)))


def _parse_line(text: str, lineno: int, what: str) -> ParseTree:
    try:
        return parse_bracketed(text)
    except ParseError as err:
        raise ParseError(f"{what} line {lineno}: {err}", err.offset) from err


def st_score(outputs: Sequence[str], references: Sequence[str]) -> float:
    """Mean tree edit distance between token-stripped parses (lower is better)."""
    if len(outputs) != len(references):
        raise ValueError("output and reference parse counts differ")
    if not outputs:
        return 0.0
    total = 0
    for i, (o, r) in enumerate(zip(outputs, references), 1):
        total += tree_edit_distance(strip_tokens(_parse_line(o, i, "output")),
                                    strip_tokens(_parse_line(r, i, "reference")))
    return total / len(outputs)


def labeled_brackets(tree: ParseTree) -> Counter:
    """Multiset of (label, start, end) over internal nodes of the stripped tree.

    Spans index the leaves of the stripped tree (the preterminals), which are
    themselves not counted as brackets.
    """
    out: Counter = Counter()

    def walk(n, start):
        if not n.children:
            return start + 1
        end = start
        for c in n.children:
            end = walk(c, end)
        out[(n.label, start, end)] += 1
        return end

    walk(strip_tokens(tree), 0)
    return out


def bracket_counts(pred: ParseTree, gold: ParseTree) -> tuple[int, int, int]:
    p, g = labeled_brackets(pred), labeled_brackets(gold)
    return sum((p & g).values()), sum(p.values()), sum(g.values())


def labeled_f1(preds: Sequence[ParseTree], golds: Sequence[ParseTree]) -> float:
    """Corpus labeled-bracket F1 (%), counts pooled over sentences."""
    match = n_pred = n_gold = 0
    for p, g in zip(preds, golds):
        m, a, b = bracket_counts(p, g)
        match, n_pred, n_gold = match + m, n_pred + a, n_gold + b
    if match == 0:
        return 0.0
    prec, rec = match / n_pred, match / n_gold
    return 100.0 * 2 * prec * rec / (prec + rec)


def preterminals(tree: ParseTree) -> list[str]:
    """Leaf labels of the stripped tree, i.e. the POS sequence."""
    return [leaf.label for leaf in strip_tokens(tree).leaves()]
