"""Corpus readers, BLEU filtering, vocabulary building, POS-group word
noising and automatic syntactic-exemplar mining.

File formats (UTF-8, one record per line):

* paraphrase pairs: ``sentence_a<TAB>sentence_b``
* tagged corpus:    ``word_TAG word_TAG ...``
* eval triples:     ``semantic<TAB>syntactic<TAB>reference``
* scored pairs:     ``sentence_a<TAB>sentence_b<TAB>score``
* parse files:      one bracketed tree per line, aligned with a sentence file
"""
from __future__ import annotations

import logging
import warnings
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

import numpy as np

from .kernels import levenshtein
from .metrics.text import sentence_bleu
from .vocab import Vocabulary

log = logging.getLogger(__name__)

DEFAULT_MAX_BLEU = 50.0
MINING_LAMBDA = 1.0


class FormatError(ValueError):
    def __init__(self, path, lineno: int, message: str):
        super().__init__(f"{path}:{lineno}: {message}")
        self.lineno = lineno


@dataclass
class ParaphrasePair:
    sentence_a: list[str]
    sentence_b: list[str]

    def __post_init__(self):
        if not self.sentence_a or not self.sentence_b:
            raise ValueError("paraphrase sentences must be nonempty")


@dataclass
class TaggedSentence:
    tokens: list[str]
    tags: list[str]

    def __post_init__(self):
        if len(self.tokens) != len(self.tags):
            raise ValueError("tokens and tags differ in length")


@dataclass
class EvalTriple:
    semantic_input: list[str]
    syntactic_input: list[str]
    reference: list[str]
    syntactic_parse: Optional[str] = None
    reference_parse: Optional[str] = None

    def __post_init__(self):
        if not (self.semantic_input and self.syntactic_input and self.reference):
            raise ValueError("eval triple sentences must be nonempty")


@dataclass
class NoiseModel:
    """word -> its (at most two) most frequent tags; tag -> words carrying it."""

    word_tags: dict[str, tuple[str, ...]]
    tag_words: dict[str, list[str]] = field(default_factory=dict)
    p: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.p <= 1.0:
            raise ValueError("noise probability must lie in [0, 1]")
        if not self.tag_words:
            inv: dict[str, list[str]] = {}
            for word in sorted(self.word_tags):
                for tag in self.word_tags[word]:
                    inv.setdefault(tag, []).append(word)
            self.tag_words = inv


def split_sentence(text: str, lowercase: bool = True) -> list[str]:
    return (text.lower() if lowercase else text).split()


def read_lines(path) -> list[str]:
    with open(path, encoding="utf-8") as f:
        return [line.rstrip("\n") for line in f]


def load_paraphrase_corpus(path, lowercase: bool = True) -> list[ParaphrasePair]:
    pairs = []
    skipped = 0
    for lineno, line in enumerate(read_lines(path), 1):
        if not line.strip():
            continue
        parts = line.split("\t")
        if len(parts) != 2:
            raise FormatError(path, lineno, f"expected 2 tab-separated fields, found {len(parts)}")
        a, b = (split_sentence(p, lowercase) for p in parts)
        if not a or not b:
            skipped += 1
            continue
        pairs.append(ParaphrasePair(a, b))
    if skipped:
        warnings.warn(f"{path}: skipped {skipped} pairs with an empty side", stacklevel=2)
    return pairs


def load_eval_triples(path, syntactic_parses=None, reference_parses=None,
                      lowercase: bool = True) -> list[EvalTriple]:
    syn_p = read_lines(syntactic_parses) if syntactic_parses else None
    ref_p = read_lines(reference_parses) if reference_parses else None
    triples = []
    for lineno, line in enumerate(read_lines(path), 1):
        parts = line.split("\t")
        if len(parts) != 3:
            raise FormatError(path, lineno, f"expected 3 tab-separated fields, found {len(parts)}")
        sents = [split_sentence(p, lowercase) for p in parts]
        if not all(sents):
            raise FormatError(path, lineno, "empty sentence in triple")
        triples.append(EvalTriple(*sents))
    for name, parses, attr in (("syntactic", syn_p, "syntactic_parse"),
                               ("reference", ref_p, "reference_parse")):
        if parses is None:
            continue
        if len(parses) != len(triples):
            raise ValueError(f"{name} parse file has {len(parses)} lines for {len(triples)} triples")
        for t, p in zip(triples, parses):
            setattr(t, attr, p)
    return triples


def load_scored_pairs(path, lowercase: bool = True) -> list[tuple[list[str], list[str], float]]:
    out = []
    for lineno, line in enumerate(read_lines(path), 1):
        if not line.strip():
            continue
        parts = line.split("\t")
        if len(parts) != 3:
            raise FormatError(path, lineno, "expected sentence<TAB>sentence<TAB>score")
        try:
            score = float(parts[2])
        except ValueError as err:
            raise FormatError(path, lineno, f"bad score {parts[2]!r}") from err
        out.append((split_sentence(parts[0], lowercase), split_sentence(parts[1], lowercase), score))
    return out


def parse_tagged_line(line: str, lowercase: bool = True) -> TaggedSentence:
    tokens, tags = [], []
    for item in line.split():
        word, sep, tag = item.rpartition("_")
        if not sep or not word or not tag:
            raise ValueError(f"token {item!r} is not word_TAG")
        tokens.append(word.lower() if lowercase else word)
        tags.append(tag)
    return TaggedSentence(tokens, tags)


def load_tagged_corpus(path, lowercase: bool = True) -> list[TaggedSentence]:
    out = []
    for lineno, line in enumerate(read_lines(path), 1):
        if not line.strip():
            continue
        try:
            out.append(parse_tagged_line(line, lowercase))
        except ValueError as err:
            raise FormatError(path, lineno, str(err)) from err
    return out


def filter_by_bleu(pairs: Sequence[ParaphrasePair], max_bleu: float = DEFAULT_MAX_BLEU) -> list[ParaphrasePair]:
    """Keep pairs whose smoothed sentence BLEU (b against a) is below ``max_bleu``."""
    if not 0.0 <= max_bleu <= 100.0:
        raise ValueError("max_bleu must lie in [0, 100]")
    return [p for p in pairs if sentence_bleu(p.sentence_b, p.sentence_a) < max_bleu]


def build_vocabulary(corpus: Iterable, min_count: int = 1) -> Vocabulary:
    """Vocabulary over sentences or paraphrase pairs; ids ordered by frequency then spelling."""
    def sentences():
        for item in corpus:
            if isinstance(item, ParaphrasePair):
                yield item.sentence_a
                yield item.sentence_b
            elif isinstance(item, TaggedSentence):
                yield item.tokens
            else:
                yield item
    return Vocabulary.from_corpus(sentences(), min_count)


def build_pos_groups(tagged: Iterable[TaggedSentence], p: float = 0.0) -> NoiseModel:
    counts: dict[str, Counter] = {}
    for sent in tagged:
        for tok, tag in zip(sent.tokens, sent.tags):
            counts.setdefault(tok, Counter())[tag] += 1
    word_tags = {}
    for word, c in counts.items():
        ranked = sorted(c.items(), key=lambda kv: (-kv[1], kv[0]))
        word_tags[word] = tuple(tag for tag, _ in ranked[:2])
    return NoiseModel(word_tags, p=p)


def noise_sentence(tokens: Sequence[str], model: NoiseModel, rng: np.random.Generator) -> list[str]:
    """Replace each tagged token with probability p by a word sharing one of its tags."""
    out = list(tokens)
    if model.p == 0.0:
        return out
    hits = rng.random(len(out)) < model.p
    for i, tok in enumerate(out):
        tags = model.word_tags.get(tok)
        if not hits[i] or not tags:
            continue
        tag = tags[rng.integers(len(tags))]
        group = model.tag_words[tag]
        out[i] = group[rng.integers(len(group))]
    return out


def pos_sequence_edit_distance(tags_a: Sequence[str], tags_b: Sequence[str]) -> int:
    """Unit-cost Levenshtein distance over tag symbols."""
    table: dict[str, int] = {}
    a = np.asarray([table.setdefault(t, len(table)) for t in tags_a], dtype=np.int64)
    b = np.asarray([table.setdefault(t, len(table)) for t in tags_b], dtype=np.int64)
    return int(levenshtein(a, b))


def exemplar_score(query: TaggedSentence, cand: TaggedSentence, lam: float = MINING_LAMBDA) -> float:
    """Normalized POS edit distance minus ``lam`` x sentence BLEU on the [0, 1] scale.

    High scores mean "different tag sequence, little word overlap".
    """
    denom = max(len(query.tags), len(cand.tags), 1)
    dist = pos_sequence_edit_distance(query.tags, cand.tags) / denom
    return dist - lam * sentence_bleu(cand.tokens, query.tokens) / 100.0


def rank_exemplars(query: TaggedSentence, pool: Sequence[TaggedSentence],
                   lam: float = MINING_LAMBDA) -> list[tuple[float, int]]:
    """``(score, pool index)`` for every candidate, best first; ties keep pool order."""
    if not pool:
        raise ValueError("candidate pool is empty")
    scores = [(exemplar_score(query, c, lam), i) for i, c in enumerate(pool)]
    return sorted(scores, key=lambda s: (-s[0], s[1]))


def mine_syntactic_exemplars(query: TaggedSentence, pool: Sequence[TaggedSentence], k: int,
                             lam: float = MINING_LAMBDA) -> list[tuple[float, TaggedSentence]]:
    """Top-``k`` candidates by :func:`exemplar_score`, never the query sentence itself."""
    ranked = [(s, i) for s, i in rank_exemplars(query, pool, lam) if pool[i].tokens != query.tokens]
    return [(s, pool[i]) for s, i in ranked[:k]]
