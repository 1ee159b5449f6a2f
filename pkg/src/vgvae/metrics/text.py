"""Surface-overlap metrics on pre-tokenized sentences: BLEU, ROUGE-1/2/L and
an exact-match METEOR variant.  No re-tokenization happens here."""
from __future__ import annotations

import math
from collections import Counter
from typing import Sequence

import numpy as np

from ..kernels import lcs_length

Tokens = Sequence[str]

METEOR_ALPHA = 0.9
METEOR_GAMMA = 0.5
METEOR_BETA = 3.0


def ngrams(tokens: Tokens, n: int) -> Counter:
    return Counter(tuple(tokens[i:i + n]) for i in range(len(tokens) - n + 1))


def _clipped(cand: Tokens, ref: Tokens, n: int) -> tuple[int, int]:
    c = ngrams(cand, n)
    r = ngrams(ref, n)
    return sum(min(v, r[g]) for g, v in c.items()), max(len(cand) - n + 1, 0)


def _brevity(c: int, r: int) -> float:
    if c == 0:
        return 0.0
    return 1.0 if c > r else math.exp(1 - r / c)


def bleu_corpus(candidates: Sequence[Tokens], references: Sequence[Tokens], max_n: int = 4) -> float:
    """Corpus BLEU with pooled clipped n-gram counts and brevity penalty, on [0, 100]."""
    if len(candidates) != len(references):
        raise ValueError("candidate and reference counts differ")
    if not references:
        raise ValueError("no references")
    matches = [0] * max_n
    totals = [0] * max_n
    c_len = r_len = 0
    for cand, ref in zip(candidates, references):
        c_len += len(cand)
        r_len += len(ref)
        for n in range(1, max_n + 1):
            m, t = _clipped(cand, ref, n)
            matches[n - 1] += m
            totals[n - 1] += t
    if min(matches) == 0:
        return 0.0
    log_p = sum(math.log(m / t) for m, t in zip(matches, totals)) / max_n
    return 100.0 * _brevity(c_len, r_len) * math.exp(log_p)


def sentence_bleu(candidate: Tokens, reference: Tokens, max_n: int = 4) -> float:
    """Sentence BLEU with add-one smoothing on orders >= 2, on [0, 100]."""
    m1, t1 = _clipped(candidate, reference, 1)
    if m1 == 0:
        return 0.0
    log_p = math.log(m1 / t1)
    for n in range(2, max_n + 1):
        m, t = _clipped(candidate, reference, n)
        log_p += math.log((m + 1) / (t + 1))
    return 100.0 * _brevity(len(candidate), len(reference)) * math.exp(log_p / max_n)


def _f1(overlap: float, n_cand: int, n_ref: int) -> float:
    if overlap == 0 or n_cand == 0 or n_ref == 0:
        return 0.0
    p, r = overlap / n_cand, overlap / n_ref
    return 100.0 * 2 * p * r / (p + r)


def rouge_n(candidate: Tokens, reference: Tokens, n: int) -> float:
    """ROUGE-N F1 on [0, 100]."""
    if n not in (1, 2):
        raise ValueError("rouge_n supports n in {1, 2}")
    c, r = ngrams(candidate, n), ngrams(reference, n)
    overlap = sum(min(v, r[g]) for g, v in c.items())
    return _f1(overlap, sum(c.values()), sum(r.values()))


def _intern(*seqs: Tokens) -> list[np.ndarray]:
    table: dict[str, int] = {}
    return [np.fromiter((table.setdefault(t, len(table)) for t in s), dtype=np.int64, count=len(s))
            for s in seqs]


def lcs(a: Tokens, b: Tokens) -> int:
    return int(lcs_length(*_intern(a, b)))


def rouge_l(candidate: Tokens, reference: Tokens) -> float:
    """ROUGE-L F1 (longest common subsequence) on [0, 100]."""
    return _f1(lcs(candidate, reference), len(candidate), len(reference))


def meteor_alignment(candidate: Tokens, reference: Tokens) -> list[tuple[int, int]]:
    """Exact-match alignment: each candidate token takes the leftmost free identical reference token."""
    used = [False] * len(reference)
    pairs = []
    for i, tok in enumerate(candidate):
        for j, ref_tok in enumerate(reference):
            if not used[j] and ref_tok == tok:
                used[j] = True
                pairs.append((i, j))
                break
    return pairs


def meteor_simplified(candidate: Tokens, reference: Tokens) -> float:
    """METEOR with exact matching only (no stemming or synonyms), on [0, 100]."""
    pairs = meteor_alignment(candidate, reference)
    matches = len(pairs)
    if matches == 0:
        return 0.0
    chunks = 1
    for (i0, j0), (i1, j1) in zip(pairs, pairs[1:]):
        if not (i1 == i0 + 1 and j1 == j0 + 1):
            chunks += 1
    p, r = matches / len(candidate), matches / len(reference)
    fmean = p * r / (METEOR_ALPHA * p + (1 - METEOR_ALPHA) * r)
    penalty = METEOR_GAMMA * (chunks / matches) ** METEOR_BETA
    return 100.0 * fmean * (1 - penalty)


def corpus_mean(metric, candidates: Sequence[Tokens], references: Sequence[Tokens], **kw) -> float:
    if len(candidates) != len(references):
        raise ValueError("candidate and reference counts differ")
    if not candidates:
        return 0.0
    return float(np.mean([metric(c, r, **kw) for c, r in zip(candidates, references)]))
