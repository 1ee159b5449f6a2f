"""Encoder probes: cosine-similarity correlation and 1-nearest-neighbour
parsing / tagging by retrieval under either latent variable."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
import torch

from ..model import VGVAE, batchify
from ..vocab import Vocabulary
from .trees import ParseTree, labeled_f1

WHICH = ("semantic", "syntactic")


def pearson(xs: Sequence[float], ys: Sequence[float]) -> float:
    x = np.asarray(xs, dtype=np.float64)
    y = np.asarray(ys, dtype=np.float64)
    if x.shape != y.shape or x.size < 2:
        raise ValueError("pearson needs two equal-length sequences of length >= 2")
    x = x - x.mean()
    y = y - y.mean()
    sx, sy = np.sqrt((x * x).sum()), np.sqrt((y * y).sum())
    if sx == 0 or sy == 0:
        raise ValueError("correlation undefined for zero-variance input")
    return float(np.clip((x * y).sum() / (sx * sy), -1.0, 1.0))


@torch.no_grad()
def encode_means(model: VGVAE, vocab: Vocabulary, sentences: Sequence[Sequence[str]], which: str,
                 batch_size: int = 256) -> np.ndarray:
    """Posterior mean vectors: vMF direction (semantic) or Gaussian mean (syntactic)."""
    if which not in WHICH:
        raise ValueError(f"which must be one of {WHICH}")
    out = []
    for start in range(0, len(sentences), batch_size):
        ids, lengths = batchify([vocab.encode(s) for s in sentences[start:start + batch_size]])
        if which == "semantic":
            out.append(model.encode_semantic(ids, lengths).mu)
        else:
            out.append(model.encode_syntactic(ids, lengths).mu)
    return torch.cat(out).double().numpy()


def _unit(v: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(v, axis=-1, keepdims=True)
    return v / np.where(norms > 0, norms, 1.0)


def encoder_similarity_eval(model: VGVAE, vocab: Vocabulary, items, which: str) -> float:
    """100 x Pearson between gold scores and cosine of posterior means.

    ``items`` holds ``(tokens_a, tokens_b, score)`` triples.
    """
    a = _unit(encode_means(model, vocab, [i[0] for i in items], which))
    b = _unit(encode_means(model, vocab, [i[1] for i in items], which))
    cos = (a * b).sum(-1)
    return 100.0 * pearson(cos, [i[2] for i in items])


@dataclass
class AnnotatedSentence:
    tokens: list[str]
    tags: list[str]
    tree: ParseTree


def tagging_accuracy(preds: Sequence[Sequence[str]], golds: Sequence[Sequence[str]]) -> float:
    """Position-wise tag agreement over the overlapping prefix, divided by gold length (%)."""
    hit = sum(sum(p == g for p, g in zip(pr, go)) for pr, go in zip(preds, golds))
    total = sum(len(g) for g in golds)
    return 100.0 * hit / total if total else 0.0


def _score_retrieval(test: Sequence[AnnotatedSentence], pool: Sequence[AnnotatedSentence], picks):
    f1 = labeled_f1([pool[j].tree for j in picks], [t.tree for t in test])
    acc = tagging_accuracy([pool[j].tags for j in picks], [t.tags for t in test])
    return f1, acc


def nearest_neighbours(query: np.ndarray, pool: np.ndarray) -> np.ndarray:
    """Index of the highest-cosine pool row per query; ties go to the lowest index."""
    sims = _unit(query) @ _unit(pool).T
    return np.argmax(sims, axis=1)


def nn_syntactic_eval(model: VGVAE, vocab: Vocabulary, test: Sequence[AnnotatedSentence],
                      pool: Sequence[AnnotatedSentence], which: str) -> tuple[float, float]:
    """1-NN parser/tagger: copy the annotations of the most similar pool sentence.

    Returns ``(labeled bracket F1 %, tagging accuracy %)``.
    """
    if not pool:
        raise ValueError("candidate pool is empty")
    q = encode_means(model, vocab, [t.tokens for t in test], which)
    p = encode_means(model, vocab, [s.tokens for s in pool], which)
    return _score_retrieval(test, pool, nearest_neighbours(q, p))


def random_retrieval_baseline(test: Sequence[AnnotatedSentence], pool: Sequence[AnnotatedSentence],
                              seed: int = 0) -> tuple[float, float]:
    rng = np.random.default_rng(seed)
    return _score_retrieval(test, pool, rng.integers(0, len(pool), size=len(test)))
