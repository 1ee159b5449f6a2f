"""Bottleneck word embeddings built from marginalized discrete cluster codes.

Each word owns a base embedding.  ``num_codes`` small feedforward nets turn it
into a distribution over ``classes_per_code`` clusters; every (code, class)
pair has its own vector, and the word embedding is the concatenation of the
per-code expected cluster vectors.
"""
from __future__ import annotations

from collections import Counter
from dataclasses import dataclass

import torch
import torch.nn as nn

from .vocab import RESERVED, Vocabulary


@dataclass
class CodeEmbeddingConfig:
    num_codes: int = 10
    classes_per_code: int = 2
    total_dim: int = 100
    base_dim: int = 100

    def __post_init__(self):
        if self.classes_per_code < 2:
            raise ValueError("classes_per_code must be >= 2")
        if self.num_codes < 1 or self.total_dim % self.num_codes:
            raise ValueError("total_dim must be a positive multiple of num_codes")

    @property
    def code_dim(self) -> int:
        return self.total_dim // self.num_codes


class CodeEmbedding(nn.Module):
    def __init__(self, vocab_size: int, config: CodeEmbeddingConfig, padding_idx: int | None = 0):
        super().__init__()
        self.config = config
        c = config
        self.base = nn.Embedding(vocab_size, c.base_dim, padding_idx=padding_idx)
        # one single-hidden-layer net per code, evaluated jointly as batched matmuls
        self.w1 = nn.Parameter(torch.empty(c.num_codes, c.base_dim, c.base_dim))
        self.b1 = nn.Parameter(torch.zeros(c.num_codes, c.base_dim))
        self.w2 = nn.Parameter(torch.empty(c.num_codes, c.base_dim, c.classes_per_code))
        self.b2 = nn.Parameter(torch.zeros(c.num_codes, c.classes_per_code))
        self.cluster_vectors = nn.Parameter(torch.empty(c.num_codes, c.classes_per_code, c.code_dim))
        bound = c.base_dim ** -0.5
        nn.init.uniform_(self.w1, -bound, bound)
        nn.init.uniform_(self.w2, -bound, bound)
        nn.init.uniform_(self.cluster_vectors, -0.1, 0.1)

    @property
    def embedding_dim(self) -> int:
        return self.config.total_dim

    def code_logits(self, ids: torch.Tensor) -> torch.Tensor:
        """(..., num_codes, classes_per_code) unnormalized code scores."""
        e = self.base(ids)
        h = torch.tanh(torch.einsum("...i,kij->...kj", e, self.w1) + self.b1)
        return torch.einsum("...ki,kij->...kj", h, self.w2) + self.b2

    def code_distributions(self, ids: torch.Tensor) -> torch.Tensor:
        return torch.softmax(self.code_logits(ids), dim=-1)

    @staticmethod
    def marginalize(probs: torch.Tensor, cluster_vectors: torch.Tensor) -> torch.Tensor:
        # sum_c p_k(c) v_{k,c} per code k, then concatenate over k
        expected = torch.einsum("...kc,kcd->...kd", probs, cluster_vectors)
        return expected.reshape(*expected.shape[:-2], -1)

    def forward(self, ids: torch.Tensor) -> torch.Tensor:
        return self.marginalize(self.code_distributions(ids), self.cluster_vectors)

    @torch.no_grad()
    def cluster_assign(self, ids: torch.Tensor) -> torch.Tensor:
        """Per-code argmax class (lowest index wins ties); shape (..., num_codes)."""
        return torch.argmax(self.code_logits(ids), dim=-1)


def code_distributions(layer: CodeEmbedding, word: int) -> list[torch.Tensor]:
    probs = layer.code_distributions(torch.tensor([word]))[0]
    return list(probs)


def code_embed(layer: CodeEmbedding, word: int) -> torch.Tensor:
    return layer(torch.tensor([word]))[0]


def cluster_assign(layer: CodeEmbedding, word: int) -> tuple[int, ...]:
    return tuple(int(i) for i in layer.cluster_assign(torch.tensor([word]))[0])


def cluster_report(layer: CodeEmbedding, vocab: Vocabulary, samples: int = 10):
    """Group non-reserved vocabulary entries by argmax code tuple.

    Returns ``[(cluster_id, size, sample_words), ...]`` sorted by descending
    size, then by cluster id.  Samples are the first words in vocabulary order.
    """
    ids = torch.arange(len(RESERVED), len(vocab))
    if ids.numel() == 0:
        return []
    assigned = layer.cluster_assign(ids).tolist()
    members: dict[tuple, list[str]] = {}
    for idx, code in zip(ids.tolist(), assigned):
        members.setdefault(tuple(code), []).append(vocab.itos[idx])
    sizes = Counter({k: len(v) for k, v in members.items()})
    order = sorted(sizes, key=lambda k: (-sizes[k], k))
    return [(k, sizes[k], members[k][:samples]) for k in order]


def format_cluster_id(cid: tuple[int, ...]) -> str:
    return "-".join(str(i) for i in cid)


def write_cluster_report(report, dest):
    """TSV lines ``cluster-id  size  samples`` to a path or an open text stream."""
    lines = [f"{format_cluster_id(cid)}\t{size}\t{' '.join(words)}\n" for cid, size, words in report]
    if hasattr(dest, "write"):
        dest.writelines(lines)
        return
    with open(dest, "w", encoding="utf-8") as f:
        f.writelines(lines)
