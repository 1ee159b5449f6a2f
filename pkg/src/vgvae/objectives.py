"""Training objectives: weighted ELBO, paraphrase reconstruction (PRL) and
word position (WPL) losses, and their assembly into one LossBreakdown."""
from __future__ import annotations

import math
import os
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
import torch

from .config import LossWeights
from .distributions import gaussian_kl_to_std, vmf_kl_to_uniform
from .model import VGVAE, batchify, length_mask

TERMS = ("reconstruction", "kl_y", "kl_z", "prl", "wpl")


@dataclass
class LossBreakdown:
    reconstruction: torch.Tensor
    kl_y: torch.Tensor
    kl_z: torch.Tensor
    prl: torch.Tensor
    wpl: torch.Tensor
    weights: dict
    total: torch.Tensor

    @classmethod
    def assemble(cls, weights: dict, **terms) -> "LossBreakdown":
        total = sum(weights[k] * terms[k] for k in TERMS)
        return cls(weights=dict(weights), total=total, **terms)

    def recompute_total(self) -> float:
        return sum(self.weights[k] * _scalar(getattr(self, k)) for k in TERMS)

    def as_floats(self) -> dict:
        out = {k: _scalar(getattr(self, k)) for k in TERMS}
        out["total"] = _scalar(self.total)
        return out


def _scalar(value) -> float:
    return float(value.detach()) if isinstance(value, torch.Tensor) else float(value)


@dataclass
class PairBatch:
    """Paraphrase pairs as padded id tensors.

    ``syn1``/``syn2`` are the syntactic-encoder inputs (noised copies of the
    sentences when word noising is on); they default to the clean sentences.
    """

    x1: torch.Tensor
    len1: torch.Tensor
    x2: torch.Tensor
    len2: torch.Tensor
    syn1: Optional[torch.Tensor] = None
    syn2: Optional[torch.Tensor] = None

    def __post_init__(self):
        if self.syn1 is None:
            self.syn1 = self.x1
        if self.syn2 is None:
            self.syn2 = self.x2

    @classmethod
    def from_lists(cls, a, b, syn_a=None, syn_b=None) -> "PairBatch":
        x1, l1 = batchify(a)
        x2, l2 = batchify(b)
        s1 = batchify(syn_a)[0] if syn_a is not None else None
        s2 = batchify(syn_b)[0] if syn_b is not None else None
        return cls(x1, l1, x2, l2, s1, s2)

    def __len__(self):
        return self.x1.shape[0]


def _pad_to(ids: torch.Tensor, width: int) -> torch.Tensor:
    if ids.shape[1] == width:
        return ids
    return torch.cat([ids, ids.new_zeros(ids.shape[0], width - ids.shape[1])], 1)


def word_position_loss(token_embeddings: torch.Tensor, z: torch.Tensor, lengths: torch.Tensor,
                       head: Callable[[torch.Tensor], torch.Tensor], max_position: int) -> torch.Tensor:
    """Summed negative log-probability of each token's own position, batch-averaged.

    ``head`` maps ``[e_t; z]`` to ``max_position`` logits; positions count from 0.
    """
    if int(lengths.max()) > max_position:
        raise ValueError(f"sentence length {int(lengths.max())} exceeds max position {max_position}")
    batch, width, _ = token_embeddings.shape
    feats = torch.cat([token_embeddings, z.unsqueeze(1).expand(-1, width, -1)], -1)
    logp = torch.log_softmax(head(feats), -1)
    pos = torch.arange(width).clamp(max=max_position - 1)
    picked = logp.gather(-1, pos.view(1, -1, 1).expand(batch, -1, 1)).squeeze(-1)
    mask = length_mask(lengths, width)
    return -(picked * mask).sum(1).mean()


def prl_from_latents(model: VGVAE, x1, len1, x2, len2, y1, z1, y2, z2) -> torch.Tensor:
    """-[log p(x1 | y2, z1) + log p(x2 | y1, z2)], batch-averaged."""
    width = max(x1.shape[1], x2.shape[1])
    ids = torch.cat([_pad_to(x1, width), _pad_to(x2, width)])
    lengths = torch.cat([len1, len2])
    lp = model.reconstruction_log_prob(ids, lengths, torch.cat([y2, y1]), torch.cat([z1, z2]))
    b = x1.shape[0]
    return -(lp[:b] + lp[b:]).mean()


def paraphrase_reconstruction_loss(model: VGVAE, batch: PairBatch, rng: np.random.Generator) -> torch.Tensor:
    sem1 = model.encode_semantic(batch.x1, batch.len1)
    sem2 = model.encode_semantic(batch.x2, batch.len2)
    syn1 = model.encode_syntactic(batch.syn1, batch.len1)
    syn2 = model.encode_syntactic(batch.syn2, batch.len2)
    y1, z1 = model.sample_latents(sem1, syn1, rng)
    y2, z2 = model.sample_latents(sem2, syn2, rng)
    return prl_from_latents(model, batch.x1, batch.len1, batch.x2, batch.len2, y1, z1, y2, z2)


def total_loss(model: VGVAE, batch: PairBatch, weights: LossWeights,
               rng: np.random.Generator) -> LossBreakdown:
    """Every term is computed and reported; zero-weighted terms drop out of the total."""
    b = len(batch)
    sem1 = model.encode_semantic(batch.x1, batch.len1)
    sem2 = model.encode_semantic(batch.x2, batch.len2)
    syn1, semb1 = model.encode_syntactic(batch.syn1, batch.len1, return_embeddings=True)
    syn2, semb2 = model.encode_syntactic(batch.syn2, batch.len2, return_embeddings=True)
    y1, z1 = model.sample_latents(sem1, syn1, rng)
    y2, z2 = model.sample_latents(sem2, syn2, rng)

    # self and crossed reconstructions share one decoder pass
    width = max(batch.x1.shape[1], batch.x2.shape[1])
    x1, x2 = _pad_to(batch.x1, width), _pad_to(batch.x2, width)
    ids = torch.cat([x1, x2, x1, x2])
    lengths = torch.cat([batch.len1, batch.len2, batch.len1, batch.len2])
    lp, _, hid, demb = model.teacher_force(ids, lengths, torch.cat([y1, y2, y2, y1]),
                                           torch.cat([z1, z2, z1, z2]))
    rec = -(lp[:b] + lp[b:2 * b]).mean()
    prl = -(lp[2 * b:3 * b] + lp[3 * b:]).mean()

    kl_y = (vmf_kl_to_uniform(sem1) + vmf_kl_to_uniform(sem2)).mean()
    kl_z = (gaussian_kl_to_std(syn1) + gaussian_kl_to_std(syn2)).mean()

    wpl = rec.new_zeros(())
    P = model.config.wpl_max_position
    zz = torch.cat([z1, z2])
    self_len = lengths[: 2 * b]
    for site, head in model.wpl_heads.items():
        if site == "enc_emb":
            wpl = wpl + word_position_loss(semb1, z1, batch.len1, head, P) \
                + word_position_loss(semb2, z2, batch.len2, head, P)
        elif site == "dec_emb":
            wpl = wpl + 2 * word_position_loss(demb[: 2 * b], zz, self_len, head, P)
        elif site == "dec_hidden":
            wpl = wpl + 2 * word_position_loss(hid[: 2 * b], zz, self_len, head, P)

    w = {"reconstruction": weights.reconstruction, "kl_y": weights.kl_y, "kl_z": weights.kl_z,
         "prl": weights.prl, "wpl": weights.wpl if model.wpl_heads else 0.0}
    return LossBreakdown.assemble(w, reconstruction=rec, kl_y=kl_y, kl_z=kl_z, prl=prl, wpl=wpl)


def uniform_wpl(lengths, max_position: int) -> float:
    """WPL of a head that predicts every position equally (sum of T log P), batch-averaged."""
    return float(np.mean([int(t) * math.log(max_position) for t in lengths]))


CSV_FIELDS = ("step",) + TERMS + ("total",)


def append_loss_csv(path, step: int, breakdown: LossBreakdown):
    new = not os.path.exists(path) or os.path.getsize(path) == 0
    vals = breakdown.as_floats()
    with open(path, "a", encoding="utf-8") as f:
        if new:
            f.write(",".join(CSV_FIELDS) + "\n")
        f.write(",".join([str(step)] + [repr(vals[k]) for k in CSV_FIELDS[1:]]) + "\n")


__all__ = ["LossBreakdown", "PairBatch", "word_position_loss", "prl_from_latents",
           "paraphrase_reconstruction_loss", "total_loss", "append_loss_csv"]
