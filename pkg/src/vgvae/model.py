"""vMF-Gaussian VAE: word-averaging semantic encoder, biLSTM syntactic encoder,
LSTM decoder with four latent wirings, and greedy/beam decoding.

All batched entry points take right-padded id tensors ``(B, T)`` plus a
``lengths`` tensor.  Sentences are stored without framing; the decoder reads
``<s> x`` and is trained to emit ``x </s>``.
"""
from __future__ import annotations

from typing import Sequence

import numpy as np
import torch
import torch.nn as nn
import torch.nn.functional as F
from torch.nn.utils.rnn import pack_padded_sequence, pad_packed_sequence

from .config import ModelConfig
from .distributions import (GaussianParams, VmfParams, gaussian_from_logvar, gaussian_kl_to_std,
                            gaussian_sample, kappa_from_raw, vmf_kl_to_uniform, vmf_sample)
from .latent_codes import CodeEmbedding, CodeEmbeddingConfig
from .vocab import Vocabulary

PAD_ID, UNK_ID, BOS_ID, EOS_ID = (Vocabulary.pad_id, Vocabulary.unk_id,
                                  Vocabulary.bos_id, Vocabulary.eos_id)


def batchify(seqs: Sequence[Sequence[int]], pad: int = PAD_ID):
    """Right-pad id lists into ``(ids, lengths)`` long tensors."""
    if not seqs:
        raise ValueError("empty batch")
    lengths = [len(s) for s in seqs]
    if min(lengths) == 0:
        raise ValueError("empty sequence")
    ids = torch.full((len(seqs), max(lengths)), pad, dtype=torch.long)
    for i, s in enumerate(seqs):
        ids[i, : len(s)] = torch.as_tensor(list(s), dtype=torch.long)
    return ids, torch.as_tensor(lengths, dtype=torch.long)


def length_mask(lengths: torch.Tensor, width: int) -> torch.Tensor:
    return torch.arange(width).unsqueeze(0) < lengths.unsqueeze(1)


def feedforward(in_dim: int, hidden: int, out_dim: int, layers: int) -> nn.Sequential:
    mods: list[nn.Module] = []
    dim = in_dim
    for _ in range(layers - 1):
        mods += [nn.Linear(dim, hidden), nn.Tanh()]
        dim = hidden
    mods.append(nn.Linear(dim, out_dim))
    return nn.Sequential(*mods)


def _uniform_embedding(vocab_size: int, dim: int) -> nn.Embedding:
    emb = nn.Embedding(vocab_size, dim, padding_idx=PAD_ID)
    nn.init.uniform_(emb.weight, -0.1, 0.1)
    with torch.no_grad():
        emb.weight[PAD_ID].zero_()
    return emb


class SemanticEncoder(nn.Module):
    def __init__(self, vocab_size: int, cfg: ModelConfig):
        super().__init__()
        self.embed = _uniform_embedding(vocab_size, cfg.emb_dim)
        self.ff = feedforward(cfg.emb_dim, cfg.ff_dim, cfg.sem_dim + 1, cfg.ff_layers)
        self.dim = cfg.sem_dim

    def forward(self, ids, lengths) -> VmfParams:
        mask = length_mask(lengths, ids.shape[1]).unsqueeze(-1)
        e = self.embed(ids) * mask
        avg = e.sum(1) / lengths.unsqueeze(1).to(e.dtype)
        out = self.ff(avg)
        mu = F.normalize(out[:, : self.dim], dim=-1)
        return VmfParams(mu, kappa_from_raw(out[:, self.dim]))


class SyntacticEncoder(nn.Module):
    def __init__(self, vocab_size: int, cfg: ModelConfig):
        super().__init__()
        if cfg.use_codes:
            self.embed = CodeEmbedding(vocab_size, CodeEmbeddingConfig(
                cfg.num_codes, cfg.classes_per_code, cfg.emb_dim, cfg.code_base_dim))
        else:
            self.embed = _uniform_embedding(vocab_size, cfg.emb_dim)
        self.lstm = nn.LSTM(cfg.emb_dim, cfg.enc_hidden, batch_first=True, bidirectional=True)
        self.ff = feedforward(2 * cfg.enc_hidden, cfg.ff_dim, 2 * cfg.syn_dim, cfg.ff_layers)
        self.dim = cfg.syn_dim

    def forward(self, ids, lengths):
        """Returns ``(GaussianParams, token embeddings (B, T, E))``."""
        e = self.embed(ids)
        packed = pack_padded_sequence(e, lengths.cpu(), batch_first=True, enforce_sorted=False)
        out, _ = self.lstm(packed)
        out, _ = pad_packed_sequence(out, batch_first=True, total_length=ids.shape[1])
        avg = out.sum(1) / lengths.unsqueeze(1).to(out.dtype)
        h = self.ff(avg)
        return gaussian_from_logvar(h[:, : self.dim], h[:, self.dim:]), e


class Decoder(nn.Module):
    """LSTM decoder; ``variant`` decides where y and z enter.

    standard: input [emb; z], head [h; y]     init: latents only in the initial state
    concat:   input [emb; y; z], head [h]     swap: input [emb; y], head [h; z]
    """

    def __init__(self, vocab_size: int, cfg: ModelConfig):
        super().__init__()
        self.variant = cfg.variant
        self.hidden = cfg.dec_hidden
        m, d, e = cfg.sem_dim, cfg.syn_dim, cfg.emb_dim
        in_extra, head_extra = {"standard": (d, m), "init": (0, 0),
                                "concat": (m + d, 0), "swap": (m, d)}[cfg.variant]
        self.embed = _uniform_embedding(vocab_size, e)
        self.lstm = nn.LSTM(e + in_extra, cfg.dec_hidden, batch_first=True)
        self.head = nn.Linear(cfg.dec_hidden + head_extra, vocab_size)
        self.init_proj = nn.Linear(m + d, 2 * cfg.dec_hidden) if cfg.variant == "init" else None

    def init_state(self, y, z):
        batch = y.shape[0]
        if self.variant == "init":
            h, c = self.init_proj(torch.cat([y, z], -1)).chunk(2, dim=-1)
            return h.unsqueeze(0).contiguous(), c.unsqueeze(0).contiguous()
        zeros = y.new_zeros(1, batch, self.hidden)
        return zeros, zeros.clone()

    def _inputs(self, emb, y, z):
        steps = emb.shape[1]
        expand = lambda v: v.unsqueeze(1).expand(-1, steps, -1)  # noqa: E731
        if self.variant == "standard":
            return torch.cat([emb, expand(z)], -1)
        if self.variant == "concat":
            return torch.cat([emb, expand(y), expand(z)], -1)
        if self.variant == "swap":
            return torch.cat([emb, expand(y)], -1)
        return emb

    def _head(self, hid, y, z):
        steps = hid.shape[1]
        expand = lambda v: v.unsqueeze(1).expand(-1, steps, -1)  # noqa: E731
        if self.variant == "standard":
            hid = torch.cat([hid, expand(y)], -1)
        elif self.variant == "swap":
            hid = torch.cat([hid, expand(z)], -1)
        return self.head(hid)

    def forward(self, inputs, y, z, state=None):
        """Teacher-forced pass.  Returns ``(logits, hidden, state, input embeddings)``."""
        if state is None:
            state = self.init_state(y, z)
        emb = self.embed(inputs)
        hid, state = self.lstm(self._inputs(emb, y, z), state)
        return self._head(hid, y, z), hid, state, emb

    def step(self, prev, y, z, state):
        """One decoding step from previous ids ``(B,)``; returns ``(logits (B, V), state)``."""
        logits, _, state, _ = self.forward(prev.unsqueeze(1), y, z, state)
        return logits[:, 0], state


class VGVAE(nn.Module):
    def __init__(self, vocab_size: int, config: ModelConfig | None = None):
        super().__init__()
        self.config = cfg = config or ModelConfig()
        self.vocab_size = vocab_size
        self.sem_encoder = SemanticEncoder(vocab_size, cfg)
        self.syn_encoder = SyntacticEncoder(vocab_size, cfg)
        self.decoder = Decoder(vocab_size, cfg)
        wpl = cfg.wpl
        in_dims = {"enc_emb": cfg.emb_dim, "dec_emb": cfg.emb_dim, "dec_hidden": cfg.dec_hidden}
        self.wpl_heads = nn.ModuleDict({
            site: feedforward(in_dims[site] + cfg.syn_dim, cfg.ff_dim, wpl.max_position, wpl.layers)
            for site in wpl.sites()
        })

    # -- encoders --------------------------------------------------------
    def encode_semantic(self, ids, lengths) -> VmfParams:
        return self.sem_encoder(ids, lengths)

    def encode_syntactic(self, ids, lengths, return_embeddings: bool = False):
        params, emb = self.syn_encoder(ids, lengths)
        return (params, emb) if return_embeddings else params

    def sample_latents(self, sem: VmfParams, syn: GaussianParams, rng: np.random.Generator):
        return vmf_sample(sem, rng), gaussian_sample(syn, rng)

    # -- decoder ---------------------------------------------------------
    def init_decoder_state(self, y, z):
        return self.decoder.init_state(y, z)

    def decode_step(self, prev, y, z, state):
        return self.decoder.step(prev, y, z, state)

    def teacher_force(self, ids, lengths, y, z):
        """Run the decoder on ``<s> x``.  Returns ``(token log-probs (B,), logits, hidden, emb)``.

        ``hidden`` and ``emb`` are aligned with the real tokens of ``x`` (first T
        positions), which the word-position heads consume.
        """
        batch, width = ids.shape
        inputs = torch.cat([ids.new_full((batch, 1), BOS_ID), ids], 1)
        targets = torch.cat([ids, ids.new_full((batch, 1), PAD_ID)], 1)
        targets[torch.arange(batch), lengths] = EOS_ID
        logits, hid, _, emb = self.decoder(inputs, y, z)
        logp = torch.log_softmax(logits, -1).gather(-1, targets.unsqueeze(-1)).squeeze(-1)
        mask = length_mask(lengths + 1, width + 1)
        total = (logp * mask).sum(1)
        # drop the final step: index t holds the state that predicts token t
        return total, logits, hid[:, :width], emb[:, 1:]

    def reconstruction_log_prob(self, ids, lengths, y, z) -> torch.Tensor:
        """log p(x | y, z) per sentence, including the end-of-sentence token."""
        return self.teacher_force(ids, lengths, y, z)[0]

    # -- objectives ------------------------------------------------------
    def elbo_loss(self, ids, lengths, kl_weight_y: float, kl_weight_z: float,
                  rng: np.random.Generator):
        """Negative weighted ELBO averaged over the batch, as a LossBreakdown."""
        from .objectives import LossBreakdown

        if kl_weight_y < 0 or kl_weight_z < 0:
            raise ValueError("KL weights must be >= 0")
        sem = self.encode_semantic(ids, lengths)
        syn = self.encode_syntactic(ids, lengths)
        y, z = self.sample_latents(sem, syn, rng)
        rec = -self.reconstruction_log_prob(ids, lengths, y, z).mean()
        kl_y = vmf_kl_to_uniform(sem).mean()
        kl_z = gaussian_kl_to_std(syn).mean()
        return LossBreakdown.assemble(
            reconstruction=rec, kl_y=kl_y, kl_z=kl_z, prl=rec.new_zeros(()), wpl=rec.new_zeros(()),
            weights={"reconstruction": 1.0, "kl_y": kl_weight_y, "kl_z": kl_weight_z,
                     "prl": 0.0, "wpl": 0.0})

    # -- generation ------------------------------------------------------
    @torch.no_grad()
    def posterior_means(self, sem_ids, sem_lengths, syn_ids, syn_lengths):
        return (self.encode_semantic(sem_ids, sem_lengths).mu,
                self.encode_syntactic(syn_ids, syn_lengths).mu)

    @torch.no_grad()
    def greedy(self, y, z, max_len: int) -> list[list[int]]:
        """Batched argmax decoding; each output stops at EOS or ``max_len`` tokens."""
        if max_len < 1:
            raise ValueError("max_len must be >= 1")
        batch = y.shape[0]
        state = self.decoder.init_state(y, z)
        prev = torch.full((batch,), BOS_ID, dtype=torch.long)
        outs: list[list[int]] = [[] for _ in range(batch)]
        done = [False] * batch
        for _ in range(max_len):
            logits, state = self.decoder.step(prev, y, z, state)
            prev = torch.argmax(logits, -1)
            for i, tok in enumerate(prev.tolist()):
                if done[i]:
                    continue
                if tok == EOS_ID:
                    done[i] = True
                else:
                    outs[i].append(tok)
            if all(done):
                break
        return outs

    @torch.no_grad()
    def beam_search(self, y, z, beam_size: int, max_len: int) -> list[int]:
        """Beam search for one latent pair ``y (m,)``, ``z (d,)``.

        Hypotheses are scored by summed log-probability.  Each step keeps the
        ``beam_size`` best expansions; those ending in EOS are retired, and the
        search stops once no live hypothesis can beat the best retired one.
        Hypotheses that reach ``max_len`` tokens are retired as truncated.
        """
        if max_len < 1:
            raise ValueError("max_len must be >= 1")
        if beam_size < 1:
            raise ValueError("beam_size must be >= 1")
        y, z = y.reshape(1, -1), z.reshape(1, -1)
        state = self.decoder.init_state(y, z)
        live_tokens: list[list[int]] = [[]]
        live_scores = np.zeros(1)
        prev = torch.tensor([BOS_ID])
        finished: list[tuple[float, list[int]]] = []
        for step in range(max_len + 1):
            n = len(live_tokens)
            if step == max_len:
                finished.extend((float(s), t) for s, t in zip(live_scores, live_tokens))
                break
            logits, (h, c) = self.decoder.step(prev, y.expand(n, -1), z.expand(n, -1), state)
            logp = torch.log_softmax(logits.double(), -1).numpy()
            cand = (live_scores[:, None] + logp).reshape(-1)
            order = np.argsort(-cand, kind="stable")[:beam_size]
            keep_rows, keep_tokens, keep_scores, keep_prev = [], [], [], []
            for flat in order:
                row, tok = divmod(int(flat), self.vocab_size)
                if tok == EOS_ID:
                    finished.append((float(cand[flat]), live_tokens[row]))
                else:
                    keep_rows.append(row)
                    keep_tokens.append(live_tokens[row] + [tok])
                    keep_scores.append(cand[flat])
                    keep_prev.append(tok)
            if not keep_rows:
                break
            live_scores = np.asarray(keep_scores)
            if finished and max(s for s, _ in finished) >= live_scores.max():
                break
            idx = torch.as_tensor(keep_rows)
            state = (h[:, idx], c[:, idx])
            prev = torch.as_tensor(keep_prev)
            live_tokens = keep_tokens
        best = max(range(len(finished)), key=lambda i: (finished[i][0], -i))
        return finished[best][1]

    @torch.no_grad()
    def generate(self, y, z, mode: str = "greedy", max_len: int | None = None,
                 beam_size: int | None = None) -> list[list[int]]:
        """Decode a batch of latent pairs ``y (B, m)``, ``z (B, d)``."""
        max_len = self.config.max_len if max_len is None else max_len
        if max_len < 1:
            raise ValueError("max_len must be positive")
        if mode == "greedy":
            return self.greedy(y, z, max_len)
        if mode == "beam":
            k = self.config.beam_size if beam_size is None else beam_size
            if k < 1:
                raise ValueError("beam_size must be positive")
            return [self.beam_search(y[i], z[i], k, max_len) for i in range(y.shape[0])]
        raise ValueError(f"unknown decoding mode {mode!r}")

    @torch.no_grad()
    def transfer(self, semantic: Sequence[Sequence[int]], syntactic: Sequence[Sequence[int]],
                 mode: str = "greedy", max_len: int | None = None, beam_size: int | None = None):
        """Generate with semantics of ``semantic[i]`` and syntax of ``syntactic[i]``."""
        if len(semantic) != len(syntactic):
            raise ValueError("semantic and syntactic inputs differ in length")
        y, z = self.posterior_means(*batchify(semantic), *batchify(syntactic))
        return self.generate(y, z, mode, max_len, beam_size)

    # -- pretrained embeddings -------------------------------------------
    def load_pretrained(self, vectors: dict[str, np.ndarray], vocab: Vocabulary) -> int:
        """Copy matching vectors into every plain embedding table; returns hits."""
        tables = [self.sem_encoder.embed.weight, self.decoder.embed.weight]
        if isinstance(self.syn_encoder.embed, CodeEmbedding):
            tables.append(self.syn_encoder.embed.base.weight)
        else:
            tables.append(self.syn_encoder.embed.weight)
        hits = 0
        with torch.no_grad():
            for tok, vec in vectors.items():
                idx = vocab.stoi.get(tok)
                if idx is None or idx < 4:
                    continue
                hit = False
                for w in tables:
                    if w.shape[1] == len(vec):
                        w[idx] = torch.as_tensor(vec, dtype=w.dtype)
                        hit = True
                hits += hit
        return hits


def read_embedding_file(path) -> dict[str, np.ndarray]:
    """Parse ``token v1 ... vn`` lines."""
    vectors = {}
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, 1):
            parts = line.rstrip("\n").split(" ")
            if len(parts) < 2:
                continue
            try:
                vectors[parts[0]] = np.asarray([float(v) for v in parts[1:]])
            except ValueError as err:
                raise ValueError(f"{path}:{lineno}: bad embedding line") from err
    return vectors
