"""Minibatch training with dev-BLEU early stopping and checkpointing."""
from __future__ import annotations

import json
import logging
import math
import os
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Optional, Sequence

import numpy as np
import torch

from .checkpoint import save_checkpoint
from .config import LossWeights, ModelConfig
from .data import (EvalTriple, NoiseModel, ParaphrasePair, build_pos_groups, build_vocabulary,
                   filter_by_bleu, load_eval_triples, load_paraphrase_corpus, load_tagged_corpus,
                   noise_sentence)
from .metrics.text import bleu_corpus
from .model import VGVAE, batchify, read_embedding_file
from .objectives import PairBatch, append_loss_csv, total_loss
from .vocab import Vocabulary

log = logging.getLogger(__name__)

SEED_ENV = "VGVAE_SEED"
CHECKPOINT_NAME = "model.safetensors"


@dataclass
class TrainConfig:
    train_pairs: Optional[str] = None
    dev_triples: Optional[str] = None
    tagged_corpus: Optional[str] = None
    pretrained_embeddings: Optional[str] = None
    output_dir: str = "run"
    model: ModelConfig = field(default_factory=ModelConfig)
    weights: LossWeights = field(default_factory=LossWeights)
    noise_p: float = 0.0
    optimizer: str = "adam"
    lr: float = 1e-3
    batch_size: int = 32
    max_steps: int = 10000
    eval_interval: int = 500
    patience: int = 5
    grad_clip: float = 5.0
    seed: int = 0
    min_count: int = 1
    max_bleu: Optional[float] = None
    lowercase: bool = True
    dtype: str = "float32"

    def check_paths(self):
        for name in ("train_pairs", "dev_triples", "tagged_corpus", "pretrained_embeddings"):
            p = getattr(self, name)
            if p is not None and not os.path.exists(p):
                raise FileNotFoundError(f"{name}: {p} does not exist")
        if self.train_pairs is None:
            raise ValueError("train_pairs is required")
        if self.noise_p > 0 and self.tagged_corpus is None:
            raise ValueError("word noising needs a tagged corpus")


# -- flat key=value config files ------------------------------------------

_WEIGHT_KEYS = {"kl_weight_y": "kl_y", "kl_weight_z": "kl_z", "prl_weight": "prl", "wpl_weight": "wpl"}


def _coerce(raw: str, default):
    if default is None and raw.lower() in ("none", "null", ""):
        return None
    if isinstance(default, bool):
        if raw.lower() not in ("1", "0", "true", "false", "yes", "no"):
            raise ValueError(f"not a boolean: {raw!r}")
        return raw.lower() in ("1", "true", "yes")
    if isinstance(default, int):
        return int(raw)
    if isinstance(default, float) or default is None and _looks_numeric(raw):
        return float(raw)
    return raw


def _looks_numeric(raw: str) -> bool:
    try:
        float(raw)
        return True
    except ValueError:
        return False


def config_keys() -> list[str]:
    top = [f.name for f in fields(TrainConfig) if f.name not in ("model", "weights")]
    return top + [f.name for f in fields(ModelConfig)] + list(_WEIGHT_KEYS)


def apply_overrides(cfg: TrainConfig, values: dict) -> TrainConfig:
    model_d = cfg.model.to_dict()
    weights_d = {f.name: getattr(cfg.weights, f.name) for f in fields(LossWeights)}
    top_defaults = {f.name: getattr(cfg, f.name) for f in fields(TrainConfig)}
    path_keys = {"train_pairs", "dev_triples", "tagged_corpus", "pretrained_embeddings", "output_dir"}
    for key, raw in values.items():
        if key in _WEIGHT_KEYS:
            weights_d[_WEIGHT_KEYS[key]] = float(raw)
        elif key in model_d:
            model_d[key] = _coerce(str(raw), model_d[key]) if isinstance(raw, str) else raw
        elif key in top_defaults and key not in ("model", "weights"):
            if not isinstance(raw, str):
                setattr(cfg, key, raw)
            elif key in path_keys:
                setattr(cfg, key, None if raw.lower() == "none" else raw)
            elif key == "max_bleu":
                setattr(cfg, key, None if raw.lower() == "none" else float(raw))
            else:
                setattr(cfg, key, _coerce(raw, top_defaults[key]))
        else:
            raise KeyError(f"unknown config key {key!r}")
    cfg.model = ModelConfig.from_dict(model_d)
    cfg.weights = LossWeights(**weights_d)
    return cfg


def read_config_file(path) -> dict[str, str]:
    """``key = value`` lines; ``#`` starts a comment."""
    out = {}
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            key, sep, value = line.partition("=")
            if not sep:
                raise ValueError(f"{path}:{lineno}: expected key = value")
            out[key.strip()] = value.strip()
    return out


def resolve_seed(seed: int) -> int:
    env = os.environ.get(SEED_ENV)
    return int(env) if env not in (None, "") else seed


# -- evaluation helpers -----------------------------------------------------

def _chunks(items, size):
    for i in range(0, len(items), size):
        yield items[i:i + size]


@torch.no_grad()
def transfer_tokens(model: VGVAE, vocab: Vocabulary, semantic: Sequence[Sequence[str]],
                    syntactic: Sequence[Sequence[str]], mode: str = "greedy",
                    batch_size: int = 128) -> list[list[str]]:
    out = []
    pairs = list(zip(semantic, syntactic))
    for chunk in _chunks(pairs, batch_size):
        ids = model.transfer([vocab.encode(s) for s, _ in chunk], [vocab.encode(t) for _, t in chunk],
                             mode=mode)
        out += [vocab.decode(i) for i in ids]
    return out


def dev_bleu(model: VGVAE, vocab: Vocabulary, triples: Sequence[EvalTriple]) -> float:
    outs = transfer_tokens(model, vocab, [t.semantic_input for t in triples],
                           [t.syntactic_input for t in triples])
    return bleu_corpus(outs, [t.reference for t in triples])


def token_accuracy(outputs: Sequence[Sequence], references: Sequence[Sequence]) -> float:
    """Position-wise matches over the longer of output and reference, pooled."""
    hit = total = 0
    for o, r in zip(outputs, references):
        hit += sum(a == b for a, b in zip(o, r))
        total += max(len(o), len(r))
    return hit / total if total else 1.0


def reconstruction_accuracy(model: VGVAE, vocab: Vocabulary, sentences: Sequence[Sequence[str]]) -> float:
    """Greedy self-reconstruction token accuracy from the sentence's own posterior means."""
    outs = transfer_tokens(model, vocab, sentences, sentences)
    return token_accuracy(outs, [vocab.decode(vocab.encode(s)) for s in sentences])


# -- training -----------------------------------------------------------------

@dataclass
class TrainResult:
    model: VGVAE
    vocab: Vocabulary
    checkpoint: Optional[Path]
    losses: list[dict]
    evals: list[dict]
    best_bleu: Optional[float]


def build_model(vocab_size: int, cfg: TrainConfig) -> VGVAE:
    torch.manual_seed(cfg.seed)
    return VGVAE(vocab_size, cfg.model).to(getattr(torch, cfg.dtype))


def _make_optimizer(model, cfg: TrainConfig):
    name = cfg.optimizer.lower()
    if name == "adam":
        return torch.optim.Adam(model.parameters(), lr=cfg.lr)
    if name == "sgd":
        return torch.optim.SGD(model.parameters(), lr=cfg.lr)
    raise ValueError(f"unknown optimizer {cfg.optimizer!r}")


def _dump_batch(path: Path, step: int, batch_tokens, breakdown):
    with open(path, "w", encoding="utf-8") as f:
        f.write(f"step {step}\n{json.dumps(breakdown.as_floats())}\n")
        for a, b in batch_tokens:
            f.write(" ".join(a) + "\t" + " ".join(b) + "\n")


def train_model(pairs: Sequence[ParaphrasePair], cfg: TrainConfig, vocab: Optional[Vocabulary] = None,
                noise: Optional[NoiseModel] = None, dev: Optional[Sequence[EvalTriple]] = None,
                model: Optional[VGVAE] = None, output_dir=None, log_csv: bool = True) -> TrainResult:
    """Train on in-memory pairs.

    With ``dev`` triples, the model is scored by greedy dev BLEU every
    ``eval_interval`` steps; only strict improvements are checkpointed and
    training stops after ``patience`` evaluations without one.  Without dev
    data the final parameters are kept.
    """
    seed = cfg.seed
    rng = np.random.default_rng(seed)
    vocab = vocab or build_vocabulary(pairs, cfg.min_count)
    model = model or build_model(len(vocab), cfg)
    out_dir = Path(output_dir or cfg.output_dir) if (output_dir or cfg.output_dir) else None
    if out_dir is not None:
        out_dir.mkdir(parents=True, exist_ok=True)
    ckpt = out_dir / CHECKPOINT_NAME if out_dir is not None else None
    csv_path = out_dir / "losses.csv" if out_dir is not None and log_csv else None
    if csv_path is not None and csv_path.exists():
        csv_path.unlink()

    max_pos = cfg.model.wpl_max_position
    usable = [p for p in pairs if len(p.sentence_a) <= max_pos and len(p.sentence_b) <= max_pos]
    if not usable:
        raise ValueError("no training pairs within the maximum position")
    encoded = [(vocab.encode(p.sentence_a), vocab.encode(p.sentence_b)) for p in usable]

    opt = _make_optimizer(model, cfg)
    losses, evals = [], []
    best = -math.inf
    bad_evals = 0
    order = np.empty(0, dtype=np.int64)
    cursor = 0

    if cfg.max_steps == 0 and ckpt is not None:
        save_checkpoint(ckpt, model, vocab, {"step": 0})

    for step in range(1, cfg.max_steps + 1):
        if cursor >= len(order):
            order = rng.permutation(len(encoded))
            cursor = 0
        idx = order[cursor:cursor + cfg.batch_size]
        cursor += cfg.batch_size
        a = [encoded[i][0] for i in idx]
        b = [encoded[i][1] for i in idx]
        syn_a = syn_b = None
        if noise is not None and noise.p > 0:
            syn_a = [vocab.encode(noise_sentence(usable[i].sentence_a, noise, rng)) for i in idx]
            syn_b = [vocab.encode(noise_sentence(usable[i].sentence_b, noise, rng)) for i in idx]
        batch = PairBatch.from_lists(a, b, syn_a, syn_b)

        model.train()
        breakdown = total_loss(model, batch, cfg.weights, rng)
        if not torch.isfinite(breakdown.total):
            if out_dir is not None:
                _dump_batch(out_dir / "nonfinite_batch.txt", step,
                            [(usable[i].sentence_a, usable[i].sentence_b) for i in idx], breakdown)
            raise FloatingPointError(f"non-finite loss at step {step}: {breakdown.as_floats()}")
        opt.zero_grad()
        breakdown.total.backward()
        if cfg.grad_clip and cfg.grad_clip > 0:
            torch.nn.utils.clip_grad_norm_(model.parameters(), cfg.grad_clip)
        opt.step()
        rec = dict(step=step, **breakdown.as_floats())
        losses.append(rec)
        if csv_path is not None:
            append_loss_csv(csv_path, step, breakdown)

        if dev and step % cfg.eval_interval == 0:
            model.eval()
            score = dev_bleu(model, vocab, dev)
            evals.append({"step": step, "dev_bleu": score})
            log.info("step %d dev BLEU %.2f", step, score)
            if score > best:
                best = score
                bad_evals = 0
                if ckpt is not None:
                    save_checkpoint(ckpt, model, vocab, {"step": step, "dev_bleu": score})
            else:
                bad_evals += 1
                if bad_evals >= cfg.patience:
                    log.info("early stop at step %d", step)
                    break

    if ckpt is not None and (not dev or not evals) and cfg.max_steps > 0:
        save_checkpoint(ckpt, model, vocab, {"step": len(losses)})
    if out_dir is not None:
        with open(out_dir / "evals.json", "w", encoding="utf-8") as f:
            json.dump(evals, f, indent=1)
    if dev and evals and ckpt is not None:
        from .checkpoint import load_checkpoint
        model, vocab, _ = load_checkpoint(ckpt)
    model.eval()
    return TrainResult(model, vocab, ckpt, losses, evals, best if evals else None)


def train(cfg: TrainConfig) -> Path:
    """Train from the files named in ``cfg``; returns the checkpoint path."""
    cfg.seed = resolve_seed(cfg.seed)
    cfg.check_paths()
    pairs = load_paraphrase_corpus(cfg.train_pairs, cfg.lowercase)
    if cfg.max_bleu is not None:
        kept = filter_by_bleu(pairs, cfg.max_bleu)
        log.info("BLEU filter kept %d of %d pairs", len(kept), len(pairs))
        pairs = kept
    vocab = build_vocabulary(pairs, cfg.min_count)
    noise = None
    if cfg.tagged_corpus:
        noise = build_pos_groups(load_tagged_corpus(cfg.tagged_corpus, cfg.lowercase), cfg.noise_p)
    dev = load_eval_triples(cfg.dev_triples, lowercase=cfg.lowercase) if cfg.dev_triples else None
    model = build_model(len(vocab), cfg)
    if cfg.pretrained_embeddings:
        hits = model.load_pretrained(read_embedding_file(cfg.pretrained_embeddings), vocab)
        log.info("initialized %d embeddings from %s", hits, cfg.pretrained_embeddings)
    result = train_model(pairs, cfg, vocab=vocab, noise=noise, dev=dev, model=model)
    return result.checkpoint


__all__ = ["TrainConfig", "TrainResult", "train", "train_model", "transfer_tokens", "dev_bleu",
           "reconstruction_accuracy", "token_accuracy", "apply_overrides", "read_config_file",
           "batchify"]
