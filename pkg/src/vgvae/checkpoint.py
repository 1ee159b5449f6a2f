"""Single-file checkpoints: safetensors tensors plus JSON metadata holding the
format tag, model configuration and vocabulary.

All metadata lives under one header key as sorted JSON, because safetensors
writes multi-key metadata in hash order and the file would not be byte-stable.
"""
from __future__ import annotations

import json
from typing import Optional

import torch
from safetensors import safe_open
from safetensors.torch import save_file

from .config import ModelConfig
from .model import VGVAE
from .vocab import RESERVED, Vocabulary

FORMAT_TAG = "vgvae-checkpoint/1"
META_KEY = "vgvae"


class CheckpointError(ValueError):
    pass


def save_checkpoint(path, model: VGVAE, vocab: Vocabulary, extra: Optional[dict] = None):
    if len(vocab) != model.vocab_size:
        raise CheckpointError("vocabulary size does not match the model")
    tensors = {k: v.detach().contiguous().clone() for k, v in model.state_dict().items()}
    meta = {
        "format": FORMAT_TAG,
        "config": model.config.to_dict(),
        "vocab": vocab.itos,
        "dtype": str(next(model.parameters()).dtype).replace("torch.", ""),
        "extra": extra or {},
    }
    save_file(tensors, str(path), metadata={META_KEY: json.dumps(meta, sort_keys=True)})


def load_checkpoint(path):
    """Returns ``(model, vocab, extra)``; raises CheckpointError on any inconsistency."""
    with safe_open(str(path), framework="pt") as f:
        try:
            meta = json.loads((f.metadata() or {})[META_KEY])
        except (KeyError, json.JSONDecodeError) as err:
            raise CheckpointError(f"{path}: missing or unreadable metadata") from err
        if meta.get("format") != FORMAT_TAG:
            raise CheckpointError(f"{path}: not a {FORMAT_TAG} file")
        tensors = {k: f.get_tensor(k) for k in f.keys()}
    itos = meta["vocab"]
    if tuple(itos[: len(RESERVED)]) != RESERVED:
        raise CheckpointError("reserved vocabulary entries are corrupted")
    vocab = Vocabulary(itos[len(RESERVED):])
    config = ModelConfig.from_dict(meta["config"])
    model = VGVAE(len(vocab), config).to(getattr(torch, meta.get("dtype", "float32")))
    expected = model.state_dict()
    if set(expected) != set(tensors):
        missing = sorted(set(expected) ^ set(tensors))
        raise CheckpointError(f"parameter set mismatch: {missing[:5]}")
    for k, v in tensors.items():
        if tuple(v.shape) != tuple(expected[k].shape):
            raise CheckpointError(f"{k}: shape {tuple(v.shape)} != expected {tuple(expected[k].shape)}")
    model.load_state_dict(tensors)
    model.eval()
    return model, vocab, meta.get("extra", {})
