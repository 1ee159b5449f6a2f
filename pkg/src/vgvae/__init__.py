"""Paraphrase generation controlled by a syntactic exemplar sentence.

A vMF latent carries sentence meaning and a Gaussian latent carries syntax;
decoding with the meaning of one sentence and the syntax of another yields
a paraphrase shaped like the exemplar.
"""
from .checkpoint import load_checkpoint, save_checkpoint
from .config import LossWeights, ModelConfig, WplConfig
from .model import VGVAE
from .vocab import Vocabulary

__version__ = "0.1.0"

__all__ = ["VGVAE", "LossWeights", "ModelConfig", "Vocabulary", "WplConfig", "load_checkpoint",
           "save_checkpoint"]
