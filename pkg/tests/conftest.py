import numpy as np
import pytest
import torch

from vgvae.config import ModelConfig
from vgvae.model import VGVAE
from vgvae.vocab import Vocabulary

ACCEPTANCE_RESULTS: dict[int, str] = {}


def tiny_config(**kw) -> ModelConfig:
    base = dict(emb_dim=6, sem_dim=4, syn_dim=4, enc_hidden=5, dec_hidden=5, ff_dim=6,
                wpl_max_position=12, max_len=12, beam_size=3)
    base.update(kw)
    return ModelConfig(**base)


def tiny_model(vocab_size=12, seed=0, dtype=torch.float64, **kw) -> VGVAE:
    torch.manual_seed(seed)
    return VGVAE(vocab_size, tiny_config(**kw)).to(dtype)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def toy_vocab():
    return Vocabulary("the cat dog sat ran on mat a".split())


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE_RESULTS):
        terminalreporter.write_line(ACCEPTANCE_RESULTS[k])
