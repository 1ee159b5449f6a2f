import itertools
import math

import pytest
import torch

from vgvae.latent_codes import (CodeEmbedding, CodeEmbeddingConfig, cluster_assign, cluster_report,
                                code_distributions, code_embed, format_cluster_id, write_cluster_report)
from vgvae.vocab import Vocabulary


def layer(vocab=12, **kw):
    torch.manual_seed(0)
    cfg = CodeEmbeddingConfig(**{"num_codes": 3, "classes_per_code": 2, "total_dim": 6, "base_dim": 5, **kw})
    return CodeEmbedding(vocab, cfg).double()


def test_config_invariants():
    with pytest.raises(ValueError):
        CodeEmbeddingConfig(classes_per_code=1)
    with pytest.raises(ValueError):
        CodeEmbeddingConfig(num_codes=3, total_dim=100)
    c = CodeEmbeddingConfig()
    assert c.num_codes * c.code_dim == c.total_dim == 100
    single = CodeEmbeddingConfig(num_codes=1, classes_per_code=50)
    assert single.code_dim == 100


def test_distributions_are_softmaxes():
    lay = layer()
    for w in range(12):
        dists = code_distributions(lay, w)
        assert len(dists) == 3
        for d in dists:
            assert abs(d.sum().item() - 1) < 1e-6
            assert torch.all((d > 0) & (d < 1))
        again = code_distributions(lay, w)
        assert all(torch.equal(a, b) for a, b in zip(dists, again))


def test_marginal_of_one_hot_and_uniform():
    lay = layer()
    v = lay.cluster_vectors.detach()
    one_hot = torch.zeros(3, 2, dtype=torch.float64)
    one_hot[0, 1] = one_hot[1, 0] = one_hot[2, 1] = 1
    out = CodeEmbedding.marginalize(one_hot, v)
    assert torch.equal(out, torch.cat([v[0, 1], v[1, 0], v[2, 1]]))
    uniform = torch.full((3, 2), 0.5, dtype=torch.float64)
    out = CodeEmbedding.marginalize(uniform, v)
    assert torch.allclose(out, v.mean(1).reshape(-1))


def test_marginal_matches_joint_enumeration():
    lay = layer(num_codes=2, classes_per_code=2, total_dim=4)
    for w in range(12):
        probs = [d.detach() for d in code_distributions(lay, w)]
        v = lay.cluster_vectors.detach()
        brute = torch.zeros(4, dtype=torch.float64)
        for joint in itertools.product(range(2), repeat=2):
            weight = math.prod(probs[k][c].item() for k, c in enumerate(joint))
            brute += weight * torch.cat([v[k, c] for k, c in enumerate(joint)])
        assert torch.allclose(code_embed(lay, w).detach(), brute, atol=1e-12)


def test_blocks_are_convex_combinations():
    lay = layer(classes_per_code=4, total_dim=6)
    probs = lay.code_distributions(torch.arange(12)).detach()
    assert torch.all(probs >= 0) and torch.all(probs <= 1)
    assert torch.allclose(probs.sum(-1), torch.ones(12, 3, dtype=probs.dtype))
    emb = lay(torch.arange(12)).detach().view(12, 3, 2)
    v = lay.cluster_vectors.detach()
    for k in range(3):
        lo, hi = v[k].min(0).values, v[k].max(0).values
        assert torch.all(emb[:, k] >= lo - 1e-12) and torch.all(emb[:, k] <= hi + 1e-12)
    recon = torch.einsum("wkc,kcd->wkd", probs, v)
    assert torch.allclose(recon, emb)


def test_cluster_assign_properties():
    lay = layer()
    with torch.no_grad():
        lay.b2.zero_()
        lay.w2.zero_()
        lay.b2[0, 1] = 5.0
        lay.b2[2, 1] = 5.0
    assert cluster_assign(lay, 4) == (1, 0, 1)  # code 1 is a tie and goes to index 0
    before = lay.cluster_assign(torch.arange(12))
    with torch.no_grad():
        lay.w2.mul_(3.0)
        lay.b2.mul_(3.0)
    assert torch.equal(before, lay.cluster_assign(torch.arange(12)))
    lay = layer(vocab=300)
    ids = {tuple(r) for r in lay.cluster_assign(torch.arange(300)).tolist()}
    assert len(ids) <= 2 ** 3


def test_code_embed_gradients():
    lay = layer()
    ids = torch.tensor([4, 7, 7, 11])
    w = torch.randn(4, 6, dtype=torch.float64, generator=torch.Generator().manual_seed(2))
    for param in (lay.base.weight, lay.cluster_vectors):
        def f():
            return (lay(ids) * w).sum()
        lay.zero_grad()
        f().backward()
        grad = param.grad.clone().view(-1)
        flat = param.data.view(-1)
        for i in range(0, flat.numel(), max(1, flat.numel() // 25)):
            old = flat[i].item()
            with torch.no_grad():
                flat[i] = old + 1e-6
                up = f().item()
                flat[i] = old - 1e-6
                down = f().item()
                flat[i] = old
            fd = (up - down) / 2e-6
            assert abs(fd - grad[i].item()) / max(abs(fd), abs(grad[i].item()), 1e-7) < 1e-3


def test_cluster_report_partition_and_determinism(tmp_path):
    vocab = Vocabulary([f"w{i}" for i in range(40)])
    lay = layer(vocab=len(vocab))
    report = cluster_report(lay, vocab, samples=3)
    assert sum(size for _, size, _ in report) == 40
    sizes = [size for _, size, _ in report]
    assert sizes == sorted(sizes, reverse=True)
    assert all(len(s) <= 3 for _, _, s in report)
    assert report == cluster_report(lay, vocab, samples=3)
    write_cluster_report(report, tmp_path / "r.tsv")
    lines = (tmp_path / "r.tsv").read_text().splitlines()
    assert len(lines) == len(report)
    cid, size, words = lines[0].split("\t")
    assert cid == format_cluster_id(report[0][0]) and int(size) == report[0][1]
    assert words.split() == report[0][2]
