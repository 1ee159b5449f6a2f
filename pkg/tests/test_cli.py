import numpy as np
import pytest
import torch

from conftest import tiny_model
from vgvae.checkpoint import load_checkpoint, save_checkpoint
from vgvae.cli import main
from vgvae.data import build_vocabulary
from vgvae.synthetic import SyntheticGrammar


@pytest.fixture(scope="module")
def files(tmp_path_factory):
    d = tmp_path_factory.mktemp("cli")
    g = SyntheticGrammar()
    pairs, real = g.paraphrase_pairs(40, np.random.default_rng(0))
    crossed = g.crossed_inputs(6, np.random.default_rng(1))
    (d / "pairs.tsv").write_text("".join(f"{' '.join(p.sentence_a)}\t{' '.join(p.sentence_b)}\n" for p in pairs))
    (d / "tagged.txt").write_text("".join(" ".join(f"{w}_{t}" for w, t in zip(r.tokens, r.tags)) + "\n"
                                          for r in real))
    (d / "parses.txt").write_text("".join(r.parse + "\n" for r in real))
    (d / "sem.txt").write_text("".join(" ".join(x.tokens) + "\n" for x, _, _ in crossed))
    (d / "syn.txt").write_text("".join(" ".join(y.tokens) + "\n" for _, y, _ in crossed))
    (d / "triples.tsv").write_text("".join(f"{' '.join(x.tokens)}\t{' '.join(y.tokens)}\t{' '.join(r.tokens)}\n"
                                           for x, y, r in crossed))
    (d / "refs.txt").write_text("".join(" ".join(r.tokens) + "\n" for _, _, r in crossed))
    (d / "ref_parses.txt").write_text("".join(r.parse + "\n" for _, _, r in crossed))
    sim = g.similarity_pairs(20, np.random.default_rng(2))
    (d / "sim.tsv").write_text("".join(f"{' '.join(a)}\t{' '.join(b)}\t{s}\n" for a, b, s in sim))
    vocab = build_vocabulary(pairs)
    save_checkpoint(d / "plain.safetensors", tiny_model(vocab_size=len(vocab), dtype=torch.float32), vocab)
    save_checkpoint(d / "codes.safetensors",
                    tiny_model(vocab_size=len(vocab), dtype=torch.float32, use_codes=True, num_codes=3,
                               code_base_dim=5), vocab)
    return d


def test_train_writes_checkpoint(files, capsys):
    cfg = files / "t.cfg"
    cfg.write_text("emb_dim = 8\nsem_dim = 4\nsyn_dim = 4\nbatch_size = 4\nmax_steps = 50\n")
    out = files / "run"
    rc = main(["train", "--config", str(cfg), "--train-pairs", str(files / "pairs.tsv"),
               "--dev-triples", str(files / "triples.tsv"), "--tagged-corpus", str(files / "tagged.txt"),
               "--noise-p", "0.2", "--max-steps", "4", "--output-dir", str(out), "--variant", "init"])
    assert rc == 0
    path = capsys.readouterr().out.strip()
    model, _, extra = load_checkpoint(path)
    assert model.config.variant == "init" and model.config.emb_dim == 8 and extra["step"] == 4
    assert (out / "losses.csv").exists()


def test_train_missing_file_is_an_error(files, capsys):
    assert main(["train", "--train-pairs", str(files / "nope.tsv")]) == 2
    assert "nope.tsv" in capsys.readouterr().err


def test_generate_and_evaluate(files, capsys):
    out = files / "out.txt"
    assert main(["generate", str(files / "plain.safetensors"), str(files / "sem.txt"), str(files / "syn.txt"),
                 "-o", str(out)]) == 0
    assert len(out.read_text().splitlines()) == 6
    assert main(["generate", str(files / "plain.safetensors"), str(files / "sem.txt"), str(files / "syn.txt"),
                 "--mode", "beam"]) == 0
    assert len(capsys.readouterr().out.splitlines()) == 6
    kv = files / "m.kv"
    assert main(["evaluate", str(files / "refs.txt"), str(files / "triples.tsv"),
                 "--output-parses", str(files / "ref_parses.txt"),
                 "--reference-parses", str(files / "ref_parses.txt"), "--kv", str(kv)]) == 0
    table = capsys.readouterr().out
    assert "100.0" in table
    metrics = dict(line.split("=", 1) for line in kv.read_text().splitlines())
    assert float(metrics["bleu"]) == pytest.approx(100.0) and float(metrics["st"]) == 0.0


def test_generate_line_mismatch(files, tmp_path):
    short = tmp_path / "short.txt"
    short.write_text("the dog chased a cat quickly .\n")
    with pytest.raises(SystemExit, match="1 semantic lines but 6"):
        main(["generate", str(files / "plain.safetensors"), str(short), str(files / "syn.txt")])


def test_mine_exemplars(files, capsys):
    assert main(["mine-exemplars", str(files / "tagged.txt"), str(files / "tagged.txt"), "-k", "3"]) == 0
    rows = [line.split("\t") for line in capsys.readouterr().out.splitlines()]
    assert len(rows) == 80 * 3
    first = [r for r in rows if r[0] == "0"]
    assert [r[1] for r in first] == ["1", "2", "3"]
    scores = [float(r[2]) for r in first]
    assert scores == sorted(scores, reverse=True)


def test_inspect_clusters(files, capsys):
    with pytest.raises(SystemExit, match="without latent codes"):
        main(["inspect-clusters", str(files / "plain.safetensors")])
    assert main(["inspect-clusters", str(files / "codes.safetensors"), "--samples", "2"]) == 0
    rows = [line.split("\t") for line in capsys.readouterr().out.splitlines()]
    _, vocab, _ = load_checkpoint(files / "codes.safetensors")
    assert sum(int(r[1]) for r in rows) == len(vocab.content_tokens())


def test_encoder_eval(files, capsys):
    assert main(["encoder-eval", str(files / "plain.safetensors"), "--similarity", str(files / "sim.tsv"),
                 "--test-tagged", str(files / "tagged.txt"), "--test-parses", str(files / "parses.txt"),
                 "--pool-tagged", str(files / "tagged.txt"), "--pool-parses", str(files / "parses.txt")]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0].split() == ["probe", "semantic", "syntactic", "random"]
    assert [line.split()[0] for line in lines[1:]] == ["similarity", "1-NN", "1-NN"]
    with pytest.raises(SystemExit):
        main(["encoder-eval", str(files / "plain.safetensors")])


def test_noise_preview(files, capsys):
    assert main(["noise-preview", str(files / "tagged.txt"), "-p", "1.0", "-n", "4", "--samples", "2"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert len(lines) == 8
    for line in lines:
        clean, noised = (s.split() for s in line.split("\t"))
        assert len(clean) == len(noised)
    assert main(["noise-preview", str(files / "tagged.txt"), "-p", "0", "-n", "2"]) == 0
    for line in capsys.readouterr().out.splitlines():
        a, b = line.split("\t")
        assert a == b
