"""Command-line entry point: ``vgvae <subcommand> ...``."""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from . import data
from .checkpoint import load_checkpoint
from .config import DECODER_VARIANTS, WPL_PLACEMENTS
from .latent_codes import CodeEmbedding, cluster_report, write_cluster_report
from .metrics.probes import (AnnotatedSentence, encoder_similarity_eval, nn_syntactic_eval,
                             random_retrieval_baseline)
from .metrics.report import evaluate_outputs
from .metrics.trees import parse_bracketed
from .training import (TrainConfig, apply_overrides, read_config_file, resolve_seed, train,
                       transfer_tokens)

log = logging.getLogger("vgvae")


def _write_lines(path, lines):
    with open(path, "w", encoding="utf-8") as f:
        for line in lines:
            f.write(line + "\n")


def _sentences(path, lowercase=True):
    return [data.split_sentence(line, lowercase) for line in data.read_lines(path)]


# -- train --------------------------------------------------------------------

_TRAIN_FLAGS = {
    # flag: (config key, type)
    "train_pairs": str, "dev_triples": str, "tagged_corpus": str, "pretrained_embeddings": str,
    "output_dir": str, "noise_p": float, "optimizer": str, "lr": float, "batch_size": int,
    "max_steps": int, "eval_interval": int, "patience": int, "grad_clip": float, "seed": int,
    "min_count": int, "max_bleu": float, "variant": str, "wpl_placement": str,
    "wpl_max_position": int, "use_codes": str, "emb_dim": int, "sem_dim": int, "syn_dim": int,
    "kl_weight_y": float, "kl_weight_z": float, "prl_weight": float, "wpl_weight": float,
}


def cmd_train(args) -> int:
    values = read_config_file(args.config) if args.config else {}
    for key in _TRAIN_FLAGS:
        v = getattr(args, key)
        if v is not None:
            values[key] = str(v)
    cfg = apply_overrides(TrainConfig(), values)
    ckpt = train(cfg)
    print(ckpt)
    return 0


# -- generate -------------------------------------------------------------------

def cmd_generate(args) -> int:
    model, vocab, _ = load_checkpoint(args.checkpoint)
    sem = _sentences(args.semantic)
    syn = _sentences(args.syntactic)
    if len(sem) != len(syn):
        raise SystemExit(f"error: {len(sem)} semantic lines but {len(syn)} syntactic lines")
    if any(not s for s in sem + syn):
        raise SystemExit("error: empty input line")
    outs = transfer_tokens(model, vocab, sem, syn, mode=args.mode)
    lines = [" ".join(o) for o in outs]
    if args.output:
        _write_lines(args.output, lines)
    else:
        sys.stdout.write("".join(line + "\n" for line in lines))
    return 0


# -- evaluate -------------------------------------------------------------------

def cmd_evaluate(args) -> int:
    outputs = _sentences(args.outputs)
    triples = data.load_eval_triples(args.triples)
    if len(outputs) != len(triples):
        raise SystemExit(f"error: {len(outputs)} outputs but {len(triples)} eval triples")
    out_p = data.read_lines(args.output_parses) if args.output_parses else None
    ref_p = data.read_lines(args.reference_parses) if args.reference_parses else None
    report = evaluate_outputs(outputs, [t.reference for t in triples], out_p, ref_p)
    sys.stdout.write(report.to_table(args.name))
    if args.kv:
        Path(args.kv).write_text(report.to_kv(), encoding="utf-8")
    return 0


# -- mine-exemplars ---------------------------------------------------------------

def cmd_mine(args) -> int:
    queries = data.load_tagged_corpus(args.queries)
    pool = data.load_tagged_corpus(args.pool)
    lines = []
    for qi, q in enumerate(queries):
        for rank, (score, cand) in enumerate(data.mine_syntactic_exemplars(q, pool, args.k, args.lam), 1):
            lines.append(f"{qi}\t{rank}\t{score:.6f}\t{' '.join(cand.tokens)}")
    if args.output:
        _write_lines(args.output, lines)
    else:
        sys.stdout.write("".join(line + "\n" for line in lines))
    return 0


# -- inspect-clusters ---------------------------------------------------------------

def cmd_inspect(args) -> int:
    model, vocab, _ = load_checkpoint(args.checkpoint)
    layer = model.syn_encoder.embed
    if not isinstance(layer, CodeEmbedding):
        raise SystemExit("error: checkpoint was trained without latent codes (use_codes=false)")
    report = cluster_report(layer, vocab, args.samples)
    if args.output:
        write_cluster_report(report, args.output)
    else:
        write_cluster_report(report, sys.stdout)
    return 0


# -- encoder-eval -------------------------------------------------------------------

def load_annotated(tagged_path, parse_path) -> list[AnnotatedSentence]:
    tagged = data.load_tagged_corpus(tagged_path)
    parses = data.read_lines(parse_path)
    if len(parses) != len(tagged):
        raise SystemExit(f"error: {parse_path} has {len(parses)} lines for {len(tagged)} sentences")
    return [AnnotatedSentence(t.tokens, t.tags, parse_bracketed(p)) for t, p in zip(tagged, parses)]


def cmd_encoder_eval(args) -> int:
    model, vocab, _ = load_checkpoint(args.checkpoint)
    rows = []
    if args.similarity:
        items = data.load_scored_pairs(args.similarity)
        rows.append(("similarity pearson", *(encoder_similarity_eval(model, vocab, items, w)
                                              for w in ("semantic", "syntactic"))))
    if args.test_tagged:
        if not (args.test_parses and args.pool_tagged and args.pool_parses):
            raise SystemExit("error: 1-NN probes need --test-parses, --pool-tagged and --pool-parses")
        test = load_annotated(args.test_tagged, args.test_parses)
        pool = load_annotated(args.pool_tagged, args.pool_parses)
        sem = nn_syntactic_eval(model, vocab, test, pool, "semantic")
        syn = nn_syntactic_eval(model, vocab, test, pool, "syntactic")
        rnd = random_retrieval_baseline(test, pool, resolve_seed(args.seed))
        rows.append(("1-NN labeled F1", sem[0], syn[0], rnd[0]))
        rows.append(("1-NN tag accuracy", sem[1], syn[1], rnd[1]))
    if not rows:
        raise SystemExit("error: give --similarity and/or the 1-NN probe files")
    print(f"{'probe':<20} {'semantic':>9} {'syntactic':>9} {'random':>9}")
    for name, *vals in rows:
        cells = [f"{v:9.1f}" for v in vals] + ["        -"] * (3 - len(vals))
        print(f"{name:<20} " + " ".join(cells))
    return 0


# -- noise-preview -------------------------------------------------------------------

def cmd_noise_preview(args) -> int:
    tagged = data.load_tagged_corpus(args.tagged)
    model = data.build_pos_groups(tagged, args.p)
    rng = np.random.default_rng(resolve_seed(args.seed))
    sents = _sentences(args.input) if args.input else [t.tokens for t in tagged]
    for sent in sents[: args.n]:
        for _ in range(args.samples):
            print(" ".join(sent) + "\t" + " ".join(data.noise_sentence(sent, model, rng)))
    return 0


# -- parser -----------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="vgvae", description="Exemplar-controlled paraphrase generation")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    t = sub.add_parser("train", help="train a model")
    t.add_argument("--config", help="flat key = value config file; flags override it")
    for key, typ in _TRAIN_FLAGS.items():
        kw = {"type": typ}
        if key == "variant":
            kw["choices"] = DECODER_VARIANTS
        elif key == "wpl_placement":
            kw["choices"] = WPL_PLACEMENTS
        elif key == "use_codes":
            kw["choices"] = ("true", "false")
        t.add_argument("--" + key.replace("_", "-"), dest=key, **kw)
    t.set_defaults(func=cmd_train)

    g = sub.add_parser("generate", help="generate from aligned semantic / syntactic input files")
    g.add_argument("checkpoint")
    g.add_argument("semantic")
    g.add_argument("syntactic")
    g.add_argument("--mode", choices=("greedy", "beam"), default="greedy")
    g.add_argument("-o", "--output")
    g.set_defaults(func=cmd_generate)

    e = sub.add_parser("evaluate", help="score outputs against eval-triple references")
    e.add_argument("outputs")
    e.add_argument("triples")
    e.add_argument("--output-parses")
    e.add_argument("--reference-parses")
    e.add_argument("--name", default="system")
    e.add_argument("--kv", help="also write key=value metrics here")
    e.set_defaults(func=cmd_evaluate)

    m = sub.add_parser("mine-exemplars", help="rank syntactic exemplar candidates")
    m.add_argument("queries", help="tagged query sentences")
    m.add_argument("pool", help="tagged candidate pool")
    m.add_argument("-k", type=int, default=5)
    m.add_argument("--lam", type=float, default=data.MINING_LAMBDA)
    m.add_argument("-o", "--output")
    m.set_defaults(func=cmd_mine)

    c = sub.add_parser("inspect-clusters", help="word clusters from latent-code argmaxes")
    c.add_argument("checkpoint")
    c.add_argument("--samples", type=int, default=10)
    c.add_argument("-o", "--output")
    c.set_defaults(func=cmd_inspect)

    x = sub.add_parser("encoder-eval", help="similarity and 1-NN probes for both latents")
    x.add_argument("checkpoint")
    x.add_argument("--similarity", help="sentence<TAB>sentence<TAB>score file")
    x.add_argument("--test-tagged")
    x.add_argument("--test-parses")
    x.add_argument("--pool-tagged")
    x.add_argument("--pool-parses")
    x.add_argument("--seed", type=int, default=0)
    x.set_defaults(func=cmd_encoder_eval)

    n = sub.add_parser("noise-preview", help="show word-noised versions of sentences")
    n.add_argument("tagged", help="tagged corpus defining the POS groups")
    n.add_argument("-p", type=float, default=0.3)
    n.add_argument("--input", help="plain sentences to noise (default: the tagged corpus)")
    n.add_argument("-n", type=int, default=10)
    n.add_argument("--samples", type=int, default=1)
    n.add_argument("--seed", type=int, default=0)
    n.set_defaults(func=cmd_noise_preview)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (data.FormatError, FileNotFoundError, ValueError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
