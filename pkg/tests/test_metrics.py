import math
import random

import numpy as np
import pytest
import torch
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import tiny_model
from vgvae.metrics import (MetricReport, ParseError, bleu_corpus, evaluate_outputs, meteor_simplified,
                           parse_bracketed, pearson, rouge_l, rouge_n, sentence_bleu, st_score,
                           strip_tokens, tree_edit_distance)
from vgvae.metrics.probes import (AnnotatedSentence, encode_means, encoder_similarity_eval,
                                  nn_syntactic_eval, random_retrieval_baseline, tagging_accuracy)
from vgvae.metrics.text import corpus_mean
from vgvae.metrics.trees import ParseTree, labeled_brackets, labeled_f1, preterminals
from vgvae.vocab import Vocabulary

S = str.split


# -- BLEU / ROUGE / METEOR ------------------------------------------------------

def test_bleu_identity_and_disjoint():
    refs = [S("the cat sat on the mat"), S("a dog ran in the park today")]
    assert bleu_corpus(refs, refs) == pytest.approx(100.0)
    assert bleu_corpus([S("x y z w")], [S("a b c d")]) == 0.0
    assert bleu_corpus([[]], [S("a b")]) == 0.0


def test_bleu_clipped_hand_example():
    # clipped unigram precision 1/3, no bigram match -> corpus BLEU 0
    assert bleu_corpus([S("the the the")], [S("the cat")]) == 0.0
    # smoothed sentence BLEU: p = 1/3, 1/3, 1/2, 1/1; no brevity penalty (3 > 2)
    assert sentence_bleu(S("the the the"), S("the cat")) == pytest.approx(100 * (1 / 18) ** 0.25)


def test_bleu_brevity_penalty_by_hand():
    cand, ref = S("a b c d"), S("a b c d e f")
    assert bleu_corpus([cand], [ref]) == pytest.approx(100 * math.exp(1 - 6 / 4))


def test_bleu_errors():
    with pytest.raises(ValueError):
        bleu_corpus([S("a")], [])
    with pytest.raises(ValueError):
        bleu_corpus([], [])


def test_rouge_hand_values():
    assert rouge_l(S("a b c"), S("a c")) == pytest.approx(80.0)
    for n in (1, 2):
        assert rouge_n(S("a b c"), S("a b c"), n) == pytest.approx(100.0)
        assert rouge_n(S("a b"), S("c d"), n) == 0.0
    assert rouge_l(S("a b"), S("c d")) == 0.0
    # unigram overlap 2 of 3 candidate / 2 of 2 reference
    assert rouge_n(S("a b c"), S("a c"), 1) == pytest.approx(80.0)
    with pytest.raises(ValueError):
        rouge_n(S("a"), S("a"), 3)


def test_meteor_hand_values():
    for t in (1, 3, 7):
        toks = [f"w{i}" for i in range(t)]
        assert meteor_simplified(toks, toks) == pytest.approx(100 * (1 - 0.5 * (1 / t) ** 3))
    assert meteor_simplified(S("a b"), S("b a")) == pytest.approx(50.0)
    assert meteor_simplified(S("a b"), S("c d")) == 0.0


def test_meteor_recall_weighting():
    # precision 1, recall 1/2: F = P R / (0.9 P + 0.1 R)
    p, r = 1.0, 0.5
    f = p * r / (0.9 * p + 0.1 * r)
    assert meteor_simplified(S("a b"), S("a b c d")) == pytest.approx(100 * f * (1 - 0.5 * (1 / 2) ** 3))


words = st.lists(st.sampled_from("a b c d e".split()), min_size=1, max_size=6)


@settings(max_examples=40, deadline=None)
@given(st.lists(st.tuples(words, words), min_size=1, max_size=6), st.randoms())
def test_corpus_metrics_permutation_invariant(pairs, rnd):
    cands, refs = [p[0] for p in pairs], [p[1] for p in pairs]
    order = list(range(len(pairs)))
    rnd.shuffle(order)
    c2, r2 = [cands[i] for i in order], [refs[i] for i in order]
    assert bleu_corpus(cands, refs) == pytest.approx(bleu_corpus(c2, r2), abs=1e-9)
    for metric, kw in ((rouge_n, {"n": 1}), (rouge_n, {"n": 2}), (rouge_l, {}), (meteor_simplified, {})):
        assert corpus_mean(metric, cands, refs, **kw) == pytest.approx(corpus_mean(metric, c2, r2, **kw), abs=1e-9)


# -- trees -------------------------------------------------------------------------

def test_parse_structure():
    t = parse_bracketed("(S (NP (PRP it)) (VP (VBZ works)))")
    labeled = [n for n in t.nodes() if not n.is_token]
    assert [n.label for n in labeled] == ["S", "NP", "PRP", "VP", "VBZ"]
    assert t.tokens() == ["it", "works"]
    x = parse_bracketed("(X)")
    assert x.label == "X" and x.children == []
    assert parse_bracketed("( (S (NN a)) )").label == "S"
    assert str(t) == "(S (NP (PRP it)) (VP (VBZ works)))"


@pytest.mark.parametrize("text,offset", [("((S", 3), ("", 0), ("(S (NP a)", 9), ("(S a))", 5), ("S", 0)])
def test_parse_errors_carry_offsets(text, offset):
    with pytest.raises(ParseError) as info:
        parse_bracketed(text)
    assert info.value.offset == offset


def test_strip_tokens():
    t = parse_bracketed("(S (NP (PRP it)) (VP (VBZ works)))")
    s = strip_tokens(t)
    assert [leaf.label for leaf in s.leaves()] == ["PRP", "VBZ"]
    assert strip_tokens(s) == s
    assert sum(not n.is_token for n in t.nodes()) == s.size()


def random_tree(rnd, n, labels="ABC", tokens=False):
    nodes = [ParseTree(rnd.choice(labels))]
    for _ in range(n - 1):
        parent = rnd.choice(nodes)
        child = ParseTree(rnd.choice(labels))
        parent.children.insert(rnd.randint(0, len(parent.children)), child)
        nodes.append(child)
    if tokens:
        for leaf in list(nodes):
            if not leaf.children:
                leaf.children.append(ParseTree("tok", is_token=True))
    return nodes[0]


def test_strip_idempotent_on_random_trees():
    rnd = random.Random(0)
    for _ in range(100):
        t = random_tree(rnd, rnd.randint(1, 9), tokens=True)
        s = strip_tokens(t)
        assert strip_tokens(s) == s
        assert s.size() == sum(not n.is_token for n in t.nodes())


def test_ted_hand_cases():
    a = parse_bracketed("(S (NP) (VP))")
    b = parse_bracketed("(S (NP) (VP) (PP))")
    assert tree_edit_distance(a, a) == 0
    assert tree_edit_distance(a, b) == 1
    assert tree_edit_distance(parse_bracketed("(A)"), parse_bracketed("(B)")) == 1
    # deleting an inner node lifts its children
    assert tree_edit_distance(parse_bracketed("(S (X (A) (B)))"), parse_bracketed("(S (A) (B))")) == 1


def test_ted_metric_axioms():
    rnd = random.Random(1)
    for _ in range(150):
        t1, t2, t3 = (random_tree(rnd, rnd.randint(1, 7)) for _ in range(3))
        d12, d21 = tree_edit_distance(t1, t2), tree_edit_distance(t2, t1)
        assert d12 == d21
        assert tree_edit_distance(t1, t3) <= d12 + tree_edit_distance(t2, t3)
        assert (d12 == 0) == (str(t1) == str(t2))


def test_st_score():
    parses = ["(S (NP (PRP it)) (VP (VBZ works)))", "(S (NP (DT the) (NN cat)) (VP (VBD sat)))"]
    assert st_score(parses, parses) == 0.0
    other = ["(S (NP (PRP he)) (VP (VBZ runs)))", "(S (VP (VBD sat)))"]
    # tokens do not matter; the second pair differs by NP, DT and NN
    assert st_score(other, parses) == pytest.approx((0 + 3) / 2)
    with pytest.raises(ParseError, match="reference line 2"):
        st_score(parses, [parses[0], "(S (NP"])


def test_labeled_brackets_and_f1():
    t = parse_bracketed("(S (NP (DT the) (NN cat)) (VP (VBD sat)))")
    assert labeled_brackets(t) == {("S", 0, 3): 1, ("NP", 0, 2): 1, ("VP", 2, 3): 1}
    assert preterminals(t) == ["DT", "NN", "VBD"]
    assert labeled_f1([t], [t]) == 100.0
    flat = parse_bracketed("(S (DT the) (NN cat) (VBD sat))")
    # 1 match, 1 predicted, 3 gold -> P 1, R 1/3
    assert labeled_f1([flat], [t]) == pytest.approx(50.0)


# -- probes --------------------------------------------------------------------------

def test_pearson():
    xs = [0.3, -1.0, 2.5, 4.0]
    assert pearson(xs, xs) == pytest.approx(1.0)
    assert pearson(xs, [-x for x in xs]) == pytest.approx(-1.0)
    assert pearson([1, 2, 3], [2, 4, 5]) == pytest.approx(0.9820, abs=1e-3)
    with pytest.raises(ValueError):
        pearson([1, 1, 1], [1, 2, 3])
    with pytest.raises(ValueError):
        pearson([1], [2])


def _toy_sentences():
    return [S("the cat sat"), S("a dog ran on the mat"), S("the mat sat"), S("a cat ran")]


def test_similarity_eval_with_own_cosines(toy_vocab):
    m = tiny_model(vocab_size=len(toy_vocab))
    sents = _toy_sentences()
    pairs = [(a, b) for a in sents for b in sents if a != b]
    for which in ("semantic", "syntactic"):
        va = encode_means(m, toy_vocab, [p[0] for p in pairs], which)
        vb = encode_means(m, toy_vocab, [p[1] for p in pairs], which)
        cos = (va * vb).sum(-1) / np.linalg.norm(va, axis=-1) / np.linalg.norm(vb, axis=-1)
        items = [(a, b, float(c)) for (a, b), c in zip(pairs, cos)]
        assert encoder_similarity_eval(m, toy_vocab, items, which) == pytest.approx(100.0)
        with pytest.raises(ValueError):
            encoder_similarity_eval(m, toy_vocab, [(a, b, 1.0) for a, b in pairs], which)


def _annotated():
    trees = ["(S (NP (DT the) (NN cat)) (VP (VBD sat)))",
             "(S (NP (DT a) (NN dog)) (VP (VBD ran) (PP (IN on) (NP (DT the) (NN mat)))))",
             "(S (NP (DT the) (NN mat)) (VP (VBD sat)))",
             "(S (VP (VBD ran)))"]
    out = []
    for t in trees:
        tree = parse_bracketed(t)
        out.append(AnnotatedSentence(tree.tokens(), preterminals(tree), tree))
    return out


def test_nn_self_retrieval_is_perfect(toy_vocab):
    m = tiny_model(vocab_size=len(toy_vocab))
    data = _annotated()[:3]
    for which in ("semantic", "syntactic"):
        f1, acc = nn_syntactic_eval(m, toy_vocab, data, data, which)
        assert f1 == pytest.approx(100.0) and acc == pytest.approx(100.0)
    with pytest.raises(ValueError):
        nn_syntactic_eval(m, toy_vocab, data, [], "semantic")


def test_random_baseline_reproducible():
    data = _annotated()
    assert random_retrieval_baseline(data, data, seed=3) == random_retrieval_baseline(data, data, seed=3)


def test_tagging_accuracy_uses_gold_length():
    assert tagging_accuracy([["A", "B"]], [["A", "B", "C", "D"]]) == pytest.approx(50.0)


# -- report ----------------------------------------------------------------------------

def test_report_identity_and_formats():
    refs = [S("the cat sat on the mat"), S("a dog ran")]
    parses = ["(S (NP (DT the) (NN cat)) (VP (VBD sat)))", "(S (NP (DT a) (NN dog)) (VP (VBD ran)))"]
    r = evaluate_outputs(refs, refs, parses, parses)
    assert r.bleu == pytest.approx(100) and r.rouge1 == pytest.approx(100)
    assert r.rouge2 == pytest.approx(100) and r.rougel == pytest.approx(100) and r.st == 0.0
    table = r.to_table("copy")
    assert "METEOR-simplified" in table and table.splitlines()[1].startswith("copy")
    kv = dict(line.split("=", 1) for line in r.to_kv().splitlines())
    assert float(kv["bleu"]) == r.bleu and kv["st"] == "0.0"
    assert "meta.meteor" in kv


def test_report_without_parses_warns():
    with pytest.warns(UserWarning, match="ST omitted"):
        r = evaluate_outputs([S("a b")], [S("a b")])
    assert r.st is None
    assert "st=NA" in r.to_kv() and r.to_table().splitlines()[1].split("|")[-1].strip() == "-"
