"""A toy English grammar with five sentence templates over one shared meaning
frame (agent, verb, patient, adjective, adverb).

Any two templates realize the same meaning with different word order, which
gives paraphrase pairs whose syntax is known exactly.
Every realization comes with gold POS tags and a bracketed parse.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .data import EvalTriple, ParaphrasePair, TaggedSentence
from .metrics.probes import AnnotatedSentence
from .metrics.trees import parse_bracketed

NOUNS = ("dog cat bird horse farmer teacher child doctor king queen sailor baker "
         "pilot singer nurse lawyer tiger wolf fox rabbit student artist driver "
         "painter miner hunter").split()
VERBS = ("chased helped visited followed praised watched called pushed pulled "
         "greeted thanked warned kicked hugged trusted blamed").split()
ADJS = "big small old young happy angry quiet brave tired clever proud shy calm lazy rich poor".split()
ADVS = "quickly slowly quietly often rarely gladly loudly calmly bravely gently eagerly again".split()
DETS = ("the", "a")

SLOT_TAGS = {"AGT": "NN", "PAT": "NN", "VERB": "VBD", "ADJ": "JJ", "ADV": "RB", "DT": "DT"}

# (word-or-slot, tag) sequences and their bracketings; {i} is the i-th token.
# All templates permute one multiset of POS slots, so a bag of words never
# identifies the template: only word order does.
TEMPLATES = (
    ("DT AGT VERB DT ADJ PAT ADV .",
     "(S (NP (DT {0}) (NN {1})) (VP (VBD {2}) (NP (DT {3}) (JJ {4}) (NN {5})) (ADVP (RB {6}))) (. {7}))"),
    ("ADV DT AGT VERB DT ADJ PAT .",
     "(S (ADVP (RB {0})) (NP (DT {1}) (NN {2})) (VP (VBD {3}) (NP (DT {4}) (JJ {5}) (NN {6}))) (. {7}))"),
    ("DT AGT ADV VERB DT ADJ PAT .",
     "(S (NP (DT {0}) (NN {1})) (ADVP (RB {2})) (VP (VBD {3}) (NP (DT {4}) (JJ {5}) (NN {6}))) (. {7}))"),
    ("DT ADJ PAT DT AGT VERB ADV .",
     "(S (NP (DT {0}) (JJ {1}) (NN {2})) (S (NP (DT {3}) (NN {4})) (VP (VBD {5}) (ADVP (RB {6})))) (. {7}))"),
    ("DT AGT VERB ADV DT ADJ PAT .",
     "(S (NP (DT {0}) (NN {1})) (VP (VBD {2}) (ADVP (RB {3})) (NP (DT {4}) (JJ {5}) (NN {6}))) (. {7}))"),
)
LITERAL_TAGS = {".": "."}


@dataclass(frozen=True)
class Meaning:
    agent: str
    verb: str
    patient: str
    adj: str
    adv: str

    def content(self) -> tuple[str, ...]:
        return (self.agent, self.verb, self.patient, self.adj, self.adv)


@dataclass
class Realization:
    tokens: list[str]
    tags: list[str]
    parse: str
    template: int
    meaning: Meaning

    def tagged(self) -> TaggedSentence:
        return TaggedSentence(list(self.tokens), list(self.tags))

    def annotated(self) -> AnnotatedSentence:
        return AnnotatedSentence(list(self.tokens), list(self.tags), parse_bracketed(self.parse))


class SyntheticGrammar:
    n_templates = len(TEMPLATES)

    def __init__(self, nouns=NOUNS, verbs=VERBS, adjs=ADJS, advs=ADVS):
        self.nouns, self.verbs, self.adjs, self.advs = list(nouns), list(verbs), list(adjs), list(advs)
        self._slots = [t.split() for t, _ in TEMPLATES]
        self._category = {}
        for w in self.nouns:
            self._category[w] = "N"
        for w in self.verbs:
            self._category[w] = "V"
        for w in self.adjs:
            self._category[w] = "A"
        for w in self.advs:
            self._category[w] = "R"
        for w in DETS:
            self._category[w] = "D"

    def sample_meaning(self, rng: np.random.Generator) -> Meaning:
        a, p = rng.choice(len(self.nouns), size=2, replace=False)
        return Meaning(self.nouns[a], self.verbs[rng.integers(len(self.verbs))], self.nouns[p],
                       self.adjs[rng.integers(len(self.adjs))], self.advs[rng.integers(len(self.advs))])

    def realize(self, meaning: Meaning, template: int, rng: np.random.Generator) -> Realization:
        fill = {"AGT": meaning.agent, "PAT": meaning.patient, "VERB": meaning.verb,
                "ADJ": meaning.adj, "ADV": meaning.adv}
        tokens, tags = [], []
        for slot in self._slots[template]:
            if slot == "DT":
                tokens.append(DETS[rng.integers(len(DETS))])
                tags.append("DT")
            elif slot in fill:
                tokens.append(fill[slot])
                tags.append(SLOT_TAGS[slot])
            else:
                tokens.append(slot)
                tags.append(LITERAL_TAGS[slot])
        parse = TEMPLATES[template][1].format(*tokens)
        return Realization(tokens, tags, parse, template, meaning)

    def template_of(self, tokens: Sequence[str]) -> Optional[int]:
        """Index of the template whose slot pattern ``tokens`` fills, if any."""
        cats = {"AGT": "N", "PAT": "N", "VERB": "V", "ADJ": "A", "ADV": "R", "DT": "D"}
        for idx, slots in enumerate(self._slots):
            if len(slots) != len(tokens):
                continue
            if all(self._category.get(tok) == cats[s] if s in cats else tok == s
                   for s, tok in zip(slots, tokens)):
                return idx
        return None

    # -- corpora ---------------------------------------------------------
    def paraphrase_pairs(self, n: int, rng: np.random.Generator):
        """``n`` pairs realizing one meaning under two different templates.

        Returns ``(pairs, realizations)``; the realizations list is flat, two per pair.
        """
        pairs, real = [], []
        for _ in range(n):
            m = self.sample_meaning(rng)
            t1, t2 = rng.choice(self.n_templates, size=2, replace=False)
            a, b = self.realize(m, int(t1), rng), self.realize(m, int(t2), rng)
            pairs.append(ParaphrasePair(a.tokens, b.tokens))
            real += [a, b]
        return pairs, real

    def crossed_inputs(self, n: int, rng: np.random.Generator):
        """``n`` (semantic input, syntactic exemplar, reference) with distinct templates.

        The reference realizes the semantic input's meaning in the exemplar's template.
        """
        out = []
        for _ in range(n):
            mx, my = self.sample_meaning(rng), self.sample_meaning(rng)
            tx, ty = rng.choice(self.n_templates, size=2, replace=False)
            x = self.realize(mx, int(tx), rng)
            y = self.realize(my, int(ty), rng)
            ref = self.realize(mx, int(ty), rng)
            out.append((x, y, ref))
        return out

    def eval_triples(self, crossed) -> list[EvalTriple]:
        return [EvalTriple(x.tokens, y.tokens, r.tokens, y.parse, r.parse) for x, y, r in crossed]

    def similarity_pairs(self, n: int, rng: np.random.Generator):
        """Sentence pairs scored by the fraction of shared meaning slots (0 to 1)."""
        out = []
        for _ in range(n):
            m = self.sample_meaning(rng)
            other = self.sample_meaning(rng)
            keep = int(rng.integers(0, 6))
            chosen = set(rng.choice(5, size=keep, replace=False).tolist())
            fields = [m.content()[i] if i in chosen else other.content()[i] for i in range(5)]
            if fields[0] == fields[2]:
                fields[2] = other.agent if other.agent != fields[0] else other.patient
            m2 = Meaning(*fields)
            shared = sum(a == b for a, b in zip(m.content(), m2.content())) / 5.0
            a = self.realize(m, int(rng.integers(self.n_templates)), rng)
            b = self.realize(m2, int(rng.integers(self.n_templates)), rng)
            out.append((a.tokens, b.tokens, shared))
        return out

    def sentences(self, n: int, rng: np.random.Generator) -> list[Realization]:
        return [self.realize(self.sample_meaning(rng), int(rng.integers(self.n_templates)), rng)
                for _ in range(n)]
