from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Optional, Sequence

from .text import bleu_corpus, corpus_mean, meteor_simplified, rouge_l, rouge_n
from .trees import st_score

COLUMNS = (("BLEU", "bleu"), ("ROUGE-1", "rouge1"), ("ROUGE-2", "rouge2"), ("ROUGE-L", "rougel"),
           ("METEOR-simplified", "meteor"), ("ST", "st"))

METADATA = {
    "rouge": "F1 variant",
    "meteor": "exact-match only; no stemming, synonym or paraphrase stages",
    "st": "mean tree edit distance between token-stripped parses",
    "tokenization": "inputs used as given (whitespace tokens)",
}


@dataclass
class MetricReport:
    bleu: float
    rouge1: float
    rouge2: float
    rougel: float
    meteor: float
    st: Optional[float] = None

    def to_table(self, name: str = "system") -> str:
        width = max(len(name), 8)
        head = " " * width + " | " + " | ".join(f"{c:>{max(len(c), 6)}}" for c, _ in COLUMNS)
        cells = []
        for col, attr in COLUMNS:
            v = getattr(self, attr)
            cells.append(f"{'-' if v is None else f'{v:.1f}':>{max(len(col), 6)}}")
        return head + "\n" + f"{name:<{width}} | " + " | ".join(cells) + "\n"

    def to_kv(self) -> str:
        lines = []
        for _, attr in COLUMNS:
            v = getattr(self, attr)
            lines.append(f"{attr}={'NA' if v is None else repr(v)}")
        lines += [f"meta.{k}={v}" for k, v in METADATA.items()]
        return "\n".join(lines) + "\n"


def evaluate_outputs(outputs: Sequence[Sequence[str]], references: Sequence[Sequence[str]],
                     output_parses: Optional[Sequence[str]] = None,
                     reference_parses: Optional[Sequence[str]] = None) -> MetricReport:
    """All six corpus-level scores; ST is left out (with a warning) without parses."""
    if len(outputs) != len(references):
        raise ValueError(f"{len(outputs)} outputs but {len(references)} references")
    st = None
    if output_parses is not None and reference_parses is not None:
        if len(output_parses) != len(outputs) or len(reference_parses) != len(outputs):
            raise ValueError("parse files are not aligned with the sentences")
        st = st_score(output_parses, reference_parses)
    else:
        warnings.warn("parse files not supplied; ST omitted", stacklevel=2)
    return MetricReport(
        bleu=bleu_corpus(outputs, references),
        rouge1=corpus_mean(rouge_n, outputs, references, n=1),
        rouge2=corpus_mean(rouge_n, outputs, references, n=2),
        rougel=corpus_mean(rouge_l, outputs, references),
        meteor=corpus_mean(meteor_simplified, outputs, references),
        st=st,
    )
