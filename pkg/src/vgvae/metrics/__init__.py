from .probes import (AnnotatedSentence, encoder_similarity_eval, nn_syntactic_eval, pearson,
                     random_retrieval_baseline)
from .report import MetricReport, evaluate_outputs
from .text import bleu_corpus, meteor_simplified, rouge_l, rouge_n, sentence_bleu
from .trees import ParseError, ParseTree, parse_bracketed, st_score, strip_tokens, tree_edit_distance

__all__ = [
    "AnnotatedSentence", "MetricReport", "ParseError", "ParseTree", "bleu_corpus",
    "encoder_similarity_eval", "evaluate_outputs", "meteor_simplified", "nn_syntactic_eval",
    "parse_bracketed", "pearson", "random_retrieval_baseline", "rouge_l", "rouge_n",
    "sentence_bleu", "st_score", "strip_tokens", "tree_edit_distance",
]
