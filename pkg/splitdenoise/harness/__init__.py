"""Experiment scenarios over synthetic corpora, and their CSV/JSON reports."""

from .corpus import SyntheticCorpus, build_vocabulary, draw_corpus, signal_window
from .experiments import (
    Workspace,
    ablation_clipping,
    ablation_server_denoise,
    eta_sweep,
    eval_downstream,
    model_update_drill,
    pair_features,
    prepare,
)
from .reports import make_rows, read_csv, summarize, write_csv, write_report
from .similarity import corpus_similarity, token_frequencies

__all__ = [
    "SyntheticCorpus",
    "Workspace",
    "ablation_clipping",
    "ablation_server_denoise",
    "build_vocabulary",
    "corpus_similarity",
    "draw_corpus",
    "eta_sweep",
    "eval_downstream",
    "make_rows",
    "model_update_drill",
    "pair_features",
    "prepare",
    "read_csv",
    "signal_window",
    "summarize",
    "token_frequencies",
    "write_csv",
    "write_report",
]
