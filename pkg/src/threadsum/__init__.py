"""Extractive forum-thread summarization with hierarchical attention networks."""
from .corpus import Corpus, EmbeddingTable, Thread, load_corpus, save_corpus, synthesize_corpus, tokenize
from .han import HanConfig, HanParams, load_checkpoint, save_checkpoint
from .oracle import OracleConfig, greedy_oracle_labels
from .rouge import RougeScore, rouge_n
from .select import select_topk, select_with_redundancy, word_budget

__version__ = "0.1.0"
