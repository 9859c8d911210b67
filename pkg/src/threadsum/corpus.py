"""Threads, corpus files, tokenization, embeddings and synthetic corpora."""
from __future__ import annotations

import hashlib
import json
import unicodedata
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator, Sequence

import numpy as np

SPLITS = ("train", "dev", "test")


class CorpusError(ValueError):
    """Malformed corpus or embedding input."""


# --------------------------------------------------------------------------
# tokenization
# --------------------------------------------------------------------------


def _is_punct(ch: str) -> bool:
    return unicodedata.category(ch).startswith("P")


def tokenize(text: str) -> list[str]:
    """Lowercase, split on whitespace, strip edge punctuation, drop empties.

    >>> tokenize("don't re-install!!")
    ["don't", 're-install']
    """
    out = []
    for raw in text.lower().split():
        lo, hi = 0, len(raw)
        while lo < hi and _is_punct(raw[lo]):
            lo += 1
        while hi > lo and _is_punct(raw[hi - 1]):
            hi -= 1
        if lo < hi:
            out.append(raw[lo:hi])
    return out


# --------------------------------------------------------------------------
# data model
# --------------------------------------------------------------------------


@dataclass
class Thread:
    id: str
    posts: list[list[list[str]]]
    category: str | None = None
    references: list[list[str]] = field(default_factory=list)
    labels: list[int] | None = None
    split: str = "train"

    def __post_init__(self):
        if self.labels is not None and len(self.labels) != self.n_sentences:
            raise CorpusError(
                f"thread {self.id!r}: {len(self.labels)} labels for {self.n_sentences} sentences"
            )

    @property
    def sentences(self) -> list[list[str]]:
        return [s for post in self.posts for s in post]

    @property
    def n_sentences(self) -> int:
        return sum(len(p) for p in self.posts)

    @property
    def n_words(self) -> int:
        return sum(len(s) for post in self.posts for s in post)

    def locate(self, index: int) -> tuple[int, int]:
        """Flattened sentence index -> (post, sentence-in-post)."""
        if index < 0:
            raise IndexError(index)
        for p, post in enumerate(self.posts):
            if index < len(post):
                return p, index
            index -= len(post)
        raise IndexError("sentence index out of range")

    def flat_index(self, post: int, sentence: int) -> int:
        if not 0 <= sentence < len(self.posts[post]):
            raise IndexError("sentence index out of range")
        return sum(len(p) for p in self.posts[:post]) + sentence

    def gold_indices(self) -> list[int]:
        return [i for i, y in enumerate(self.labels or []) if y]

    def to_json(self) -> dict:
        return {
            "id": self.id,
            "category": self.category,
            "posts": self.posts,
            "references": self.references,
            "labels": self.labels,
            "split": self.split,
        }


@dataclass
class Corpus:
    threads: list[Thread] = field(default_factory=list)
    split: str | None = None

    def __post_init__(self):
        seen = set()
        for t in self.threads:
            if t.id in seen:
                raise CorpusError(f"duplicate thread id {t.id!r}")
            seen.add(t.id)

    def __iter__(self) -> Iterator[Thread]:
        return iter(self.threads)

    def __len__(self) -> int:
        return len(self.threads)

    def __getitem__(self, i: int) -> Thread:
        return self.threads[i]

    def by_id(self) -> dict[str, Thread]:
        return {t.id: t for t in self.threads}

    def subset(self, split: str | None) -> "Corpus":
        if split is None:
            return self
        return Corpus([t for t in self.threads if t.split == split], split=split)

    def vocabulary(self) -> set[str]:
        vocab = set()
        for t in self.threads:
            for s in t.sentences:
                vocab.update(s)
        return vocab


def _sentence(value, where: str) -> list[str]:
    if isinstance(value, str):
        return tokenize(value)
    if isinstance(value, list) and all(isinstance(tok, str) for tok in value):
        return list(value)
    raise CorpusError(f"{where}: sentence must be a string or a list of strings")


def thread_from_json(obj, where: str = "thread") -> Thread:
    if not isinstance(obj, dict):
        raise CorpusError(f"{where}: expected a JSON object")
    for key in ("id", "posts"):
        if key not in obj:
            raise CorpusError(f"{where}: missing {key!r}")
    if not isinstance(obj["posts"], list) or not all(isinstance(p, list) for p in obj["posts"]):
        raise CorpusError(f"{where}: 'posts' must be a list of lists")
    posts = [[_sentence(s, where) for s in post] for post in obj["posts"]]
    refs = [_sentence(r, where) for r in obj.get("references") or []]
    labels = obj.get("labels")
    if labels is not None:
        if not isinstance(labels, list) or any(y not in (0, 1) for y in labels):
            raise CorpusError(f"{where}: 'labels' must be a list of 0/1")
        labels = [int(y) for y in labels]
    split = obj.get("split") or "train"
    if split not in SPLITS:
        raise CorpusError(f"{where}: unknown split {split!r}")
    try:
        return Thread(
            id=str(obj["id"]),
            posts=posts,
            category=obj.get("category"),
            references=refs,
            labels=labels,
            split=split,
        )
    except CorpusError as err:
        raise CorpusError(f"{where}: {err}") from None


def load_corpus(path: str | Path) -> Corpus:
    threads = []
    seen = set()
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            where = f"{path}:{lineno}"
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as err:
                raise CorpusError(f"{where}: invalid JSON ({err.msg})") from None
            thread = thread_from_json(obj, where)
            if thread.id in seen:
                raise CorpusError(f"{where}: duplicate thread id {thread.id!r}")
            seen.add(thread.id)
            threads.append(thread)
    return Corpus(threads)


def save_corpus(corpus: Corpus | Iterable[Thread], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for t in corpus:
            fh.write(json.dumps(t.to_json(), ensure_ascii=False) + "\n")


# --------------------------------------------------------------------------
# embeddings
# --------------------------------------------------------------------------


class EmbeddingTable:
    """Token -> vector map; unknown tokens get seeded uniform(-0.25, 0.25) vectors."""

    def __init__(self, dim: int = 300, vectors: dict[str, np.ndarray] | None = None, oov_seed: int = 0):
        self.dim = dim
        self.oov_seed = oov_seed
        self.vectors: dict[str, np.ndarray] = {}
        for tok, vec in (vectors or {}).items():
            vec = np.asarray(vec, dtype=np.float64)
            if vec.shape != (dim,):
                raise CorpusError(f"vector for {tok!r} has shape {vec.shape}, expected ({dim},)")
            self.vectors[tok] = vec
        self._oov: dict[str, np.ndarray] = {}

    def __contains__(self, token: str) -> bool:
        return token in self.vectors

    def oov_vector(self, token: str) -> np.ndarray:
        vec = self._oov.get(token)
        if vec is None:
            digest = hashlib.blake2b(f"{self.oov_seed}\x00{token}".encode("utf-8"), digest_size=8)
            rng = np.random.default_rng(int.from_bytes(digest.digest(), "little"))
            vec = rng.uniform(-0.25, 0.25, self.dim)
            vec.setflags(write=False)
            self._oov[token] = vec
        return vec

    def lookup(self, token: str) -> np.ndarray:
        vec = self.vectors.get(token)
        return vec if vec is not None else self.oov_vector(token)

    def embed(self, tokens: Sequence[str]) -> np.ndarray:
        if not tokens:
            return np.zeros((0, self.dim))
        return np.stack([self.lookup(t) for t in tokens])


def load_embeddings(
    path: str | Path | None,
    vocabulary: Iterable[str] | None = None,
    dim: int | None = None,
    oov_seed: int = 0,
) -> EmbeddingTable:
    """Read word2vec text format (optional ``<count> <dim>`` header line)."""
    if path is None:
        return EmbeddingTable(dim or 300, oov_seed=oov_seed)
    keep = set(vocabulary) if vocabulary is not None else None
    vectors = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            parts = line.rstrip("\n").split(" ")
            parts = [p for p in parts if p]
            if not parts:
                continue
            if lineno == 1 and len(parts) == 2 and all(p.isdigit() for p in parts):
                header_dim = int(parts[1])
                if dim is not None and dim != header_dim:
                    raise CorpusError(f"{path}: header dimension {header_dim} != expected {dim}")
                dim = header_dim
                continue
            if dim is None:
                dim = len(parts) - 1
            if len(parts) - 1 != dim:
                raise CorpusError(f"{path}:{lineno}: expected {dim} values, got {len(parts) - 1}")
            token = parts[0]
            if keep is not None and token not in keep:
                continue
            try:
                vectors[token] = np.array([float(v) for v in parts[1:]])
            except ValueError:
                raise CorpusError(f"{path}:{lineno}: non-numeric vector entry") from None
    return EmbeddingTable(dim or 300, vectors, oov_seed=oov_seed)


# --------------------------------------------------------------------------
# synthetic planted-signal corpus
# --------------------------------------------------------------------------


def synthesize_corpus(
    seed: int,
    n_threads: int,
    sentences_per_thread: int = 12,
    vocab_size: int = 500,
    signal_strength: float = 1.0,
    n_test: int = 0,
    n_families: int = 4,
    near_duplicates: int = 0,
) -> Corpus:
    """Threads whose summary-worthy sentences carry planted keyword tokens.

    Every thread draws a keyword family (its category). About 20-30% of the
    sentences are summary-worthy: each of their tokens comes from the family's
    keyword list with probability ``signal_strength`` and from the background
    Zipf distribution otherwise. Filler lengths are drawn so that the planted
    sentences hold exactly 20% of the thread's words. Both references are the
    planted sentences concatenated (forward and reversed order).

    ``near_duplicates`` filler sentences per thread are replaced by copies of
    planted sentences with one token substituted; they stay labelled 0.
    """
    if min(n_threads, sentences_per_thread, vocab_size, n_families) < 1 or not 0 <= n_test <= n_threads:
        raise ValueError("synthesize_corpus parameters must be positive")
    if not 0 <= signal_strength <= 1:
        raise ValueError("signal_strength must lie in [0, 1]")
    rng = np.random.default_rng(seed)
    per_family = max(2, vocab_size // (5 * n_families))
    n_background = vocab_size - per_family * n_families
    if n_background < 10:
        raise ValueError("vocab_size too small for the keyword families")
    background = [f"w{i}" for i in range(n_background)]
    zipf = 1.0 / np.arange(1, n_background + 1)
    zipf /= zipf.sum()
    families = [[f"k{f}x{j}" for j in range(per_family)] for f in range(n_families)]

    def filler(length: int) -> list[str]:
        return [background[i] for i in rng.choice(n_background, size=length, p=zipf)]

    def planted(length: int, fam: list[str]) -> list[str]:
        toks = filler(length)
        for j in range(length):
            if rng.random() < signal_strength:
                toks[j] = fam[rng.integers(len(fam))]
        return toks

    threads = []
    n = sentences_per_thread
    for t in range(n_threads):
        fam_id = int(rng.integers(n_families))
        k = max(1, int(round(rng.uniform(0.2, 0.3) * n)))
        worthy = set(rng.choice(n, size=k, replace=False).tolist())
        plant_len = rng.integers(6, 11, size=k)
        fill_total = 4 * int(plant_len.sum())
        n_fill = n - k
        if n_fill:
            base = 3
            extra = rng.multinomial(max(fill_total - base * n_fill, 0), np.full(n_fill, 1.0 / n_fill))
            fill_len = base + extra
        else:
            fill_len = np.zeros(0, dtype=int)
        sentences, labels, p_iter, f_iter = [], [], iter(plant_len), iter(fill_len)
        for i in range(n):
            if i in worthy:
                sentences.append(planted(int(next(p_iter)), families[fam_id]))
                labels.append(1)
            else:
                sentences.append(filler(int(next(f_iter))))
                labels.append(0)
        fill_idx = [i for i in range(n) if i not in worthy]
        if near_duplicates and fill_idx:
            worthy_idx = sorted(worthy)
            for i in rng.choice(fill_idx, size=min(near_duplicates, len(fill_idx)), replace=False):
                src = list(sentences[worthy_idx[int(rng.integers(k))]])
                src[int(rng.integers(len(src)))] = background[int(rng.integers(n_background))]
                sentences[int(i)] = src
        posts, i = [], 0
        while i < n:
            size = int(rng.integers(1, 5))
            posts.append(sentences[i : i + size])
            i += size
        gold = [s for s, y in zip(sentences, labels) if y]
        refs = [
            [tok for s in gold for tok in s],
            [tok for s in reversed(gold) for tok in s],
        ]
        threads.append(
            Thread(
                id=f"synth-{seed}-{t:04d}",
                posts=posts,
                category=f"family{fam_id}",
                references=refs,
                labels=labels,
                split="test" if t >= n_threads - n_test else "train",
            )
        )
    return Corpus(threads)
