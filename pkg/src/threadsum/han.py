"""Hierarchical attention network for sentence extraction.

Words -> bi-LSTM -> word attention -> sentence vectors; sentence vectors ->
bi-LSTM -> sentence attention -> thread vector. Each sentence is scored by a
dense 2-way softmax over ``[sentence vector, thread vector]``.

All sentences of a thread are encoded as one batch: the word-level tensors
are laid out ``(time, sentence, feature)`` and padded on the right. The
backward-direction LSTM reads each sentence reversed within its own length,
so padding never enters a recurrence that produces a real output.
"""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from . import ndgrad as nd
from .corpus import EmbeddingTable, Thread
from .ndgrad import Param, RmsPropConfig, Tape, Tensor

GATES = ("i", "f", "o", "c")
CHECKPOINT_VERSION = 1

# stream ids for derive_seed(config.seed, stream, ...)
_INIT, _SHUFFLE, _STEP, _HEAD, _EMBED_DROP, _OUT_DROP = range(6)


@dataclass
class HanConfig:
    embed_dim: int = 300
    word_hidden: int = 100
    sent_hidden: int = 50
    max_sentences: int = 144
    max_words: int = 40
    embed_dropout: float = 0.20
    output_dropout: float = 0.50
    epochs: int = 10
    seed: int = 0
    optimizer: RmsPropConfig = field(default_factory=RmsPropConfig)
    pos_weight: float = 1.0
    init_scale: float = 0.08
    oov_seed: int = 0
    # "sentence": output layer reads s_i; "contextual": it reads the bi-LSTM state h_i
    output_input: str = "sentence"

    def __post_init__(self):
        if isinstance(self.optimizer, dict):
            self.optimizer = RmsPropConfig(**self.optimizer)
        for name in ("embed_dim", "word_hidden", "sent_hidden", "max_sentences", "max_words"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")
        for name in ("embed_dropout", "output_dropout"):
            if not 0 <= getattr(self, name) < 1:
                raise ValueError(f"{name} must lie in [0, 1)")
        if self.epochs < 0:
            raise ValueError("epochs must be >= 0")
        if self.output_input not in ("sentence", "contextual"):
            raise ValueError("output_input must be 'sentence' or 'contextual'")

    @property
    def sentence_dim(self) -> int:
        return 2 * self.word_hidden

    @property
    def thread_dim(self) -> int:
        return 2 * self.sent_hidden

    @property
    def output_in_dim(self) -> int:
        left = self.sentence_dim if self.output_input == "sentence" else self.thread_dim
        return left + self.thread_dim

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "HanConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**d)

    @classmethod
    def from_json(cls, path: str | Path) -> "HanConfig":
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))


# --------------------------------------------------------------------------
# parameters
# --------------------------------------------------------------------------


def param_shapes(cfg: HanConfig, n_categories: int = 0) -> list[tuple[str, tuple[int, ...]]]:
    shapes = []
    blocks = (
        ("lstm1", cfg.embed_dim, cfg.word_hidden),
        ("lstm2", cfg.embed_dim, cfg.word_hidden),
        ("lstm3", cfg.sentence_dim, cfg.sent_hidden),
        ("lstm4", cfg.sentence_dim, cfg.sent_hidden),
    )
    for name, n_in, n_h in blocks:
        for g in GATES:
            shapes += [
                (f"{name}.W_{g}", (n_h, n_in)),
                (f"{name}.U_{g}", (n_h, n_h)),
                (f"{name}.b_{g}", (n_h,)),
            ]
    for name, d in (("word_att", cfg.sentence_dim), ("sent_att", cfg.thread_dim)):
        shapes += [(f"{name}.W", (d, d)), (f"{name}.b", (d,)), (f"{name}.u", (d,))]
    shapes += [("out.W", (2, cfg.output_in_dim)), ("out.b", (2,))]
    if n_categories:
        shapes += [("cat.W", (n_categories, cfg.thread_dim)), ("cat.b", (n_categories,))]
    return shapes


def _is_bias(name: str) -> bool:
    return name.rsplit(".", 1)[1].startswith("b")


def _init_values(shapes, scale: float, seed: int) -> dict[str, np.ndarray]:
    rng = np.random.default_rng(seed)
    return {
        name: np.zeros(shape) if _is_bias(name) else rng.uniform(-scale, scale, shape)
        for name, shape in shapes
    }


@dataclass
class LstmBlock:
    W: dict[str, Tensor]
    U: dict[str, Tensor]
    b: dict[str, Tensor]

    @property
    def hidden(self) -> int:
        return self.U["i"].shape[0]


class HanParams:
    """Named parameter store; iteration order is the construction order."""

    def __init__(self, params: dict[str, Param]):
        self.params = params

    @classmethod
    def init(cls, cfg: HanConfig, n_categories: int = 0, seed: int | None = None) -> "HanParams":
        seed = cfg.seed if seed is None else seed
        values = _init_values(param_shapes(cfg, n_categories), cfg.init_scale, nd.derive_seed(seed, _INIT))
        return cls.from_arrays(values)

    @classmethod
    def from_arrays(cls, arrays: dict[str, np.ndarray]) -> "HanParams":
        return cls({k: Param(v, k) for k, v in arrays.items()})

    def arrays(self) -> dict[str, np.ndarray]:
        return {k: p.value.data.copy() for k, p in self.params.items()}

    def copy(self) -> "HanParams":
        return HanParams.from_arrays(self.arrays())

    def __getitem__(self, name: str) -> Tensor:
        return self.params[name].value

    def __contains__(self, name: str) -> bool:
        return name in self.params

    def __iter__(self):
        return iter(self.params.values())

    def names(self) -> list[str]:
        return list(self.params)

    @property
    def n_categories(self) -> int:
        return self.params["cat.b"].shape[0] if "cat.b" in self.params else 0

    def lstm(self, prefix: str) -> LstmBlock:
        return LstmBlock(
            W={g: self[f"{prefix}.W_{g}"] for g in GATES},
            U={g: self[f"{prefix}.U_{g}"] for g in GATES},
            b={g: self[f"{prefix}.b_{g}"] for g in GATES},
        )

    def zero_grad(self) -> None:
        for p in self.params.values():
            p.zero_grad()

    def without_head(self, cfg: HanConfig, seed: int | None = None) -> "HanParams":
        """Drop the category head and re-initialise the summarisation output layer."""
        seed = cfg.seed if seed is None else seed
        arrays = {k: v for k, v in self.arrays().items() if not k.startswith("cat.")}
        fresh = _init_values(
            [s for s in param_shapes(cfg) if s[0].startswith("out.")],
            cfg.init_scale,
            nd.derive_seed(seed, _HEAD),
        )
        arrays.update(fresh)
        return HanParams.from_arrays(arrays)


# --------------------------------------------------------------------------
# building blocks
# --------------------------------------------------------------------------


def lstm_cell(x, h_prev, c_prev, block: LstmBlock) -> tuple[Tensor, Tensor]:
    """One LSTM step; ``x``/``h_prev``/``c_prev`` may be vectors or row batches."""

    def pre(g):
        return nd.matmul(x, nd.transpose(block.W[g])) + nd.matmul(h_prev, nd.transpose(block.U[g])) + block.b[g]

    i = nd.sigmoid(pre("i"))
    f = nd.sigmoid(pre("f"))
    o = nd.sigmoid(pre("o"))
    cand = nd.tanh(pre("c"))
    c = i * cand + f * c_prev
    h = o * nd.tanh(c)
    return h, c


def _run_direction(seq: Tensor, block: LstmBlock) -> Tensor:
    """Left-to-right recurrence over ``seq`` (T, B, in) from a zero state -> (B, T, h)."""
    T, B, n_in = seq.shape
    n_h = block.hidden
    W = nd.transpose(nd.concat([block.W[g] for g in GATES], axis=0))
    U = nd.transpose(nd.concat([block.U[g] for g in GATES], axis=0))
    bias = nd.concat([block.b[g] for g in GATES])
    xw = nd.reshape(nd.matmul(nd.reshape(seq, (T * B, n_in)), W) + bias, (T, B, 4 * n_h))
    gate_cols = (slice(None), slice(0, 3 * n_h))
    cand_cols = (slice(None), slice(3 * n_h, 4 * n_h))
    hs = []
    h = c = None
    for t in range(T):
        z = nd.take(xw, t)
        if h is not None:
            z = z + nd.matmul(h, U)
        gates = nd.sigmoid(nd.take(z, gate_cols))
        i = nd.take(gates, (slice(None), slice(0, n_h)))
        f = nd.take(gates, (slice(None), slice(n_h, 2 * n_h)))
        o = nd.take(gates, (slice(None), slice(2 * n_h, 3 * n_h)))
        cand = nd.tanh(nd.take(z, cand_cols))
        c = i * cand if c is None else i * cand + f * c
        h = o * nd.tanh(c)
        hs.append(h)
    return nd.stack(hs, axis=1)


def _lengths(mask: np.ndarray) -> np.ndarray:
    mask = np.asarray(mask, dtype=bool)
    lengths = mask.sum(axis=-1)
    prefix = np.arange(mask.shape[-1]) < lengths[..., None]
    if not np.array_equal(prefix, mask):
        raise ValueError("mask rows must be contiguous prefixes")
    return lengths


def bilstm(seq, fwd: LstmBlock, bwd: LstmBlock, mask=None) -> Tensor:
    """Bi-directional LSTM.

    ``seq`` is (T, in) for one sequence or (T, B, in) for a right-padded batch
    with ``mask`` of shape (B, T). Returns (T, 2h) or (B, T, 2h): forward and
    backward states concatenated per position. Outputs at padded positions
    are unspecified.
    """
    seq = nd.as_tensor(seq)
    single = seq.ndim == 2
    if single:
        seq = nd.reshape(seq, (seq.shape[0], 1, seq.shape[1]))
    T, B, _ = seq.shape
    if mask is None:
        mask = np.ones((B, T), dtype=bool)
    mask = np.asarray(mask, dtype=bool).reshape(B, T)
    lengths = _lengths(mask)
    if T == 0 or (lengths == 0).any():
        raise ValueError("empty sequence")
    t_idx = np.arange(T)[:, None]
    rev = np.where(t_idx < lengths[None, :], lengths[None, :] - 1 - t_idx, t_idx)  # (T, B)
    b_idx = np.arange(B)
    h_fwd = _run_direction(seq, fwd)
    if (lengths == T).all():
        seq_rev = nd.take(seq, slice(None, None, -1))
    else:
        seq_rev = nd.take(seq, (rev, b_idx[None, :]))
    h_bwd_rev = _run_direction(seq_rev, bwd)
    h_bwd = nd.take(h_bwd_rev, (b_idx[:, None], rev.T))
    out = nd.concat([h_fwd, h_bwd], axis=2)
    if single:
        out = nd.reshape(out, (T, out.shape[2]))
    return out


def attention_pool(states, W, b, u, mask=None) -> tuple[Tensor, Tensor]:
    """``pooled = sum_t alpha_t h_t`` with ``alpha = softmax(tanh(W h_t + b) . u)``.

    ``states`` is (T, d) or (B, T, d); returns pooled (d,)/(B, d) and alpha.
    """
    states = nd.as_tensor(states)
    proj = nd.tanh(nd.matmul(states, nd.transpose(W)) + b)
    logits = nd.matmul(proj, nd.as_tensor(u))
    alpha = nd.masked_softmax(logits, mask)
    return nd.weighted_sum(alpha, states), alpha


# --------------------------------------------------------------------------
# encoders
# --------------------------------------------------------------------------


@dataclass
class EncodedThread:
    sentence_vectors: Tensor  # (n, 2*word_hidden)
    contextual: Tensor  # (n, 2*sent_hidden)
    thread_vector: Tensor  # (2*sent_hidden,)
    word_attention: list[np.ndarray]
    sentence_attention: np.ndarray
    rows: np.ndarray  # input row of each encoded sentence


def embed_thread(
    sentences: Sequence[Sequence[str]], table: EmbeddingTable, cfg: HanConfig
) -> tuple[np.ndarray, np.ndarray]:
    """Truncate to the configured sizes and right-pad: ``(N, T, E)`` plus a word mask."""
    sents = [list(s)[: cfg.max_words] for s in list(sentences)[: cfg.max_sentences]]
    n = len(sents)
    t = max((len(s) for s in sents), default=0)
    emb = np.zeros((n, t, table.dim))
    mask = np.zeros((n, t), dtype=bool)
    for i, s in enumerate(sents):
        if s:
            emb[i, : len(s)] = table.embed(s)
            mask[i, : len(s)] = True
    return emb, mask


def _encode_words(emb: np.ndarray, mask: np.ndarray, params: HanParams, cfg: HanConfig, training: bool, seed: int):
    x = Tensor(np.ascontiguousarray(emb.transpose(1, 0, 2)))  # (T, B, E)
    x = nd.dropout(x, cfg.embed_dropout, nd.derive_seed(seed, _EMBED_DROP), training)
    states = bilstm(x, params.lstm("lstm1"), params.lstm("lstm2"), mask)
    return attention_pool(states, params["word_att.W"], params["word_att.b"], params["word_att.u"], mask)


def encode_sentence(
    emb, params: HanParams, cfg: HanConfig, mask=None, training: bool = False, seed: int = 0
) -> tuple[Tensor, np.ndarray]:
    """Sentence vector (2*word_hidden,) and word attention for one embedded sentence (T, E)."""
    emb = np.asarray(emb, dtype=np.float64)[: cfg.max_words]
    mask = np.ones(len(emb), dtype=bool) if mask is None else np.asarray(mask, dtype=bool)[: cfg.max_words]
    if not mask.any():
        raise ValueError("empty sentence")
    n = int(mask.sum())
    vec, alpha = _encode_words(emb[None, :n], mask[None, :n], params, cfg, training, seed)
    return nd.reshape(vec, (vec.shape[1],)), alpha.data[0]


def encode_thread(
    emb, mask, params: HanParams, cfg: HanConfig, training: bool = False, seed: int = 0
) -> EncodedThread:
    """Encode a padded thread ``emb`` (N, T, E) with word ``mask`` (N, T).

    Rows without any valid word are padding and get no sentence state.
    """
    emb = np.asarray(emb, dtype=np.float64)[: cfg.max_sentences, : cfg.max_words]
    mask = np.asarray(mask, dtype=bool)[: cfg.max_sentences, : cfg.max_words]
    lengths = _lengths(mask)
    rows = np.flatnonzero(lengths)
    if len(rows) == 0:
        raise ValueError("empty thread")
    t_eff = int(lengths[rows].max())
    sent_vecs, word_alpha = _encode_words(emb[rows, :t_eff], mask[rows, :t_eff], params, cfg, training, seed)
    n, d = sent_vecs.shape
    ctx = bilstm(nd.reshape(sent_vecs, (n, 1, d)), params.lstm("lstm3"), params.lstm("lstm4"))
    ctx = nd.reshape(ctx, (n, cfg.thread_dim))
    thread_vec, sent_alpha = attention_pool(ctx, params["sent_att.W"], params["sent_att.b"], params["sent_att.u"])
    return EncodedThread(
        sentence_vectors=sent_vecs,
        contextual=ctx,
        thread_vector=thread_vec,
        word_attention=[word_alpha.data[k, : lengths[r]] for k, r in enumerate(rows)],
        sentence_attention=sent_alpha.data,
        rows=rows,
    )


def class_probabilities(
    enc: EncodedThread, params: HanParams, cfg: HanConfig, training: bool = False, seed: int = 0
) -> Tensor:
    """(n, 2) softmax over {not in summary, in summary} for each encoded sentence."""
    left = enc.sentence_vectors if cfg.output_input == "sentence" else enc.contextual
    n = left.shape[0]
    thread_rows = nd.take(nd.reshape(enc.thread_vector, (1, cfg.thread_dim)), np.zeros(n, dtype=np.intp))
    x = nd.concat([left, thread_rows], axis=1)
    x = nd.dropout(x, cfg.output_dropout, nd.derive_seed(seed, _OUT_DROP), training)
    logits = nd.matmul(x, nd.transpose(params["out.W"])) + params["out.b"]
    return nd.masked_softmax(logits)


def score_sentences(
    enc: EncodedThread, params: HanParams, cfg: HanConfig, training: bool = False, seed: int = 0
) -> Tensor:
    """p(in summary) for each encoded sentence."""
    return nd.take(class_probabilities(enc, params, cfg, training, seed), (slice(None), 1))


def loss(scores, labels, pos_weight: float = 1.0) -> Tensor:
    """Mean weighted cross-entropy; ``scores`` is p(1) per sentence or (n, 2) class probabilities."""
    scores = nd.as_tensor(scores)
    labels = np.asarray(labels, dtype=np.intp)
    if scores.shape[0] != len(labels):
        raise ValueError(f"{scores.shape[0]} scores for {len(labels)} labels")
    if not np.isin(labels, (0, 1)).all():
        raise ValueError("labels must be 0 or 1")
    probs = nd.stack([1.0 - scores, scores], axis=1) if scores.ndim == 1 else scores
    weights = np.where(labels == 1, pos_weight, 1.0)
    return nd.cross_entropy(probs, labels, weights)


# --------------------------------------------------------------------------
# corpus-level helpers
# --------------------------------------------------------------------------


@dataclass
class PreparedThread:
    emb: np.ndarray
    mask: np.ndarray
    rows: np.ndarray
    n_sentences: int
    labels: np.ndarray | None = None
    category: int | None = None


def prepare_thread(thread: Thread, table: EmbeddingTable, cfg: HanConfig) -> PreparedThread:
    emb, mask = embed_thread(thread.sentences, table, cfg)
    rows = np.flatnonzero(mask.any(axis=1))
    labels = None if thread.labels is None else np.asarray(thread.labels, dtype=np.intp)[rows]
    return PreparedThread(emb, mask, rows, thread.n_sentences, labels)


def predict_scores(
    thread: Thread | PreparedThread, params: HanParams, cfg: HanConfig, table: EmbeddingTable | None = None
) -> tuple[np.ndarray, np.ndarray]:
    """Inference-mode scores over all sentences of ``thread`` plus a mask of
    which sentences were scored (empty or truncated ones are not)."""
    prep = thread if isinstance(thread, PreparedThread) else prepare_thread(thread, table, cfg)
    scores = np.zeros(prep.n_sentences)
    scored = np.zeros(prep.n_sentences, dtype=bool)
    if len(prep.rows):
        enc = encode_thread(prep.emb, prep.mask, params, cfg)
        scores[enc.rows] = score_sentences(enc, params, cfg).data
        scored[enc.rows] = True
    return scores, scored


def corpus_loss(prepared: Sequence[PreparedThread], params: HanParams, cfg: HanConfig) -> float:
    """Mean inference-mode loss over labelled threads."""
    values = []
    for prep in prepared:
        enc = encode_thread(prep.emb, prep.mask, params, cfg)
        values.append(loss(class_probabilities(enc, params, cfg), prep.labels, cfg.pos_weight).item())
    return float(np.mean(values)) if values else float("nan")


def _optimise(
    prepared: list[PreparedThread],
    params: HanParams,
    cfg: HanConfig,
    step_loss: Callable[[PreparedThread, int], Tensor],
    on_epoch: Callable[[int, float], None] | None,
) -> list[float]:
    shuffle = np.random.default_rng(nd.derive_seed(cfg.seed, _SHUFFLE))
    history = []
    for epoch in range(cfg.epochs):
        losses = []
        for j, k in enumerate(shuffle.permutation(len(prepared))):
            params.zero_grad()
            with Tape() as tape:
                value = step_loss(prepared[k], nd.derive_seed(cfg.seed, _STEP, epoch, j))
            nd.backward(tape, value)
            for p in params:
                nd.rmsprop_step(p, cfg.optimizer)
            losses.append(value.item())
        history.append(float(np.mean(losses)) if losses else float("nan"))
        if on_epoch is not None:
            on_epoch(epoch, history[-1])
    params.zero_grad()
    return history


def train(
    threads: Sequence[Thread],
    cfg: HanConfig,
    table: EmbeddingTable | None = None,
    init: HanParams | None = None,
    on_epoch: Callable[[int, float], None] | None = None,
) -> tuple[HanParams, list[float]]:
    """Train the summariser, one thread per RMSProp step; returns (params, per-epoch mean loss)."""
    if any(t.labels is None for t in threads):
        raise ValueError("every training thread needs gold labels")
    table = table or EmbeddingTable(cfg.embed_dim, oov_seed=cfg.oov_seed)
    prepared = [p for p in (prepare_thread(t, table, cfg) for t in threads) if len(p.rows)]
    params = init.copy() if init is not None else HanParams.init(cfg)

    def step(prep: PreparedThread, seed: int) -> Tensor:
        enc = encode_thread(prep.emb, prep.mask, params, cfg, training=True, seed=seed)
        probs = class_probabilities(enc, params, cfg, training=True, seed=seed)
        return loss(probs, prep.labels, cfg.pos_weight)

    history = _optimise(prepared, params, cfg, step, on_epoch)
    return params, history


def category_probabilities(enc: EncodedThread, params: HanParams, cfg: HanConfig) -> Tensor:
    s = nd.reshape(enc.thread_vector, (1, cfg.thread_dim))
    logits = nd.matmul(s, nd.transpose(params["cat.W"])) + params["cat.b"]
    return nd.masked_softmax(logits)


def train_classifier(
    threads: Sequence[Thread],
    cfg: HanConfig,
    table: EmbeddingTable | None = None,
    on_epoch: Callable[[int, float], None] | None = None,
) -> tuple[HanParams, list[str], list[float]]:
    """Thread-category classifier on the thread vector; returns params with
    the ``cat.*`` head, the category names and the loss history."""
    cats = [t.category for t in threads]
    if any(c is None for c in cats):
        raise ValueError("every pretraining thread needs a category label")
    names = sorted(set(cats))
    if len(names) < 2:
        raise ValueError("pretraining needs at least two distinct categories")
    table = table or EmbeddingTable(cfg.embed_dim, oov_seed=cfg.oov_seed)
    prepared = []
    for t in threads:
        prep = prepare_thread(t, table, cfg)
        if len(prep.rows):
            prep.category = names.index(t.category)
            prepared.append(prep)
    params = HanParams.init(cfg, n_categories=len(names))

    def step(prep: PreparedThread, seed: int) -> Tensor:
        enc = encode_thread(prep.emb, prep.mask, params, cfg, training=True, seed=seed)
        return nd.cross_entropy(category_probabilities(enc, params, cfg), [prep.category])

    history = _optimise(prepared, params, cfg, step, on_epoch)
    return params, names, history


def predict_category(thread: Thread | PreparedThread, params: HanParams, cfg: HanConfig, table=None) -> int:
    prep = thread if isinstance(thread, PreparedThread) else prepare_thread(thread, table, cfg)
    enc = encode_thread(prep.emb, prep.mask, params, cfg)
    return int(np.argmax(category_probabilities(enc, params, cfg).data[0]))


def pretrain_classifier(
    threads: Sequence[Thread], cfg: HanConfig, table: EmbeddingTable | None = None
) -> HanParams:
    """Warm-start encoders on category classification; the head is discarded
    and the summarisation output layer freshly initialised."""
    params, _, _ = train_classifier(threads, cfg, table)
    return params.without_head(cfg)


# --------------------------------------------------------------------------
# checkpoints
# --------------------------------------------------------------------------


def save_checkpoint(path: str | Path, params: HanParams, cfg: HanConfig) -> None:
    meta = {"format": "threadsum-han", "version": CHECKPOINT_VERSION, "config": cfg.to_dict()}
    arrays = params.arrays()
    with open(path, "wb") as fh:
        np.savez(fh, __meta__=np.array(json.dumps(meta)), __order__=np.array(list(arrays)), **arrays)


def load_checkpoint(path: str | Path) -> tuple[HanParams, HanConfig]:
    with np.load(path, allow_pickle=False) as z:
        meta = json.loads(str(z["__meta__"]))
        if meta.get("format") != "threadsum-han" or meta.get("version") != CHECKPOINT_VERSION:
            raise ValueError(f"{path}: not a version-{CHECKPOINT_VERSION} threadsum checkpoint")
        order = [str(k) for k in z["__order__"]]
        arrays = {k: z[k] for k in order}
    return HanParams.from_arrays(arrays), HanConfig.from_dict(meta["config"])
