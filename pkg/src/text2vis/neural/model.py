"""Question-schema encoder with layer-wise n-gram injection and an
LSTM pointer-generator decoder.

The encoder serializes [CLS] q1..qm [SEP] T1 [SEP] c11 [SEP] ... and runs a
small transformer; a parallel transformer over matched n-grams produces
per-layer n-gram states that are added into the question-character
positions they cover after each encoder layer. The decoder is a single
LSTM with attention over the encoder states; at each step it mixes a
vocabulary softmax (weight p_gen) with a pointer distribution over schema
table/column slots (weight 1 - p_gen).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, asdict

import numpy as np

from ..ngrams import NGramLattice
from ..schema import DatabaseSchema
from .tensor import Tensor, concat, embedding

__all__ = [
    "ModelConfig", "InputVocab", "PointerSlot", "SerializedInput",
    "StepDistribution", "LengthError", "Params",
    "serialize_input", "init_params", "encode", "init_decoder", "decode_step",
    "VQL_KEYWORD_TOKENS", "SPECIALS",
]


class LengthError(ValueError):
    pass


#: Output-vocabulary specials. <s> starts decoding, </s> finishes a hypothesis.
SPECIALS = ["<s>", "</s>"]

#: Every VQL keyword/punctuation surface the decoder can generate. Literal
#: tokens from the training corpus are appended after these.
VQL_KEYWORD_TOKENS = [
    "VISUALIZE", "SELECT", "COLOR", "FROM", "JOIN", "ON", "WHERE", "AND",
    "GROUP", "BY", "BIN", "ORDER", "ASC", "DESC",
    "BAR", "PIE", "LINE", "SCATTER", "STACKED", "GROUPED",
    "COUNT", "SUM", "AVG", "MIN", "MAX",
    "BETWEEN", "IN", "LIKE",
    "YEAR", "MONTH", "WEEKDAY", "DAY", "INTERVAL",
    "X", "Y",
    "=", "!=", "<", "<=", ">", ">=", "(", ")", ",", ".", "*",
]

_KINDS = ("CLS", "QCHAR", "SEP", "TABLE", "COLUMN")
_KIND_ID = {k: i for i, k in enumerate(_KINDS)}


@dataclass(frozen=True)
class ModelConfig:
    d_model: int = 64
    n_layers: int = 2
    n_heads: int = 4
    d_ngram: int = 32
    d_lstm: int = 96
    max_len: int = 128
    max_decode_len: int = 64
    seed: int = 0
    vocab: tuple[str, ...] = ()        # output: specials + keywords + literals
    input_vocab: tuple[str, ...] = ()  # specials + question chars + schema names
    ngram_vocab_size: int = 0
    injection: str = "add"             # "add" | "mean"
    hard_pointer_mask: bool = False
    optimizer: str = "adam"            # "adam" | "sgd"
    lr: float = 1e-3
    grad_clip: float = 1.0

    def __post_init__(self) -> None:
        if self.d_model % self.n_heads != 0:
            raise ValueError("d_model must be divisible by n_heads")
        for name in ("d_model", "n_layers", "n_heads", "d_ngram", "d_lstm"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True)

    @staticmethod
    def from_json(text: str) -> "ModelConfig":
        doc = json.loads(text)
        doc["vocab"] = tuple(doc["vocab"])
        doc["input_vocab"] = tuple(doc["input_vocab"])
        return ModelConfig(**doc)


@dataclass(frozen=True)
class InputVocab:
    """Surface-form lookup for encoder embedding ids."""

    tokens: tuple[str, ...]
    index: dict[str, int] = field(repr=False, default_factory=dict)

    UNK = 0
    CLS = 1
    SEP = 2

    @staticmethod
    def build(questions: list[str], schemas: list[DatabaseSchema]) -> "InputVocab":
        surfaces: set[str] = set()
        for question in questions:
            surfaces.update(question)
        for schema in schemas:
            for t in schema.tables:
                surfaces.add(t.name.lower())
                for c in t.columns:
                    surfaces.add(c.name.lower())
        tokens = ("[UNK]", "[CLS]", "[SEP]") + tuple(sorted(surfaces))
        return InputVocab(tokens, {s: i for i, s in enumerate(tokens)})

    def id(self, surface: str) -> int:
        return self.index.get(surface, self.UNK)


@dataclass(frozen=True)
class PointerSlot:
    kind: str  # "table" | "column"
    table: str
    column: str | None
    position: int  # token index in the serialized sequence

    def surface(self) -> str:
        return self.table if self.kind == "table" else f"{self.table}.{self.column}"


@dataclass(frozen=True)
class SerializedInput:
    tokens: tuple[tuple[str, str, int], ...]  # (kind, surface, embedding id)
    pointer_map: tuple[PointerSlot, ...]

    @property
    def ids(self) -> np.ndarray:
        return np.array([t[2] for t in self.tokens], dtype=np.int64)

    @property
    def kind_ids(self) -> np.ndarray:
        return np.array([_KIND_ID[t[0]] for t in self.tokens], dtype=np.int64)

    @property
    def question_positions(self) -> np.ndarray:
        return np.array([i for i, t in enumerate(self.tokens) if t[0] == "QCHAR"],
                        dtype=np.int64)


def serialize_input(question: str, schema: DatabaseSchema, vocab: InputVocab,
                    max_len: int = 128) -> SerializedInput:
    """[CLS] q1..qm [SEP] T1 [SEP] c11 [SEP] c12 [SEP] T2 ... with one
    pointer slot per table and per column, in schema declaration order."""
    if not question:
        raise ValueError("question is empty")
    tokens: list[tuple[str, str, int]] = [("CLS", "[CLS]", vocab.CLS)]
    for ch in question:
        tokens.append(("QCHAR", ch, vocab.id(ch)))
    pointer_map: list[PointerSlot] = []
    for t in schema.tables:
        tokens.append(("SEP", "[SEP]", vocab.SEP))
        pointer_map.append(PointerSlot("table", t.name.lower(), None, len(tokens)))
        tokens.append(("TABLE", t.name.lower(), vocab.id(t.name.lower())))
        for c in t.columns:
            tokens.append(("SEP", "[SEP]", vocab.SEP))
            pointer_map.append(
                PointerSlot("column", t.name.lower(), c.name.lower(), len(tokens)))
            tokens.append(("COLUMN", c.name.lower(), vocab.id(c.name.lower())))
    if len(tokens) > max_len:
        raise LengthError(f"{len(tokens)} tokens exceed max_len={max_len}")
    return SerializedInput(tuple(tokens), tuple(pointer_map))


@dataclass(frozen=True)
class StepDistribution:
    """Probability mass over vocabulary entries followed by pointer slots."""

    probs: Tensor  # shape (|vocab| + |pointer_map|,)
    p_gen: Tensor  # scalar in [0, 1]


class Params(dict):
    """Name -> Tensor in declaration order (dict preserves insertion)."""

    def add(self, name: str, array: np.ndarray) -> Tensor:
        t = Tensor(array, requires_grad=True)
        self[name] = t
        return t


def init_params(config: ModelConfig, dtype=np.float32) -> Params:
    rng = np.random.default_rng(config.seed)
    p = Params()
    d, dn, dl = config.d_model, config.d_ngram, config.d_lstm
    v_in, v_out = len(config.input_vocab), len(config.vocab)

    def norm(*shape, scale=None):
        scale = scale if scale is not None else 1.0 / np.sqrt(shape[0])
        return (rng.standard_normal(shape) * scale).astype(dtype)

    def zeros(*shape):
        return np.zeros(shape, dtype=dtype)

    def ones(*shape):
        return np.ones(shape, dtype=dtype)

    p.add("emb_in", norm(v_in, d, scale=0.1))
    p.add("emb_kind", norm(len(_KINDS), d, scale=0.1))
    p.add("emb_pos", norm(config.max_len, d, scale=0.1))
    for l in range(config.n_layers):
        for w in ("wq", "wk", "wv", "wo"):
            p.add(f"enc{l}.{w}", norm(d, d))
        p.add(f"enc{l}.ln1_g", ones(d)); p.add(f"enc{l}.ln1_b", zeros(d))
        p.add(f"enc{l}.ffn_w1", norm(d, 4 * d)); p.add(f"enc{l}.ffn_b1", zeros(4 * d))
        p.add(f"enc{l}.ffn_w2", norm(4 * d, d)); p.add(f"enc{l}.ffn_b2", zeros(d))
        p.add(f"enc{l}.ln2_g", ones(d)); p.add(f"enc{l}.ln2_b", zeros(d))
    p.add("emb_ngram", norm(max(config.ngram_vocab_size, 1), dn, scale=0.1))
    for l in range(config.n_layers):
        for w in ("wq", "wk", "wv", "wo"):
            p.add(f"ng{l}.{w}", norm(dn, dn))
        p.add(f"ng{l}.ln1_g", ones(dn)); p.add(f"ng{l}.ln1_b", zeros(dn))
        p.add(f"ng{l}.ffn_w1", norm(dn, 4 * dn)); p.add(f"ng{l}.ffn_b1", zeros(4 * dn))
        p.add(f"ng{l}.ffn_w2", norm(4 * dn, dn)); p.add(f"ng{l}.ffn_b2", zeros(dn))
        p.add(f"ng{l}.ln2_g", ones(dn)); p.add(f"ng{l}.ln2_b", zeros(dn))
        p.add(f"inj{l}.w", norm(dn, d)); p.add(f"inj{l}.b", zeros(d))
    p.add("dec.init_h_w", norm(d, dl)); p.add("dec.init_h_b", zeros(dl))
    p.add("dec.init_c_w", norm(d, dl)); p.add("dec.init_c_b", zeros(dl))
    p.add("emb_out", norm(v_out, d, scale=0.1))
    p.add("dec.lstm_wx", norm(d, 4 * dl))
    p.add("dec.lstm_wh", norm(dl, 4 * dl))
    lstm_b = zeros(4 * dl)
    lstm_b[dl:2 * dl] = 1.0  # forget-gate bias: remember by default
    p.add("dec.lstm_b", lstm_b)
    p.add("dec.att_w", norm(dl, d))
    p.add("dec.ptr_w", norm(dl, d))
    p.add("dec.vocab_w", norm(dl + d, v_out)); p.add("dec.vocab_b", zeros(v_out))
    p.add("dec.gen_w", norm(dl + d, 1)); p.add("dec.gen_b", zeros(1))
    return p


def _layer_norm(x: Tensor, g: Tensor, b: Tensor, eps: float = 1e-5) -> Tensor:
    mu = x.mean(axis=-1, keepdims=True)
    centered = x - mu
    var = (centered * centered).mean(axis=-1, keepdims=True)
    return centered * (var + eps).pow(-0.5) * g + b


def _mhsa(x: Tensor, p: Params, prefix: str, n_heads: int) -> Tensor:
    length, d = x.shape
    dh = d // n_heads
    q = (x @ p[f"{prefix}.wq"]).reshape(length, n_heads, dh).transpose(1, 0, 2)
    k = (x @ p[f"{prefix}.wk"]).reshape(length, n_heads, dh).transpose(1, 0, 2)
    v = (x @ p[f"{prefix}.wv"]).reshape(length, n_heads, dh).transpose(1, 0, 2)
    scores = (q @ k.transpose(0, 2, 1)) * (1.0 / np.sqrt(dh))
    attn = scores.softmax(axis=-1)
    mixed = (attn @ v).transpose(1, 0, 2).reshape(length, d)
    return mixed @ p[f"{prefix}.wo"]


def _encoder_layer(x: Tensor, p: Params, prefix: str, n_heads: int) -> Tensor:
    # pre-LN residual blocks: stabler to optimize at desk scale
    x = x + _mhsa(_layer_norm(x, p[f"{prefix}.ln1_g"], p[f"{prefix}.ln1_b"]),
                  p, prefix, n_heads)
    h = (_layer_norm(x, p[f"{prefix}.ln2_g"], p[f"{prefix}.ln2_b"])
         @ p[f"{prefix}.ffn_w1"] + p[f"{prefix}.ffn_b1"]).relu()
    return x + h @ p[f"{prefix}.ffn_w2"] + p[f"{prefix}.ffn_b2"]


def encode(inp: SerializedInput, lattice: NGramLattice, params: Params,
           config: ModelConfig, capture: list | None = None) -> Tensor:
    """Run the joint encoder; returns H of shape (token count, d_model).

    After each layer, every question-character position covered by a
    matched n-gram receives the n-gram encoder's layer output for that
    match (added, or mean-pooled when config.injection == "mean"); schema
    positions are never injected. With an empty lattice the output is
    bit-identical to the same encoder with injection disabled.

    capture, when given, collects the pre-attention hidden state entering
    each layer (numpy copies) for instrumentation.
    """
    length = len(inp.tokens)
    if length > config.max_len:
        raise LengthError(f"{length} tokens exceed max_len={config.max_len}")
    ids, kinds = inp.ids, inp.kind_ids
    x = (embedding(params["emb_in"], ids)
         + embedding(params["emb_kind"], kinds)
         + embedding(params["emb_pos"], np.arange(length)))

    matches = lattice.matches
    ngram_state: Tensor | None = None
    if matches:
        ngram_ids = np.array([m[2] for m in matches], dtype=np.int64)
        ngram_state = embedding(params["emb_ngram"], ngram_ids)
        # question char token index = 1 + lattice char index ([CLS] first)
        coverage: dict[int, list[int]] = {}
        for k, (start, n, _gid) in enumerate(matches):
            for offset in range(n):
                coverage.setdefault(1 + start + offset, []).append(k)

    for l in range(config.n_layers):
        if capture is not None:
            capture.append(x.data.copy())
        x = _encoder_layer(x, params, f"enc{l}", config.n_heads)
        if ngram_state is not None:
            ngram_state = _encoder_layer(ngram_state, params, f"ng{l}", config.n_heads
                                         if config.d_ngram % config.n_heads == 0 else 1)
            g = ngram_state @ params[f"inj{l}.w"] + params[f"inj{l}.b"]
            inj = np.zeros((length, len(matches)), dtype=x.dtype)
            for pos, ks in coverage.items():
                weight = 1.0 / len(ks) if config.injection == "mean" else 1.0
                for k in ks:
                    inj[pos, k] = weight
            x = x + Tensor(inj) @ g
    return x


def init_decoder(H: Tensor, params: Params) -> tuple[Tensor, Tensor]:
    """Derive the LSTM (hidden, cell) start state from the CLS position."""
    cls = H[0]
    h = (cls @ params["dec.init_h_w"] + params["dec.init_h_b"]).tanh()
    c = (cls @ params["dec.init_c_w"] + params["dec.init_c_b"]).tanh()
    return h, c


def _lstm_step(x: Tensor, h: Tensor, c: Tensor, params: Params
               ) -> tuple[Tensor, Tensor]:
    dl = h.shape[0]
    gates = x @ params["dec.lstm_wx"] + h @ params["dec.lstm_wh"] + params["dec.lstm_b"]
    i = gates[0:dl].sigmoid()
    f = gates[dl:2 * dl].sigmoid()
    o = gates[2 * dl:3 * dl].sigmoid()
    g = gates[3 * dl:4 * dl].tanh()
    c_new = f * c + i * g
    return o * c_new.tanh(), c_new


def prev_token_embedding(token_index: int, vocab_size: int, H: Tensor,
                         pointer_map: tuple[PointerSlot, ...],
                         params: Params) -> Tensor:
    """Vocabulary tokens use the output embedding table; pointer tokens
    reuse the encoder state at the slot's position."""
    if token_index < vocab_size:
        return embedding(params["emb_out"], np.int64(token_index))
    slot = pointer_map[token_index - vocab_size]
    return H[slot.position]


def decode_step(state: tuple[Tensor, Tensor], H: Tensor,
                pointer_map: tuple[PointerSlot, ...], prev_token: int,
                params: Params, config: ModelConfig
                ) -> tuple[StepDistribution, tuple[Tensor, Tensor]]:
    """One LSTM step with attention over H.

    P(w) = p_gen * P_vocab(w) for vocabulary entries and
    (1 - p_gen) * alpha(slot) for pointer entries, where alpha is the
    pointer attention softmax restricted to slot token positions, so the
    full distribution always sums to 1.
    """
    h, c = state
    x = prev_token_embedding(prev_token, len(config.vocab), H, pointer_map, params)
    h, c = _lstm_step(x, h, c, params)

    scores = H @ (h @ params["dec.att_w"])  # (len,)
    alpha = scores.softmax(axis=-1)
    context = alpha @ H
    hc = concat([h, context], axis=0)

    vocab_logits = hc @ params["dec.vocab_w"] + params["dec.vocab_b"]
    p_vocab = vocab_logits.softmax(axis=-1)
    p_gen = (hc @ params["dec.gen_w"] + params["dec.gen_b"]).sigmoid()[0]

    slot_positions = np.array([s.position for s in pointer_map], dtype=np.int64)
    ptr_scores = (H @ (h @ params["dec.ptr_w"]))[slot_positions]
    p_ptr = ptr_scores.softmax(axis=-1)

    if config.hard_pointer_mask:
        # Hard gate ablation: commit to one branch instead of mixing.
        take_vocab = float(p_gen.data) >= 0.5
        zeros_v = Tensor(np.zeros(len(config.vocab), dtype=H.dtype))
        zeros_p = Tensor(np.zeros(len(pointer_map), dtype=H.dtype))
        if take_vocab:
            probs = concat([p_vocab, zeros_p], axis=0)
        else:
            probs = concat([zeros_v, p_ptr], axis=0)
    else:
        probs = concat([p_vocab * p_gen, p_ptr * (1.0 - p_gen)], axis=0)
    return StepDistribution(probs=probs, p_gen=p_gen), (h, c)
