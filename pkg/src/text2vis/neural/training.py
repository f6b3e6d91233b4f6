"""Teacher-forced training, gold-sequence tokenization, and the
finite-difference gradient check.

Training is seeded, single-threaded, and deterministic: identical config
and corpus give bit-identical loss curves. The per-step loss is
-log P(gold token); table/column tokens in gold VQL supervise their
pointer slots.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from ..dataset import Sample
from ..ngrams import Lexicon, match_ngrams
from ..schema import DatabaseSchema
from ..vql import canonicalize, parse_vql, tree_match, unparse_vql, tokenize
from .model import (
    InputVocab,
    ModelConfig,
    Params,
    PointerSlot,
    SPECIALS,
    SerializedInput,
    VQL_KEYWORD_TOKENS,
    decode_step,
    encode,
    init_decoder,
    init_params,
    serialize_input,
)
from .tensor import Tensor

__all__ = [
    "OOVError", "TrainResult", "build_output_vocab", "prepare_config",
    "tokenize_gold", "detokenize", "train", "training_accuracy",
    "grad_check", "detached", "sample_loss",
]

BOS, EOS = 0, 1  # positions of <s> and </s> in the output vocabulary


class OOVError(ValueError):
    """A gold VQL token is neither a vocabulary entry nor a schema element."""


@dataclass
class TrainResult:
    params: Params
    config: ModelConfig
    loss_curve: list[float]
    accuracy_curve: list[tuple[int, float]]  # (epoch, training tree-match)


def build_output_vocab(samples: list[Sample]) -> tuple[str, ...]:
    """Specials + VQL keywords + literal tokens observed in the corpus."""
    literals: set[str] = set()
    for s in samples:
        for tok in tokenize(s.vql_text):
            if tok.kind in ("NUMBER", "STRING"):
                literals.add(tok.value)
    return tuple(SPECIALS + VQL_KEYWORD_TOKENS + sorted(literals))


def prepare_config(base: ModelConfig, samples: list[Sample],
                   schemas: dict[str, DatabaseSchema],
                   lexicon: Lexicon) -> ModelConfig:
    """Fill the vocabulary fields that determine the parameter count."""
    return replace(
        base,
        vocab=build_output_vocab(samples),
        input_vocab=InputVocab.build(
            [s.question_zh for s in samples], list(schemas.values())).tokens,
        ngram_vocab_size=len(lexicon),
    )


def _slot_lookup(pointer_map: tuple[PointerSlot, ...]):
    tables: dict[str, int] = {}
    columns: dict[tuple[str, str], int] = {}
    by_column: dict[str, list[int]] = {}
    for i, slot in enumerate(pointer_map):
        if slot.kind == "table":
            tables[slot.table] = i
        else:
            columns[(slot.table, slot.column)] = i
            by_column.setdefault(slot.column, []).append(i)
    return tables, columns, by_column


def tokenize_gold(vql_text: str, pointer_map: tuple[PointerSlot, ...],
                  vocab: tuple[str, ...]) -> list[int]:
    """Map a gold VQL string to target indices: vocabulary ids for keywords
    and literals, |vocab|+slot ids for schema elements. Ends with </s>."""
    vocab_index = {s: i for i, s in enumerate(vocab)}
    tables, columns, by_column = _slot_lookup(pointer_map)
    toks = tokenize(vql_text)
    out: list[int] = []
    i = 0
    while toks[i].kind != "EOF":
        tok = toks[i]
        if tok.kind == "IDENT":
            surface = tok.value.lower()
            # ORDER BY X/Y is an axis keyword, not a schema element.
            if surface in ("x", "y") and i >= 2 and toks[i - 1].value == "BY" \
                    and toks[i - 2].value == "ORDER":
                out.append(vocab_index[surface.upper()])
                i += 1
                continue
            if toks[i + 1].value == "." and toks[i + 2].kind == "IDENT":
                key = (surface, toks[i + 2].value.lower())
                if key not in columns:
                    raise OOVError(f"no schema column {key[0]}.{key[1]}")
                out.append(len(vocab) + columns[key])
                i += 3
                continue
            if surface in tables:
                out.append(len(vocab) + tables[surface])
            elif len(by_column.get(surface, [])) == 1:
                out.append(len(vocab) + by_column[surface][0])
            else:
                raise OOVError(f"identifier {tok.value!r} is not a unique schema element")
        else:
            idx = vocab_index.get(tok.value)
            if idx is None:
                raise OOVError(f"token {tok.value!r} is not in the output vocabulary")
            out.append(idx)
        i += 1
    out.append(EOS)
    return out


def detokenize(indices: list[int], pointer_map: tuple[PointerSlot, ...],
               vocab: tuple[str, ...]) -> str:
    parts = []
    for idx in indices:
        if idx in (BOS, EOS):
            continue
        if idx < len(vocab):
            surface = vocab[idx]
            parts.append("Visualize" if surface == "VISUALIZE" else surface)
        else:
            parts.append(pointer_map[idx - len(vocab)].surface())
    return " ".join(parts)


def detached(params: Params) -> Params:
    """Share data, drop gradients: for decoding and evaluation passes."""
    out = Params()
    for name, t in params.items():
        out[name] = Tensor(t.data)
    return out


def sample_loss(inp: SerializedInput, lattice, gold: list[int], params: Params,
                config: ModelConfig) -> Tensor:
    """Teacher-forced mean negative log-likelihood over the gold sequence."""
    H = encode(inp, lattice, params, config)
    state = init_decoder(H, params)
    prev = BOS
    terms = []
    for target in gold:
        dist, state = decode_step(state, H, inp.pointer_map, prev, params, config)
        terms.append(-(dist.probs[target] + 1e-9).log())
        prev = target
    total = terms[0]
    for t in terms[1:]:
        total = total + t
    return total * (1.0 / len(terms))


@dataclass
class _PreparedSample:
    sample: Sample
    inp: SerializedInput
    lattice: object
    gold: list[int]


def _prepare(samples: list[Sample], schemas: dict[str, DatabaseSchema],
             lexicon: Lexicon, config: ModelConfig,
             vocab_obj: InputVocab) -> list[_PreparedSample]:
    prepared = []
    for s in samples:
        schema = schemas[s.db_id]
        inp = serialize_input(s.question_zh, schema, vocab_obj, config.max_len)
        lattice = match_ngrams(s.question_zh, lexicon)
        gold_text = unparse_vql(canonicalize(parse_vql(s.vql_text), schema))
        gold = tokenize_gold(gold_text, inp.pointer_map, config.vocab)
        prepared.append(_PreparedSample(s, inp, lattice, gold))
    return prepared


def _clip_global_norm(params: Params, clip: float) -> None:
    total = 0.0
    for t in params.values():
        if t.grad is not None:
            total += float((t.grad.astype(np.float64) ** 2).sum())
    norm = np.sqrt(total)
    if norm > clip:
        scale = clip / norm
        for t in params.values():
            if t.grad is not None:
                t.grad *= scale


class _Optimizer:
    def __init__(self, params: Params, config: ModelConfig) -> None:
        self.params = params
        self.config = config
        self.t = 0
        if config.optimizer == "adam":
            self.m = {k: np.zeros_like(v.data) for k, v in params.items()}
            self.v = {k: np.zeros_like(v.data) for k, v in params.items()}
        elif config.optimizer != "sgd":
            raise ValueError(f"unknown optimizer {config.optimizer!r}")

    def step(self) -> None:
        cfg = self.config
        _clip_global_norm(self.params, cfg.grad_clip)
        self.t += 1
        for name, tensor in self.params.items():
            if tensor.grad is None:
                continue
            g = tensor.grad
            if cfg.optimizer == "sgd":
                tensor.data -= (cfg.lr * g).astype(tensor.data.dtype)
            else:
                b1, b2, eps = 0.9, 0.999, 1e-8
                self.m[name] = b1 * self.m[name] + (1 - b1) * g
                self.v[name] = b2 * self.v[name] + (1 - b2) * g * g
                mhat = self.m[name] / (1 - b1 ** self.t)
                vhat = self.v[name] / (1 - b2 ** self.t)
                tensor.data -= (cfg.lr * mhat / (np.sqrt(vhat) + eps)
                                ).astype(tensor.data.dtype)
            tensor.grad = None


def train(samples: list[Sample], schemas: dict[str, DatabaseSchema],
          lexicon: Lexicon, config: ModelConfig | None = None,
          epochs: int = 200, eval_every: int = 10,
          target_accuracy: float | None = None,
          log=None) -> TrainResult:
    """Train the full model; returns parameters plus loss/accuracy curves.

    Stops early once target_accuracy is reached on the training set
    (checked every eval_every epochs).
    """
    config = config or ModelConfig()
    if not config.vocab:
        config = prepare_config(config, samples, schemas, lexicon)
    vocab_obj = InputVocab(config.input_vocab,
                           {s: i for i, s in enumerate(config.input_vocab)})
    prepared = _prepare(samples, schemas, lexicon, config, vocab_obj)
    params = init_params(config)
    opt = _Optimizer(params, config)

    loss_curve: list[float] = []
    acc_curve: list[tuple[int, float]] = []
    for epoch in range(epochs):
        total = 0.0
        for ps in prepared:
            loss = sample_loss(ps.inp, ps.lattice, ps.gold, params, config)
            loss.backward()
            opt.step()
            total += loss.item()
        loss_curve.append(total / len(prepared))
        if log:
            log(f"epoch {epoch}: loss {loss_curve[-1]:.4f}")
        if target_accuracy is not None and (epoch + 1) % eval_every == 0:
            acc = _prepared_accuracy(prepared, schemas, params, config)
            acc_curve.append((epoch, acc))
            if log:
                log(f"epoch {epoch}: train tree-match {acc:.3f}")
            if acc >= target_accuracy:
                break
    return TrainResult(params=params, config=config, loss_curve=loss_curve,
                       accuracy_curve=acc_curve)


def _greedy_decode(inp: SerializedInput, lattice, params: Params,
                   config: ModelConfig) -> str:
    H = encode(inp, lattice, params, config)
    state = init_decoder(H, params)
    prev = BOS
    out: list[int] = []
    for _ in range(config.max_decode_len):
        dist, state = decode_step(state, H, inp.pointer_map, prev, params, config)
        prev = int(np.argmax(dist.probs.data))
        if prev == EOS:
            break
        out.append(prev)
    return detokenize(out, inp.pointer_map, config.vocab)


def _prepared_accuracy(prepared: list[_PreparedSample],
                       schemas: dict[str, DatabaseSchema], params: Params,
                       config: ModelConfig) -> float:
    frozen = detached(params)
    hits = 0
    for ps in prepared:
        text = _greedy_decode(ps.inp, ps.lattice, frozen, config)
        try:
            if tree_match(parse_vql(text), parse_vql(ps.sample.vql_text),
                          schemas[ps.sample.db_id]):
                hits += 1
        except Exception:
            pass
    return hits / len(prepared)


def training_accuracy(samples: list[Sample], schemas: dict[str, DatabaseSchema],
                      lexicon: Lexicon, params: Params,
                      config: ModelConfig) -> float:
    """Greedy-decode tree-match accuracy over a sample list."""
    vocab_obj = InputVocab(config.input_vocab,
                           {s: i for i, s in enumerate(config.input_vocab)})
    prepared = _prepare(samples, schemas, lexicon, config, vocab_obj)
    return _prepared_accuracy(prepared, schemas, params, config)


# ---------------------------------------------------------------------------
# gradient check


def grad_check(config: ModelConfig | None = None, tolerance: float = 1e-4,
               entries_per_tensor: int = 4, epsilon: float = 1e-5) -> dict:
    """Compare analytic gradients against central finite differences on a
    tiny model evaluated in float64.

    Returns {"passed": bool, "worst": (name, rel_err), "per_tensor": {...}}.
    """
    from ..ngrams import Lexicon as _Lex

    config = config or ModelConfig(
        d_model=8, n_layers=2, n_heads=2, d_ngram=4, d_lstm=8, max_len=32,
        seed=7,
        vocab=tuple(SPECIALS + VQL_KEYWORD_TOKENS[:10]),
        input_vocab=("[UNK]", "[CLS]", "[SEP]", "a", "b", "t", "c", "d"),
        ngram_vocab_size=3,
    )
    from ..schema import ColumnDef, DatabaseSchema, TableDef

    schema = DatabaseSchema("tiny", (
        TableDef("t", (ColumnDef("c", "NUMBER"), ColumnDef("d", "TEXT"))),))
    vocab_obj = InputVocab(config.input_vocab,
                           {s: i for i, s in enumerate(config.input_vocab)})
    question = "abab"
    inp = serialize_input(question, schema, vocab_obj, config.max_len)
    lex = _Lex(entries={"ab": 0, "ba": 1, "abab": 2}, freqs={}, max_n=4, min_freq=1)
    lattice = match_ngrams(question, lex)
    gold = [2, 3, len(config.vocab) + 0, len(config.vocab) + 1, EOS]

    params = init_params(config, dtype=np.float64)

    def loss_value() -> float:
        return sample_loss(inp, lattice, gold, detached(params), config).item()

    loss = sample_loss(inp, lattice, gold, params, config)
    loss.backward()

    rng = np.random.default_rng(0)
    per_tensor: dict[str, float] = {}
    worst = ("", 0.0)
    for name, tensor in params.items():
        grad = tensor.grad if tensor.grad is not None else np.zeros_like(tensor.data)
        flat = tensor.data.reshape(-1)
        gflat = grad.reshape(-1)
        n = min(entries_per_tensor, flat.size)
        idxs = rng.choice(flat.size, size=n, replace=False)
        max_rel = 0.0
        for i in idxs:
            orig = flat[i]
            flat[i] = orig + epsilon
            up = loss_value()
            flat[i] = orig - epsilon
            down = loss_value()
            flat[i] = orig
            fd = (up - down) / (2 * epsilon)
            a = gflat[i]
            # Floored denominator: keeps FD truncation noise from dominating
            # near-zero gradients while still flagging genuinely wrong ones.
            rel = abs(a - fd) / max(abs(a) + abs(fd), 0.1)
            max_rel = max(max_rel, rel)
        per_tensor[name] = max_rel
        if max_rel > worst[1]:
            worst = (name, max_rel)
    return {
        "passed": worst[1] < tolerance,
        "tolerance": tolerance,
        "worst": worst,
        "per_tensor": per_tensor,
    }
