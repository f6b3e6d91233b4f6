"""Beam-search decoding over the joint vocabulary + pointer distribution.

One beam run of a given width; finished hypotheses are ranked by
length-normalized log probability and top-k is the first k of that
ranking, so top-j is a prefix of top-k for j <= k.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..ngrams import Lexicon, match_ngrams
from ..schema import DatabaseSchema
from ..vql import parse_vql
from .model import InputVocab, ModelConfig, Params, decode_step, encode, \
    init_decoder, serialize_input
from .training import BOS, EOS, detached, detokenize

__all__ = ["BeamCandidate", "beam_search"]


@dataclass(frozen=True)
class BeamCandidate:
    vql_text: str
    score: float  # length-normalized log probability
    finished: bool
    valid: bool  # parses as VQL


@dataclass
class _Hyp:
    tokens: list[int]
    logp: float
    state: tuple
    prev: int

    def norm_score(self) -> float:
        return self.logp / max(len(self.tokens), 1)


def beam_search(question: str, schema: DatabaseSchema, lexicon: Lexicon,
                params: Params, config: ModelConfig, width: int = 5,
                k: int = 1) -> list[BeamCandidate]:
    """Decode top-k VQL candidates for a question; k <= width.

    Ill-formed hypotheses stay in the ranking flagged invalid. If nothing
    finishes within the decode budget, the best unfinished hypothesis is
    returned flagged unfinished.
    """
    if k > width:
        raise ValueError("k must not exceed the beam width")
    params = detached(params)
    vocab_obj = InputVocab(config.input_vocab,
                           {s: i for i, s in enumerate(config.input_vocab)})
    inp = serialize_input(question, schema, vocab_obj, config.max_len)
    lattice = match_ngrams(question, lexicon)
    H = encode(inp, lattice, params, config)
    start = init_decoder(H, params)

    live = [_Hyp(tokens=[], logp=0.0, state=start, prev=BOS)]
    finished: list[_Hyp] = []
    for _ in range(config.max_decode_len):
        if not live or len(finished) >= width:
            break
        expansions: list[_Hyp] = []
        for hyp in live:
            dist, state = decode_step(hyp.state, H, inp.pointer_map, hyp.prev,
                                      params, config)
            logp = np.log(dist.probs.data + 1e-12)
            top = np.argsort(-logp)[:width]
            for idx in top:
                expansions.append(_Hyp(
                    tokens=hyp.tokens + [int(idx)],
                    logp=hyp.logp + float(logp[idx]),
                    state=state, prev=int(idx)))
        expansions.sort(key=lambda h: -h.logp)
        # Only beam-qualified expansions may finish: an EOS hypothesis
        # competes for one of the width slots like any other expansion.
        live = []
        for hyp in expansions[:width]:
            if hyp.tokens[-1] == EOS:
                finished.append(hyp)
            else:
                live.append(hyp)

    pool = finished if finished else live[:1]  # EmptyBeam: best unfinished
    ranked = sorted(pool, key=lambda h: -h.norm_score())[:k]
    out = []
    for hyp in ranked:
        text = detokenize(hyp.tokens, inp.pointer_map, config.vocab)
        try:
            parse_vql(text)
            valid = True
        except Exception:
            valid = False
        out.append(BeamCandidate(
            vql_text=text, score=hyp.norm_score(),
            finished=bool(hyp.tokens and hyp.tokens[-1] == EOS), valid=valid))
    return out
