"""Gold tokenization, teacher-forced training, determinism, grad check."""

import numpy as np
import pytest

from text2vis.dataset import Hardness, Sample
from text2vis.neural import (
    InputVocab,
    OOVError,
    build_output_vocab,
    detokenize,
    grad_check,
    serialize_input,
    tokenize_gold,
    train,
    training_accuracy,
)
from text2vis.neural.training import EOS
from text2vis.ngrams import build_lexicon
from text2vis.vql import canonicalize, parse_vql


@pytest.fixture(scope="module")
def prepared(tiny_setup, schemas):
    samples, lexicon, config, params = tiny_setup
    vocab_obj = InputVocab(config.input_vocab,
                           {s: i for i, s in enumerate(config.input_vocab)})
    return samples, lexicon, config, vocab_obj


def test_tokenize_gold_round_trips_every_sample(prepared, schemas):
    samples, _, config, vocab_obj = prepared
    for s in samples:
        schema = schemas[s.db_id]
        inp = serialize_input(s.question_zh, schema, vocab_obj)
        gold = tokenize_gold(s.vql_text, inp.pointer_map, config.vocab)
        assert gold[-1] == EOS
        text = detokenize(gold, inp.pointer_map, config.vocab)
        assert canonicalize(parse_vql(text), schema) == \
            canonicalize(parse_vql(s.vql_text), schema)


def test_schema_elements_become_pointer_ids(prepared, schemas):
    samples, _, config, vocab_obj = prepared
    s = samples[0]
    inp = serialize_input(s.question_zh, schemas[s.db_id], vocab_obj)
    gold = tokenize_gold(s.vql_text, inp.pointer_map, config.vocab)
    assert any(i >= len(config.vocab) for i in gold), \
        "table/column mentions must supervise pointer slots"


def test_order_by_axis_tokens_are_keywords(prepared, schemas):
    _, _, config, vocab_obj = prepared
    schema = schemas["shop"]
    inp = serialize_input("问", schema, vocab_obj)
    gold = tokenize_gold(
        "Visualize BAR SELECT item , COUNT(item) FROM orders ORDER BY X DESC",
        inp.pointer_map, config.vocab)
    x_id = config.vocab.index("X")
    assert x_id in gold and x_id < len(config.vocab)


def test_unknown_identifier_raises_oov(prepared, schemas):
    _, _, config, vocab_obj = prepared
    inp = serialize_input("问", schemas["shop"], vocab_obj)
    with pytest.raises(OOVError):
        tokenize_gold("Visualize BAR SELECT nocol , COUNT(nocol) FROM orders",
                      inp.pointer_map, config.vocab)


def test_unknown_literal_raises_oov(prepared, schemas):
    _, _, config, vocab_obj = prepared
    inp = serialize_input("问", schemas["shop"], vocab_obj)
    with pytest.raises(OOVError):
        tokenize_gold("Visualize BAR SELECT item , COUNT(item) FROM orders "
                      "WHERE amount = 987654", inp.pointer_map, config.vocab)


def test_output_vocab_contains_specials_keywords_literals():
    s = Sample("1", "db", "问", "Visualize BAR SELECT a , COUNT(a) FROM t "
               "WHERE b = 'xy' AND c = 42", Hardness.MEDIUM)
    vocab = build_output_vocab([s])
    for required in ("VISUALIZE", "SELECT", "FROM", "(", ")", ",", "'xy'", "42"):
        assert required in vocab


def test_single_sample_overfits_quickly(schemas, tiny_setup):
    from conftest import TINY_CONFIG
    samples, lexicon, _, _ = tiny_setup
    one = samples[:1]
    result = train(one, schemas, lexicon, TINY_CONFIG, epochs=300,
                   eval_every=20, target_accuracy=1.0)
    assert result.accuracy_curve[-1][1] == 1.0
    assert result.loss_curve[-1] < result.loss_curve[0]
    assert training_accuracy(one, schemas, lexicon, result.params,
                             result.config) == 1.0


def test_training_bit_deterministic(schemas, tiny_setup):
    from conftest import TINY_CONFIG
    samples, lexicon, _, _ = tiny_setup
    a = train(samples[:3], schemas, lexicon, TINY_CONFIG, epochs=3)
    b = train(samples[:3], schemas, lexicon, TINY_CONFIG, epochs=3)
    assert a.loss_curve == b.loss_curve
    for name in a.params:
        assert np.array_equal(a.params[name].data, b.params[name].data), name


def test_loss_curve_monotone_enough(schemas, tiny_setup):
    from conftest import TINY_CONFIG
    samples, lexicon, _, _ = tiny_setup
    result = train(samples[:4], schemas, lexicon, TINY_CONFIG, epochs=8)
    assert result.loss_curve[-1] < result.loss_curve[0] * 0.9


def test_grad_check_tiny_model_passes():
    report = grad_check()
    assert report["passed"], report["worst"]
    assert report["worst"][1] < 1e-4
