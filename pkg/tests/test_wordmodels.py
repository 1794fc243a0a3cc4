import math

import numpy as np
import pytest

from punprobe.textproc import tokenize
from punprobe.wordmodels import (
    EmbeddingTable,
    NGramModel,
    VocabularyError,
    meaning_vector,
    p_word_given_meaning,
    relatedness_distribution,
    seq_logprob,
    unigram_prob,
)


def toy_embeddings():
    return EmbeddingTable({
        "north": np.array([0.0, 1.0]),
        "south": np.array([0.0, -1.0]),
        "east": np.array([1.0, 0.0]),
    })


def test_embedding_table_rejects_mixed_dimensions():
    with pytest.raises(ValueError):
        EmbeddingTable({"a": np.array([1.0]), "b": np.array([1.0, 2.0])})


def test_embedding_lookup_case_folded():
    table = toy_embeddings()
    assert "North" in table
    assert np.allclose(table.vector("NORTH"), [0.0, 1.0])
    with pytest.raises(VocabularyError):
        table.vector("west")


def test_embedding_save_load_roundtrip(tmp_path):
    table = EmbeddingTable({"aa": np.array([0.25, -1.5]), "bb": np.array([3.0, 4.0])})
    path = tmp_path / "vectors.txt"
    table.save(str(path))
    again = EmbeddingTable.load(str(path))
    assert again.words == table.words
    for w in table.words:
        assert np.array_equal(again.vector(w), table.vector(w))


def test_meaning_vector_orthogonal_average():
    # two orthogonal unit vectors average to a unit vector at 45 degrees
    table = toy_embeddings()
    vec = meaning_vector("east", "north", table)
    assert math.isclose(np.linalg.norm(vec), 1.0, abs_tol=1e-12)
    assert math.isclose(float(vec @ table.unit_vector("north")), math.cos(math.pi / 4), abs_tol=1e-12)
    assert math.isclose(float(vec @ table.unit_vector("east")), math.cos(math.pi / 4), abs_tol=1e-12)


def test_meaning_vector_keyword_only_when_gloss_oov():
    table = toy_embeddings()
    vec = meaning_vector("wholly unknown words", "north", table)
    assert np.allclose(vec, [0.0, 1.0])


def test_meaning_vector_identical_constituents():
    table = toy_embeddings()
    vec = meaning_vector("north north", "north", table)
    assert np.allclose(vec, [0.0, 1.0])


def test_meaning_vector_requires_some_vocabulary():
    with pytest.raises(VocabularyError):
        meaning_vector("unknown gloss", "unknownkeyword", toy_embeddings())


def test_relatedness_softmax_sums_to_one_and_uniform_limit():
    table = toy_embeddings()
    direction = table.unit_vector("north")
    dist = relatedness_distribution(direction, table, temperature=0.1)
    assert math.isclose(float(dist.sum()), 1.0, abs_tol=1e-12)
    hot = relatedness_distribution(direction, table, temperature=1e9)
    assert np.allclose(hot, 1.0 / 3.0, atol=1e-9)


def test_p_word_given_meaning_hand_softmax():
    # cosines against "north" are (east: 0, north: 1, south: -1); tau = 1
    table = toy_embeddings()
    direction = table.unit_vector("north")
    expected = math.exp(1.0) / (math.exp(1.0) + math.exp(0.0) + math.exp(-1.0))
    got = p_word_given_meaning("north", direction, table, temperature=1.0)
    assert math.isclose(got, expected, rel_tol=1e-12)


# --- n-gram model ---------------------------------------------------------


def test_unigram_prob_add_k_formula():
    # 10 tokens over 4 types ("a" x2), k = 0.01: (2 + 0.01) / (10 + 0.01 * 5)
    model = NGramModel.train([["a", "a", "b", "b", "b", "c", "c", "c", "d", "d"]],
                             order=1, add_k=0.01)
    assert math.isclose(unigram_prob("a", model), 2.01 / 10.05, rel_tol=1e-12)
    assert math.isclose(unigram_prob("zzz", model), 0.01 / 10.05, rel_tol=1e-12)


def test_unigram_distribution_sums_to_one_with_unknown_bucket():
    model = NGramModel.train([["a", "a", "b", "c"]], order=1, add_k=0.5)
    total = sum(unigram_prob(w, model) for w in model.vocabulary)
    total += unigram_prob("<unseen>", model)
    assert math.isclose(total, 1.0, abs_tol=1e-9)


def test_conditional_distributions_sum_to_one():
    model = NGramModel.train([tokenize("the cat sat on the mat"),
                              tokenize("the cat ran")], order=3, add_k=0.1)
    for context in [(), ("the",), ("the", "cat"), ("nope",), ("nope", "nope")]:
        total = sum(model.cond_prob(w, context) for w in model.vocabulary)
        total += model.cond_prob("<unseen>", context)
        assert math.isclose(total, 1.0, abs_tol=1e-9), context


def test_seq_logprob_order1_equals_unigram_sum():
    model = NGramModel.train([["x", "y", "x", "z"]], order=1, add_k=0.2)
    tokens = ["x", "z", "q"]
    expected = sum(math.log(unigram_prob(t, model)) for t in tokens)
    assert seq_logprob(tokens, model) == expected


def test_seq_logprob_single_token():
    model = NGramModel.train([["x", "y"]], order=3, add_k=0.2)
    assert seq_logprob(["y"], model) == math.log(unigram_prob("y", model))


def test_seq_logprob_hand_chain_rule():
    # corpus "a b a", order 2, k=0.01. Types {a, b}; universe 3.
    # unigram: p(a)=(2+.01)/(3+.03), p(b)=(1+.01)/(3+.03)
    # bigram contexts: (a,)->{b:1}, (b,)->{a:1}
    model = NGramModel.train([["a", "b", "a"]], order=2, add_k=0.01)
    p_a = 2.01 / 3.03
    p_b_after_a = 1.01 / 1.03   # context (a,) seen once
    p_a_after_b = 1.01 / 1.03
    expected = math.log(p_a) + math.log(p_b_after_a) + math.log(p_a_after_b)
    assert math.isclose(seq_logprob(["a", "b", "a"], model), expected, rel_tol=1e-12)


def test_backoff_to_shorter_context():
    model = NGramModel.train([["a", "b", "c"]], order=3, add_k=0.01)
    # context ("z", "b") unseen at level 2; backs off to ("b",) which is seen
    assert model.cond_prob("c", ("z", "b")) == model.cond_prob("c", ("b",))
    # fully unseen context backs off to the unigram
    assert model.cond_prob("c", ("q", "r")) == unigram_prob("c", model)


def test_seq_logprob_monotone_in_extension():
    model = NGramModel.train([tokenize("one two three two one")], order=2, add_k=0.05)
    seq = ["one", "two", "three", "nope"]
    for n in range(1, len(seq)):
        assert seq_logprob(seq[: n + 1], model) <= seq_logprob(seq[:n], model)


def test_seq_logprob_empty_rejected():
    model = NGramModel.train([["a"]], order=1, add_k=0.1)
    with pytest.raises(ValueError):
        seq_logprob([], model)
