import numpy as np
import pytest

from skillrec.embedding import HashingEmbedder, cosine
from skillrec.errors import DimensionMismatchError


@pytest.fixture(scope="module")
def embedder():
    return HashingEmbedder()


def test_deterministic(embedder):
    assert np.array_equal(embedder.embed("abc"), embedder.embed("abc"))


def test_deterministic_across_instances():
    a = HashingEmbedder().embed("risky sign-ins for bob")
    b = HashingEmbedder().embed("risky sign-ins for bob")
    assert np.array_equal(a, b)


def test_unit_norm(embedder):
    v = embedder.embed("risky sign-ins")
    assert abs(np.linalg.norm(v) - 1.0) <= 1e-9


def test_empty_is_zero_vector(embedder):
    v = embedder.embed("")
    assert v.shape == (256,)
    assert not v.any()
    assert not embedder.embed("!!! ???").any()


def test_tokenization_is_case_and_punct_insensitive(embedder):
    assert np.array_equal(embedder.embed("Show Sign-Ins!"), embedder.embed("show sign ins"))


def test_bigrams_affect_embedding(embedder):
    # same unigrams, different order -> different bigrams
    assert not np.array_equal(embedder.embed("alpha beta"), embedder.embed("beta alpha"))


def test_custom_dimension():
    v = HashingEmbedder(dim=64).embed("hello world")
    assert v.shape == (64,)
    with pytest.raises(ValueError):
        HashingEmbedder(dim=0)


def test_cosine_identity(embedder):
    v = embedder.embed("risky users")
    assert cosine(v, v) == pytest.approx(1.0, abs=1e-9)


def test_cosine_orthogonal_basis():
    e1 = np.zeros(8)
    e2 = np.zeros(8)
    e1[0] = 1.0
    e2[1] = 1.0
    assert cosine(e1, e2) == 0.0


def test_cosine_zero_vector(embedder):
    v = embedder.embed("anything")
    assert cosine(v, np.zeros(256)) == 0.0


def test_cosine_dimension_mismatch():
    with pytest.raises(DimensionMismatchError):
        cosine(np.zeros(8), np.zeros(9))


def test_cosine_bounded(embedder):
    texts = ["risky users", "risky sign-ins", "device compliance", "threat intel article"]
    for a in texts:
        for b in texts:
            assert -1.0 - 1e-9 <= cosine(embedder.embed(a), embedder.embed(b)) <= 1.0 + 1e-9
