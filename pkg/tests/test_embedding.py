import numpy as np
import pytest

from erasure_retrieval.embedding import (SCORERS, VectorMapEmbedder, make_random_scorer, random_token_vectors,
                                         semantic_importance, uniform_scores)


class TestEmbedder:
    def test_dict_and_array_agree(self):
        table = random_token_vectors(5, 3, seed=1)
        a = VectorMapEmbedder(table)
        b = VectorMapEmbedder({i: table[i] for i in range(5)})
        assert np.allclose(a([0, 3, 3]), b([0, 3, 3]))
        assert np.allclose(a([0, 3, 3]), (table[0] + 2 * table[3]) / 3)

    def test_empty_sequence(self):
        emb = VectorMapEmbedder(np.ones((2, 4)))
        assert emb([]).tolist() == [0.0] * 4

    def test_weighted_bag(self):
        table = random_token_vectors(4, 2, seed=2)
        emb = VectorMapEmbedder(table)
        assert np.allclose(emb.weighted(np.array([0.5, 0.0, 0.5, 0.0])), emb([0, 2]))
        with pytest.raises(TypeError):
            VectorMapEmbedder({0: np.ones(2)}).weighted(np.ones(1))


class TestScorers:
    def test_semantic_scores_nonnegative(self):
        emb = VectorMapEmbedder(random_token_vectors(50, 8, seed=3))
        s = semantic_importance([1, 5, 9, 9, 20], emb)
        assert s.shape == (5,) and np.all(s >= 0)
        # repeated tokens are interchangeable
        assert s[2] == s[3]

    def test_single_token_query(self):
        emb = VectorMapEmbedder(random_token_vectors(5, 3, seed=4))
        assert semantic_importance([2], emb).tolist() == [1.0]

    def test_uniform_and_random(self):
        assert uniform_scores([4, 4, 1]).tolist() == [1.0, 1.0, 1.0]
        a = make_random_scorer((1, 2))([3, 4, 5])
        b = make_random_scorer((1, 2))([3, 4, 5])
        assert np.array_equal(a, b) and np.all((a >= 0) & (a < 1))
        assert set(SCORERS) == {"uniform", "semantic"}
