"""BPE、源因子传播与 truecasing 测试"""

import numpy as np
import pytest

from ape_system.core.exceptions import DataValidationError, InvalidArgumentError, SubwordAlignmentError
from ape_system.domain.services.subword import (
    CONTINUATION, ESCAPE, BPEModel, TruecaseModel, bpe_apply, bpe_restore, bpe_train, propagate_factors
)
from ape_system.infrastructure.data.manager import DataManager


class TestBpeTrain:

    def test_zero_merges_is_character_level(self):
        model = bpe_train([["low", "lower"]], 0)
        assert len(model) == 0
        subwords, alignment = bpe_apply(model, ["low"])
        assert subwords == ["l" + CONTINUATION, "o" + CONTINUATION, "w"]
        assert alignment == [0, 0, 0]

    def test_most_frequent_pair(self):
        model = bpe_train([["aa", "aa", "ab"]], 1)
        assert model.merges == (("a", "a"),)

    def test_deterministic(self):
        corpus = [["the", "lower", "newest", "widest"], ["low", "lowest", "newer"]]
        assert bpe_train(corpus, 10) == bpe_train(corpus, 10)

    def test_lexicographic_tie_break(self):
        # l-o 与 o-w 同频，取字典序较小的 (l, o)
        model = bpe_train([["low", "lower"]], 3)
        assert model.merges == (("l", "o"), ("lo", "w"), ("e", "r"))

    def test_empty_corpus(self):
        with pytest.raises(InvalidArgumentError):
            bpe_train([], 10)
        with pytest.raises(InvalidArgumentError):
            bpe_train([[]], 10)

    def test_duplicate_merges_rejected(self):
        with pytest.raises(DataValidationError):
            BPEModel([("a", "b"), ("a", "b")])


class TestBpeApply:

    def test_known_word_is_single_subword(self):
        model = bpe_train([["low", "low", "low"]], 10)
        subwords, alignment = bpe_apply(model, ["new", "low"])
        assert subwords[-1] == "low"
        assert alignment[-1] == 1

    def test_greedy_trace_on_unseen_word(self):
        model = bpe_train([["low", "lower"]], 3)
        # l o w e s t → lo w e s t → low e s t，(e, r) 不适用
        assert bpe_apply(model, ["lowest"])[0] == ["low@@", "e@@", "s@@", "t"]

    def test_alignment_monotone_and_surjective(self):
        model = bpe_train([["abc", "abd", "bcd"]], 4)
        sentence = ["abcd", "x", "bcdbcd"]
        subwords, alignment = bpe_apply(model, sentence)
        assert len(subwords) == len(alignment)
        assert alignment == sorted(alignment)
        assert set(alignment) == {0, 1, 2}

    def test_restore_round_trip(self):
        rng = np.random.default_rng(11)
        letters = list("abcdefgh")
        training = [["".join(rng.choice(letters, size=rng.integers(1, 7))) for _ in range(8)] for _ in range(50)]
        model = bpe_train(training, 40)
        for _ in range(1000):
            sentence = ["".join(rng.choice(letters, size=rng.integers(1, 9)))
                        for _ in range(rng.integers(0, 8))]
            assert bpe_restore(model.apply_tokens(sentence)) == sentence

    def test_word_ending_in_marker_restores(self):
        model = BPEModel.train([["ab@@", "cd"]], 3)
        subwords = model.apply_tokens(["ab@@", "cd"])
        assert subwords == ["ab@@" + ESCAPE, "c" + CONTINUATION, "d"]
        assert bpe_restore(subwords) == ["ab@@", "cd"]
        assert bpe_restore(model.apply_tokens(["x@@~", "@@", "~"])) == ["x@@~", "@@", "~"]

    def test_restore_round_trip_with_markers_in_words(self):
        rng = np.random.default_rng(23)
        letters = ["a", "b", "@", "~", "@@", "@@~"]
        training = [["".join(rng.choice(letters, size=rng.integers(1, 5))) for _ in range(6)] for _ in range(40)]
        model = bpe_train(training, 30)
        for _ in range(1000):
            sentence = ["".join(rng.choice(letters, size=rng.integers(1, 6)))
                        for _ in range(rng.integers(0, 7))]
            assert bpe_restore(model.apply_tokens(sentence)) == sentence

    def test_model_file_round_trip(self, tmp_path):
        model = bpe_train([["low", "lower", "newest"]], 6)
        manager = DataManager()
        manager.save_bpe(tmp_path / "bpe.model", model)
        assert manager.load_bpe(tmp_path / "bpe.model") == model


class TestPropagateFactors:

    def test_split_word_shares_factor(self):
        assert propagate_factors([0, 2, 0], [0, 1, 1, 1, 2]) == [0, 2, 2, 2, 0]

    def test_no_split_identity(self):
        assert propagate_factors([0, 1, 2], [0, 1, 2]) == [0, 1, 2]

    def test_all_zero(self):
        assert propagate_factors([0, 0], [0, 0, 1, 1, 1]) == [0] * 5

    def test_out_of_range(self):
        with pytest.raises(SubwordAlignmentError):
            propagate_factors([0, 1], [0, 2])


class TestTruecase:

    def test_most_frequent_surface(self):
        # 句首的 The 不参与统计，因为 the 也出现在句中
        model = TruecaseModel.train([["The", "house", "is", "big"], ["in", "the", "House"],
                                     ["a", "house"], ["Bach", "wrote"], ["by", "Bach"]])
        assert model.casing["house"] == "house"
        assert model.casing["the"] == "the"
        assert model.casing["bach"] == "Bach"
        assert model.apply(["THE", "HOUSE", "bach"]) == ["the", "house", "Bach"]

    def test_detruecase_inverse(self):
        model = TruecaseModel({"the": "the", "house": "house"})
        truecased = ["the", "house"]
        assert TruecaseModel.detruecase(truecased) == ["The", "house"]
        assert model.apply(TruecaseModel.detruecase(truecased)) == truecased

    def test_keys_must_be_lowercase(self):
        with pytest.raises(DataValidationError):
            TruecaseModel({"House": "House"})
