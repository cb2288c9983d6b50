"""约束编码（append / replace / MT 因子）测试"""

import pytest

from ape_system.core.exceptions import DataValidationError
from ape_system.core.model_config import EncoderVariant
from ape_system.domain.entities.corpus import Constraint, ConstraintSet, Sentence, Triplet
from ape_system.domain.entities.encoded_source import EncodedSource, SourceFactor
from ape_system.domain.services.encoding import (
    encode_append, encode_mt, encode_replace, encode_source, find_spans, prepare_input, segment_encoded
)
from ape_system.domain.services.subword import BPEModel

X = Sentence(("x1", "x2", "x3", "x4"))
C = ConstraintSet((Constraint.of("x2 x3", "y1"),))
FIGURE_SRC = Sentence.from_text("it offers the same features as the old version")
FIGURE_C = ConstraintSet((Constraint.of("features", "Funktionen"),))


class TestFindSpans:

    def test_direct_match(self):
        x = Sentence(("a", "b", "c", "d"))
        assert find_spans(x, ConstraintSet((Constraint.of("b c", "Y"),))) == [(1, 3)]

    def test_absent_phrase(self):
        assert find_spans(X, ConstraintSet((Constraint.of("zz", "Y"),))) == [None]

    def test_overlap_keeps_first(self):
        x = Sentence(("a", "b", "c", "d"))
        spans = find_spans(x, ConstraintSet((Constraint.of("a b", "P"), Constraint.of("b c", "Q"))))
        assert spans == [(0, 2), None]


class TestAppend:

    def test_single_constraint(self):
        encoded = encode_append(X, C)
        assert encoded.tokens == ("x1", "x2", "x3", "y1", "x4")
        assert encoded.factor_values == (0, 1, 1, 2, 0)

    def test_empty_constraints_identity(self):
        encoded = encode_append(X, ConstraintSet())
        assert encoded.tokens == X.tokens
        assert set(encoded.factor_values) == {0}

    def test_figure_sentence(self):
        encoded = encode_append(FIGURE_SRC, FIGURE_C)
        assert "same features Funktionen as" in " ".join(encoded.tokens)
        factors = dict(zip(encoded.tokens, encoded.factor_values))
        assert factors["features"] == 1
        assert factors["Funktionen"] == 2
        assert sum(1 for f in encoded.factor_values if f == 0) == len(FIGURE_SRC) - 1

    def test_source_order_preserved(self):
        encoded = encode_append(X, C)
        assert [t for t, f in zip(encoded.tokens, encoded.factor_values) if f != 2] == list(X.tokens)


class TestReplace:

    def test_single_constraint(self):
        encoded = encode_replace(X, C)
        assert encoded.tokens == ("x1", "y1", "x4")
        assert encoded.factor_values == (0, 2, 0)

    def test_empty_constraints_identity(self):
        encoded = encode_replace(X, ConstraintSet())
        assert encoded.tokens == X.tokens
        assert set(encoded.factor_values) == {0}

    def test_two_disjoint_constraints_length(self):
        x = Sentence.from_text("a b c d e f")
        cs = ConstraintSet((Constraint.of("b c", "Y"), Constraint.of("e", "Z1 Z2 Z3")))
        encoded = encode_replace(x, cs)
        assert encoded.tokens == ("a", "Y", "d", "Z1", "Z2", "Z3", "f")
        assert len(encoded) == len(x) - (2 + 1) + (1 + 3)

    def test_constraint_order_follows_source(self):
        x = Sentence.from_text("a b c")
        cs = ConstraintSet((Constraint.of("c", "Q"), Constraint.of("a", "P")))
        assert encode_replace(x, cs).tokens == ("P", "b", "Q")


class TestMtFactor:

    def test_all_three(self):
        assert encode_mt(Sentence.from_text("t1 t2 t3 t4 t5")).factor_values == (3, 3, 3, 3, 3)

    def test_empty(self):
        assert encode_mt(Sentence()).factors == ()

    def test_mixed_factors_rejected(self):
        with pytest.raises(DataValidationError):
            EncodedSource(("a", "b"), (SourceFactor.MT, SourceFactor.SOURCE))

    def test_debug_line_round_trip(self):
        encoded = encode_append(X, C)
        assert encoded.to_debug_line() == "x1|0 x2|1 x3|1 y1|2 x4|0"
        assert EncodedSource.from_debug_line(encoded.to_debug_line()) == encoded


class TestModelInput:

    def test_plain_ignores_constraints(self):
        encoded = encode_source(X, C, EncoderVariant.PLAIN)
        assert encoded.tokens == X.tokens
        assert set(encoded.factor_values) == {0}

    def test_factors_follow_subwords(self):
        bpe = BPEModel([("y", "1")])
        encoded = segment_encoded(bpe, encode_append(X, C))
        assert len(encoded.tokens) == len(encoded.factors)
        assert encoded.tokens == ("x@@", "1", "x@@", "2", "x@@", "3", "y1", "x@@", "4")
        assert encoded.factor_values == (0, 0, 1, 1, 1, 1, 2, 0, 0)

    def test_prepare_input(self):
        triplet = Triplet(7, X, Sentence.from_text("y0 y2"), Sentence.from_text("y0 y1 y2"), C)
        inp = prepare_input(triplet, EncoderVariant.REPLACE)
        assert inp.id == 7
        assert inp.source.tokens == ("x1", "y1", "x4")
        assert set(inp.mt.factor_values) == {3}
        assert inp.target == ("y0", "y1", "y2")
        assert inp.constraint_phrases == (("y1",),)

    def test_prepare_input_without_constraints(self):
        triplet = Triplet(0, X, Sentence.from_text("y0"), Sentence.from_text("y0"), C)
        inp = prepare_input(triplet, EncoderVariant.APPEND, use_constraints=False, with_target=False)
        assert inp.source.tokens == X.tokens
        assert inp.constraint_phrases == ()
        assert inp.target == ()
