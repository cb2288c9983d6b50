"""迭代精修循环与初始化策略测试（与具体模型无关的策略桩）"""

import re

import pytest

from ape_system.core.exceptions import InvalidArgumentError
from ape_system.core.model_config import InitStrategy
from ape_system.domain.entities.corpus import Constraint, ConstraintSet, Sentence
from ape_system.domain.entities.edit_state import BOS, EOS, EditState
from ape_system.domain.services.edit_oracle import oracle_edits
from ape_system.domain.services.refinement import clamp_insertions, finalize_tokens, init_state, refine


class NoopPolicy:

    def predict_deletions(self, state):
        return [False] * len(state.tokens)

    def predict_insertions(self, state):
        return [0] * state.n_slots

    def predict_fills(self, state):
        return []


class HostilePolicy:
    """删除一切、在每个间隙插满新词，永不收敛"""

    def __init__(self):
        self.counter = 0

    def predict_deletions(self, state):
        return [True] * len(state.tokens)

    def predict_insertions(self, state):
        return [99] * state.n_slots

    def predict_fills(self, state):
        fills = []
        for token in state.tokens:
            if token == "<plh>":
                fills.append(f"junk{self.counter}")
                self.counter += 1
        return fills


class OraclePolicy:
    """朝参考序列走的专家策略"""

    def __init__(self, reference):
        self.reference = list(reference)
        self._fills = []

    def predict_deletions(self, state):
        return oracle_edits(state.body, self.reference).deletions

    def predict_insertions(self, state):
        actions = oracle_edits(state.body, self.reference)
        self._fills = list(actions.fills)
        return actions.insert_counts

    def predict_fills(self, state):
        return self._fills


class TestInitState:

    def test_blank(self):
        assert init_state(InitStrategy.BLANK).tokens == (BOS, EOS)

    def test_mt_length(self):
        assert len(init_state(InitStrategy.MT, mt=["t1", "t2", "t3", "t4", "t5"])) == 7

    def test_constraints_in_source_order(self):
        x = Sentence(("a", "b", "c"))
        cs = ConstraintSet((Constraint.of("b c", "Y"), Constraint.of("a", "Z")))
        state = init_state("constraints", constraints=cs, src=x)
        assert state.tokens == (BOS, "Z", "Y", EOS)
        assert state.phrase_ids == (-1, 0, 1, -1)

    def test_empty_constraints_is_blank(self):
        assert init_state(InitStrategy.CONSTRAINTS, constraints=ConstraintSet()).tokens == (BOS, EOS)

    def test_segmenter_applied_to_phrases(self):
        cs = ConstraintSet((Constraint.of("features", "Funktionen"),))
        state = init_state(InitStrategy.CONSTRAINTS, constraints=cs, segment=lambda toks: ["Funk@@", "tionen"])
        assert state.body == ("Funk@@", "tionen")
        assert state.phrase_ids[1:-1] == (0, 0)

    def test_missing_arguments(self):
        with pytest.raises(InvalidArgumentError):
            init_state(InitStrategy.MT)
        with pytest.raises(InvalidArgumentError):
            init_state(InitStrategy.CONSTRAINTS)


class TestRefine:

    def test_noop_policy_is_fixpoint(self):
        init = EditState.wrap(["t1", "t2"])
        final, converged = refine(NoopPolicy(), init, max_iterations=5, max_insert_per_slot=3)
        assert converged
        assert final.body == init.body
        assert final.iteration == 1

    def test_oracle_policy_reaches_reference(self):
        reference = ["das", "Haus", "ist", "groß"]
        init = EditState.wrap(["das", "Auto", "groß", "ist"])
        final, converged = refine(OraclePolicy(reference), init, max_iterations=4, max_insert_per_slot=4)
        assert converged
        assert list(final.body) == reference

    def test_iteration_cap(self):
        final, converged = refine(HostilePolicy(), EditState.wrap(["a"]), max_iterations=2, max_insert_per_slot=1)
        assert not converged
        assert final.iteration == 2

    def test_protect_keeps_constraint_phrase(self):
        cs = ConstraintSet((Constraint.of("features", "Funktionen"), Constraint.of("old version", "alte Version")))
        src = Sentence.from_text("the same features as the old version")
        init = init_state(InitStrategy.CONSTRAINTS, constraints=cs, src=src)
        final, _ = refine(HostilePolicy(), init, max_iterations=3, max_insert_per_slot=2,
                          protect_constraints=True, max_len=40)
        text = " ".join(finalize_tokens(final))
        assert "Funktionen" in text
        assert "alte Version" in text

    def test_without_protection_phrase_can_be_lost(self):
        cs = ConstraintSet((Constraint.of("features", "Funktionen"),))
        init = init_state(InitStrategy.CONSTRAINTS, constraints=cs)
        final, _ = refine(HostilePolicy(), init, max_iterations=1, max_insert_per_slot=1)
        assert "Funktionen" not in final.body

    def test_max_len_bounds_state(self):
        final, _ = refine(HostilePolicy(), EditState.wrap([]), max_iterations=3, max_insert_per_slot=10,
                          max_len=6)
        assert len(final.tokens) <= 6

    def test_trace_format(self):
        trace = []
        refine(NoopPolicy(), EditState.wrap(["t1"]), max_iterations=3, max_insert_per_slot=1,
               trace=trace, sent_id=4)
        assert len(trace) == 3
        pattern = re.compile(r"^sent=4 iter=1 phase=(delete|insert|fill) tokens=t1$")
        assert all(pattern.match(line) for line in trace)
        assert [line.split()[2] for line in trace] == ["phase=delete", "phase=insert", "phase=fill"]

    def test_invalid_iterations(self):
        with pytest.raises(InvalidArgumentError):
            refine(NoopPolicy(), EditState.wrap([]), max_iterations=0, max_insert_per_slot=1)


class TestHelpers:

    def test_clamp_per_slot(self):
        state = EditState.wrap(["a", "b"])
        assert clamp_insertions([5, 0, 3], state, 2, protect=False, max_len=None) == [2, 0, 2]

    def test_clamp_inside_phrase(self):
        state = EditState.wrap(["A", "B", "c"], [0, 0, -1])
        assert clamp_insertions([1, 1, 1, 1], state, 4, protect=True, max_len=None) == [1, 0, 1, 1]

    def test_clamp_length_budget(self):
        state = EditState.wrap(["a"])
        assert clamp_insertions([3, 3], state, 4, protect=False, max_len=5) == [2, 0]

    def test_finalize_strips_dangling_continuation(self):
        state = EditState((BOS, "ab@@", "Funk@@", "tionen", EOS), 0, (-1, -1, 0, 0, -1))
        assert finalize_tokens(state) == ["ab", "Funk@@", "tionen"]
