"""TER / BLEU / Term% / 稳定性 测试"""

import itertools
import json
import math

import numpy as np
import pytest

from ape_system.core.exceptions import DataValidationError, InvalidArgumentError
from ape_system.domain.analysis.metrics import (
    bleu, corpus_ter, edit_distance, evaluate, stability, ter, term_pct, term_percentage
)
from ape_system.domain.entities.corpus import Constraint, ConstraintSet
from ape_system.domain.entities.report import EvalReport

TEN = [f"w{i}" for i in range(10)]


class TestTer:

    def test_identity(self):
        assert ter(TEN, TEN) == (0, 10)
        assert corpus_ter([TEN], [TEN]) == 0.0

    def test_one_substitution(self):
        hyp = list(TEN)
        hyp[4] = "other"
        assert ter(hyp, TEN) == (1, 10)
        assert corpus_ter([hyp], [TEN]) == pytest.approx(0.1)

    def test_shift_counts_once(self):
        hyp, ref = ["b", "a", "c", "d"], ["a", "b", "c", "d"]
        assert ter(hyp, ref, allow_shifts=True) == (1, 4)
        assert ter(hyp, ref, allow_shifts=False) == (2, 4)
        assert corpus_ter([hyp], [ref]) == 0.25
        assert corpus_ter([hyp], [ref], allow_shifts=False) == 0.5

    def test_block_shift(self):
        ref = ["a", "b", "c", "d", "e", "f"]
        hyp = ["d", "e", "f", "a", "b", "c"]
        assert ter(hyp, ref) == (1, 6)

    def test_empty_sides(self):
        assert ter([], []) == (0, 0)
        assert ter(["a", "b"], []) == (2, 0)
        assert ter([], ["a", "b"]) == (2, 2)
        assert corpus_ter([["a"]], [[]]) == 1.0

    def test_edit_distance(self):
        assert edit_distance(["a", "b", "c"], ["a", "c"]) == 1
        assert edit_distance(["x", "y"], ["a", "b", "c"]) == 3

    def test_shifts_never_worse(self):
        pairs = [
            (["a", "b", "c"], ["c", "a", "b"]),
            (["x", "a", "b", "y"], ["a", "b", "x", "y"]),
            (["the", "house", "is", "big"], ["the", "big", "house"]),
        ]
        for hyp, ref in pairs:
            assert ter(hyp, ref, True)[0] <= ter(hyp, ref, False)[0]

    def test_length_mismatch(self):
        with pytest.raises(InvalidArgumentError):
            corpus_ter([["a"]], [])

    def test_shift_block_absent_from_reference(self):
        hyp = "c b b b c c c".split()
        ref = "b c a c a b".split()
        assert ter(hyp, ref) == (4, 6)

    def test_matches_unrestricted_greedy_search(self):
        pairs = [(list(h), list(r))
                 for h in _all_strings("ab", 4) for r in _all_strings("ab", 4) if h and r]
        rng = np.random.default_rng(5)
        for _ in range(300):
            pairs.append((list(rng.choice(list("abc"), size=rng.integers(1, 8))),
                          list(rng.choice(list("abc"), size=rng.integers(1, 8)))))
        for hyp, ref in pairs:
            assert ter(hyp, ref)[0] == _greedy_shift_edits(hyp, ref), (hyp, ref)


def _all_strings(alphabet, max_len):
    return ["".join(p) for k in range(max_len + 1) for p in itertools.product(alphabet, repeat=k)]


def _greedy_shift_edits(hyp, ref):
    """逐个尝试所有块位移的朴素贪心，作为 TER 的对照"""
    hyp = list(hyp)
    distance = edit_distance(hyp, ref)
    shifts = 0
    while distance > 0:
        best = None
        for start in range(len(hyp)):
            for end in range(start + 1, len(hyp) + 1):
                rest = hyp[:start] + hyp[end:]
                for dest in range(len(rest) + 1):
                    candidate = rest[:dest] + hyp[start:end] + rest[dest:]
                    d = edit_distance(candidate, ref)
                    if best is None or d < best[0]:
                        best = (d, candidate)
        if best is None or best[0] + 1 >= distance:
            break
        distance, hyp = best
        shifts += 1
    return distance + shifts


class TestBleu:

    def test_perfect(self):
        refs = [TEN, ["a", "b", "c", "d", "e"]]
        assert bleu(refs, refs) == pytest.approx(100.0)

    def test_zero_four_gram_precision(self):
        assert bleu([["a", "b", "c", "d"]], [["a", "b", "c", "e"]]) == 0.0

    def test_hand_computed(self):
        expected = 100 * (4 / 5 * 3 / 4 * 2 / 3 * 1 / 2) ** 0.25
        assert bleu([["a", "b", "c", "d", "e"]], [["a", "b", "c", "d", "f"]]) == pytest.approx(expected, abs=1e-2)
        assert expected == pytest.approx(66.87, abs=1e-2)

    def test_brevity_penalty(self):
        ref = ["a", "b", "c", "d", "e", "f", "g", "h"]
        hyp = ref[:6]
        assert bleu([hyp], [ref]) == pytest.approx(100 * math.exp(1 - 8 / 6))

    def test_case_sensitive(self):
        assert bleu([["A", "b", "c", "d"]], [["a", "b", "c", "d"]]) == 0.0

    def test_errors(self):
        with pytest.raises(InvalidArgumentError):
            bleu([], [])
        with pytest.raises(InvalidArgumentError):
            bleu([["a"]], [["a"], ["b"]])

    def test_matches_sacrebleu(self):
        sacrebleu = pytest.importorskip("sacrebleu")
        hyps = [["the", "cat", "sat", "on", "the", "mat"], ["a", "dog", "is", "in", "the", "garden", "today"]]
        refs = [["the", "cat", "sat", "on", "a", "mat"], ["the", "dog", "is", "in", "the", "garden", "today"]]
        expected = sacrebleu.corpus_bleu([" ".join(h) for h in hyps], [[" ".join(r) for r in refs]],
                                         tokenize="none", smooth_method="none").score
        assert bleu(hyps, refs) == pytest.approx(expected, abs=1e-6)


class TestTermPct:

    def test_hit(self):
        output = "it has the same Funktionen as before".split()
        cs = ConstraintSet((Constraint.of("features", "Funktionen"),))
        assert term_pct([output], [cs]) == (1, 1)

    def test_empty_sets_undefined(self):
        hit, total = term_pct([["a"], ["b"]], [ConstraintSet(), ConstraintSet()])
        assert (hit, total) == (0, 0)
        assert term_percentage(hit, total) is None

    def test_two_of_three(self):
        output = "alte Version und neue Funktionen".split()
        cs = ConstraintSet((Constraint.of("old version", "alte Version"), Constraint.of("features", "Funktionen"),
                            Constraint.of("magnification", "Vergrößerung")))
        hit, total = term_pct([output], [cs])
        assert (hit, total) == (2, 3)
        assert term_percentage(hit, total) == pytest.approx(66.67, abs=1e-2)

    def test_phrase_must_be_contiguous(self):
        cs = ConstraintSet((Constraint.of("old version", "alte Version"),))
        assert term_pct([["alte", "neue", "Version"]], [cs]) == (0, 1)


class TestStabilityAndReport:

    def test_identical_outputs(self):
        outputs = [TEN, ["a", "b", "c", "d"]]
        stab_ter, stab_bleu = stability(outputs, outputs)
        assert stab_ter == 0.0
        assert stab_bleu == pytest.approx(100.0)

    def test_one_word_changed_per_sentence(self):
        base = [[f"w{i}_{j}" for j in range(10)] for i in range(5)]
        changed = [sentence[:3] + ["x"] + sentence[4:] for sentence in base]
        assert stability(changed, base)[0] == pytest.approx(0.1)

    def test_unrelated_outputs(self):
        a = [["p", "q", "r", "s", "t"]]
        b = [["a", "b", "c", "d", "e"]]
        assert stability(a, b)[1] == 0.0

    def test_report_json_key_order(self):
        refs = [TEN, ["a", "b", "c", "d"]]
        cs = [ConstraintSet((Constraint.of("s", "w3"),)), ConstraintSet()]
        report = evaluate(refs, refs, cs)
        assert list(json.loads(report.to_json())) == ["ter", "bleu", "term_pct", "n_sentences",
                                                      "n_constraints", "n_constraints_hit"]
        assert report.ter == 0.0
        assert report.bleu == pytest.approx(100.0)
        assert report.term_pct == 100.0
        assert report.to_json() == evaluate(refs, refs, cs).to_json()

    def test_report_null_term_pct(self):
        report = evaluate([TEN], [TEN])
        assert json.loads(report.to_json())["term_pct"] is None
        assert EvalReport.from_dict(report.to_dict()) == report

    def test_report_rejects_bad_values(self):
        with pytest.raises(DataValidationError):
            EvalReport(ter=-1.0, bleu=0.0, term_pct=None, n_sentences=1, n_constraints=0, n_constraints_hit=0)
