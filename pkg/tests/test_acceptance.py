"""
端到端验收（较慢，默认跳过）

    pytest --run-slow tests/test_acceptance.py

合成设置：词典 200 词、歧义比例 0.5、训练 20k / 测试 1k、噪声 0.1 / 0.05 / 0.05、约束率 0.25。
各模型在模块内按需训练一次，多个用例共享。
"""

from dataclasses import dataclass
from typing import Dict

import pytest

from ape_system.application.pipeline import CascadeSpec, ScheduleResult, TrainingPipeline, run_cascade
from ape_system.application.use_cases.postedit_use_case import PosteditUseCase, do_nothing
from ape_system.core.config import ConfigManager
from ape_system.core.model_config import DecodeConfig, NoiseConfig
from ape_system.domain.analysis.metrics import evaluate
from ape_system.domain.entities.corpus import Corpus
from ape_system.domain.services.augmentation import augment_corpus, count_combinations
from ape_system.domain.services.synthgen import emulate_mt, gen_corpus, gen_lexicon, gen_relation_lexicons

pytestmark = pytest.mark.slow

NOISE = NoiseConfig(0.1, 0.05, 0.05)
MST_DECODE = DecodeConfig(beam_size=2, max_len=60)
LEVT_DECODE = DecodeConfig(max_len=60, init_strategy="constraints")

# 模型名 → (kind, variant, 是否使用增强语料)
RUNS = {
    "mst_plain": ("mst", "plain", False),
    "mst_append": ("mst", "append", False),
    "mst_append_aug": ("mst", "append", True),
    "ms_levt": ("levt", "ms-levt", False),
}


@dataclass
class SyntheticSetup:
    train: Corpus
    test: Corpus
    relations: Dict
    augmented: Corpus
    plain_mt: list
    constrained_mt: list


@pytest.fixture(scope="module")
def setup() -> SyntheticSetup:
    lexicon = gen_lexicon(200, 0.5, seed=1)
    train = gen_corpus(lexicon, 20000, (3, 10), NOISE, 0.25, seed=1, name="train")
    test = gen_corpus(lexicon, 1000, (3, 10), NOISE, 0.25, seed=2, name="test")
    relations = gen_relation_lexicons(lexicon, synonyms_per_word=1, antonyms_per_word=1, seed=1)
    augmented = augment_corpus(train, relations, seed=1)
    return SyntheticSetup(
        train=train, test=test, relations=relations, augmented=augmented,
        plain_mt=emulate_mt(lexicon, test, NOISE, seed=3, constrained=False),
        constrained_mt=emulate_mt(lexicon, test, NOISE, seed=3, constrained=True),
    )


def desk_config(output_dir) -> ConfigManager:
    return ConfigManager(overrides={
        "run.output_dir": str(output_dir), "schedule.pretrain_steps": 3000, "train.batch_size": 64,
        "train.warmup_steps": 300, "train.learning_rate": 0.001, "train.log_every": 100,
        "train.plot_loss_curve": False, "subword.num_merges": 200, "levt.max_iterations": 5,
    })


@pytest.fixture(scope="module")
def trained(setup, tmp_path_factory):
    """按名字惰性训练，结果在模块内缓存"""
    cache: Dict[str, ScheduleResult] = {}

    def get(name: str) -> ScheduleResult:
        if name not in cache:
            kind, variant, with_augmentation = RUNS[name]
            out = tmp_path_factory.mktemp(name)
            cache[name] = TrainingPipeline(desk_config(out), show_progress=False).run_schedule(
                kind, variant, output_dir=out, pretrain=setup.train,
                augmented=setup.augmented if with_augmentation else None)
        return cache[name]

    return get


@pytest.fixture(scope="module")
def reports(setup, trained):
    """测试集上的报告，按需计算并缓存"""
    cache = {}

    def get(name: str):
        if name not in cache:
            if name == "do_nothing":
                hyps = do_nothing(setup.test)
            else:
                decode = LEVT_DECODE if RUNS[name][0] == "levt" else MST_DECODE
                hyps = PosteditUseCase(trained(name).final_checkpoint, decode).run(setup.test).hypotheses
            cache[name] = evaluate(hyps, setup.test.pes, setup.test.constraint_sets)
        return cache[name]

    return get


class TestConstrainedVsPlain:

    def test_mst_append_preserves_terms_and_beats_plain(self, trained, reports):
        state = trained("mst_append").states[0]
        assert state.losses[-1] < 0.7 * state.losses[0]

        append, plain = reports("mst_append"), reports("mst_plain")
        assert append.n_constraints > 0
        assert append.term_pct >= 95.0
        assert plain.term_pct <= append.term_pct - 15.0

    def test_mst_append_ter_not_worse_than_do_nothing(self, reports):
        assert reports("mst_append").ter <= reports("do_nothing").ter


class TestMsLevT:

    def test_matches_mst_append(self, reports):
        levt, append, baseline = reports("ms_levt"), reports("mst_append"), reports("do_nothing")
        assert levt.term_pct >= append.term_pct
        assert levt.ter <= baseline.ter + 0.02

    def test_protected_decoding_hits_every_term(self, setup, trained):
        decode = DecodeConfig(max_len=60, protect_constraints=True)
        report = run_cascade(CascadeSpec("plain", "constrained"), {"plain": setup.plain_mt},
                             {"constrained": trained("ms_levt").final_checkpoint}, setup.test, decode)
        assert report.n_constraints > 0
        assert report.term_pct == 100.0


class TestCascade:

    def test_plain_ape_undoes_constrained_mt(self, setup, trained):
        checkpoints = {"plain": trained("mst_plain").final_checkpoint,
                       "constrained": trained("mst_append").final_checkpoint}
        mt_outputs = {"constrained": setup.constrained_mt}

        def term(ape_variant):
            return run_cascade(CascadeSpec("constrained", ape_variant), mt_outputs, checkpoints, setup.test,
                               MST_DECODE).term_pct

        mt_alone, plain_ape, constrained_ape = term("none"), term("plain"), term("constrained")
        assert plain_ape <= constrained_ape - 5.0
        assert plain_ape < mt_alone


class TestAugmentation:

    def test_sample_count(self, setup):
        assert len(setup.augmented) == count_combinations(setup.train, setup.relations)

    def test_helps_synonym_constraints(self, setup, trained, reports):
        assert reports("mst_append_aug").term_pct >= reports("mst_append").term_pct - 1.0

        synonym_test = augment_corpus(setup.test, [setup.relations["synonym"]], seed=1, name="test_synonym")
        assert len(synonym_test) > 0

        def synonym_term(name):
            hyps = PosteditUseCase(trained(name).final_checkpoint, MST_DECODE).run(synonym_test).hypotheses
            return evaluate(hyps, synonym_test.pes, synonym_test.constraint_sets).term_pct

        assert synonym_term("mst_append_aug") >= synonym_term("mst_append") + 10.0
