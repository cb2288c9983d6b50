"""MST / LevT 模型、模型工厂与检查点测试"""

from collections import Counter
from dataclasses import replace

import numpy as np
import pytest
import torch
import torch.nn.functional as F

from ape_system.application.pipeline import build_vocabulary
from ape_system.core.exceptions import CheckpointError, ModelBuildError
from ape_system.core.model_config import DecodeConfig, EncoderVariant, InitStrategy
from ape_system.domain.analysis.metrics import term_pct
from ape_system.domain.entities.corpus import ConstraintSet, Sentence, Triplet
from ape_system.domain.entities.edit_state import BOS, EOS
from ape_system.domain.entities.vocabulary import SPECIALS, Vocabulary
from ape_system.domain.models.levt import ROLLIN_MODEL, ROLLIN_REFERENCE, corrupt_reference
from ape_system.domain.models.model_factory import build_model
from ape_system.domain.services.encoding import prepare_input, prepare_inputs
from ape_system.infrastructure.checkpoint_store import FORMAT_VERSION, load_checkpoint, save_checkpoint


@pytest.fixture
def inputs(small_corpus):
    return prepare_inputs(small_corpus, EncoderVariant.APPEND)


@pytest.fixture
def vocab(inputs):
    return build_vocabulary(inputs)


def greedy(model, inp, max_len):
    """逐步取 argmax 的参考贪心解码"""
    memory, mask = model.encode([inp])
    banned = model.special_mask().clone()
    banned[model.vocab.eos_id] = False
    ids = [model.vocab.bos_id]
    for _ in range(max_len):
        logits = model.decode_step(torch.tensor([ids]), memory, mask)[0, -1]
        token = int(F.log_softmax(logits, dim=-1).masked_fill(banned, float("-inf")).argmax())
        if token == model.vocab.eos_id:
            break
        ids.append(token)
    return model.vocab.decode(ids[1:])


class TestFactory:

    def test_wrong_config_class(self, levt_config, vocab):
        with pytest.raises(ModelBuildError):
            build_model("mst", levt_config, vocab)

    def test_specials_only_vocabulary(self, mst_config):
        with pytest.raises(ModelBuildError):
            build_model("mst", mst_config, Vocabulary(list(SPECIALS)))

    def test_invalid_architecture(self, mst_config, vocab):
        mst_config.factor_embed_dim = mst_config.d_model
        with pytest.raises(ModelBuildError):
            build_model("mst", mst_config, vocab)

    def test_seeded_builds_identical(self, mst_config, vocab):
        a = build_model("mst", mst_config, vocab, seed=7).state_dict()
        b = build_model("mst", mst_config, vocab, seed=7).state_dict()
        assert a.keys() == b.keys()
        assert all(torch.equal(a[k], b[k]) for k in a)

    def test_multi_source_levt_has_second_encoder(self, levt_config, vocab):
        assert build_model("levt", levt_config, vocab, seed=1).mt_encoder is None
        levt_config.multi_source = True
        assert build_model("levt", levt_config, vocab, seed=1).mt_encoder is not None


class TestMST:

    def test_training_loss(self, mst_config, vocab, inputs):
        model = build_model("mst", mst_config, vocab, seed=1)
        loss, stats = model.training_loss(inputs[:8], 0, np.random.default_rng(0))
        assert torch.isfinite(loss)
        assert stats["nll"] > 0
        assert stats["tokens"] == sum(len(i.target) + 1 for i in inputs[:8])
        loss.backward()

    def test_greedy_equals_beam_one(self, mst_config, vocab, inputs):
        model = build_model("mst", mst_config, vocab, seed=2).eval()
        with torch.no_grad():
            for inp in inputs[:5]:
                hypothesis = model.beam_search(inp, beam_size=1, max_len=12)
                assert list(hypothesis.sentence.tokens) == greedy(model, inp, 12)

    def test_hypotheses_contain_no_specials(self, mst_config, vocab, inputs):
        model = build_model("mst", mst_config, vocab, seed=3)
        for h in model.postedit(inputs[:4], DecodeConfig(beam_size=3, max_len=10)):
            assert not set(h.sentence.tokens) & set(SPECIALS)
            assert len(h.sentence) <= 10

    def test_empty_mt(self, mst_config, vocab):
        t = Triplet(0, Sentence(("s1", "s2")), Sentence(()), Sentence(("t1",)))
        model = build_model("mst", mst_config, vocab, seed=1)
        hypotheses = model.postedit([prepare_input(t, EncoderVariant.APPEND)], DecodeConfig(beam_size=2, max_len=5))
        assert len(hypotheses) == 1

    def test_postedit_restores_training_mode(self, mst_config, vocab, inputs):
        model = build_model("mst", mst_config, vocab, seed=1)
        model.train()
        model.postedit(inputs[:1], DecodeConfig(beam_size=1, max_len=3))
        assert model.training


class TestLevT:

    def test_training_loss_stats(self, levt_config, vocab, inputs, train_config):
        model = build_model("levt", levt_config, vocab, seed=1)
        model.configure_training(train_config)
        loss, stats = model.training_loss(inputs[:8], 10, np.random.default_rng(0))
        assert torch.isfinite(loss)
        assert set(stats) == {"del_loss", "ins_loss", "fill_loss", "del_acc", "tokens"}
        assert 0.0 <= stats["del_acc"] <= 1.0
        loss.backward()

    def test_rollin_branch_frequencies(self, levt_config, vocab, train_config):
        model = build_model("levt", levt_config, vocab, seed=1)
        model.configure_training(replace(train_config, rollin_warmup_steps=100, rollin_model_prob=0.5))
        rng = np.random.default_rng(12)
        before = Counter(model.rollin_branch(99, rng) for _ in range(2000))
        assert before == {ROLLIN_REFERENCE: 2000}
        after = Counter(model.rollin_branch(100, rng) for _ in range(4000))
        assert set(after) == {ROLLIN_REFERENCE, ROLLIN_MODEL}
        assert after[ROLLIN_MODEL] / 4000 == pytest.approx(0.5, abs=0.03)

    def test_reference_corruption_rate(self):
        rng = np.random.default_rng(3)
        target = [f"w{i}" for i in range(20)]
        kept = []
        for _ in range(500):
            body = list(corrupt_reference(target, 0.5, rng).body)
            assert body == [t for t in target if t in body]
            kept.append(len(body))
        assert np.mean(kept) / len(target) == pytest.approx(0.5, abs=0.03)

    def test_model_rollin_starts_from_initial_state(self, levt_config, vocab, inputs, train_config, monkeypatch):
        model = build_model("levt", levt_config, vocab, seed=1)
        model.configure_training(replace(train_config, rollin_warmup_steps=0, rollin_model_prob=1.0))
        seen = []

        def record(state, memory, memory_mask):
            seen.append(state)
            return state

        monkeypatch.setattr(model, "_model_rollin", record)
        model.training_loss(inputs[:4], 5, np.random.default_rng(0))
        expected = [model.initial_state(model.config.init_strategy, inp) for inp in inputs[:4]]
        assert [s.tokens for s in seen] == [s.tokens for s in expected]

    def test_empty_constraints_start_blank(self, levt_config, vocab, small_corpus):
        model = build_model("levt", levt_config, vocab, seed=1)
        unconstrained = next(t for t in small_corpus if not t.constraints)
        inp = prepare_input(unconstrained, EncoderVariant.APPEND)
        assert model.initial_state(InitStrategy.CONSTRAINTS, inp).tokens == (BOS, EOS)

    def test_constraints_init_is_ordered_phrases(self, levt_config, vocab, small_corpus):
        model = build_model("levt", levt_config, vocab, seed=1)
        constrained = next(t for t in small_corpus if t.constraints)
        inp = prepare_input(constrained, EncoderVariant.APPEND)
        state = model.initial_state(InitStrategy.CONSTRAINTS, inp)
        assert list(state.body) == [tok for phrase in inp.constraint_phrases for tok in phrase]

    def test_protected_decoding_keeps_every_term(self, levt_config, vocab, small_corpus):
        """未训练的模型在约束初始化 + 保护下 Term% 仍为 100"""
        model = build_model("levt", levt_config, vocab, seed=4)
        testset = [t for t in small_corpus if t.constraints]
        decode = DecodeConfig(init_strategy="constraints", protect_constraints=True, max_len=30)
        hypotheses = model.postedit(prepare_inputs(testset, EncoderVariant.APPEND), decode)
        hit, total = term_pct([h.sentence.tokens for h in hypotheses], [t.constraints for t in testset])
        assert total > 0
        assert hit == total

    def test_iteration_cap_reported(self, levt_config, vocab, inputs):
        model = build_model("levt", levt_config, vocab, seed=5)
        for h in model.postedit(inputs[:4], DecodeConfig(max_len=20)):
            assert 1 <= h.iterations <= levt_config.max_iterations
            if h.truncated:
                assert h.iterations == levt_config.max_iterations

    def test_trace_lines(self, levt_config, vocab, inputs):
        model = build_model("levt", levt_config, vocab, seed=5)
        trace = []
        model.postedit(inputs[:2], DecodeConfig(max_len=20), trace=trace)
        assert trace
        assert all(line.startswith("sent=") for line in trace)


class TestCheckpoint:

    @pytest.mark.parametrize("kind", ["mst", "levt"])
    def test_round_trip_same_outputs(self, kind, mst_config, levt_config, vocab, inputs, tmp_path):
        config = mst_config if kind == "mst" else levt_config
        model = build_model(kind, config, vocab, seed=6)
        path = save_checkpoint(tmp_path / f"{kind}.pt", model, None, {"phase": "pretrain"})
        loaded = load_checkpoint(path)

        assert loaded.kind == model.kind
        assert loaded.bpe is None
        assert loaded.meta["phase"] == "pretrain"
        assert loaded.model.vocab.to_list() == vocab.to_list()
        decode = DecodeConfig(beam_size=2, max_len=10)
        before = [h.sentence for h in model.postedit(inputs[:4], decode)]
        after = [h.sentence for h in loaded.model.postedit(inputs[:4], decode)]
        assert before == after

    def test_missing_file(self, tmp_path):
        with pytest.raises(CheckpointError):
            load_checkpoint(tmp_path / "absent.pt")

    def test_format_version_stored(self, mst_config, vocab, tmp_path):
        path = save_checkpoint(tmp_path / "m.pt", build_model("mst", mst_config, vocab, seed=1))
        payload = torch.load(path, weights_only=True)
        assert payload["format_version"] == FORMAT_VERSION
        assert payload["model_kind"] == "mst"
