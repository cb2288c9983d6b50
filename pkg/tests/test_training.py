"""训练引擎、学习率调度与训练监控测试"""

import math
from dataclasses import replace

import pytest
import torch

from ape_system.application.pipeline import build_vocabulary
from ape_system.application.training_monitor import TrainingMonitor, plot_loss_curve
from ape_system.application.use_cases.training_engine import TrainingEngine, inverse_sqrt_schedule
from ape_system.core.events import Event, EventHandler, EventType
from ape_system.core.exceptions import InvalidArgumentError, NumericalError
from ape_system.core.model_config import DecodeConfig, EncoderVariant, MSTConfig, TrainConfig
from ape_system.domain.models.model_factory import build_model
from ape_system.domain.services.encoding import prepare_inputs
from ape_system.infrastructure.checkpoint_store import load_checkpoint


class Recorder(EventHandler):

    def __init__(self):
        self.events = []

    def handle_event(self, event: Event):
        self.events.append(event)


@pytest.fixture
def inputs(small_corpus):
    return prepare_inputs(small_corpus, EncoderVariant.APPEND)


@pytest.fixture
def mst(mst_config, inputs):
    return build_model("mst", mst_config, build_vocabulary(inputs), seed=1)


class TestSchedule:

    def test_warmup_then_decay(self):
        factor = inverse_sqrt_schedule(4)
        assert factor(0) == pytest.approx(0.25)
        assert factor(3) == pytest.approx(1.0)
        assert factor(15) == pytest.approx(math.sqrt(4 / 16))
        values = [factor(s) for s in range(40)]
        assert max(values) == pytest.approx(1.0)

    def test_zero_warmup(self):
        assert inverse_sqrt_schedule(0)(0) == pytest.approx(1.0)


class TestTrainingEngine:

    def test_history_and_events(self, mst, inputs, train_config, bus):
        recorder = Recorder()
        for event_type in EventType:
            bus.subscribe(event_type, recorder)
        with TrainingMonitor(sample_resources=False, bus=bus) as monitor:
            state = TrainingEngine(mst, train_config, bus, show_progress=False).fit(inputs, phase="pretrain")

        assert state.steps == train_config.steps
        assert [h["step"] for h in state.history] == [0.0, 1.0, 2.0, 3.0]
        assert all(math.isfinite(h["loss"]) and "nll" in h for h in state.history)
        kinds = [e.event_type for e in recorder.events]
        assert kinds[0] == EventType.PHASE_STARTED
        assert kinds[-1] == EventType.TRAIN_FINISHED
        assert kinds.count(EventType.TRAIN_STEP_LOGGED) == 4
        assert monitor.history("pretrain") == state.history
        assert monitor.get_summary()["pretrain"]["finished"]

    def test_log_every(self, mst, inputs, train_config, bus):
        train = replace(train_config, steps=7, log_every=3)
        state = TrainingEngine(mst, train, bus, show_progress=False).fit(inputs)
        # 每 3 步一条，最后一步总会记录
        assert [h["step"] for h in state.history] == [0.0, 3.0, 6.0]

    def test_loss_decreases_on_fixed_batch(self, mst, inputs, train_config, bus):
        train = replace(train_config, steps=60, batch_size=8, learning_rate=3e-3, warmup_steps=10, log_every=10)
        state = TrainingEngine(mst, train, bus, show_progress=False).fit(inputs[:8])
        assert state.losses[-1] < state.losses[0]

    def test_levt_trains(self, levt_config, inputs, train_config, bus):
        model = build_model("levt", levt_config, build_vocabulary(inputs), seed=2)
        state = TrainingEngine(model, train_config, bus, show_progress=False).fit(inputs)
        assert all(math.isfinite(h["loss"]) for h in state.history)
        assert {"del_loss", "ins_loss", "fill_loss", "del_acc"} <= set(state.history[-1])

    def test_zero_steps_skips(self, mst, inputs, train_config, bus):
        state = TrainingEngine(mst, train_config, bus, show_progress=False).fit(inputs, steps=0)
        assert state.steps == 0 and state.history == []

    def test_empty_inputs(self, mst, train_config, bus):
        with pytest.raises(InvalidArgumentError):
            TrainingEngine(mst, train_config, bus, show_progress=False).fit([])

    def test_nan_loss_aborts(self, mst, inputs, train_config, bus, monkeypatch):
        def nan_loss(batch, step, rng):
            return torch.tensor(float("nan"), requires_grad=True), {}

        monkeypatch.setattr(mst, "training_loss", nan_loss)
        with TrainingMonitor(sample_resources=False, bus=bus) as monitor:
            with pytest.raises(NumericalError) as info:
                TrainingEngine(mst, train_config, bus, show_progress=False).fit(inputs, phase="pretrain")
        assert info.value.details["step"] == 0
        assert monitor.get_summary()["pretrain"]["failed"]

    def test_save_emits_checkpoint_event(self, mst, inputs, train_config, bus, tmp_path):
        engine = TrainingEngine(mst, train_config, bus, show_progress=False)
        with TrainingMonitor(sample_resources=False, bus=bus) as monitor:
            state = engine.fit(inputs, phase="pretrain")
            path = engine.save(tmp_path / "pretrain.pt", state)
        assert state.checkpoint == path
        assert monitor.get_summary()["pretrain"]["checkpoints"] == [str(path)]
        meta = load_checkpoint(path).meta
        assert meta["phase"] == "pretrain"
        assert meta["variant"] == "append"
        assert meta["steps"] == train_config.steps


    def test_overfits_32_triplets_exactly(self, inputs, bus):
        """32 条样本上训练到贪心解码与 pe 完全一致"""
        batch = inputs[:32]
        config = MSTConfig(d_model=64, n_heads=4, n_layers=2, ffn_dim=128, factor_embed_dim=8, dropout=0.0,
                           max_len=48, variant="append")
        model = build_model("mst", config, build_vocabulary(inputs), seed=3)
        train = TrainConfig(steps=800, batch_size=32, learning_rate=2e-3, warmup_steps=50, label_smoothing=0.0,
                            log_every=100, seed=3, plot_loss_curve=False)
        state = TrainingEngine(model, train, bus, show_progress=False).fit(batch, phase="pretrain")
        assert state.final_loss < 0.2
        outputs = [list(h.sentence.tokens) for h in model.postedit(batch, DecodeConfig(beam_size=1, max_len=20))]
        assert outputs == [list(inp.target) for inp in batch]

    @pytest.mark.parametrize("kind", ["mst", "levt"])
    def test_trained_checkpoint_decodes_identically(self, kind, mst_config, levt_config, inputs, train_config,
                                                     bus, tmp_path):
        config = mst_config if kind == "mst" else levt_config
        model = build_model(kind, config, build_vocabulary(inputs), seed=4)
        engine = TrainingEngine(model, replace(train_config, steps=6), bus, show_progress=False)
        path = engine.save(tmp_path / f"{kind}.pt", engine.fit(inputs, phase="pretrain"))
        restored = load_checkpoint(path).model

        decode = DecodeConfig(beam_size=2, max_len=12)
        before = [h.sentence.tokens for h in model.postedit(inputs[:8], decode)]
        after = [h.sentence.tokens for h in restored.postedit(inputs[:8], decode)]
        assert before == after


class TestMonitor:

    def test_resource_sampling(self, mst, inputs, train_config, bus):
        with TrainingMonitor(sample_resources=True, bus=bus) as monitor:
            TrainingEngine(mst, train_config, bus, show_progress=False).fit(inputs)
        assert len(monitor.resource_samples) == 4
        assert all(s.rss_mb > 0 for s in monitor.resource_samples)

    def test_detached_monitor_sees_nothing(self, mst, inputs, train_config, bus):
        monitor = TrainingMonitor(sample_resources=False, bus=bus)
        TrainingEngine(mst, train_config, bus, show_progress=False).fit(inputs, phase="pretrain")
        assert monitor.phases == {}

    def test_plot_loss_curve(self, tmp_path):
        history = [{"step": float(s), "loss": 5.0 / (s + 1)} for s in range(10)]
        path = plot_loss_curve(history, tmp_path / "loss_curve_pretrain.png")
        assert path.is_file() and path.stat().st_size > 0
        assert plot_loss_curve([], tmp_path / "empty.png") is None
