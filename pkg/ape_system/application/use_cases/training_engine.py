# ape_system/application/use_cases/training_engine.py
"""
训练引擎
MST / LevT 共用的训练循环：Adam + 反平方根学习率预热 + 梯度裁剪，
按 log_every 记录损失并发布训练事件，遇到 NaN / inf 立即中止。
"""

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Dict, Iterator, List, Optional, Sequence, Union

import numpy as np
import torch
from tqdm import tqdm

from ape_system.core.events import EventBus, EventType, event_bus
from ape_system.core.exceptions import InvalidArgumentError, NumericalError
from ape_system.core.model_config import TrainConfig
from ape_system.domain.entities.encoded_source import ModelInput
from ape_system.domain.models.base import BaseApeModel
from ape_system.domain.services.subword import BPEModel
from ape_system.infrastructure.checkpoint_store import save_checkpoint
from ape_system.utils.logger import get_logger
from ape_system.utils.monitoring import Timer
from ape_system.utils.seeding import make_rng, set_global_seed


@dataclass
class TrainState:
    """训练结果"""
    phase: str
    steps: int = 0
    history: List[Dict[str, float]] = field(default_factory=list)
    checkpoint: Optional[Path] = None

    @property
    def losses(self) -> List[float]:
        return [h["loss"] for h in self.history]

    @property
    def final_loss(self) -> float:
        return self.history[-1]["loss"] if self.history else float("nan")

    def to_dict(self) -> Dict[str, Any]:
        return {
            "phase": self.phase,
            "steps": self.steps,
            "final_loss": self.final_loss,
            "checkpoint": str(self.checkpoint) if self.checkpoint else None,
        }


def inverse_sqrt_schedule(warmup_steps: int) -> Callable[[int], float]:
    """线性预热到峰值后按 1/sqrt(step) 衰减，返回学习率倍数"""
    warmup = max(int(warmup_steps), 1)

    def factor(step: int) -> float:
        step = step + 1
        return min(step / warmup, math.sqrt(warmup / step))

    return factor


class TrainingEngine:
    """单个模型的训练循环"""

    def __init__(self, model: BaseApeModel, train: TrainConfig, bus: EventBus = event_bus,
                 show_progress: bool = True):
        train.validate()
        self.model = model
        self.train = train
        self.bus = bus
        self.show_progress = show_progress
        self.logger = get_logger(__name__)
        model.configure_training(train)

    def iterate_batches(self, inputs: Sequence[ModelInput], rng: np.random.Generator) -> Iterator[List[ModelInput]]:
        """无限循环的批次流，每轮重新打乱"""
        size = min(self.train.batch_size, len(inputs))
        while True:
            order = rng.permutation(len(inputs))
            for start in range(0, len(order) - size + 1, size):
                yield [inputs[i] for i in order[start:start + size]]

    def _check_finite(self, loss: torch.Tensor, step: int, phase: str):
        if torch.isfinite(loss).all():
            return
        value = float(loss.detach())
        self.bus.emit(EventType.NUMERIC_FAILURE, phase=phase, step=step, loss=value)
        self.logger.error(f"❌ 第 {step} 步损失为 {value}，训练中止", {"phase": phase, "step": step})
        raise NumericalError(f"第 {step} 步出现非有限损失: {value}", step=step, phase=phase)

    def fit(self, inputs: Sequence[ModelInput], steps: Optional[int] = None, phase: str = "train",
            seed: Optional[int] = None) -> TrainState:
        """
        训练 steps 步（默认 train.steps）

        Raises:
            InvalidArgumentError: 训练集为空
            NumericalError: 出现 NaN / inf 损失
        """
        steps = self.train.steps if steps is None else int(steps)
        seed = self.train.seed if seed is None else seed
        state = TrainState(phase)
        if steps <= 0:
            self.logger.info(f"⏭️ 阶段 {phase} 步数为 0，跳过训练")
            return state
        if not inputs:
            raise InvalidArgumentError(f"阶段 {phase} 的训练集为空", argument="inputs")

        set_global_seed(seed)
        rng = make_rng(seed)
        model = self.model
        optimizer = torch.optim.Adam(model.parameters(), lr=self.train.learning_rate, betas=(0.9, 0.98), eps=1e-9)
        scheduler = torch.optim.lr_scheduler.LambdaLR(optimizer, inverse_sqrt_schedule(self.train.warmup_steps))
        batches = self.iterate_batches(inputs, rng)

        self.bus.emit(EventType.PHASE_STARTED, phase=phase, steps=steps, n_examples=len(inputs))
        self.logger.info(f"🚀 开始训练 {model.kind.value} [{phase}]: {len(inputs)} 条样本，{steps} 步",
                         {"phase": phase, "seed": seed, "parameters": model.n_parameters})
        model.train()
        progress = tqdm(range(steps), desc=f"{model.kind.value}:{phase}", disable=not self.show_progress,
                        leave=False)
        with Timer(f"train_{model.kind.value}") as timer:
            for step in progress:
                batch = next(batches)
                loss, stats = model.training_loss(batch, step, rng)
                self._check_finite(loss, step, phase)

                optimizer.zero_grad()
                loss.backward()
                if self.train.clip_norm > 0:
                    torch.nn.utils.clip_grad_norm_(model.parameters(), self.train.clip_norm)
                optimizer.step()
                scheduler.step()
                timer.add_items(len(batch))

                if step % self.train.log_every == 0 or step == steps - 1:
                    record = {"step": float(step), "loss": float(loss.detach()),
                              "lr": float(scheduler.get_last_lr()[0])}
                    record.update({k: float(v) for k, v in stats.items()})
                    state.history.append(record)
                    progress.set_postfix(loss=f"{record['loss']:.4f}")
                    self.bus.emit(EventType.TRAIN_STEP_LOGGED, phase=phase, **record)
                    self.logger.debug(f"📊 [{phase}] step {step} loss {record['loss']:.4f}")
        state.steps = steps
        model.eval()
        self.bus.emit(EventType.TRAIN_FINISHED, phase=phase, steps=steps, final_loss=state.final_loss)
        self.logger.info(f"✅ 训练完成 [{phase}]: 最终损失 {state.final_loss:.4f}")
        return state

    def save(self, path: Union[str, Path], state: TrainState, bpe: Optional[BPEModel] = None,
             meta: Optional[Dict[str, Any]] = None) -> Path:
        """保存检查点并发布 CHECKPOINT_SAVED"""
        payload_meta = {"phase": state.phase, "steps": state.steps, "final_loss": state.final_loss,
                        "variant": self.model.config.variant.value}
        payload_meta.update(meta or {})
        path = save_checkpoint(path, self.model, bpe, payload_meta)
        state.checkpoint = path
        self.bus.emit(EventType.CHECKPOINT_SAVED, phase=state.phase, path=str(path))
        return path


__all__ = ['TrainState', 'inverse_sqrt_schedule', 'TrainingEngine']
