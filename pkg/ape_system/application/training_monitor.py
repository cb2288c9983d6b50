# ape_system/application/training_monitor.py
"""
训练过程监控
订阅训练事件，记录损失曲线与进程资源占用（RSS / CPU），可输出损失曲线图
"""

from dataclasses import dataclass, field
from datetime import datetime
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Union

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import pandas as pd
import psutil
import seaborn as sns

from ape_system.core.events import Event, EventBus, EventHandler, EventType, event_bus
from ape_system.utils.logger import get_logger

_logger = get_logger(__name__)


@dataclass
class ResourceSample:
    """一次资源采样"""
    timestamp: datetime
    step: int
    rss_mb: float
    cpu_percent: float


@dataclass
class PhaseRecord:
    """单个训练阶段的记录"""
    phase: str
    history: List[Dict[str, float]] = field(default_factory=list)
    checkpoints: List[str] = field(default_factory=list)
    finished: bool = False
    failure: Optional[Dict[str, Any]] = None


def plot_loss_curve(history: Sequence[Dict[str, float]], save_path: Union[str, Path],
                    title: str = "training loss") -> Optional[Path]:
    """把 (step, loss) 记录画成折线图；记录为空时不输出"""
    if not history:
        _logger.warning("⚠️ 没有损失记录，跳过绘图")
        return None
    frame = pd.DataFrame(history)
    save_path = Path(save_path)
    save_path.parent.mkdir(parents=True, exist_ok=True)

    sns.set_theme(style="whitegrid")
    fig, ax = plt.subplots(figsize=(8, 4.5))
    sns.lineplot(data=frame, x="step", y="loss", ax=ax, linewidth=2, color="#2E86AB")
    ax.set_title(title, fontweight="bold")
    ax.set_xlabel("step")
    ax.set_ylabel("loss (nats / token)")
    fig.tight_layout()
    fig.savefig(save_path, dpi=120)
    plt.close(fig)
    _logger.info(f"📈 损失曲线已保存: {save_path}")
    return save_path


class TrainingMonitor(EventHandler):
    """训练事件处理器"""

    SUBSCRIBED = (
        EventType.TRAIN_STARTED, EventType.PHASE_STARTED, EventType.TRAIN_STEP_LOGGED,
        EventType.CHECKPOINT_SAVED, EventType.TRAIN_FINISHED, EventType.NUMERIC_FAILURE,
    )

    def __init__(self, sample_resources: bool = True, bus: EventBus = event_bus):
        self.logger = get_logger(__name__)
        self.sample_resources = sample_resources
        self.bus = bus
        self.phases: Dict[str, PhaseRecord] = {}
        self.resource_samples: List[ResourceSample] = []
        self._process = psutil.Process() if sample_resources else None
        self._current_phase = "train"

    def attach(self) -> 'TrainingMonitor':
        for event_type in self.SUBSCRIBED:
            self.bus.subscribe(event_type, self)
        return self

    def detach(self):
        for event_type in self.SUBSCRIBED:
            self.bus.unsubscribe(event_type, self)

    def __enter__(self):
        return self.attach()

    def __exit__(self, exc_type, exc_val, exc_tb):
        self.detach()

    def _phase(self, name: Optional[str] = None) -> PhaseRecord:
        name = name or self._current_phase
        if name not in self.phases:
            self.phases[name] = PhaseRecord(name)
        return self.phases[name]

    def handle_event(self, event: Event):
        data = event.data
        if event.event_type in (EventType.TRAIN_STARTED, EventType.PHASE_STARTED):
            self._current_phase = data.get("phase", self._current_phase)
            self._phase()
        elif event.event_type == EventType.TRAIN_STEP_LOGGED:
            record = {k: float(v) for k, v in data.items() if isinstance(v, (int, float))}
            self._phase(data.get("phase")).history.append(record)
            if self.sample_resources:
                self._sample(int(data.get("step", 0)))
        elif event.event_type == EventType.CHECKPOINT_SAVED:
            self._phase(data.get("phase")).checkpoints.append(str(data.get("path")))
        elif event.event_type == EventType.TRAIN_FINISHED:
            self._phase(data.get("phase")).finished = True
        elif event.event_type == EventType.NUMERIC_FAILURE:
            self._phase(data.get("phase")).failure = dict(data)
            self.logger.error(f"❌ 数值异常: step={data.get('step')} loss={data.get('loss')}")

    def _sample(self, step: int):
        try:
            sample = ResourceSample(
                timestamp=datetime.now(),
                step=step,
                rss_mb=self._process.memory_info().rss / (1024 * 1024),
                cpu_percent=self._process.cpu_percent(interval=None),
            )
        except psutil.Error as e:
            self.logger.debug(f"资源采样失败: {e}")
            return
        self.resource_samples.append(sample)

    def history(self, phase: Optional[str] = None) -> List[Dict[str, float]]:
        return list(self._phase(phase).history)

    def get_summary(self) -> Dict[str, Any]:
        summary: Dict[str, Any] = {}
        for name, record in self.phases.items():
            losses = [h["loss"] for h in record.history if "loss" in h]
            summary[name] = {
                "logged_points": len(record.history),
                "first_loss": losses[0] if losses else None,
                "last_loss": losses[-1] if losses else None,
                "checkpoints": list(record.checkpoints),
                "finished": record.finished,
                "failed": record.failure is not None,
            }
        if self.resource_samples:
            summary["resources"] = {
                "peak_rss_mb": max(s.rss_mb for s in self.resource_samples),
                "avg_cpu_percent": sum(s.cpu_percent for s in self.resource_samples) / len(self.resource_samples),
            }
        return summary


__all__ = ['ResourceSample', 'PhaseRecord', 'plot_loss_curve', 'TrainingMonitor']
