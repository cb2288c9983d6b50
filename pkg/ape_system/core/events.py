# ape_system/core/events.py
"""
训练事件总线

训练引擎 / 调度只负责 emit，损失历史、资源采样、曲线绘制都挂在订阅者上。
处理器抛出的异常被记录后吞掉，训练不会因为监控失败而中断。
"""

import threading
import time
from abc import ABC, abstractmethod
from collections import defaultdict
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, DefaultDict, Dict, List

from ape_system.utils.logger import get_logger


class EventType(Enum):
    TRAIN_STARTED = "train_started"          # phase, kind, variant
    PHASE_STARTED = "phase_started"          # phase, steps, n_examples
    TRAIN_STEP_LOGGED = "train_step_logged"  # phase, step, loss, lr 及模型统计量
    CHECKPOINT_SAVED = "checkpoint_saved"    # phase, path
    TRAIN_FINISHED = "train_finished"        # phase, steps, final_loss
    NUMERIC_FAILURE = "numeric_failure"      # phase, step, loss


@dataclass
class Event:
    event_type: EventType
    data: Dict[str, Any] = field(default_factory=dict)
    timestamp: float = field(default_factory=time.time)


class EventHandler(ABC):

    @abstractmethod
    def handle_event(self, event: Event) -> None:
        ...


class EventBus:

    def __init__(self):
        self._subscribers: DefaultDict[EventType, List[EventHandler]] = defaultdict(list)
        self._guard = threading.RLock()
        self.logger = get_logger(__name__)

    def subscribe(self, event_type: EventType, handler: EventHandler) -> None:
        with self._guard:
            self._subscribers[event_type].append(handler)

    def unsubscribe(self, event_type: EventType, handler: EventHandler) -> None:
        with self._guard:
            subscribers = self._subscribers[event_type]
            if handler in subscribers:
                subscribers.remove(handler)

    def publish(self, event: Event) -> None:
        with self._guard:
            targets = tuple(self._subscribers[event.event_type])
        for handler in targets:
            try:
                handler.handle_event(event)
            except Exception as e:
                self.logger.error(f"❌ {type(handler).__name__} 处理 {event.event_type.value} 失败: {e}",
                                  {"event_type": event.event_type.value})

    def emit(self, event_type: EventType, **data: Any) -> None:
        self.publish(Event(event_type, data))


# 进程级默认总线；测试里各自 new 一个
event_bus = EventBus()
