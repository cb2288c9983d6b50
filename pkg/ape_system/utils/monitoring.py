# ape_system/utils/monitoring.py
"""
耗时统计：训练步、解码、BPE、评测等操作

    @performance_monitor("bpe_apply")
    def bpe_apply(...): ...

    with Timer("decode") as t:
        ...
        t.add_items(len(batch))

统计只在进程内汇总，CLI 结束时由 generate_performance_report() 写入 run 目录。
"""

import functools
import time
from collections import deque
from dataclasses import dataclass, field
from datetime import datetime
from threading import Lock
from typing import Any, Callable, Deque, Dict, List, Optional

import numpy as np

# 中位数只看最近这么多次
RECENT_WINDOW = 50


@dataclass
class OperationTiming:
    """单个操作的累计耗时"""
    name: str
    calls: int = 0
    failures: int = 0
    seconds: float = 0.0
    fastest: float = float("inf")
    slowest: float = 0.0
    items: int = 0
    window: Deque[float] = field(default_factory=lambda: deque(maxlen=RECENT_WINDOW))

    @property
    def mean_seconds(self) -> float:
        return self.seconds / self.calls if self.calls else 0.0

    @property
    def items_per_second(self) -> float:
        return self.items / self.seconds if self.seconds > 0 else 0.0

    def add(self, elapsed: float, ok: bool = True, items: int = 0) -> None:
        self.calls += 1
        self.failures += 0 if ok else 1
        self.seconds += elapsed
        self.fastest = min(self.fastest, elapsed)
        self.slowest = max(self.slowest, elapsed)
        self.items += items
        self.window.append(elapsed)

    def as_row(self) -> Dict[str, Any]:
        median = float(np.median(self.window)) if self.window else 0.0
        return {
            "operation": self.name,
            "calls": self.calls,
            "failures": self.failures,
            "seconds": round(self.seconds, 4),
            "mean_seconds": round(self.mean_seconds, 4),
            "fastest": round(self.fastest, 4) if self.calls else 0.0,
            "slowest": round(self.slowest, 4),
            "recent_median": round(median, 4),
            "items": self.items,
            "items_per_second": round(self.items_per_second, 2),
        }


class PerformanceMonitor:
    """进程级单例，汇总所有 performance_monitor / Timer 的记录"""

    _instance: Optional["PerformanceMonitor"] = None
    _create_lock = Lock()

    def __new__(cls):
        with cls._create_lock:
            if cls._instance is None:
                instance = super().__new__(cls)
                instance._timings = {}
                instance._lock = Lock()
                instance._since = datetime.now()
                instance.enabled = True
                cls._instance = instance
            return cls._instance

    def record(self, name: str, elapsed: float, ok: bool = True, items: int = 0) -> None:
        if not self.enabled:
            return
        with self._lock:
            timing = self._timings.setdefault(name, OperationTiming(name))
            timing.add(elapsed, ok, items)

    def timing(self, name: str) -> Optional[OperationTiming]:
        with self._lock:
            return self._timings.get(name)

    def rows(self) -> List[Dict[str, Any]]:
        with self._lock:
            return [self._timings[k].as_row() for k in sorted(self._timings)]

    def slow_operations(self, threshold: float = 1.0) -> List[str]:
        """平均耗时超过 threshold 秒的操作名，慢的在前"""
        with self._lock:
            slow = [t for t in self._timings.values() if t.mean_seconds > threshold]
        return [t.name for t in sorted(slow, key=lambda t: t.mean_seconds, reverse=True)]

    def reset(self) -> None:
        with self._lock:
            self._timings.clear()
            self._since = datetime.now()

    @property
    def uptime(self) -> float:
        return (datetime.now() - self._since).total_seconds()


_monitor = PerformanceMonitor()


def performance_monitor(operation_name: Optional[str] = None):
    """按函数记录耗时；未给名字时用函数名"""

    def decorator(func: Callable) -> Callable:
        name = operation_name or func.__name__

        @functools.wraps(func)
        def wrapper(*args, **kwargs):
            if not _monitor.enabled:
                return func(*args, **kwargs)
            started = time.perf_counter()
            ok = False
            try:
                result = func(*args, **kwargs)
                ok = True
                return result
            finally:
                _monitor.record(name, time.perf_counter() - started, ok)

        return wrapper

    return decorator


class Timer:
    """with 块计时；add_items() 累加处理条数，用于吞吐量"""

    def __init__(self, operation_name: str):
        self.operation_name = operation_name
        self.items = 0
        self.elapsed: Optional[float] = None
        self._started: Optional[float] = None

    def __enter__(self) -> "Timer":
        self._started = time.perf_counter()
        return self

    def __exit__(self, exc_type, exc, tb) -> None:
        self.elapsed = time.perf_counter() - self._started
        _monitor.record(self.operation_name, self.elapsed, exc_type is None, self.items)

    def add_items(self, count: int) -> None:
        self.items += count


def get_performance_monitor() -> PerformanceMonitor:
    return _monitor


def generate_performance_report() -> Dict[str, Any]:
    rows = _monitor.rows()
    return {
        "generated_at": datetime.now().isoformat(timespec="seconds"),
        "uptime_seconds": round(_monitor.uptime, 2),
        "total_calls": sum(r["calls"] for r in rows),
        "total_failures": sum(r["failures"] for r in rows),
        "operations": rows,
        "slow_operations": _monitor.slow_operations(),
    }


__all__ = [
    "OperationTiming",
    "PerformanceMonitor",
    "Timer",
    "generate_performance_report",
    "get_performance_monitor",
    "performance_monitor",
]
