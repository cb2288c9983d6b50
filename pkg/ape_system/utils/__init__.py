# ape_system/utils/__init__.py
"""
工具类模块
日志、性能监控、随机种子
"""

from .logger import setup_logger, get_logger
from .monitoring import performance_monitor, Timer

__all__ = [
    'setup_logger', 'get_logger',
    'performance_monitor', 'Timer',
]
