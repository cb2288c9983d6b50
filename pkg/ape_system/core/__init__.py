# ape_system/core/__init__.py
"""
核心框架模块
包含配置管理、异常定义等（事件总线见 core.events）
"""

from .exceptions import (
    ApeSystemError, ConfigError, ConfigValidationError, DataError, NumericalError, ModelError,
    get_error_category, exit_code_for
)
from .model_config import EncoderVariant, InitStrategy, ModelKind
from .config import ConfigManager

__all__ = [
    'ApeSystemError', 'ConfigError', 'ConfigValidationError', 'DataError', 'NumericalError', 'ModelError',
    'get_error_category', 'exit_code_for',
    'EncoderVariant', 'InitStrategy', 'ModelKind',
    'ConfigManager',
]
