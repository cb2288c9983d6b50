# ape_system/utils/logger.py
"""
日志：文本 / JSON 两种格式，控制台走 stderr，可选写入 run 目录下的轮转文件

所有日志器都挂在 "ape_system" 之下，处理器只配在根上。
每条日志可以带一个 extra_fields 字典：

    logger.info("✅ 训练完成", {"phase": "pretrain", "steps": 2000})

文本格式把它追加成 `| phase=pretrain steps=2000`，JSON 格式直接并入记录。
stdout 不写日志，留给表格 / 报告等机器可读输出。
"""

import json
import logging
import sys
import threading
from dataclasses import dataclass
from datetime import datetime
from enum import Enum
from logging.handlers import RotatingFileHandler
from pathlib import Path
from typing import Any, Dict, Optional, Union

from ape_system.core.exceptions import ConfigValidationError

ROOT_LOGGER_NAME = "ape_system"
TEXT_PATTERN = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"
DATE_PATTERN = "%Y-%m-%d %H:%M:%S"

Fields = Optional[Dict[str, Any]]


class LogLevel(Enum):
    DEBUG = logging.DEBUG
    INFO = logging.INFO
    WARNING = logging.WARNING
    ERROR = logging.ERROR
    CRITICAL = logging.CRITICAL

    @classmethod
    def parse(cls, value: Union["LogLevel", int, str]) -> int:
        """LogLevel / 整数 / 名称（不区分大小写）统一成 logging 的整数级别"""
        if isinstance(value, cls):
            return value.value
        if isinstance(value, int):
            return value
        try:
            return cls[str(value).strip().upper()].value
        except KeyError:
            raise ConfigValidationError(f"无效的日志级别: {value}",
                                        {"errors": [f"system.logging.level: {value}"]})


class LogFormat(Enum):
    TEXT = "text"
    JSON = "json"

    @classmethod
    def parse(cls, value: Union["LogFormat", str]) -> "LogFormat":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).strip().lower())
        except ValueError:
            raise ConfigValidationError(f"无效的日志格式: {value}",
                                        {"errors": [f"system.logging.format: {value}"]})


@dataclass(frozen=True)
class LogRotationConfig:
    """文件轮转：max_bytes 为 0 表示不轮转"""
    max_bytes: int = 10 * 1024 * 1024
    backup_count: int = 3
    encoding: str = "utf-8"

    def __post_init__(self):
        errors = [f"{name} 不能为负数" for name in ("max_bytes", "backup_count") if getattr(self, name) < 0]
        if errors:
            raise ConfigValidationError("LogRotationConfig 验证失败", {"errors": errors})


class StructuredFormatter(logging.Formatter):

    def __init__(self, log_format: LogFormat = LogFormat.TEXT):
        super().__init__(TEXT_PATTERN, DATE_PATTERN)
        self.log_format = log_format

    def format(self, record: logging.LogRecord) -> str:
        fields = getattr(record, "extra_fields", None) or {}
        if self.log_format is LogFormat.TEXT:
            line = super().format(record)
            if fields:
                line = f"{line} | " + " ".join(f"{k}={v}" for k, v in fields.items())
            return line

        payload = {
            "timestamp": datetime.fromtimestamp(record.created).isoformat(),
            "level": record.levelname,
            "logger": record.name,
            "message": record.getMessage(),
            "where": f"{record.module}.{record.funcName}:{record.lineno}",
            **fields,
        }
        if record.exc_info:
            payload["exception"] = self.formatException(record.exc_info)
        return json.dumps(payload, ensure_ascii=False, default=str)


class ApeLogger:
    """logging.Logger 的薄包装：第二个位置参数是结构化字段"""

    def __init__(self, name: str = ROOT_LOGGER_NAME):
        self.name = name
        self.logger = logging.getLogger(name)

    def configure(self, level: Union[LogLevel, int, str] = LogLevel.INFO,
                  log_format: Union[LogFormat, str] = LogFormat.TEXT,
                  log_dir: Optional[Union[str, Path]] = None,
                  log_to_console: bool = True,
                  rotation_config: Optional[LogRotationConfig] = None) -> "ApeLogger":
        """重建处理器；重复调用（测试里多次跑 CLI）不会叠加输出"""
        level_value = LogLevel.parse(level)
        formatter = StructuredFormatter(LogFormat.parse(log_format))

        for old in list(self.logger.handlers):
            self.logger.removeHandler(old)
            old.close()

        handlers = []
        if log_to_console:
            handlers.append(logging.StreamHandler(sys.stderr))
        if log_dir is not None:
            rotation = rotation_config or LogRotationConfig()
            directory = Path(log_dir)
            directory.mkdir(parents=True, exist_ok=True)
            handlers.append(RotatingFileHandler(directory / f"{self.name}.log", maxBytes=rotation.max_bytes,
                                                backupCount=rotation.backup_count, encoding=rotation.encoding))
        for handler in handlers:
            handler.setLevel(level_value)
            handler.setFormatter(formatter)
            self.logger.addHandler(handler)

        self.logger.setLevel(level_value)
        self.logger.propagate = False
        return self

    def debug(self, message: str, extra_fields: Fields = None):
        self._emit(logging.DEBUG, message, extra_fields)

    def info(self, message: str, extra_fields: Fields = None):
        self._emit(logging.INFO, message, extra_fields)

    def warning(self, message: str, extra_fields: Fields = None):
        self._emit(logging.WARNING, message, extra_fields)

    def error(self, message: str, extra_fields: Fields = None, exc_info: bool = False):
        self._emit(logging.ERROR, message, extra_fields, exc_info)

    def critical(self, message: str, extra_fields: Fields = None):
        self._emit(logging.CRITICAL, message, extra_fields)

    def _emit(self, level: int, message: str, fields: Fields, exc_info: bool = False):
        if self.logger.isEnabledFor(level):
            # stacklevel=3 让 module/funcName 指向调用方而不是这里
            self.logger.log(level, message, extra={"extra_fields": fields or {}}, exc_info=exc_info, stacklevel=3)


_registry: Dict[str, ApeLogger] = {}
_registry_lock = threading.Lock()


def get_logger(name: Optional[str] = None) -> ApeLogger:
    """按名称缓存；不以 ape_system 开头的名称挂到根日志器下"""
    name = name or ROOT_LOGGER_NAME
    if name != ROOT_LOGGER_NAME and not name.startswith(ROOT_LOGGER_NAME + "."):
        name = f"{ROOT_LOGGER_NAME}.{name}"
    with _registry_lock:
        return _registry.setdefault(name, ApeLogger(name))


def setup_logger(level: Union[LogLevel, int, str] = LogLevel.INFO,
                 log_format: Union[LogFormat, str] = LogFormat.TEXT,
                 log_dir: Optional[Union[str, Path]] = None,
                 log_to_console: bool = True,
                 rotation_config: Optional[LogRotationConfig] = None) -> ApeLogger:
    return get_logger().configure(level, log_format, log_dir, log_to_console, rotation_config)


__all__ = [
    "ApeLogger",
    "LogFormat",
    "LogLevel",
    "LogRotationConfig",
    "StructuredFormatter",
    "get_logger",
    "setup_logger",
]
