# ape_system/core/exceptions.py
"""
异常层次与 CLI 退出码

    ApeSystemError
    ├── ConfigError      → config  → 2
    ├── DataError        → data    → 3
    ├── NumericalError   → numeric → 4
    └── ModelError       → model   → 1

子类的关键字参数（文件、行号、步数……）统一收进 details，值为 None 的不写入。
"""

from typing import Any, Dict, Optional


def _details(extra: Optional[Dict[str, Any]] = None, **fields: Any) -> Dict[str, Any]:
    merged = dict(extra or {})
    merged.update({k: v for k, v in fields.items() if v is not None})
    return merged


class ApeSystemError(Exception):

    def __init__(self, message: str, error_code: Optional[str] = None, details: Optional[Dict[str, Any]] = None):
        super().__init__(message)
        self.message = message
        self.error_code = error_code
        self.details = details or {}

    def __str__(self) -> str:
        return f"[{self.error_code}] {self.message}" if self.error_code else self.message

    def to_dict(self) -> Dict[str, Any]:
        return {"error_type": type(self).__name__, "error_code": self.error_code,
                "message": self.message, "details": self.details}


# ------------------------------------------------------------------
# 配置 / 参数
# ------------------------------------------------------------------
class ConfigError(ApeSystemError):

    def __init__(self, message: str, details: Optional[Dict[str, Any]] = None, error_code: str = "CONFIG_ERROR"):
        super().__init__(message, error_code, details)


class ConfigNotFoundError(ConfigError):
    """配置文件或语料前缀不存在"""

    def __init__(self, message: str, path: Optional[str] = None, details: Optional[Dict[str, Any]] = None):
        super().__init__(message, _details(details, path=path), "CONFIG_NOT_FOUND")


class ConfigValidationError(ConfigError):
    """details["errors"] 列出全部问题，而不是只报第一个"""

    def __init__(self, message: str, details: Optional[Dict[str, Any]] = None):
        super().__init__(message, details, "CONFIG_VALIDATION_ERROR")


class InvalidArgumentError(ConfigError):
    """操作前置条件不满足"""

    def __init__(self, message: str, argument: Optional[str] = None, value: Any = None,
                 details: Optional[Dict[str, Any]] = None):
        super().__init__(message, _details(details, argument=argument, value=value), "ARGUMENT_ERROR")


# ------------------------------------------------------------------
# 数据
# ------------------------------------------------------------------
class DataError(ApeSystemError):
    pass


class DataAlignmentError(DataError):
    """平行文件行数不一致"""

    def __init__(self, message: str, file_path: Optional[str] = None, expected_lines: Optional[int] = None,
                 actual_lines: Optional[int] = None, details: Optional[Dict[str, Any]] = None):
        super().__init__(message, "DATA_ALIGNMENT_ERROR",
                         _details(details, file_path=file_path, expected_lines=expected_lines,
                                  actual_lines=actual_lines))


class DataParseError(DataError):
    """line_number 从 1 开始"""

    def __init__(self, message: str, file_path: Optional[str] = None, line_number: Optional[int] = None,
                 details: Optional[Dict[str, Any]] = None):
        super().__init__(message, "DATA_PARSE_ERROR", _details(details, file_path=file_path, line_number=line_number))


class DataValidationError(DataError):

    def __init__(self, message: str, data_type: Optional[str] = None, details: Optional[Dict[str, Any]] = None):
        super().__init__(message, "DATA_VALIDATION_ERROR", _details(details, data_type=data_type))


class DataNotFoundError(DataError):

    def __init__(self, message: str, data_type: Optional[str] = None, identifier: Optional[str] = None,
                 details: Optional[Dict[str, Any]] = None):
        super().__init__(message, "DATA_NOT_FOUND", _details(details, data_type=data_type, identifier=identifier))


class SubwordAlignmentError(DataError):
    """词级下标超出子词映射范围"""

    def __init__(self, message: str, index: Optional[int] = None, n_words: Optional[int] = None,
                 details: Optional[Dict[str, Any]] = None):
        super().__init__(message, "SUBWORD_ALIGNMENT_ERROR", _details(details, index=index, n_words=n_words))


class CheckpointError(DataError):

    def __init__(self, message: str, path: Optional[str] = None, error_code: str = "CHECKPOINT_ERROR",
                 details: Optional[Dict[str, Any]] = None):
        super().__init__(message, error_code, _details(details, path=path))


class CheckpointVersionError(CheckpointError):

    def __init__(self, message: str, path: Optional[str] = None, found_version: Any = None,
                 expected_version: Any = None, details: Optional[Dict[str, Any]] = None):
        versions = {"found_version": found_version, "expected_version": expected_version}
        super().__init__(message, path, "CHECKPOINT_VERSION_ERROR", {**(details or {}), **versions})


# ------------------------------------------------------------------
# 数值 / 模型
# ------------------------------------------------------------------
class NumericalError(ApeSystemError):
    """损失出现 NaN / inf"""

    def __init__(self, message: str, step: Optional[int] = None, phase: Optional[str] = None,
                 details: Optional[Dict[str, Any]] = None):
        super().__init__(message, "NUMERIC_FAILURE", _details(details, step=step, phase=phase))


class ModelError(ApeSystemError):
    pass


class ModelBuildError(ModelError):

    def __init__(self, message: str, model_kind: Optional[str] = None, details: Optional[Dict[str, Any]] = None):
        super().__init__(message, "MODEL_BUILD_ERROR", _details(details, model_kind=model_kind))


class EditContractError(ModelError):
    """编辑动作与状态长度不符；phase 为 delete / insert / fill"""

    def __init__(self, message: str, phase: Optional[str] = None, details: Optional[Dict[str, Any]] = None):
        super().__init__(message, "EDIT_CONTRACT_ERROR", _details(details, phase=phase))


# ------------------------------------------------------------------
# 类别 / 退出码
# ------------------------------------------------------------------
_CATEGORIES = ((ConfigError, "config"), (DataError, "data"), (NumericalError, "numeric"), (ModelError, "model"))
_EXIT_CODES = {"config": 2, "data": 3, "numeric": 4}


def get_error_category(error: Exception) -> str:
    return next((name for cls, name in _CATEGORIES if isinstance(error, cls)), "internal")


def exit_code_for(error: Exception) -> int:
    return _EXIT_CODES.get(get_error_category(error), 1)


def create_error_response(error: Exception) -> Dict[str, Any]:
    if isinstance(error, ApeSystemError):
        return error.to_dict()
    return {"error_type": type(error).__name__, "error_code": "UNKNOWN_ERROR", "message": str(error), "details": {}}


__all__ = [
    "ApeSystemError",
    "ConfigError", "ConfigNotFoundError", "ConfigValidationError", "InvalidArgumentError",
    "DataError", "DataAlignmentError", "DataParseError", "DataValidationError", "DataNotFoundError",
    "SubwordAlignmentError", "CheckpointError", "CheckpointVersionError",
    "NumericalError", "ModelError", "ModelBuildError", "EditContractError",
    "create_error_response", "get_error_category", "exit_code_for",
]
