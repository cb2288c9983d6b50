"""
配置管理模块 (ape_system/core/config.py)

功能概述：
    统一管理APE工具包的运行配置（RunConfig）。配置按层合并：
        包内默认值 (config/system.yaml + config/defaults.yaml)
        ← 用户配置文件 (--config FILE)
        ← --set key=value
        ← 命令行参数（优先级最高）

核心特性：
    1. 未知键拒绝：任何不在默认配置树中的键都会触发 ConfigValidationError
    2. 类型安全：各配置段转换为 model_config 中的数据类并逐一 validate()
    3. 可复现：每次运行把解析后的完整配置写入 resolved_config.yaml
"""
from __future__ import annotations

import copy
from pathlib import Path
from typing import Dict, Any, Optional, Iterable, List, Union

import yaml

from ape_system.core.exceptions import ConfigValidationError, ConfigNotFoundError
from ape_system.core.model_config import (
    LoggingConfig, SynthConfig, SubwordConfig, TermMineConfig, MSTConfig, LevTConfig,
    TrainConfig, ScheduleConfig, DecodeConfig, EvalConfig
)

CONFIG_DIR = Path(__file__).resolve().parent.parent / "config"
DEFAULT_FILES = ("system.yaml", "defaults.yaml")

# 配置段 → 数据类
_SECTION_TYPES = {
    "synthgen": SynthConfig,
    "subword": SubwordConfig,
    "termmine": TermMineConfig,
    "mst": MSTConfig,
    "levt": LevTConfig,
    "train": TrainConfig,
    "schedule": ScheduleConfig,
    "decode": DecodeConfig,
    "eval": EvalConfig,
}


def _read_yaml(path: Path) -> Dict[str, Any]:
    if not path.is_file():
        raise ConfigNotFoundError(f"配置文件不存在: {path}", path=str(path))
    try:
        data = yaml.safe_load(path.read_text(encoding="utf-8"))
    except yaml.YAMLError as e:
        raise ConfigValidationError(f"配置文件解析失败: {path}", {"errors": [str(e)]}) from e
    if data is None:
        return {}
    if not isinstance(data, dict):
        raise ConfigValidationError(f"配置文件顶层必须是映射: {path}", {"errors": [str(path)]})
    return data


def load_default_tree() -> Dict[str, Any]:
    """读取包内默认配置树"""
    tree: Dict[str, Any] = {}
    for name in DEFAULT_FILES:
        tree.update(_read_yaml(CONFIG_DIR / name))
    return tree


def _merge_checked(base: Dict[str, Any], update: Dict[str, Any], path: str, errors: List[str]):
    """把 update 合并进 base；base 中不存在的键记为错误"""
    for key, value in update.items():
        dotted = f"{path}.{key}" if path else str(key)
        if key not in base:
            errors.append(f"{dotted}: 未知配置项")
            continue
        if isinstance(base[key], dict):
            if not isinstance(value, dict):
                errors.append(f"{dotted}: 必须是配置段（映射）")
                continue
            _merge_checked(base[key], value, dotted, errors)
        elif isinstance(value, dict):
            errors.append(f"{dotted}: 不是配置段，不能赋映射值")
        else:
            base[key] = value


def _dotted_to_nested(dotted: str, value: Any) -> Dict[str, Any]:
    parts = dotted.split(".")
    nested: Dict[str, Any] = {parts[-1]: value}
    for part in reversed(parts[:-1]):
        nested = {part: nested}
    return nested


def parse_set_pairs(pairs: Iterable[str]) -> Dict[str, Any]:
    """解析 --set key=value，值按 YAML 标量解析以保留数字/布尔类型"""
    result: Dict[str, Any] = {}
    errors = []
    for pair in pairs:
        if "=" not in pair:
            errors.append(f"--set 需要 key=value 形式: {pair}")
            continue
        key, raw = pair.split("=", 1)
        try:
            result[key.strip()] = yaml.safe_load(raw) if raw.strip() else None
        except yaml.YAMLError:
            result[key.strip()] = raw
    if errors:
        raise ConfigValidationError("--set 参数格式错误", {"errors": errors})
    return result


class ConfigManager:
    """
    运行配置管理器（RunConfig）

    使用示例：
        config = ConfigManager(config_file="my.yaml", overrides={"train.steps": 500})
        config.train.steps            # -> 500
        config.save_resolved(out_dir)
    """

    def __init__(self,
                 config_file: Optional[Union[str, Path]] = None,
                 overrides: Optional[Dict[str, Any]] = None,
                 set_pairs: Optional[Iterable[str]] = None):
        self._tree = load_default_tree()
        errors: List[str] = []

        if config_file is not None:
            _merge_checked(self._tree, _read_yaml(Path(config_file)), "", errors)

        layered = dict(parse_set_pairs(set_pairs or []))
        layered.update({k: v for k, v in (overrides or {}).items() if v is not None})
        for dotted, value in layered.items():
            _merge_checked(self._tree, _dotted_to_nested(dotted, value), "", errors)

        if errors:
            raise ConfigValidationError("配置包含未知或非法的键", {"errors": errors})

        self._sections: Dict[str, Any] = {}
        self._validate_config()

    def _validate_config(self):
        """构建各配置段数据类并汇总全部验证错误"""
        errors: List[str] = []
        builders = dict(_SECTION_TYPES)
        for section, cls in builders.items():
            try:
                obj = cls.from_dict(self._tree.get(section, {}))
                obj.validate()
                self._sections[section] = obj
            except ConfigValidationError as e:
                errors.extend(f"{section}: {err}" for err in e.details.get("errors", [str(e)]))
            except (TypeError, ValueError) as e:
                errors.append(f"{section}: {e}")

        try:
            logging_config = LoggingConfig.from_dict(self._tree["system"]["logging"])
            logging_config.validate()
            self._sections["logging"] = logging_config
        except ConfigValidationError as e:
            errors.extend(f"system.logging: {err}" for err in e.details.get("errors", [str(e)]))

        seed = self._tree["run"].get("seed")
        if not isinstance(seed, int) or isinstance(seed, bool) or seed < 0:
            errors.append(f"run.seed 必须是非负整数: {seed}")

        if errors:
            raise ConfigValidationError("配置验证失败", {"errors": errors})

    # ---------- 访问 ----------
    @property
    def seed(self) -> int:
        return int(self._tree["run"]["seed"])

    @property
    def output_dir(self) -> Path:
        return Path(self._tree["run"]["output_dir"])

    @property
    def logging(self) -> LoggingConfig:
        return self._sections["logging"]

    @property
    def monitoring(self) -> Dict[str, Any]:
        return dict(self._tree["system"]["monitoring"])

    @property
    def synthgen(self) -> SynthConfig:
        return self._sections["synthgen"]

    @property
    def subword(self) -> SubwordConfig:
        return self._sections["subword"]

    @property
    def termmine(self) -> TermMineConfig:
        return self._sections["termmine"]

    @property
    def mst(self) -> MSTConfig:
        return self._sections["mst"]

    @property
    def levt(self) -> LevTConfig:
        return self._sections["levt"]

    @property
    def train(self) -> TrainConfig:
        return self._sections["train"]

    @property
    def schedule(self) -> ScheduleConfig:
        return self._sections["schedule"]

    @property
    def decode(self) -> DecodeConfig:
        return self._sections["decode"]

    @property
    def eval(self) -> EvalConfig:
        return self._sections["eval"]

    def get(self, dotted: str, default: Any = None) -> Any:
        node: Any = self._tree
        for part in dotted.split("."):
            if not isinstance(node, dict) or part not in node:
                return default
            node = node[part]
        return copy.deepcopy(node)

    # ---------- 序列化 ----------
    def to_dict(self) -> Dict[str, Any]:
        return copy.deepcopy(self._tree)

    def save_resolved(self, directory: Optional[Union[str, Path]] = None) -> Path:
        """写出解析后的完整配置"""
        target_dir = Path(directory) if directory is not None else self.output_dir
        target_dir.mkdir(parents=True, exist_ok=True)
        path = target_dir / "resolved_config.yaml"
        path.write_text(yaml.safe_dump(self._tree, sort_keys=True, allow_unicode=True), encoding="utf-8")
        return path


__all__ = ['ConfigManager', 'load_default_tree', 'parse_set_pairs', 'CONFIG_DIR']
