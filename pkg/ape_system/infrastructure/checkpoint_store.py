# ape_system/infrastructure/checkpoint_store.py
"""
检查点存储

单文件归档（torch.save）：
    format_version  格式版本，读取时不一致直接失败
    model_kind      mst / levt
    config          模型配置 JSON（键排序）
    vocab           词表 token 列表
    bpe_merges      BPE 合并列表，词级模式为 None
    state_dict      参数
    meta            训练元信息（步数、阶段、种子等）

读取使用 weights_only=True，归档内只允许张量与基本类型。
"""

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, Optional, Union

import torch

from ape_system.core.exceptions import CheckpointError, CheckpointVersionError, ConfigValidationError, ModelBuildError
from ape_system.core.model_config import ModelKind
from ape_system.domain.entities.vocabulary import Vocabulary
from ape_system.domain.models.base import BaseApeModel
from ape_system.domain.models.model_factory import get_model_factory
from ape_system.domain.services.subword import BPEModel
from ape_system.utils.logger import get_logger
from ape_system.utils.monitoring import performance_monitor

FORMAT_VERSION = 1
PathLike = Union[str, Path]


@dataclass
class LoadedCheckpoint:
    """读取结果"""
    model: BaseApeModel
    bpe: Optional[BPEModel]
    meta: Dict[str, Any] = field(default_factory=dict)
    path: Optional[Path] = None

    @property
    def kind(self) -> ModelKind:
        return self.model.kind


class CheckpointStore:
    """检查点读写"""

    def __init__(self):
        self.logger = get_logger(__name__)

    @performance_monitor("checkpoint_save")
    def save(self, path: PathLike, model: BaseApeModel, bpe: Optional[BPEModel] = None,
             meta: Optional[Dict[str, Any]] = None) -> Path:
        path = Path(path)
        payload = {
            "format_version": FORMAT_VERSION,
            "model_kind": model.kind.value,
            "config": json.dumps(model.config.to_dict(), sort_keys=True),
            "vocab": model.vocab.to_list(),
            "bpe_merges": [list(pair) for pair in bpe.merges] if bpe is not None else None,
            "state_dict": {name: tensor.detach().cpu() for name, tensor in model.state_dict().items()},
            "meta": dict(meta or {}),
        }
        try:
            path.parent.mkdir(parents=True, exist_ok=True)
            torch.save(payload, path)
        except OSError as e:
            self.logger.error(f"❌ 检查点写入失败 {path}: {e}")
            raise CheckpointError(f"检查点写入失败: {e}", path=str(path))
        self.logger.info(f"💾 检查点已保存: {path}")
        return path

    @performance_monitor("checkpoint_load")
    def load(self, path: PathLike, map_location: Union[str, torch.device] = "cpu") -> LoadedCheckpoint:
        path = Path(path)
        if not path.is_file():
            raise CheckpointError(f"检查点不存在: {path}", path=str(path))
        try:
            payload = torch.load(path, map_location=map_location, weights_only=True)
        except Exception as e:
            self.logger.error(f"❌ 检查点读取失败 {path}: {e}")
            raise CheckpointError(f"检查点损坏或无法读取: {e}", path=str(path))
        if not isinstance(payload, dict) or "format_version" not in payload:
            raise CheckpointError("检查点缺少 format_version", path=str(path))

        version = payload["format_version"]
        if version != FORMAT_VERSION:
            raise CheckpointVersionError(f"检查点格式版本 {version} 与当前版本 {FORMAT_VERSION} 不一致",
                                         path=str(path), found_version=version, expected_version=FORMAT_VERSION)

        try:
            factory = get_model_factory()
            kind = ModelKind.from_string(payload["model_kind"])
            config = factory.config_class(kind).from_dict(json.loads(payload["config"]))
            vocab = Vocabulary(payload["vocab"])
            model = factory.build_model(kind, config, vocab)
            model.load_state_dict(payload["state_dict"])
        except (KeyError, ValueError, RuntimeError, ConfigValidationError, ModelBuildError) as e:
            raise CheckpointError(f"检查点内容无效: {e}", path=str(path))
        model.to(map_location)
        model.eval()

        merges = payload.get("bpe_merges")
        bpe = BPEModel([tuple(pair) for pair in merges]) if merges is not None else None
        self.logger.info(f"📂 已加载检查点 {path} ({kind.value}, 词表 {len(vocab)})")
        return LoadedCheckpoint(model, bpe, dict(payload.get("meta") or {}), path)


_checkpoint_store: Optional[CheckpointStore] = None


def get_checkpoint_store() -> CheckpointStore:
    global _checkpoint_store
    if _checkpoint_store is None:
        _checkpoint_store = CheckpointStore()
    return _checkpoint_store


def save_checkpoint(path: PathLike, model: BaseApeModel, bpe: Optional[BPEModel] = None,
                    meta: Optional[Dict[str, Any]] = None) -> Path:
    return get_checkpoint_store().save(path, model, bpe, meta)


def load_checkpoint(path: PathLike, map_location: Union[str, torch.device] = "cpu") -> LoadedCheckpoint:
    return get_checkpoint_store().load(path, map_location)


__all__ = [
    'FORMAT_VERSION', 'LoadedCheckpoint', 'CheckpointStore',
    'get_checkpoint_store', 'save_checkpoint', 'load_checkpoint'
]
