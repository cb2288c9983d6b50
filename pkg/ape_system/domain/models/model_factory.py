# ape_system/domain/models/model_factory.py
"""
模型工厂模块
按 ModelKind 注册模型类，构建前校验配置与词表，构建前设置随机种子保证初始参数可复现。
"""

from dataclasses import dataclass
from typing import Any, Dict, List, Optional, Type, Union

import torch

from ape_system.core.exceptions import ConfigValidationError, ModelBuildError
from ape_system.core.model_config import ArchitectureConfig, LevTConfig, MSTConfig, ModelKind
from ape_system.domain.entities.vocabulary import Vocabulary
from ape_system.domain.models.base import BaseApeModel
from ape_system.utils.logger import get_logger


@dataclass
class ModelRegistry:
    """模型注册信息"""
    model_class: Type[BaseApeModel]
    config_class: Type[ArchitectureConfig]
    description: str = ""


class ModelFactory:
    """模型工厂"""

    def __init__(self):
        self.logger = get_logger(__name__)
        self._model_registry: Dict[ModelKind, ModelRegistry] = {}
        self.performance_stats = {'total_creations': 0, 'failed_creations': 0}
        self._register_all_models()

    def _register_all_models(self):
        from .mst import MultiSourceTransformer
        from .levt import LevenshteinTransformer

        self._register_model(ModelKind.MST, MultiSourceTransformer, MSTConfig, "多源 Transformer")
        self._register_model(ModelKind.LEVT, LevenshteinTransformer, LevTConfig, "Levenshtein Transformer")
        self.logger.debug(f"已注册 {len(self._model_registry)} 个模型")

    def _register_model(self, kind: ModelKind, model_class: Type[BaseApeModel],
                        config_class: Type[ArchitectureConfig], description: str = ""):
        self._model_registry[kind] = ModelRegistry(model_class, config_class, description)

    def config_class(self, kind: Union[ModelKind, str]) -> Type[ArchitectureConfig]:
        return self._registry_for(kind).config_class

    def _registry_for(self, kind: Union[ModelKind, str]) -> ModelRegistry:
        if isinstance(kind, str):
            kind = ModelKind.from_string(kind)
        if kind not in self._model_registry:
            raise ModelBuildError(f"未注册的模型种类: {kind}", model_kind=str(kind))
        return self._model_registry[kind]

    def build_model(self, kind: Union[ModelKind, str], config: ArchitectureConfig, vocab: Vocabulary,
                    seed: Optional[int] = None) -> BaseApeModel:
        """
        构建模型

        Raises:
            ModelBuildError: 配置不满足约束、配置类型不符或词表只有保留符号
        """
        registry = self._registry_for(kind)
        kind_name = registry.model_class.kind.value
        if not isinstance(config, registry.config_class):
            self.performance_stats['failed_creations'] += 1
            raise ModelBuildError(f"{kind_name} 需要 {registry.config_class.__name__}，得到 {type(config).__name__}",
                                  model_kind=kind_name)
        try:
            config.validate()
        except ConfigValidationError as e:
            self.performance_stats['failed_creations'] += 1
            raise ModelBuildError(f"模型配置无效: {e.message}", model_kind=kind_name,
                                  details={'errors': e.details.get('errors', [])})
        if len(vocab) <= vocab.n_specials:
            self.performance_stats['failed_creations'] += 1
            raise ModelBuildError("词表为空（只有保留符号）", model_kind=kind_name)

        if seed is not None:
            torch.manual_seed(seed)
        model = registry.model_class(config, vocab)
        self.performance_stats['total_creations'] += 1
        self.logger.info(f"✅ 构建模型 {kind_name}: 参数量 {model.n_parameters:,}，词表 {len(vocab)}")
        return model

    def list_available_models(self) -> List[Dict[str, Any]]:
        return [
            {'kind': kind.value, 'class': reg.model_class.__name__, 'description': reg.description}
            for kind, reg in self._model_registry.items()
        ]

    def __str__(self) -> str:
        return f"ModelFactory(models={len(self._model_registry)})"


_model_factory: Optional[ModelFactory] = None


def get_model_factory() -> ModelFactory:
    global _model_factory
    if _model_factory is None:
        _model_factory = ModelFactory()
    return _model_factory


def build_model(kind: Union[ModelKind, str], config: ArchitectureConfig, vocab: Vocabulary,
                seed: Optional[int] = None) -> BaseApeModel:
    return get_model_factory().build_model(kind, config, vocab, seed)


__all__ = ['ModelRegistry', 'ModelFactory', 'get_model_factory', 'build_model']
