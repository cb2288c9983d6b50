# ape_system/domain/models/__init__.py
"""
后编辑模型：多源 Transformer 与 Levenshtein Transformer
"""

from .base import BaseApeModel, Hypothesis
from .mst import MultiSourceTransformer
from .levt import LevenshteinTransformer
from .model_factory import ModelFactory, build_model, get_model_factory

__all__ = [
    'BaseApeModel', 'Hypothesis', 'MultiSourceTransformer', 'LevenshteinTransformer',
    'ModelFactory', 'build_model', 'get_model_factory',
]
