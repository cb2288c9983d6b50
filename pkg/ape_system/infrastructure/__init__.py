# ape_system/infrastructure/__init__.py
"""
基础设施层
语料 / 词典 / 模型文件读写与检查点归档
"""

from .data.manager import DataManager, get_data_manager
from .checkpoint_store import CheckpointStore, LoadedCheckpoint, load_checkpoint, save_checkpoint

__all__ = ['DataManager', 'get_data_manager', 'CheckpointStore', 'LoadedCheckpoint',
           'load_checkpoint', 'save_checkpoint']
