# ape_system/infrastructure/data/__init__.py
"""
数据文件读写
"""

from .manager import DataManager, get_data_manager, load_corpus, save_corpus, load_corpus_prefix

__all__ = ['DataManager', 'get_data_manager', 'load_corpus', 'save_corpus', 'load_corpus_prefix']
