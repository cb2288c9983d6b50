# ape_system/__init__.py
"""
术语约束自动后编辑（APE）工具包
约束编码、多源 Transformer / Levenshtein Transformer 后编辑器、
术语挖掘、同义/反义数据增强与 TER/BLEU/Term% 评测
"""

__version__ = "1.0.0"
