# ape_system/domain/analysis/__init__.py
"""
评测指标：TER / BLEU / Term% / 稳定性
"""

from .metrics import ter, corpus_ter, bleu, term_percentage, stability, evaluate

__all__ = ['ter', 'corpus_ter', 'bleu', 'term_percentage', 'stability', 'evaluate']
