# ape_system/domain/entities/__init__.py
"""
领域实体：语料、约束、编码输入、编辑状态、词表、评测报告
"""
from .corpus import (
    Sentence, Constraint, ConstraintSet, Triplet, Corpus,
    validate_token, tokenize, upsample, join, holdout_split, take, corpus_statistics
)
from .encoded_source import SourceFactor, EncodedSource, ModelInput
from .edit_state import EditState, EditActions, BOS, EOS, PLH, NO_PHRASE
from .vocabulary import Vocabulary, PAD, UNK, SPECIALS
from .report import EvalReport, REPORT_KEYS

__all__ = [
    'Sentence', 'Constraint', 'ConstraintSet', 'Triplet', 'Corpus',
    'validate_token', 'tokenize', 'upsample', 'join', 'holdout_split', 'take', 'corpus_statistics',
    'SourceFactor', 'EncodedSource', 'ModelInput',
    'EditState', 'EditActions', 'BOS', 'EOS', 'PLH', 'NO_PHRASE',
    'Vocabulary', 'PAD', 'UNK', 'SPECIALS',
    'EvalReport', 'REPORT_KEYS',
]
