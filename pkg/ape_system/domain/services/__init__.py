# ape_system/domain/services/__init__.py
"""
领域服务模块
约束编码、子词切分、术语挖掘、合成数据、数据增强与 LevT 编辑逻辑
"""

from .encoding import encode_source, prepare_input, prepare_inputs
from .subword import BPEModel, TruecaseModel, bpe_train, bpe_apply, bpe_restore
from .termmine import TermDictionary, TermMiner, mine_constraints
from .edit_oracle import oracle_edits, apply_edits
from .refinement import init_state, refine

__all__ = [
    'encode_source', 'prepare_input', 'prepare_inputs',
    'BPEModel', 'TruecaseModel', 'bpe_train', 'bpe_apply', 'bpe_restore',
    'TermDictionary', 'TermMiner', 'mine_constraints',
    'oracle_edits', 'apply_edits', 'init_state', 'refine',
]
