# ape_system/application/use_cases/__init__.py
"""
用例：训练与后编辑
"""

from .training_engine import TrainingEngine, TrainState, inverse_sqrt_schedule
from .postedit_use_case import PosteditResult, PosteditUseCase, do_nothing

__all__ = [
    'TrainingEngine', 'TrainState', 'inverse_sqrt_schedule',
    'PosteditResult', 'PosteditUseCase', 'do_nothing'
]
