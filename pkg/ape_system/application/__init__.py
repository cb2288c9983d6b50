# ape_system/application/__init__.py
"""
应用层
编排训练调度、后编辑、级联评测与约束探针
"""

from .use_cases.training_engine import TrainingEngine
from .use_cases.postedit_use_case import PosteditUseCase, do_nothing
from .training_monitor import TrainingMonitor
from .pipeline import CascadeSpec, TrainingPipeline, run_cascade, run_probes, run_schedule

__all__ = [
    'TrainingEngine', 'PosteditUseCase', 'do_nothing', 'TrainingMonitor',
    'CascadeSpec', 'TrainingPipeline', 'run_cascade', 'run_probes', 'run_schedule'
]
