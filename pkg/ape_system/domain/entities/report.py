# ape_system/domain/entities/report.py
"""评测报告实体"""

import json
import math
from dataclasses import dataclass
from typing import Dict, Any, Optional

from ape_system.core.exceptions import DataValidationError

REPORT_KEYS = ("ter", "bleu", "term_pct", "n_sentences", "n_constraints", "n_constraints_hit")


@dataclass(frozen=True)
class EvalReport:
    """
    系统输出在测试集上的评测结果

    term_pct 在 n_constraints 为 0 时无定义（序列化为 null）。
    """
    ter: float
    bleu: float
    term_pct: Optional[float]
    n_sentences: int
    n_constraints: int
    n_constraints_hit: int

    def __post_init__(self):
        errors = []
        if not math.isfinite(self.ter) or self.ter < 0:
            errors.append(f"ter 必须是非负有限数: {self.ter}")
        if not math.isfinite(self.bleu) or not (0.0 <= self.bleu <= 100.0 + 1e-9):
            errors.append(f"bleu 必须在 0-100 之间: {self.bleu}")
        if self.n_constraints_hit > self.n_constraints:
            errors.append("命中数不能超过约束总数")
        if self.n_constraints == 0 and self.term_pct is not None:
            errors.append("无约束时 term_pct 必须为空")
        if errors:
            raise DataValidationError(f"评测报告无效: {'; '.join(errors)}", data_type="EvalReport")

    def to_dict(self) -> Dict[str, Any]:
        return {key: getattr(self, key) for key in REPORT_KEYS}

    def to_json(self) -> str:
        """固定键序的 JSON，保证逐字节可复现"""
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'EvalReport':
        return cls(**{key: data[key] for key in REPORT_KEYS})


__all__ = ['EvalReport', 'REPORT_KEYS']
