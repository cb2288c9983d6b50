# ape_system/domain/entities/encoded_source.py
"""模型输入：token 序列 + 逐位源因子"""

from dataclasses import dataclass
from enum import IntEnum
from typing import Tuple, Sequence

from ape_system.core.exceptions import DataValidationError, DataParseError


class SourceFactor(IntEnum):
    """源因子取值"""
    SOURCE = 0        # 普通源端词
    SOURCE_TERM = 1   # 源端约束短语
    TARGET_TERM = 2   # 目标端约束短语
    MT = 3            # MT 输出 γ 的 token


@dataclass(frozen=True)
class EncodedSource:
    """
    编码后的输入序列

    一个序列要么是源端（因子 0/1/2），要么是 MT 端（全部为 3），不混用。
    """
    tokens: Tuple[str, ...]
    factors: Tuple[SourceFactor, ...]

    def __post_init__(self):
        object.__setattr__(self, 'tokens', tuple(self.tokens))
        try:
            factors = tuple(SourceFactor(int(f)) for f in self.factors)
        except ValueError as e:
            raise DataValidationError(f"非法源因子: {e}", data_type="EncodedSource")
        object.__setattr__(self, 'factors', factors)
        if len(self.tokens) != len(factors):
            raise DataValidationError(
                f"tokens({len(self.tokens)}) 与 factors({len(factors)}) 长度不一致", data_type="EncodedSource")
        has_mt = SourceFactor.MT in factors
        if has_mt and any(f != SourceFactor.MT for f in factors):
            raise DataValidationError("MT 因子不能与源端因子混用", data_type="EncodedSource")

    def __len__(self) -> int:
        return len(self.tokens)

    @property
    def factor_values(self) -> Tuple[int, ...]:
        return tuple(int(f) for f in self.factors)

    def to_debug_line(self) -> str:
        """调试格式: tok|factor 以空格分隔"""
        return " ".join(f"{tok}|{int(f)}" for tok, f in zip(self.tokens, self.factors))

    @classmethod
    def from_debug_line(cls, line: str, line_number: int = 0) -> 'EncodedSource':
        tokens, factors = [], []
        for item in line.split():
            tok, sep, factor = item.rpartition("|")
            if not sep or not tok or not factor.isdigit():
                raise DataParseError(f"无法解析编码项: {item!r}", line_number=line_number)
            tokens.append(tok)
            factors.append(int(factor))
        return cls(tuple(tokens), tuple(factors))

    @classmethod
    def plain(cls, tokens: Sequence[str]) -> 'EncodedSource':
        """全 0 因子（无约束输入）"""
        return cls(tuple(tokens), (SourceFactor.SOURCE,) * len(tokens))


@dataclass(frozen=True)
class ModelInput:
    """
    模型输入（子词级）

    Attributes:
        id: 三元组 id
        source: 编码后的源端（因子 0/1/2）
        mt: 编码后的 MT 输出（因子 3）
        target: pe 子词序列；推理时为空
        constraint_phrases: 目标端约束短语（子词），已按源端出现位置排序
    """
    id: int
    source: EncodedSource
    mt: EncodedSource
    target: Tuple[str, ...] = ()
    constraint_phrases: Tuple[Tuple[str, ...], ...] = ()


__all__ = ['SourceFactor', 'EncodedSource', 'ModelInput']
