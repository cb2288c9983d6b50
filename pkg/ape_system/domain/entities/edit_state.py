# ape_system/domain/entities/edit_state.py
"""
编辑状态实体
LevT 迭代解码的状态 (带 <s> / </s> 哨兵的 token 序列) 与
一次迭代的三段编辑动作（删除 / 插入占位符数 / 填充）。
"""

from dataclasses import dataclass, field
from typing import Tuple, Sequence, Optional

from ape_system.core.exceptions import EditContractError

BOS = "<s>"
EOS = "</s>"
PLH = "<plh>"
NO_PHRASE = -1


@dataclass(frozen=True)
class EditState:
    """
    解码状态

    Attributes:
        tokens: 首为 <s>、尾为 </s> 的子词序列
        iteration: 已执行的迭代次数
        phrase_ids: 与 tokens 等长；由约束初始化的 token 记录其约束序号，其余为 -1
    """
    tokens: Tuple[str, ...]
    iteration: int = 0
    phrase_ids: Tuple[int, ...] = field(default=())

    def __post_init__(self):
        tokens = tuple(self.tokens)
        object.__setattr__(self, 'tokens', tokens)
        phrase_ids = tuple(self.phrase_ids) if self.phrase_ids else (NO_PHRASE,) * len(tokens)
        object.__setattr__(self, 'phrase_ids', phrase_ids)
        if len(tokens) < 2 or tokens[0] != BOS or tokens[-1] != EOS:
            raise EditContractError(f"状态必须以 {BOS} 开头、{EOS} 结尾: {tokens}", phase="state")
        if len(phrase_ids) != len(tokens):
            raise EditContractError("phrase_ids 长度必须与 tokens 一致", phase="state")
        if self.iteration < 0:
            raise EditContractError(f"iteration 不能为负数: {self.iteration}", phase="state")

    @classmethod
    def wrap(cls, body: Sequence[str], phrase_ids: Optional[Sequence[int]] = None) -> 'EditState':
        """给正文加上哨兵"""
        ids = tuple(phrase_ids) if phrase_ids is not None else (NO_PHRASE,) * len(body)
        return cls((BOS,) + tuple(body) + (EOS,), 0, (NO_PHRASE,) + ids + (NO_PHRASE,))

    @property
    def body(self) -> Tuple[str, ...]:
        """去掉哨兵的正文"""
        return self.tokens[1:-1]

    @property
    def n_slots(self) -> int:
        return len(self.tokens) - 1

    def __len__(self) -> int:
        return len(self.tokens)


@dataclass(frozen=True)
class EditActions:
    """
    一次迭代的编辑动作

    deletions 与删除前 tokens 等长（True 表示删除）；
    insert_counts 对应删除后相邻 token 之间的每个间隙；
    fills 依次填充每个占位符，总数等于 sum(insert_counts)。
    """
    deletions: Tuple[bool, ...]
    insert_counts: Tuple[int, ...]
    fills: Tuple[str, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, 'deletions', tuple(bool(d) for d in self.deletions))
        object.__setattr__(self, 'insert_counts', tuple(int(c) for c in self.insert_counts))
        object.__setattr__(self, 'fills', tuple(self.fills))
        if any(c < 0 for c in self.insert_counts):
            raise EditContractError("insert_counts 不能为负数", phase="insert")
        if sum(self.insert_counts) != len(self.fills):
            raise EditContractError(
                f"填充数 {len(self.fills)} 与占位符总数 {sum(self.insert_counts)} 不一致", phase="fill")

    @classmethod
    def noop(cls, state: EditState) -> 'EditActions':
        return cls((False,) * len(state.tokens), (0,) * state.n_slots, ())

    @property
    def n_deletions(self) -> int:
        return sum(self.deletions)

    @property
    def n_insertions(self) -> int:
        return len(self.fills)

    @property
    def is_noop(self) -> bool:
        return self.n_deletions == 0 and self.n_insertions == 0


__all__ = ['BOS', 'EOS', 'PLH', 'NO_PHRASE', 'EditState', 'EditActions']
