# ape_system/domain/entities/vocabulary.py
"""
联合词表（源端 + 目标端 BPE 单元共享）
保留符号固定占用 0..4，其余按频次降序、同频按字典序排列。
"""

from collections import Counter
from typing import Dict, Iterable, List, Sequence

from ape_system.core.exceptions import DataValidationError
from ape_system.domain.entities.edit_state import BOS, EOS, PLH

PAD = "<pad>"
UNK = "<unk>"
SPECIALS = (PAD, BOS, EOS, UNK, PLH)


class Vocabulary:
    """token ↔ id 映射"""

    def __init__(self, tokens: Sequence[str]):
        tokens = list(tokens)
        if tuple(tokens[:len(SPECIALS)]) != SPECIALS:
            raise DataValidationError(f"词表必须以保留符号 {SPECIALS} 开头", data_type="Vocabulary")
        if len(set(tokens)) != len(tokens):
            raise DataValidationError("词表中存在重复 token", data_type="Vocabulary")
        self._itos: List[str] = tokens
        self._stoi: Dict[str, int] = {tok: i for i, tok in enumerate(tokens)}

    @classmethod
    def build(cls, sequences: Iterable[Iterable[str]]) -> 'Vocabulary':
        counts = Counter()
        for seq in sequences:
            counts.update(seq)
        for special in SPECIALS:
            counts.pop(special, None)
        ordered = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))
        return cls(list(SPECIALS) + [tok for tok, _ in ordered])

    @property
    def pad_id(self) -> int:
        return 0

    @property
    def bos_id(self) -> int:
        return 1

    @property
    def eos_id(self) -> int:
        return 2

    @property
    def unk_id(self) -> int:
        return 3

    @property
    def plh_id(self) -> int:
        return 4

    @property
    def n_specials(self) -> int:
        return len(SPECIALS)

    def __len__(self) -> int:
        return len(self._itos)

    def __contains__(self, token: str) -> bool:
        return token in self._stoi

    def index(self, token: str) -> int:
        return self._stoi.get(token, self.unk_id)

    def encode(self, tokens: Iterable[str]) -> List[int]:
        return [self._stoi.get(tok, self.unk_id) for tok in tokens]

    def decode(self, ids: Iterable[int]) -> List[str]:
        return [self._itos[i] for i in ids]

    def to_list(self) -> List[str]:
        return list(self._itos)


__all__ = ['Vocabulary', 'PAD', 'UNK', 'SPECIALS']
