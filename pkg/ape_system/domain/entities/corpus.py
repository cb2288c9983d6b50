# ape_system/domain/entities/corpus.py
"""
语料实体模块
定义APE三元组 (src, mt, pe) 及其术语约束的数据结构，
以及上采样、拼接、留出集划分等纯函数操作。

所有实体构造后不可变，可在线程间安全共享。
"""

from dataclasses import dataclass, field, replace
from typing import Tuple, Iterable, Iterator, List, Optional, Sequence, Union

import numpy as np
import pandas as pd

from ape_system.core.exceptions import DataValidationError, InvalidArgumentError


def validate_token(text: str) -> str:
    """Token：非空且不含空白字符"""
    if not isinstance(text, str) or not text:
        raise DataValidationError(f"Token 不能为空: {text!r}", data_type="Token")
    if any(ch.isspace() for ch in text):
        raise DataValidationError(f"Token 不能包含空白字符: {text!r}", data_type="Token")
    return text


def tokenize(text: str) -> List[str]:
    """空白分词（仅用于合成数据与已分词文本）"""
    return text.split()


@dataclass(frozen=True)
class Sentence:
    """
    句子实体：有序 Token 序列
    to_text / from_text 以单个空格连接，往返无损
    """
    tokens: Tuple[str, ...] = ()

    def __post_init__(self):
        tokens = tuple(self.tokens)
        for token in tokens:
            validate_token(token)
        object.__setattr__(self, 'tokens', tokens)

    @classmethod
    def from_text(cls, text: str) -> 'Sentence':
        return cls(tuple(tokenize(text)))

    def to_text(self) -> str:
        return " ".join(self.tokens)

    def __len__(self) -> int:
        return len(self.tokens)

    def __iter__(self) -> Iterator[str]:
        return iter(self.tokens)

    def __getitem__(self, index):
        if isinstance(index, slice):
            return Sentence(self.tokens[index])
        return self.tokens[index]

    def __str__(self) -> str:
        return self.to_text()

    def find(self, phrase: Union['Sentence', Sequence[str]], start: int = 0) -> Optional[int]:
        """phrase 在本句中从 start 起的最左出现位置，找不到返回 None"""
        needle = tuple(phrase)
        n = len(needle)
        if n == 0:
            return None
        for i in range(start, len(self.tokens) - n + 1):
            if self.tokens[i:i + n] == needle:
                return i
        return None

    def contains(self, phrase: Union['Sentence', Sequence[str]]) -> bool:
        return self.find(phrase) is not None


@dataclass(frozen=True)
class Constraint:
    """术语约束 (源端短语, 目标端短语)，两侧均非空"""
    src_phrase: Sentence
    tgt_phrase: Sentence

    def __post_init__(self):
        if not isinstance(self.src_phrase, Sentence):
            object.__setattr__(self, 'src_phrase', Sentence(tuple(self.src_phrase)))
        if not isinstance(self.tgt_phrase, Sentence):
            object.__setattr__(self, 'tgt_phrase', Sentence(tuple(self.tgt_phrase)))
        errors = []
        if len(self.src_phrase) == 0:
            errors.append("src_phrase 不能为空")
        if len(self.tgt_phrase) == 0:
            errors.append("tgt_phrase 不能为空")
        if errors:
            raise DataValidationError(f"约束验证失败: {', '.join(errors)}", data_type="Constraint")

    @classmethod
    def of(cls, src: Union[str, Sequence[str]], tgt: Union[str, Sequence[str]]) -> 'Constraint':
        """便捷构造：字符串按空白切分"""
        src_tokens = tokenize(src) if isinstance(src, str) else list(src)
        tgt_tokens = tokenize(tgt) if isinstance(tgt, str) else list(tgt)
        return cls(Sentence(tuple(src_tokens)), Sentence(tuple(tgt_tokens)))

    def to_dict(self):
        return {"src": list(self.src_phrase.tokens), "tgt": list(self.tgt_phrase.tokens)}


@dataclass(frozen=True)
class ConstraintSet:
    """有序约束集合；ordered() 按源端首次出现位置排序"""
    constraints: Tuple[Constraint, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, 'constraints', tuple(self.constraints))

    @classmethod
    def ordered(cls, constraints: Iterable[Constraint], src: Sentence) -> 'ConstraintSet':
        """按源端短语在 src 中的最左出现位置稳定排序；未出现的排在最后"""
        items = list(constraints)
        big = len(src) + 1

        def key(pair):
            index, constraint = pair
            position = src.find(constraint.src_phrase)
            return (big if position is None else position, index)

        return cls(tuple(c for _, c in sorted(enumerate(items), key=key)))

    def __len__(self) -> int:
        return len(self.constraints)

    def __iter__(self) -> Iterator[Constraint]:
        return iter(self.constraints)

    def __getitem__(self, index: int) -> Constraint:
        return self.constraints[index]

    def __bool__(self) -> bool:
        return bool(self.constraints)


@dataclass(frozen=True)
class Triplet:
    """APE样本：源句、MT输出、人工后编辑及约束

    构造时约束按源端位置重排（见 ConstraintSet.ordered），已有序的集合保持不变。
    """
    id: int
    src: Sentence
    mt: Sentence
    pe: Sentence
    constraints: ConstraintSet = field(default_factory=ConstraintSet)

    def __post_init__(self):
        if not isinstance(self.id, (int, np.integer)) or self.id < 0:
            raise DataValidationError(f"Triplet id 必须是非负整数: {self.id}", data_type="Triplet")
        object.__setattr__(self, 'id', int(self.id))
        object.__setattr__(self, 'constraints', ConstraintSet.ordered(self.constraints, self.src))

    def with_id(self, new_id: int) -> 'Triplet':
        return replace(self, id=new_id)

    def with_mt(self, mt: Sentence) -> 'Triplet':
        return replace(self, mt=mt)

    def with_constraints(self, constraints: ConstraintSet) -> 'Triplet':
        return replace(self, constraints=constraints)


@dataclass(frozen=True)
class Corpus:
    """三元组语料，id 在语料内唯一"""
    triplets: Tuple[Triplet, ...] = ()
    name: str = "corpus"

    def __post_init__(self):
        triplets = tuple(self.triplets)
        object.__setattr__(self, 'triplets', triplets)
        ids = [t.id for t in triplets]
        if len(set(ids)) != len(ids):
            raise DataValidationError(f"语料 {self.name} 中存在重复 id", data_type="Corpus")

    @classmethod
    def from_columns(cls, srcs: Sequence[Sentence], mts: Sequence[Sentence], pes: Sequence[Sentence],
                     constraint_sets: Optional[Sequence[ConstraintSet]] = None, name: str = "corpus") -> 'Corpus':
        """按列构造，id 依次为 0..n-1"""
        if not (len(srcs) == len(mts) == len(pes)):
            raise InvalidArgumentError("src/mt/pe 列长度不一致", argument="columns")
        if constraint_sets is None:
            constraint_sets = [ConstraintSet()] * len(srcs)
        elif len(constraint_sets) != len(srcs):
            raise InvalidArgumentError("约束列长度与语料不一致", argument="constraint_sets")
        return cls(tuple(Triplet(i, s, m, p, c)
                         for i, (s, m, p, c) in enumerate(zip(srcs, mts, pes, constraint_sets))), name)

    def __len__(self) -> int:
        return len(self.triplets)

    def __iter__(self) -> Iterator[Triplet]:
        return iter(self.triplets)

    def __getitem__(self, index: int) -> Triplet:
        return self.triplets[index]

    @property
    def srcs(self) -> List[Sentence]:
        return [t.src for t in self.triplets]

    @property
    def mts(self) -> List[Sentence]:
        return [t.mt for t in self.triplets]

    @property
    def pes(self) -> List[Sentence]:
        return [t.pe for t in self.triplets]

    @property
    def constraint_sets(self) -> List[ConstraintSet]:
        return [t.constraints for t in self.triplets]

    def renamed(self, name: str) -> 'Corpus':
        return Corpus(self.triplets, name)

    def reindexed(self) -> 'Corpus':
        return Corpus(tuple(t.with_id(i) for i, t in enumerate(self.triplets)), self.name)

    def with_mt_column(self, mts: Sequence[Sentence]) -> 'Corpus':
        """替换 mt 列（级联实验用）"""
        if len(mts) != len(self.triplets):
            raise InvalidArgumentError(f"MT 输出条数 {len(mts)} 与语料 {len(self.triplets)} 不一致",
                                       argument="mts")
        return Corpus(tuple(t.with_mt(m) for t, m in zip(self.triplets, mts)), self.name)

    def without_constraints(self) -> 'Corpus':
        return Corpus(tuple(t.with_constraints(ConstraintSet()) for t in self.triplets), self.name)


# ============================================================================
# 语料操作
# ============================================================================

def upsample(corpus: Corpus, factor: int) -> Corpus:
    """按顺序拼接 factor 份副本，id 重新编号"""
    if not isinstance(factor, int) or factor < 1:
        raise InvalidArgumentError(f"上采样倍数必须 ≥ 1: {factor}", argument="factor", value=factor)
    triplets = [t for _ in range(factor) for t in corpus.triplets]
    return Corpus(tuple(t.with_id(i) for i, t in enumerate(triplets)), f"{corpus.name}x{factor}")


def join(a: Corpus, b: Corpus, name: Optional[str] = None) -> Corpus:
    """拼接 a、b，id 重新编号"""
    triplets = list(a.triplets) + list(b.triplets)
    return Corpus(tuple(t.with_id(i) for i, t in enumerate(triplets)), name or f"{a.name}+{b.name}")


def holdout_split(corpus: Corpus, n_valid: int, seed: int) -> Tuple[Corpus, Corpus]:
    """
    随机留出 n_valid 条作为验证集

    两部分均保持原始 id 与原始相对顺序，同种子结果一致。
    """
    if n_valid < 0 or n_valid > len(corpus):
        raise InvalidArgumentError(f"n_valid 必须在 0..{len(corpus)} 之间: {n_valid}",
                                   argument="n_valid", value=n_valid)
    rng = np.random.default_rng(seed)
    chosen = set(rng.choice(len(corpus), size=n_valid, replace=False).tolist()) if n_valid else set()
    train = tuple(t for i, t in enumerate(corpus.triplets) if i not in chosen)
    valid = tuple(t for i, t in enumerate(corpus.triplets) if i in chosen)
    return Corpus(train, f"{corpus.name}.train"), Corpus(valid, f"{corpus.name}.valid")


def take(corpus: Corpus, n: int, seed: int) -> Corpus:
    """随机抽取 n 条子集（第二阶段拼接预训练子集用），保持原顺序"""
    n = min(max(n, 0), len(corpus))
    _, subset = holdout_split(corpus, n, seed)
    return Corpus(subset.triplets, f"{corpus.name}.subset{n}")


def corpus_statistics(corpus: Corpus) -> pd.DataFrame:
    """语料统计（单行 DataFrame）"""
    n_constraints = sum(len(t.constraints) for t in corpus)
    constrained = sum(1 for t in corpus if t.constraints)
    return pd.DataFrame([{
        'corpus': corpus.name,
        'sentences': len(corpus),
        'src_tokens': sum(len(t.src) for t in corpus),
        'mt_tokens': sum(len(t.mt) for t in corpus),
        'pe_tokens': sum(len(t.pe) for t in corpus),
        'constraints': n_constraints,
        'constrained_triplets': constrained,
        'avg_constraints': round(n_constraints / constrained, 4) if constrained else 0.0,
    }])


__all__ = [
    'validate_token', 'tokenize',
    'Sentence', 'Constraint', 'ConstraintSet', 'Triplet', 'Corpus',
    'upsample', 'join', 'holdout_split', 'take', 'corpus_statistics'
]
