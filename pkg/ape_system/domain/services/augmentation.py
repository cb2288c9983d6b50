# ape_system/domain/services/augmentation.py
"""
同义 / 反义数据增强与约束鲁棒性探针集

增强：对 (三元组, 约束, 相关词) 的每个组合生成一条新样本，
      约束目标词与 pe 中该词的全部出现都替换为相关词，src / mt 不变。
探针：把测试集约束替换为同义词 / 反义词 / 随机词，考察模型是否系统性地照抄约束。

只处理单词目标短语，且该词必须出现在 pe 中。
"""

from dataclasses import dataclass
from enum import Enum
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np

from ape_system.core.exceptions import DataValidationError, ConfigValidationError, InvalidArgumentError
from ape_system.domain.entities.corpus import Sentence, Constraint, ConstraintSet, Triplet, Corpus
from ape_system.utils.logger import get_logger

logger = get_logger(__name__)

RELATIONS = ("synonym", "antonym")


@dataclass(frozen=True)
class RelationLexicon:
    """目标词 → 相关目标词列表（同义或反义）"""
    relation: str
    entries: Mapping[str, Tuple[str, ...]]

    def __post_init__(self):
        if self.relation not in RELATIONS:
            raise DataValidationError(f"未知关系类型: {self.relation}", data_type="RelationLexicon")
        entries = {}
        for word, related in self.entries.items():
            related = tuple(related)
            if not related:
                raise DataValidationError(f"{word} 的相关词列表为空", data_type="RelationLexicon")
            if self.relation == "synonym" and word in related:
                raise DataValidationError(f"同义词表中 {word} 不能映射到自身", data_type="RelationLexicon")
            entries[word] = related
        object.__setattr__(self, 'entries', entries)

    def related(self, word: str) -> Tuple[str, ...]:
        return self.entries.get(word, ())

    def __contains__(self, word: str) -> bool:
        return word in self.entries

    def __len__(self) -> int:
        return len(self.entries)


class ProbeKind(Enum):
    """探针类型"""
    ORIGINAL = "original"
    SYNONYM = "synonym"
    ANTONYM = "antonym"
    RANDOM = "random"

    @classmethod
    def from_string(cls, value: str) -> 'ProbeKind':
        try:
            return cls(str(value).strip().lower())
        except ValueError:
            raise ConfigValidationError(f"无效的探针类型: {value}",
                                        {"errors": [f"kind 必须是 original/synonym/antonym/random: {value}"]})


@dataclass(frozen=True)
class ProbeSet:
    """探针语料及被丢弃（无可替换约束）的三元组数"""
    corpus: Corpus
    kind: ProbeKind
    n_dropped: int


def _replaceable_word(constraint: Constraint, pe: Sentence) -> Optional[str]:
    if len(constraint.tgt_phrase) != 1:
        return None
    word = constraint.tgt_phrase[0]
    return word if word in pe.tokens else None


def _rewrite(triplet: Triplet, mapping: Dict[str, str], new_id: Optional[int] = None) -> Triplet:
    """按 mapping 改写单词约束目标与 pe；其它约束保持不变"""
    constraints = []
    for c in triplet.constraints:
        if len(c.tgt_phrase) == 1 and c.tgt_phrase[0] in mapping:
            constraints.append(Constraint(c.src_phrase, Sentence((mapping[c.tgt_phrase[0]],))))
        else:
            constraints.append(c)
    pe = Sentence(tuple(mapping.get(tok, tok) for tok in triplet.pe))
    return Triplet(triplet.id if new_id is None else new_id, triplet.src, triplet.mt, pe,
                   ConstraintSet(tuple(constraints)))


def _as_list(lexicons: Union[Mapping[str, RelationLexicon], Sequence[RelationLexicon], None]) -> List[RelationLexicon]:
    if lexicons is None:
        return []
    if isinstance(lexicons, Mapping):
        return [lexicons[key] for key in RELATIONS if key in lexicons]
    return list(lexicons)


def count_combinations(corpus: Corpus, lexicons) -> int:
    """增强样本的解析计数：Σ 可替换约束 × 相关词数"""
    total = 0
    for lexicon in _as_list(lexicons):
        for triplet in corpus:
            for c in triplet.constraints:
                word = _replaceable_word(c, triplet.pe)
                if word is not None:
                    total += len(lexicon.related(word))
    return total


def augment_corpus(corpus: Corpus, lexicons, seed: int,
                   max_per_constraint: Optional[int] = None, name: Optional[str] = None) -> Corpus:
    """
    生成额外的增强语料（不含原语料）

    Args:
        corpus: 带约束的语料
        lexicons: RelationLexicon 列表或 {relation: lexicon}
        seed: 仅在 max_per_constraint 限制时用于抽样相关词
        max_per_constraint: 每条约束每种关系最多使用的相关词数，None 表示全部
    """
    if max_per_constraint is not None and max_per_constraint < 1:
        raise InvalidArgumentError(f"max_per_constraint 必须 ≥ 1: {max_per_constraint}",
                                   argument="max_per_constraint", value=max_per_constraint)
    rng = np.random.default_rng(seed)
    lexicon_list = _as_list(lexicons)
    out: List[Triplet] = []
    for triplet in corpus:
        for c in triplet.constraints:
            word = _replaceable_word(c, triplet.pe)
            if word is None:
                continue
            for lexicon in lexicon_list:
                related = list(lexicon.related(word))
                if max_per_constraint is not None and len(related) > max_per_constraint:
                    picked = sorted(rng.choice(len(related), size=max_per_constraint, replace=False).tolist())
                    related = [related[k] for k in picked]
                for replacement in related:
                    out.append(_rewrite(triplet, {word: replacement}, new_id=len(out)))

    logger.info(f"📊 数据增强: {len(corpus)} 句 → 新增 {len(out)} 条样本",
                {"source_sentences": len(corpus), "augmented": len(out)})
    return Corpus(tuple(out), name or f"{corpus.name}.aug")


def build_probe_set(testset: Corpus, kind: Union[ProbeKind, str], lexicons, seed: int,
                    target_vocabulary: Optional[Iterable[str]] = None) -> ProbeSet:
    """
    构建约束探针集，三元组保留原 id 以便与原约束输出对齐

    SYNONYM / ANTONYM / RANDOM 下没有可替换约束的三元组被丢弃并计数；
    RANDOM 从 target_vocabulary（默认为 pe 中全部词）中均匀抽取，排除原词及其同义词。
    """
    if isinstance(kind, str):
        kind = ProbeKind.from_string(kind)
    if kind == ProbeKind.ORIGINAL:
        return ProbeSet(testset, kind, 0)

    by_relation = {lex.relation: lex for lex in _as_list(lexicons)}
    rng = np.random.default_rng(seed)
    if kind == ProbeKind.RANDOM:
        vocabulary = sorted(set(target_vocabulary) if target_vocabulary is not None
                            else {tok for t in testset for tok in t.pe})
        synonyms = by_relation.get("synonym")
    else:
        lexicon = by_relation.get(kind.value)
        if lexicon is None:
            raise InvalidArgumentError(f"探针类型 {kind.value} 需要对应的关系词表", argument="lexicons")

    kept: List[Triplet] = []
    n_dropped = 0
    for triplet in testset:
        mapping: Dict[str, str] = {}
        for c in triplet.constraints:
            word = _replaceable_word(c, triplet.pe)
            if word is None or word in mapping:
                continue
            if kind == ProbeKind.RANDOM:
                excluded = {word} | set(synonyms.related(word) if synonyms is not None else ())
                pool = [w for w in vocabulary if w not in excluded]
            else:
                pool = list(lexicon.related(word))
            if pool:
                mapping[word] = pool[int(rng.integers(len(pool)))]
        if not mapping:
            n_dropped += 1
            continue
        kept.append(_rewrite(triplet, mapping))

    logger.info(f"📊 探针集 {kind.value}: 保留 {len(kept)} 句, 丢弃 {n_dropped} 句",
                {"kind": kind.value, "kept": len(kept), "dropped": n_dropped})
    return ProbeSet(Corpus(tuple(kept), f"{testset.name}.{kind.value}"), kind, n_dropped)


__all__ = [
    'RELATIONS', 'RelationLexicon', 'ProbeKind', 'ProbeSet',
    'count_combinations', 'augment_corpus', 'build_probe_set'
]
