# ape_system/domain/services/synthgen.py
"""
合成语料生成服务
生成带可控词汇歧义的 (src, mt, pe, constraints) 语料：

    - 词典：源端伪词 ("s" 前缀) → 1~3 个目标端变体 ("t" 前缀)
    - pe：每句一个隐藏风格 u ∈ [0,1)，歧义词取第 floor(u·k) 个变体
    - mt：pe 按 NoiseConfig 加噪（替换 / 删除 / 插入）
    - 约束：歧义源词的首次出现以 constraint_rate 概率附加 (源词, pe 变体)

每条三元组使用由 (seed, id) 派生的独立随机数生成器，同种子输出逐字节一致。
伪词以 a/i/o/u 结尾，默认后缀词干器对其不做剥离。
"""

from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Set, Tuple

import numpy as np

from ape_system.core.exceptions import InvalidArgumentError
from ape_system.core.model_config import NoiseConfig
from ape_system.domain.entities.corpus import Sentence, Constraint, ConstraintSet, Triplet, Corpus
from ape_system.domain.services.augmentation import RelationLexicon
from ape_system.domain.services.encoding import find_spans
from ape_system.utils.logger import get_logger
from ape_system.utils.monitoring import performance_monitor

logger = get_logger(__name__)

_CONSONANTS = "bdfgklmnprtvz"
_VOWELS = "aiou"
_SYLLABLES = tuple(c + v for c in _CONSONANTS for v in _VOWELS)
_MAX_SYLLABLES = 4


class _WordFactory:
    """生成全局唯一的伪词"""

    def __init__(self, rng: np.random.Generator, taken: Optional[Set[str]] = None):
        self.rng = rng
        self.taken: Set[str] = set(taken or ())

    def new_word(self, prefix: str) -> str:
        while True:
            n_syllables = int(self.rng.integers(2, _MAX_SYLLABLES + 1))
            picks = self.rng.integers(len(_SYLLABLES), size=n_syllables)
            word = prefix + "".join(_SYLLABLES[i] for i in picks)
            if word not in self.taken:
                self.taken.add(word)
                return word


@dataclass(frozen=True)
class Lexicon:
    """源端伪词 → 有序目标变体列表"""
    entries: Dict[str, Tuple[str, ...]]
    seed: int

    @property
    def source_words(self) -> List[str]:
        return list(self.entries)

    def variants(self, word: str) -> Tuple[str, ...]:
        return self.entries[word]

    def is_ambiguous(self, word: str) -> bool:
        return len(self.entries.get(word, ())) >= 2

    @property
    def n_ambiguous(self) -> int:
        return sum(1 for v in self.entries.values() if len(v) >= 2)

    @property
    def target_vocabulary(self) -> List[str]:
        return sorted({t for variants in self.entries.values() for t in variants})

    def to_dict(self) -> Dict[str, List[str]]:
        return {src: list(variants) for src, variants in self.entries.items()}


def gen_lexicon(vocab_size: int, ambiguous_fraction: float, seed: int) -> Lexicon:
    """生成 vocab_size 个源词，其中 round(ambiguous_fraction·vocab_size) 个有 2~3 个变体"""
    if vocab_size < 1:
        raise InvalidArgumentError(f"vocab_size 必须 ≥ 1: {vocab_size}", argument="vocab_size", value=vocab_size)
    if not 0.0 <= ambiguous_fraction <= 1.0:
        raise InvalidArgumentError(f"ambiguous_fraction 必须在 0-1 之间: {ambiguous_fraction}",
                                   argument="ambiguous_fraction", value=ambiguous_fraction)
    rng = np.random.default_rng(seed)
    factory = _WordFactory(rng)
    n_ambiguous = int(round(ambiguous_fraction * vocab_size))
    ambiguous = set(rng.choice(vocab_size, size=n_ambiguous, replace=False).tolist()) if n_ambiguous else set()

    entries: Dict[str, Tuple[str, ...]] = {}
    for i in range(vocab_size):
        source = factory.new_word("s")
        k = int(rng.integers(2, 4)) if i in ambiguous else 1
        entries[source] = tuple(factory.new_word("t") for _ in range(k))
    return Lexicon(entries, seed)


def _corrupt(tokens: Sequence[str], sources: Sequence[Optional[str]], lexicon: Lexicon,
             noise: NoiseConfig, rng: np.random.Generator, target_vocab: Sequence[str],
             protected: Sequence[bool]) -> List[str]:
    """逐 token 加噪；sources[j] 为该位置的源词（用于同源变体替换），protected 位置不加噪"""
    out: List[str] = []
    for j, token in enumerate(tokens):
        r = rng.random()
        if protected[j]:
            out.append(token)
            continue
        if r < noise.sub_rate:
            others = [v for v in lexicon.variants(sources[j]) if v != token] if sources[j] else []
            if others:
                out.append(others[int(rng.integers(len(others)))])
            else:
                out.append(target_vocab[int(rng.integers(len(target_vocab)))])
        elif r < noise.sub_rate + noise.del_rate:
            continue
        elif r < noise.sub_rate + noise.del_rate + noise.ins_rate:
            out.append(token)
            out.append(target_vocab[int(rng.integers(len(target_vocab)))])
        else:
            out.append(token)
    return out


@performance_monitor("gen_corpus")
def gen_corpus(lexicon: Lexicon, n_triplets: int, len_range: Tuple[int, int] = (3, 10),
               noise: Optional[NoiseConfig] = None, constraint_rate: float = 0.25, seed: int = 1,
               name: str = "synthetic") -> Corpus:
    """生成合成语料"""
    lo, hi = len_range
    if not 1 <= lo <= hi <= 100:
        raise InvalidArgumentError(f"长度区间必须在 [1, 100] 内: {len_range}", argument="len_range")
    if not 0.0 <= constraint_rate <= 1.0:
        raise InvalidArgumentError(f"constraint_rate 必须在 0-1 之间: {constraint_rate}",
                                   argument="constraint_rate", value=constraint_rate)
    noise = noise or NoiseConfig()
    source_words = lexicon.source_words
    target_vocab = lexicon.target_vocabulary

    triplets = []
    for i in range(n_triplets):
        rng = np.random.default_rng([seed, i])
        length = int(rng.integers(lo, hi + 1))
        src = [source_words[k] for k in rng.integers(len(source_words), size=length)]
        style = rng.random()
        pe = []
        for word in src:
            variants = lexicon.variants(word)
            pe.append(variants[int(np.floor(style * len(variants)))])
        mt = _corrupt(pe, src, lexicon, noise, rng, target_vocab, [False] * length)

        constraints = []
        seen = set()
        for j, word in enumerate(src):
            if word in seen or not lexicon.is_ambiguous(word):
                continue
            seen.add(word)
            if rng.random() < constraint_rate:
                constraints.append(Constraint(Sentence((word,)), Sentence((pe[j],))))
        triplets.append(Triplet(i, Sentence(tuple(src)), Sentence(tuple(mt)), Sentence(tuple(pe)),
                                ConstraintSet(tuple(constraints))))

    corpus = Corpus(tuple(triplets), name)
    logger.info(f"✅ 合成语料 {name}: {len(corpus)} 句",
                {"sentences": len(corpus), "constraints": sum(len(t.constraints) for t in corpus)})
    return corpus


def emulate_mt(lexicon: Lexicon, corpus: Corpus, noise: Optional[NoiseConfig], seed: int,
               constrained: bool) -> List[Sentence]:
    """
    模拟级联实验的上游 MT 输出

    constrained=True：约束位置输出约束目标词且不加噪；
    constrained=False：约束位置均匀随机选择该源词的一个变体。
    其它位置沿用 pe 的变体后加噪。要求 src 与 pe 逐词对齐（合成语料满足）。
    """
    noise = noise or NoiseConfig()
    target_vocab = lexicon.target_vocabulary
    outputs = []
    for triplet in corpus:
        if len(triplet.src) != len(triplet.pe):
            raise InvalidArgumentError(f"三元组 {triplet.id} 的 src/pe 未逐词对齐，无法模拟 MT",
                                       argument="corpus")
        rng = np.random.default_rng([seed, triplet.id, 1 if constrained else 0])
        base = list(triplet.pe.tokens)
        protected = [False] * len(base)
        for span, constraint in zip(find_spans(triplet.src, triplet.constraints), triplet.constraints):
            if span is None or span[1] - span[0] != 1 or len(constraint.tgt_phrase) != 1:
                continue
            j = span[0]
            if constrained:
                base[j] = constraint.tgt_phrase[0]
                protected[j] = True
            else:
                variants = lexicon.variants(triplet.src[j]) if triplet.src[j] in lexicon.entries else (base[j],)
                base[j] = variants[int(rng.integers(len(variants)))]
        sources = [w if w in lexicon.entries else None for w in triplet.src]
        outputs.append(Sentence(tuple(_corrupt(base, sources, lexicon, noise, rng, target_vocab, protected))))
    return outputs


def gen_relation_lexicons(lexicon: Lexicon, synonyms_per_word: int = 1, antonyms_per_word: int = 1,
                          seed: int = 1) -> Dict[str, RelationLexicon]:
    """为每个目标变体生成全新伪词作为同义词 / 反义词（训练语料中不会出现）"""
    rng = np.random.default_rng([seed, 7])
    factory = _WordFactory(rng, taken=set(lexicon.entries) | set(lexicon.target_vocabulary))
    synonyms: Dict[str, Tuple[str, ...]] = {}
    antonyms: Dict[str, Tuple[str, ...]] = {}
    for word in lexicon.target_vocabulary:
        synonyms[word] = tuple(factory.new_word("t") for _ in range(synonyms_per_word))
        antonyms[word] = tuple(factory.new_word("t") for _ in range(antonyms_per_word))
    return {"synonym": RelationLexicon("synonym", synonyms), "antonym": RelationLexicon("antonym", antonyms)}


def lexicon_dictionary_pairs(lexicon: Lexicon) -> List[Tuple[str, str]]:
    """词典 TSV 形式的 (源词, 变体) 对"""
    return [(src, tgt) for src, variants in lexicon.entries.items() for tgt in variants]


__all__ = [
    'Lexicon', 'NoiseConfig', 'gen_lexicon', 'gen_corpus', 'emulate_mt',
    'gen_relation_lexicons', 'lexicon_dictionary_pairs'
]
