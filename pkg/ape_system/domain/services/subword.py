# ape_system/domain/services/subword.py
"""
子词服务模块
BPE 合并学习与应用（非末尾子词带 "@@" 续接标记）、
源因子向子词的传播，以及基于最高频大小写形式的 truecasing。

词末子词若以 "@@" 加若干 "~" 结尾，应用时再追加一个 "~"，还原时去掉；
因此本身以 "@@" 结尾的词也能原样还原。
"""

import re
from collections import Counter, defaultdict
from typing import Dict, Iterable, List, Sequence, Tuple, Set

from ape_system.core.exceptions import InvalidArgumentError, DataValidationError, SubwordAlignmentError
from ape_system.utils.logger import get_logger
from ape_system.utils.monitoring import performance_monitor

CONTINUATION = "@@"
ESCAPE = "~"

# 需要转义的词末子词：以续接标记结尾，后面可跟已有的转义符
_NEEDS_ESCAPE = re.compile(re.escape(CONTINUATION) + re.escape(ESCAPE) + "*$")
_ESCAPED = re.compile(re.escape(CONTINUATION) + re.escape(ESCAPE) + "+$")

Pair = Tuple[str, str]

logger = get_logger(__name__)


class BPEModel:
    """
    BPE 模型：有序合并列表

    应用时按合并序号（rank）贪心合并，结果按词缓存。
    """

    def __init__(self, merges: Sequence[Pair]):
        merges = [tuple(pair) for pair in merges]
        for pair in merges:
            if len(pair) != 2 or not pair[0] or not pair[1]:
                raise DataValidationError(f"非法合并项: {pair}", data_type="BPEModel")
        if len(set(merges)) != len(merges):
            raise DataValidationError("合并列表中存在重复项", data_type="BPEModel")
        self.merges: Tuple[Pair, ...] = tuple(merges)
        self._ranks: Dict[Pair, int] = {pair: i for i, pair in enumerate(self.merges)}
        self._cache: Dict[str, Tuple[str, ...]] = {}

    def __len__(self) -> int:
        return len(self.merges)

    def __eq__(self, other) -> bool:
        return isinstance(other, BPEModel) and self.merges == other.merges

    # ------------------------------------------------------------------
    # 训练
    # ------------------------------------------------------------------
    @classmethod
    @performance_monitor("bpe_train")
    def train(cls, corpora: Iterable[Iterable[str]], num_merges: int) -> 'BPEModel':
        """
        在源端+目标端联合词流上学习合并

        Args:
            corpora: 句子序列（每句为 token 序列），调用方负责拼接各语料各列
            num_merges: 合并次数上限；无可合并的相邻对时提前结束

        同频的相邻对按字典序取最小者。
        """
        if num_merges < 0:
            raise InvalidArgumentError(f"num_merges 不能为负数: {num_merges}", argument="num_merges")
        word_freq = Counter()
        for sentence in corpora:
            word_freq.update(sentence)
        if not word_freq:
            raise InvalidArgumentError("BPE 训练语料为空", argument="corpora")

        words: List[List[str]] = []
        freqs: List[int] = []
        for word, freq in sorted(word_freq.items()):
            words.append(list(word))
            freqs.append(freq)

        stats: Counter = Counter()
        index: Dict[Pair, Set[int]] = defaultdict(set)
        for w, symbols in enumerate(words):
            for pair in zip(symbols, symbols[1:]):
                stats[pair] += freqs[w]
                index[pair].add(w)

        merges: List[Pair] = []
        while len(merges) < num_merges and stats:
            best, best_freq = min(stats.items(), key=lambda kv: (-kv[1], kv[0]))
            if best_freq <= 0:
                break
            merges.append(best)
            merged = best[0] + best[1]
            for w in sorted(index.pop(best, ())):
                symbols = words[w]
                for pair in zip(symbols, symbols[1:]):
                    stats[pair] -= freqs[w]
                    if stats[pair] <= 0:
                        del stats[pair]
                new_symbols = _merge_pair(symbols, best, merged)
                words[w] = new_symbols
                for pair in zip(new_symbols, new_symbols[1:]):
                    stats[pair] += freqs[w]
                    index[pair].add(w)
            stats.pop(best, None)

        logger.info(f"📊 BPE 学习完成: {len(merges)} 次合并, {len(word_freq)} 个词型",
                    {"num_merges": len(merges), "word_types": len(word_freq)})
        return cls(merges)

    # ------------------------------------------------------------------
    # 应用
    # ------------------------------------------------------------------
    def segment_word(self, word: str) -> Tuple[str, ...]:
        """单词切分（不带续接标记）"""
        cached = self._cache.get(word)
        if cached is not None:
            return cached
        symbols = list(word)
        while len(symbols) > 1:
            ranked = [(self._ranks.get(pair, len(self._ranks)), pair) for pair in zip(symbols, symbols[1:])]
            rank, pair = min(ranked)
            if rank == len(self._ranks):
                break
            symbols = _merge_pair(symbols, pair, pair[0] + pair[1])
        result = tuple(symbols)
        self._cache[word] = result
        return result

    def apply(self, sentence: Iterable[str]) -> Tuple[List[str], List[int]]:
        """
        句子切分

        Returns:
            (子词序列, 对齐)：对齐给出每个子词所属词的下标，单调且覆盖全部词
        """
        subwords: List[str] = []
        alignment: List[int] = []
        for i, word in enumerate(sentence):
            pieces = self.segment_word(word)
            for j, piece in enumerate(pieces):
                subwords.append(piece + CONTINUATION if j < len(pieces) - 1 else escape_final(piece))
                alignment.append(i)
        return subwords, alignment

    def apply_tokens(self, sentence: Iterable[str]) -> List[str]:
        return self.apply(sentence)[0]


def _merge_pair(symbols: Sequence[str], pair: Pair, merged: str) -> List[str]:
    out: List[str] = []
    i = 0
    while i < len(symbols):
        if i < len(symbols) - 1 and symbols[i] == pair[0] and symbols[i + 1] == pair[1]:
            out.append(merged)
            i += 2
        else:
            out.append(symbols[i])
            i += 1
    return out


def bpe_train(corpora: Iterable[Iterable[str]], num_merges: int) -> BPEModel:
    return BPEModel.train(corpora, num_merges)


def bpe_apply(model: BPEModel, sentence: Iterable[str]) -> Tuple[List[str], List[int]]:
    return model.apply(sentence)


def escape_final(piece: str) -> str:
    """词末子词转义，保证其不以续接标记结尾"""
    return piece + ESCAPE if _NEEDS_ESCAPE.search(piece) else piece


def unescape_final(piece: str) -> str:
    return piece[:-len(ESCAPE)] if _ESCAPED.search(piece) else piece


def bpe_restore(subwords: Iterable[str]) -> List[str]:
    """去掉续接标记、拼回整词"""
    words: List[str] = []
    buffer = ""
    for piece in subwords:
        if piece.endswith(CONTINUATION):
            buffer += piece[:-len(CONTINUATION)]
        else:
            words.append(buffer + unescape_final(piece))
            buffer = ""
    if buffer:
        words.append(buffer)
    return words


def propagate_factors(factors_per_word: Sequence[int], alignment: Sequence[int]) -> List[int]:
    """每个子词继承其所属词的源因子"""
    n_words = len(factors_per_word)
    out = []
    for index in alignment:
        if not 0 <= index < n_words:
            raise SubwordAlignmentError(f"对齐下标越界: {index} (词数 {n_words})", index=index, n_words=n_words)
        out.append(factors_per_word[index])
    return out


class TruecaseModel:
    """
    Truecasing：小写词 → 最高频大小写形式

    句首词只在该词从未出现在非句首位置时参与统计；同频取字典序最小。
    """

    def __init__(self, casing: Dict[str, str]):
        bad = [k for k in casing if k != k.lower()]
        if bad:
            raise DataValidationError(f"truecase 键必须为小写: {bad[:5]}", data_type="TruecaseModel")
        self.casing: Dict[str, str] = dict(casing)

    @classmethod
    def train(cls, sentences: Iterable[Sequence[str]]) -> 'TruecaseModel':
        inner: Dict[str, Counter] = defaultdict(Counter)
        initial: Dict[str, Counter] = defaultdict(Counter)
        for sentence in sentences:
            for i, token in enumerate(sentence):
                (initial if i == 0 else inner)[token.lower()][token] += 1
        casing = {}
        for key in set(inner) | set(initial):
            counts = inner.get(key) or initial[key]
            casing[key] = min(counts.items(), key=lambda kv: (-kv[1], kv[0]))[0]
        return cls(casing)

    def apply(self, sentence: Sequence[str]) -> List[str]:
        return [self.casing.get(token.lower(), token) for token in sentence]

    @staticmethod
    def detruecase(sentence: Sequence[str]) -> List[str]:
        """句首词首字母大写"""
        tokens = list(sentence)
        if tokens:
            tokens[0] = tokens[0][:1].upper() + tokens[0][1:]
        return tokens

    def __len__(self) -> int:
        return len(self.casing)


__all__ = [
    'CONTINUATION', 'ESCAPE', 'BPEModel', 'escape_final', 'unescape_final', 'bpe_train', 'bpe_apply', 'bpe_restore', 'propagate_factors', 'TruecaseModel'
]
