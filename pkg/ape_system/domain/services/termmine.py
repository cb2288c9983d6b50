# ape_system/domain/services/termmine.py
"""
术语挖掘服务
用双语词典为每个三元组挖掘术语约束：
    1. 源端短语（词干级）出现在 src 的连续片段中
    2. 目标端短语（词干级）出现在 pe 的连续片段中
    3. 输出 src / pe 中的原始（未取词干）片段
两侧任一全部由停用词构成的词条跳过；源端片段重叠时取最左最长。
"""

from dataclasses import dataclass
from typing import Dict, FrozenSet, Iterable, List, Optional, Protocol, Sequence, Tuple

import numpy as np

from ape_system.core.exceptions import InvalidArgumentError, DataValidationError, ConfigValidationError
from ape_system.domain.entities.corpus import Sentence, Constraint, ConstraintSet, Triplet
from ape_system.utils.logger import get_logger

logger = get_logger(__name__)

# 内置停用词表（小写）
ENGLISH_STOPWORDS = frozenset("""
a an the and or but if then else of at by for with about against between into through during
before after above below to from up down in out on off over under again further once here there
when where why how all any both each few more most other some such no nor not only own same so
than too very can will just should now is are was were be been being have has had having do does
did doing i me my we our you your he him his she her it its they them their what which who whom
this that these those am as until while
""".split())

GERMAN_STOPWORDS = frozenset("""
der die das den dem des ein eine einen einem einer eines und oder aber wenn dann als wie auch
nicht kein keine mit von zu zum zur im in ins an am auf aus bei nach vor über unter durch für
gegen ohne um bis ist sind war waren sein wird werden wurde wurden hat haben hatte ich du er sie
es wir ihr mich mir dich dir sich uns euch man dass ob so nur noch schon sehr hier dort da
""".split())


class Stemmer(Protocol):
    """词干器接口：确定性且幂等"""

    def stem(self, word: str) -> str:
        ...


class SuffixStemmer:
    """
    简单后缀剥离：按最长优先剥离 {s, es, ed, ing, en, er, e, n}，词干至少保留 3 个字符。
    反复剥离直到不再变化，保证 stem(stem(w)) == stem(w)。
    """

    SUFFIXES = tuple(sorted(("s", "es", "ed", "ing", "en", "er", "e", "n"), key=lambda s: (-len(s), s)))

    def __init__(self, min_stem: int = 3):
        self.min_stem = min_stem
        self._cache: Dict[str, str] = {}

    def _strip_once(self, word: str) -> str:
        for suffix in self.SUFFIXES:
            if word.endswith(suffix) and len(word) - len(suffix) >= self.min_stem:
                return word[:-len(suffix)]
        return word

    def stem(self, word: str) -> str:
        cached = self._cache.get(word)
        if cached is not None:
            return cached
        current = word.lower()
        while True:
            stripped = self._strip_once(current)
            if stripped == current:
                break
            current = stripped
        self._cache[word] = current
        return current


class IdentityStemmer:
    """不取词干，仅小写化"""

    def stem(self, word: str) -> str:
        return word.lower()


class SnowballStemmer:
    """nltk Snowball 词干器适配（可选依赖，延迟导入）"""

    def __init__(self, language: str = "english"):
        try:
            from nltk.stem.snowball import SnowballStemmer as _NltkSnowball
        except ImportError as e:
            raise ConfigValidationError("使用 snowball 词干器需要安装 nltk",
                                        {"errors": ["termmine.stemmer: snowball 需要 nltk"]}) from e
        try:
            self._stemmer = _NltkSnowball(language)
        except ValueError as e:
            raise ConfigValidationError(f"nltk 不支持的语言: {language}",
                                        {"errors": [f"termmine.snowball_language: {language}"]}) from e
        self._cache: Dict[str, str] = {}

    def stem(self, word: str) -> str:
        cached = self._cache.get(word)
        if cached is not None:
            return cached
        current = word.lower()
        for _ in range(8):
            stemmed = self._stemmer.stem(current)
            if stemmed == current:
                break
            current = stemmed
        self._cache[word] = current
        return current


def make_stemmer(name: str, language: str = "english") -> Stemmer:
    """按名称构建词干器：suffix / snowball / none"""
    if name == "suffix":
        return SuffixStemmer()
    if name == "snowball":
        return SnowballStemmer(language)
    if name == "none":
        return IdentityStemmer()
    raise ConfigValidationError(f"未知词干器: {name}", {"errors": [f"termmine.stemmer: {name}"]})


@dataclass(frozen=True)
class StopList:
    """源端 / 目标端停用词（小写）"""
    source_stops: FrozenSet[str] = ENGLISH_STOPWORDS
    target_stops: FrozenSet[str] = GERMAN_STOPWORDS

    def __post_init__(self):
        source = frozenset(w.lower() for w in self.source_stops)
        target = frozenset(w.lower() for w in self.target_stops)
        object.__setattr__(self, 'source_stops', source)
        object.__setattr__(self, 'target_stops', target)

    @classmethod
    def empty(cls) -> 'StopList':
        return cls(frozenset(), frozenset())

    def source_all_stop(self, phrase: Sentence) -> bool:
        return all(tok.lower() in self.source_stops for tok in phrase)

    def target_all_stop(self, phrase: Sentence) -> bool:
        return all(tok.lower() in self.target_stops for tok in phrase)


@dataclass(frozen=True)
class TermDictionary:
    """双语术语词典，词条无重复"""
    entries: Tuple[Tuple[Sentence, Sentence], ...] = ()

    def __post_init__(self):
        entries = tuple((Sentence(tuple(s)), Sentence(tuple(t))) for s, t in self.entries)
        for s, t in entries:
            if len(s) == 0 or len(t) == 0:
                raise DataValidationError("词典短语不能为空", data_type="TermDictionary")
        if len(set(entries)) != len(entries):
            raise DataValidationError("词典中存在重复词条", data_type="TermDictionary")
        object.__setattr__(self, 'entries', entries)

    @classmethod
    def from_pairs(cls, pairs: Iterable[Tuple[Sequence[str], Sequence[str]]]) -> 'TermDictionary':
        """去重（保序）后构造；字符串按空白切分"""
        seen = set()
        entries = []
        for src, tgt in pairs:
            s = Sentence.from_text(src) if isinstance(src, str) else Sentence(tuple(src))
            t = Sentence.from_text(tgt) if isinstance(tgt, str) else Sentence(tuple(tgt))
            if (s, t) not in seen:
                seen.add((s, t))
                entries.append((s, t))
        return cls(tuple(entries))

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)


@dataclass(frozen=True)
class _IndexedEntry:
    order: int
    src_stems: Tuple[str, ...]
    tgt_stems: Tuple[str, ...]


class TermMiner:
    """
    预先对词典取词干并按源端首词词干建索引，逐三元组挖掘约束
    """

    def __init__(self, dictionary: TermDictionary, stoplist: Optional[StopList] = None,
                 stemmer: Optional[Stemmer] = None, target_stemmer: Optional[Stemmer] = None):
        self.stoplist = stoplist if stoplist is not None else StopList()
        self.source_stemmer = stemmer if stemmer is not None else SuffixStemmer()
        self.target_stemmer = target_stemmer if target_stemmer is not None else self.source_stemmer
        self._index: Dict[str, List[_IndexedEntry]] = {}
        self.n_skipped_stop = 0

        for order, (src, tgt) in enumerate(dictionary.entries):
            if self.stoplist.source_all_stop(src) or self.stoplist.target_all_stop(tgt):
                self.n_skipped_stop += 1
                continue
            entry = _IndexedEntry(order,
                                  tuple(self.source_stemmer.stem(w) for w in src),
                                  tuple(self.target_stemmer.stem(w) for w in tgt))
            self._index.setdefault(entry.src_stems[0], []).append(entry)

    def mine(self, triplet: Triplet) -> ConstraintSet:
        src, pe = triplet.src, triplet.pe
        src_stems = [self.source_stemmer.stem(w) for w in src]
        pe_stems = [self.target_stemmer.stem(w) for w in pe]

        candidates = []
        matched_entries = set()
        for i, first in enumerate(src_stems):
            for entry in self._index.get(first, ()):
                if entry.order in matched_entries:
                    continue
                j = len(entry.src_stems)
                if tuple(src_stems[i:i + j]) != entry.src_stems:
                    continue
                tgt_start = _find(pe_stems, entry.tgt_stems)
                if tgt_start is None:
                    continue
                matched_entries.add(entry.order)
                candidates.append((i, -j, entry.order, tgt_start, len(entry.tgt_stems)))

        # 最左最长，后出现的重叠片段丢弃
        candidates.sort()
        taken = [False] * len(src)
        constraints = []
        for start, neg_len, _, tgt_start, tgt_len in candidates:
            end = start - neg_len
            if any(taken[start:end]):
                continue
            for k in range(start, end):
                taken[k] = True
            constraints.append(Constraint(src[start:end], pe[tgt_start:tgt_start + tgt_len]))
        return ConstraintSet(tuple(constraints))

    def mine_corpus(self, triplets: Iterable[Triplet]) -> List[ConstraintSet]:
        sets = [self.mine(t) for t in triplets]
        total = sum(len(s) for s in sets)
        logger.info(f"📊 术语挖掘完成: {len(sets)} 句, {total} 条约束",
                    {"sentences": len(sets), "constraints": total, "skipped_stop_entries": self.n_skipped_stop})
        return sets


def _find(haystack: Sequence[str], needle: Sequence[str]) -> Optional[int]:
    n = len(needle)
    for i in range(len(haystack) - n + 1):
        if tuple(haystack[i:i + n]) == tuple(needle):
            return i
    return None


def mine_constraints(dictionary: TermDictionary, triplet: Triplet, stoplist: Optional[StopList] = None,
                     stemmer: Optional[Stemmer] = None, target_stemmer: Optional[Stemmer] = None) -> ConstraintSet:
    return TermMiner(dictionary, stoplist, stemmer, target_stemmer).mine(triplet)


def subsample_constraints(constraint_sets: Sequence[ConstraintSet], keep_rate: float,
                          seed: int) -> List[ConstraintSet]:
    """每条约束独立以 keep_rate 概率保留，保持顺序"""
    if not 0.0 <= keep_rate <= 1.0:
        raise InvalidArgumentError(f"keep_rate 必须在 0-1 之间: {keep_rate}", argument="keep_rate", value=keep_rate)
    rng = np.random.default_rng(seed)
    out = []
    for cs in constraint_sets:
        draws = rng.random(len(cs))
        out.append(ConstraintSet(tuple(c for c, u in zip(cs, draws) if u < keep_rate)))
    return out


def split_dictionary(dictionary: TermDictionary, test_fraction: float,
                     seed: int) -> Tuple[TermDictionary, TermDictionary]:
    """把词条划分为互不相交的训练 / 测试词典"""
    if not 0.0 < test_fraction < 1.0:
        raise InvalidArgumentError(f"test_fraction 必须在 (0,1) 之间: {test_fraction}",
                                   argument="test_fraction", value=test_fraction)
    entries = sorted(dictionary.entries, key=lambda e: (e[0].tokens, e[1].tokens))
    n_test = int(round(test_fraction * len(entries)))
    perm = np.random.default_rng(seed).permutation(len(entries))
    test_idx = set(perm[:n_test].tolist())
    train = tuple(e for i, e in enumerate(entries) if i not in test_idx)
    test = tuple(e for i, e in enumerate(entries) if i in test_idx)
    return TermDictionary(train), TermDictionary(test)


__all__ = [
    'ENGLISH_STOPWORDS', 'GERMAN_STOPWORDS',
    'Stemmer', 'SuffixStemmer', 'IdentityStemmer', 'SnowballStemmer', 'make_stemmer',
    'StopList', 'TermDictionary', 'TermMiner',
    'mine_constraints', 'subsample_constraints', 'split_dictionary'
]
