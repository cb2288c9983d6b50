# ape_system/domain/services/encoding.py
"""
约束编码服务
把 (x, C) 变换为带源因子的编码器输入：
    append : 在源端短语之后插入目标端短语  (因子 1 / 2)
    replace: 用目标端短语替换源端短语      (因子 2)
MT 输出 γ 全部标注为因子 3。
"""

from typing import Iterable, List, Optional, Tuple

from ape_system.core.model_config import EncoderVariant
from ape_system.domain.entities.corpus import Sentence, ConstraintSet, Triplet
from ape_system.domain.entities.encoded_source import SourceFactor, EncodedSource, ModelInput
from ape_system.domain.services.subword import BPEModel, propagate_factors

Span = Tuple[int, int]


def find_spans(x: Sentence, constraints: ConstraintSet) -> List[Optional[Span]]:
    """
    每个约束源端短语在 x 中最左出现的 [start, end) 区间

    找不到或与之前已匹配的区间重叠时为 None。
    """
    taken = [False] * len(x)
    spans: List[Optional[Span]] = []
    for constraint in constraints:
        start = x.find(constraint.src_phrase)
        if start is None:
            spans.append(None)
            continue
        end = start + len(constraint.src_phrase)
        if any(taken[start:end]):
            spans.append(None)
            continue
        for i in range(start, end):
            taken[i] = True
        spans.append((start, end))
    return spans


def _matched_in_order(x: Sentence, constraints: ConstraintSet):
    spans = find_spans(x, constraints)
    matched = [(span, c) for span, c in zip(spans, constraints) if span is not None]
    return sorted(matched, key=lambda item: item[0][0])


def encode_append(x: Sentence, constraints: ConstraintSet) -> EncodedSource:
    tokens: List[str] = []
    factors: List[SourceFactor] = []
    cursor = 0
    for (start, end), constraint in _matched_in_order(x, constraints):
        tokens.extend(x.tokens[cursor:start])
        factors.extend([SourceFactor.SOURCE] * (start - cursor))
        tokens.extend(x.tokens[start:end])
        factors.extend([SourceFactor.SOURCE_TERM] * (end - start))
        tokens.extend(constraint.tgt_phrase.tokens)
        factors.extend([SourceFactor.TARGET_TERM] * len(constraint.tgt_phrase))
        cursor = end
    tokens.extend(x.tokens[cursor:])
    factors.extend([SourceFactor.SOURCE] * (len(x) - cursor))
    return EncodedSource(tuple(tokens), tuple(factors))


def encode_replace(x: Sentence, constraints: ConstraintSet) -> EncodedSource:
    tokens: List[str] = []
    factors: List[SourceFactor] = []
    cursor = 0
    for (start, end), constraint in _matched_in_order(x, constraints):
        tokens.extend(x.tokens[cursor:start])
        factors.extend([SourceFactor.SOURCE] * (start - cursor))
        tokens.extend(constraint.tgt_phrase.tokens)
        factors.extend([SourceFactor.TARGET_TERM] * len(constraint.tgt_phrase))
        cursor = end
    tokens.extend(x.tokens[cursor:])
    factors.extend([SourceFactor.SOURCE] * (len(x) - cursor))
    return EncodedSource(tuple(tokens), tuple(factors))


def encode_mt(mt: Sentence) -> EncodedSource:
    return EncodedSource(tuple(mt.tokens), (SourceFactor.MT,) * len(mt))


def encode_source(x: Sentence, constraints: ConstraintSet, variant: EncoderVariant) -> EncodedSource:
    """按变体编码源端；plain 忽略约束（全 0 因子）"""
    if variant == EncoderVariant.APPEND:
        return encode_append(x, constraints)
    if variant == EncoderVariant.REPLACE:
        return encode_replace(x, constraints)
    return EncodedSource.plain(x.tokens)


def segment_encoded(bpe: Optional[BPEModel], encoded: EncodedSource) -> EncodedSource:
    """BPE 切分并把因子传播到每个子词"""
    if bpe is None:
        return encoded
    subwords, alignment = bpe.apply(encoded.tokens)
    factors = propagate_factors(encoded.factor_values, alignment)
    return EncodedSource(tuple(subwords), tuple(factors))


def ordered_target_phrases(x: Sentence, constraints: ConstraintSet,
                           bpe: Optional[BPEModel] = None) -> Tuple[Tuple[str, ...], ...]:
    """约束目标短语按源端出现顺序排列（未出现的排在最后），并切分为子词"""
    phrases = []
    for constraint in ConstraintSet.ordered(constraints, x):
        tokens = constraint.tgt_phrase.tokens
        phrases.append(tuple(bpe.apply_tokens(tokens)) if bpe is not None else tuple(tokens))
    return tuple(phrases)


def prepare_input(triplet: Triplet, variant: EncoderVariant, bpe: Optional[BPEModel] = None,
                  use_constraints: bool = True, with_target: bool = True) -> ModelInput:
    """
    三元组 → 子词级模型输入

    use_constraints=False 时忽略约束：源端全 0 因子，约束短语为空。
    """
    constraints = triplet.constraints if use_constraints else ConstraintSet()
    effective = variant if use_constraints else EncoderVariant.PLAIN
    source = segment_encoded(bpe, encode_source(triplet.src, constraints, effective))
    mt = segment_encoded(bpe, encode_mt(triplet.mt))
    target: Tuple[str, ...] = ()
    if with_target:
        target = tuple(bpe.apply_tokens(triplet.pe.tokens)) if bpe is not None else triplet.pe.tokens
    return ModelInput(triplet.id, source, mt, target, ordered_target_phrases(triplet.src, constraints, bpe))


def prepare_inputs(triplets: Iterable[Triplet], variant: EncoderVariant, bpe: Optional[BPEModel] = None,
                   use_constraints: bool = True, with_target: bool = True) -> List[ModelInput]:
    return [prepare_input(t, variant, bpe, use_constraints, with_target) for t in triplets]


__all__ = [
    'find_spans', 'encode_append', 'encode_replace', 'encode_mt', 'encode_source',
    'segment_encoded', 'ordered_target_phrases', 'prepare_input', 'prepare_inputs'
]
