# ape_system/domain/services/refinement.py
"""
迭代精修服务
LevT 解码的初始化策略与 删除 → 插入 → 填充 循环，与具体模型无关：
任何实现了 EditPolicy 的对象都可以驱动 refine。
"""

from typing import Callable, List, Optional, Protocol, Sequence, Tuple

from ape_system.core.exceptions import InvalidArgumentError
from ape_system.core.model_config import InitStrategy
from ape_system.domain.entities.corpus import Sentence, ConstraintSet
from ape_system.domain.entities.edit_state import EditState, NO_PHRASE
from ape_system.domain.services.edit_oracle import apply_deletions, apply_insertions, apply_fills
from ape_system.domain.services.subword import CONTINUATION, escape_final


class EditPolicy(Protocol):
    """三个编辑头的预测接口"""

    def predict_deletions(self, state: EditState) -> Sequence[bool]:
        ...

    def predict_insertions(self, state: EditState) -> Sequence[int]:
        ...

    def predict_fills(self, state: EditState) -> Sequence[str]:
        ...


def state_from_phrases(phrases: Sequence[Sequence[str]]) -> EditState:
    """约束短语直接拼接（无分隔符），记录每个 token 的短语序号"""
    body: List[str] = []
    phrase_ids: List[int] = []
    for k, phrase in enumerate(phrases):
        body.extend(phrase)
        phrase_ids.extend([k] * len(phrase))
    return EditState.wrap(body, phrase_ids)


def init_state(strategy: InitStrategy, mt: Optional[Sequence[str]] = None,
               constraints: Optional[ConstraintSet] = None, src: Optional[Sentence] = None,
               segment: Optional[Callable[[Sequence[str]], List[str]]] = None) -> EditState:
    """
    构造解码初始状态

    BLANK       → [<s>, </s>]
    MT          → [<s>, γ…, </s>]
    CONSTRAINTS → [<s>, 按源端出现顺序拼接的目标短语…, </s>]
    """
    if isinstance(strategy, str):
        strategy = InitStrategy.from_string(strategy)
    if strategy == InitStrategy.BLANK:
        return EditState.wrap(())
    if strategy == InitStrategy.MT:
        if mt is None:
            raise InvalidArgumentError("MT 初始化需要提供 MT 输出", argument="mt")
        return EditState.wrap(tuple(mt))
    if constraints is None:
        raise InvalidArgumentError("约束初始化需要提供约束集合", argument="constraints")
    ordered = ConstraintSet.ordered(constraints, src) if src is not None else constraints
    phrases = []
    for constraint in ordered:
        tokens = constraint.tgt_phrase.tokens
        phrases.append(segment(tokens) if segment is not None else tokens)
    return state_from_phrases(phrases)


def _inside_phrase_slots(state: EditState) -> List[bool]:
    """间隙 k 位于 tokens[k] 与 tokens[k+1] 之间；两侧属于同一约束短语时为 True"""
    ids = state.phrase_ids
    return [ids[k] != NO_PHRASE and ids[k] == ids[k + 1] for k in range(state.n_slots)]


def clamp_insertions(counts: Sequence[int], state: EditState, max_insert_per_slot: int,
                     protect: bool, max_len: Optional[int]) -> List[int]:
    counts = [min(max(int(c), 0), max_insert_per_slot) for c in counts]
    if protect:
        counts = [0 if inside else c for c, inside in zip(counts, _inside_phrase_slots(state))]
    if max_len is not None:
        budget = max(max_len - len(state.tokens), 0)
        for k, c in enumerate(counts):
            counts[k] = min(c, budget)
            budget -= counts[k]
    return counts


def finalize_tokens(state: EditState) -> List[str]:
    """输出正文；约束短语起始处之前的续接标记被去掉，避免与短语粘连"""
    tokens = list(state.tokens)
    ids = state.phrase_ids
    for k in range(1, len(tokens) - 1):
        starts_phrase = ids[k] != NO_PHRASE and ids[k - 1] != ids[k]
        if starts_phrase and k - 1 >= 1 and tokens[k - 1].endswith(CONTINUATION):
            tokens[k - 1] = escape_final(tokens[k - 1][:-len(CONTINUATION)])
    return tokens[1:-1]


def _trace_line(sent_id: int, iteration: int, phase: str, state: EditState) -> str:
    return f"sent={sent_id} iter={iteration} phase={phase} tokens={' '.join(state.body)}"


def refine(policy: EditPolicy, init: EditState, max_iterations: int, max_insert_per_slot: int,
           protect_constraints: bool = False, max_len: Optional[int] = None,
           trace: Optional[List[str]] = None, sent_id: int = 0) -> Tuple[EditState, bool]:
    """
    迭代精修

    Returns:
        (最终状态, 是否在迭代上限前到达不动点)
    """
    if max_iterations < 1:
        raise InvalidArgumentError(f"max_iterations 必须 ≥ 1: {max_iterations}", argument="max_iterations")
    state = init
    for iteration in range(1, max_iterations + 1):
        deletions = list(policy.predict_deletions(state))
        if protect_constraints:
            deletions = [d and pid == NO_PHRASE for d, pid in zip(deletions, state.phrase_ids)]
        after_delete = apply_deletions(state, deletions)
        if trace is not None:
            trace.append(_trace_line(sent_id, iteration, "delete", after_delete))

        counts = clamp_insertions(policy.predict_insertions(after_delete), after_delete,
                                  max_insert_per_slot, protect_constraints, max_len)
        after_insert = apply_insertions(after_delete, counts)
        if trace is not None:
            trace.append(_trace_line(sent_id, iteration, "insert", after_insert))

        fills = list(policy.predict_fills(after_insert)) if sum(counts) else []
        filled = apply_fills(after_insert, fills)
        new_state = EditState(filled.tokens, state.iteration + 1, filled.phrase_ids)
        if trace is not None:
            trace.append(_trace_line(sent_id, iteration, "fill", new_state))

        if new_state.tokens == state.tokens:
            return new_state, True
        state = new_state
    return state, False


__all__ = [
    'EditPolicy', 'state_from_phrases', 'init_state', 'clamp_insertions', 'finalize_tokens', 'refine'
]
