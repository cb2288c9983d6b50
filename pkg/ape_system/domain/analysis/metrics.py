# ape_system/domain/analysis/metrics.py
"""
评测指标模块 - TER / BLEU / Term% / 输出稳定性

TER:
    无位移时为插入/删除/替换单位代价的最小编辑数；
    有位移时贪心地反复执行能使编辑距离净下降的块位移（每次位移计 1 次编辑）。
    每轮在全部 "任一连续块 → 任一位置" 的位移中取编辑距离最小者（同分取最先枚举到的）。
BLEU:
    语料级，n = 1..max_n，无平滑；任一精度为 0 时 BLEU 为 0。
Term%:
    约束目标短语作为连续子序列精确出现在输出中（区分大小写）即命中。
"""

import math
from collections import Counter
from typing import List, Optional, Sequence, Tuple

import numpy as np

from ape_system.core.exceptions import InvalidArgumentError
from ape_system.domain.entities.corpus import ConstraintSet
from ape_system.domain.entities.report import EvalReport
from ape_system.utils.monitoring import performance_monitor

Tokens = Sequence[str]


# ============================================================================
# 编辑距离
# ============================================================================

def edit_distance(hyp: Tokens, ref: Tokens) -> int:
    """单位代价 Levenshtein 距离（插入 / 删除 / 替换）"""
    n, m = len(hyp), len(ref)
    if n == 0:
        return m
    if m == 0:
        return n
    prev = list(range(m + 1))
    for i in range(1, n + 1):
        cur = [i] + [0] * m
        h = hyp[i - 1]
        for j in range(1, m + 1):
            cur[j] = min(prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (0 if h == ref[j - 1] else 1))
        prev = cur
    return prev[m]


def batch_edit_distance(candidates: np.ndarray, ref: np.ndarray) -> np.ndarray:
    """
    一批等长候选各自与 ref 的编辑距离

    逐行推进 DP；行内插入的链式依赖用 "减下标、累计最小、加回下标" 一次求出。
    """
    n_cand, n = candidates.shape
    offsets = np.arange(len(ref) + 1)
    prev = np.broadcast_to(offsets, (n_cand, len(ref) + 1)).copy()
    for i in range(n):
        cost = (candidates[:, i:i + 1] != ref[None, :]).astype(np.int64)
        cur = np.empty_like(prev)
        cur[:, 0] = i + 1
        cur[:, 1:] = np.minimum(prev[:, 1:] + 1, prev[:, :-1] + cost)
        prev = np.minimum.accumulate(cur - offsets, axis=1) + offsets
    return prev[:, -1]


def _shift_candidates(hyp: List[str]) -> List[Tuple[str, ...]]:
    """把任一连续块移到任一其他位置得到的全部序列，按 (起点, 终点, 目标位置) 顺序去重"""
    n = len(hyp)
    seen = {tuple(hyp)}
    out: List[Tuple[str, ...]] = []
    for start in range(n):
        for end in range(start + 1, n + 1):
            block = hyp[start:end]
            rest = hyp[:start] + hyp[end:]
            for dest in range(len(rest) + 1):
                candidate = tuple(rest[:dest] + block + rest[dest:])
                if candidate not in seen:
                    seen.add(candidate)
                    out.append(candidate)
    return out


def _best_shift(hyp: List[str], ref: Tokens, base: int) -> Optional[Tuple[int, List[str]]]:
    """返回 (位移后的编辑距离, 位移后的 hyp)；没有净改进时返回 None"""
    candidates = _shift_candidates(hyp)
    if not candidates:
        return None
    ids = {tok: k for k, tok in enumerate(set(hyp) | set(ref))}
    matrix = np.array([[ids[t] for t in c] for c in candidates], dtype=np.int64)
    distances = batch_edit_distance(matrix, np.array([ids[t] for t in ref], dtype=np.int64))
    k = int(np.argmin(distances))
    if int(distances[k]) + 1 < base:
        return int(distances[k]), list(candidates[k])
    return None


def ter(hyp: Tokens, ref: Tokens, allow_shifts: bool = True) -> Tuple[int, int]:
    """
    单句 TER 统计

    Returns:
        (编辑数, 参考长度)；参考为空时编辑数为 |hyp|
    """
    hyp = list(hyp)
    ref = list(ref)
    if not ref:
        return len(hyp), 0
    if not hyp:
        return len(ref), len(ref)

    distance = edit_distance(hyp, ref)
    if not allow_shifts:
        return distance, len(ref)

    shifts = 0
    while distance > 0:
        found = _best_shift(hyp, ref, distance)
        if found is None:
            break
        distance, hyp = found
        shifts += 1
    return distance + shifts, len(ref)


@performance_monitor("corpus_ter")
def corpus_ter(hyps: Sequence[Tokens], refs: Sequence[Tokens], allow_shifts: bool = True) -> float:
    """语料级 TER = Σ编辑数 / max(Σ参考长度, 1)"""
    if len(hyps) != len(refs):
        raise InvalidArgumentError(f"hyps({len(hyps)}) 与 refs({len(refs)}) 数量不一致", argument="hyps")
    total_edits = 0
    total_len = 0
    for h, r in zip(hyps, refs):
        edits, ref_len = ter(h, r, allow_shifts)
        total_edits += edits
        total_len += ref_len
    return total_edits / max(total_len, 1)


# ============================================================================
# BLEU
# ============================================================================

def _ngrams(tokens: Tokens, n: int) -> Counter:
    return Counter(tuple(tokens[i:i + n]) for i in range(len(tokens) - n + 1))


def bleu_stats(hyp: Tokens, ref: Tokens, max_n: int = 4) -> Tuple[List[int], List[int], int, int]:
    """单句统计：(各阶裁剪匹配数, 各阶 n-gram 总数, hyp 长度, ref 长度)"""
    matches, totals = [], []
    for n in range(1, max_n + 1):
        hyp_counts = _ngrams(hyp, n)
        ref_counts = _ngrams(ref, n)
        matches.append(sum(min(count, ref_counts[gram]) for gram, count in hyp_counts.items()))
        totals.append(max(len(hyp) - n + 1, 0))
    return matches, totals, len(hyp), len(ref)


@performance_monitor("bleu")
def bleu(hyps: Sequence[Tokens], refs: Sequence[Tokens], max_n: int = 4) -> float:
    """语料级 BLEU（百分制）"""
    if len(hyps) != len(refs):
        raise InvalidArgumentError(f"hyps({len(hyps)}) 与 refs({len(refs)}) 数量不一致", argument="hyps")
    if not hyps:
        raise InvalidArgumentError("BLEU 至少需要一个句对", argument="hyps")
    if max_n < 1:
        raise InvalidArgumentError(f"max_n 必须 ≥ 1: {max_n}", argument="max_n", value=max_n)

    matches = [0] * max_n
    totals = [0] * max_n
    hyp_len = ref_len = 0
    for h, r in zip(hyps, refs):
        m, t, hl, rl = bleu_stats(list(h), list(r), max_n)
        for k in range(max_n):
            matches[k] += m[k]
            totals[k] += t[k]
        hyp_len += hl
        ref_len += rl

    if hyp_len == 0 or any(m == 0 for m in matches):
        return 0.0
    log_precision = sum(math.log(m / t) for m, t in zip(matches, totals)) / max_n
    brevity = math.exp(min(0.0, 1.0 - ref_len / hyp_len))
    return 100.0 * brevity * math.exp(log_precision)


# ============================================================================
# Term% 与稳定性
# ============================================================================

def _contains(tokens: Tokens, phrase: Tokens) -> bool:
    n = len(phrase)
    return any(tuple(tokens[i:i + n]) == tuple(phrase) for i in range(len(tokens) - n + 1))


def term_pct(outputs: Sequence[Tokens], constraint_sets: Sequence[ConstraintSet]) -> Tuple[int, int]:
    """返回 (命中数, 约束总数)；源端未匹配的约束同样计入分母"""
    if len(outputs) != len(constraint_sets):
        raise InvalidArgumentError(f"outputs({len(outputs)}) 与约束集({len(constraint_sets)}) 数量不一致",
                                   argument="outputs")
    hit = total = 0
    for output, constraints in zip(outputs, constraint_sets):
        tokens = list(output)
        for c in constraints:
            total += 1
            if _contains(tokens, c.tgt_phrase.tokens):
                hit += 1
    return hit, total


def term_percentage(hit: int, total: int) -> Optional[float]:
    """total 为 0 时无定义"""
    return 100.0 * hit / total if total else None


def stability(outputs_a: Sequence[Tokens], outputs_b: Sequence[Tokens],
              allow_shifts: bool = True, max_n: int = 4) -> Tuple[float, float]:
    """以 outputs_b（原约束下的输出）为参考，计算 outputs_a 的 (TER, BLEU)"""
    return corpus_ter(outputs_a, outputs_b, allow_shifts), bleu(outputs_a, outputs_b, max_n)


def evaluate(hyps: Sequence[Tokens], refs: Sequence[Tokens],
             constraint_sets: Optional[Sequence[ConstraintSet]] = None,
             allow_shifts: bool = True, max_n: int = 4) -> EvalReport:
    """完整评测报告"""
    if constraint_sets is None:
        constraint_sets = [ConstraintSet()] * len(hyps)
    hit, total = term_pct(hyps, constraint_sets)
    return EvalReport(
        ter=corpus_ter(hyps, refs, allow_shifts),
        bleu=bleu(hyps, refs, max_n),
        term_pct=term_percentage(hit, total),
        n_sentences=len(hyps),
        n_constraints=total,
        n_constraints_hit=hit,
    )


__all__ = [
    'edit_distance', 'ter', 'corpus_ter', 'bleu_stats', 'bleu',
    'term_pct', 'term_percentage', 'stability', 'evaluate'
]
