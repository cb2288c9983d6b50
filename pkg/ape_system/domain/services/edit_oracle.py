# ape_system/domain/services/edit_oracle.py
"""
Levenshtein 专家策略与编辑执行

oracle_edits 在 (当前序列, 参考序列) 上做只含插入 / 删除的动态规划，
回溯时按 保留 > 删除 > 插入 打破平局，得到把当前序列变为参考序列的三段编辑。
apply_* 依次执行删除、插入占位符、填充三个阶段。
"""

from typing import List, Sequence

from ape_system.core.exceptions import EditContractError
from ape_system.domain.entities.edit_state import EditState, EditActions, PLH, NO_PHRASE


def insdel_distance(current: Sequence[str], reference: Sequence[str]) -> int:
    """只允许插入 / 删除的编辑距离 = |a| + |b| - 2·LCS"""
    n, m = len(current), len(reference)
    prev = [0] * (m + 1)
    for i in range(1, n + 1):
        cur = [0] * (m + 1)
        for j in range(1, m + 1):
            if current[i - 1] == reference[j - 1]:
                cur[j] = prev[j - 1] + 1
            else:
                cur[j] = max(prev[j], cur[j - 1])
        prev = cur
    return n + m - 2 * prev[m]


def oracle_edits(current: Sequence[str], reference: Sequence[str]) -> EditActions:
    """
    专家编辑动作（针对加上哨兵后的状态）

    Args:
        current: 当前正文（不含哨兵）
        reference: 参考正文（不含哨兵）

    Returns:
        EditActions：deletions 长度为 |current|+2；插入的参考 token
        归到其前面最后一个保留 token 之后的间隙。
    """
    current = list(current)
    reference = list(reference)
    n, m = len(current), len(reference)
    dp = [[0] * (m + 1) for _ in range(n + 1)]
    for i in range(n + 1):
        dp[i][0] = i
    for j in range(m + 1):
        dp[0][j] = j
    for i in range(1, n + 1):
        for j in range(1, m + 1):
            best = min(dp[i - 1][j], dp[i][j - 1]) + 1
            if current[i - 1] == reference[j - 1]:
                best = min(best, dp[i - 1][j - 1])
            dp[i][j] = best

    # 从末尾回溯：保留 > 删除 > 插入
    ops = []
    i, j = n, m
    while i > 0 or j > 0:
        if i > 0 and j > 0 and current[i - 1] == reference[j - 1] and dp[i][j] == dp[i - 1][j - 1]:
            ops.append(("keep", i - 1))
            i, j = i - 1, j - 1
        elif i > 0 and dp[i][j] == dp[i - 1][j] + 1:
            ops.append(("delete", i - 1))
            i -= 1
        else:
            ops.append(("insert", j - 1))
            j -= 1
    ops.reverse()

    deletions = [False] * (n + 2)
    n_kept = sum(1 for op, _ in ops if op == "keep")
    insert_counts = [0] * (n_kept + 1)
    fills: List[str] = []
    kept_so_far = 0
    for op, index in ops:
        if op == "keep":
            kept_so_far += 1
        elif op == "delete":
            deletions[index + 1] = True
        else:
            insert_counts[kept_so_far] += 1
            fills.append(reference[index])
    return EditActions(tuple(deletions), tuple(insert_counts), tuple(fills))


def apply_deletions(state: EditState, deletions: Sequence[bool]) -> EditState:
    """删除阶段：哨兵上的删除标记被忽略"""
    if len(deletions) != len(state.tokens):
        raise EditContractError(f"删除标记数 {len(deletions)} 与状态长度 {len(state.tokens)} 不一致",
                                phase="delete")
    last = len(state.tokens) - 1
    keep = [k == 0 or k == last or not deletions[k] for k in range(len(state.tokens))]
    tokens = tuple(t for t, kp in zip(state.tokens, keep) if kp)
    phrase_ids = tuple(p for p, kp in zip(state.phrase_ids, keep) if kp)
    return EditState(tokens, state.iteration, phrase_ids)


def apply_insertions(state: EditState, insert_counts: Sequence[int]) -> EditState:
    """插入阶段：在每个间隙插入相应数量的占位符"""
    if len(insert_counts) != state.n_slots:
        raise EditContractError(f"插入计数 {len(insert_counts)} 与间隙数 {state.n_slots} 不一致",
                                phase="insert")
    if any(int(c) < 0 for c in insert_counts):
        raise EditContractError("插入计数不能为负数", phase="insert")
    tokens: List[str] = []
    phrase_ids: List[int] = []
    for k, (token, pid) in enumerate(zip(state.tokens, state.phrase_ids)):
        tokens.append(token)
        phrase_ids.append(pid)
        if k < len(insert_counts):
            count = int(insert_counts[k])
            tokens.extend([PLH] * count)
            phrase_ids.extend([NO_PHRASE] * count)
    return EditState(tuple(tokens), state.iteration, tuple(phrase_ids))


def apply_fills(state: EditState, fills: Sequence[str]) -> EditState:
    """填充阶段：自左向右替换占位符"""
    n_placeholders = sum(1 for t in state.tokens if t == PLH)
    if n_placeholders != len(fills):
        raise EditContractError(f"填充数 {len(fills)} 与占位符数 {n_placeholders} 不一致", phase="fill")
    it = iter(fills)
    tokens = tuple(next(it) if t == PLH else t for t in state.tokens)
    return EditState(tokens, state.iteration, state.phrase_ids)


def apply_edits(state: EditState, actions: EditActions) -> EditState:
    """依次执行 删除 → 插入 → 填充，迭代计数加一"""
    after = apply_fills(apply_insertions(apply_deletions(state, actions.deletions), actions.insert_counts),
                        actions.fills)
    return EditState(after.tokens, state.iteration + 1, after.phrase_ids)


__all__ = [
    'insdel_distance', 'oracle_edits',
    'apply_deletions', 'apply_insertions', 'apply_fills', 'apply_edits'
]
