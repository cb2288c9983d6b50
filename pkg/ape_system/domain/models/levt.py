# ape_system/domain/models/levt.py
"""
Levenshtein Transformer

单编码器 (x⁺ / x⁻) 或双编码器 (MS LevT: x 与 γ 分别编码)，
非自回归解码器之上的三个编辑头：
    删除头  : 每个 token 保留 / 删除
    插入头  : 相邻 token 对之间插入的占位符个数 (0..max_insert_per_slot)
    填充头  : 占位符位置的词表分类（与嵌入权重共享）

训练：模仿学习，roll-in 状态上以 oracle_edits 的三段动作为目标。
    roll-in 二选一：参考译文逐 token 以 rollin_delete_prob 删除；
    或 (warmup 之后，以 rollin_model_prob) 模型从推理初始状态出发的插入 + 填充输出。
解码：refinement.refine 驱动的 删除 → 插入 → 填充 迭代。
"""

from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import torch
import torch.nn as nn
import torch.nn.functional as F

from ape_system.core.model_config import DecodeConfig, InitStrategy, LevTConfig, ModelKind
from ape_system.domain.entities.corpus import Sentence
from ape_system.domain.entities.edit_state import EditState, PLH
from ape_system.domain.entities.encoded_source import ModelInput
from ape_system.domain.entities.vocabulary import Vocabulary
from ape_system.domain.models.base import BaseApeModel, Hypothesis, TargetEmbedding, make_decoder, make_encoder, pad_batch
from ape_system.domain.services.edit_oracle import apply_deletions, apply_fills, apply_insertions, oracle_edits
from ape_system.domain.services.refinement import (
    clamp_insertions, finalize_tokens, init_state, refine, state_from_phrases
)

IGNORE = -100

ROLLIN_REFERENCE = "reference"
ROLLIN_MODEL = "model"


def masked_cross_entropy(logits: torch.Tensor, targets: torch.Tensor,
                         label_smoothing: float = 0.0) -> torch.Tensor:
    """没有有效目标时返回 0（保持计算图），避免全忽略时的 NaN"""
    if not bool(targets.ne(IGNORE).any()):
        return logits.sum() * 0.0
    return F.cross_entropy(logits.reshape(-1, logits.size(-1)), targets.reshape(-1),
                           ignore_index=IGNORE, label_smoothing=label_smoothing)


def corrupt_reference(target: Sequence[str], delete_prob: float, rng: np.random.Generator) -> EditState:
    """参考译文的每个 token 独立地以 delete_prob 删除"""
    keep = rng.random(len(target)) >= delete_prob
    return EditState.wrap([t for t, k in zip(target, keep) if k])


class _LevTPolicy:
    """单句上的贪心编辑策略，记忆在构造时编码好"""

    def __init__(self, model: 'LevenshteinTransformer', memory: torch.Tensor, memory_mask: torch.Tensor):
        self.model = model
        self.memory = memory
        self.memory_mask = memory_mask

    def _hidden(self, state: EditState) -> torch.Tensor:
        ids = pad_batch([self.model.vocab.encode(state.tokens)], self.model.vocab.pad_id, self.model.device)
        return self.model.features(ids, self.memory, self.memory_mask)

    def predict_deletions(self, state: EditState) -> List[bool]:
        logits = self.model.del_head(self._hidden(state))[0]
        return logits.argmax(dim=-1).eq(1).tolist()

    def predict_insertions(self, state: EditState) -> List[int]:
        logits = self.model.insertion_logits(self._hidden(state))[0]
        return logits.argmax(dim=-1).tolist()

    def predict_fills(self, state: EditState) -> List[str]:
        logits = self.model.output(self._hidden(state))[0]
        logits = logits.masked_fill(self.model.special_mask(), float("-inf"))
        positions = [k for k, token in enumerate(state.tokens) if token == PLH]
        if not positions:
            return []
        ids = logits[positions].argmax(dim=-1).tolist()
        return self.model.vocab.decode(ids)


class LevenshteinTransformer(BaseApeModel):
    """LevT / MS LevT 后编辑模型"""

    kind = ModelKind.LEVT

    def __init__(self, config: LevTConfig, vocab: Vocabulary):
        super().__init__(config, vocab)
        if config.multi_source:
            self.mt_encoder = make_encoder(config)
        self.tgt_embedding = TargetEmbedding(len(vocab), config.d_model, config.max_len + 2,
                                             config.dropout, vocab.pad_id)
        self.decoder = make_decoder(config)
        self.del_head = nn.Linear(config.d_model, 2)
        self.ins_head = nn.Linear(2 * config.d_model, config.max_insert_per_slot + 1)
        self.output = nn.Linear(config.d_model, len(vocab), bias=False)
        self.output.weight = self.tgt_embedding.tokens.weight

    @property
    def body_limit(self) -> int:
        return self.config.max_len - 2

    def features(self, ids: torch.Tensor, memory: torch.Tensor, memory_mask: torch.Tensor) -> torch.Tensor:
        """状态 (B, T) → 解码器隐状态 (B, T, d)，无因果掩码"""
        return self.decoder(self.tgt_embedding(ids), memory,
                            tgt_key_padding_mask=ids.eq(self.vocab.pad_id),
                            memory_key_padding_mask=memory_mask)

    def insertion_logits(self, hidden: torch.Tensor) -> torch.Tensor:
        """相邻位置隐状态拼接 → (B, T-1, max_insert_per_slot+1)"""
        return self.ins_head(torch.cat([hidden[:, :-1], hidden[:, 1:]], dim=-1))

    # ------------------------------------------------------------------
    # 初始状态
    # ------------------------------------------------------------------
    def initial_state(self, strategy: InitStrategy, inp: ModelInput) -> EditState:
        """按策略构造初始状态，长度受 max_len 限制"""
        if strategy == InitStrategy.CONSTRAINTS:
            phrases, used = [], 0
            for phrase in inp.constraint_phrases:
                if used + len(phrase) > self.body_limit:
                    break
                phrases.append(phrase)
                used += len(phrase)
            return state_from_phrases(phrases)
        return init_state(strategy, mt=inp.mt.tokens[:self.body_limit])

    # ------------------------------------------------------------------
    # 训练
    # ------------------------------------------------------------------
    @torch.no_grad()
    def _model_rollin(self, state: EditState, memory: torch.Tensor, memory_mask: torch.Tensor) -> EditState:
        """模型自身的贪心插入 + 填充输出"""
        policy = _LevTPolicy(self, memory, memory_mask)
        counts = clamp_insertions(policy.predict_insertions(state), state, self.config.max_insert_per_slot,
                                  False, self.config.max_len)
        inserted = apply_insertions(state, counts)
        return apply_fills(inserted, policy.predict_fills(inserted) if sum(counts) else [])

    def rollin_branch(self, step: int, rng: np.random.Generator) -> str:
        """warmup 之前总是破坏后的参考；之后以 rollin_model_prob 改用模型自身的插入输出"""
        train = self.train_config
        if step >= train.rollin_warmup_steps and rng.random() < train.rollin_model_prob:
            return ROLLIN_MODEL
        return ROLLIN_REFERENCE

    def _rollin_state(self, inp: ModelInput, target: Sequence[str], step: int, rng: np.random.Generator,
                      memory: torch.Tensor, memory_mask: torch.Tensor) -> EditState:
        if self.rollin_branch(step, rng) == ROLLIN_MODEL:
            return self._model_rollin(self.initial_state(self.config.init_strategy, inp), memory, memory_mask)
        return corrupt_reference(target, self.train_config.rollin_delete_prob, rng)

    def training_loss(self, inputs: Sequence[ModelInput], step: int,
                      rng: np.random.Generator) -> Tuple[torch.Tensor, Dict[str, float]]:
        """三个编辑头在 oracle 目标上的交叉熵之和"""
        memory, memory_mask = self.encode(inputs)
        del_ids, del_gold, ins_ids, ins_gold, fill_ids, fill_gold = [], [], [], [], [], []
        for b, inp in enumerate(inputs):
            target = list(inp.target[:self.body_limit])
            state = self._rollin_state(inp, target, step, rng, memory[b:b + 1].detach(), memory_mask[b:b + 1])
            actions = oracle_edits(state.body, target)
            last = len(state.tokens) - 1
            del_ids.append(self.vocab.encode(state.tokens))
            del_gold.append([IGNORE if k in (0, last) else int(d) for k, d in enumerate(actions.deletions)])

            deleted = apply_deletions(state, actions.deletions)
            ins_ids.append(self.vocab.encode(deleted.tokens))
            ins_gold.append([min(c, self.config.max_insert_per_slot) for c in actions.insert_counts])

            inserted = apply_insertions(deleted, actions.insert_counts)
            fill_ids.append(self.vocab.encode(inserted.tokens))
            fills = iter(self.vocab.encode(actions.fills))
            fill_gold.append([next(fills) if t == PLH else IGNORE for t in inserted.tokens])

        device = self.device
        del_in = pad_batch(del_ids, self.vocab.pad_id, device)
        del_logits = self.del_head(self.features(del_in, memory, memory_mask))
        del_target = pad_batch(del_gold, IGNORE, device)
        del_loss = masked_cross_entropy(del_logits, del_target)

        ins_in = pad_batch(ins_ids, self.vocab.pad_id, device)
        ins_logits = self.insertion_logits(self.features(ins_in, memory, memory_mask))
        ins_target = pad_batch(ins_gold, IGNORE, device)
        ins_loss = masked_cross_entropy(ins_logits, ins_target)

        fill_in = pad_batch(fill_ids, self.vocab.pad_id, device)
        fill_logits = self.output(self.features(fill_in, memory, memory_mask))
        fill_target = pad_batch(fill_gold, IGNORE, device)
        fill_loss = masked_cross_entropy(fill_logits, fill_target, self.train_config.label_smoothing)

        with torch.no_grad():
            valid = del_target.ne(IGNORE)
            n_valid = int(valid.sum())
            correct = int((del_logits.argmax(dim=-1).eq(del_target) & valid).sum())
            del_acc = correct / n_valid if n_valid else 1.0
        stats = {
            "del_loss": float(del_loss), "ins_loss": float(ins_loss), "fill_loss": float(fill_loss),
            "del_acc": del_acc, "tokens": int(fill_target.ne(IGNORE).sum()),
        }
        return del_loss + ins_loss + fill_loss, stats

    # ------------------------------------------------------------------
    # 解码
    # ------------------------------------------------------------------
    def postedit(self, inputs: Sequence[ModelInput], decode: DecodeConfig,
                 trace: Optional[List[str]] = None) -> List[Hypothesis]:
        strategy = (InitStrategy.from_string(decode.init_strategy) if decode.init_strategy
                    else self.config.init_strategy)
        protect = (decode.protect_constraints if decode.protect_constraints is not None
                   else self.config.protect_constraints)
        max_len = min(decode.max_len + 2, self.config.max_len)
        was_training = self.training
        self.eval()
        hypotheses = []
        try:
            with torch.no_grad():
                for inp in inputs:
                    memory, memory_mask = self.encode([inp])
                    state, converged = refine(_LevTPolicy(self, memory, memory_mask),
                                              self.initial_state(strategy, inp),
                                              self.config.max_iterations, self.config.max_insert_per_slot,
                                              protect_constraints=protect, max_len=max_len,
                                              trace=trace, sent_id=inp.id)
                    hypotheses.append(Hypothesis(Sentence(tuple(finalize_tokens(state))),
                                                 truncated=not converged, iterations=state.iteration))
        finally:
            self.train(was_training)
        return hypotheses


__all__ = ['LevenshteinTransformer', 'ROLLIN_MODEL', 'ROLLIN_REFERENCE', 'corrupt_reference', 'masked_cross_entropy']
