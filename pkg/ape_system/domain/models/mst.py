# ape_system/domain/models/mst.py
"""
多源 Transformer (MST)
两个编码器分别编码源端 (plain / append / replace) 与 MT 输出，
自回归解码器对拼接后的 [源端 ; MT] 记忆做交叉注意力。
"""

from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import torch
import torch.nn as nn
import torch.nn.functional as F

from ape_system.core.model_config import DecodeConfig, MSTConfig, ModelKind
from ape_system.domain.entities.corpus import Sentence
from ape_system.domain.entities.encoded_source import ModelInput
from ape_system.domain.entities.vocabulary import Vocabulary
from ape_system.domain.models.base import BaseApeModel, Hypothesis, TargetEmbedding, make_decoder, make_encoder, pad_batch


def causal_mask(length: int, device: torch.device) -> torch.Tensor:
    """True 表示不可见"""
    return torch.triu(torch.ones(length, length, dtype=torch.bool, device=device), diagonal=1)


class MultiSourceTransformer(BaseApeModel):
    """MST 后编辑模型"""

    kind = ModelKind.MST

    def __init__(self, config: MSTConfig, vocab: Vocabulary):
        super().__init__(config, vocab)
        self.mt_encoder = make_encoder(config)
        self.tgt_embedding = TargetEmbedding(len(vocab), config.d_model, config.max_len + 1,
                                             config.dropout, vocab.pad_id)
        self.decoder = make_decoder(config)
        self.output = nn.Linear(config.d_model, len(vocab), bias=False)
        self.output.weight = self.tgt_embedding.tokens.weight

    def decode_step(self, prefix: torch.Tensor, memory: torch.Tensor,
                    memory_mask: torch.Tensor) -> torch.Tensor:
        """prefix (B, T) → 各位置的词表 logits (B, T, V)"""
        length = prefix.size(1)
        hidden = self.decoder(self.tgt_embedding(prefix), memory,
                              tgt_mask=causal_mask(length, prefix.device),
                              tgt_key_padding_mask=prefix.eq(self.vocab.pad_id),
                              memory_key_padding_mask=memory_mask)
        return self.output(hidden)

    # ------------------------------------------------------------------
    # 训练
    # ------------------------------------------------------------------
    def training_loss(self, inputs: Sequence[ModelInput], step: int,
                      rng: np.random.Generator) -> Tuple[torch.Tensor, Dict[str, float]]:
        """教师强制的 token 交叉熵（忽略 padding，带标签平滑）"""
        limit = self.config.max_len
        targets = [self.vocab.encode(i.target[:limit]) for i in inputs]
        decoder_in = pad_batch([[self.vocab.bos_id] + t for t in targets], self.vocab.pad_id, self.device)
        gold = pad_batch([t + [self.vocab.eos_id] for t in targets], self.vocab.pad_id, self.device)

        memory, memory_mask = self.encode(inputs)
        logits = self.decode_step(decoder_in, memory, memory_mask)
        loss = F.cross_entropy(logits.reshape(-1, logits.size(-1)), gold.reshape(-1),
                               ignore_index=self.vocab.pad_id, label_smoothing=self.train_config.label_smoothing)
        with torch.no_grad():
            nll = F.cross_entropy(logits.reshape(-1, logits.size(-1)), gold.reshape(-1),
                                  ignore_index=self.vocab.pad_id)
            n_tokens = int(gold.ne(self.vocab.pad_id).sum())
        return loss, {"nll": float(nll), "tokens": n_tokens}

    # ------------------------------------------------------------------
    # 解码
    # ------------------------------------------------------------------
    @torch.no_grad()
    def beam_search(self, inp: ModelInput, beam_size: int, max_len: int) -> Hypothesis:
        """
        单句束搜索，得分按长度归一化（对数概率和 / 含 </s> 的长度）

        beam_size=1 即贪心解码；max_len 步内未生成 </s> 时返回最优未完成假设并标记 truncated。
        """
        max_len = min(max_len, self.config.max_len)
        memory, memory_mask = self.encode([inp])
        banned = self.special_mask().clone()
        banned[self.vocab.eos_id] = False

        alive: List[Tuple[List[int], float]] = [([self.vocab.bos_id], 0.0)]
        finished: List[Tuple[List[int], float, float]] = []
        for _ in range(max_len):
            prefix = pad_batch([tokens for tokens, _ in alive], self.vocab.pad_id, self.device)
            k = len(alive)
            logits = self.decode_step(prefix, memory.expand(k, -1, -1), memory_mask.expand(k, -1))[:, -1, :]
            log_probs = F.log_softmax(logits.float(), dim=-1).masked_fill(banned, float("-inf"))
            totals = log_probs + torch.tensor([score for _, score in alive], device=self.device).unsqueeze(1)
            top_scores, top_index = totals.view(-1).topk(min(beam_size, totals.numel()))

            next_alive = []
            vocab_size = log_probs.size(-1)
            for score, flat in zip(top_scores.tolist(), top_index.tolist()):
                if score == float("-inf"):
                    continue
                beam, token = divmod(flat, vocab_size)
                tokens = alive[beam][0] + [token]
                if token == self.vocab.eos_id:
                    body = tokens[1:-1]
                    finished.append((body, score, score / (len(body) + 1)))
                else:
                    next_alive.append((tokens, score))
            alive = next_alive
            if len(finished) >= beam_size or not alive:
                break

        if finished:
            body, _, normalized = max(finished, key=lambda item: item[2])
            truncated = False
        else:
            tokens, score = max(alive, key=lambda item: item[1] / max(len(item[0]) - 1, 1))
            body, normalized, truncated = tokens[1:], score / max(len(tokens) - 1, 1), True
        return Hypothesis(Sentence(tuple(self.vocab.decode(body))), float(normalized), truncated)

    def postedit(self, inputs: Sequence[ModelInput], decode: DecodeConfig,
                 trace: Optional[List[str]] = None) -> List[Hypothesis]:
        was_training = self.training
        self.eval()
        try:
            return [self.beam_search(inp, decode.beam_size, decode.max_len) for inp in inputs]
        finally:
            self.train(was_training)


__all__ = ['MultiSourceTransformer', 'causal_mask']
