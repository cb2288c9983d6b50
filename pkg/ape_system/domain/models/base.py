# ape_system/domain/models/base.py
"""
后编辑模型基类模块

功能概述：
    定义 MST / LevT 共用的网络组件与抽象接口。

核心组件：
    1. FactoredEmbedding：token 嵌入 (d_model - f) 与源因子嵌入 (f) 拼接，加正弦位置编码
    2. make_encoder：batch_first 的 TransformerEncoder
    3. BaseApeModel：编码记忆 [源端 ; MT] 的拼接、训练损失与后编辑接口

张量约定：
    所有序列均为 (batch, length)；输入序列末尾追加 </s>，保证非空。
"""

import math
from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import ClassVar, Dict, List, Optional, Sequence, Tuple

import numpy as np
import torch
import torch.nn as nn

from ape_system.core.model_config import ArchitectureConfig, DecodeConfig, ModelKind, TrainConfig
from ape_system.domain.entities.corpus import Sentence
from ape_system.domain.entities.encoded_source import EncodedSource, ModelInput, SourceFactor
from ape_system.domain.entities.vocabulary import Vocabulary

N_FACTORS = len(SourceFactor)


@dataclass(frozen=True)
class Hypothesis:
    """解码结果；truncated 表示达到长度 / 迭代上限仍未结束"""
    sentence: Sentence
    score: float = 0.0
    truncated: bool = False
    iterations: int = 0


class SinusoidalPositions(nn.Module):
    """固定正弦位置编码"""

    def __init__(self, d_model: int, max_len: int):
        super().__init__()
        position = torch.arange(max_len, dtype=torch.float32).unsqueeze(1)
        div_term = torch.exp(torch.arange(0, d_model, 2, dtype=torch.float32) * (-math.log(10000.0) / d_model))
        table = torch.zeros(max_len, d_model)
        table[:, 0::2] = torch.sin(position * div_term)
        table[:, 1::2] = torch.cos(position * div_term[: d_model // 2])
        self.register_buffer("table", table, persistent=False)

    def forward(self, length: int) -> torch.Tensor:
        return self.table[:length]


class FactoredEmbedding(nn.Module):
    """编码器输入：concat(token 嵌入, 因子嵌入) · sqrt(d) + 位置编码"""

    def __init__(self, vocab_size: int, d_model: int, factor_dim: int, max_len: int,
                 dropout: float, padding_idx: int = 0):
        super().__init__()
        self.d_model = d_model
        self.tokens = nn.Embedding(vocab_size, d_model - factor_dim, padding_idx=padding_idx)
        self.factors = nn.Embedding(N_FACTORS, factor_dim)
        self.positions = SinusoidalPositions(d_model, max_len)
        self.dropout = nn.Dropout(dropout)
        nn.init.normal_(self.tokens.weight, mean=0.0, std=d_model ** -0.5)
        nn.init.normal_(self.factors.weight, mean=0.0, std=d_model ** -0.5)
        with torch.no_grad():
            self.tokens.weight[padding_idx].zero_()

    def forward(self, token_ids: torch.Tensor, factor_ids: torch.Tensor) -> torch.Tensor:
        x = torch.cat([self.tokens(token_ids), self.factors(factor_ids)], dim=-1) * math.sqrt(self.d_model)
        return self.dropout(x + self.positions(token_ids.size(1)).unsqueeze(0))


class TargetEmbedding(nn.Module):
    """解码器嵌入，权重与输出投影共享"""

    def __init__(self, vocab_size: int, d_model: int, max_len: int, dropout: float, padding_idx: int = 0):
        super().__init__()
        self.d_model = d_model
        self.tokens = nn.Embedding(vocab_size, d_model, padding_idx=padding_idx)
        self.positions = SinusoidalPositions(d_model, max_len)
        self.dropout = nn.Dropout(dropout)
        nn.init.normal_(self.tokens.weight, mean=0.0, std=d_model ** -0.5)
        with torch.no_grad():
            self.tokens.weight[padding_idx].zero_()

    def forward(self, token_ids: torch.Tensor) -> torch.Tensor:
        x = self.tokens(token_ids) * math.sqrt(self.d_model)
        return self.dropout(x + self.positions(token_ids.size(1)).unsqueeze(0))


def make_encoder(config: ArchitectureConfig) -> nn.TransformerEncoder:
    layer = nn.TransformerEncoderLayer(config.d_model, config.n_heads, config.ffn_dim, config.dropout,
                                       batch_first=True)
    return nn.TransformerEncoder(layer, config.n_layers, enable_nested_tensor=False)


def make_decoder(config: ArchitectureConfig) -> nn.TransformerDecoder:
    layer = nn.TransformerDecoderLayer(config.d_model, config.n_heads, config.ffn_dim, config.dropout,
                                       batch_first=True)
    return nn.TransformerDecoder(layer, config.n_layers)


def pad_batch(sequences: Sequence[Sequence[int]], pad_id: int, device: torch.device) -> torch.Tensor:
    """右侧补齐为 (batch, max_len) 的 LongTensor"""
    width = max((len(s) for s in sequences), default=0)
    out = torch.full((len(sequences), width), pad_id, dtype=torch.long, device=device)
    for i, seq in enumerate(sequences):
        if seq:
            out[i, :len(seq)] = torch.as_tensor(list(seq), dtype=torch.long, device=device)
    return out


class BaseApeModel(nn.Module, ABC):
    """
    后编辑模型基类

    子类需设置 kind 并实现 training_loss / postedit。
    """

    kind: ClassVar[ModelKind]

    def __init__(self, config: ArchitectureConfig, vocab: Vocabulary):
        super().__init__()
        self.config = config
        self.vocab = vocab
        self.embedding = FactoredEmbedding(len(vocab), config.d_model, config.factor_embed_dim,
                                           config.max_len, config.dropout, vocab.pad_id)
        self.src_encoder = make_encoder(config)
        self.mt_encoder: Optional[nn.TransformerEncoder] = None
        self.train_config = TrainConfig()

    def configure_training(self, train: TrainConfig) -> None:
        """训练超参（标签平滑、roll-in 概率等）不进入检查点，由训练引擎注入"""
        self.train_config = train

    @property
    def device(self) -> torch.device:
        return next(self.parameters()).device

    @property
    def n_parameters(self) -> int:
        return sum(p.numel() for p in self.parameters())

    # ------------------------------------------------------------------
    # 编码
    # ------------------------------------------------------------------
    def _tensorize(self, encoded: Sequence[EncodedSource], eos_factor: int) -> Tuple[torch.Tensor, torch.Tensor]:
        limit = self.config.max_len - 1
        ids = [self.vocab.encode(e.tokens[:limit]) + [self.vocab.eos_id] for e in encoded]
        factors = [list(e.factor_values[:limit]) + [eos_factor] for e in encoded]
        return pad_batch(ids, self.vocab.pad_id, self.device), pad_batch(factors, 0, self.device)

    def _encode_side(self, encoder: nn.TransformerEncoder, encoded: Sequence[EncodedSource],
                     eos_factor: int) -> Tuple[torch.Tensor, torch.Tensor]:
        ids, factors = self._tensorize(encoded, eos_factor)
        mask = ids.eq(self.vocab.pad_id)
        return encoder(self.embedding(ids, factors), src_key_padding_mask=mask), mask

    def encode(self, inputs: Sequence[ModelInput]) -> Tuple[torch.Tensor, torch.Tensor]:
        """
        编码记忆

        Returns:
            (memory, padding_mask)：双编码器时沿长度轴拼接 [源端 ; MT]
        """
        memory, mask = self._encode_side(self.src_encoder, [i.source for i in inputs], int(SourceFactor.SOURCE))
        if self.mt_encoder is not None:
            mt_memory, mt_mask = self._encode_side(self.mt_encoder, [i.mt for i in inputs], int(SourceFactor.MT))
            memory = torch.cat([memory, mt_memory], dim=1)
            mask = torch.cat([mask, mt_mask], dim=1)
        return memory, mask

    def special_mask(self) -> torch.Tensor:
        """词表上的保留符号掩码（True 表示保留符号）"""
        mask = torch.zeros(len(self.vocab), dtype=torch.bool, device=self.device)
        mask[:self.vocab.n_specials] = True
        return mask

    # ------------------------------------------------------------------
    # 子类接口
    # ------------------------------------------------------------------
    @abstractmethod
    def training_loss(self, inputs: Sequence[ModelInput], step: int,
                      rng: np.random.Generator) -> Tuple[torch.Tensor, Dict[str, float]]:
        """一个批次的训练损失与统计量"""

    @abstractmethod
    def postedit(self, inputs: Sequence[ModelInput], decode: DecodeConfig,
                 trace: Optional[List[str]] = None) -> List[Hypothesis]:
        """后编辑；Hypothesis.sentence 为子词序列，由调用方还原为整词"""


__all__ = [
    'N_FACTORS', 'Hypothesis', 'SinusoidalPositions', 'FactoredEmbedding', 'TargetEmbedding',
    'make_encoder', 'make_decoder', 'pad_batch', 'BaseApeModel'
]
