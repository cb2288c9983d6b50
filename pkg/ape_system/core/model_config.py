# ape_system/core/model_config.py
# APE工具包的全部配置数据类（自包含、带验证与序列化支持）
from __future__ import annotations

from dataclasses import dataclass, field, asdict, fields
from enum import Enum
from typing import Dict, Any, Optional, List, Type, TypeVar

from ape_system.core.exceptions import ConfigValidationError

T = TypeVar("T")


# ------------------------------------------------------------------
# 枚举
# ------------------------------------------------------------------
class EncoderVariant(Enum):
    """编码器输入变体：不加约束 / 追加 / 替换"""
    PLAIN = "plain"
    APPEND = "append"
    REPLACE = "replace"

    @classmethod
    def from_string(cls, value: str) -> "EncoderVariant":
        try:
            return cls(str(value).strip().lower())
        except ValueError:
            raise ConfigValidationError(f"无效的编码变体: {value}",
                                        {"errors": [f"variant 必须是 plain/append/replace: {value}"]})


class InitStrategy(Enum):
    """LevT 解码初始化策略"""
    BLANK = "blank"
    MT = "mt"
    CONSTRAINTS = "constraints"

    @classmethod
    def from_string(cls, value: str) -> "InitStrategy":
        try:
            return cls(str(value).strip().lower())
        except ValueError:
            raise ConfigValidationError(f"无效的初始化策略: {value}",
                                        {"errors": [f"init_strategy 必须是 blank/mt/constraints: {value}"]})


class ModelKind(Enum):
    """模型种类，检查点中的 model_kind 标签"""
    MST = "mst"
    LEVT = "levt"

    @classmethod
    def from_string(cls, value: str) -> "ModelKind":
        try:
            return cls(str(value).strip().lower())
        except ValueError:
            raise ConfigValidationError(f"无效的模型种类: {value}",
                                        {"errors": [f"kind 必须是 mst/levt: {value}"]})


# ------------------------------------------------------------------
# 通用序列化辅助
# ------------------------------------------------------------------
def _to_plain(value: Any) -> Any:
    if isinstance(value, Enum):
        return value.value
    if isinstance(value, dict):
        return {k: _to_plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_to_plain(v) for v in value]
    return value


def _build(cls: Type[T], data: Optional[Dict[str, Any]], section: str) -> T:
    """dict -> dataclass，未知键直接报错"""
    data = dict(data or {})
    known = {f.name for f in fields(cls)}
    unknown = sorted(set(data) - known)
    if unknown:
        raise ConfigValidationError(f"{section} 含未知配置项",
                                    {"errors": [f"{section}.{k}: 未知配置项" for k in unknown]})
    return cls(**data)


class _ConfigMixin:
    """to_dict / from_dict 公共实现"""

    def to_dict(self) -> Dict[str, Any]:
        return _to_plain(asdict(self))

    @classmethod
    def from_dict(cls, data: Optional[Dict[str, Any]]):
        return _build(cls, data, cls.__name__)


# ------------------------------------------------------------------
# 日志配置
# ------------------------------------------------------------------
@dataclass
class LoggingConfig(_ConfigMixin):
    """日志配置（system.logging）"""
    level: str = "INFO"
    format: str = "text"          # text / json
    log_to_file: bool = True      # 写入 output_dir/logs
    max_bytes: int = 10 * 1024 * 1024
    backup_count: int = 3

    def validate(self) -> None:
        errors = []
        if str(self.level).upper() not in ("DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"):
            errors.append(f"level 无效: {self.level}")
        if str(self.format).lower() not in ("text", "json"):
            errors.append(f"format 必须是 text/json: {self.format}")
        if self.max_bytes < 0:
            errors.append("max_bytes 不能为负数")
        if self.backup_count < 0:
            errors.append("backup_count 不能为负数")
        if errors:
            raise ConfigValidationError("LoggingConfig 验证失败", {"errors": errors})


# ------------------------------------------------------------------
# 数据生成 / 预处理配置
# ------------------------------------------------------------------
@dataclass(frozen=True)
class NoiseConfig(_ConfigMixin):
    """MT 噪声：替换 / 删除 / 插入概率"""
    sub_rate: float = 0.1
    del_rate: float = 0.05
    ins_rate: float = 0.05

    def __post_init__(self):
        self.validate()

    @property
    def is_zero(self) -> bool:
        return self.sub_rate == 0 and self.del_rate == 0 and self.ins_rate == 0

    def validate(self) -> None:
        errors = []
        for name in ("sub_rate", "del_rate", "ins_rate"):
            value = getattr(self, name)
            if not (0.0 <= value <= 1.0):
                errors.append(f"{name} 必须在 0-1 之间: {value}")
        if self.sub_rate + self.del_rate + self.ins_rate > 1.0 + 1e-12:
            errors.append("sub_rate + del_rate + ins_rate 不能超过 1")
        if errors:
            raise ConfigValidationError("NoiseConfig 验证失败", {"errors": errors})


@dataclass
class SynthConfig(_ConfigMixin):
    """合成语料生成配置"""
    vocab_size: int = 200
    ambiguous_fraction: float = 0.5
    n_train: int = 20000
    n_test: int = 1000
    len_min: int = 3
    len_max: int = 10
    constraint_rate: float = 0.25
    sub_rate: float = 0.1
    del_rate: float = 0.05
    ins_rate: float = 0.05
    synonyms_per_word: int = 1
    antonyms_per_word: int = 1
    emulate_mt: bool = True       # 额外输出 constrained / plain MT 列用于级联实验

    @property
    def noise(self) -> NoiseConfig:
        return NoiseConfig(self.sub_rate, self.del_rate, self.ins_rate)

    def validate(self) -> None:
        errors = []
        if self.vocab_size < 1:
            errors.append(f"vocab_size 必须 ≥ 1: {self.vocab_size}")
        if not (0.0 <= self.ambiguous_fraction <= 1.0):
            errors.append(f"ambiguous_fraction 必须在 0-1 之间: {self.ambiguous_fraction}")
        if self.n_train < 0 or self.n_test < 0:
            errors.append("n_train / n_test 不能为负数")
        if not (1 <= self.len_min <= self.len_max <= 100):
            errors.append(f"长度区间必须满足 1 ≤ len_min ≤ len_max ≤ 100: [{self.len_min}, {self.len_max}]")
        if not (0.0 <= self.constraint_rate <= 1.0):
            errors.append(f"constraint_rate 必须在 0-1 之间: {self.constraint_rate}")
        if self.synonyms_per_word < 1 or self.antonyms_per_word < 1:
            errors.append("synonyms_per_word / antonyms_per_word 必须 ≥ 1")
        try:
            self.noise.validate()
        except ConfigValidationError as e:
            errors.extend(e.details.get("errors", []))
        if errors:
            raise ConfigValidationError("SynthConfig 验证失败", {"errors": errors})


@dataclass
class SubwordConfig(_ConfigMixin):
    """BPE 配置；真实数据建议 32000。num_merges 为 0 时是字符级，整词单元用 word_level"""
    num_merges: int = 500
    word_level: bool = False

    def validate(self) -> None:
        if self.num_merges < 0:
            raise ConfigValidationError("SubwordConfig 验证失败", {"errors": [f"num_merges 不能为负数: {self.num_merges}"]})


@dataclass
class TermMineConfig(_ConfigMixin):
    """术语挖掘配置"""
    keep_rate: float = 0.25
    stemmer: str = "suffix"                # suffix / snowball / none
    snowball_language: str = "english"
    target_snowball_language: str = "german"
    source_stoplist: Optional[str] = None  # 文件路径，None 使用内置表
    target_stoplist: Optional[str] = None
    test_fraction: float = 0.5

    def validate(self) -> None:
        errors = []
        if not (0.0 <= self.keep_rate <= 1.0):
            errors.append(f"keep_rate 必须在 0-1 之间: {self.keep_rate}")
        if self.stemmer not in ("suffix", "snowball", "none"):
            errors.append(f"stemmer 必须是 suffix/snowball/none: {self.stemmer}")
        if not (0.0 < self.test_fraction < 1.0):
            errors.append(f"test_fraction 必须在 (0,1) 之间: {self.test_fraction}")
        if errors:
            raise ConfigValidationError("TermMineConfig 验证失败", {"errors": errors})


# ------------------------------------------------------------------
# 模型结构配置
# ------------------------------------------------------------------
@dataclass
class ArchitectureConfig(_ConfigMixin):
    """
    Transformer 结构参数（MST / LevT 共用）
    因子嵌入从 d_model 中切出：token 嵌入宽度 = d_model - factor_embed_dim
    """
    d_model: int = 64
    n_heads: int = 2
    n_layers: int = 2
    ffn_dim: int = 128
    factor_embed_dim: int = 16
    dropout: float = 0.1
    max_len: int = 256
    variant: EncoderVariant = EncoderVariant.PLAIN

    def __post_init__(self):
        if isinstance(self.variant, str):
            self.variant = EncoderVariant.from_string(self.variant)

    def _architecture_errors(self) -> List[str]:
        errors = []
        for name in ("d_model", "n_heads", "n_layers", "ffn_dim", "max_len"):
            if getattr(self, name) < 1:
                errors.append(f"{name} 必须是正整数: {getattr(self, name)}")
        if self.n_heads >= 1 and self.d_model % self.n_heads != 0:
            errors.append(f"d_model({self.d_model}) 必须能被 n_heads({self.n_heads}) 整除")
        if self.factor_embed_dim < 1:
            errors.append(f"factor_embed_dim 必须 ≥ 1: {self.factor_embed_dim}")
        elif self.factor_embed_dim >= self.d_model:
            errors.append(f"factor_embed_dim({self.factor_embed_dim}) 必须小于 d_model({self.d_model})")
        if not (0.0 <= self.dropout < 1.0):
            errors.append(f"dropout 必须在 [0,1) 之间: {self.dropout}")
        return errors

    def validate(self) -> None:
        errors = self._architecture_errors()
        if errors:
            raise ConfigValidationError(f"{self.__class__.__name__} 验证失败", {"errors": errors})


@dataclass
class MSTConfig(ArchitectureConfig):
    """多源 Transformer 配置"""


@dataclass
class LevTConfig(ArchitectureConfig):
    """Levenshtein Transformer 配置"""
    max_iterations: int = 10
    max_insert_per_slot: int = 16
    init_strategy: InitStrategy = InitStrategy.MT
    protect_constraints: bool = False
    multi_source: bool = False

    def __post_init__(self):
        super().__post_init__()
        if isinstance(self.init_strategy, str):
            self.init_strategy = InitStrategy.from_string(self.init_strategy)

    def validate(self) -> None:
        errors = self._architecture_errors()
        if self.max_iterations < 1:
            errors.append(f"max_iterations 必须 ≥ 1: {self.max_iterations}")
        if self.max_insert_per_slot < 1:
            errors.append(f"max_insert_per_slot 必须 ≥ 1: {self.max_insert_per_slot}")
        if errors:
            raise ConfigValidationError("LevTConfig 验证失败", {"errors": errors})


# ------------------------------------------------------------------
# 训练 / 调度 / 解码 / 评测
# ------------------------------------------------------------------
@dataclass
class TrainConfig(_ConfigMixin):
    """训练配置：Adam + 逆平方根预热 + 标签平滑"""
    steps: int = 2000
    batch_size: int = 32
    learning_rate: float = 5e-4
    warmup_steps: int = 400
    label_smoothing: float = 0.1
    clip_norm: float = 1.0
    log_every: int = 50
    seed: int = 1
    rollin_warmup_steps: int = 300     # LevT：之后才启用模型自身插入输出作为 roll-in
    rollin_model_prob: float = 0.5
    rollin_delete_prob: float = 0.5
    plot_loss_curve: bool = True

    def validate(self) -> None:
        errors = []
        if self.steps < 0:
            errors.append(f"steps 不能为负数: {self.steps}")
        if self.batch_size < 1:
            errors.append(f"batch_size 必须 ≥ 1: {self.batch_size}")
        if self.learning_rate <= 0:
            errors.append(f"learning_rate 必须大于 0: {self.learning_rate}")
        if self.warmup_steps < 1:
            errors.append(f"warmup_steps 必须 ≥ 1: {self.warmup_steps}")
        if not (0.0 <= self.label_smoothing < 1.0):
            errors.append(f"label_smoothing 必须在 [0,1) 之间: {self.label_smoothing}")
        if self.log_every < 1:
            errors.append(f"log_every 必须 ≥ 1: {self.log_every}")
        for name in ("rollin_model_prob", "rollin_delete_prob"):
            if not (0.0 <= getattr(self, name) <= 1.0):
                errors.append(f"{name} 必须在 0-1 之间: {getattr(self, name)}")
        if errors:
            raise ConfigValidationError("TrainConfig 验证失败", {"errors": errors})


@dataclass
class ScheduleConfig(_ConfigMixin):
    """两阶段训练调度：预训练 → 上采样微调"""
    pretrain_corpus: Optional[str] = None     # 语料前缀
    finetune_corpus: Optional[str] = None
    upsample_factor: int = 10
    pretrain_steps: int = 2000
    finetune_steps: int = 0
    pretrain_subset_size: Optional[int] = None  # None 表示第二阶段拼接全部预训练语料
    augment_corpus: Optional[str] = None      # 增强语料前缀，拼接进预训练数据
    augment_finetune: bool = False            # 第二阶段同样拼接增强语料
    seed: int = 1

    def validate(self) -> None:
        errors = []
        if self.upsample_factor < 1:
            errors.append(f"upsample_factor 必须 ≥ 1: {self.upsample_factor}")
        if self.pretrain_steps < 0 or self.finetune_steps < 0:
            errors.append("步数预算不能为负数")
        if self.pretrain_subset_size is not None and self.pretrain_subset_size < 0:
            errors.append(f"pretrain_subset_size 不能为负数: {self.pretrain_subset_size}")
        if errors:
            raise ConfigValidationError("ScheduleConfig 验证失败", {"errors": errors})


@dataclass
class DecodeConfig(_ConfigMixin):
    """解码配置"""
    beam_size: int = 4
    max_len: int = 200
    init_strategy: Optional[str] = None      # LevT：None 使用检查点中的配置
    protect_constraints: Optional[bool] = None
    use_constraints: bool = True             # False 时忽略约束解码

    def validate(self) -> None:
        errors = []
        if self.beam_size < 1:
            errors.append(f"beam_size 必须 ≥ 1: {self.beam_size}")
        if self.max_len < 1:
            errors.append(f"max_len 必须 ≥ 1: {self.max_len}")
        if self.init_strategy is not None:
            try:
                InitStrategy.from_string(self.init_strategy)
            except ConfigValidationError as e:
                errors.extend(e.details.get("errors", []))
        if errors:
            raise ConfigValidationError("DecodeConfig 验证失败", {"errors": errors})


@dataclass
class EvalConfig(_ConfigMixin):
    """评测配置"""
    allow_shifts: bool = True
    max_n: int = 4

    def validate(self) -> None:
        if self.max_n < 1:
            raise ConfigValidationError("EvalConfig 验证失败", {"errors": [f"max_n 必须 ≥ 1: {self.max_n}"]})


__all__ = [
    'EncoderVariant', 'InitStrategy', 'ModelKind',
    'LoggingConfig', 'NoiseConfig', 'SynthConfig', 'SubwordConfig', 'TermMineConfig',
    'ArchitectureConfig', 'MSTConfig', 'LevTConfig',
    'TrainConfig', 'ScheduleConfig', 'DecodeConfig', 'EvalConfig'
]
