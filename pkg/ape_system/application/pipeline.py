# ape_system/application/pipeline.py
"""
训练与评测编排

功能概述：
    1. run_schedule：两阶段训练（预训练 → 上采样微调语料 + 预训练子集），输出两个检查点与运行清单
    2. do_nothing：MT 输出直接作为后编辑结果的基线
    3. run_cascade：{MT, 约束 MT} × {不后编辑, APE, 约束 APE} 六种级联组合的评测
    4. run_probes：同义 / 反义 / 随机约束探针与稳定性
    5. format_table / probe_table：结果表（pandas 对齐列）
"""

from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional, Sequence, Tuple, Union

import pandas as pd

from ape_system.core.config import ConfigManager
from ape_system.core.events import EventBus, EventType, event_bus
from ape_system.core.exceptions import ConfigNotFoundError, ConfigValidationError
from ape_system.core.model_config import (
    ArchitectureConfig, DecodeConfig, EncoderVariant, EvalConfig, InitStrategy, ModelKind, ScheduleConfig
)
from ape_system.domain.analysis.metrics import evaluate, stability
from ape_system.domain.entities.corpus import Corpus, Sentence, join, take, upsample
from ape_system.domain.entities.encoded_source import ModelInput
from ape_system.domain.entities.report import EvalReport
from ape_system.domain.entities.vocabulary import Vocabulary
from ape_system.domain.models.model_factory import build_model
from ape_system.domain.services.augmentation import ProbeKind, build_probe_set
from ape_system.domain.services.encoding import prepare_inputs
from ape_system.domain.services.subword import CONTINUATION, BPEModel, bpe_train
from ape_system.infrastructure.checkpoint_store import LoadedCheckpoint, load_checkpoint
from ape_system.infrastructure.data.manager import (
    CONSTRAINTS_SUFFIX, CORPUS_SUFFIXES, get_data_manager
)
from ape_system.utils.logger import get_logger
from .training_monitor import plot_loss_curve
from .use_cases.postedit_use_case import PosteditUseCase, do_nothing
from .use_cases.training_engine import TrainingEngine, TrainState

logger = get_logger(__name__)

PathLike = Union[str, Path]
MS_LEVT = "ms-levt"


# ============================================================================
# 数据准备
# ============================================================================

def learn_bpe(corpora: Sequence[Corpus], num_merges: int, word_level: bool = False) -> Optional[BPEModel]:
    """
    在全部训练语料的 src / mt / pe 与约束目标短语上联合学习

    num_merges 为 0 时得到字符级切分（与 bpe_train 一致）；word_level 为真时返回 None，直接使用整词。
    """
    if word_level:
        return None
    sentences: List[Sequence[str]] = []
    for corpus in corpora:
        for t in corpus:
            sentences.extend([t.src.tokens, t.mt.tokens, t.pe.tokens])
            sentences.extend(c.tgt_phrase.tokens for c in t.constraints)
    return bpe_train(sentences, num_merges)


def build_vocabulary(inputs: Sequence[ModelInput], bpe: Optional[BPEModel] = None) -> Vocabulary:
    """
    联合词表

    子词模式下额外加入每个字符及其续接形式，保证训练中未出现的术语也能逐字符拼出。
    """
    sequences: List[Sequence[str]] = []
    for inp in inputs:
        sequences.extend([inp.source.tokens, inp.mt.tokens, inp.target])
        sequences.extend(inp.constraint_phrases)
    if bpe is not None:
        chars = sorted({ch for seq in sequences for tok in seq for ch in tok.replace(CONTINUATION, "")})
        sequences.append([ch for c in chars for ch in (c, c + CONTINUATION)])
    return Vocabulary.build(sequences)


def resolve_model_config(config: ConfigManager, kind: Union[ModelKind, str],
                         variant: Union[EncoderVariant, str]) -> ArchitectureConfig:
    """
    模型配置：kind 段 + 编码变体

    "ms-levt" 表示双编码器 LevT：源端不加约束编码，解码从按序拼接的约束目标短语开始。
    """
    kind = ModelKind.from_string(kind) if isinstance(kind, str) else kind
    if isinstance(variant, str) and variant.strip().lower() == MS_LEVT:
        if kind != ModelKind.LEVT:
            raise ConfigValidationError("ms-levt 只能用于 levt", {"errors": [f"kind={kind.value}, variant=ms-levt"]})
        return replace(config.levt, variant=EncoderVariant.PLAIN, multi_source=True,
                       init_strategy=InitStrategy.CONSTRAINTS)
    if isinstance(variant, str):
        variant = EncoderVariant.from_string(variant)
    base = config.mst if kind == ModelKind.MST else config.levt
    return replace(base, variant=variant)


def _corpus_files(prefix: Optional[str]) -> List[Path]:
    if not prefix:
        return []
    prefix = Path(prefix)
    candidates = [prefix.with_name(f"{prefix.name}.{s}") for s in CORPUS_SUFFIXES + (CONSTRAINTS_SUFFIX,)]
    return [p for p in candidates if p.is_file()]


# ============================================================================
# 两阶段训练
# ============================================================================

@dataclass
class ScheduleResult:
    """调度结果"""
    kind: ModelKind
    variant: str
    checkpoints: Dict[str, Path] = field(default_factory=dict)
    states: List[TrainState] = field(default_factory=list)
    manifest: Optional[Path] = None

    @property
    def final_checkpoint(self) -> Path:
        return self.checkpoints.get("finetune") or self.checkpoints["pretrain"]


class TrainingPipeline:
    """按 ScheduleConfig 训练一个模型"""

    def __init__(self, config: ConfigManager, bus: EventBus = event_bus, show_progress: bool = True):
        self.config = config
        self.bus = bus
        self.show_progress = show_progress
        self.logger = get_logger(__name__)
        self.data_manager = get_data_manager()

    def _load(self, prefix: Optional[str], key: str, required: bool) -> Optional[Corpus]:
        if not prefix:
            if required:
                raise ConfigValidationError(f"未指定 {key}", {"errors": [f"{key} 不能为空"]})
            return None
        if not _corpus_files(prefix):
            raise ConfigNotFoundError(f"{key} 指向的语料不存在: {prefix}", path=str(prefix))
        return self.data_manager.load_corpus_prefix(prefix)

    def phase_corpora(self, schedule: ScheduleConfig, pretrain: Corpus, finetune: Optional[Corpus] = None,
                      augmented: Optional[Corpus] = None) -> Tuple[Corpus, Optional[Corpus]]:
        """
        两个阶段的训练语料

        第一阶段：预训练语料（可拼接增强语料）；
        第二阶段：上采样的微调语料 + 预训练子集（可拼接增强语料），无微调语料或步数为 0 时为 None。
        """
        phase1 = join(pretrain, augmented, f"{pretrain.name}+aug") if augmented is not None else pretrain
        if finetune is None or schedule.finetune_steps == 0:
            return phase1, None
        subset = (take(pretrain, schedule.pretrain_subset_size, schedule.seed)
                  if schedule.pretrain_subset_size is not None else pretrain)
        phase2 = join(upsample(finetune, schedule.upsample_factor), subset)
        if augmented is not None and schedule.augment_finetune:
            phase2 = join(phase2, augmented)
        return phase1, phase2

    def run_schedule(self, kind: Union[ModelKind, str], variant: Union[EncoderVariant, str],
                     schedule: Optional[ScheduleConfig] = None, output_dir: Optional[PathLike] = None,
                     pretrain: Optional[Corpus] = None, finetune: Optional[Corpus] = None,
                     augmented: Optional[Corpus] = None) -> ScheduleResult:
        """
        两阶段训练

        Raises:
            ConfigValidationError / ConfigNotFoundError: 语料未指定或不存在
        """
        schedule = schedule or self.config.schedule
        schedule.validate()
        kind = ModelKind.from_string(kind) if isinstance(kind, str) else kind
        variant_name = variant.value if isinstance(variant, EncoderVariant) else str(variant).lower()
        output_dir = Path(output_dir) if output_dir is not None else self.config.output_dir
        train = self.config.train

        if pretrain is None:
            pretrain = self._load(schedule.pretrain_corpus, "schedule.pretrain_corpus", True)
        if finetune is None:
            finetune = self._load(schedule.finetune_corpus, "schedule.finetune_corpus", False)
        if augmented is None:
            augmented = self._load(schedule.augment_corpus, "schedule.augment_corpus", False)
        phase1, phase2 = self.phase_corpora(schedule, pretrain, finetune, augmented)

        model_config = resolve_model_config(self.config, kind, variant)
        bpe = learn_bpe([c for c in (phase1, phase2) if c is not None], self.config.subword.num_merges,
                        self.config.subword.word_level)
        inputs1 = prepare_inputs(phase1.triplets, model_config.variant, bpe)
        inputs2 = prepare_inputs(phase2.triplets, model_config.variant, bpe) if phase2 is not None else []
        vocab = build_vocabulary(inputs1 + inputs2, bpe)
        model = build_model(kind, model_config, vocab, seed=train.seed)

        self.bus.emit(EventType.TRAIN_STARTED, phase="pretrain", kind=kind.value, variant=variant_name)
        self.logger.info(f"🚀 调度 {kind.value}/{variant_name}: 第一阶段 {len(phase1)} 句"
                         + (f"，第二阶段 {len(phase2)} 句" if phase2 is not None else ""))
        engine = TrainingEngine(model, train, self.bus, self.show_progress)
        result = ScheduleResult(kind, variant_name)
        meta = {"kind": kind.value, "variant": variant_name, "seed": train.seed}

        phases = [("pretrain", inputs1, schedule.pretrain_steps, schedule.seed)]
        if phase2 is not None:
            phases.append(("finetune", inputs2, schedule.finetune_steps, schedule.seed + 1))
        for phase, inputs, steps, seed in phases:
            state = engine.fit(inputs, steps, phase, seed)
            result.states.append(state)
            result.checkpoints[phase] = engine.save(output_dir / f"{phase}.pt", state, bpe, meta)
            if train.plot_loss_curve and state.history:
                plot_loss_curve(state.history, output_dir / f"loss_curve_{phase}.png", f"{kind.value} {phase}")

        params = {
            "kind": kind.value,
            "variant": variant_name,
            "seed": self.config.seed,
            "model": model_config.to_dict(),
            "train": train.to_dict(),
            "schedule": schedule.to_dict(),
            "subword": self.config.subword.to_dict(),
            "corpora": {"pretrain": len(pretrain), "finetune": len(finetune) if finetune else 0,
                        "augmented": len(augmented) if augmented else 0,
                        "phase1": len(phase1), "phase2": len(phase2) if phase2 is not None else 0},
            "vocab_size": len(vocab),
            "final_losses": {s.phase: s.final_loss for s in result.states},
        }
        inputs_files = [f for p in (schedule.pretrain_corpus, schedule.finetune_corpus, schedule.augment_corpus)
                        for f in _corpus_files(p)]
        result.manifest = self.data_manager.write_manifest(
            output_dir, params, list(result.checkpoints.values()) + inputs_files)
        self.logger.info(f"✅ 调度完成，最终检查点 {result.final_checkpoint}")
        return result


def run_schedule(config: ConfigManager, kind: Union[ModelKind, str], variant: Union[EncoderVariant, str],
                 **kwargs) -> ScheduleResult:
    return TrainingPipeline(config).run_schedule(kind, variant, **kwargs)


# ============================================================================
# 级联评测
# ============================================================================

MT_VARIANTS = ("plain", "constrained")
APE_VARIANTS = ("none", "plain", "constrained")
_MT_LABELS = {"plain": "MT", "constrained": "cMT"}
_APE_LABELS = {"none": "No APE", "plain": "APE", "constrained": "cAPE"}


@dataclass(frozen=True)
class CascadeSpec:
    """级联组合：上游 MT 是否受约束 × 后编辑方式"""
    mt_variant: str
    ape_variant: str

    def __post_init__(self):
        errors = []
        if self.mt_variant not in MT_VARIANTS:
            errors.append(f"mt_variant 必须是 {MT_VARIANTS}: {self.mt_variant}")
        if self.ape_variant not in APE_VARIANTS:
            errors.append(f"ape_variant 必须是 {APE_VARIANTS}: {self.ape_variant}")
        if errors:
            raise ConfigValidationError("CascadeSpec 无效", {"errors": errors})

    @classmethod
    def all(cls) -> List['CascadeSpec']:
        return [cls(mt, ape) for mt in MT_VARIANTS for ape in APE_VARIANTS]

    @classmethod
    def parse(cls, text: str) -> 'CascadeSpec':
        """"constrained:plain" 形式"""
        mt, sep, ape = text.partition(":")
        if not sep:
            raise ConfigValidationError(f"级联组合格式应为 MT:APE: {text}", {"errors": [text]})
        return cls(mt.strip().lower(), ape.strip().lower())

    @property
    def label(self) -> str:
        return f"{_MT_LABELS[self.mt_variant]} → {_APE_LABELS[self.ape_variant]}"


def run_cascade(spec: CascadeSpec, mt_outputs: Mapping[str, Sequence[Sentence]],
                ape_checkpoints: Mapping[str, Union[LoadedCheckpoint, PathLike]], testset: Corpus,
                decode: Optional[DecodeConfig] = None, eval_config: Optional[EvalConfig] = None) -> EvalReport:
    """
    评测一种级联组合；Term% 始终针对测试集约束

    Raises:
        ConfigValidationError: 缺少该组合所需的 MT 输出或检查点
    """
    eval_config = eval_config or EvalConfig()
    if spec.mt_variant not in mt_outputs:
        raise ConfigValidationError(f"缺少 {spec.mt_variant} MT 输出", {"errors": [spec.label]})
    mts = list(mt_outputs[spec.mt_variant])
    corpus = testset.with_mt_column(mts)
    if spec.ape_variant == "none":
        hyps = do_nothing(corpus)
    else:
        if spec.ape_variant not in ape_checkpoints:
            raise ConfigValidationError(f"缺少 {spec.ape_variant} APE 检查点", {"errors": [spec.label]})
        checkpoint = ape_checkpoints[spec.ape_variant]
        if not isinstance(checkpoint, LoadedCheckpoint):
            checkpoint = load_checkpoint(checkpoint)
        hyps = PosteditUseCase(checkpoint, decode).run(corpus).hypotheses
    report = evaluate(hyps, testset.pes, testset.constraint_sets, eval_config.allow_shifts, eval_config.max_n)
    logger.info(f"📊 {spec.label}: TER {report.ter:.4f} BLEU {report.bleu:.2f} Term% {report.term_pct}")
    return report


def run_cascades(specs: Sequence[CascadeSpec], mt_outputs: Mapping[str, Sequence[Sentence]],
                 ape_checkpoints: Mapping[str, Union[LoadedCheckpoint, PathLike]], testset: Corpus,
                 decode: Optional[DecodeConfig] = None,
                 eval_config: Optional[EvalConfig] = None) -> List[Tuple[CascadeSpec, EvalReport]]:
    loaded = {k: (v if isinstance(v, LoadedCheckpoint) else load_checkpoint(v)) for k, v in ape_checkpoints.items()}
    return [(spec, run_cascade(spec, mt_outputs, loaded, testset, decode, eval_config)) for spec in specs]


# ============================================================================
# 约束探针
# ============================================================================

@dataclass(frozen=True)
class ProbeRow:
    """一种探针的评测结果；稳定性以原约束下的输出为参考"""
    kind: ProbeKind
    report: EvalReport
    stability_ter: float
    stability_bleu: float
    n_dropped: int = 0


def run_probes(checkpoint: Union[LoadedCheckpoint, PathLike], testset: Corpus, lexicons,
               kinds: Sequence[Union[ProbeKind, str]], seed: int, decode: Optional[DecodeConfig] = None,
               eval_config: Optional[EvalConfig] = None,
               target_vocabulary: Optional[Sequence[str]] = None) -> List[ProbeRow]:
    eval_config = eval_config or EvalConfig()
    use_case = PosteditUseCase(checkpoint, decode)
    original = use_case.run(testset).hypotheses
    by_id = {t.id: h for t, h in zip(testset, original)}

    rows = []
    for kind in kinds:
        kind = ProbeKind.from_string(kind) if isinstance(kind, str) else kind
        if kind == ProbeKind.ORIGINAL:
            probe_corpus, outputs, n_dropped = testset, original, 0
        else:
            probe = build_probe_set(testset, kind, lexicons, seed, target_vocabulary)
            probe_corpus, n_dropped = probe.corpus, probe.n_dropped
            if not len(probe_corpus):
                logger.warning(f"⚠️ 探针 {kind.value} 没有可替换的约束，跳过", {"dropped": n_dropped})
                continue
            outputs = use_case.run(probe_corpus).hypotheses
        report = evaluate(outputs, probe_corpus.pes, probe_corpus.constraint_sets,
                          eval_config.allow_shifts, eval_config.max_n)
        references = [by_id[t.id] for t in probe_corpus]
        stab_ter, stab_bleu = stability(outputs, references, eval_config.allow_shifts, eval_config.max_n)
        rows.append(ProbeRow(kind, report, stab_ter, stab_bleu, n_dropped))
    return rows


# ============================================================================
# 结果表
# ============================================================================

def _fmt_term(value: Optional[float]) -> str:
    return "-" if value is None else f"{value:.2f}"


def format_table(rows: Sequence[Tuple[str, EvalReport]]) -> str:
    """System / TER / BLEU / Term% 对齐列；TER 以百分数显示"""
    frame = pd.DataFrame([
        {"System": name, "TER": f"{report.ter * 100:.2f}", "BLEU": f"{report.bleu:.2f}",
         "Term%": _fmt_term(report.term_pct)}
        for name, report in rows
    ], columns=["System", "TER", "BLEU", "Term%"])
    return frame.to_string(index=False)


def probe_table(rows: Sequence[ProbeRow]) -> str:
    frame = pd.DataFrame([
        {"Probe": row.kind.value, "TER": f"{row.report.ter * 100:.2f}", "BLEU": f"{row.report.bleu:.2f}",
         "Term%": _fmt_term(row.report.term_pct), "Stab.TER": f"{row.stability_ter * 100:.2f}",
         "Stab.BLEU": f"{row.stability_bleu:.2f}", "Dropped": row.n_dropped}
        for row in rows
    ], columns=["Probe", "TER", "BLEU", "Term%", "Stab.TER", "Stab.BLEU", "Dropped"])
    return frame.to_string(index=False)


__all__ = [
    'MS_LEVT', 'learn_bpe', 'build_vocabulary', 'resolve_model_config',
    'ScheduleResult', 'TrainingPipeline', 'run_schedule', 'do_nothing',
    'MT_VARIANTS', 'APE_VARIANTS', 'CascadeSpec', 'run_cascade', 'run_cascades',
    'ProbeRow', 'run_probes', 'format_table', 'probe_table'
]
