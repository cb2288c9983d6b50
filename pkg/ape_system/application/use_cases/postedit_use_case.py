# ape_system/application/use_cases/postedit_use_case.py
"""
后编辑用例
检查点 + 测试集 → 整词级假设；LevT 可同时输出编辑轨迹
"""

from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional, Union

from ape_system.core.model_config import DecodeConfig
from ape_system.domain.entities.corpus import Corpus, Sentence
from ape_system.domain.models.base import Hypothesis
from ape_system.domain.services.encoding import prepare_inputs
from ape_system.domain.services.subword import bpe_restore
from ape_system.infrastructure.checkpoint_store import LoadedCheckpoint, load_checkpoint
from ape_system.infrastructure.data.manager import get_data_manager
from ape_system.utils.logger import get_logger
from ape_system.utils.monitoring import Timer


@dataclass
class PosteditResult:
    """后编辑输出"""
    hypotheses: List[Sentence]
    truncated_ids: List[int] = field(default_factory=list)
    trace: List[str] = field(default_factory=list)

    @property
    def n_truncated(self) -> int:
        return len(self.truncated_ids)


class PosteditUseCase:
    """用已训练模型后编辑一个语料"""

    def __init__(self, checkpoint: Union[LoadedCheckpoint, str, Path], decode: Optional[DecodeConfig] = None):
        self.logger = get_logger(__name__)
        self.checkpoint = checkpoint if isinstance(checkpoint, LoadedCheckpoint) else load_checkpoint(checkpoint)
        self.decode = decode or DecodeConfig()
        self.decode.validate()

    @property
    def model(self):
        return self.checkpoint.model

    def _to_words(self, hypothesis: Hypothesis) -> Sentence:
        tokens = hypothesis.sentence.tokens
        if self.checkpoint.bpe is not None:
            tokens = bpe_restore(tokens)
        return Sentence(tuple(t for t in tokens if t))

    def run(self, corpus: Corpus, collect_trace: bool = False) -> PosteditResult:
        model = self.model
        inputs = prepare_inputs(corpus.triplets, model.config.variant, self.checkpoint.bpe,
                                use_constraints=self.decode.use_constraints, with_target=False)
        trace: Optional[List[str]] = [] if collect_trace else None
        self.logger.info(f"🚀 后编辑 {corpus.name}: {len(inputs)} 句 ({model.kind.value}, {model.config.variant.value})")
        with Timer(f"postedit_{model.kind.value}") as timer:
            hypotheses = model.postedit(inputs, self.decode, trace=trace)
            timer.add_items(len(inputs))

        truncated = [inp.id for inp, hyp in zip(inputs, hypotheses) if hyp.truncated]
        if truncated:
            self.logger.warning(f"⚠️ {len(truncated)} 句达到长度 / 迭代上限", {"truncated": len(truncated)})
        result = PosteditResult([self._to_words(h) for h in hypotheses], truncated, trace or [])
        self.logger.info(f"✅ 后编辑完成: {len(result.hypotheses)} 句")
        return result

    def run_to_files(self, corpus: Corpus, output_path: Union[str, Path],
                     trace_path: Optional[Union[str, Path]] = None) -> PosteditResult:
        result = self.run(corpus, collect_trace=trace_path is not None)
        data_manager = get_data_manager()
        data_manager.save_sentences(output_path, result.hypotheses)
        if trace_path is not None:
            data_manager.write_lines(trace_path, result.trace)
        return result


def do_nothing(testset: Corpus) -> List[Sentence]:
    """不做后编辑：直接把 MT 输出当作结果"""
    return list(testset.mts)


__all__ = ['PosteditResult', 'PosteditUseCase', 'do_nothing']
