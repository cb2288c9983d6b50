#/ape_system/main.py
"""
APE 工具包命令行入口

子命令：
    gen-synthetic   合成词典 / 语料 / 关系词表（可附带模拟的级联 MT 列）
    mine-terms      词典 + 语料 → 约束 JSONL
    split-dict      词典划分为训练 / 测试两部分
    encode          append / replace 编码的调试输出
    bpe-train       学习 BPE（可同时训练 truecaser）
    bpe-apply       应用 / 还原 BPE
    train           两阶段训练 MST / LevT
    postedit        用检查点后编辑测试集
    augment         同义 / 反义数据增强
    probe           约束探针语料及其评测
    evaluate        TER / BLEU / Term%
    cascade         {MT, cMT} × {不后编辑, APE, cAPE} 级联评测

配置优先级：包内默认值 < --config 文件 < --set key=value < 命令行参数。
失败时在 stderr 输出一行 JSON：{"error_category", "error_code", "message"}；
退出码 0 成功，2 配置错误，3 数据错误，4 数值异常，其余 1。

┌──────────────────────┐
│ argparse 子命令        │
└──────────┬───────────┘
           ▼
┌──────────────────────┐
│ ConfigManager         │ 合并配置、拒绝未知键、写 resolved_config.yaml
└──────────┬───────────┘
           ▼
┌──────────────────────┐
│ CommandRunner         │ 每个子命令一个方法
└──────────┬───────────┘
           ▼
┌──────────────────────┐
│ application / domain  │ 训练调度、后编辑、评测
└──────────────────────┘
"""

import argparse
import json
import os
import sys
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Sequence

# 添加项目根目录到Python路径
current_dir = os.path.dirname(os.path.abspath(__file__))
project_root = os.path.dirname(current_dir)
if project_root not in sys.path:
    sys.path.insert(0, project_root)

from ape_system import __version__
from ape_system.application.pipeline import (
    APE_VARIANTS, MS_LEVT, CascadeSpec, TrainingPipeline, format_table, probe_table, run_cascades, run_probes
)
from ape_system.application.training_monitor import TrainingMonitor
from ape_system.application.use_cases.postedit_use_case import PosteditUseCase
from ape_system.core.config import ConfigManager
from ape_system.core.exceptions import (
    ApeSystemError, ConfigValidationError, DataAlignmentError, exit_code_for, get_error_category
)
from ape_system.core.model_config import EncoderVariant
from ape_system.domain.analysis.metrics import evaluate
from ape_system.domain.entities.corpus import Corpus, ConstraintSet
from ape_system.domain.services.augmentation import ProbeKind, augment_corpus, build_probe_set, count_combinations
from ape_system.domain.services.encoding import encode_source, segment_encoded
from ape_system.domain.services.subword import TruecaseModel, bpe_restore, bpe_train
from ape_system.domain.services.synthgen import (
    emulate_mt, gen_corpus, gen_lexicon, gen_relation_lexicons, lexicon_dictionary_pairs
)
from ape_system.domain.services.termmine import (
    ENGLISH_STOPWORDS, GERMAN_STOPWORDS, StopList, TermMiner, make_stemmer, split_dictionary, subsample_constraints
)
from ape_system.infrastructure.data.manager import get_data_manager
from ape_system.utils.logger import LogRotationConfig, get_logger, setup_logger
from ape_system.utils.monitoring import generate_performance_report

logger = get_logger(__name__)

KINDS = ("mst", "levt")
VARIANTS = ("plain", "append", "replace", MS_LEVT)
PROBE_KINDS = tuple(k.value for k in ProbeKind)


# ============================================================================
# 参数解析
# ============================================================================

def _flag(parser: argparse.ArgumentParser, name: str, dest: str, help_text: str, **kwargs):
    """映射到配置键的参数：dest 为点分键，默认 None 表示不覆盖"""
    parser.add_argument(name, dest=dest, default=None, help=f"{help_text} [{dest}]", **kwargs)


class CliArgumentParser(argparse.ArgumentParser):
    """用法错误转成 ConfigValidationError，由 main 统一输出 JSON 错误行（退出码 2）"""

    def error(self, message: str):
        raise ConfigValidationError(f"{self.prog}: {message}", {"errors": [message]})


def build_parser() -> argparse.ArgumentParser:
    common = CliArgumentParser(add_help=False)
    common.add_argument("--config", default=None, help="YAML 配置文件")
    common.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                        help="覆盖配置项，可重复，如 --set train.steps=500")
    _flag(common, "--seed", "run.seed", "随机种子", type=int)
    _flag(common, "--output-dir", "run.output_dir", "输出目录")
    _flag(common, "--log-level", "system.logging.level", "日志级别",
          choices=("DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"))
    common.add_argument("--no-progress", action="store_true", help="不显示训练进度条")

    parser = CliArgumentParser(prog="ape_system", description="术语约束自动后编辑工具包")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-synthetic", parents=[common], help="生成合成词典、语料与关系词表")
    _flag(p, "--vocab-size", "synthgen.vocab_size", "源端伪词数", type=int)
    _flag(p, "--ambiguous-fraction", "synthgen.ambiguous_fraction", "多义词比例", type=float)
    _flag(p, "--n-train", "synthgen.n_train", "训练三元组数", type=int)
    _flag(p, "--n-test", "synthgen.n_test", "测试三元组数", type=int)
    _flag(p, "--constraint-rate", "synthgen.constraint_rate", "约束抽取率", type=float)

    p = sub.add_parser("mine-terms", parents=[common], help="从词典与语料挖掘约束")
    p.add_argument("--corpus", required=True, help="语料前缀 (prefix.src/.mt/.pe)")
    p.add_argument("--dictionary", required=True, help="词典 TSV")
    p.add_argument("--out", required=True, help="输出约束 JSONL")
    _flag(p, "--keep-rate", "termmine.keep_rate", "约束保留率", type=float)
    _flag(p, "--stemmer", "termmine.stemmer", "词干器", choices=("suffix", "snowball", "none"))

    p = sub.add_parser("split-dict", parents=[common], help="词典划分为训练 / 测试两部分")
    p.add_argument("--dictionary", required=True, help="词典 TSV")
    p.add_argument("--train-out", required=True)
    p.add_argument("--test-out", required=True)
    _flag(p, "--test-fraction", "termmine.test_fraction", "测试部分比例", type=float)

    p = sub.add_parser("encode", parents=[common], help="输出约束编码后的源端（调试格式）")
    p.add_argument("--corpus", required=True, help="语料前缀")
    p.add_argument("--variant", required=True, choices=("plain", "append", "replace"))
    p.add_argument("--bpe", default=None, help="BPE 模型文件，缺省为词级")
    p.add_argument("--out", required=True)

    p = sub.add_parser("bpe-train", parents=[common], help="学习 BPE 合并")
    p.add_argument("--input", required=True, nargs="+", help="分词后的文本文件")
    p.add_argument("--out", required=True, help="BPE 模型文件")
    p.add_argument("--truecase-out", default=None, help="同时训练 truecaser 并写出")
    _flag(p, "--num-merges", "subword.num_merges", "合并次数", type=int)

    p = sub.add_parser("bpe-apply", parents=[common], help="应用或还原 BPE")
    p.add_argument("--model", default=None, help="BPE 模型文件（--restore 时可省略）")
    p.add_argument("--input", required=True)
    p.add_argument("--output", required=True)
    p.add_argument("--truecase-model", default=None, help="先做 truecasing（--restore 时做 detruecase）")
    p.add_argument("--restore", action="store_true", help="把子词还原为整词")

    p = sub.add_parser("train", parents=[common], help="两阶段训练")
    p.add_argument("--kind", required=True, choices=KINDS)
    p.add_argument("--variant", required=True, choices=VARIANTS)
    _flag(p, "--pretrain", "schedule.pretrain_corpus", "预训练语料前缀")
    _flag(p, "--finetune", "schedule.finetune_corpus", "微调语料前缀")
    _flag(p, "--augment", "schedule.augment_corpus", "增强语料前缀")
    _flag(p, "--pretrain-steps", "schedule.pretrain_steps", "预训练步数", type=int)
    _flag(p, "--finetune-steps", "schedule.finetune_steps", "微调步数", type=int)
    p.add_argument("--augment-finetune", dest="schedule.augment_finetune", action="store_const", const=True,
                   default=None, help="增强语料也加入微调阶段 [schedule.augment_finetune]")

    p = sub.add_parser("postedit", parents=[common], help="后编辑测试集")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--testset", required=True, help="测试集前缀")
    p.add_argument("--constraints", default=None, help="覆盖测试集约束的 JSONL")
    p.add_argument("--output", required=True, help="假设输出文件")
    p.add_argument("--trace", default=None, help="LevT 编辑轨迹输出文件")
    _flag(p, "--init", "decode.init_strategy", "LevT 初始状态", choices=("blank", "mt", "constraints"))
    p.add_argument("--protect-constraints", dest="decode.protect_constraints", action="store_const", const=True,
                   default=None, help="禁止删除约束 token [decode.protect_constraints]")
    p.add_argument("--no-constraints", dest="decode.use_constraints", action="store_const", const=False,
                   default=None, help="忽略约束 [decode.use_constraints]")
    _flag(p, "--beam-size", "decode.beam_size", "MST beam 大小", type=int)
    _flag(p, "--max-len", "decode.max_len", "最大输出长度（子词）", type=int)

    p = sub.add_parser("augment", parents=[common], help="同义 / 反义数据增强")
    p.add_argument("--corpus", required=True, help="带约束的语料前缀")
    p.add_argument("--relations", required=True, help="关系词表 TSV")
    p.add_argument("--relation", nargs="+", choices=("synonym", "antonym"), default=["synonym", "antonym"])
    p.add_argument("--max-per-constraint", type=int, default=None)
    p.add_argument("--out", required=True, help="输出语料前缀")

    p = sub.add_parser("probe", parents=[common], help="构建约束探针并可选评测")
    p.add_argument("--testset", required=True, help="测试集前缀")
    p.add_argument("--relations", required=True, help="关系词表 TSV")
    p.add_argument("--kinds", nargs="+", choices=PROBE_KINDS, default=list(PROBE_KINDS))
    p.add_argument("--dictionary", default=None, help="随机探针的目标词来源（词典 TSV 目标端）")
    p.add_argument("--checkpoint", default=None, help="给定时评测探针并输出稳定性")

    p = sub.add_parser("evaluate", parents=[common], help="评测假设文件")
    p.add_argument("--hyp", required=True)
    p.add_argument("--ref", required=True)
    p.add_argument("--constraints", default=None, help="约束 JSONL（Term%%）")
    p.add_argument("--out", default=None, help="报告 JSON 输出文件")
    p.add_argument("--no-shifts", dest="eval.allow_shifts", action="store_const", const=False, default=None,
                   help="TER 不计块位移 [eval.allow_shifts]")

    p = sub.add_parser("cascade", parents=[common], help="级联评测")
    p.add_argument("--testset", required=True, help="测试集前缀（含约束）")
    p.add_argument("--mt-plain", default=None, help="无约束 MT 输出")
    p.add_argument("--mt-constrained", default=None, help="约束 MT 输出")
    p.add_argument("--ape-plain", default=None, help="无约束 APE 检查点")
    p.add_argument("--ape-constrained", default=None, help="约束 APE 检查点")
    p.add_argument("--spec", action="append", default=[], metavar="MT:APE",
                   help="级联组合，如 constrained:plain；缺省为输入齐全的全部组合")
    return parser


def _overrides(args: argparse.Namespace) -> Dict[str, Any]:
    return {k: v for k, v in vars(args).items() if "." in k and v is not None}


# ============================================================================
# 子命令
# ============================================================================

class CommandRunner:
    """执行一个子命令；每个 cmd_* 返回退出码"""

    def __init__(self, config: ConfigManager, args: argparse.Namespace):
        self.config = config
        self.args = args
        self.output_dir = config.output_dir
        self.data = get_data_manager()
        self.logger = get_logger(__name__)

    def _load_testset(self, prefix: str, constraints_path: Optional[str] = None) -> Corpus:
        corpus = self.data.load_corpus_prefix(prefix)
        if constraints_path is None:
            return corpus
        ids = [t.id for t in corpus]
        sets = self.data.load_constraints(constraints_path, expected_ids=ids)
        if len(sets) != len(corpus):
            raise DataAlignmentError(f"{constraints_path} 行数 {len(sets)} 与测试集 {len(corpus)} 不一致",
                                     file_path=str(constraints_path), expected_lines=len(corpus),
                                     actual_lines=len(sets))
        return Corpus(tuple(t.with_constraints(cs) for t, cs in zip(corpus, sets)), corpus.name)

    # ---------- 数据 ----------
    def cmd_gen_synthetic(self) -> int:
        synth, seed, out = self.config.synthgen, self.config.seed, self.output_dir
        lexicon = gen_lexicon(synth.vocab_size, synth.ambiguous_fraction, seed)
        len_range = (synth.len_min, synth.len_max)
        train = gen_corpus(lexicon, synth.n_train, len_range, synth.noise, synth.constraint_rate, seed, "train")
        test = gen_corpus(lexicon, synth.n_test, len_range, synth.noise, synth.constraint_rate, seed + 1, "test")
        relations = gen_relation_lexicons(lexicon, synth.synonyms_per_word, synth.antonyms_per_word, seed)

        files: List[Path] = []
        files.append(self.data.save_dictionary(out / "dictionary.tsv", lexicon_dictionary_pairs(lexicon)))
        files.append(self.data.save_relation_lexicons(out / "relations.tsv", relations))
        files.extend(self.data.save_corpus(train, out / "train").values())
        files.extend(self.data.save_corpus(test, out / "test").values())
        if synth.emulate_mt:
            for constrained, name in ((True, "mt_constrained"), (False, "mt_plain")):
                mts = emulate_mt(lexicon, test, synth.noise, seed, constrained)
                files.append(self.data.save_sentences(out / f"test.{name}", mts))
        params = {"command": "gen-synthetic", "seed": seed, "synthgen": synth.to_dict(),
                  "ambiguous_words": lexicon.n_ambiguous}
        self.data.write_manifest(out, params, files)
        print(str(out))
        return 0

    def cmd_mine_terms(self) -> int:
        termmine = self.config.termmine
        corpus = self.data.load_corpus_prefix(self.args.corpus, with_constraints=False)
        dictionary = self.data.load_dictionary(self.args.dictionary)
        stoplist = StopList(
            self.data.load_stoplist(termmine.source_stoplist) if termmine.source_stoplist else ENGLISH_STOPWORDS,
            self.data.load_stoplist(termmine.target_stoplist) if termmine.target_stoplist else GERMAN_STOPWORDS,
        )
        miner = TermMiner(dictionary, stoplist,
                          make_stemmer(termmine.stemmer, termmine.snowball_language),
                          make_stemmer(termmine.stemmer, termmine.target_snowball_language))
        mined = miner.mine_corpus(corpus)
        kept = subsample_constraints(mined, termmine.keep_rate, self.config.seed)
        path = self.data.save_constraints(self.args.out, kept, ids=[t.id for t in corpus])
        self.logger.info(f"📊 保留 {sum(len(c) for c in kept)} / {sum(len(c) for c in mined)} 条约束")
        print(str(path))
        return 0

    def cmd_split_dict(self) -> int:
        dictionary = self.data.load_dictionary(self.args.dictionary)
        train, test = split_dictionary(dictionary, self.config.termmine.test_fraction, self.config.seed)
        self.data.save_dictionary(self.args.train_out, train)
        self.data.save_dictionary(self.args.test_out, test)
        self.logger.info(f"✅ 词典划分: 训练 {len(train)} 条, 测试 {len(test)} 条")
        return 0

    def cmd_encode(self) -> int:
        corpus = self.data.load_corpus_prefix(self.args.corpus)
        variant = EncoderVariant.from_string(self.args.variant)
        bpe = self.data.load_bpe(self.args.bpe) if self.args.bpe else None
        encoded = [segment_encoded(bpe, encode_source(t.src, t.constraints, variant)) for t in corpus]
        self.data.save_encoded(self.args.out, encoded)
        return 0

    def cmd_bpe_train(self) -> int:
        sentences = [list(s) for path in self.args.input for s in self.data.load_sentences(path)]
        if self.args.truecase_out:
            truecaser = TruecaseModel.train(sentences)
            self.data.save_truecase(self.args.truecase_out, truecaser)
            sentences = [truecaser.apply(s) for s in sentences]
        model = bpe_train(sentences, self.config.subword.num_merges)
        self.data.save_bpe(self.args.out, model)
        self.logger.info(f"✅ BPE: {len(model.merges)} 次合并")
        return 0

    def cmd_bpe_apply(self) -> int:
        truecaser = self.data.load_truecase(self.args.truecase_model) if self.args.truecase_model else None
        sentences = [list(s) for s in self.data.load_sentences(self.args.input)]
        if self.args.restore:
            out = [bpe_restore(s) for s in sentences]
            if truecaser is not None:
                out = [TruecaseModel.detruecase(s) for s in out]
        else:
            if not self.args.model:
                raise ConfigValidationError("bpe-apply 需要 --model", {"errors": ["--model 未指定"]})
            model = self.data.load_bpe(self.args.model)
            if truecaser is not None:
                sentences = [truecaser.apply(s) for s in sentences]
            out = [model.apply_tokens(s) for s in sentences]
        self.data.save_sentences(self.args.output, out)
        return 0

    # ---------- 训练 / 推理 ----------
    def cmd_train(self) -> int:
        pipeline = TrainingPipeline(self.config, show_progress=not self.args.no_progress)
        sample = bool(self.config.monitoring.get("sample_resources", True))
        with TrainingMonitor(sample_resources=sample) as monitor:
            result = pipeline.run_schedule(self.args.kind, self.args.variant, output_dir=self.output_dir)
        self.data.save_json(self.output_dir / "training_summary.json", monitor.get_summary())
        print(str(result.final_checkpoint))
        return 0

    def cmd_postedit(self) -> int:
        testset = self._load_testset(self.args.testset, self.args.constraints)
        use_case = PosteditUseCase(self.args.checkpoint, self.config.decode)
        result = use_case.run_to_files(testset, self.args.output, self.args.trace)
        self.logger.info(f"✅ 后编辑输出: {self.args.output}", {"truncated": result.n_truncated})
        return 0

    def cmd_augment(self) -> int:
        corpus = self.data.load_corpus_prefix(self.args.corpus)
        lexicons = self.data.load_relation_lexicons(self.args.relations)
        lexicons = {r: lex for r, lex in lexicons.items() if r in self.args.relation}
        augmented = augment_corpus(corpus, lexicons, self.config.seed, self.args.max_per_constraint)
        files = list(self.data.save_corpus(augmented, self.args.out).values())
        params = {"command": "augment", "seed": self.config.seed, "relations": sorted(lexicons),
                  "max_per_constraint": self.args.max_per_constraint, "source_sentences": len(corpus),
                  "augmented": len(augmented)}
        if self.args.max_per_constraint is None:
            params["analytic_count"] = count_combinations(corpus, lexicons)
        self.data.write_manifest(Path(self.args.out).parent, params, files,
                                 name=f"{Path(self.args.out).name}.manifest.json")
        print(len(augmented))
        return 0

    def cmd_probe(self) -> int:
        testset = self.data.load_corpus_prefix(self.args.testset)
        lexicons = self.data.load_relation_lexicons(self.args.relations)
        vocabulary = None
        if self.args.dictionary:
            vocabulary = sorted({tok for _, tgt in self.data.load_dictionary(self.args.dictionary) for tok in tgt})
        files = []
        for kind in self.args.kinds:
            if kind == ProbeKind.ORIGINAL.value:
                continue
            probe = build_probe_set(testset, kind, lexicons, self.config.seed, vocabulary)
            files.extend(self.data.save_corpus(probe.corpus, self.output_dir / f"probe.{kind}").values())
        self.data.write_manifest(self.output_dir, {"command": "probe", "seed": self.config.seed,
                                                   "kinds": list(self.args.kinds)}, files)
        if self.args.checkpoint is None:
            return 0

        rows = run_probes(self.args.checkpoint, testset, lexicons, self.args.kinds, self.config.seed,
                          self.config.decode, self.config.eval, vocabulary)
        self.data.save_json(self.output_dir / "probe_report.json", {
            row.kind.value: {**row.report.to_dict(), "stability_ter": row.stability_ter,
                             "stability_bleu": row.stability_bleu, "n_dropped": row.n_dropped}
            for row in rows
        })
        print(probe_table(rows))
        return 0

    # ---------- 评测 ----------
    def cmd_evaluate(self) -> int:
        hyps = self.data.load_sentences(self.args.hyp)
        refs = self.data.load_sentences(self.args.ref)
        if len(hyps) != len(refs):
            raise DataAlignmentError(f"{self.args.hyp} 行数 {len(hyps)} 与 {self.args.ref} 行数 {len(refs)} 不一致",
                                     file_path=str(self.args.hyp), expected_lines=len(refs), actual_lines=len(hyps))
        constraint_sets: Optional[List[ConstraintSet]] = None
        if self.args.constraints:
            constraint_sets = self.data.load_constraints(self.args.constraints, expected_ids=list(range(len(hyps))))
            if len(constraint_sets) != len(hyps):
                raise DataAlignmentError(f"{self.args.constraints} 行数与假设不一致",
                                         file_path=str(self.args.constraints), expected_lines=len(hyps),
                                         actual_lines=len(constraint_sets))
        eval_config = self.config.eval
        report = evaluate(hyps, refs, constraint_sets, eval_config.allow_shifts, eval_config.max_n)
        if self.args.out:
            self.data.save_json(self.args.out, report.to_dict())
        print(report.to_json())
        return 0

    def cmd_cascade(self) -> int:
        testset = self.data.load_corpus_prefix(self.args.testset)
        mt_outputs = {}
        for variant, path in (("plain", self.args.mt_plain), ("constrained", self.args.mt_constrained)):
            if path:
                mt_outputs[variant] = self.data.load_sentences(path)
        checkpoints = {}
        for variant, path in (("plain", self.args.ape_plain), ("constrained", self.args.ape_constrained)):
            if path:
                checkpoints[variant] = path

        if self.args.spec:
            specs = [CascadeSpec.parse(s) for s in self.args.spec]
        else:
            specs = [s for s in CascadeSpec.all()
                     if s.mt_variant in mt_outputs and (s.ape_variant == "none" or s.ape_variant in checkpoints)]
        if not specs:
            raise ConfigValidationError("没有可运行的级联组合", {"errors": ["至少需要一个 --mt-plain / --mt-constrained"]})

        results = run_cascades(specs, mt_outputs, checkpoints, testset, self.config.decode, self.config.eval)
        self.data.save_json(self.output_dir / "cascade_report.json",
                            {spec.label: report.to_dict() for spec, report in results})
        print(format_table([(spec.label, report) for spec, report in results]))
        return 0


COMMANDS: Dict[str, Callable[[CommandRunner], int]] = {
    "gen-synthetic": CommandRunner.cmd_gen_synthetic,
    "mine-terms": CommandRunner.cmd_mine_terms,
    "split-dict": CommandRunner.cmd_split_dict,
    "encode": CommandRunner.cmd_encode,
    "bpe-train": CommandRunner.cmd_bpe_train,
    "bpe-apply": CommandRunner.cmd_bpe_apply,
    "train": CommandRunner.cmd_train,
    "postedit": CommandRunner.cmd_postedit,
    "augment": CommandRunner.cmd_augment,
    "probe": CommandRunner.cmd_probe,
    "evaluate": CommandRunner.cmd_evaluate,
    "cascade": CommandRunner.cmd_cascade,
}


# ============================================================================
# 入口
# ============================================================================

def _configure_logging(config: ConfigManager):
    logging_config = config.logging
    log_dir = config.output_dir / "logs" if logging_config.log_to_file else None
    setup_logger(level=logging_config.level, log_format=logging_config.format, log_dir=log_dir,
                 rotation_config=LogRotationConfig(logging_config.max_bytes, logging_config.backup_count))


def _error_line(error: Exception) -> str:
    code = error.error_code if isinstance(error, ApeSystemError) else "UNKNOWN_ERROR"
    message = error.message if isinstance(error, ApeSystemError) else str(error)
    return json.dumps({"error_category": get_error_category(error), "error_code": code, "message": message},
                      ensure_ascii=False)


def main(argv: Optional[Sequence[str]] = None) -> int:
    """命令行主函数，返回退出码"""
    config: Optional[ConfigManager] = None
    try:
        args = build_parser().parse_args(argv)
        config = ConfigManager(args.config, overrides=_overrides(args), set_pairs=args.set)
        _configure_logging(config)
        config.save_resolved(config.output_dir)
        logger.debug(f"🚀 {args.command}", {"output_dir": str(config.output_dir), "seed": config.seed})
        return COMMANDS[args.command](CommandRunner(config, args))
    except KeyboardInterrupt:
        print(json.dumps({"error_category": "internal", "error_code": "INTERRUPTED", "message": "用户中断"},
                         ensure_ascii=False), file=sys.stderr)
        return 130
    except Exception as e:
        if not isinstance(e, ApeSystemError):
            logger.error(f"❌ 未预期的错误: {e}", exc_info=True)
        print(_error_line(e), file=sys.stderr)
        return exit_code_for(e)
    finally:
        if config is not None and config.monitoring.get("report_at_exit", True):
            logger.debug(json.dumps(generate_performance_report(), ensure_ascii=False, default=str))


if __name__ == "__main__":
    sys.exit(main())
