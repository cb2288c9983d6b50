# ape_system/infrastructure/data/manager.py
"""
数据管理器
统一负责语料、约束、词典、停用词、关系词表、BPE / truecase 模型、
编码调试文件与运行清单的读写。

文本文件一律 UTF-8、LF 换行、每行一句。
"""

import hashlib
import json
from functools import wraps
from pathlib import Path
from typing import Any, Dict, FrozenSet, Iterable, List, Mapping, Optional, Sequence, Tuple, Union

from ape_system import __version__
from ape_system.core.exceptions import (
    ApeSystemError, DataAlignmentError, DataNotFoundError, DataParseError, DataValidationError
)
from ape_system.domain.entities.corpus import Sentence, Constraint, ConstraintSet, Corpus
from ape_system.domain.entities.encoded_source import EncodedSource
from ape_system.domain.services.augmentation import RELATIONS, RelationLexicon
from ape_system.domain.services.subword import BPEModel, TruecaseModel
from ape_system.domain.services.termmine import TermDictionary
from ape_system.utils.logger import get_logger
from ape_system.utils.monitoring import performance_monitor

PathLike = Union[str, Path]

CORPUS_SUFFIXES = ("src", "mt", "pe")
CONSTRAINTS_SUFFIX = "constraints.jsonl"


def handle_data_errors(func):
    """数据管理器错误处理装饰器：系统异常直接抛出，I/O 与解码异常转换为数据异常"""

    @wraps(func)
    def wrapper(self, *args, **kwargs):
        try:
            return func(self, *args, **kwargs)
        except ApeSystemError:
            raise
        except UnicodeDecodeError as e:
            error_msg = f"文件不是合法的 UTF-8 [{func.__name__}]: {e}"
            self.logger.error(f"❌ {error_msg}")
            raise DataParseError(error_msg) from e
        except OSError as e:
            error_msg = f"文件读写失败 [{func.__name__}]: {e}"
            self.logger.error(f"❌ {error_msg}")
            raise DataNotFoundError(error_msg, data_type="file",
                                    identifier=str(getattr(e, 'filename', '') or '')) from e

    return wrapper


def _prefix_path(prefix: PathLike, suffix: str) -> Path:
    prefix = Path(prefix)
    return prefix.with_name(f"{prefix.name}.{suffix}")


def file_digest(path: PathLike) -> str:
    """文件 sha256"""
    digest = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 16), b""):
            digest.update(chunk)
    return digest.hexdigest()


class DataManager:
    """文件读写管理器"""

    def __init__(self):
        self.logger = get_logger(__name__)
        self._read_count = 0
        self._write_count = 0

    # ------------------------------------------------------------------
    # 基础行读写
    # ------------------------------------------------------------------
    @handle_data_errors
    def read_lines(self, path: PathLike) -> List[str]:
        path = Path(path)
        if not path.exists():
            raise DataNotFoundError(f"文件不存在: {path}", data_type="file", identifier=str(path))
        text = path.read_text(encoding="utf-8")
        self._read_count += 1
        if not text:
            return []
        lines = text.split("\n")
        if lines[-1] == "":
            lines.pop()
        return [line[:-1] if line.endswith("\r") else line for line in lines]

    @handle_data_errors
    def write_lines(self, path: PathLike, lines: Iterable[str]) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        lines = list(lines)
        with open(path, "w", encoding="utf-8", newline="\n") as f:
            for line in lines:
                f.write(line)
                f.write("\n")
        self._write_count += 1
        return path

    def load_sentences(self, path: PathLike) -> List[Sentence]:
        return [Sentence.from_text(line) for line in self.read_lines(path)]

    def save_sentences(self, path: PathLike, sentences: Iterable[Sequence[str]]) -> Path:
        return self.write_lines(path, (" ".join(s) for s in sentences))

    # ------------------------------------------------------------------
    # 约束 JSONL
    # ------------------------------------------------------------------
    @handle_data_errors
    def load_constraints(self, path: PathLike, expected_ids: Optional[Sequence[int]] = None) -> List[ConstraintSet]:
        """
        读取约束 JSONL

        Args:
            expected_ids: 给定时第 k 行的 id 必须等于 expected_ids[k]
        """
        sets: List[ConstraintSet] = []
        for line_number, line in enumerate(self.read_lines(path), start=1):
            try:
                record = json.loads(line)
                if not isinstance(record, dict) or "constraints" not in record or "id" not in record:
                    raise ValueError("缺少 id 或 constraints 字段")
                constraints = tuple(Constraint.of(list(c["src"]), list(c["tgt"])) for c in record["constraints"])
            except (ValueError, KeyError, TypeError, DataValidationError) as e:
                raise DataParseError(f"约束文件第 {line_number} 行无法解析: {e}",
                                     file_path=str(path), line_number=line_number) from e
            if expected_ids is not None:
                index = line_number - 1
                if index < len(expected_ids) and record["id"] != expected_ids[index]:
                    raise DataParseError(f"约束文件第 {line_number} 行 id={record['id']} 与语料不对齐",
                                         file_path=str(path), line_number=line_number)
            sets.append(ConstraintSet(constraints))
        return sets

    def save_constraints(self, path: PathLike, constraint_sets: Sequence[ConstraintSet],
                         ids: Optional[Sequence[int]] = None) -> Path:
        ids = list(ids) if ids is not None else list(range(len(constraint_sets)))
        lines = [json.dumps({"id": i, "constraints": [c.to_dict() for c in cs]}, ensure_ascii=False)
                 for i, cs in zip(ids, constraint_sets)]
        return self.write_lines(path, lines)

    # ------------------------------------------------------------------
    # 语料
    # ------------------------------------------------------------------
    @performance_monitor("data_load_corpus")
    def load_corpus(self, src_path: PathLike, mt_path: PathLike, pe_path: PathLike,
                    constraints_path: Optional[PathLike] = None, name: Optional[str] = None) -> Corpus:
        """读取三个平行文件（及可选约束文件）为语料，id 依次为行号 0..n-1"""
        columns = {}
        for key, path in (("src", src_path), ("mt", mt_path), ("pe", pe_path)):
            columns[key] = self.load_sentences(path)
        n = len(columns["src"])
        for key, path in (("mt", mt_path), ("pe", pe_path)):
            if len(columns[key]) != n:
                raise DataAlignmentError(f"{path} 行数 {len(columns[key])} 与 {src_path} 行数 {n} 不一致",
                                         file_path=str(path), expected_lines=n, actual_lines=len(columns[key]))
        if constraints_path is not None:
            constraint_sets = self.load_constraints(constraints_path, expected_ids=list(range(n)))
            if len(constraint_sets) != n:
                raise DataAlignmentError(f"{constraints_path} 行数 {len(constraint_sets)} 与语料行数 {n} 不一致",
                                         file_path=str(constraints_path), expected_lines=n,
                                         actual_lines=len(constraint_sets))
        else:
            constraint_sets = [ConstraintSet()] * n
        corpus = Corpus.from_columns(columns["src"], columns["mt"], columns["pe"], constraint_sets,
                                     name=name or Path(src_path).stem)
        self.logger.debug(f"📊 读取语料 {corpus.name}: {n} 句", {"sentences": n})
        return corpus

    def load_corpus_prefix(self, prefix: PathLike, with_constraints: Optional[bool] = None) -> Corpus:
        """
        按前缀读取 prefix.src / .mt / .pe [/ .constraints.jsonl]

        with_constraints 为 None 时约束文件存在即读取。
        """
        paths = [_prefix_path(prefix, s) for s in CORPUS_SUFFIXES]
        constraints_path = _prefix_path(prefix, CONSTRAINTS_SUFFIX)
        if with_constraints is None:
            with_constraints = constraints_path.exists()
        return self.load_corpus(*paths, constraints_path=constraints_path if with_constraints else None,
                                name=Path(prefix).name)

    @performance_monitor("data_save_corpus")
    def save_corpus(self, corpus: Corpus, prefix: PathLike) -> Dict[str, Path]:
        """写出 prefix.src / .mt / .pe / .constraints.jsonl；约束行号即位置"""
        written = {
            "src": self.save_sentences(_prefix_path(prefix, "src"), corpus.srcs),
            "mt": self.save_sentences(_prefix_path(prefix, "mt"), corpus.mts),
            "pe": self.save_sentences(_prefix_path(prefix, "pe"), corpus.pes),
            "constraints": self.save_constraints(_prefix_path(prefix, CONSTRAINTS_SUFFIX), corpus.constraint_sets),
        }
        self.logger.info(f"✅ 语料已保存: {prefix} ({len(corpus)} 句)", {"sentences": len(corpus)})
        return written

    # ------------------------------------------------------------------
    # 词典 / 停用词 / 关系词表
    # ------------------------------------------------------------------
    def load_dictionary(self, path: PathLike) -> TermDictionary:
        pairs = []
        for line_number, line in enumerate(self.read_lines(path), start=1):
            if not line.strip():
                continue
            parts = line.split("\t")
            if len(parts) != 2 or not parts[0].strip() or not parts[1].strip():
                raise DataParseError(f"词典第 {line_number} 行必须是 源短语<TAB>目标短语",
                                     file_path=str(path), line_number=line_number)
            pairs.append((parts[0], parts[1]))
        dictionary = TermDictionary.from_pairs(pairs)
        self.logger.debug(f"📊 读取词典 {path}: {len(dictionary)} 条", {"entries": len(dictionary)})
        return dictionary

    def save_dictionary(self, path: PathLike, dictionary: Union[TermDictionary, Iterable[Tuple[Any, Any]]]) -> Path:
        entries = dictionary.entries if isinstance(dictionary, TermDictionary) else dictionary
        lines = []
        for src, tgt in entries:
            src_text = src if isinstance(src, str) else " ".join(src)
            tgt_text = tgt if isinstance(tgt, str) else " ".join(tgt)
            lines.append(f"{src_text}\t{tgt_text}")
        return self.write_lines(path, lines)

    def load_stoplist(self, path: PathLike) -> FrozenSet[str]:
        return frozenset(line.strip().lower() for line in self.read_lines(path) if line.strip())

    def load_relation_lexicons(self, path: PathLike) -> Dict[str, RelationLexicon]:
        """读取 word<TAB>relation<TAB>related 形式的关系词表"""
        grouped: Dict[str, Dict[str, List[str]]] = {r: {} for r in RELATIONS}
        for line_number, line in enumerate(self.read_lines(path), start=1):
            if not line.strip():
                continue
            parts = line.split("\t")
            if len(parts) != 3 or parts[1] not in RELATIONS:
                raise DataParseError(f"关系词表第 {line_number} 行格式错误: {line!r}",
                                     file_path=str(path), line_number=line_number)
            word, relation, related = parts
            bucket = grouped[relation].setdefault(word, [])
            if related not in bucket:
                bucket.append(related)
        return {r: RelationLexicon(r, {w: tuple(v) for w, v in entries.items()})
                for r, entries in grouped.items() if entries}

    def save_relation_lexicons(self, path: PathLike, lexicons: Mapping[str, RelationLexicon]) -> Path:
        lines = []
        for relation in RELATIONS:
            lexicon = lexicons.get(relation)
            if lexicon is None:
                continue
            for word, related in lexicon.entries.items():
                lines.extend(f"{word}\t{relation}\t{r}" for r in related)
        return self.write_lines(path, lines)

    # ------------------------------------------------------------------
    # 子词 / truecase 模型
    # ------------------------------------------------------------------
    def load_bpe(self, path: PathLike) -> BPEModel:
        merges = []
        for line_number, line in enumerate(self.read_lines(path), start=1):
            parts = line.split(" ")
            if len(parts) != 2:
                raise DataParseError(f"BPE 模型第 {line_number} 行必须是两个以空格分隔的符号",
                                     file_path=str(path), line_number=line_number)
            merges.append((parts[0], parts[1]))
        return BPEModel(merges)

    def save_bpe(self, path: PathLike, model: BPEModel) -> Path:
        return self.write_lines(path, (f"{a} {b}" for a, b in model.merges))

    def load_truecase(self, path: PathLike) -> TruecaseModel:
        casing = {}
        for line_number, line in enumerate(self.read_lines(path), start=1):
            parts = line.split("\t")
            if len(parts) != 2:
                raise DataParseError(f"truecase 模型第 {line_number} 行必须是 小写<TAB>原形",
                                     file_path=str(path), line_number=line_number)
            casing[parts[0]] = parts[1]
        return TruecaseModel(casing)

    def save_truecase(self, path: PathLike, model: TruecaseModel) -> Path:
        return self.write_lines(path, (f"{k}\t{model.casing[k]}" for k in sorted(model.casing)))

    # ------------------------------------------------------------------
    # 编码调试文件
    # ------------------------------------------------------------------
    def load_encoded(self, path: PathLike) -> List[EncodedSource]:
        out = []
        for line_number, line in enumerate(self.read_lines(path), start=1):
            try:
                out.append(EncodedSource.from_debug_line(line, line_number))
            except DataValidationError as e:
                raise DataParseError(f"编码文件第 {line_number} 行无效: {e.message}",
                                     file_path=str(path), line_number=line_number) from e
        return out

    def save_encoded(self, path: PathLike, encoded: Iterable[EncodedSource]) -> Path:
        return self.write_lines(path, (e.to_debug_line() for e in encoded))

    # ------------------------------------------------------------------
    # JSON 与运行清单
    # ------------------------------------------------------------------
    @handle_data_errors
    def save_json(self, path: PathLike, payload: Any) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", encoding="utf-8", newline="\n") as f:
            f.write(json.dumps(payload, ensure_ascii=False, indent=2, sort_keys=True))
            f.write("\n")
        self._write_count += 1
        return path

    @handle_data_errors
    def load_json(self, path: PathLike) -> Any:
        path = Path(path)
        if not path.exists():
            raise DataNotFoundError(f"文件不存在: {path}", data_type="file", identifier=str(path))
        try:
            return json.loads(path.read_text(encoding="utf-8"))
        except json.JSONDecodeError as e:
            raise DataParseError(f"JSON 解析失败: {e.msg}", file_path=str(path), line_number=e.lineno) from e

    @handle_data_errors
    def write_manifest(self, directory: PathLike, params: Mapping[str, Any],
                       files: Iterable[PathLike] = (), name: str = "manifest.json") -> Path:
        """写运行清单：参数 + 输出文件 sha256（不含时间戳，保证可复现）"""
        directory = Path(directory)
        digests = {}
        for f in files:
            f = Path(f)
            key = str(f.relative_to(directory)) if f.is_relative_to(directory) else str(f)
            digests[key] = file_digest(f)
        manifest = {"ape_system_version": __version__, "params": dict(params), "files": digests}
        return self.save_json(directory / name, manifest)

    def get_io_info(self) -> Dict[str, int]:
        return {"files_read": self._read_count, "files_written": self._write_count}


# 模块级便捷函数
_default_manager: Optional[DataManager] = None


def get_data_manager() -> DataManager:
    global _default_manager
    if _default_manager is None:
        _default_manager = DataManager()
    return _default_manager


def load_corpus(src_path: PathLike, mt_path: PathLike, pe_path: PathLike,
                constraints_path: Optional[PathLike] = None) -> Corpus:
    return get_data_manager().load_corpus(src_path, mt_path, pe_path, constraints_path)


def save_corpus(corpus: Corpus, prefix: PathLike) -> Dict[str, Path]:
    return get_data_manager().save_corpus(corpus, prefix)


def load_corpus_prefix(prefix: PathLike, with_constraints: Optional[bool] = None) -> Corpus:
    return get_data_manager().load_corpus_prefix(prefix, with_constraints)


__all__ = [
    'DataManager', 'handle_data_errors', 'file_digest', 'get_data_manager',
    'load_corpus', 'save_corpus', 'load_corpus_prefix', 'CORPUS_SUFFIXES', 'CONSTRAINTS_SUFFIX'
]
