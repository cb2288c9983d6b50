"""命令行入口测试：子命令串联、退出码与错误输出"""

import json
import re

import pytest

from ape_system.core.exceptions import ConfigValidationError
from ape_system.main import build_parser, main

COMMON = ["--log-level", "WARNING", "--no-progress"]
TINY_MODEL = [
    "--set", "mst.d_model=32", "--set", "mst.n_layers=1", "--set", "mst.ffn_dim=64",
    "--set", "mst.factor_embed_dim=8", "--set", "train.batch_size=8", "--set", "train.warmup_steps=2",
    "--set", "train.log_every=1", "--set", "subword.num_merges=10",
]


def error_line(captured):
    lines = [line for line in captured.err.splitlines() if line.startswith('{"error_category"')]
    assert lines
    return json.loads(lines[-1])


@pytest.fixture
def synthetic(tmp_path, capsys):
    out = tmp_path / "synth"
    code = main(["gen-synthetic", "--output-dir", str(out), "--vocab-size", "20", "--n-train", "30",
                 "--n-test", "10", "--seed", "2", *COMMON])
    assert code == 0
    capsys.readouterr()
    return out


class TestParser:

    def test_dotted_destinations(self):
        args = build_parser().parse_args(["train", "--kind", "levt", "--variant", "ms-levt", "--pretrain-steps", "5"])
        assert getattr(args, "schedule.pretrain_steps") == 5
        assert getattr(args, "schedule.finetune_steps") is None

    def test_unknown_variant_rejected(self):
        with pytest.raises(ConfigValidationError):
            build_parser().parse_args(["train", "--kind", "mst", "--variant", "prepend"])

    def test_missing_arguments_give_json_error(self, capsys):
        assert main(["evaluate"]) == 2
        err = error_line(capsys.readouterr())
        assert err["error_category"] == "config"
        assert err["error_code"] == "CONFIG_VALIDATION_ERROR"
        assert "--hyp" in err["message"]

    def test_bad_type_and_missing_command_give_json_error(self, capsys):
        assert main(["train", "--kind", "mst", "--pretrain-steps", "many"]) == 2
        assert error_line(capsys.readouterr())["error_category"] == "config"
        assert main([]) == 2
        assert error_line(capsys.readouterr())["error_category"] == "config"


class TestDataCommands:

    def test_gen_synthetic_files(self, synthetic):
        for name in ("dictionary.tsv", "relations.tsv", "train.src", "train.mt", "train.pe",
                     "train.constraints.jsonl", "test.src", "test.mt_constrained", "test.mt_plain",
                     "manifest.json", "resolved_config.yaml"):
            assert (synthetic / name).is_file(), name
        assert len((synthetic / "train.src").read_text(encoding="utf-8").splitlines()) == 30
        manifest = json.loads((synthetic / "manifest.json").read_text(encoding="utf-8"))
        assert "train.src" in manifest["files"]

    def test_gen_synthetic_deterministic(self, synthetic, tmp_path, capsys):
        again = tmp_path / "again"
        main(["gen-synthetic", "--output-dir", str(again), "--vocab-size", "20", "--n-train", "30",
              "--n-test", "10", "--seed", "2", *COMMON])
        for name in ("train.src", "train.pe", "test.mt_plain", "train.constraints.jsonl"):
            assert (again / name).read_bytes() == (synthetic / name).read_bytes()

    def test_mine_terms(self, synthetic, tmp_path, capsys):
        out = tmp_path / "mined.jsonl"
        code = main(["mine-terms", "--corpus", str(synthetic / "train"), "--dictionary",
                     str(synthetic / "dictionary.tsv"), "--out", str(out), "--keep-rate", "1.0",
                     "--stemmer", "none", "--output-dir", str(tmp_path / "run"), *COMMON])
        assert code == 0
        records = [json.loads(line) for line in out.read_text(encoding="utf-8").splitlines()]
        assert [r["id"] for r in records] == list(range(30))
        assert sum(len(r["constraints"]) for r in records) > 0

    def test_split_dict(self, synthetic, tmp_path):
        train, test = tmp_path / "d.train.tsv", tmp_path / "d.test.tsv"
        code = main(["split-dict", "--dictionary", str(synthetic / "dictionary.tsv"), "--train-out", str(train),
                     "--test-out", str(test), "--test-fraction", "0.5", "--output-dir", str(tmp_path / "run"),
                     *COMMON])
        assert code == 0
        total = len((synthetic / "dictionary.tsv").read_text(encoding="utf-8").splitlines())
        parts = [len(p.read_text(encoding="utf-8").splitlines()) for p in (train, test)]
        assert sum(parts) == total

    def test_encode(self, synthetic, tmp_path):
        out = tmp_path / "test.enc"
        code = main(["encode", "--corpus", str(synthetic / "test"), "--variant", "append", "--out", str(out),
                     "--output-dir", str(tmp_path / "run"), *COMMON])
        assert code == 0
        lines = out.read_text(encoding="utf-8").splitlines()
        assert len(lines) == 10
        assert all(re.fullmatch(r"\S+\|[012]", token) for line in lines for token in line.split())

    def test_augment(self, synthetic, tmp_path, capsys):
        code = main(["augment", "--corpus", str(synthetic / "train"), "--relations", str(synthetic / "relations.tsv"),
                     "--out", str(tmp_path / "aug" / "train_aug"), "--output-dir", str(tmp_path / "run"), *COMMON])
        assert code == 0
        n = int(capsys.readouterr().out.strip().splitlines()[-1])
        lines = (tmp_path / "aug" / "train_aug.src").read_text(encoding="utf-8").splitlines()
        assert len(lines) == n
        assert (tmp_path / "aug" / "train_aug.manifest.json").is_file()

    def test_bpe_round_trip(self, synthetic, tmp_path):
        model, seg, restored = tmp_path / "bpe.txt", tmp_path / "seg.txt", tmp_path / "restored.txt"
        run = ["--output-dir", str(tmp_path / "run"), *COMMON]
        assert main(["bpe-train", "--input", str(synthetic / "train.pe"), "--out", str(model),
                     "--num-merges", "15", *run]) == 0
        assert main(["bpe-apply", "--model", str(model), "--input", str(synthetic / "test.pe"),
                     "--output", str(seg), *run]) == 0
        assert main(["bpe-apply", "--restore", "--input", str(seg), "--output", str(restored), *run]) == 0
        assert restored.read_text(encoding="utf-8") == (synthetic / "test.pe").read_text(encoding="utf-8")


class TestEvaluateAndErrors:

    def test_identical_files(self, tmp_path, capsys):
        text = "das Haus ist sehr groß\nich sehe den kleinen Hund\n"
        (tmp_path / "hyp.txt").write_text(text, encoding="utf-8")
        (tmp_path / "ref.txt").write_text(text, encoding="utf-8")
        code = main(["evaluate", "--hyp", str(tmp_path / "hyp.txt"), "--ref", str(tmp_path / "ref.txt"),
                     "--output-dir", str(tmp_path / "run"), *COMMON])
        assert code == 0
        report = json.loads(capsys.readouterr().out.strip().splitlines()[-1])
        assert report["ter"] == 0.0
        assert report["bleu"] == pytest.approx(100.0)
        assert report["term_pct"] is None
        assert report["n_sentences"] == 2

    def test_unknown_set_key(self, tmp_path, capsys):
        code = main(["evaluate", "--hyp", "h", "--ref", "r", "--set", "train.stepz=1",
                     "--output-dir", str(tmp_path), *COMMON])
        assert code == 2
        assert error_line(capsys.readouterr())["error_category"] == "config"

    def test_missing_input_file(self, tmp_path, capsys):
        code = main(["evaluate", "--hyp", str(tmp_path / "absent.txt"), "--ref", str(tmp_path / "absent.txt"),
                     "--output-dir", str(tmp_path / "run"), *COMMON])
        assert code == 3
        assert error_line(capsys.readouterr())["error_category"] == "data"

    def test_misaligned_files(self, tmp_path, capsys):
        (tmp_path / "hyp.txt").write_text("a b\n", encoding="utf-8")
        (tmp_path / "ref.txt").write_text("a b\nc d\n", encoding="utf-8")
        code = main(["evaluate", "--hyp", str(tmp_path / "hyp.txt"), "--ref", str(tmp_path / "ref.txt"),
                     "--output-dir", str(tmp_path / "run"), *COMMON])
        assert code == 3
        assert error_line(capsys.readouterr())["error_code"] == "DATA_ALIGNMENT_ERROR"

    def test_cascade_without_inputs(self, synthetic, tmp_path, capsys):
        code = main(["cascade", "--testset", str(synthetic / "test"), "--output-dir", str(tmp_path / "run"),
                     *COMMON])
        assert code == 2


class TestTrainAndDecode:

    def test_train_postedit_evaluate(self, synthetic, tmp_path, capsys):
        run = tmp_path / "mst"
        code = main(["train", "--kind", "mst", "--variant", "append", "--pretrain", str(synthetic / "train"),
                     "--pretrain-steps", "2", "--output-dir", str(run), *TINY_MODEL, *COMMON])
        assert code == 0
        checkpoint = capsys.readouterr().out.strip().splitlines()[-1]
        assert checkpoint.endswith("pretrain.pt")
        assert (run / "manifest.json").is_file()
        assert (run / "training_summary.json").is_file()

        hyp = tmp_path / "hyp.txt"
        code = main(["postedit", "--checkpoint", checkpoint, "--testset", str(synthetic / "test"),
                     "--output", str(hyp), "--beam-size", "1", "--max-len", "8",
                     "--output-dir", str(tmp_path / "decode"), *COMMON])
        assert code == 0
        assert len(hyp.read_text(encoding="utf-8").split("\n")) - 1 == 10

        code = main(["evaluate", "--hyp", str(hyp), "--ref", str(synthetic / "test.pe"),
                     "--constraints", str(synthetic / "test.constraints.jsonl"),
                     "--output-dir", str(tmp_path / "eval"), *COMMON])
        assert code == 0
        report = json.loads(capsys.readouterr().out.strip().splitlines()[-1])
        assert report["n_sentences"] == 10

    def test_cascade_do_nothing_rows(self, synthetic, tmp_path, capsys):
        code = main(["cascade", "--testset", str(synthetic / "test"),
                     "--mt-plain", str(synthetic / "test.mt_plain"),
                     "--mt-constrained", str(synthetic / "test.mt_constrained"),
                     "--output-dir", str(tmp_path / "run"), *COMMON])
        assert code == 0
        table = capsys.readouterr().out
        assert "MT → No APE" in table and "cMT → No APE" in table
        report = json.loads((tmp_path / "run" / "cascade_report.json").read_text(encoding="utf-8"))
        assert report["cMT → No APE"]["term_pct"] in (None, 100.0)
