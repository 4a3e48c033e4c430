import csv
import os

from sqp.misc.utils import file_sha256
from sqp.storage.checkpoint_file import read_checkpoint


def test_pipeline_from_synthesis_to_comparison(cli, tmp_path):
    def path(name):
        return str(tmp_path / name)

    synth = ("dataset", "synth", "--n", "24", "--segment-seconds", "1.0")
    assert cli(*synth, "--out", path("all.sqpd")).code == 0
    result = cli(
        "dataset", "split", "--in", path("all.sqpd"),
        "--out-train", path("train.sqpd"), "--out-val", path("val.sqpd"),
        "--val-fraction", "0.25",
    )
    assert result.code == 0
    assert "train 18" in result.out

    result = cli(
        "train", "--train", path("train.sqpd"), "--val", path("val.sqpd"),
        "--out", path("bam.sqpw"), "--history", path("history.csv"), "--epochs", "1",
    )
    assert result.code == 0, result.err
    with open(path("history.csv"), encoding="utf-8") as file:
        assert len(list(csv.reader(file))) == 2

    assert cli("quantize", "--weights", path("bam.sqpw"), "--out", path("q.sqpw")).code == 1

    assert cli(
        "calibrate", "--weights", path("bam.sqpw"), "--data", path("train.sqpd"),
        "--out", path("calibrated.sqpw"),
    ).code == 0
    assert cli("quantize", "--weights", path("calibrated.sqpw"), "--out", path("q.sqpw")).code == 0
    assert read_checkpoint(path("q.sqpw")).quantized is not None

    result = cli(
        "infer", "--weights", path("q.sqpw"), "--data", path("val.sqpd"), "--out", path("p.csv")
    )
    assert result.code == 0
    with open(path("p.csv"), encoding="utf-8") as file:
        rows = list(csv.DictReader(file))
    assert len(rows) == 6
    assert set(rows[0]) == {"index", "prediction", "label"}

    bitplane = cli(
        "infer", "--weights", path("q.sqpw"), "--data", path("val.sqpd"),
        "--backend", "bitplane", "--out", path("p_bitplane.csv"),
    )
    assert bitplane.code == 0
    assert file_sha256(path("p.csv")) == file_sha256(path("p_bitplane.csv"))

    int8_head = cli(
        "infer", "--weights", path("q.sqpw"), "--data", path("val.sqpd"),
        "--dense-head", "int8", "--out", path("p_int8_head.csv"),
    )
    assert int8_head.code == 0, int8_head.err
    with open(path("p_int8_head.csv"), encoding="utf-8") as file:
        assert len(list(csv.DictReader(file))) == 6
    uncalibrated = cli(
        "infer", "--weights", path("bam.sqpw"), "--data", path("val.sqpd"),
        "--engine", "bam-fp32", "--dense-head", "int8",
    )
    assert uncalibrated.code == 2

    for out_dir in ("cmp_a", "cmp_b"):
        result = cli(
            "compare", "--data", path("all.sqpd"), "--out-dir", path(out_dir),
            "--seeds", "0", "--epochs", "1", "--dense-head", "int8",
        )
        assert result.code == 0, result.err
        assert "bam-qat-int8" in result.out
        assert "dense_head=int8" in result.out
    for name in ("comparison.csv", "comparison_runs.csv", "summary.txt"):
        assert file_sha256(os.path.join(path("cmp_a"), name)) == file_sha256(
            os.path.join(path("cmp_b"), name)
        )


def test_bench_writes_latencies_for_three_engines(cli, tmp_path):
    out = str(tmp_path / "bench.csv")
    result = cli("bench", "--input-shape", "16", "20", "--runs", "2", "--out", out)
    assert result.code == 0, result.err
    with open(out, encoding="utf-8") as file:
        rows = list(csv.DictReader(file))
    assert {row["engine"] for row in rows} == {"fp32-reference", "int8-dense", "bam-int8"}
    assert len(rows) == 6
    assert "time saved" in result.out
    assert cli("bench", "--warmup", "2", "--input-shape", "16", "20", "--out", out).code == 1
