import re

from sqp.misc.utils import file_sha256


def test_train_help_shows_configured_defaults(cli):
    result = cli("train", "--help")
    assert result.code == 0
    assert re.search(r"--epochs EPOCHS\s+epoch cap \(default: 2\)", result.out)
    assert "(default: 8)" in result.out
    assert "(default: 5.0)" in result.out
    assert re.search(r"--micro-batch-size MICRO_BATCH_SIZE\s+.*\(default: 4\)", result.out)
    assert re.search(r"--adam-beta2 ADAM_BETA2\s+.*\(default: 0.999\)", result.out)


def test_engine_commands_offer_the_dense_head_precision(cli):
    for command in ("infer", "bench", "compare"):
        result = cli(command, "--help")
        assert result.code == 0
        assert "--dense-head {fp32,int8}" in result.out
        assert re.search(r"dense layers \(default:\s+fp32\)", result.out)
    assert cli("bench", "--dense-head", "int4", "--out", "x.csv").code == 2


def test_synthesis_flags_reach_the_generator(cli, tmp_path):
    default, narrow = tmp_path / "a.sqpd", tmp_path / "b.sqpd"
    assert cli("dataset", "synth", "--n", "4", "--out", str(default)).code == 0
    result = cli(
        "dataset", "synth", "--n", "4", "--snr-min", "10", "--snr-max", "12",
        "--n-harmonics", "3", "--out", str(narrow),
    )
    assert result.code == 0
    assert file_sha256(str(default)) != file_sha256(str(narrow))
    inverted = cli("dataset", "synth", "--snr-min", "5", "--snr-max", "0", "--out", str(narrow))
    assert inverted.code == 2


def test_memreport_prints_the_reduction(cli):
    result = cli("memreport")
    assert result.code == 0
    assert re.search(r"reduction:\s+27\.6x", result.out)
    assert "9,478,116 B" in result.out
    assert "17,249,985 real" in result.out


def test_memreport_for_the_baseline(cli):
    result = cli("memreport", "--variant", "baseline")
    assert result.code == 0
    assert re.search(r"reduction:\s+1\.0x", result.out)


def test_synthetic_dataset_is_reproducible(cli, tmp_path):
    first, second = tmp_path / "a.sqpd", tmp_path / "b.sqpd"
    assert cli("--seed", "7", "dataset", "synth", "--n", "64", "--out", str(first)).code == 0
    result = cli("--seed", "7", "dataset", "synth", "--n", "64", "--out", str(second))
    assert result.code == 0
    assert file_sha256(str(first)) == file_sha256(str(second))
    assert f"sha256 {file_sha256(str(second))}" in result.out
    other = tmp_path / "c.sqpd"
    assert cli("--seed", "8", "dataset", "synth", "--n", "64", "--out", str(other)).code == 0
    assert file_sha256(str(first)) != file_sha256(str(other))


def test_seed_from_environment(cli, tmp_path, monkeypatch):
    flagged, from_env = tmp_path / "a.sqpd", tmp_path / "b.sqpd"
    cli("--seed", "3", "dataset", "synth", "--n", "4", "--out", str(flagged))
    monkeypatch.setenv("SQP_SEED", "3")
    cli("dataset", "synth", "--n", "4", "--out", str(from_env))
    assert file_sha256(str(flagged)) == file_sha256(str(from_env))


def test_usage_errors_exit_with_2(cli, monkeypatch):
    assert cli("train").code == 2
    assert cli("--threads", "0", "memreport").code == 2
    assert cli("--loglevel", "chatty", "memreport").code == 2
    assert cli("memreport", "--input-shape", "4", "4").code == 2
    monkeypatch.setenv("SQP_SEED", "not-a-number")
    result = cli("memreport")
    assert result.code == 2
    assert "SQP_SEED" in result.err


def test_runtime_failures_exit_with_1(cli, tmp_path):
    missing = cli("infer", "--weights", str(tmp_path / "absent.sqpw"), "--data", "x.sqpd")
    assert missing.code == 1
    assert "error:" in missing.err
    corrupt = tmp_path / "corrupt.sqpd"
    corrupt.write_bytes(b"SQPD" + b"\0" * 10)
    result = cli("dataset", "split", "--in", str(corrupt), "--out-train", "t", "--out-val", "v")
    assert result.code == 1
    assert str(corrupt) in result.err
