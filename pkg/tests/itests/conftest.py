import os

import pytest

from sqp.application import run

TEST_CONFIG = os.path.join(os.path.dirname(os.path.dirname(__file__)), "sqp.test.conf")


class CliResult:
    def __init__(self, code: int, out: str, err: str):
        self.code = code
        self.out = out
        self.err = err


@pytest.fixture
def cli(capsys):
    """Runs the command line against the test configuration."""

    def invoke(*argv: str) -> CliResult:
        try:
            code = run(["--config", TEST_CONFIG, *argv])
        except SystemExit as exit_:
            code = exit_.code
        captured = capsys.readouterr()
        return CliResult(code, captured.out, captured.err)

    return invoke


@pytest.fixture(autouse=True)
def no_seed_from_environment(monkeypatch):
    monkeypatch.delenv("SQP_SEED", raising=False)
