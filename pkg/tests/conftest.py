import pytest

from abslice import corpus, lang


@pytest.fixture(scope="session")
def fig2():
    return corpus.load("fig2")


@pytest.fixture
def parse():
    def _parse(src: str, entry: str = "main") -> lang.Program:
        return lang.parse(src, entry)

    return _parse


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if not RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(RESULTS):
        terminalreporter.write_line(RESULTS[n])
