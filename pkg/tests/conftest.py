"""Collects acceptance outcomes and prints one line per criterion after the run."""

import pytest

_RESULTS: dict[str, tuple[bool, str]] = {}


class _Recorder:
    def __call__(self, criterion: str, passed: bool, detail: str) -> bool:
        prev = _RESULTS.get(criterion)
        if prev is not None:
            passed = passed and prev[0]
            detail = f"{prev[1]}; {detail}"
        _RESULTS[criterion] = (bool(passed), detail)
        return bool(passed)


@pytest.fixture
def acceptance():
    return _Recorder()


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(_RESULTS, key=lambda k: int(k[2:])):
        ok, detail = _RESULTS[key]
        terminalreporter.write_line(f"{key} {'PASS' if ok else 'FAIL'} {detail}")
