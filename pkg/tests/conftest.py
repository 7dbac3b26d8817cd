import pytest

VERDICTS: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if VERDICTS:
        terminalreporter.section("acceptance criteria")
        for line in VERDICTS:
            terminalreporter.write_line(line)


@pytest.fixture
def verdict():
    """Records one PASS/FAIL line per acceptance criterion.

    The line is also printed right away, so ``pytest -s`` shows it inline.
    """
    from contextlib import contextmanager

    @contextmanager
    def record(number, title):
        try:
            yield
        except BaseException as exc:
            line = f"criterion {number} FAIL: {title} ({type(exc).__name__})"
            VERDICTS.append(line)
            print(line)
            raise
        line = f"criterion {number} PASS: {title}"
        VERDICTS.append(line)
        print(line)

    return record
