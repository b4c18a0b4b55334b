"""Collects the one-line acceptance verdicts and repeats them at the end of the run."""

VERDICTS: dict[tuple[int, str], str] = {}


def pytest_terminal_summary(terminalreporter):
    if VERDICTS:
        terminalreporter.section("acceptance criteria")
        for n in sorted(VERDICTS):
            terminalreporter.write_line(VERDICTS[n])
