import pytest
from hypothesis import settings

# exact arithmetic and first-call caches make single examples slow but deterministic
settings.register_profile("repo", deadline=None, max_examples=60)
settings.load_profile("repo")

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def record():
    """Collects one summary line per acceptance criterion for the terminal report."""

    def _record(line: str) -> None:
        ACCEPTANCE_LINES.append(line)
        print(line)

    return _record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
