import pytest

# criterion number -> list of (part, passed, detail); filled by test_acceptance
ACCEPTANCE = {}


def record(n, part, passed, detail=""):
    ACCEPTANCE.setdefault(n, []).append((part, bool(passed), detail))
    return passed


@pytest.fixture
def criterion():
    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        parts = ACCEPTANCE[n]
        ok = all(p for _, p, _ in parts)
        detail = "; ".join(f"{name} {'ok' if p else 'FAILED'} ({d})" if d else f"{name} {'ok' if p else 'FAILED'}" for name, p, d in parts)
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'} criterion {n}: {detail}")
