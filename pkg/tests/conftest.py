import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).parent))

# Filled by test_acceptance.record(): criterion number -> list of (label, ok, detail)
ACCEPTANCE: dict[int, list] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        parts = ACCEPTANCE[n]
        ok = all(p[1] for p in parts)
        details = "; ".join(f"{label}: {'ok' if good else 'FAIL'} ({detail})" for label, good, detail in parts)
        tr.write_line(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {details}")
