import sys
from pathlib import Path

from hypothesis import settings

sys.path.insert(0, str(Path(__file__).parent))

settings.register_profile("default", max_examples=60, deadline=None)
settings.load_profile("default")

# criterion -> list of (passed, detail), filled by test_acceptance
ACCEPTANCE = {}


def record(criterion: int, title: str, passed: bool, detail: str) -> None:
    ACCEPTANCE.setdefault((criterion, title), []).append((bool(passed), detail))
    print(f"criterion {criterion} [{title}]: {'PASS' if passed else 'FAIL'} {detail}")


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for (n, title), results in sorted(ACCEPTANCE.items()):
        ok = all(p for p, _ in results)
        fails = [d for p, d in results if not p]
        tail = f" ({len(results) - len(fails)}/{len(results)} cases)" if len(results) > 1 else ""
        terminalreporter.write_line(f"{n:2d}. {title}: {'PASS' if ok else 'FAIL'}{tail}")
        for d in fails:
            terminalreporter.write_line(f"      failed: {d}")
