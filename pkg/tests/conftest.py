import os

import pytest

# criterion id -> list of (label, passed, detail); passed is None for diagnostics
ACCEPTANCE: dict[str, list] = {}


def record(criterion: str, label: str, passed: bool, detail: str = "") -> bool:
    ACCEPTANCE.setdefault(criterion, []).append((label, bool(passed), detail))
    print(f"[{'PASS' if passed else 'FAIL'}] {criterion} {label}: {detail}")
    return bool(passed)


def note(criterion: str, text: str) -> None:
    ACCEPTANCE.setdefault(criterion, []).append(("diagnostic", None, text))
    print(f"  diagnostic {criterion}: {text}")


def pytest_collection_modifyitems(config, items):
    if os.environ.get("JTDYN_FULL_RUN") == "1":
        return
    skip = pytest.mark.skip(reason="full-length run; set JTDYN_FULL_RUN=1")
    for item in items:
        if "full" in item.keywords:
            item.add_marker(skip)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for crit in sorted(ACCEPTANCE, key=lambda c: int(c.split()[-1])):
        for label, ok, detail in ACCEPTANCE[crit]:
            tag = "INFO" if ok is None else ("PASS" if ok else "FAIL")
            tr.write_line(f"{tag}  {crit}  {label}  {detail}")
