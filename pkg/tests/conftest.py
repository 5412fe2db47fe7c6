import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from aquaforte.benchgen import gen_suite  # noqa: E402

CRITERIA: dict[int, tuple[bool, str]] = {}


def record_criterion(number: int, ok: bool, detail: str) -> None:
    CRITERIA[number] = (ok, detail)
    print(f"CRITERION {number}: {'PASS' if ok else 'FAIL'} - {detail}")


@pytest.fixture(scope="session")
def generated_suites(tmp_path_factory):
    """Default-parameter SOS and MFD suites (600 files each), seed 0."""
    root = tmp_path_factory.mktemp("suites")
    sos = gen_suite("sos", root / "sos", seed=0)
    mfd = gen_suite("mfd", root / "mfd", seed=0)
    return sos, mfd


def pytest_terminal_summary(terminalreporter):
    if not CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(CRITERIA):
        ok, detail = CRITERIA[n]
        terminalreporter.write_line(f"CRITERION {n}: {'PASS' if ok else 'FAIL'} - {detail}")
