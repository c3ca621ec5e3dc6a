import pytest

ACCEPTANCE_TITLES = {
    1: "propagator equivalence",
    2: "dilation identity",
    3: "rotating frame equals H_F",
    4: "half-loop holonomy",
    5: "two-EP cycle",
    6: "eigenstate exchange",
    7: "protocol end-to-end",
    8: "branch population dataset",
    9: "adiabatic convergence",
    10: "determinism",
}

_results = {}


@pytest.fixture
def acceptance():
    """Record the outcome of an acceptance criterion: ``acceptance(k, ok, detail)``."""
    def record(k, ok, detail=""):
        prev = _results.get(k, (True, ""))
        _results[k] = (prev[0] and bool(ok), "; ".join(x for x in (prev[1], detail) if x))
        return ok
    return record


def pytest_terminal_summary(terminalreporter):
    if not _results:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for k, title in ACCEPTANCE_TITLES.items():
        if k not in _results:
            tr.write_line(f"criterion {k:2d} {title:<28} NOT RUN")
            continue
        ok, detail = _results[k]
        tr.write_line(f"criterion {k:2d} {title:<28} {'PASS' if ok else 'FAIL'}  {detail}")
