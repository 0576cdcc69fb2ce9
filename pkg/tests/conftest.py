import pytest

from flillab import geometry
from flillab import qp_oracle, tautstring

# Re-solve every bisection certificate while testing; the main code path keeps
# this off because it doubles the distance cost.
geometry.VALIDATE_CERTIFICATES = True


@pytest.fixture(scope="session", autouse=True)
def _compile_hot_loops():
    tautstring.warmup()
    qp_oracle.warmup()


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    import sys

    mod = next(
        (m for name, m in sys.modules.items() if name.rpartition(".")[2] == "test_acceptance"),
        None,
    )
    lines = getattr(mod, "RESULT_LINES", None)
    if not lines:
        return
    terminalreporter.section("acceptance criteria")
    for line in lines:
        terminalreporter.write_line(line)
