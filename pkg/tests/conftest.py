import numpy as np
import pytest

from gl_voronoi import BumpFunction, LanglandsParams, SymPowerSource, build_table


@pytest.fixture(scope="session")
def sym2_table():
    """Symmetric-square lift of Delta, large enough for X = 4e4 sums and X = 1e5 statistics."""
    return build_table(SymPowerSource(m=3), 100_000)


@pytest.fixture(scope="session")
def tempered():
    return LanglandsParams.tempered_example()


@pytest.fixture(scope="session")
def bump():
    return BumpFunction()


@pytest.fixture(scope="session")
def lift_coeffs():
    """c_0 pinned at -1/sqrt(3), c_1 fitted for the lift's own parameters."""
    from gl_voronoi import calibrate_ck
    return calibrate_ck(LanglandsParams.sym2_lift(), BumpFunction(), 1e3,
                        np.geomspace(1.0, 100.0, 16), 1, fix_c0=True)


_ACCEPTANCE_KEY = pytest.StashKey[list]()


@pytest.fixture
def acceptance(request):
    """Record one pass/fail line per acceptance criterion, then assert it."""
    lines = request.config.stash.setdefault(_ACCEPTANCE_KEY, [])

    def report(number: int, ok: bool, detail: str) -> None:
        line = f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
        lines.append((number, line))
        print(line)
        assert ok, line

    return report


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(_ACCEPTANCE_KEY, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(lines):
            terminalreporter.write_line(line)
