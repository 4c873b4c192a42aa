import os
import sys

import pytest

sys.path.insert(0, os.path.dirname(__file__))

from multsums.primes import build_factor_table  # noqa: E402


@pytest.fixture(scope="session")
def table_small():
    return build_factor_table(10**4)


@pytest.fixture(scope="session")
def table_1e5():
    return build_factor_table(10**5)


@pytest.fixture(scope="session")
def table_1e6():
    return build_factor_table(10**6)


@pytest.fixture(scope="session")
def table_1e7():
    return build_factor_table(10**7)


def pytest_terminal_summary(terminalreporter):
    from test_acceptance import RESULTS

    if not RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(RESULTS):
        ok, detail = RESULTS[k]
        terminalreporter.write_line(f"criterion {k:>2}: {'PASS' if ok else 'FAIL'}  {detail}")
