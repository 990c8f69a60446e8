from random import Random

import pytest

from bbsrep import bbs, star


@pytest.fixture
def rng():
    return Random(20240601)


@pytest.fixture(scope="session")
def scheme():
    """A group with five members; shared and read-only across tests."""
    rng = Random(99)
    gpk, gmsk = bbs.keygen(rng)
    registry = bbs.MemberRegistry()
    members = {f"m{n}": bbs.join(gmsk, registry, f"m{n}", rng) for n in range(5)}
    return {"gpk": gpk, "gmsk": gmsk, "registry": registry, "members": members}


@pytest.fixture
def fresh_scheme(rng):
    gpk, gmsk = bbs.keygen(rng)
    registry = bbs.MemberRegistry()
    members = {name: bbs.join(gmsk, registry, name, rng) for name in "abc"}
    return {"gpk": gpk, "gmsk": gmsk, "registry": registry, "members": members, "log": star.IssuanceLog()}


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance") or sys.modules.get("tests.test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for name, ok, detail in results:
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {name}: {detail}")
