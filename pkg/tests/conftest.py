import os

import pytest
from hypothesis import HealthCheck, settings

from ostro.sequences import GeneratorRule, OstroSequence

settings.register_profile(
    "default", deadline=None, max_examples=60, suppress_health_check=[HealthCheck.too_slow]
)
settings.register_profile("ci", deadline=None, max_examples=200, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


@pytest.fixture
def syl1():
    return OstroSequence.from_rule(GeneratorRule.sylvester(1))


@pytest.fixture
def syl2():
    return OstroSequence.from_rule(GeneratorRule.sylvester(2))


@pytest.fixture
def pow2():
    return OstroSequence.from_rule(GeneratorRule.power(2))


@pytest.fixture
def primes():
    return OstroSequence.from_rule(GeneratorRule.prime_chain(2))


_ACCEPTANCE: dict = {}


@pytest.fixture
def criterion():
    """Record one acceptance line; the summary hook prints them in order."""

    def record(number, ok, detail):
        _ACCEPTANCE[number] = (bool(ok), detail)
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_ACCEPTANCE, key=lambda s: (int(str(s).rstrip("ab")), str(s))):
        ok, detail = _ACCEPTANCE[number]
        terminalreporter.write_line(f"criterion {number}: {'PASS' if ok else 'FAIL'}  {detail}")
