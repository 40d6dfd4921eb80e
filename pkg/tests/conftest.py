import os

import pytest
from hypothesis import HealthCheck, settings

settings.register_profile("default", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.register_profile("ci", deadline=None, max_examples=25,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


@pytest.fixture(scope="session")
def corpus():
    from isomono.fsdio import load_corpus
    cache = {}

    def get(name):
        if name not in cache:
            cache[name] = load_corpus(name)
        return cache[name]
    return get


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if not RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for label, passed, note in RESULTS:
        terminalreporter.write_line(f"[{'PASS' if passed else 'FAIL'}] criterion {label} {note}".rstrip())
