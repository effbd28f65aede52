import os
from collections import OrderedDict

import pytest
from hypothesis import settings

settings.register_profile("default", deadline=None, max_examples=60)
settings.register_profile("ci", deadline=None, max_examples=200)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

_CRITERIA: "OrderedDict[str, dict]" = OrderedDict()


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(key, title): acceptance criterion a test belongs to")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None:
        return
    key, title = mark.args
    entry = _CRITERIA.setdefault(key, {"title": title, "passed": [], "failed": []})
    if rep.when == "call" or (rep.when == "setup" and not rep.passed):
        (entry["passed"] if rep.passed else entry["failed"]).append(item.name)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for key, entry in sorted(_CRITERIA.items(), key=lambda kv: int(kv[0])):
        status = "FAIL" if entry["failed"] else "PASS"
        line = f"criterion {key}: {status}  {entry['title']}"
        if entry["failed"]:
            line += f"  (failed: {', '.join(entry['failed'])})"
        tr.write_line(line)
