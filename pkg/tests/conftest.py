import os

import pytest

_results = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n, title): acceptance criterion covered by a test")


def pytest_collection_modifyitems(config, items):
    if os.environ.get("PFTOPO_LONG") == "1":
        return
    skip = pytest.mark.skip(reason="long tier; set PFTOPO_LONG=1")
    for item in items:
        if "long" in item.keywords:
            item.add_marker(skip)


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None or (rep.when != "call" and not rep.skipped and rep.passed):
        return
    n, title = mark.args
    entry = _results.setdefault(n, {"title": title, "parts": []})
    if rep.skipped:
        entry["parts"].append(("SKIP", item.name, ""))
    elif rep.failed:
        msg = str(rep.longrepr.reprcrash.message) if hasattr(rep.longrepr, "reprcrash") else ""
        entry["parts"].append(("FAIL", item.name, msg.splitlines()[0] if msg else ""))
    elif rep.when == "call":
        entry["parts"].append(("PASS", item.name, ""))


def pytest_terminal_summary(terminalreporter):
    if not _results:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for n in sorted(_results):
        entry = _results[n]
        states = [p[0] for p in entry["parts"]]
        verdict = "FAIL" if "FAIL" in states else "SKIP" if "SKIP" in states else "PASS"
        tr.write_line(f"criterion {n:2d} {verdict}  {entry['title']}")
        for state, name, msg in entry["parts"]:
            if state != "PASS":
                tr.write_line(f"    {state} {name}: {msg}"[:200])
