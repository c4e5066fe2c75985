import pytest


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n, title): acceptance criterion the test belongs to")
    config._criteria = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None or not (rep.when == "call" or rep.failed):
        return
    n, title = mark.args
    entry = item.config._criteria.setdefault(n, {"title": title, "ok": True, "notes": []})
    entry["ok"] = entry["ok"] and rep.passed
    for key, value in item.user_properties:
        if key == "detail":
            entry["notes"].append(value)
    if rep.failed:
        entry["notes"].append(f"{item.name} failed")


def pytest_terminal_summary(terminalreporter, config):
    crit = getattr(config, "_criteria", {})
    if not crit:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(crit):
        e = crit[n]
        status = "PASS" if e["ok"] else "FAIL"
        line = f"criterion {n:2d} {status}  {e['title']}"
        if e["notes"]:
            line += "  | " + "; ".join(e["notes"])
        terminalreporter.write_line(line)
