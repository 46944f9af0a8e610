"""Collects acceptance-criterion outcomes and prints one line per criterion."""

import pytest

_OUTCOMES: dict[int, list[tuple[str, bool, str]]] = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    if rep.when == "call" or (rep.when == "setup" and not rep.passed):
        detail = "; ".join(str(v) for k, v in item.user_properties if k == "detail")
        _OUTCOMES.setdefault(marker.args[0], []).append((item.name, rep.passed, detail))


def pytest_terminal_summary(terminalreporter):
    if not _OUTCOMES:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_OUTCOMES):
        results = _OUTCOMES[number]
        ok = all(passed for _, passed, _ in results)
        failed = [name for name, passed, _ in results if not passed]
        details = " | ".join(d for _, _, d in results if d)
        line = f"criterion {number}: {'PASS' if ok else 'FAIL'}"
        if failed:
            line += f" (failed: {', '.join(failed)})"
        if details:
            line += f" -- {details}"
        terminalreporter.write_line(line)
