import pytest

from warpheat import warp_metric as wm


@pytest.fixture(scope="session")
def params():
    return wm.generate_params()


@pytest.fixture(scope="session")
def c1_profile(params):
    return wm.assemble_c1(params)


@pytest.fixture(scope="session")
def profile(c1_profile):
    return wm.smooth_c2(c1_profile)


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion")
    config._criteria = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None or rep.when != "call" and not (rep.when == "setup" and rep.failed):
        return
    num, title = mark.args
    item.config._criteria[num] = (title, rep.passed)
    line = f"criterion {num:>2}: {'PASS' if rep.passed else 'FAIL'}  {title}"
    print("\n" + line)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    crit = getattr(config, "_criteria", {})
    if not crit:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(crit):
        title, ok = crit[num]
        terminalreporter.write_line(f"criterion {num:>2}: {'PASS' if ok else 'FAIL'}  {title}")
