import numpy as np
import pytest

from renyi_dqc1.states import StateSpec, build_state

_acceptance = []


def random_hermitian(rng, d):
    a = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    return 0.5 * (a + a.conj().T)


def random_state(d, delta, seed):
    return build_state(StateSpec("random", (d, delta), seed))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_collection_modifyitems(items):
    for item in items:
        mark = item.get_closest_marker("acceptance")
        if mark is not None:
            item.user_properties.append(("criterion", mark.kwargs["criterion"]))


def pytest_runtest_logreport(report):
    if report.when == "call" or report.failed:
        props = dict(report.user_properties)
        if "criterion" in props:
            _acceptance.append((props["criterion"], report.nodeid, report.outcome,
                                props.get("detail", "")))


def pytest_terminal_summary(terminalreporter):
    if not _acceptance:
        return
    terminalreporter.section("acceptance criteria")
    for crit, nodeid, outcome, detail in sorted(_acceptance, key=lambda x: (x[0], x[1])):
        status = "PASS" if outcome == "passed" else "FAIL"
        name = nodeid.split("::")[-1]
        terminalreporter.write_line(f"criterion {crit}: {status}  {name}  {detail}".rstrip())
