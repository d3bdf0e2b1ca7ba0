import numpy as np
import pytest

from colorsearch import survey, tree
from colorsearch.synth import synthetic_survey

# Keep hypothesis and numpy noise out of the way of deterministic tests.
np.seterr(all="raise", under="ignore")


@pytest.fixture(scope="session")
def raw_survey():
    return synthetic_survey(n=30000, seed=11)


@pytest.fixture(scope="session")
def prepared_survey(raw_survey):
    # tau=0.95 keeps all 11 basic terms of the synthetic survey, cuts junk names
    d = survey.filter_by_frequency(raw_survey, tau=0.95)
    d = survey.remove_outliers(d, k=5, radius=8.0)
    d = survey.resample_smote(d, k=5, seed=11)
    return survey.restrict_labels(d, survey.BERLIN_KAY_LABELS)


@pytest.fixture(scope="session")
def basic_tree(prepared_survey):
    params = tree.TreeTrainParams(max_depth=14, min_samples_leaf=4, seed=11)
    return tree.train_tree(prepared_survey, params)


_ACCEPTANCE: dict[str, str] = {}


def pytest_runtest_logreport(report):
    if "test_acceptance" not in report.nodeid:
        return
    name = report.nodeid.split("::")[-1]
    if report.when == "setup" and report.skipped:
        reason = report.longrepr[2] if isinstance(report.longrepr, tuple) else str(report.longrepr)
        _ACCEPTANCE[name] = f"SKIP ({reason.removeprefix('Skipped: ')})"
    elif report.when == "call":
        if report.passed:
            _ACCEPTANCE[name] = "PASS"
        elif report.skipped:
            reason = report.longrepr[2] if isinstance(report.longrepr, tuple) else str(report.longrepr)
            _ACCEPTANCE[name] = f"SKIP ({reason.removeprefix('Skipped: ')})"
        else:
            _ACCEPTANCE[name] = "FAIL"


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance checks")
    for name, outcome in _ACCEPTANCE.items():
        terminalreporter.write_line(f"{name}: {outcome}")
