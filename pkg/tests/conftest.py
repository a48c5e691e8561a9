import numpy as np
import pytest

from hott.datasets import make_planted_corpus, make_topic_corpus
from hott.distances import topic_cost_matrix
from hott.topics import fit_lda
from hott.transport import MARGINAL_TOL, PLAN_AUDIT

# criterion number -> (title, outcome, detail)
_CRITERIA = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    number, title = marker.args
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        detail = dict(item.user_properties).get("detail", "")
        _CRITERIA[number] = (title, report.outcome, detail)


def pytest_terminal_summary(terminalreporter):
    if _CRITERIA:
        terminalreporter.section("acceptance criteria")
        for number in sorted(_CRITERIA):
            title, outcome, detail = _CRITERIA[number]
            status = "PASS" if outcome == "passed" else "FAIL"
            line = f"criterion {number:2d} {status}  {title}"
            terminalreporter.write_line(f"{line}  [{detail}]" if detail else line)
    terminalreporter.section("transport plan audit")
    terminalreporter.write_line(
        f"plans checked: {PLAN_AUDIT['plans']}  max marginal violation: "
        f"{PLAN_AUDIT['max_violation']:.3g} (limit {MARGINAL_TOL:g})"
    )


def pytest_sessionfinish(session, exitstatus):
    # every plan built anywhere in this process must satisfy its marginals
    if PLAN_AUDIT["max_violation"] > MARGINAL_TOL:
        session.exitstatus = 1


@pytest.fixture
def detail(record_property):
    """Attach a short measurement string to the criterion summary line."""
    def put(text):
        record_property("detail", text)
    return put


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def topic_fixture():
    corpus, table = make_topic_corpus(n_docs=60, seed=2)
    model = fit_lda(corpus, num_topics=8, iterations=200, seed=0)
    costs = topic_cost_matrix(model, table)
    return corpus, table, model, costs


@pytest.fixture(scope="session")
def planted():
    return make_planted_corpus(n_docs=200, doc_length=50, seed=0)
