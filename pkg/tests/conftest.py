import os
from pathlib import Path

import pytest

from harvest.fixture import MockCrawlServer, build_minicrawl
from harvest.pipeline import PipelineConfig

DATA = Path(__file__).parent / "data"

_acceptance = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "acceptance(n, title): numbered acceptance criterion")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("acceptance")
    if marker is None:
        return
    n, title = marker.args
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        status = {"passed": "PASS", "failed": "FAIL", "skipped": "SKIP"}[report.outcome]
        _acceptance[n] = (status, title)


def pytest_terminal_summary(terminalreporter):
    if not _acceptance:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_acceptance):
        status, title = _acceptance[n]
        terminalreporter.write_line(f"criterion {n:>2}: {status}  {title}")


@pytest.fixture(scope="session")
def minicrawl():
    return build_minicrawl()


@pytest.fixture
def server(minicrawl):
    with MockCrawlServer.for_minicrawl(minicrawl) as srv:
        yield srv


@pytest.fixture
def make_config(server, minicrawl, tmp_path):
    """Config factory pointed at the mock server, with fast retries."""

    def make(name="out", **kw):
        base = dict(crawls=[minicrawl.crawl], index_url=server.url, data_url=server.url,
                    output_dir=str(tmp_path / name), parallelism=4, retry_base=0.001,
                    retry_attempts=3, timeout=10.0)
        base.update(kw)
        return PipelineConfig(**base)

    return make


def live_enabled() -> bool:
    return os.environ.get("HARVEST_LIVE") == "1"
