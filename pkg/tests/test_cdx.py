import json
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from harvest.cdx import (DEFAULT_FILTERS, CrawlId, EnumerationStats, IndexClient, IndexEntry,
                         IndexQuery, MalformedEntry, UnknownCrawlError, crawl_range, enumerate_tld,
                         matches_filters, parse_index_lines)
from harvest.fixture import MockCrawlServer
from harvest.net import RetriesExhausted, RetryPolicy

FAST = RetryPolicy(base=0.001, max_attempts=3, seed=0)


def make_entries(crawl: str, n: int, seed: int = 0, host: str = "example"):
    rng = random.Random(seed)
    out = []
    for i in range(n):
        fname = f"crawl-data/{crawl}/segments/s/warc/part-{i % 3:05d}.warc.gz"
        out.append(IndexEntry(
            urlkey=f"{host},site{i})/p", timestamp=f"2020021{rng.randint(0, 9)}120000",
            url=f"https://site{i}.{host}/p", mime="text/html", status=200,
            digest=f"D{i:031d}", filename=fname, offset=1000 * (n - i), length=500 + i))
    return out


@pytest.fixture
def index_server():
    crawls = {"CC-MAIN-2019-04": make_entries("CC-MAIN-2019-04", 8, 1),
              "CC-MAIN-2020-10": make_entries("CC-MAIN-2020-10", 12, 2)}
    with MockCrawlServer(crawls, {}, page_size=4) as srv:
        yield srv


def client(srv):
    return IndexClient(srv.url, FAST, timeout=5)


def q(crawl="CC-MAIN-2020-10", page=0, pattern="*.example"):
    return IndexQuery(pattern, CrawlId(crawl), page)


# -- types ---------------------------------------------------------------------

@pytest.mark.parametrize("label", ["CC-MAIN-2020-10", "CC-MAIN-2008-01"])
def test_crawl_id_valid(label):
    assert str(CrawlId(label)) == label


@pytest.mark.parametrize("label", ["CC-MAIN-20-10", "cc-main-2020-10", "CC-MAIN-2020-1", ""])
def test_crawl_id_invalid(label):
    with pytest.raises(ValueError):
        CrawlId(label)


def test_crawl_range_clips_and_sorts():
    labels = ["CC-MAIN-2020-10", "CC-MAIN-2008-01", "CC-MAIN-2019-04", "CC-MAIN-2020-16"]
    got = crawl_range(labels, "CC-MAIN-2009-01", "CC-MAIN-2020-10")
    assert [c.label for c in got] == ["CC-MAIN-2019-04", "CC-MAIN-2020-10"]


def test_query_params():
    params = q(page=2).params()
    assert ("output", "json") in params and ("page", "2") in params
    assert ("filter", "=status:200") in params and ("filter", "mime:html") in params
    assert ("showNumPages", "true") in q().params(num_pages=True)
    with pytest.raises(ValueError):
        IndexQuery("", CrawlId("CC-MAIN-2020-10"))


def test_entry_json_round_trip():
    e = make_entries("CC-MAIN-2020-10", 1)[0]
    assert IndexEntry.from_json(e.to_json()) == e
    assert json.loads(e.to_json())["offset"] == str(e.offset)


@pytest.mark.parametrize("mutate", [
    {"length": "0"}, {"offset": "-1"}, {"timestamp": "2020"}, {"timestamp": "20201341000000"},
    {"status": "2000"}, {"filename": ""}, {"offset": str(2 ** 63)},
])
def test_entry_invariants(mutate):
    d = make_entries("CC-MAIN-2020-10", 1)[0].to_dict()
    d.update(mutate)
    with pytest.raises(MalformedEntry):
        IndexEntry.from_json(json.dumps(d))


def test_parse_index_lines_tolerant():
    good = [e.to_json() for e in make_entries("CC-MAIN-2020-10", 3)]
    body = "\n".join([good[0], "{not json", good[1], good[2]]) + "\n"
    page = parse_index_lines(body)
    assert (len(page.entries), page.skipped, page.lines) == (3, 1, 4)
    assert parse_index_lines("").entries == []


def test_filters_local_evaluation():
    e = make_entries("CC-MAIN-2020-10", 1)[0]
    assert matches_filters(e, DEFAULT_FILTERS)
    assert not matches_filters(e, [("!mime", "html")])
    assert matches_filters(e, [("~url", r"https://site0\.")])
    assert not matches_filters(e, [("=status", "404")])


# -- against the mock server ----------------------------------------------------

def test_page_count(index_server):
    assert client(index_server).page_count(q()) == 3


def test_page_count_zero_hits(index_server):
    assert client(index_server).page_count(q(pattern="*.nowhere")) == 0


def test_fetch_page_matches_server(index_server):
    c = client(index_server)
    served = sorted(index_server.crawls["CC-MAIN-2020-10"], key=lambda e: (e.urlkey, e.timestamp))
    page = c.fetch_index_page(q(page=1))
    assert page.entries == served[4:8]
    assert [e.offset for e in page.entries] == [e.offset for e in served[4:8]]


def test_malformed_line_counted(index_server):
    index_server.faults.malformed_on_page = 0
    page = client(index_server).fetch_index_page(q(page=0))
    assert (len(page.entries), page.skipped) == (4, 1)


def test_unknown_crawl(index_server):
    with pytest.raises(UnknownCrawlError):
        client(index_server).page_count(q(crawl="CC-MAIN-2011-01"))


def test_retries_then_succeeds(index_server):
    index_server.faults.fail_paths["/CC-MAIN-2020-10-index"] = 2
    assert client(index_server).page_count(q()) == 3
    assert index_server.request_count("/CC-MAIN-2020-10-index") == 3


def test_retries_exhausted(index_server):
    index_server.faults.fail_paths["/CC-MAIN-2020-10-index"] = 10
    with pytest.raises(RetriesExhausted):
        client(index_server).page_count(q())


def test_list_crawls(index_server):
    assert [c.label for c in client(index_server).list_crawls()] == [
        "CC-MAIN-2019-04", "CC-MAIN-2020-10"]


def test_enumerate_two_crawls_union(index_server):
    events = []
    stats = EnumerationStats()
    crawls = [CrawlId("CC-MAIN-2020-10"), CrawlId("CC-MAIN-2019-04")]
    out = enumerate_tld(client(index_server), "*.example", crawls, parallelism=3,
                        sink=events.append, stats=stats)
    assert len(out) == 20
    assert len({e.key for e in out}) == 20
    # crawls in label order, (filename, offset) order inside each
    first = out[:8]
    assert all("CC-MAIN-2019-04" in e.filename for e in first)
    assert first == sorted(first, key=lambda e: e.key)
    assert [e["kind"] for e in events].count("index-page") == 2 + 3


def test_enumerate_deterministic(index_server):
    crawls = [CrawlId("CC-MAIN-2019-04"), CrawlId("CC-MAIN-2020-10")]
    runs = []
    for par in (1, 4):
        events = []
        out = enumerate_tld(client(index_server), "*.example", crawls, parallelism=par,
                            sink=events.append)
        runs.append(([e.to_json() for e in out], json.dumps(events, sort_keys=True)))
    assert runs[0] == runs[1]


def test_enumerate_duplicate_across_crawls():
    a = make_entries("CC-MAIN-2019-04", 3)
    b = list(a[:1]) + make_entries("CC-MAIN-2020-10", 2, host="example")
    with MockCrawlServer({"CC-MAIN-2019-04": a, "CC-MAIN-2020-10": b}, {}) as srv:
        stats = EnumerationStats()
        out = enumerate_tld(client(srv), "*.example",
                            [CrawlId("CC-MAIN-2019-04"), CrawlId("CC-MAIN-2020-10")], stats=stats)
    assert len(out) == 5 and stats.duplicates == 1


def test_enumerate_zero_crawls(index_server):
    assert enumerate_tld(client(index_server), "*.example", []) == []


def test_enumerate_conservation_with_failures(index_server):
    index_server.faults.malformed_on_page = 1
    index_server.faults.page_status[2] = 500
    events, stats = [], EnumerationStats()
    crawls = [CrawlId("CC-MAIN-2019-04"), CrawlId("CC-MAIN-2020-10"), CrawlId("CC-MAIN-2011-01")]
    out = enumerate_tld(client(index_server), "*.example", crawls, sink=events.append, stats=stats)
    # CC-MAIN-2019-04: 8 hits, 2 pages; CC-MAIN-2020-10: 12 hits, page 2 fails for both crawls
    assert stats.unknown_crawls == ["CC-MAIN-2011-01"]
    assert stats.pages_failed == 1
    assert stats.served_lines == stats.emitted + stats.skipped + stats.duplicates + stats.filtered
    assert stats.skipped == 2
    server_lines = 8 + 12
    failed_lines = 4  # page 2 of the 12-entry crawl
    assert len(out) + failed_lines == server_lines
    failed = [e for e in events if e.get("status") == "failed"]
    assert len(failed) == 1 and failed[0]["page"] == 2
    assert any(e.get("status") == "unknown" for e in events)


@settings(max_examples=30, deadline=None)
@given(st.lists(st.tuples(st.sampled_from(["a.warc.gz", "b.warc.gz"]), st.integers(0, 50)),
                max_size=30))
def test_enumeration_keys_unique(pairs):
    entries = [IndexEntry(f"x,y{i})/", "20200101000000", f"https://y{i}.x/", "text/html", 200,
                          "D", f, o, 10) for i, (f, o) in enumerate(pairs)]
    with MockCrawlServer({"CC-MAIN-2020-10": entries}, {}, page_size=7) as srv:
        out = enumerate_tld(client(srv), "*.x", [CrawlId("CC-MAIN-2020-10")])
    assert len(out) == len(set(pairs))
    assert out == sorted(out, key=lambda e: e.key)
