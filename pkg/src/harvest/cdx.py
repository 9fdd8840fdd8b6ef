"""Client for the Common Crawl index server (pywb CDX API, JSON-lines output)."""

from __future__ import annotations

import json
import logging
import os
import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from datetime import datetime
from typing import Callable, Dict, Iterable, List, Optional, Sequence, Tuple

from .net import RetriesExhausted, RetryableError, RetryPolicy, session

log = logging.getLogger(__name__)

DEFAULT_INDEX_URL = "https://index.commoncrawl.org"
INDEX_URL_ENV = "HARVEST_INDEX_URL"

# pywb filter syntax: "=field" exact, "~field" regex, "!" negates, bare field is substring
DEFAULT_FILTERS: Tuple[Tuple[str, str], ...] = (("=status", "200"), ("mime", "html"))

_CRAWL_RE = re.compile(r"^CC-MAIN-(\d{4})-(\d{2})$")


class IndexServerError(Exception):
    pass


class UnknownCrawlError(IndexServerError):
    """The index server has no collection with this label."""


class MalformedEntry(ValueError):
    pass


@dataclass(frozen=True, order=True)
class CrawlId:
    label: str

    def __post_init__(self):
        if not _CRAWL_RE.match(self.label):
            raise ValueError(f"crawl id {self.label!r} does not match CC-MAIN-YYYY-WW")

    def __str__(self) -> str:
        return self.label


def crawl_range(labels: Iterable[str], start: Optional[str] = None,
                stop: Optional[str] = None) -> List[CrawlId]:
    """Validated, sorted crawl ids, optionally clipped to [start, stop] by label order."""
    crawls = sorted({CrawlId(label) for label in labels})
    return [c for c in crawls
            if (start is None or c.label >= start) and (stop is None or c.label <= stop)]


@dataclass
class IndexQuery:
    url_pattern: str
    crawl: CrawlId
    page: int = 0
    filters: Sequence[Tuple[str, str]] = DEFAULT_FILTERS

    def __post_init__(self):
        if not self.url_pattern:
            raise ValueError("url_pattern must be non-empty")
        if self.page < 0:
            raise ValueError("page must be non-negative")

    def params(self, num_pages: bool = False) -> List[Tuple[str, str]]:
        params = [("url", self.url_pattern), ("output", "json")]
        if num_pages:
            params.append(("showNumPages", "true"))
        else:
            params.append(("page", str(self.page)))
        params += [("filter", f"{name}:{value}") for name, value in self.filters]
        return params


@dataclass(frozen=True)
class IndexEntry:
    urlkey: str
    timestamp: str
    url: str
    mime: str
    status: int
    digest: str
    filename: str
    offset: int
    length: int

    def __post_init__(self):
        if self.length <= 0:
            raise MalformedEntry(f"length must be positive, got {self.length}")
        if self.offset < 0:
            raise MalformedEntry(f"offset must be non-negative, got {self.offset}")
        if self.offset + self.length >= 2 ** 63:
            raise MalformedEntry("offset + length overflows")
        if not (len(self.timestamp) == 14 and self.timestamp.isdigit()):
            raise MalformedEntry(f"timestamp {self.timestamp!r} is not YYYYMMDDhhmmss")
        try:
            datetime.strptime(self.timestamp, "%Y%m%d%H%M%S")
        except ValueError:
            raise MalformedEntry(f"timestamp {self.timestamp!r} is not a valid date") from None
        if not 100 <= self.status <= 599:
            raise MalformedEntry(f"status {self.status} is not an HTTP status")
        if not self.filename:
            raise MalformedEntry("empty filename")

    @property
    def key(self) -> Tuple[str, int]:
        return (self.filename, self.offset)

    @classmethod
    def from_json(cls, line: str) -> "IndexEntry":
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise MalformedEntry(f"not JSON: {exc}") from None
        if not isinstance(obj, dict):
            raise MalformedEntry("not a JSON object")
        try:
            status = str(obj["status"])
            if not (len(status) == 3 and status.isdigit()):
                raise MalformedEntry(f"status {status!r} is not a 3-digit code")
            return cls(
                urlkey=str(obj["urlkey"]),
                timestamp=str(obj["timestamp"]),
                url=str(obj["url"]),
                mime=str(obj.get("mime", "")),
                status=int(status),
                digest=str(obj.get("digest", "")),
                filename=str(obj["filename"]),
                offset=int(obj["offset"]),
                length=int(obj["length"]),
            )
        except KeyError as exc:
            raise MalformedEntry(f"missing field {exc}") from None
        except (TypeError, ValueError) as exc:
            if isinstance(exc, MalformedEntry):
                raise
            raise MalformedEntry(str(exc)) from None

    def to_dict(self) -> Dict:
        d = asdict(self)
        d["status"] = str(self.status)
        d["offset"] = str(self.offset)
        d["length"] = str(self.length)
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), ensure_ascii=False)


def matches_filters(entry: IndexEntry, filters: Sequence[Tuple[str, str]]) -> bool:
    """Evaluate pywb-style filters locally (for post hoc filtering)."""
    fields = entry.to_dict()
    for name, value in filters:
        negate = name.startswith("!")
        name = name.lstrip("!")
        mode = "contains"
        if name[:1] in "=~":
            mode, name = ("exact" if name[0] == "=" else "regex"), name[1:]
        actual = fields.get(name, "")
        if mode == "exact":
            ok = actual == value
        elif mode == "regex":
            ok = re.match(value, actual) is not None
        else:
            ok = value in actual
        if ok == negate:
            return False
    return True


@dataclass
class IndexPage:
    entries: List[IndexEntry]
    skipped: int = 0
    lines: int = 0


class IndexClient:
    """Talks to ``<base>/<crawl>-index``; the base URL may point at a local mock."""

    def __init__(self, base_url: Optional[str] = None, policy: Optional[RetryPolicy] = None,
                 timeout: float = 60.0):
        self.base_url = (base_url or os.environ.get(INDEX_URL_ENV) or DEFAULT_INDEX_URL).rstrip("/")
        self.policy = policy or RetryPolicy()
        self.timeout = timeout

    def endpoint(self, crawl: CrawlId) -> str:
        return f"{self.base_url}/{crawl.label}-index"

    def _get(self, query: IndexQuery, num_pages: bool) -> Optional[str]:
        """Response body, or None for the server's "no captures" answer."""

        def attempt():
            resp = session().get(self.endpoint(query.crawl), params=query.params(num_pages),
                                 timeout=self.timeout)
            if resp.status_code == 404:
                if "no captures" in resp.text.lower():
                    return None
                raise UnknownCrawlError(f"{query.crawl}: index collection not found")
            if resp.status_code >= 500 or resp.status_code == 429:
                raise RetryableError(f"HTTP {resp.status_code} from index server")
            if resp.status_code != 200:
                raise IndexServerError(f"HTTP {resp.status_code} from index server")
            resp.encoding = "utf-8"
            return resp.text

        return self.policy.call(attempt, f"index {query.crawl} page {query.page}")

    def page_count(self, query: IndexQuery) -> int:
        body = self._get(query, num_pages=True)
        if body is None or not body.strip():
            return 0
        try:
            info = json.loads(body)
        except json.JSONDecodeError:
            # plain-text servers answer with a bare integer
            return int(body.strip())
        if isinstance(info, int):
            return info
        return int(info.get("pages", 0))

    def fetch_index_page(self, query: IndexQuery) -> IndexPage:
        body = self._get(query, num_pages=False)
        return parse_index_lines(body or "")

    def list_crawls(self) -> List[CrawlId]:
        """Crawls the server advertises in ``collinfo.json``."""

        def attempt():
            resp = session().get(f"{self.base_url}/collinfo.json", timeout=self.timeout)
            if resp.status_code >= 500 or resp.status_code == 429:
                raise RetryableError(f"HTTP {resp.status_code} from index server")
            if resp.status_code != 200:
                raise IndexServerError(f"HTTP {resp.status_code} for collinfo.json")
            return resp.json()

        info = self.policy.call(attempt, "collinfo.json")
        return sorted(CrawlId(c["id"]) for c in info if _CRAWL_RE.match(str(c.get("id", ""))))


def parse_index_lines(body: str) -> IndexPage:
    page = IndexPage([])
    for line in body.splitlines():
        if not line.strip():
            continue
        page.lines += 1
        try:
            page.entries.append(IndexEntry.from_json(line))
        except MalformedEntry as exc:
            page.skipped += 1
            log.debug("skipping malformed index line: %s", exc)
    return page


@dataclass
class EnumerationStats:
    served_lines: int = 0
    emitted: int = 0
    skipped: int = 0
    duplicates: int = 0
    filtered: int = 0
    pages_done: int = 0
    pages_failed: int = 0
    unknown_crawls: List[str] = field(default_factory=list)


def enumerate_tld(client: IndexClient, pattern: str, crawls: Sequence[CrawlId],
                  filters: Sequence[Tuple[str, str]] = DEFAULT_FILTERS,
                  post_filters: Sequence[Tuple[str, str]] = (),
                  parallelism: int = 1,
                  sink: Optional[Callable[[Dict], None]] = None,
                  stats: Optional[EnumerationStats] = None) -> List[IndexEntry]:
    """All entries for ``pattern`` across ``crawls`` in canonical order.

    Canonical order is crawl label, then (filename, offset). A record indexed
    more than once is kept at its first occurrence. Failed pages and unknown
    crawls are reported to ``sink`` and never abort the enumeration.
    """
    stats = stats if stats is not None else EnumerationStats()
    emit = sink or (lambda event: None)
    seen = set()
    out: List[IndexEntry] = []

    for crawl in sorted(crawls):
        base = IndexQuery(pattern, crawl, 0, filters)
        try:
            n_pages = client.page_count(base)
        except UnknownCrawlError as exc:
            log.warning("%s", exc)
            stats.unknown_crawls.append(crawl.label)
            emit({"kind": "crawl", "crawl": crawl.label, "status": "unknown"})
            continue
        except (RetriesExhausted, IndexServerError) as exc:
            log.warning("page count for %s failed: %s", crawl, exc)
            stats.pages_failed += 1
            emit({"kind": "crawl", "crawl": crawl.label, "status": "failed", "error": str(exc)})
            continue
        emit({"kind": "crawl", "crawl": crawl.label, "status": "ok", "pages": n_pages})

        def fetch(page_no: int):
            q = IndexQuery(pattern, crawl, page_no, filters)
            try:
                return client.fetch_index_page(q), None
            except (RetriesExhausted, IndexServerError) as exc:
                return None, exc

        with ThreadPoolExecutor(max_workers=max(1, parallelism)) as pool:
            results = list(pool.map(fetch, range(n_pages)))

        crawl_entries: List[IndexEntry] = []
        for page_no, (page, err) in enumerate(results):
            if page is None:
                stats.pages_failed += 1
                log.warning("index page %s/%d failed: %s", crawl, page_no, err)
                emit({"kind": "index-page", "crawl": crawl.label, "page": page_no,
                      "status": "failed", "error": str(err)})
                continue
            stats.pages_done += 1
            stats.served_lines += page.lines
            stats.skipped += page.skipped
            emit({"kind": "index-page", "crawl": crawl.label, "page": page_no, "status": "done",
                  "lines": page.lines, "entries": len(page.entries), "skipped": page.skipped})
            for entry in page.entries:
                if post_filters and not matches_filters(entry, post_filters):
                    stats.filtered += 1
                    continue
                if entry.key in seen:
                    stats.duplicates += 1
                    continue
                seen.add(entry.key)
                crawl_entries.append(entry)
        crawl_entries.sort(key=lambda e: e.key)
        out.extend(crawl_entries)

    stats.emitted = len(out)
    return out


def read_entries(path: str) -> List[IndexEntry]:
    with open(path, encoding="utf-8") as fh:
        return [IndexEntry.from_json(line) for line in fh if line.strip()]


def write_entries(path: str, entries: Iterable[IndexEntry]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for entry in entries:
            fh.write(entry.to_json() + "\n")
