"""Ranged retrieval of single gzip members from the crawl data store."""

from __future__ import annotations

import logging
import os
import zlib
from collections import deque
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Iterable, Iterator, Optional

from .cdx import IndexEntry
from .net import RetriesExhausted, RetryableError, RetryPolicy, session

log = logging.getLogger(__name__)

DEFAULT_DATA_URL = "https://data.commoncrawl.org"
DATA_URL_ENV = "HARVEST_DATA_URL"


class FetchError(Exception):
    """The range could not be retrieved after all retries."""


class CorruptRecordError(Exception):
    """The retrieved bytes are not one intact gzip member holding a WARC record."""


@dataclass(frozen=True)
class RangeRequest:
    filename: str
    offset: int
    length: int

    def __post_init__(self):
        if self.length <= 0:
            raise ValueError("length must be positive")
        if self.offset < 0:
            raise ValueError("offset must be non-negative")

    @classmethod
    def for_entry(cls, entry: IndexEntry) -> "RangeRequest":
        return cls(entry.filename, entry.offset, entry.length)

    @property
    def header(self) -> str:
        return f"bytes={self.offset}-{self.offset + self.length - 1}"


@dataclass
class RawRecordBytes:
    source: RangeRequest
    data: bytes
    compressed_size: int

    @property
    def size(self) -> int:
        return len(self.data)


def gunzip_member(blob: bytes) -> bytes:
    """Decompress exactly one gzip member; raise CorruptRecordError otherwise."""
    d = zlib.decompressobj(31)
    try:
        out = d.decompress(blob)
    except zlib.error as exc:
        raise CorruptRecordError(f"gzip error: {exc}") from None
    if not d.eof:
        raise CorruptRecordError("gzip member truncated")
    if d.unused_data:
        log.debug("ignoring %d bytes after gzip member", len(d.unused_data))
    if not out.startswith(b"WARC/"):
        raise CorruptRecordError("decompressed member does not start with a WARC version line")
    return out


class RangeFetcher:
    def __init__(self, base_url: Optional[str] = None, policy: Optional[RetryPolicy] = None,
                 timeout: float = 60.0):
        self.base_url = (base_url or os.environ.get(DATA_URL_ENV) or DEFAULT_DATA_URL).rstrip("/")
        self.policy = policy or RetryPolicy()
        self.timeout = timeout

    def fetch_range(self, req: RangeRequest) -> RawRecordBytes:
        url = f"{self.base_url}/{req.filename.lstrip('/')}"

        def attempt() -> bytes:
            resp = session().get(url, headers={"Range": req.header}, timeout=self.timeout)
            if resp.status_code == 206:
                body = resp.content
            elif resp.status_code == 200:
                # server ignored the Range header and sent the whole object
                body = resp.content[req.offset:req.offset + req.length]
            elif resp.status_code >= 500 or resp.status_code in (408, 429):
                raise RetryableError(f"HTTP {resp.status_code} for {req.filename}")
            else:
                raise FetchError(f"HTTP {resp.status_code} for {req.filename}")
            if len(body) != req.length:
                raise RetryableError(f"short read: {len(body)} of {req.length} bytes")
            return body

        try:
            blob = self.policy.call(attempt, f"range {req.filename}@{req.offset}")
        except RetriesExhausted as exc:
            raise FetchError(str(exc)) from exc
        return RawRecordBytes(req, gunzip_member(blob), len(blob))


@dataclass
class FetchOutcome:
    entry: IndexEntry
    status: str  # done | failed | corrupt
    record: Optional[RawRecordBytes] = None
    error: Optional[str] = None


@dataclass
class FetchStats:
    done: int = 0
    failed: int = 0
    corrupt: int = 0
    compressed_in: int = 0
    decompressed_out: int = 0

    def add(self, outcome: FetchOutcome) -> None:
        if outcome.status == "done":
            self.done += 1
            self.compressed_in += outcome.record.compressed_size
            self.decompressed_out += outcome.record.size
        elif outcome.status == "corrupt":
            self.corrupt += 1
        else:
            self.failed += 1


def ordered_map(fn: Callable, items: Iterable, parallelism: int) -> Iterator:
    """``map`` over a bounded thread pool, yielding results in input order.

    At most ``2 * parallelism`` items are in flight; completion order never
    leaks into the output.
    """
    if parallelism < 1:
        raise ValueError("parallelism must be >= 1")
    if parallelism == 1:
        for item in items:
            yield fn(item)
        return
    window = deque()
    with ThreadPoolExecutor(max_workers=parallelism) as pool:
        for item in items:
            window.append(pool.submit(fn, item))
            if len(window) >= 2 * parallelism:
                yield window.popleft().result()
        while window:
            yield window.popleft().result()


def fetch_outcomes(fetcher: RangeFetcher, entries: Iterable[IndexEntry],
                   parallelism: int = 1) -> Iterator[FetchOutcome]:
    """One outcome per entry, in (filename, offset) order."""

    def one(entry: IndexEntry) -> FetchOutcome:
        try:
            rec = fetcher.fetch_range(RangeRequest.for_entry(entry))
            return FetchOutcome(entry, "done", rec)
        except CorruptRecordError as exc:
            return FetchOutcome(entry, "corrupt", error=str(exc))
        except FetchError as exc:
            return FetchOutcome(entry, "failed", error=str(exc))

    ordered = sorted(entries, key=lambda e: e.key)
    return ordered_map(one, ordered, parallelism)


def fetch_all(fetcher: RangeFetcher, entries: Iterable[IndexEntry], parallelism: int = 1,
              stats: Optional[FetchStats] = None) -> Iterator[RawRecordBytes]:
    stats = stats if stats is not None else FetchStats()
    for outcome in fetch_outcomes(fetcher, entries, parallelism):
        stats.add(outcome)
        if outcome.status == "done":
            yield outcome.record
        else:
            log.warning("%s %s@%d: %s", outcome.status, outcome.entry.filename,
                        outcome.entry.offset, outcome.error)
