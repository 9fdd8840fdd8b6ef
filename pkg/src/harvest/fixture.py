"""A synthetic mini-crawl and a local server that mimics the index API and data store.

The crawl has twelve records spread over two WARC files:

* five Icelandic pages: P1 carries a three-line footer; P2 is byte-identical
  content to P1 at another URL; P3 has its own article plus the same footer;
  P4 is a plain article; P5 is nothing but navigation and short links.
* four English news pages.
* a request record, a metadata record and a gzip member cut short.

Run through the pipeline, P1, P3 and P4 survive, and only P1 keeps the footer.
"""

from __future__ import annotations

import base64
import hashlib
import json
import logging
import re
import threading
from dataclasses import dataclass, field
from datetime import datetime, timezone
from html import escape
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from typing import Dict, List, Optional, Sequence, Tuple
from urllib.parse import parse_qs, urlsplit

from .cdx import IndexEntry, matches_filters
from .warc import WarcRecord, gzip_member, response_record, serialize_warc

log = logging.getLogger(__name__)

CRAWL = "CC-MAIN-2020-10"
SEGMENT = f"crawl-data/{CRAWL}/segments/1581875140000.00/warc"
FILES = (f"{SEGMENT}/CC-MAIN-20200301000000-00000.warc.gz",
         f"{SEGMENT}/CC-MAIN-20200301000000-00001.warc.gz")

FOOTER = [
    "Við notum vafrakökur til að bæta upplifun þína af vefnum og til að greina hvernig hann er notaður.",
    "Allt efni á þessum vef er varið af höfundarrétti og það má ekki afrita það eða dreifa því án leyfis.",
    "Ef þú hefur ábendingu um frétt eða vilt koma einhverju á framfæri við ritstjórn er hægt að senda okkur póst.",
]

ARTICLES_IS = {
    "vedur": ("Gul viðvörun fyrir norðan", [
        "Veðurstofa Íslands hefur gefið út gula viðvörun fyrir allt norðanvert landið vegna "
        "hvassviðris og mikillar snjókomu sem spáð er á morgun. Búist er við því að vindur verði "
        "allt að tuttugu metrar á sekúndu og að færð á vegum geti spillst hratt, einkum á heiðum "
        "og fjallvegum þar sem skyggni verður lítið.",
        "Vegagerðin hvetur fólk til að fylgjast vel með upplýsingum um færð áður en lagt er af "
        "stað og að vera ekki á ferðinni að óþörfu á meðan veðrið gengur yfir.",
        "Gert er ráð fyrir að það lægi síðdegis á fimmtudag en þá mun kólna töluvert og frost "
        "getur orðið meira en tíu stig inn til landsins.",
    ]),
    "bokasafn": ("Nýtt bókasafn opnað í miðbænum", [
        "Nýtt bókasafn var opnað í miðbænum á laugardaginn og lögðu hundruð gesta leið sína "
        "þangað til að skoða húsið og taka þátt í dagskránni. Í safninu eru um fjörutíu þúsund "
        "bækur auk tímarita og hljóðbóka, og þar er einnig sérstakt rými fyrir börn þar sem lesið "
        "er upp á hverjum degi.",
        "Bæjarstjórinn sagði við opnunina að það hefði lengi verið draumur íbúanna að eignast "
        "almennilegt safn og að nú væri hann loksins orðinn að veruleika.",
    ]),
    "lodna": ("Loðnuvertíð hefst í næstu viku", [
        "Loðnuvertíðin hefst að öllum líkindum í næstu viku eftir að mælingar "
        "Hafrannsóknastofnunar sýndu að meira væri af loðnu í sjónum en talið var í haust. "
        "Útgerðarmenn fagna þessum tíðindum enda hefur vertíðin brugðist tvö ár í röð og það "
        "hefur haft mikil áhrif á afkomu fyrirtækja og sveitarfélaga við sjávarsíðuna.",
        "Ráðherra mun gefa út kvóta á grundvelli ráðgjafarinnar á næstu dögum og gert er ráð "
        "fyrir að skipin haldi til veiða strax í kjölfarið.",
    ]),
}

ARTICLES_EN = {
    "harbour": ("Harbour expansion approved", [
        "The town council has approved a plan to expand the harbour, which will allow larger "
        "cruise ships to dock in the summer months. Work is expected to begin in the spring and "
        "should be finished within two years if the weather allows it.",
        "Local business owners said they were pleased with the decision, although some residents "
        "are worried about traffic in the old town.",
    ]),
    "aurora": ("Where to see the northern lights", [
        "Visitors who come to see the northern lights are advised to leave the city and find a "
        "dark place away from street lights. The best chances are on clear nights between "
        "September and April, and the forecast is published every afternoon.",
        "Guides recommend warm clothes, a thermos of something hot and plenty of patience, since "
        "the lights can appear and vanish within minutes.",
    ]),
    "music": ("Festival line-up announced", [
        "The organisers of the winter music festival have announced the first thirty acts for "
        "this year, including several bands that have never played in the country before. "
        "Tickets go on sale on Friday morning and the festival is expected to sell out quickly.",
    ]),
    "geothermal": ("Geothermal plant to supply more homes", [
        "A new borehole at the geothermal plant will make it possible to supply hot water to "
        "about two thousand more homes in the region. Engineers say the well is one of the most "
        "productive they have drilled, and it should be connected to the network by the end of "
        "the year.",
    ]),
}

NAV_IS = ["Forsíða", "Fréttir", "Íþróttir", "Menning", "Viðskipti", "Veður", "Um okkur",
          "Hafa samband"]


def article_html(title: str, paragraphs: Sequence[str], footer: Sequence[str] = (),
                 lang: str = "is") -> str:
    nav = "".join(f'<li><a href="/{i}">{escape(t)}</a></li>' for i, t in enumerate(NAV_IS))
    body = "\n".join(f"<p>{escape(p)}</p>" for p in paragraphs)
    foot = "\n".join(f"<p>{escape(p)}</p>" for p in footer)
    return (f'<!DOCTYPE html>\n<html lang="{lang}"><head><meta charset="utf-8">'
            f"<title>{escape(title)}</title><script>var x = 1;</script></head><body>\n"
            f'<div class="nav"><ul>{nav}</ul></div>\n'
            f'<div class="article"><h1>{escape(title)}</h1>\n{body}</div>\n'
            f'<div class="footer">{foot}</div>\n</body></html>\n')


def nav_only_html() -> str:
    links = "".join(f'<li><a href="/flokkur/{i}">{escape(t)}</a></li>' for i, t in enumerate(NAV_IS))
    return ('<!DOCTYPE html>\n<html lang="is"><head><meta charset="utf-8"><title>Efnisyfirlit'
            f"</title></head><body>\n<ul>{links}</ul>\n<p>Sími 555 1234</p>\n"
            "<p>&copy; 2020 Fréttavefurinn</p>\n</body></html>\n")


def http_response(html: str, charset: str = "utf-8") -> bytes:
    body = html.encode(charset)
    head = (f"HTTP/1.1 200 OK\r\nContent-Type: text/html; charset={charset}\r\n"
            f"Content-Length: {len(body)}\r\n\r\n")
    return head.encode("ascii") + body


def payload_digest(data: bytes) -> str:
    return base64.b32encode(hashlib.sha1(data).digest()).decode("ascii")


def surt(url: str) -> str:
    parts = urlsplit(url)
    host = ",".join(reversed(parts.hostname.split(".")))
    return f"{host}){parts.path or '/'}"


@dataclass
class FixtureRecord:
    name: str
    url: str
    kind: str  # response | request | metadata | corrupt
    timestamp: str
    warc: bytes  # uncompressed record
    member: bytes = b""  # what sits in the WARC file (gzip member, possibly cut short)

    @property
    def digest(self) -> str:
        return payload_digest(self.warc)


@dataclass
class MiniCrawl:
    records: Dict[str, List[FixtureRecord]]  # filename -> records in file order
    files: Dict[str, bytes]
    entries: List[IndexEntry]
    expected_urls: List[str] = field(default_factory=list)

    @property
    def crawl(self) -> str:
        return CRAWL


def _warc(url: str, kind: str, payload: bytes, when: datetime) -> bytes:
    if kind == "response":
        rec = response_record(url, payload, when)
    else:
        content_type = {"request": "application/http; msgtype=request",
                        "metadata": "application/warc-fields"}[kind]
        rec = WarcRecord("WARC/1.0", [
            ("WARC-Type", kind),
            ("WARC-Date", when.strftime("%Y-%m-%dT%H:%M:%SZ")),
            ("WARC-Record-ID", f"<urn:uuid:{hashlib.md5((kind + url).encode()).hexdigest()[:8]}"
                               "-0000-4000-8000-000000000000>"),
            ("WARC-Target-URI", url),
            ("Content-Type", content_type),
            ("Content-Length", str(len(payload))),
        ], payload)
    return serialize_warc(rec)


def build_minicrawl() -> MiniCrawl:
    """Deterministic: the same bytes on every call."""
    base = datetime(2020, 2, 17, 8, 0, 0, tzinfo=timezone.utc)
    t, p = ARTICLES_IS["vedur"]
    p1 = article_html(t, p, FOOTER)
    t3, pp3 = ARTICLES_IS["bokasafn"]
    t4, pp4 = ARTICLES_IS["lodna"]
    layout = [
        # (file index, name, url, kind, payload)
        (0, "P1", "https://www.frettir.is/vedur/gul-vidvorun", "response", http_response(p1)),
        (0, "E1", "https://english.frettir.is/harbour", "response",
         http_response(article_html(*ARTICLES_EN["harbour"], lang="en"))),
        (0, "P2", "https://frettir.is/vedur/gul-vidvorun?utm=rss", "response", http_response(p1)),
        (0, "REQ", "https://www.frettir.is/vedur/gul-vidvorun", "request",
         b"GET /vedur/gul-vidvorun HTTP/1.1\r\nHost: www.frettir.is\r\n\r\n"),
        (0, "P3", "https://www.frettir.is/menning/bokasafn", "response",
         http_response(article_html(t3, pp3, FOOTER))),
        (0, "E2", "https://visit.example.is/aurora", "response",
         http_response(article_html(*ARTICLES_EN["aurora"], lang="en"))),
        (1, "META", "https://www.frettir.is/menning/bokasafn", "metadata",
         b"fetchTimeMs: 212\r\ncharset-detected: UTF-8\r\n"),
        (1, "P4", "https://www.sjavarutvegur.is/lodna", "response",
         http_response(article_html(t4, pp4))),
        (1, "E3", "https://festival.example.is/lineup", "response",
         http_response(article_html(*ARTICLES_EN["music"], lang="en"))),
        (1, "BAD", "https://www.frettir.is/skemmd-sida", "corrupt",
         http_response(article_html(t4, pp4[:1]))),
        (1, "P5", "https://www.frettir.is/efnisyfirlit", "response", http_response(nav_only_html())),
        (1, "E4", "https://energy.example.is/borehole", "response",
         http_response(article_html(*ARTICLES_EN["geothermal"], lang="en"))),
    ]
    records: Dict[str, List[FixtureRecord]] = {f: [] for f in FILES}
    files: Dict[str, bytes] = {}
    entries: List[IndexEntry] = []
    for n, (fi, name, url, kind, payload) in enumerate(layout):
        when = base.replace(minute=n)
        warc = _warc(url, "response" if kind == "corrupt" else kind, payload, when)
        member = gzip_member(warc)
        if kind == "corrupt":
            member = member[: len(member) * 2 // 3]
        records[FILES[fi]].append(FixtureRecord(name, url, kind, when.strftime("%Y%m%d%H%M%S"),
                                                warc, member))
    for filename, recs in records.items():
        offset = 0
        for rec in recs:
            entries.append(IndexEntry(
                urlkey=surt(rec.url), timestamp=rec.timestamp, url=rec.url,
                mime="text/html", status=200, digest=rec.digest, filename=filename,
                offset=offset, length=len(rec.member)))
            offset += len(rec.member)
        files[filename] = b"".join(r.member for r in recs)
    expected = [records[FILES[0]][0].url, records[FILES[0]][4].url, records[FILES[1]][1].url]
    return MiniCrawl(records, files, entries, expected)


# -- mock server ----------------------------------------------------------------

def pattern_matches(pattern: str, url: str) -> bool:
    """The subset of index URL patterns the mock understands: ``*.tld`` and prefixes."""
    host = urlsplit(url).hostname or ""
    if pattern.startswith("*."):
        suffix = pattern[1:].split("/")[0]
        return host.endswith(suffix) or host == suffix[1:]
    return url.startswith(pattern.rstrip("*"))


@dataclass
class ServerFaults:
    """Knobs for failure-injection tests."""

    fail_paths: Dict[str, int] = field(default_factory=dict)  # path -> remaining 503s
    malformed_on_page: Optional[int] = None
    ignore_range: bool = False
    page_status: Dict[int, int] = field(default_factory=dict)  # index page -> forced status


class MockCrawlServer:
    """Serves ``/<crawl>-index`` (pywb-style), ``/collinfo.json`` and ranged file reads."""

    def __init__(self, crawls: Dict[str, List[IndexEntry]], files: Dict[str, bytes],
                 page_size: int = 5, faults: Optional[ServerFaults] = None, port: int = 0):
        self.crawls = crawls
        self.port = port
        self.files = files
        self.page_size = page_size
        self.faults = faults or ServerFaults()
        self.requests: List[Tuple[str, Dict[str, str]]] = []
        self._lock = threading.Lock()
        self._httpd: Optional[ThreadingHTTPServer] = None
        self._thread: Optional[threading.Thread] = None

    @classmethod
    def for_minicrawl(cls, crawl: Optional[MiniCrawl] = None, **kw) -> "MockCrawlServer":
        crawl = crawl or build_minicrawl()
        return cls({CRAWL: crawl.entries}, crawl.files, **kw)

    @property
    def url(self) -> str:
        host, port = self._httpd.server_address[:2]
        return f"http://{host}:{port}"

    def __enter__(self) -> "MockCrawlServer":
        return self.start()

    def __exit__(self, *exc) -> None:
        self.stop()

    def start(self) -> "MockCrawlServer":
        server = self

        class Handler(BaseHTTPRequestHandler):
            protocol_version = "HTTP/1.1"

            def log_message(self, fmt, *args):
                log.debug("mock: " + fmt, *args)

            def do_GET(self):
                server._handle(self)

        self._httpd = ThreadingHTTPServer(("127.0.0.1", self.port), Handler)
        self._httpd.daemon_threads = True
        self._thread = threading.Thread(target=self._httpd.serve_forever, args=(0.02,),
                                        daemon=True)
        self._thread.start()
        return self

    def stop(self) -> None:
        if self._httpd:
            self._httpd.shutdown()
            self._httpd.server_close()
            self._httpd = None

    def request_count(self, prefix: str = "") -> int:
        with self._lock:
            return sum(1 for path, _ in self.requests if path.startswith(prefix))

    # -- request handling ---------------------------------------------------
    def _reply(self, h, status: int, body: bytes, ctype: str = "text/plain",
               extra: Sequence[Tuple[str, str]] = ()) -> None:
        h.send_response(status)
        h.send_header("Content-Type", ctype)
        h.send_header("Content-Length", str(len(body)))
        for k, v in extra:
            h.send_header(k, v)
        h.end_headers()
        h.wfile.write(body)

    def _handle(self, h) -> None:
        parts = urlsplit(h.path)
        path = parts.path
        with self._lock:
            self.requests.append((path, dict(h.headers)))
            remaining = self.faults.fail_paths.get(path, 0)
            if remaining:
                self.faults.fail_paths[path] = remaining - 1
        if remaining:
            return self._reply(h, 503, b"try again later")
        if path == "/collinfo.json":
            info = [{"id": c, "name": c} for c in sorted(self.crawls, reverse=True)]
            return self._reply(h, 200, json.dumps(info).encode(), "application/json")
        m = re.fullmatch(r"/(CC-MAIN-\d{4}-\d{2})-index", path)
        if m:
            return self._index(h, m.group(1), parse_qs(parts.query))
        return self._file(h, path.lstrip("/"))

    def _index(self, h, crawl: str, q: Dict[str, List[str]]) -> None:
        if crawl not in self.crawls:
            return self._reply(h, 404, b"Collection not found")
        pattern = q.get("url", [""])[0]
        filters = []
        for f in q.get("filter", []):
            name, _, value = f.partition(":")
            filters.append((name, value))
        hits = [e for e in self.crawls[crawl]
                if pattern_matches(pattern, e.url) and matches_filters(e, filters)]
        hits.sort(key=lambda e: (e.urlkey, e.timestamp))
        if not hits:
            return self._reply(h, 404, f"No Captures found for: {pattern}".encode())
        n_pages = -(-len(hits) // self.page_size)
        if q.get("showNumPages", ["false"])[0] == "true":
            body = {"pages": n_pages, "pageSize": self.page_size, "blocks": n_pages}
            return self._reply(h, 200, json.dumps(body).encode(), "application/json")
        page = int(q.get("page", ["0"])[0])
        if page in self.faults.page_status:
            return self._reply(h, self.faults.page_status[page], b"forced failure")
        if not 0 <= page < n_pages:
            return self._reply(h, 400, b"page out of range")
        chunk = hits[page * self.page_size:(page + 1) * self.page_size]
        lines = [e.to_json() for e in chunk]
        if self.faults.malformed_on_page == page:
            lines.insert(1, '{"urlkey": "is,broken)/", "timestamp": "2020", "offset": "x"}')
        self._reply(h, 200, ("\n".join(lines) + "\n").encode(), "text/x-ndjson")

    def _file(self, h, name: str) -> None:
        data = self.files.get(name)
        if data is None:
            return self._reply(h, 404, b"NoSuchKey")
        rng = h.headers.get("Range")
        m = re.fullmatch(r"bytes=(\d+)-(\d+)", rng or "")
        if not m or self.faults.ignore_range:
            return self._reply(h, 200, data, "application/octet-stream")
        start, end = int(m.group(1)), int(m.group(2))
        if start >= len(data):
            return self._reply(h, 416, b"", extra=[("Content-Range", f"bytes */{len(data)}")])
        end = min(end, len(data) - 1)
        self._reply(h, 206, data[start:end + 1], "application/octet-stream",
                    [("Content-Range", f"bytes {start}-{end}/{len(data)}")])
