"""WARC record codec and embedded HTTP response parsing.

Only WARC/1.0 and WARC/1.1 are accepted. Records are framed by their
Content-Length header; the ``CRLF CRLF`` record delimiter is tolerated after
the payload and excluded from it.
"""

from __future__ import annotations

import codecs
import re
import uuid
import zlib
from dataclasses import dataclass
from datetime import datetime, timezone
from typing import Iterator, List, Optional, Tuple

CRLF = b"\r\n"
HEADER_END = b"\r\n\r\n"
VERSIONS = ("WARC/1.0", "WARC/1.1")

_STATUS_LINE = re.compile(rb"^HTTP/(\d)(?:\.(\d))?\s+(\d{3})(?:\s+(.*))?$")
_CHARSET_PARAM = re.compile(r"""charset\s*=\s*["']?([^"';\s]+)""", re.IGNORECASE)
_META_CHARSET = re.compile(rb"""<meta[^>]+charset\s*=\s*["']?([^'"/>\s;]+)""", re.IGNORECASE)
_TOKEN = re.compile(r"^[!#$%&'*+\-.^_`|~0-9A-Za-z]+$")

Headers = List[Tuple[str, str]]


class WarcError(ValueError):
    """Base class for codec errors."""


class WarcParseError(WarcError):
    """Malformed WARC input.

    ``reason`` is a short machine-readable tag, ``offset`` the byte position
    where the problem was detected and ``header`` the offending header name,
    when there is one.
    """

    def __init__(self, reason: str, message: str, offset: Optional[int] = None,
                 header: Optional[str] = None):
        self.reason = reason
        self.offset = offset
        self.header = header
        where = f" at byte {offset}" if offset is not None else ""
        super().__init__(f"{reason}: {message}{where}")


class WarcFormatError(WarcError):
    """A record violates an invariant and cannot be serialized."""


class RecordTypeError(WarcError, TypeError):
    """HTTP extraction attempted on a record that is not a response."""


class HttpParseError(WarcError):
    pass


class UnsupportedCodingError(HttpParseError):
    """Transfer or content coding we cannot undo; the record is skipped."""


def _find_header(headers: Headers, name: str) -> Optional[str]:
    lname = name.lower()
    for key, value in headers:
        if key.lower() == lname:
            return value
    return None


@dataclass
class WarcRecord:
    version: str
    headers: Headers
    payload: bytes = b""

    def get(self, name: str, default: Optional[str] = None) -> Optional[str]:
        value = _find_header(self.headers, name)
        return default if value is None else value

    @property
    def record_type(self) -> Optional[str]:
        return self.get("WARC-Type")

    @property
    def target_uri(self) -> Optional[str]:
        return self.get("WARC-Target-URI")


@dataclass
class HttpPayload:
    status: int
    headers: Headers
    body: bytes
    declared_charset: Optional[str] = None
    reason: str = ""

    def get(self, name: str, default: Optional[str] = None) -> Optional[str]:
        value = _find_header(self.headers, name)
        return default if value is None else value


# -- WARC ------------------------------------------------------------------

def parse_warc(data: bytes) -> WarcRecord:
    """Parse exactly one WARC record from ``data``."""
    data = bytes(data)
    eol = data.find(CRLF)
    if eol < 0:
        raise WarcParseError("bad-version", "no version line terminator", 0)
    version = data[:eol].decode("latin-1")
    if version not in VERSIONS:
        raise WarcParseError("bad-version", f"unsupported version line {version[:40]!r}", 0)

    head_end = data.find(HEADER_END, eol)
    if head_end < 0:
        raise WarcParseError("missing-blank-line", "header block is not terminated by an empty line",
                             len(data))
    headers = _parse_header_lines(data, eol + 2, head_end)

    raw_length = _find_header(headers, "Content-Length")
    if raw_length is None:
        raise WarcParseError("missing-content-length", "Content-Length header absent",
                             eol + 2, "Content-Length")
    if not raw_length.isdigit():
        raise WarcParseError("invalid-content-length", f"Content-Length {raw_length!r} is not a "
                             "non-negative integer", eol + 2, "Content-Length")
    length = int(raw_length)

    start = head_end + 4
    end = start + length
    if end > len(data):
        raise WarcParseError("truncated-payload", f"payload needs {length} bytes, "
                             f"{len(data) - start} available", len(data), "Content-Length")
    trailer = data[end:]
    if trailer and trailer not in (HEADER_END, CRLF):
        raise WarcParseError("overlong-payload", f"{len(trailer)} unexpected bytes after the "
                             "declared payload", end, "Content-Length")
    return WarcRecord(version, headers, data[start:end])


def _parse_header_lines(data: bytes, start: int, stop: int) -> Headers:
    headers: Headers = []
    if start >= stop:
        return headers
    pos = start
    for line in data[start:stop].split(CRLF):
        text = line.decode("utf-8", errors="surrogateescape")
        if text[:1] in (" ", "\t") and headers:
            name, value = headers[-1]
            headers[-1] = (name, f"{value} {text.strip()}".strip())
        else:
            name, sep, value = text.partition(":")
            if not sep or not name.strip():
                raise WarcParseError("header-without-colon", f"header line {text[:60]!r} has no "
                                     "name/value separator", pos, name.strip() or None)
            headers.append((name.strip(), value.strip()))
        pos += len(line) + 2
    return headers


def serialize_warc(record: WarcRecord) -> bytes:
    """Frame ``record`` as bytes; the inverse of :func:`parse_warc`."""
    if record.version not in VERSIONS:
        raise WarcFormatError(f"unsupported version {record.version!r}")
    if _find_header(record.headers, "WARC-Type") is None:
        raise WarcFormatError("WARC-Type header missing")
    length = _find_header(record.headers, "Content-Length")
    if length is None:
        raise WarcFormatError("Content-Length header missing")
    if length != str(len(record.payload)):
        raise WarcFormatError(f"Content-Length {length!r} does not match payload size "
                              f"{len(record.payload)}")
    out = [record.version.encode("ascii"), CRLF]
    for name, value in record.headers:
        if not _TOKEN.match(name):
            raise WarcFormatError(f"invalid header name {name!r}")
        if value != value.strip() or "\r" in value or "\n" in value:
            raise WarcFormatError(f"header {name} has a value that cannot be framed: {value!r}")
        out += [name.encode("utf-8", errors="surrogateescape"), b": ",
                value.encode("utf-8", errors="surrogateescape"), CRLF]
    out += [CRLF, record.payload, HEADER_END]
    return b"".join(out)


def iter_records(data: bytes) -> Iterator[WarcRecord]:
    """Walk concatenated uncompressed records."""
    pos = 0
    while pos < len(data):
        head_end = data.find(HEADER_END, pos)
        if head_end < 0:
            raise WarcParseError("missing-blank-line", "unterminated header block", pos)
        headers = _parse_header_lines(data, data.find(CRLF, pos) + 2, head_end)
        length = _find_header(headers, "Content-Length")
        if length is None or not length.isdigit():
            raise WarcParseError("missing-content-length", "record without usable Content-Length",
                                 pos, "Content-Length")
        end = head_end + 4 + int(length)
        if data[end:end + 4] == HEADER_END:
            end += 4
        yield parse_warc(data[pos:end])
        pos = end


def response_record(url: str, http_message: bytes, date: Optional[datetime] = None,
                    record_id: Optional[str] = None, version: str = "WARC/1.0") -> WarcRecord:
    """Build a ``response`` record around a raw HTTP message."""
    date = date or datetime(2020, 3, 1, tzinfo=timezone.utc)
    record_id = record_id or f"<urn:uuid:{uuid.uuid5(uuid.NAMESPACE_URL, url)}>"
    headers = [
        ("WARC-Type", "response"),
        ("WARC-Date", date.strftime("%Y-%m-%dT%H:%M:%SZ")),
        ("WARC-Record-ID", record_id),
        ("WARC-Target-URI", url),
        ("Content-Type", "application/http; msgtype=response"),
        ("Content-Length", str(len(http_message))),
    ]
    return WarcRecord(version, headers, http_message)


def gzip_member(data: bytes) -> bytes:
    """Compress ``data`` as one standalone gzip member (deterministic: mtime 0)."""
    comp = zlib.compressobj(9, zlib.DEFLATED, 31)
    return comp.compress(data) + comp.flush()


# -- HTTP ------------------------------------------------------------------

def extract_http(record: WarcRecord) -> HttpPayload:
    """Split the HTTP response embedded in a ``response`` record."""
    if (record.record_type or "").lower() != "response":
        raise RecordTypeError(f"record type {record.record_type!r} carries no HTTP response")
    raw = record.payload
    sep = raw.find(HEADER_END)
    sep_len = 4
    lf_sep = raw.find(b"\n\n")
    if lf_sep >= 0 and (sep < 0 or lf_sep < sep):
        sep, sep_len = lf_sep, 2
    head = raw if sep < 0 else raw[:sep]
    rest = b"" if sep < 0 else raw[sep + sep_len:]

    lines = head.replace(b"\r\n", b"\n").split(b"\n")
    m = _STATUS_LINE.match(lines[0].strip())
    if not m:
        raise HttpParseError(f"malformed status line {lines[0][:60]!r}")
    status = int(m.group(3))
    reason = (m.group(4) or b"").decode("latin-1")
    if not 100 <= status <= 599:
        raise HttpParseError(f"status {status} out of range")

    headers: Headers = []
    for line in lines[1:]:
        text = line.decode("latin-1")
        if text[:1] in (" ", "\t") and headers:
            name, value = headers[-1]
            headers[-1] = (name, f"{value} {text.strip()}")
            continue
        name, sep_char, value = text.partition(":")
        if sep_char and name.strip():
            headers.append((name.strip(), value.strip()))

    body = _deframe(rest, headers)
    ctype = _find_header(headers, "Content-Type") or ""
    m = _CHARSET_PARAM.search(ctype)
    return HttpPayload(status, headers, body, m.group(1).lower() if m else None, reason)


def _deframe(rest: bytes, headers: Headers) -> bytes:
    te = (_find_header(headers, "Transfer-Encoding") or "").lower()
    codings = [c.strip() for c in te.split(",") if c.strip()]
    if codings:
        if codings[-1] != "chunked" or any(c not in ("chunked", "identity") for c in codings):
            raise UnsupportedCodingError(f"transfer coding {te!r}")
        body = decode_chunked(rest)
    else:
        length = _find_header(headers, "Content-Length")
        if length is not None and length.isdigit() and int(length) <= len(rest):
            body = rest[:int(length)]
        else:
            body = rest
    return _undo_content_coding(body, (_find_header(headers, "Content-Encoding") or "").lower())


def _undo_content_coding(body: bytes, coding: str) -> bytes:
    coding = coding.strip()
    if coding in ("", "identity"):
        return body
    try:
        if coding in ("gzip", "x-gzip"):
            return zlib.decompress(body, 47)
        if coding == "deflate":
            try:
                return zlib.decompress(body)
            except zlib.error:
                return zlib.decompress(body, -15)
    except zlib.error as exc:
        raise UnsupportedCodingError(f"corrupt {coding} content: {exc}") from exc
    raise UnsupportedCodingError(f"content coding {coding!r}")


def decode_chunked(data: bytes) -> bytes:
    """Undo HTTP/1.1 chunked transfer coding; trailers are discarded."""
    out = bytearray()
    pos = 0
    while True:
        eol = data.find(CRLF, pos)
        if eol < 0:
            raise HttpParseError(f"chunk size line unterminated at byte {pos}")
        size_field = data[pos:eol].split(b";", 1)[0].strip()
        try:
            size = int(size_field, 16)
        except ValueError:
            raise HttpParseError(f"bad chunk size {size_field[:20]!r} at byte {pos}") from None
        pos = eol + 2
        if size == 0:
            return bytes(out)
        if pos + size > len(data):
            raise HttpParseError(f"chunk of {size} bytes truncated at byte {pos}")
        out += data[pos:pos + size]
        pos += size
        if data[pos:pos + 2] != CRLF:
            raise HttpParseError(f"chunk data not followed by CRLF at byte {pos}")
        pos += 2


@dataclass
class DecodedText:
    text: str
    charset: str
    source: str  # header | meta | fallback


def _codec(name: Optional[str]) -> Optional[str]:
    if not name:
        return None
    try:
        return codecs.lookup(name).name
    except LookupError:
        return None


def decode_body(body: bytes, declared_charset: Optional[str] = None) -> DecodedText:
    """Decode with header charset, then meta charset, then UTF-8 with replacement."""
    codec = _codec(declared_charset)
    if codec:
        return DecodedText(body.decode(codec, errors="replace"), codec, "header")
    m = _META_CHARSET.search(body[:8192])
    codec = _codec(m.group(1).decode("ascii", errors="replace")) if m else None
    if codec:
        return DecodedText(body.decode(codec, errors="replace"), codec, "meta")
    return DecodedText(body.decode("utf-8", errors="replace"), "utf-8", "fallback")


def decode_text(payload: HttpPayload) -> str:
    return decode_body(payload.body, payload.declared_charset).text
