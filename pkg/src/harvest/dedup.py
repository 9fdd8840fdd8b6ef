"""Two-stage exact deduplication against a persistent global state.

Stage one drops documents whose full text was seen before. Stage two slides
a three-line window over each surviving document: a window whose hash is
already known discards its three lines in the current document, a new window
is remembered. Both stages depend on arrival order, which the pipeline fixes.
"""

from __future__ import annotations

import json
import os
import struct
import zlib
from dataclasses import dataclass, field, replace
from typing import Dict, Iterable, Iterator, List, Optional, Set, Tuple

import xxhash

from .document import Document

MAGIC = b"DDUP"
FORMAT_VERSION = 1
HASH_BYTES = 16
WINDOW = 3
# ASCII record separator: cannot occur in whitespace-normalised lines
SEPARATOR = "\x1e"

COUNTERS = (
    "docs_seen", "docs_kept", "docs_dropped",
    "window_docs_seen", "window_docs_kept", "window_docs_dropped",
    "lines_seen", "lines_kept", "lines_dropped",
)


class StateError(Exception):
    """A state file is corrupt, truncated or of an unknown format."""


def _h128(text: str) -> bytes:
    return xxhash.xxh3_128_digest(text.encode("utf-8"))


def normalize_line(line: str) -> str:
    return " ".join(line.split())


def doc_hash(doc: Document) -> bytes:
    """Content hash; URL and timestamp are deliberately left out."""
    return _h128("\n".join(normalize_line(ln) for ln in doc.lines))


def window_hashes(lines: List[str]) -> List[Tuple[int, bytes]]:
    return [(i, _h128(SEPARATOR.join(lines[i:i + WINDOW])))
            for i in range(len(lines) - WINDOW + 1)]


@dataclass
class DedupState:
    doc_hashes: Set[bytes] = field(default_factory=set)
    window_hashes: Set[bytes] = field(default_factory=set)
    counters: Dict[str, int] = field(default_factory=lambda: dict.fromkeys(COUNTERS, 0))
    # free-form JSON-serialisable data persisted alongside (pipeline checkpoints)
    meta: Dict = field(default_factory=dict)

    def bump(self, name: str, n: int = 1) -> None:
        self.counters[name] = self.counters.get(name, 0) + n

    def conserved(self) -> bool:
        c = self.counters
        return (c["docs_seen"] == c["docs_kept"] + c["docs_dropped"]
                and c["window_docs_seen"] == c["window_docs_kept"] + c["window_docs_dropped"]
                and c["lines_seen"] == c["lines_kept"] + c["lines_dropped"])

    def copy(self) -> "DedupState":
        return DedupState(set(self.doc_hashes), set(self.window_hashes), dict(self.counters),
                          json.loads(json.dumps(self.meta)))


def dedup_documents(docs: Iterable[Document], state: DedupState) -> Iterator[Document]:
    for doc in docs:
        if dedup_document(doc, state):
            yield doc


def dedup_document(doc: Document, state: DedupState) -> bool:
    """True if ``doc`` is new; its hash is recorded either way."""
    h = doc_hash(doc)
    state.bump("docs_seen")
    if h in state.doc_hashes:
        state.bump("docs_dropped")
        return False
    state.doc_hashes.add(h)
    state.bump("docs_kept")
    return True


def dedup_windows(doc: Document, state: DedupState) -> Optional[Document]:
    """Drop lines covered by previously seen three-line windows.

    Returns the document with the surviving lines, or None if nothing is
    left. Documents shorter than three lines pass through untouched.
    """
    lines = [normalize_line(ln) for ln in doc.lines]
    discard = [False] * len(lines)
    for i, h in window_hashes(lines):
        if h in state.window_hashes:
            discard[i:i + WINDOW] = [True] * WINDOW
        else:
            state.window_hashes.add(h)
    kept = [ln for ln, gone in zip(doc.lines, discard) if not gone]

    state.bump("window_docs_seen")
    state.bump("lines_seen", len(lines))
    state.bump("lines_kept", len(kept))
    state.bump("lines_dropped", len(lines) - len(kept))
    if not kept:
        state.bump("window_docs_dropped")
        return None
    state.bump("window_docs_kept")
    return replace(doc, lines=kept)


# -- persistence --------------------------------------------------------------

def _pack_hashes(hashes: Set[bytes]) -> bytes:
    return struct.pack("<Q", len(hashes)) + b"".join(sorted(hashes))


def state_to_bytes(state: DedupState) -> bytes:
    parts = [MAGIC, struct.pack("<H", FORMAT_VERSION),
             _pack_hashes(state.doc_hashes), _pack_hashes(state.window_hashes)]
    names = sorted(state.counters)
    parts.append(struct.pack("<H", len(names)))
    for name in names:
        raw = name.encode("ascii")
        parts.append(struct.pack("<B", len(raw)) + raw + struct.pack("<Q", state.counters[name]))
    meta = json.dumps(state.meta, sort_keys=True, ensure_ascii=False).encode("utf-8")
    parts.append(struct.pack("<I", len(meta)) + meta)
    body = b"".join(parts)
    return body + struct.pack("<I", zlib.crc32(body))


class _Reader:
    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.data):
            raise StateError(f"state file truncated at byte {self.pos} (needed {n} more bytes)")
        out = self.data[self.pos:self.pos + n]
        self.pos += n
        return out

    def unpack(self, fmt: str):
        return struct.unpack(fmt, self.take(struct.calcsize(fmt)))


def state_from_bytes(data: bytes) -> DedupState:
    if len(data) < 10 or data[:4] != MAGIC:
        raise StateError("not a dedup state file (bad magic)")
    try:
        return _decode_state(data)
    except (UnicodeDecodeError, ValueError) as exc:
        raise StateError(f"state file is corrupt: {exc}") from exc


def _decode_state(data: bytes) -> DedupState:
    body, (crc,) = data[:-4], struct.unpack("<I", data[-4:])
    r = _Reader(body)
    r.take(4)
    (version,) = r.unpack("<H")
    if version != FORMAT_VERSION:
        raise StateError(f"unsupported state format version {version}")
    sets = []
    for _ in range(2):
        (n,) = r.unpack("<Q")
        blob = r.take(n * HASH_BYTES)
        sets.append({blob[i:i + HASH_BYTES] for i in range(0, len(blob), HASH_BYTES)})
    (n_counters,) = r.unpack("<H")
    counters = {}
    for _ in range(n_counters):
        (n,) = r.unpack("<B")
        name = r.take(n).decode("ascii")
        (counters[name],) = r.unpack("<Q")
    (n_meta,) = r.unpack("<I")
    meta = json.loads(r.take(n_meta).decode("utf-8"))
    if r.pos != len(body):
        raise StateError(f"{len(body) - r.pos} trailing bytes in state file")
    if zlib.crc32(body) != crc:
        raise StateError("state file checksum mismatch")
    return DedupState(sets[0], sets[1], counters, meta)


def save_state(state: DedupState, path: str) -> None:
    """Atomic write: a crash leaves either the old or the new file."""
    tmp = f"{path}.tmp"
    with open(tmp, "wb") as fh:
        fh.write(state_to_bytes(state))
        fh.flush()
        os.fsync(fh.fileno())
    os.replace(tmp, path)


def load_state(path: str) -> DedupState:
    with open(path, "rb") as fh:
        return state_from_bytes(fh.read())
