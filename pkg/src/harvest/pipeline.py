"""End-to-end orchestration: enumerate, fetch, extract, filter, deduplicate, write.

Per-entry work (fetch through language filtering) runs on a bounded pool;
deduplication and all writes happen in one thread, in canonical entry order.

Crash safety comes from checkpoints. Every ``checkpoint_every`` entries the
corpus and manifest are fsynced and the dedup state is saved atomically,
together with the byte lengths of both files and the funnel counters. A
resumed run truncates both files back to the checkpoint and reprocesses the
remaining entries from the saved state, which reproduces the uninterrupted
output byte for byte.
"""

from __future__ import annotations

import configparser
import hashlib
import json
import logging
import os
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Callable, Dict, List, Optional, Tuple

from . import cdx
from .boilerplate import BoilerplateParams, StopwordList, extract_clean_text
from .cdx import CrawlId, IndexClient, IndexEntry, crawl_range, enumerate_tld
from .dedup import DedupState, StateError, dedup_document, dedup_windows, load_state, save_state
from .document import Document, corpus_line
from .fetch import (DATA_URL_ENV, DEFAULT_DATA_URL, CorruptRecordError, FetchError, RangeFetcher,
                    RangeRequest, ordered_map)
from .langid import LanguageClassifier, filter_language, load_classifier
from .net import RetriesExhausted, RetryPolicy
from .stats import FUNNEL_STAGES, FunnelReport, funnel
from .warc import HttpParseError, RecordTypeError, WarcError, decode_text, extract_http, parse_warc

log = logging.getLogger(__name__)

MANIFEST = "manifest.jsonl"
ENTRIES = "entries.jsonl"
CORPUS = "corpus.jsonl"
STATE = "dedup.state"
FUNNEL_JSON = "funnel.json"
FUNNEL_TXT = "funnel.txt"

# keys that change how a run talks to the network but not what it produces
TRANSPORT_KEYS = ("index_url", "data_url", "parallelism", "checkpoint_every", "retry_attempts",
                  "retry_base", "timeout", "output_dir", "state_path")

FAILURE_STATUSES = ("failed", "corrupt", "malformed")

COUNTERS = (
    "entries", "compressed_bytes", "fetched_compressed_bytes", "decompressed_bytes",
    "extracted_bytes", "lang_kept_bytes", "lang_dropped_bytes",
    "doc_kept_bytes", "doc_dropped_bytes", "window_kept_bytes", "window_dropped_bytes",
    "docs_written",
)


class ConfigError(Exception):
    """Invalid configuration (exit code 1)."""


class StateCorruptionError(Exception):
    """Manifest, state and output files disagree (exit code 2)."""


class Interrupted(Exception):
    """Raised by test hooks to simulate a crash."""


# -- configuration --------------------------------------------------------------

@dataclass
class PipelineConfig:
    url_pattern: str = "*.is"
    crawls: List[str] = field(default_factory=list)
    crawl_from: Optional[str] = None
    crawl_to: Optional[str] = None
    index_url: Optional[str] = None
    data_url: Optional[str] = None
    parallelism: int = 4
    language: str = "is"
    threshold: float = 0.8
    langid_model: Optional[str] = None
    boilerplate: BoilerplateParams = field(default_factory=BoilerplateParams)
    stopwords: Optional[str] = None
    output_dir: str = "out"
    state_path: Optional[str] = None
    max_failure_rate: float = 0.1
    checkpoint_every: int = 100
    retry_attempts: int = 5
    retry_base: float = 1.0
    timeout: float = 60.0

    def validate(self) -> None:
        if self.parallelism < 1:
            raise ConfigError("parallelism must be >= 1")
        if self.checkpoint_every < 1:
            raise ConfigError("checkpoint_every must be >= 1")
        if not 0.0 <= self.threshold <= 1.0:
            raise ConfigError(f"threshold {self.threshold} is outside [0, 1]")
        if not 0.0 <= self.max_failure_rate <= 1.0:
            raise ConfigError("max_failure_rate must be within [0, 1]")
        if not self.url_pattern:
            raise ConfigError("url_pattern is empty")
        try:
            for label in self.crawls:
                CrawlId(label)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        if not self.crawls and not (self.crawl_from or self.crawl_to):
            raise ConfigError("no crawls configured: give a crawl list or a from/to range")
        for name in ("langid_model", "stopwords"):
            path = getattr(self, name)
            if path and not Path(path).is_file():
                raise ConfigError(f"{name} file not found: {path}")
        parent = Path(self.output_dir).resolve().parent
        if not parent.is_dir():
            raise ConfigError(f"parent of output directory does not exist: {parent}")

    @property
    def out(self) -> Path:
        return Path(self.output_dir)

    @property
    def state_file(self) -> Path:
        return Path(self.state_path) if self.state_path else self.out / STATE

    def resolved(self) -> "PipelineConfig":
        """Copy with environment fallbacks for the base URLs filled in."""
        d = self.snapshot()
        d["index_url"] = self.index_url or os.environ.get(cdx.INDEX_URL_ENV) or cdx.DEFAULT_INDEX_URL
        d["data_url"] = self.data_url or os.environ.get(DATA_URL_ENV) or DEFAULT_DATA_URL
        return PipelineConfig.from_snapshot(d)

    def snapshot(self) -> Dict:
        return asdict(self)

    @classmethod
    def from_snapshot(cls, d: Dict) -> "PipelineConfig":
        d = dict(d)
        d["boilerplate"] = BoilerplateParams(**d.get("boilerplate", {}))
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        return cls(**d)

    def config_hash(self) -> str:
        d = {k: v for k, v in self.snapshot().items() if k not in TRANSPORT_KEYS}
        return hashlib.sha256(json.dumps(d, sort_keys=True).encode()).hexdigest()

    def retry_policy(self) -> RetryPolicy:
        return RetryPolicy(base=self.retry_base, max_attempts=self.retry_attempts)


_INI_KEYS = {
    # ini key -> (section, attribute, type)
    "url_pattern": ("crawl", "url_pattern", str),
    "crawls": ("crawl", "crawls", list),
    "from": ("crawl", "crawl_from", str),
    "to": ("crawl", "crawl_to", str),
    "index_url": ("crawl", "index_url", str),
    "data_url": ("crawl", "data_url", str),
    "parallelism": ("run", "parallelism", int),
    "output_dir": ("run", "output_dir", Path),
    "state_path": ("run", "state_path", Path),
    "max_failure_rate": ("run", "max_failure_rate", float),
    "checkpoint_every": ("run", "checkpoint_every", int),
    "retry_attempts": ("run", "retry_attempts", int),
    "retry_base": ("run", "retry_base", float),
    "timeout": ("run", "timeout", float),
    "language": ("langid", "language", str),
    "threshold": ("langid", "threshold", float),
    "model": ("langid", "langid_model", Path),
    "stopwords": ("boilerplate", "stopwords", Path),
}


def load_config(path: Optional[str] = None, overrides: Optional[Dict] = None) -> PipelineConfig:
    """Read an INI config; relative paths resolve against the file's directory.

    Precedence, lowest first: defaults, the file, the base-URL environment
    variables, then ``overrides`` (attribute name -> value, None meaning
    "not given").
    """
    cfg = PipelineConfig()
    if path:
        parser = configparser.ConfigParser()
        try:
            if not parser.read(path, encoding="utf-8"):
                raise ConfigError(f"cannot read config file {path}")
        except configparser.Error as exc:
            raise ConfigError(f"{path}: {exc}") from None
        base = Path(path).resolve().parent
        bp = {}
        for section in parser.sections():
            for key, raw in parser.items(section):
                if section == "boilerplate" and key in BoilerplateParams.__dataclass_fields__:
                    ftype = type(getattr(BoilerplateParams(), key))
                    bp[key] = _convert(raw, ftype, base, f"[{section}] {key}")
                    continue
                spec = _INI_KEYS.get(key)
                if spec is None or spec[0] != section:
                    raise ConfigError(f"{path}: unknown key [{section}] {key}")
                setattr(cfg, spec[1], _convert(raw, spec[2], base, f"[{section}] {key}"))
        if bp:
            try:
                cfg.boilerplate = BoilerplateParams(**bp)
            except ValueError as exc:
                raise ConfigError(str(exc)) from None
    for attr, env in (("index_url", cdx.INDEX_URL_ENV), ("data_url", DATA_URL_ENV)):
        if os.environ.get(env):
            setattr(cfg, attr, os.environ[env])
    for key, value in (overrides or {}).items():
        if value is not None:
            setattr(cfg, key, value)
    return cfg


def _convert(raw: str, kind, base: Path, where: str):
    raw = raw.strip()
    if kind is str:
        return raw or None
    if kind is Path:
        return str((base / raw).resolve()) if raw else None
    if kind is list:
        return [x for x in (p.strip() for p in raw.replace("\n", ",").split(",")) if x]
    try:
        return kind(raw)
    except ValueError:
        raise ConfigError(f"{where}: cannot parse {raw!r} as {kind.__name__}") from None


# -- per-record processing ----------------------------------------------------

@dataclass
class EntryResult:
    status: str
    compressed: int = 0
    decompressed: int = 0
    doc: Optional[Document] = None
    detail: str = ""

    @property
    def extracted_bytes(self) -> int:
        return self.doc.byte_size() if self.doc is not None else 0


def record_to_document(data: bytes, entry: IndexEntry, params: BoilerplateParams,
                       stopwords: StopwordList) -> Tuple[str, Optional[Document], str]:
    """Parse one decompressed WARC record into a Document.

    Returns (status, document, detail) with status one of malformed,
    not-response, http-error, no-text or extracted.
    """
    try:
        record = parse_warc(data)
    except WarcError as exc:
        return "malformed", None, str(exc)
    try:
        payload = extract_http(record)
    except RecordTypeError as exc:
        return "not-response", None, str(exc)
    except HttpParseError as exc:
        return "http-error", None, str(exc)
    if not 200 <= payload.status < 300:
        return "http-error", None, f"HTTP status {payload.status}"
    lines = extract_clean_text(decode_text(payload), params, stopwords)
    if not lines:
        return "no-text", None, ""
    url = record.target_uri or entry.url
    doc = Document(Document.make_id(entry.digest, entry.timestamp, url), url, entry.timestamp,
                   lines, source={"filename": entry.filename, "offset": entry.offset})
    return "extracted", doc, ""


class _Worker:
    """Everything up to and including the language filter; safe to call from threads."""

    def __init__(self, config: PipelineConfig):
        self.config = config
        self.fetcher = RangeFetcher(config.data_url, config.retry_policy(), config.timeout)
        self.classifier: LanguageClassifier = load_classifier(config.langid_model)
        self.stopwords = (StopwordList.from_file(config.stopwords, config.language)
                          if config.stopwords else StopwordList.bundled(config.language))

    def __call__(self, entry: IndexEntry) -> EntryResult:
        try:
            raw = self.fetcher.fetch_range(RangeRequest.for_entry(entry))
        except CorruptRecordError as exc:
            return EntryResult("corrupt", entry.length, detail=str(exc))
        except FetchError as exc:
            return EntryResult("failed", detail=str(exc))
        res = EntryResult("extracted", raw.compressed_size, raw.size)
        res.status, res.doc, res.detail = record_to_document(
            raw.data, entry, self.config.boilerplate, self.stopwords)
        if res.doc is not None and not filter_language(res.doc, self.classifier,
                                                       self.config.threshold, self.config.language):
            res.status = "lang-drop"
            res.detail = f"{res.doc.lang} {res.doc.lang_score:.4f}"
        return res


# -- manifest ------------------------------------------------------------------

class RunManifest:
    """Append-only JSON-lines log: config snapshot first, then one event per line."""

    def __init__(self, path: Path):
        self.path = Path(path)
        self._fh = None

    def open(self) -> "RunManifest":
        self._fh = open(self.path, "ab")
        return self

    def close(self) -> None:
        if self._fh:
            self._fh.close()
            self._fh = None

    def append(self, event: Dict) -> None:
        self._fh.write((json.dumps(event, sort_keys=True, ensure_ascii=False) + "\n").encode("utf-8"))

    def sync(self) -> int:
        self._fh.flush()
        os.fsync(self._fh.fileno())
        return self._fh.tell()

    @staticmethod
    def read(path: Path) -> List[Dict]:
        events = []
        with open(path, "rb") as fh:
            for n, line in enumerate(fh, 1):
                try:
                    events.append(json.loads(line))
                except ValueError:
                    # only a torn final line is tolerable; resume truncates it
                    rest = fh.read()
                    if rest:
                        raise StateCorruptionError(f"{path}:{n}: unreadable manifest line") from None
        return events


# -- run --------------------------------------------------------------------

@dataclass
class RunResult:
    output_dir: Path
    funnel: Optional[FunnelReport]
    counters: Dict[str, int]
    statuses: Dict[str, int]
    entries_total: int
    max_failure_rate: float
    resumed: bool = False
    noop: bool = False
    funnel_error: Optional[str] = None

    @property
    def failures(self) -> int:
        return sum(self.statuses.get(s, 0) for s in FAILURE_STATUSES)

    @property
    def failure_rate(self) -> float:
        return self.failures / self.entries_total if self.entries_total else 0.0

    @property
    def exit_code(self) -> int:
        return 3 if self.failure_rate > self.max_failure_rate else 0


Hook = Callable[[str, int], None]


def _sha256_file(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def resolve_crawls(config: PipelineConfig, client: IndexClient) -> List[CrawlId]:
    labels = config.crawls
    if not labels:
        try:
            labels = [c.label for c in client.list_crawls()]
        except (RetriesExhausted, cdx.IndexServerError) as exc:
            raise ConfigError(f"cannot list crawls for the from/to range: {exc}") from None
    return crawl_range(labels, config.crawl_from, config.crawl_to)


def run(config: PipelineConfig, hook: Optional[Hook] = None) -> RunResult:
    """Run (or continue) the pipeline described by ``config``."""
    config.validate()
    config = config.resolved()
    out = config.out
    manifest_path = out / MANIFEST
    if manifest_path.exists() and manifest_path.stat().st_size:
        return resume(manifest_path, config, hook)
    out.mkdir(parents=True, exist_ok=True)
    return _start(config, hook)


def _start(config: PipelineConfig, hook: Optional[Hook]) -> RunResult:
    hook = hook or (lambda point, seq: None)
    out = config.out
    for name in (CORPUS, ENTRIES, FUNNEL_JSON, FUNNEL_TXT):
        (out / name).unlink(missing_ok=True)
    config.state_file.unlink(missing_ok=True)

    manifest = RunManifest(out / MANIFEST)
    with open(manifest.path, "wb"):
        pass
    manifest.open()
    try:
        manifest.append({"kind": "config", "config": config.snapshot(),
                         "config_hash": config.config_hash()})
        client = IndexClient(config.index_url, config.retry_policy(), config.timeout)
        crawls = resolve_crawls(config, client)
        log.info("enumerating %s over %d crawls", config.url_pattern, len(crawls))
        entries = enumerate_tld(client, config.url_pattern, crawls,
                                parallelism=config.parallelism, sink=manifest.append)
        hook("enumerated", -1)
        cdx.write_entries(str(out / ENTRIES), entries)
        entries_sha = _sha256_file(out / ENTRIES)
        manifest.append({"kind": "entries", "count": len(entries), "sha256": entries_sha})
        (out / CORPUS).touch()

        state = DedupState()
        state.meta = {"checkpoint": {
            "config_hash": config.config_hash(), "entries_sha256": entries_sha,
            "entries_total": len(entries), "next_seq": 0, "complete": False,
            "corpus_bytes": 0, "manifest_bytes": 0,
            "counters": dict.fromkeys(COUNTERS, 0), "statuses": {},
        }}
        _checkpoint(config, state, manifest, None)
    finally:
        manifest.close()
    return _process(config, state, entries, hook, resumed=False)


def _checkpoint(config: PipelineConfig, state: DedupState, manifest: RunManifest, corpus) -> None:
    cp = state.meta["checkpoint"]
    if corpus is not None:
        corpus.flush()
        os.fsync(corpus.fileno())
        cp["corpus_bytes"] = corpus.tell()
    cp["manifest_bytes"] = manifest.sync()
    save_state(state, str(config.state_file))


def _process(config: PipelineConfig, state: DedupState, entries: List[IndexEntry],
             hook: Optional[Hook], resumed: bool) -> RunResult:
    hook = hook or (lambda point, seq: None)
    out = config.out
    cp = state.meta["checkpoint"]
    counters, statuses = cp["counters"], cp["statuses"]
    start = cp["next_seq"]

    manifest = RunManifest(out / MANIFEST).open()
    corpus = open(out / CORPUS, "ab")
    try:
        if resumed:
            manifest.append({"kind": "resume", "from_seq": start})
        pending = entries[start:]
        if pending:
            worker = _Worker(config)
            results = ordered_map(worker, pending, config.parallelism)
            for seq, entry, res in zip(range(start, len(entries)), pending, results):
                status = _commit(res, entry, state, counters, corpus)
                hook("doc-written", seq)
                statuses[status] = statuses.get(status, 0) + 1
                event = {"kind": "entry", "seq": seq, "filename": entry.filename,
                         "offset": entry.offset, "length": entry.length, "url": entry.url,
                         "status": status, "compressed": res.compressed,
                         "decompressed": res.decompressed}
                if res.detail:
                    event["detail"] = res.detail
                manifest.append(event)
                hook("entry", seq)
                cp["next_seq"] = seq + 1
                if cp["next_seq"] % config.checkpoint_every == 0 and cp["next_seq"] < len(entries):
                    hook("checkpoint", seq)
                    _checkpoint(config, state, manifest, corpus)
                    hook("checkpointed", seq)

        report, err = _funnel(counters)
        _write_funnel(out, report, err, counters, statuses)
        hook("funnel-written", len(entries))
        manifest.append({"kind": "complete", "counters": counters, "statuses": statuses,
                         "funnel": report.to_dict() if report else {"error": err}})
        cp["complete"] = True
        _checkpoint(config, state, manifest, corpus)
        hook("complete", len(entries))
    finally:
        corpus.close()
        manifest.close()
    return RunResult(out, report, counters, statuses, len(entries), config.max_failure_rate,
                     resumed=resumed, funnel_error=err)


def _commit(res: EntryResult, entry: IndexEntry, state: DedupState, counters: Dict[str, int],
            corpus) -> str:
    """Serial tail for one entry: counters, both dedup stages, corpus append."""
    counters["entries"] += 1
    counters["compressed_bytes"] += entry.length
    counters["fetched_compressed_bytes"] += res.compressed
    counters["decompressed_bytes"] += res.decompressed
    if res.doc is None:
        return res.status
    size = res.extracted_bytes
    counters["extracted_bytes"] += size
    if res.status == "lang-drop":
        counters["lang_dropped_bytes"] += size
        return res.status
    counters["lang_kept_bytes"] += size
    if not dedup_document(res.doc, state):
        counters["doc_dropped_bytes"] += size
        return "doc-dup"
    counters["doc_kept_bytes"] += size
    kept = dedup_windows(res.doc, state)
    kept_size = kept.byte_size() if kept is not None else 0
    counters["window_kept_bytes"] += kept_size
    counters["window_dropped_bytes"] += size - kept_size
    if kept is None:
        return "window-drop"
    corpus.write((corpus_line(kept) + "\n").encode("utf-8"))
    counters["docs_written"] += 1
    return "kept"


def _funnel(counters: Dict[str, int]) -> Tuple[Optional[FunnelReport], Optional[str]]:
    values = [counters["compressed_bytes"], counters["lang_kept_bytes"],
              counters["doc_kept_bytes"], counters["window_kept_bytes"]]
    try:
        return funnel(list(zip(FUNNEL_STAGES, values))), None
    except ValueError as exc:
        log.error("funnel report unavailable: %s", exc)
        return None, str(exc)


def _write_funnel(out: Path, report: Optional[FunnelReport], err: Optional[str],
                  counters: Dict[str, int], statuses: Dict[str, int]) -> None:
    payload = report.to_dict() if report else {"error": err}
    payload["counters"] = counters
    payload["statuses"] = dict(sorted(statuses.items()))
    payload["notes"] = ["stage 0 counts compressed bytes; decompressed_bytes is in counters",
                        "language threshold and granularity are configuration defaults"]
    (out / FUNNEL_JSON).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
    text = report.render() if report else f"funnel unavailable: {err}\n"
    (out / FUNNEL_TXT).write_text(text)


def conservation_errors(counters: Dict[str, int]) -> List[str]:
    """Funnel stages that do not balance (empty when everything adds up)."""
    c = counters
    checks = [("extracted", c["extracted_bytes"], c["lang_kept_bytes"] + c["lang_dropped_bytes"]),
              ("lang", c["lang_kept_bytes"], c["doc_kept_bytes"] + c["doc_dropped_bytes"]),
              ("doc", c["doc_kept_bytes"], c["window_kept_bytes"] + c["window_dropped_bytes"])]
    return [f"{name}: {a} in != {b} out" for name, a, b in checks if a != b]


# -- resume -------------------------------------------------------------------

def read_config_event(manifest_path: Path) -> Dict:
    with open(manifest_path, "rb") as fh:
        first = fh.readline()
    try:
        event = json.loads(first)
    except ValueError:
        raise StateCorruptionError(f"{manifest_path}: first line is not a config snapshot") from None
    if event.get("kind") != "config":
        raise StateCorruptionError(f"{manifest_path}: first line is not a config snapshot")
    return event


def _truncate(path: Path, size: int) -> None:
    actual = path.stat().st_size if path.exists() else -1
    if actual < size:
        raise StateCorruptionError(
            f"{path} is {actual} bytes but the checkpoint recorded {size}; the output directory "
            f"was modified outside the pipeline. Start a fresh run in a new directory.")
    with open(path, "r+b") as fh:
        fh.truncate(size)


def resume(manifest_path, config: Optional[PipelineConfig] = None,
           hook: Optional[Hook] = None) -> RunResult:
    """Continue an interrupted run; a finished run is returned untouched.

    ``config`` may change transport settings (URLs, parallelism) but must
    otherwise match the snapshot in the manifest.
    """
    manifest_path = Path(manifest_path)
    if not manifest_path.is_file():
        raise ConfigError(f"manifest not found: {manifest_path}")
    event = read_config_event(manifest_path)
    saved = PipelineConfig.from_snapshot(event["config"])
    if saved.config_hash() != event.get("config_hash"):
        raise StateCorruptionError(f"{manifest_path}: config snapshot does not match its hash")
    if config is not None:
        if config.config_hash() != event["config_hash"]:
            raise ConfigError(
                f"{manifest_path.parent} holds a run with a different configuration; "
                f"use a new output directory or resume with the original config")
        merged = saved.snapshot()
        merged.update({k: v for k, v in config.snapshot().items()
                       if k in TRANSPORT_KEYS and k not in ("output_dir", "state_path")})
        saved = PipelineConfig.from_snapshot(merged)
    config = saved
    config.output_dir = str(manifest_path.parent)
    out = config.out

    state_file = config.state_file
    if not state_file.exists():
        events = RunManifest.read(manifest_path)
        if any(e.get("kind") in ("entries", "entry") for e in events):
            raise StateCorruptionError(
                f"{state_file} is missing although {manifest_path} records processed entries; "
                f"restore the state file or start a fresh run in a new directory")
        log.info("no checkpoint yet; restarting enumeration")
        return _start(config, hook)
    try:
        state = load_state(str(state_file))
    except (StateError, OSError) as exc:
        raise StateCorruptionError(
            f"cannot load {state_file}: {exc}. The state file is damaged; restore it from a "
            f"backup or start a fresh run in a new directory.") from None
    cp = state.meta.get("checkpoint")
    if not cp:
        raise StateCorruptionError(f"{state_file} carries no checkpoint metadata")
    if cp["config_hash"] != event["config_hash"]:
        raise StateCorruptionError(
            f"{state_file} belongs to a run with a different configuration than {manifest_path}")
    entries_path = out / ENTRIES
    if not entries_path.exists() or _sha256_file(entries_path) != cp["entries_sha256"]:
        raise StateCorruptionError(f"{entries_path} does not match the checkpoint")
    entries = cdx.read_entries(str(entries_path))

    if cp["complete"]:
        report, err = _funnel(cp["counters"])
        if not (out / FUNNEL_JSON).exists():
            _write_funnel(out, report, err, cp["counters"], cp["statuses"])
        log.info("run already complete; nothing to do")
        return RunResult(out, report, cp["counters"], cp["statuses"], len(entries),
                         config.max_failure_rate, resumed=True, noop=True, funnel_error=err)

    _truncate(out / CORPUS, cp["corpus_bytes"])
    _truncate(manifest_path, cp["manifest_bytes"])
    log.info("resuming at entry %d of %d", cp["next_seq"], len(entries))
    return _process(config, state, entries, hook, resumed=True)
