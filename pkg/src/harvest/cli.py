"""Command-line entry point: ``harvest <subcommand>``.

Exit codes: 0 ok, 1 configuration error, 2 state corruption, 3 too many
per-entry failures.
"""

from __future__ import annotations

import argparse
import base64
import contextlib
import json
import logging
import sys
from pathlib import Path
from typing import Iterator, List, Optional, TextIO

from . import __version__, cdx
from .boilerplate import BoilerplateParams, StopwordList
from .cdx import IndexClient, IndexEntry, enumerate_tld
from .dedup import DedupState, StateError, dedup_document, dedup_windows, load_state, save_state
from .document import Document, corpus_line
from .fetch import FetchStats, RangeFetcher, fetch_outcomes
from .langid import filter_language, load_classifier
from .net import RetryPolicy
from .pipeline import (ConfigError, PipelineConfig, StateCorruptionError, load_config,
                       read_config_event, record_to_document, resolve_crawls, resume, run)
from .stats import DEFAULT_MIN_COUNT, compare_vocab, funnel, read_corpus, render_vocab, vocab

log = logging.getLogger("harvest")

EXIT_OK, EXIT_CONFIG, EXIT_STATE, EXIT_PARTIAL = 0, 1, 2, 3


@contextlib.contextmanager
def _open_out(path: str) -> Iterator[TextIO]:
    if path == "-":
        yield sys.stdout
    else:
        with open(path, "w", encoding="utf-8") as fh:
            yield fh


def _read_lines(path: str) -> Iterator[str]:
    fh = sys.stdin if path == "-" else open(path, encoding="utf-8")
    with fh:
        for line in fh:
            if line.strip():
                yield line


def _add_crawl_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--pattern", dest="url_pattern", help="index URL pattern, e.g. '*.is'")
    p.add_argument("--crawl", dest="crawls", action="append", metavar="CC-MAIN-YYYY-WW",
                   help="crawl label (repeatable)")
    p.add_argument("--from", dest="crawl_from", metavar="LABEL", help="first crawl of a range")
    p.add_argument("--to", dest="crawl_to", metavar="LABEL", help="last crawl of a range")
    p.add_argument("--index-url", help="index server base URL")


def _add_transport_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--data-url", help="data store base URL")
    p.add_argument("-j", "--parallelism", type=int)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="harvest", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run the whole pipeline")
    p.add_argument("--config", help="INI config file")
    _add_crawl_args(p)
    _add_transport_args(p)
    p.add_argument("-o", "--output", dest="output_dir")
    p.add_argument("--state", dest="state_path")
    p.add_argument("--language")
    p.add_argument("--threshold", type=float)
    p.add_argument("--model", dest="langid_model", help="LIDM or fastText model file")
    p.add_argument("--stopwords", help="stopword list, one word per line")
    p.add_argument("--checkpoint-every", type=int)
    p.add_argument("--max-failure-rate", type=float)

    p = sub.add_parser("resume", help="continue an interrupted run")
    p.add_argument("--manifest", required=True)
    p.add_argument("--config", help="must match the run's original config")
    p.add_argument("--index-url")
    _add_transport_args(p)

    p = sub.add_parser("index", help="enumerate index entries to JSON-lines")
    _add_crawl_args(p)
    p.add_argument("-j", "--parallelism", type=int, default=4)
    p.add_argument("-o", "--output", default="-")

    p = sub.add_parser("fetch", help="fetch records for index entries")
    p.add_argument("entries")
    _add_transport_args(p)
    p.add_argument("-o", "--output", default="-")

    p = sub.add_parser("extract", help="WARC records to documents (boilerplate removed)")
    p.add_argument("records")
    p.add_argument("--language", default="is", help="bundled stopword list to use")
    p.add_argument("--stopwords")
    p.add_argument("-o", "--output", default="-")

    p = sub.add_parser("filter", help="keep documents in the target language")
    p.add_argument("documents")
    p.add_argument("--language", default="is")
    p.add_argument("--threshold", type=float, default=0.8)
    p.add_argument("--model", dest="langid_model")
    p.add_argument("-o", "--output", default="-")

    p = sub.add_parser("dedup", help="document then window deduplication")
    p.add_argument("documents")
    p.add_argument("--state", required=True, help="state file (created if missing)")
    p.add_argument("-o", "--output", default="-")

    p = sub.add_parser("stats", help="vocabulary comparison of two corpora")
    p.add_argument("corpus_a")
    p.add_argument("corpus_b")
    p.add_argument("--min-count", type=int, default=DEFAULT_MIN_COUNT)
    p.add_argument("--format", choices=("table", "json"), default="table")

    p = sub.add_parser("funnel", help="format a funnel report from stage byte counts")
    p.add_argument("bytes", nargs="+", type=float)
    p.add_argument("--format", choices=("table", "json"), default="table")
    return parser


# -- subcommands ---------------------------------------------------------------

def cmd_run(args) -> int:
    keys = ("url_pattern", "crawls", "crawl_from", "crawl_to", "index_url", "data_url",
            "parallelism", "output_dir", "state_path", "language", "threshold", "langid_model",
            "stopwords", "checkpoint_every", "max_failure_rate")
    config = load_config(args.config, {k: getattr(args, k) for k in keys})
    result = run(config)
    return _report(result)


def cmd_resume(args) -> int:
    config = None
    if args.config:
        config = load_config(args.config, {"index_url": args.index_url, "data_url": args.data_url,
                                           "parallelism": args.parallelism})
    elif args.index_url or args.data_url or args.parallelism:
        # transport-only overrides on top of the saved snapshot
        event = read_config_event(Path(args.manifest))
        config = PipelineConfig.from_snapshot(event["config"])
        for key in ("index_url", "data_url", "parallelism"):
            if getattr(args, key):
                setattr(config, key, getattr(args, key))
    result = resume(args.manifest, config)
    return _report(result)


def _report(result) -> int:
    if result.funnel is not None:
        sys.stdout.write(result.funnel.render())
    else:
        print(f"funnel unavailable: {result.funnel_error}", file=sys.stderr)
    print(f"{result.counters.get('docs_written', 0)} documents written to "
          f"{result.output_dir / 'corpus.jsonl'}; entries by status: "
          f"{json.dumps(dict(sorted(result.statuses.items())))}", file=sys.stderr)
    if result.exit_code == EXIT_PARTIAL:
        print(f"failure rate {result.failure_rate:.1%} exceeds {result.max_failure_rate:.1%}",
              file=sys.stderr)
    return result.exit_code


def cmd_index(args) -> int:
    config = PipelineConfig(url_pattern=args.url_pattern or "*.is", crawls=args.crawls or [],
                            crawl_from=args.crawl_from, crawl_to=args.crawl_to,
                            index_url=args.index_url)
    if not config.crawls and not (config.crawl_from or config.crawl_to):
        raise ConfigError("give --crawl or --from/--to")
    client = IndexClient(args.index_url)
    crawls = resolve_crawls(config, client)
    stats = cdx.EnumerationStats()
    entries = enumerate_tld(client, config.url_pattern, crawls, parallelism=args.parallelism,
                            stats=stats)
    with _open_out(args.output) as fh:
        for entry in entries:
            fh.write(entry.to_json() + "\n")
    print(f"{stats.emitted} entries ({stats.skipped} malformed, {stats.duplicates} duplicate, "
          f"{stats.pages_failed} failed pages)", file=sys.stderr)
    return EXIT_OK


def cmd_fetch(args) -> int:
    entries = [IndexEntry.from_json(line) for line in _read_lines(args.entries)]
    fetcher = RangeFetcher(args.data_url, RetryPolicy())
    stats = FetchStats()
    with _open_out(args.output) as fh:
        for outcome in fetch_outcomes(fetcher, entries, args.parallelism or 4):
            stats.add(outcome)
            line = {"entry": outcome.entry.to_dict(), "status": outcome.status}
            if outcome.record is not None:
                line["warc_b64"] = base64.b64encode(outcome.record.data).decode("ascii")
                line["compressed_size"] = outcome.record.compressed_size
            else:
                line["error"] = outcome.error
            fh.write(json.dumps(line) + "\n")
    print(f"{stats.done} fetched, {stats.corrupt} corrupt, {stats.failed} failed; "
          f"{stats.compressed_in} bytes in, {stats.decompressed_out} bytes out", file=sys.stderr)
    return EXIT_OK


def cmd_extract(args) -> int:
    stopwords = (StopwordList.from_file(args.stopwords, args.language) if args.stopwords
                 else StopwordList.bundled(args.language))
    params = BoilerplateParams()
    n_in = n_out = 0
    with _open_out(args.output) as fh:
        for line in _read_lines(args.records):
            obj = json.loads(line)
            n_in += 1
            if "warc_b64" not in obj:
                continue
            entry = IndexEntry.from_json(json.dumps(obj["entry"]))
            status, doc, detail = record_to_document(base64.b64decode(obj["warc_b64"]), entry,
                                                     params, stopwords)
            if doc is None:
                log.info("%s: %s %s", entry.url, status, detail)
                continue
            n_out += 1
            fh.write(doc.to_json() + "\n")
    print(f"{n_out} of {n_in} records produced text", file=sys.stderr)
    return EXIT_OK


def cmd_filter(args) -> int:
    model = load_classifier(args.langid_model)
    kept = total = 0
    with _open_out(args.output) as fh:
        for line in _read_lines(args.documents):
            doc = Document.from_json(line)
            total += 1
            if filter_language(doc, model, args.threshold, args.language):
                kept += 1
                fh.write(doc.to_json() + "\n")
    print(f"kept {kept} of {total} documents", file=sys.stderr)
    return EXIT_OK


def cmd_dedup(args) -> int:
    path = Path(args.state)
    state = load_state(str(path)) if path.exists() else DedupState()
    with _open_out(args.output) as fh:
        for line in _read_lines(args.documents):
            doc = Document.from_json(line)
            if not dedup_document(doc, state):
                continue
            kept = dedup_windows(doc, state)
            if kept is not None:
                fh.write(corpus_line(kept) + "\n")
    save_state(state, str(path))
    c = state.counters
    print(f"documents: {c['docs_dropped']} exact duplicates of {c['docs_seen']}; lines: "
          f"{c['lines_dropped']} of {c['lines_seen']} removed by the window rule", file=sys.stderr)
    return EXIT_OK


def cmd_stats(args) -> int:
    if args.min_count < 1:
        raise ConfigError("--min-count must be >= 1")
    a = vocab(read_corpus(args.corpus_a), args.min_count)
    b = vocab(read_corpus(args.corpus_b), args.min_count)
    report = compare_vocab(a, b)
    if args.format == "json":
        print(json.dumps(report.to_dict(), indent=2))
    else:
        print(render_vocab(report, (Path(args.corpus_a).name, Path(args.corpus_b).name)))
    return EXIT_OK


def cmd_funnel(args) -> int:
    try:
        report = funnel(args.bytes)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    if args.format == "json":
        sys.stdout.write(report.to_json())
    else:
        sys.stdout.write(report.render())
    return EXIT_OK


COMMANDS = {"run": cmd_run, "resume": cmd_resume, "index": cmd_index, "fetch": cmd_fetch,
            "extract": cmd_extract, "filter": cmd_filter, "dedup": cmd_dedup,
            "stats": cmd_stats, "funnel": cmd_funnel}


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(asctime)s %(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"harvest: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (StateCorruptionError, StateError) as exc:
        print(f"harvest: state error: {exc}", file=sys.stderr)
        return EXIT_STATE
    except FileNotFoundError as exc:
        print(f"harvest: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
