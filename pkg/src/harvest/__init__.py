"""Build a deduplicated monolingual corpus from Common Crawl by targeting one top-level domain."""

__version__ = "0.1.0"
