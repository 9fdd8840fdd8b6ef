"""Serve the bundled mini-crawl on localhost for manual experiments.

    python scripts/serve_fixture.py --port 8080
    HARVEST_INDEX_URL=http://127.0.0.1:8080 HARVEST_DATA_URL=http://127.0.0.1:8080 \
        harvest run --crawl CC-MAIN-2020-10 -o out
"""

import argparse
import logging
import time

from harvest.fixture import CRAWL, MockCrawlServer, build_minicrawl


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--port", type=int, default=8080, help="0 picks a free port")
    ap.add_argument("--page-size", type=int, default=5)
    ap.add_argument("-v", "--verbose", action="store_true")
    args = ap.parse_args()
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO)

    with MockCrawlServer.for_minicrawl(build_minicrawl(), page_size=args.page_size,
                                       port=args.port) as server:
        print(f"serving {CRAWL} at {server.url} (Ctrl-C to stop)", flush=True)
        try:
            while True:
                time.sleep(3600)
        except KeyboardInterrupt:
            pass


if __name__ == "__main__":
    main()
