"""Regenerate the bundled stopword lists from the seed sentences.

    python scripts/derive_stopwords.py [--top-n 2000] [--min-count 2]
"""

import argparse
from pathlib import Path

from harvest.boilerplate import derive_stopwords

DATA = Path(__file__).resolve().parents[1] / "src" / "harvest" / "data"


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--top-n", type=int, default=2000)
    ap.add_argument("--min-count", type=int, default=2)
    args = ap.parse_args()
    for seed in sorted((DATA / "seed").glob("*.txt")):
        lines = seed.read_text("utf-8").splitlines()
        words = derive_stopwords(lines, args.top_n, args.min_count)
        out = DATA / "stopwords" / seed.name
        out.write_text("\n".join(words) + "\n", encoding="utf-8")
        print(f"{seed.stem}: {len(words)} words -> {out.relative_to(DATA.parents[1])}")


if __name__ == "__main__":
    main()
