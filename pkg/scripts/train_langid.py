"""Train the bundled language-ID model on the seed split and report held-out accuracy.

    python scripts/train_langid.py [--out src/harvest/data/langid.lidm]
"""

import argparse
from pathlib import Path

from harvest.langid import accuracy, seed_samples, split_holdout, train

DEFAULT_OUT = Path(__file__).resolve().parents[1] / "src" / "harvest" / "data" / "langid.lidm"


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", type=Path, default=DEFAULT_OUT)
    ap.add_argument("--hash-bits", type=int, default=15)
    ap.add_argument("--l2", type=float, default=1e-5)
    ap.add_argument("--holdout", type=float, default=0.3)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    train_set, held_out = split_holdout(seed_samples(), args.holdout, args.seed)
    model = train(train_set, hash_bits=args.hash_bits, l2=args.l2, seed=args.seed)
    model.save(str(args.out))
    print(f"labels {model.labels}, {len(train_set)} train / {len(held_out)} held-out samples")
    print(f"held-out accuracy {accuracy(model, held_out):.4f} -> {args.out}")


if __name__ == "__main__":
    main()
