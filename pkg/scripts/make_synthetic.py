"""Write the seeded synthetic corpus in the dataset file format."""

import argparse
from pathlib import Path

from mingts.corpus import serialize
from mingts.synthetic import DEFAULT_SEED, generate_corpus


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p.add_argument("--size", type=int, default=50)
    p.add_argument("--out", default="data/synthetic/train.txt")
    args = p.parse_args()
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(serialize(generate_corpus(args.seed, args.size)), encoding="utf-8")
    print(f"wrote {args.size} sentences to {out}")


if __name__ == "__main__":
    main()
