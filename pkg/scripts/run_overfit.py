"""Overfit the toy model on the synthetic corpus and print per-epoch progress."""

import argparse
import json
import logging
import time

from mingts.model import ModelConfig, train
from mingts.synthetic import DEFAULT_SEED, generate_corpus


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--config", default="configs/synthetic_overfit.json")
    p.add_argument("--corpus-seed", type=int, default=DEFAULT_SEED)
    p.add_argument("--report", help="write the TrainReport JSON here")
    args = p.parse_args()
    logging.basicConfig(level=logging.INFO, format="%(message)s")
    with open(args.config) as f:
        cfg = ModelConfig.from_dict(json.load(f))
    t0 = time.perf_counter()
    _, _, report = train(cfg, generate_corpus(args.corpus_seed))
    print(f"final train F1 {report.final_train_f1:.4f} in {time.perf_counter() - t0:.1f}s")
    if args.report:
        with open(args.report, "w") as f:
            f.write(report.to_json())


if __name__ == "__main__":
    main()
