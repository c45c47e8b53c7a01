"""Command-line entry point: ``mingts <command> [options]``.

Exit status is 0 on success, 1 for input/validation errors and 2 when an
internal invariant is violated (including a diverged training run).
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import List, Optional

import numpy as np

from . import codec, corpus, losses, metrics, model, projection

log = logging.getLogger("mingts")


class InputError(Exception):
    pass


def _write(path: Optional[str], text: str) -> None:
    if path is None:
        sys.stdout.write(text)
    else:
        Path(path).write_text(text, encoding="utf-8")


def _read(path: str) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from None


def _dataset(path: str, split=corpus.Split.TRAIN) -> corpus.Dataset:
    return corpus.parse_aste_file(_read(path), name=Path(path).stem, split=split)


# ---------------------------------------------------------------- grid files


def format_grid_file(d: corpus.Dataset) -> str:
    blocks = []
    for s in d:
        grid = codec.encode_grid(s.n, s.gold)
        blocks.append(f"# id: {s.id}\n# text: {s.text}\n{codec.format_grid(grid)}")
    return "\n".join(blocks)


def parse_grid_file(text: str):
    """Yield ``(id, sentence_text, grid)`` for each block of a grid file."""
    out = []
    for block in text.split("\n\n"):
        lines = [l for l in block.splitlines() if l.strip()]
        if not lines:
            continue
        meta = {}
        rows = []
        for line in lines:
            if line.startswith("# "):
                key, _, value = line[2:].partition(": ")
                meta[key] = value
            else:
                rows.append(line)
        if "id" not in meta or "text" not in meta:
            raise InputError("grid block without '# id:' and '# text:' headers")
        try:
            grid = codec.parse_grid("\n".join(rows))
        except ValueError as exc:
            raise InputError(f"grid {meta['id']}: {exc}") from None
        if grid.shape[0] != len(corpus.tokenize(meta["text"])):
            raise InputError(f"grid {meta['id']}: size does not match token count")
        out.append((meta["id"], meta["text"], grid))
    return out


# ---------------------------------------------------------------- commands


def cmd_stats(args) -> None:
    stats = corpus.dataset_stats(_dataset(args.data))
    _write(args.out, stats.to_json())


def cmd_encode(args) -> None:
    _write(args.out, format_grid_file(_dataset(args.data)))


def cmd_decode(args) -> None:
    lines = []
    issues = {}
    for sid, text, grid in parse_grid_file(_read(args.data)):
        try:
            triplets, found = codec.decode_grid(grid)
        except ValueError as exc:
            raise InputError(f"grid {sid}: {exc}") from None
        lines.append(f"{text}####{corpus.format_annotations(triplets)}\n")
        if found:
            issues[sid] = [i.to_dict() for i in found]
    _write(args.out, "".join(lines))
    issues_path = args.issues or (args.out + ".issues.json" if args.out else None)
    _write(issues_path, json.dumps(issues, indent=2, sort_keys=True) + "\n")


def _config(args) -> model.ModelConfig:
    raw = {}
    if args.config:
        try:
            raw = json.loads(_read(args.config))
        except json.JSONDecodeError as exc:
            raise InputError(f"config {args.config}: {exc}") from None
        if not isinstance(raw, dict):
            raise InputError("config file must hold a JSON object")
    for flag in ("seed", "beta", "variant", "epochs"):
        value = getattr(args, flag, None)
        if value is not None:
            raw[flag] = value
    return model.ModelConfig.from_dict(raw)


def cmd_train(args) -> None:
    cfg = _config(args)
    data = _dataset(args.data)
    dev = _dataset(args.dev, corpus.Split.DEV) if args.dev else None
    enc, head, report = model.train(cfg, data, dev)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    model.save_checkpoint(out / "checkpoint.json", cfg, enc, head)
    (out / "report.json").write_text(report.to_json(), encoding="utf-8")


def _predict_all(ckpt: str, gold: corpus.Dataset, parallel: bool) -> corpus.PredictionSet:
    _, enc, head = model.load_checkpoint(ckpt)

    def one(s):
        return model.predict_triplets(enc, head, s)[0]

    if parallel:
        with ThreadPoolExecutor() as pool:
            preds = list(pool.map(one, gold.sentences))
    else:
        preds = [one(s) for s in gold.sentences]
    return {s.id: frozenset(p) for s, p in zip(gold.sentences, preds)}


def _combos(value: str) -> List[metrics.ElementCombo]:
    if value == "all":
        return list(metrics.ElementCombo)
    try:
        return [metrics.ElementCombo(c.strip().upper().replace("-", "")) for c in value.split(",")]
    except ValueError as exc:
        raise InputError(f"--combo: {exc}") from None


def cmd_eval(args) -> None:
    gold = _dataset(args.data, corpus.Split.TEST)
    if args.pred:
        preds = corpus.load_predictions(_read(args.pred), gold)
    elif args.checkpoint:
        preds = _predict_all(args.checkpoint, gold, args.parallel)
    else:
        raise InputError("eval needs --checkpoint or --pred")
    report = metrics.metrics_report(gold, preds, _combos(args.combo), parallel=args.parallel)
    _write(args.out, metrics.report_json(report))


def cmd_project(args) -> None:
    _, enc, _ = model.load_checkpoint(args.checkpoint)
    data = _dataset(args.data)
    vectors, labels, sids, idx = [], [], [], []
    for s in data:
        vectors.append(model.encode_tokens(enc, enc.ids(s.tokens)))
        labels += losses.token_classes(s.n, s.gold)
        sids += [s.id] * s.n
        idx += list(range(s.n))
    proj = projection.pca_project(np.vstack(vectors), labels, args.k, sids, idx)
    _write(args.out, proj.to_csv())


# ---------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="mingts", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("stats", help="corpus statistics as JSON")
    s.add_argument("--data", required=True)
    s.add_argument("--out")
    s.set_defaults(func=cmd_stats)

    s = sub.add_parser("encode", help="dataset file -> grid file")
    s.add_argument("--data", required=True)
    s.add_argument("--out")
    s.set_defaults(func=cmd_encode)

    s = sub.add_parser("decode", help="grid file -> dataset file (+ issues JSON)")
    s.add_argument("--data", required=True, help="grid file")
    s.add_argument("--out")
    s.add_argument("--issues", help="issues JSON path (default: OUT.issues.json)")
    s.set_defaults(func=cmd_decode)

    s = sub.add_parser("train", help="train the toy model; writes OUT/checkpoint.json and OUT/report.json")
    s.add_argument("--data", required=True)
    s.add_argument("--dev")
    s.add_argument("--config", help="JSON object of ModelConfig fields; flags override it")
    s.add_argument("--out", required=True)
    s.add_argument("--seed", type=int)
    s.add_argument("--beta", type=float)
    s.add_argument("--variant", choices=[v.value for v in model.Variant])
    s.add_argument("--epochs", type=int)
    s.set_defaults(func=cmd_train)

    for name in ("eval", "score-llm"):
        s = sub.add_parser(name, help="metrics report (score-llm: prediction-file mode)")
        s.add_argument("--data", required=True, help="gold dataset")
        if name == "eval":
            s.add_argument("--checkpoint")
        s.add_argument("--pred", required=name == "score-llm", help="id<TAB>annotations file")
        s.add_argument("--combo", default="all", help="comma list of AOS,AO,AS,OS,A,O,S or 'all'")
        s.add_argument("--parallel", action="store_true")
        s.add_argument("--out")
        s.set_defaults(func=cmd_eval, checkpoint=None)

    s = sub.add_parser("project", help="PCA rows of token representations as CSV")
    s.add_argument("--checkpoint", required=True)
    s.add_argument("--data", required=True)
    s.add_argument("--k", type=int, default=3)
    s.add_argument("--out")
    s.set_defaults(func=cmd_project)
    return p


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        args.func(args)
    except (model.TrainingDiverged, AssertionError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (InputError, corpus.CorpusError, codec.CodecError, model.ConfigError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
