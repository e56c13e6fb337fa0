"""Command-line surface: train, eval, predict, generate, ablate.

Exit codes: 0 success, 2 usage or data error, 3 numerical failure during
training. Configuration precedence, lowest to highest: built-in dataclass
defaults, --preset, --config JSON file, individual flags.
"""

from __future__ import annotations

import argparse
import json
import os
import statistics
import sys

from .checkpoint import load_checkpoint, save_checkpoint
from .data import (
    IGNORE_LABEL,
    build_label_vocab,
    build_token_vocab,
    parse_conll,
    parse_predict_input,
    serialize_conll,
)
from .errors import ConfigError, ParseError, TrainingDivergedError
from .evaluation import evaluate, predict_corpus
from .model import ModelConfig, TokenClassifier, VARIANTS
from .presets import get_preset
from .rng import RngState
from .synth import KINDS, copy_spec, generate, relational_spec, window_spec
from .training import TrainConfig, train

_SPEC_FACTORIES = {
    "copy": copy_spec,
    "window": window_spec,
    "relational-match": relational_spec,
}


def _read_text(path: str) -> str:
    with open(path, encoding="utf-8") as fh:
        return fh.read()


def _load_corpus(path: str):
    return parse_conll(_read_text(path))


def _layered_config(args) -> tuple[dict, dict, str]:
    """Merge preset -> config file -> flags into model/train override dicts."""
    model: dict = {}
    train_: dict = {}
    variant = None
    if args.preset:
        preset = get_preset(args.preset)
        model.update(preset.get("model", {}))
        train_.update(preset.get("train", {}))
    if args.config:
        blob = json.loads(_read_text(args.config))
        if not isinstance(blob, dict):
            raise ConfigError(f"{args.config}: top level must be an object")
        model.update(blob.get("model", {}))
        train_.update(blob.get("train", {}))
        variant = blob.get("variant", variant)
    flag_model = {
        "max_len": args.max_len,
        "d": args.hidden, "d_emb": args.hidden, "gat_hidden": args.hidden,
        "gat_heads": args.heads, "enc_heads": args.heads,
        "dec_heads": args.heads,
    }
    flag_train = {
        "learning_rate": args.lr, "epochs": args.epochs,
        "batch_size": args.batch_size, "max_len": args.max_len,
        "seed": args.seed,
    }
    model.update({k: v for k, v in flag_model.items() if v is not None})
    train_.update({k: v for k, v in flag_train.items() if v is not None})
    if getattr(args, "variant", None):
        variant = args.variant
    return model, train_, (variant or "full")


def _build_train_config(train_overrides: dict) -> TrainConfig:
    base = TrainConfig().to_dict()
    unknown = set(train_overrides) - set(base)
    if unknown:
        raise ConfigError(f"unknown train option(s): {sorted(unknown)}")
    base.update(train_overrides)
    config = TrainConfig.from_dict(base)
    config.validate()
    return config


def _build_model_config(model_overrides: dict, variant: str,
                        vocab_size: int, n_labels: int) -> ModelConfig:
    base = ModelConfig(vocab_size=vocab_size, n_labels=n_labels).to_dict()
    unknown = set(model_overrides) - set(base)
    if unknown:
        raise ConfigError(f"unknown model option(s): {sorted(unknown)}")
    base.update(model_overrides)
    base["vocab_size"] = vocab_size
    base["n_labels"] = n_labels
    base["variant"] = variant
    config = ModelConfig.from_dict(base)
    config.validate()
    return config


def cmd_train(args) -> int:
    model_over, train_over, variant = _layered_config(args)
    train_config = _build_train_config(train_over)
    train_corpus = _load_corpus(args.train)
    valid_corpus = _load_corpus(args.valid)
    if not train_corpus:
        raise ConfigError(f"{args.train}: no sentences found")
    if not valid_corpus:
        raise ConfigError(f"{args.valid}: no sentences found")

    token_vocab = build_token_vocab(train_corpus)
    label_vocab = build_label_vocab(train_corpus)
    model_config = _build_model_config(model_over, variant,
                                       len(token_vocab), len(label_vocab))
    model = TokenClassifier(model_config, token_vocab, label_vocab,
                            RngState(train_config.seed))
    result = train(model, {"train": train_corpus, "valid": valid_corpus},
                   train_config)

    os.makedirs(args.out, exist_ok=True)
    save_checkpoint(os.path.join(args.out, "checkpoint.npz"), model)
    with open(os.path.join(args.out, "history.jsonl"), "w",
              encoding="utf-8") as fh:
        fh.write(result.history_jsonl())
    with open(os.path.join(args.out, "config.json"), "w",
              encoding="utf-8") as fh:
        json.dump({"model": model_config.to_dict(),
                   "train": train_config.to_dict()}, fh, indent=2)
        fh.write("\n")
    for row in result.history:
        print(f"epoch {row['epoch']:3d}  loss {row['train_loss']:.4f}  "
              f"valid micro-F1 {row['micro_f1']:.4f}")
    print(f"best micro-F1 {result.best_micro:.4f} at epoch "
          f"{result.best_epoch} -> {args.out}")
    return 0


def cmd_eval(args) -> int:
    model = load_checkpoint(args.checkpoint)
    test_corpus = _load_corpus(args.test)
    if not test_corpus:
        raise ConfigError(f"{args.test}: no sentences found")
    known = set(model.label_vocab.label_to_id)
    for sent in test_corpus:
        for lab in sent.labels:
            if lab != IGNORE_LABEL and lab not in known:
                raise ConfigError(
                    f"test label {lab!r} is not in the checkpoint's "
                    f"label vocabulary")
    report = evaluate(model, test_corpus,
                      batch_size=args.batch_size or 16,
                      max_len=model.config.max_len)
    os.makedirs(args.out, exist_ok=True)
    with open(os.path.join(args.out, "report.json"), "w",
              encoding="utf-8") as fh:
        fh.write(report.to_json())
        fh.write("\n")
    with open(os.path.join(args.out, "report.txt"), "w",
              encoding="utf-8") as fh:
        fh.write(report.to_text())
    print(report.to_text(), end="")
    return 0


def cmd_predict(args) -> int:
    model = load_checkpoint(args.checkpoint)
    sentences = parse_predict_input(_read_text(args.input))
    predictions = predict_corpus(model, sentences,
                                 batch_size=args.batch_size or 16,
                                 max_len=model.config.max_len)
    lines = []
    for sent, labels in zip(sentences, predictions):
        # sentences longer than the model's max_len keep their tail tokens,
        # labeled O, so output line count always equals input token count
        padded = list(labels) + ["O"] * (len(sent.tokens) - len(labels))
        lines.extend(f"{tok} {lab}" for tok, lab in zip(sent.tokens, padded))
        lines.append("")
    text = "\n".join(lines[:-1]) + "\n" if lines else ""
    if args.output == "-":
        sys.stdout.write(text)
    else:
        with open(args.output, "w", encoding="utf-8") as fh:
            fh.write(text)
    return 0


def cmd_generate(args) -> int:
    spec = _SPEC_FACTORIES[args.task](seed=args.seed)
    splits = generate(spec)
    os.makedirs(args.out, exist_ok=True)
    for name in ("train", "valid", "test"):
        path = os.path.join(args.out, f"{name}.conll")
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(serialize_conll(splits[name]))
        print(f"wrote {len(splits[name]):4d} sentences -> {path}")
    return 0


def cmd_ablate(args) -> int:
    seeds = [int(s) for s in args.seeds.split(",") if s != ""]
    if not seeds:
        raise ConfigError("--seeds must name at least one seed")
    model_over, train_over, _ = _layered_config(args)

    splits = generate(relational_spec(seed=args.data_seed))
    token_vocab = build_token_vocab(splits["train"])
    label_vocab = build_label_vocab(splits["train"])
    corpora = {"train": splits["train"], "valid": splits["valid"]}

    rows = []
    for variant in VARIANTS:
        for seed in seeds:
            train_config = _build_train_config(dict(train_over, seed=seed))
            model_config = _build_model_config(
                model_over, variant, len(token_vocab), len(label_vocab))
            model = TokenClassifier(model_config, token_vocab, label_vocab,
                                    RngState(seed))
            train(model, corpora, train_config)
            report = evaluate(model, splits["test"],
                              batch_size=train_config.batch_size,
                              max_len=train_config.max_len)
            rows.append((variant, seed, report.micro["f1"],
                         report.macro["f1"]))
            print(f"{variant:8s} seed {seed}: micro-F1 "
                  f"{report.micro['f1']:.4f}", flush=True)

    os.makedirs(args.out, exist_ok=True)
    csv_path = os.path.join(args.out, "ablation.csv")
    with open(csv_path, "w", encoding="utf-8") as fh:
        fh.write("variant,seed,micro_f1,macro_f1\n")
        for variant, seed, micro, macro in rows:
            fh.write(f"{variant},{seed},{micro:.6f},{macro:.6f}\n")

    summary_lines = []
    for variant in VARIANTS:
        micros = [r[2] for r in rows if r[0] == variant]
        mean = statistics.mean(micros)
        std = statistics.stdev(micros) if len(micros) > 1 else 0.0
        summary_lines.append(f"{variant:8s} micro-F1 {mean:.4f} +/- {std:.4f}")
    summary = "\n".join(summary_lines) + "\n"
    with open(os.path.join(args.out, "summary.txt"), "w",
              encoding="utf-8") as fh:
        fh.write(summary)
    print(summary, end="")
    return 0


def _add_config_flags(p: argparse.ArgumentParser, with_variant=True) -> None:
    p.add_argument("--config", help="JSON config file")
    p.add_argument("--preset", help="named preset (see presets module)")
    if with_variant:
        p.add_argument("--variant", choices=VARIANTS,
                       help="which modules are active")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--epochs", type=int, default=None)
    p.add_argument("--lr", type=float, default=None)
    p.add_argument("--batch-size", type=int, default=None)
    p.add_argument("--max-len", type=int, default=None)
    p.add_argument("--heads", type=int, default=None,
                   help="attention heads for all attention modules")
    p.add_argument("--hidden", type=int, default=None,
                   help="model width d (also embedding and GAT hidden size)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="graphfuse",
        description="Token classification with a GAT-refined encoder")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="fit a model on CoNLL data")
    p.add_argument("--train", required=True, help="training CoNLL file")
    p.add_argument("--valid", required=True, help="validation CoNLL file")
    p.add_argument("--out", required=True, help="output directory")
    _add_config_flags(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="score a checkpoint on labeled data")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--test", required=True, help="labeled CoNLL file")
    p.add_argument("--out", default=".", help="report directory")
    p.add_argument("--batch-size", type=int, default=None)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("predict", help="label raw tokens with a checkpoint")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--input", required=True,
                   help="token-per-line file; existing labels are ignored")
    p.add_argument("--output", default="-", help="output path or - (stdout)")
    p.add_argument("--batch-size", type=int, default=None)
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("generate", help="write a synthetic task to disk")
    p.add_argument("--task", choices=KINDS, required=True)
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("ablate",
                       help="run all variants on relational-match")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--seeds", default="0,1,2,3,4",
                   help="comma-separated training seeds")
    p.add_argument("--data-seed", type=int, default=0,
                   help="seed for the generated task data")
    _add_config_flags(p, with_variant=False)
    p.set_defaults(func=cmd_ablate, preset="relational")

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, ParseError, FileNotFoundError, IsADirectoryError,
            json.JSONDecodeError, UnicodeDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except TrainingDivergedError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
