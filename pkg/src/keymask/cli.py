"""Command-line interface: one subcommand per pipeline stage.

All subcommands read the same YAML config (see README for the schema); the
``matrix`` subcommand chains every stage the configured rows need.
"""

import argparse
import dataclasses
import logging
import sys
from pathlib import Path

import yaml

from . import pipeline
from .corpus import save_corpus
from .errors import ConfigError, KeymaskError
from .pipeline import PipelineConfig
from .synth import SyntheticSpec, make_synthetic_corpus

logger = logging.getLogger("keymask")


def _apply_overrides(raw: dict, overrides) -> dict:
    """Apply ``--set section.key=value`` overrides onto the raw config dict."""
    for item in overrides or ():
        key, sep, value = item.partition("=")
        if not sep or not key:
            raise ConfigError(f"--set expects section.key=value, got {item!r}")
        node = raw
        parts = key.split(".")
        for part in parts[:-1]:
            node = node.setdefault(part, {})
            if not isinstance(node, dict):
                raise ConfigError(f"--set {key}: {part!r} is not a section")
        node[parts[-1]] = yaml.safe_load(value)
    return raw


def _load_config(args) -> PipelineConfig:
    raw = yaml.safe_load(Path(args.config).read_text(encoding="utf-8"))
    if not isinstance(raw, dict):
        raise ConfigError(f"config file {args.config} does not hold a mapping")
    config = PipelineConfig.from_dict(_apply_overrides(raw, getattr(args, "set", None)))
    if getattr(args, "output_dir", None):
        config = dataclasses.replace(config, output_dir=args.output_dir)
    return config


def _add_config_arg(parser):
    parser.add_argument("--config", required=True, help="pipeline config YAML")
    parser.add_argument("--output-dir", help="override the configured output directory")
    parser.add_argument("--set", action="append", metavar="KEY=VALUE",
                        help="override any config field, e.g. "
                             "--set pretrain.epochs=1 (repeatable)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="keymask",
        description=("Compact domain-adaptive pretraining: summarize, extract "
                     "keywords, mask keywords during continued MLM pretraining, "
                     "fine-tune, and compare."))
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="validate the corpus and build the tokenizer")
    _add_config_arg(p)

    p = sub.add_parser("summarize", help="summarize the unlabeled pool")
    _add_config_arg(p)

    for name, help_text in (("extract", "extract per-document keywords"),
                            ("filter", "apply the frequency cut-off")):
        p = sub.add_parser(name, help=help_text)
        _add_config_arg(p)
        p.add_argument("--source", choices=pipeline.KEYWORD_SOURCES,
                       default="summaries")

    p = sub.add_parser("pretrain", help="run one row's pretraining phase")
    _add_config_arg(p)
    p.add_argument("--row", required=True,
                   choices=[r for r in pipeline.ROW_SPECS if r != "none"])

    p = sub.add_parser("finetune", help="fine-tune and evaluate one row")
    _add_config_arg(p)
    p.add_argument("--row", required=True, choices=list(pipeline.ROW_SPECS))

    p = sub.add_parser("report", help="aggregate row results into the report")
    _add_config_arg(p)

    p = sub.add_parser("matrix", help="run the full pipeline for all configured rows")
    _add_config_arg(p)
    p.add_argument("--dry-run", action="store_true",
                   help="print the execution plan and exit")

    p = sub.add_parser("synth", help="write a synthetic demo corpus and config")
    p.add_argument("--out", required=True, help="directory for corpus + config")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--unlabeled", type=int, default=200)
    p.add_argument("--train", type=int, default=80)

    return parser


def _cmd_synth(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    spec = SyntheticSpec(n_unlabeled=args.unlabeled, n_train=args.train,
                         seed=args.seed)
    splits = make_synthetic_corpus(spec)
    corpus_path = out / "corpus.jsonl"
    save_corpus(splits, corpus_path)
    config = PipelineConfig(
        corpus_path=str(corpus_path),
        output_dir=str(out / "artifacts"),
        master_seed=args.seed,
        max_positions=256,
        max_vocab=2000,
        pretrain=pipeline.PretrainSettings(base_lr=5e-4, block_tokens=64),
        finetune=pipeline.FinetuneSettings(lr=1e-3, max_epochs=4, batch_size=4,
                                           max_seq_tokens=64),
    )
    config.save_yaml(out / "config.yaml")
    print(f"wrote {corpus_path} and {out / 'config.yaml'}")
    print(f"next: keymask matrix --config {out / 'config.yaml'}")
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s")

    try:
        if args.command == "synth":
            return _cmd_synth(args)

        config = _load_config(args)
        if args.command == "ingest":
            splits = pipeline.run_ingest(config)
            print(f"ingested train/valid/test/unlabeled = {splits.counts}")
        elif args.command == "summarize":
            ratio = pipeline.run_summarize(config)
            print(f"compaction ratio: {ratio:.4f}")
        elif args.command == "extract":
            pipeline.run_extract(config, args.source)
        elif args.command == "filter":
            threshold = pipeline.run_filter(config, args.source)
            print(f"cut-off for {args.source}: {threshold}")
        elif args.command == "pretrain":
            pipeline.run_pretrain_row(config, args.row)
        elif args.command == "finetune":
            report = pipeline.run_finetune_row(config, args.row)
            print(f"{args.row}: test acc {report.test_acc:.4f}, "
                  f"test F1 {report.test_f1:.4f}")
        elif args.command == "report":
            pipeline.run_report(config)
            print(f"report written under {pipeline.Workspace(config).report_dir}")
        elif args.command == "matrix":
            if args.dry_run:
                for step in pipeline.matrix_plan(config):
                    print(f"keymask {step} --config {args.config}")
                return 0
            pipeline.run_matrix(config)
            report_dir = pipeline.Workspace(config).report_dir
            print((report_dir / "report.tsv").read_text(encoding="utf-8"))
    except KeymaskError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
