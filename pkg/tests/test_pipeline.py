import dataclasses
import json

import pytest
import yaml

from keymask.cli import main as cli_main
from keymask.corpus import read_stats, save_corpus
from keymask.errors import ConfigError, MissingArtifactError
from keymask.filtering import load_frequency_table, load_keyword_set, apply_cutoff
from keymask.pipeline import (FinetuneSettings, PipelineConfig, PretrainSettings,
                              Workspace, derive_seed, matrix_plan, run_extract,
                              run_filter, run_ingest, run_summarize)
from keymask.synth import SyntheticSpec, make_synthetic_corpus


@pytest.fixture()
def demo(tmp_path):
    splits = make_synthetic_corpus(SyntheticSpec(
        n_train=16, n_validation=6, n_test=6, n_unlabeled=24, seed=3))
    corpus_path = tmp_path / "corpus.jsonl"
    save_corpus(splits, corpus_path)
    config = PipelineConfig(
        corpus_path=str(corpus_path),
        output_dir=str(tmp_path / "artifacts"),
        master_seed=7,
        max_positions=256,
        max_vocab=1500,
        pretrain=PretrainSettings(epochs=1, base_lr=5e-4, block_tokens=64),
        finetune=FinetuneSettings(lr=1e-3, max_epochs=1, max_seq_tokens=64),
    )
    return splits, config


def test_config_yaml_round_trip(tmp_path, demo):
    _, config = demo
    path = tmp_path / "config.yaml"
    config.save_yaml(path)
    assert PipelineConfig.from_yaml(path) == config


def test_config_rejects_unknown_keys(tmp_path, demo):
    _, config = demo
    raw = config.to_dict()
    raw["banana"] = 1
    path = tmp_path / "bad.yaml"
    path.write_text(yaml.safe_dump(raw))
    with pytest.raises(ConfigError, match="banana"):
        PipelineConfig.from_yaml(path)
    with pytest.raises(ConfigError, match="rows"):
        PipelineConfig.from_dict({"corpus_path": "x", "rows": ["sideways"]})
    with pytest.raises(ConfigError, match="cut-off"):
        PipelineConfig.from_dict({"corpus_path": "x", "cutoff_whole": 0})


def test_derive_seed_stable():
    assert derive_seed(13, "summarize") == derive_seed(13, "summarize")
    assert derive_seed(13, "summarize") != derive_seed(13, "extract:summaries")
    assert derive_seed(13, "summarize") != derive_seed(14, "summarize")


def test_missing_artifacts_name_the_producer(demo):
    _, config = demo
    with pytest.raises(MissingArtifactError, match="ingest"):
        run_summarize(config)
    run_ingest(config)
    with pytest.raises(MissingArtifactError, match="summarize"):
        run_extract(config, "summaries")
    with pytest.raises(MissingArtifactError, match="extract --source whole_data"):
        run_filter(config, "whole_data")


def test_summarize_outputs_and_determinism(demo):
    splits, config = demo
    run_ingest(config)
    run_summarize(config)
    ws = Workspace(config)
    first = ws.summaries_file.read_bytes()
    assert len(first.splitlines()) == len(splits.unlabeled)
    run_summarize(config)
    assert ws.summaries_file.read_bytes() == first


def test_compaction_ratio_matches_independent_recount(demo):
    splits, config = demo
    run_ingest(config)
    ratio = run_summarize(config)
    ws = Workspace(config)
    # independent recount straight from the artifact files
    whole = sum(len(json.loads(line)["text"].encode("utf-8"))
                for line in ws.corpus_file.read_text().splitlines()
                if json.loads(line)["split"] == "unlabeled")
    summary = sum(len(json.loads(line)["text"].encode("utf-8"))
                  for line in ws.summaries_file.read_text().splitlines())
    assert ratio == pytest.approx(summary / whole, rel=1e-9)
    assert read_stats(ws.summary_stats_file).byte_size == summary


def test_extract_on_identity_summaries_matches_whole(demo, tmp_path):
    _, config = demo
    config = dataclasses.replace(config, stub_keep_fraction=1.0,
                                 cutoff_summaries=1, cutoff_whole=1)
    run_ingest(config)
    run_summarize(config)
    run_extract(config, "summaries")
    run_extract(config, "whole_data")
    run_filter(config, "summaries")
    run_filter(config, "whole_data")
    ws = Workspace(config)
    from_summaries = load_keyword_set(ws.keywords_dir("summaries") / "keywords.txt")
    from_whole = load_keyword_set(ws.keywords_dir("whole_data") / "keywords.txt")
    assert from_summaries.words == from_whole.words


def test_filter_threshold_one_keeps_all_words(demo):
    _, config = demo
    config = dataclasses.replace(config, cutoff_whole=1)
    run_ingest(config)
    run_extract(config, "whole_data")
    run_filter(config, "whole_data")
    ws = Workspace(config)
    table = load_frequency_table(ws.keywords_dir("whole_data") / "frequency.tsv")
    keywords = load_keyword_set(ws.keywords_dir("whole_data") / "keywords.txt")
    assert keywords.words == {w for w, _ in table.entries}


def test_cutoff_sweep_monotone(demo):
    _, config = demo
    run_ingest(config)
    run_extract(config, "whole_data")
    ws = Workspace(config)
    table = load_frequency_table(ws.keywords_dir("whole_data") / "frequency.tsv")
    sizes = [len(apply_cutoff(table, threshold).words) for threshold in range(1, 11)]
    assert sizes == sorted(sizes, reverse=True)


def test_matrix_plan_covers_only_needed_stages():
    config = PipelineConfig(corpus_path="x", rows=("none", "random_whole"))
    plan = matrix_plan(config)
    assert "summarize" not in plan
    assert "extract --source whole_data" not in plan
    assert plan[0] == "ingest" and plan[-1] == "report"

    config = PipelineConfig(corpus_path="x", rows=("keyword_summary",))
    plan = matrix_plan(config)
    assert "summarize" in plan
    assert "extract --source summaries" in plan
    assert "filter --source summaries" in plan
    assert "extract --source whole_data" not in plan


def test_row_validation():
    with pytest.raises(ConfigError):
        PipelineConfig(corpus_path="x", rows=())


def test_cli_dry_run_and_synth(tmp_path, capsys):
    assert cli_main(["synth", "--out", str(tmp_path / "demo"), "--seed", "3",
                     "--unlabeled", "12", "--train", "8"]) == 0
    out = capsys.readouterr().out
    assert "corpus.jsonl" in out
    config_path = tmp_path / "demo" / "config.yaml"
    assert config_path.exists()

    assert cli_main(["matrix", "--config", str(config_path), "--dry-run"]) == 0
    plan = capsys.readouterr().out
    assert "keymask ingest" in plan and "keymask report" in plan


def test_cli_set_overrides(tmp_path, capsys):
    assert cli_main(["synth", "--out", str(tmp_path / "d")]) == 0
    capsys.readouterr()
    config = str(tmp_path / "d" / "config.yaml")
    rc = cli_main(["matrix", "--config", config, "--dry-run",
                   "--set", "rows=[none]", "--set", "pretrain.epochs=1"])
    assert rc == 0
    plan = capsys.readouterr().out
    assert "summarize" not in plan
    assert "finetune --row none" in plan


def test_cli_error_exit_code(tmp_path, capsys):
    assert cli_main(["synth", "--out", str(tmp_path / "d")]) == 0
    capsys.readouterr()
    config_path = tmp_path / "d" / "config.yaml"
    rc = cli_main(["summarize", "--config", str(config_path)])
    assert rc == 2
    assert "ingest" in capsys.readouterr().err


def test_cli_single_stage_flow(tmp_path, capsys):
    assert cli_main(["synth", "--out", str(tmp_path / "d"), "--unlabeled", "10",
                     "--train", "8"]) == 0
    config = str(tmp_path / "d" / "config.yaml")
    assert cli_main(["ingest", "--config", config]) == 0
    assert cli_main(["summarize", "--config", config]) == 0
    assert cli_main(["extract", "--config", config, "--source", "summaries"]) == 0
    assert cli_main(["filter", "--config", config, "--source", "summaries"]) == 0
    out = capsys.readouterr().out
    assert "compaction ratio" in out


def test_snapshot_is_reloadable(demo):
    _, config = demo
    run_ingest(config)
    ws = Workspace(config)
    snapshot = PipelineConfig.from_yaml(ws.root / "config.snapshot.yaml")
    assert snapshot == config
