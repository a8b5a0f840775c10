"""End-to-end tests for the pipeline driver: stage chaining on the bundled
synthetic corpus, exit codes, config resolution, and rerun determinism."""

import hashlib
import json
import os
from pathlib import Path

import numpy as np
import pytest

from xsumforge import cli
from xsumforge.corpus_io import Document, read_pairs, write_corpus
from xsumforge.embedding_store import write_xemb

TAU = 0.7437
TAU_PRIME = TAU - 0.10


def run(*argv) -> int:
    return cli.main(list(argv))


def file_hash(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


@pytest.fixture(scope="session")
def pipeline(tmp_path_factory) -> Path:
    """One full pipeline run; inspected by many tests, mutated by none."""
    wd = tmp_path_factory.mktemp("pipeline")
    synth_dir = wd / "synth"
    stages = [
        ("synth", "--workdir", str(wd)),
        (
            "embed-import",
            "--workdir",
            str(wd),
            "--corpus",
            str(synth_dir / "corpus.jsonl"),
            "--vectors",
            str(synth_dir / "vectors.xemb"),
        ),
        ("align", "--workdir", str(wd)),
        ("induce", "--workdir", str(wd)),
        ("dedup", "--workdir", str(wd)),
        ("split", "--workdir", str(wd)),
        ("materialize", "--workdir", str(wd), "--include-in-language"),
        ("stats", "--workdir", str(wd)),
        ("plan", "--workdir", str(wd)),
        ("sample", "--workdir", str(wd), "--steps", "5"),
        (
            "evaluate",
            "--workdir",
            str(wd),
            "--predictions",
            str(synth_dir / "predictions.jsonl"),
            "--references",
            str(synth_dir / "references.jsonl"),
            "--pred-vectors",
            str(synth_dir / "pred.xemb"),
            "--ref-vectors",
            str(synth_dir / "ref.xemb"),
            "--langid-corpus",
            str(synth_dir / "corpus.jsonl"),
        ),
        ("correlate", "--workdir", str(wd)),
    ]
    for argv in stages:
        assert run(*argv) == 0, f"stage {argv[0]} failed"
    return wd


class TestPrintConfig:
    def test_defaults(self, capsys):
        assert run("--print-config") == 0
        out = capsys.readouterr().out
        expected = {
            "tau": "0.7437",
            "tau_prime_delta": "0.1",
            "max_component": "50",
            "dedup_threshold": "0.95",
            "ratios": "0.8,0.1,0.1",
            "alpha": "0.5",
            "beta": "0.75",
            "min_pair_count": "30",
            "m": "8",
            "mb": "32",
            "lase_c": "6",
            "seed": "0",
        }
        got = dict(line.split(" = ") for line in out.strip().splitlines())
        assert got == expected

    def test_output_roundtrips_as_config_file(self, capsys, tmp_path):
        assert run("--print-config") == 0
        first = capsys.readouterr().out
        cfg_file = tmp_path / "cfg.txt"
        cfg_file.write_text(first)
        assert run("align", "--workdir", str(tmp_path), "--config", str(cfg_file), "--print-config") == 0
        assert capsys.readouterr().out == first

    def test_flag_beats_config_file(self, capsys, tmp_path):
        cfg_file = tmp_path / "cfg.txt"
        cfg_file.write_text("tau = 0.9\nseed = 42\n")
        assert run("align", "--workdir", str(tmp_path), "--config", str(cfg_file), "--print-config") == 0
        got = dict(
            line.split(" = ") for line in capsys.readouterr().out.strip().splitlines()
        )
        assert got["tau"] == "0.9"
        assert got["seed"] == "42"
        assert run(
            "align",
            "--workdir",
            str(tmp_path),
            "--config",
            str(cfg_file),
            "--tau",
            "0.85",
            "--print-config",
        ) == 0
        got = dict(
            line.split(" = ") for line in capsys.readouterr().out.strip().splitlines()
        )
        assert got["tau"] == "0.85"

    def test_env_seed_wins_over_flag(self, capsys, monkeypatch, tmp_path):
        monkeypatch.setenv("XSUM_FORGE_SEED", "99")
        assert run("align", "--workdir", str(tmp_path), "--seed", "7", "--print-config") == 0
        got = dict(
            line.split(" = ") for line in capsys.readouterr().out.strip().splitlines()
        )
        assert got["seed"] == "99"

    def test_comments_and_blank_lines_in_config_file(self, capsys, tmp_path):
        cfg_file = tmp_path / "cfg.txt"
        cfg_file.write_text("# header\n\ntau = 0.8  # trailing\n")
        assert run("align", "--workdir", str(tmp_path), "--config", str(cfg_file), "--print-config") == 0
        got = dict(
            line.split(" = ") for line in capsys.readouterr().out.strip().splitlines()
        )
        assert got["tau"] == "0.8"


class TestInvalidConfig:
    @pytest.mark.parametrize(
        "flags",
        [
            ("--tau", "1.5"),
            ("--tau", "abc"),
            ("--tau-prime-delta", "0.8"),  # above tau
            ("--max-component", "1"),
            ("--dedup-threshold", "0"),
            ("--ratios", "0.5,0.5"),
            ("--ratios", "0.5,0.3,0.3"),  # sums to 1.1
            ("--alpha", "-1"),
            ("--m", "0"),
            ("--seed", "1.5"),
        ],
    )
    def test_exit_3(self, flags, tmp_path):
        assert run("align", "--workdir", str(tmp_path), *flags) == 3

    def test_unknown_config_key(self, tmp_path):
        cfg_file = tmp_path / "cfg.txt"
        cfg_file.write_text("gamma = 1.0\n")
        assert run("align", "--workdir", str(tmp_path), "--config", str(cfg_file)) == 3

    def test_malformed_config_line(self, tmp_path):
        cfg_file = tmp_path / "cfg.txt"
        cfg_file.write_text("tau 0.8\n")
        assert run("align", "--workdir", str(tmp_path), "--config", str(cfg_file)) == 3

    def test_missing_config_file(self, tmp_path):
        assert run("align", "--workdir", str(tmp_path), "--config", str(tmp_path / "no.txt")) == 3

    def test_bad_env_seed(self, monkeypatch, tmp_path):
        monkeypatch.setenv("XSUM_FORGE_SEED", "not-a-number")
        assert run("align", "--workdir", str(tmp_path)) == 3


class TestMissingUpstream:
    def test_align_without_import(self, tmp_path, capsys):
        assert run("align", "--workdir", str(tmp_path)) == 2
        assert "run the embed-import stage" in capsys.readouterr().err

    def test_induce_without_align(self, pipeline, tmp_path, capsys):
        # corpus + store present, pairs missing
        for name in (cli.F_CORPUS, cli.F_STORE):
            (tmp_path / name).write_bytes((pipeline / name).read_bytes())
        assert run("induce", "--workdir", str(tmp_path)) == 2
        assert "run the align stage" in capsys.readouterr().err

    def test_split_without_dedup(self, tmp_path, capsys):
        assert run("split", "--workdir", str(tmp_path)) == 2
        assert "run the dedup stage" in capsys.readouterr().err

    def test_stats_without_materialize(self, tmp_path, capsys):
        assert run("stats", "--workdir", str(tmp_path)) == 2
        assert "run the materialize stage" in capsys.readouterr().err

    def test_sample_without_plan(self, tmp_path, capsys):
        assert run("sample", "--workdir", str(tmp_path)) == 2
        assert "run the plan stage" in capsys.readouterr().err

    def test_correlate_without_evaluate(self, tmp_path, capsys):
        assert run("correlate", "--workdir", str(tmp_path)) == 2
        assert "run the evaluate stage" in capsys.readouterr().err


class TestPipelineArtifacts:
    def test_direct_pairs_meet_threshold(self, pipeline):
        pairs = read_pairs(pipeline / cli.F_PAIRS_DIRECT)
        assert pairs
        assert all(p.similarity >= TAU for p in pairs)
        assert all(p.kind == "direct" for p in pairs)

    def test_induced_pairs_inside_band(self, pipeline):
        induced = [p for p in read_pairs(pipeline / cli.F_PAIRS_ALL) if p.kind == "induced"]
        assert induced
        assert all(TAU_PRIME <= p.similarity < TAU for p in induced)

    def test_dedup_shrinks_or_keeps_pairs(self, pipeline):
        before = len(read_pairs(pipeline / cli.F_PAIRS_ALL))
        after = len(read_pairs(pipeline / cli.F_PAIRS_DEDUP))
        assert 0 < after <= before
        groups = [
            json.loads(line)
            for line in (pipeline / cli.F_DEDUP_GROUPS).read_text().splitlines()
        ]
        assert groups
        for g in groups:
            assert g["survivor"] == min(g["members"])

    def test_no_id_in_two_splits(self, pipeline):
        split_of_id: dict[str, str] = {}
        for path in sorted((pipeline / "samples").glob("*.jsonl")):
            for line in path.read_text(encoding="utf-8").splitlines():
                row = json.loads(line)
                for doc_id in (row["src_id"], row["tgt_id"]):
                    seen = split_of_id.setdefault(doc_id, row["split"])
                    assert seen == row["split"], f"{doc_id} leaks across splits"

    def test_stats_totals_match_sample_rows(self, pipeline):
        n_rows = sum(
            len(path.read_text(encoding="utf-8").splitlines())
            for path in (pipeline / "samples").glob("*.jsonl")
        )
        stats = (pipeline / cli.F_STATS_TSV).read_text()
        total_line = next(l for l in stats.splitlines() if l.startswith("# total"))
        assert int(total_line.split("\t")[1]) == n_rows

    def test_figures_rendered(self, pipeline):
        for name in (cli.F_STATS_PNG, cli.F_CORR_PNG):
            data = (pipeline / name).read_bytes()
            assert data[:8] == b"\x89PNG\r\n\x1a\n"
            assert len(data) > 1000

    def test_batches_shape(self, pipeline):
        lines = (pipeline / cli.F_BATCHES).read_text().splitlines()
        assert len(lines) == 5
        for step, line in enumerate(lines):
            row = json.loads(line)
            assert row["step"] == step
            assert row["pivot_side"] in ("source", "target")
            assert len(row["mini_batches"]) == 8
            assert all(len(mb["ids"]) == 32 for mb in row["mini_batches"])

    def test_scores_cover_all_predictions(self, pipeline):
        n_preds = len((pipeline / "synth" / "predictions.jsonl").read_text().splitlines())
        n_scores = len((pipeline / cli.F_SCORES).read_text().splitlines())
        assert n_scores == n_preds

    def test_correlation_tsv_parses(self, pipeline):
        header, values = (pipeline / cli.F_CORR_TSV).read_text().splitlines()
        assert header == "pearson\tspearman\tn"
        pearson, spearman, n = values.split("\t")
        assert -1.0 <= float(pearson) <= 1.0
        assert -1.0 <= float(spearman) <= 1.0
        assert int(n) > 0

    def test_run_manifest_hashes_verify(self, pipeline):
        manifest = json.loads((pipeline / "manifests" / "align.json").read_text())
        assert manifest["stage"] == "align"
        assert manifest["outputs"][cli.F_PAIRS_DIRECT] == file_hash(
            pipeline / cli.F_PAIRS_DIRECT
        )
        assert manifest["inputs"][cli.F_STORE] == file_hash(pipeline / cli.F_STORE)
        cfg_hash = hashlib.sha256(
            json.dumps(manifest["config"], sort_keys=True).encode()
        ).hexdigest()
        assert manifest["config_hash"] == cfg_hash
        assert manifest["config"]["tau"] == TAU

    def test_stage_rerun_is_byte_identical(self, pipeline):
        before = {
            name: file_hash(pipeline / name)
            for name in (cli.F_PAIRS_DIRECT, cli.F_STATS_TSV, cli.F_STATS_PNG)
        }
        assert run("align", "--workdir", str(pipeline)) == 0
        assert run("stats", "--workdir", str(pipeline)) == 0
        after = {name: file_hash(pipeline / name) for name in before}
        assert after == before


@pytest.fixture(scope="session")
def empty_wd(tmp_path_factory) -> Path:
    """Two orthogonal embeddings: nothing aligns, every stage still succeeds."""
    wd = tmp_path_factory.mktemp("empty")
    docs = [
        Document("en-0", "en", "text body here", "short summary"),
        Document("ru-0", "ru", "текст статьи", "краткое резюме"),
    ]
    eye = np.eye(8, dtype=np.float32)
    write_corpus(docs, wd / "in-corpus.jsonl")
    write_xemb([("en-0", eye[0]), ("ru-0", eye[1])], wd / "in-vectors.xemb", dim=8)
    for argv in (
        (
            "embed-import",
            "--workdir",
            str(wd),
            "--corpus",
            str(wd / "in-corpus.jsonl"),
            "--vectors",
            str(wd / "in-vectors.xemb"),
        ),
        ("align", "--workdir", str(wd)),
        ("induce", "--workdir", str(wd)),
        ("dedup", "--workdir", str(wd)),
        ("split", "--workdir", str(wd)),
        ("materialize", "--workdir", str(wd)),
    ):
        assert run(*argv) == 0
    return wd


class TestEmptyPipeline:
    def test_stats_zero_matrix_exit_0(self, empty_wd, capsys):
        assert run("stats", "--workdir", str(empty_wd)) == 0
        out = capsys.readouterr().out
        assert "# total\t0" in out
        assert "# cross_lingual\t0" in out
        assert (empty_wd / cli.F_STATS_TSV).read_text() == out

    def test_no_sample_files(self, empty_wd):
        assert list((empty_wd / "samples").glob("*.jsonl")) == []


class TestSynthStage:
    def test_same_seed_same_bytes(self, tmp_path):
        for name in ("a", "b"):
            assert run("synth", "--workdir", str(tmp_path / name), "--seed", "3") == 0
        for fname in ("corpus.jsonl", "vectors.xemb", "predictions.jsonl"):
            assert file_hash(tmp_path / "a" / "synth" / fname) == file_hash(
                tmp_path / "b" / "synth" / fname
            )

    def test_different_seed_different_corpus(self, tmp_path):
        assert run("synth", "--workdir", str(tmp_path / "a"), "--seed", "1") == 0
        assert run("synth", "--workdir", str(tmp_path / "b"), "--seed", "2") == 0
        assert file_hash(tmp_path / "a" / "synth" / "corpus.jsonl") != file_hash(
            tmp_path / "b" / "synth" / "corpus.jsonl"
        )
