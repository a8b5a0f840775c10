"""Pipeline driver: every stage as a subcommand over a shared workdir.

Stages communicate through files with fixed names inside --workdir, so any
stage can be rerun in isolation. Each successful stage writes a run manifest
(config hash, input hashes, output hashes) under manifests/; reruns with
unchanged inputs and config produce byte-identical artifacts and manifests.

Exit codes: 0 ok, 2 missing upstream artifact, 3 invalid configuration,
1 anything else.
"""

from __future__ import annotations

import argparse
import dataclasses
import hashlib
import itertools
import json
import logging
import os
import sys
from dataclasses import dataclass
from pathlib import Path

from . import synth as synth_mod
from .aligner import AlignConfig, align_all
from .corpus_io import (
    CorpusFormatError,
    DuplicateIdError,
    UnresolvedIdError,
    atomic_write,
    load_corpus,
    read_pairs,
    write_corpus,
    write_jsonl,
    write_pairs,
)
from .dataset_builder import (
    PairCountMatrix,
    assign_splits,
    dedup_all,
    materialize,
    pair_counts_by_component,
    read_split_manifest,
    recompute_components,
    render_stats,
    repoint_pairs,
    write_samples,
    write_split_manifest,
)
from .embedding_store import (
    NormError,
    VectorFormatError,
    import_embeddings,
    read_xemb,
    write_xemb,
)
from .langid import load_model, read_langid_file, train_langid
from .lase import correlate, evaluate_run, read_scores, render_aggregates, write_scores
from .pair_graph import (
    CapConfig,
    build_graph,
    cap_components,
    finalize_pairs,
    induced_pairs,
    read_components,
    write_components,
)
from .sampler import PairCounts, compute_plan, read_plan, training_feed, write_batches, write_plan

log = logging.getLogger(__name__)

# workdir artifact names
F_CORPUS = "corpus.jsonl"
F_STORE = "store.xemb"
F_PAIRS_DIRECT = "pairs-direct.jsonl"
F_PAIRS_ALL = "pairs-all.jsonl"
F_COMPONENTS = "components.jsonl"
F_PAIRS_DEDUP = "pairs-dedup.jsonl"
F_DEDUP_GROUPS = "dedup-groups.jsonl"
F_COMPONENTS_DEDUP = "components-dedup.jsonl"
F_SPLITS = "splits.json"
D_SAMPLES = "samples"
F_STATS_TSV = "stats.tsv"
F_STATS_PNG = "stats.png"
F_PLAN = "plan.json"
F_BATCHES = "batches.jsonl"
F_SCORES = "scores.jsonl"
F_AGGREGATES = "aggregates.tsv"
F_CORR_TSV = "correlation.tsv"
F_CORR_PNG = "correlation.png"

SEED_ENV = "XSUM_FORGE_SEED"


class ConfigError(Exception):
    pass


class MissingArtifactError(Exception):
    pass


@dataclass
class PipelineConfig:
    tau: float = 0.7437
    tau_prime_delta: float = 0.10
    max_component: int = 50
    dedup_threshold: float = 0.95
    ratios: tuple[float, float, float] = (0.8, 0.1, 0.1)
    alpha: float = 0.5
    beta: float = 0.75
    min_pair_count: int = 30
    m: int = 8
    mb: int = 32
    lase_c: int = 6
    seed: int = 0

    def validate(self) -> None:
        if not 0.0 < self.tau < 1.0:
            raise ConfigError(f"tau must be in (0, 1), got {self.tau}")
        if not 0.0 < self.tau_prime_delta < self.tau:
            raise ConfigError(
                f"tau_prime_delta must be in (0, tau), got {self.tau_prime_delta}"
            )
        if self.max_component < 2:
            raise ConfigError(f"max_component must be >= 2, got {self.max_component}")
        if not 0.0 < self.dedup_threshold < 1.0:
            raise ConfigError(
                f"dedup_threshold must be in (0, 1), got {self.dedup_threshold}"
            )
        if len(self.ratios) != 3 or any(r < 0 for r in self.ratios):
            raise ConfigError(f"ratios must be three nonnegative numbers, got {self.ratios}")
        if abs(sum(self.ratios) - 1.0) > 1e-9:
            raise ConfigError(f"ratios must sum to 1, got {self.ratios}")
        if self.alpha < 0 or self.beta < 0:
            raise ConfigError(f"alpha and beta must be >= 0, got {self.alpha}, {self.beta}")
        if self.min_pair_count < 0:
            raise ConfigError(f"min_pair_count must be >= 0, got {self.min_pair_count}")
        if self.m < 1 or self.mb < 1:
            raise ConfigError(f"m and mb must be >= 1, got {self.m}, {self.mb}")
        if self.lase_c < 0:
            raise ConfigError(f"lase_c must be >= 0, got {self.lase_c}")

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["ratios"] = list(self.ratios)
        return d


_FIELDS = [f.name for f in dataclasses.fields(PipelineConfig)]
_INT_FIELDS = {"max_component", "min_pair_count", "m", "mb", "lase_c", "seed"}


def _coerce(key: str, raw: str):
    try:
        if key == "ratios":
            parts = [float(x) for x in raw.split(",")]
            if len(parts) != 3:
                raise ValueError("expected three comma-separated numbers")
            return tuple(parts)
        if key in _INT_FIELDS:
            return int(raw)
        return float(raw)
    except ValueError as e:
        raise ConfigError(f"bad value for {key}: {raw!r} ({e})") from None


def _parse_config_file(path: str) -> dict:
    """Flat `key = value` lines; # starts a comment; keys match config fields."""
    values = {}
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise ConfigError(f"cannot read config file: {e}") from None
    for line_no, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{line_no}: expected key = value, got {line!r}")
        key, raw = (part.strip() for part in line.split("=", 1))
        key = key.replace("-", "_")
        if key not in _FIELDS:
            raise ConfigError(f"{path}:{line_no}: unknown config key {key!r}")
        values[key] = _coerce(key, raw)
    return values


def resolve_config(ns: argparse.Namespace) -> PipelineConfig:
    """Defaults < config file < command-line flags < XSUM_FORGE_SEED."""
    values: dict = {}
    if getattr(ns, "config", None):
        values.update(_parse_config_file(ns.config))
    for key in _FIELDS:
        raw = getattr(ns, key, None)
        if raw is not None:
            values[key] = _coerce(key, raw)
    env_seed = os.environ.get(SEED_ENV)
    if env_seed is not None:
        try:
            values["seed"] = int(env_seed)
        except ValueError:
            raise ConfigError(f"{SEED_ENV} must be an integer, got {env_seed!r}") from None
    cfg = PipelineConfig(**values)
    cfg.validate()
    return cfg


def format_config(cfg: PipelineConfig) -> str:
    """Render as config-file syntax; feeding it back reproduces the config."""
    lines = []
    for key in _FIELDS:
        value = getattr(cfg, key)
        if key == "ratios":
            value = ",".join(repr(r) for r in value)
        lines.append(f"{key} = {value}")
    return "\n".join(lines) + "\n"


def _sha256(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            h.update(chunk)
    return h.hexdigest()


def _write_run_manifest(
    wd: Path, stage: str, cfg: PipelineConfig, inputs: dict[str, Path], outputs: dict[str, Path]
) -> None:
    cfg_dict = cfg.to_dict()
    manifest = {
        "stage": stage,
        "config": cfg_dict,
        "config_hash": hashlib.sha256(
            json.dumps(cfg_dict, sort_keys=True).encode("utf-8")
        ).hexdigest(),
        "inputs": {name: _sha256(p) for name, p in sorted(inputs.items())},
        "outputs": {name: _sha256(p) for name, p in sorted(outputs.items())},
    }
    man_dir = wd / "manifests"
    man_dir.mkdir(parents=True, exist_ok=True)
    with atomic_write(man_dir / f"{stage}.json") as fh:
        fh.write(json.dumps(manifest, indent=2, sort_keys=True) + "\n")


def _require(path: Path, producer: str) -> Path:
    if not path.exists():
        raise MissingArtifactError(f"{path} not found; run the {producer} stage first")
    return path


def _load_workdir_store(wd: Path):
    corpus = load_corpus(_require(wd / F_CORPUS, "embed-import"))
    store = import_embeddings(corpus.documents, _require(wd / F_STORE, "embed-import"))
    return corpus, store


def _annotated_dedup_pairs(wd: Path):
    pairs = read_pairs(_require(wd / F_PAIRS_DEDUP, "dedup"))
    graph = read_components(_require(wd / F_COMPONENTS_DEDUP, "dedup"))
    return [
        dataclasses.replace(p, component_id=graph.component_of(p.a_id)) for p in pairs
    ], graph


# ---------------------------------------------------------------- stages


def _stage_synth(ns, cfg, wd: Path):
    out_dir = Path(ns.out) if ns.out else wd / "synth"
    res = synth_mod.generate(out_dir, seed=cfg.seed, n_clusters=ns.clusters)
    print(f"synth: {res.n_documents} documents -> {out_dir}")
    outputs = {
        p.name: p
        for p in (
            res.corpus_path,
            res.vectors_path,
            res.references_path,
            res.predictions_path,
            res.ref_vectors_path,
            res.pred_vectors_path,
        )
    }
    return {}, outputs


def _stage_embed_import(ns, cfg, wd: Path):
    corpus = load_corpus(_require(Path(ns.corpus), "corpus-preparation"))
    store = import_embeddings(corpus.documents, _require(Path(ns.vectors), "embedding"))
    write_corpus(corpus.documents, wd / F_CORPUS)
    records = sorted((r.doc_id, r.embedding) for r in store.records())
    write_xemb(records, wd / F_STORE, store.dim)
    print(f"embed-import: {len(records)} documents, dim {store.dim}")
    return (
        {"corpus": Path(ns.corpus), "vectors": Path(ns.vectors)},
        {F_CORPUS: wd / F_CORPUS, F_STORE: wd / F_STORE},
    )


def _stage_align(ns, cfg, wd: Path):
    corpus, store = _load_workdir_store(wd)
    pairs = align_all(store, corpus.manifest.languages, AlignConfig(tau=cfg.tau))
    write_pairs(pairs, wd / F_PAIRS_DIRECT)
    print(f"align: {len(pairs)} direct pairs")
    return (
        {F_CORPUS: wd / F_CORPUS, F_STORE: wd / F_STORE},
        {F_PAIRS_DIRECT: wd / F_PAIRS_DIRECT},
    )


def _stage_induce(ns, cfg, wd: Path):
    corpus, store = _load_workdir_store(wd)
    direct = read_pairs(_require(wd / F_PAIRS_DIRECT, "align"))
    g = build_graph(direct)
    for doc in corpus.documents:
        if doc.id not in g.vertex_lang:
            g.add_vertex(doc.id, doc.lang)
    cap_cfg = CapConfig(
        max_component_size=cfg.max_component, tau_prime=cfg.tau - cfg.tau_prime_delta
    )
    capped = cap_components(g, cap_cfg)
    induced = induced_pairs(capped, store, cfg.tau, cap_cfg)
    kept, dropped = finalize_pairs(direct, induced, capped)
    known = {doc.id for doc in corpus.documents}
    write_pairs(kept, wd / F_PAIRS_ALL, known_ids=known)
    write_components(capped, wd / F_COMPONENTS)
    print(
        f"induce: {len(induced)} induced pairs, {len(dropped)} direct pairs dropped, "
        f"{len(capped.components())} components"
    )
    return (
        {F_CORPUS: wd / F_CORPUS, F_STORE: wd / F_STORE, F_PAIRS_DIRECT: wd / F_PAIRS_DIRECT},
        {F_PAIRS_ALL: wd / F_PAIRS_ALL, F_COMPONENTS: wd / F_COMPONENTS},
    )


def _stage_dedup(ns, cfg, wd: Path):
    corpus, store = _load_workdir_store(wd)
    pairs = read_pairs(_require(wd / F_PAIRS_ALL, "induce"))
    replacement, groups = dedup_all(store, cfg.dedup_threshold)
    repointed = repoint_pairs(pairs, replacement)
    lang_of = {doc.id: doc.lang for doc in corpus.documents}
    annotated, graph = recompute_components(repointed, lang_of)
    write_pairs(annotated, wd / F_PAIRS_DEDUP)
    write_components(graph, wd / F_COMPONENTS_DEDUP)
    write_jsonl(
        [{"survivor": g.survivor, "members": list(g.members)} for g in groups],
        wd / F_DEDUP_GROUPS,
    )
    print(f"dedup: {len(groups)} duplicate groups, {len(annotated)} pairs kept")
    return (
        {F_CORPUS: wd / F_CORPUS, F_STORE: wd / F_STORE, F_PAIRS_ALL: wd / F_PAIRS_ALL},
        {
            F_PAIRS_DEDUP: wd / F_PAIRS_DEDUP,
            F_COMPONENTS_DEDUP: wd / F_COMPONENTS_DEDUP,
            F_DEDUP_GROUPS: wd / F_DEDUP_GROUPS,
        },
    )


def _stage_split(ns, cfg, wd: Path):
    pairs, _ = _annotated_dedup_pairs(wd)
    counts = pair_counts_by_component(pairs)
    manifest = assign_splits(counts, ratios=cfg.ratios, seed=cfg.seed)
    for warning in manifest.warnings:
        log.warning(warning)
    write_split_manifest(manifest, wd / F_SPLITS)
    by_split = {"train": 0, "dev": 0, "test": 0}
    for split in manifest.assignment.values():
        by_split[split] += 1
    print(
        f"split: {len(manifest.assignment)} components -> "
        f"train={by_split['train']} dev={by_split['dev']} test={by_split['test']}"
    )
    return (
        {F_PAIRS_DEDUP: wd / F_PAIRS_DEDUP, F_COMPONENTS_DEDUP: wd / F_COMPONENTS_DEDUP},
        {F_SPLITS: wd / F_SPLITS},
    )


def _stage_materialize(ns, cfg, wd: Path):
    corpus = load_corpus(_require(wd / F_CORPUS, "embed-import"))
    pairs, _ = _annotated_dedup_pairs(wd)
    manifest = read_split_manifest(_require(wd / F_SPLITS, "split"))
    docs = {doc.id: doc for doc in corpus.documents}
    samples = materialize(pairs, docs, manifest, include_in_language=ns.include_in_language)
    samples_dir = wd / D_SAMPLES
    samples_dir.mkdir(parents=True, exist_ok=True)
    written = write_samples(samples, samples_dir)
    print(f"materialize: {len(samples)} samples in {len(written)} files")
    inputs = {
        F_CORPUS: wd / F_CORPUS,
        F_PAIRS_DEDUP: wd / F_PAIRS_DEDUP,
        F_COMPONENTS_DEDUP: wd / F_COMPONENTS_DEDUP,
        F_SPLITS: wd / F_SPLITS,
    }
    outputs = {f"{D_SAMPLES}/{p.name}": p for p in written}
    return inputs, outputs


def _sample_files(wd: Path, split: str | None = None) -> list[Path]:
    samples_dir = _require(wd / D_SAMPLES, "materialize")
    prefix = f"{split}." if split else ""
    return sorted(p for p in samples_dir.glob("*.jsonl") if p.name.startswith(prefix))


def _stage_stats(ns, cfg, wd: Path):
    from . import report

    files = _sample_files(wd)
    counts: dict[tuple[str, str], int] = {}
    for path in files:
        with open(path, "r", encoding="utf-8") as fh:
            for line in fh:
                row = json.loads(line)
                key = (row["src_lang"], row["tgt_lang"])
                counts[key] = counts.get(key, 0) + 1
    matrix = PairCountMatrix(counts)
    text = render_stats(matrix)
    with atomic_write(wd / F_STATS_TSV) as fh:
        fh.write(text)
    report.save_pair_count_chart(matrix, wd / F_STATS_PNG)
    print(text, end="")
    inputs = {f"{D_SAMPLES}/{p.name}": p for p in files}
    return inputs, {F_STATS_TSV: wd / F_STATS_TSV, F_STATS_PNG: wd / F_STATS_PNG}


def _train_counts_and_pools(wd: Path):
    counts: dict[tuple[str, str], int] = {}
    pools: dict[tuple[str, str], list[str]] = {}
    files = _sample_files(wd, split="train")
    for path in files:
        with open(path, "r", encoding="utf-8") as fh:
            for line in fh:
                row = json.loads(line)
                key = (row["src_lang"], row["tgt_lang"])
                counts[key] = counts.get(key, 0) + 1
                pools.setdefault(key, []).append(f"{row['src_id']}::{row['tgt_id']}")
    for pool in pools.values():
        pool.sort()
    return counts, pools, files


def _stage_plan(ns, cfg, wd: Path):
    counts, _, files = _train_counts_and_pools(wd)
    pair_counts = PairCounts(counts, min_pair_count=cfg.min_pair_count)
    plan = compute_plan(pair_counts, alpha=cfg.alpha, beta=cfg.beta)
    write_plan(plan, wd / F_PLAN)
    print(
        f"plan: {len(plan.languages)} languages, "
        f"{len(pair_counts.effective())} language pairs above the count floor"
    )
    inputs = {f"{D_SAMPLES}/{p.name}": p for p in files}
    return inputs, {F_PLAN: wd / F_PLAN}


def _stage_sample(ns, cfg, wd: Path):
    plan = read_plan(_require(wd / F_PLAN, "plan"))
    _, pools, files = _train_counts_and_pools(wd)
    batches = list(
        training_feed(plan, pools, steps=ns.steps, m=cfg.m, mb=cfg.mb, seed=cfg.seed)
    )
    write_batches(batches, wd / F_BATCHES)
    print(f"sample: {len(batches)} batches of {cfg.m}x{cfg.mb}")
    inputs = {f"{D_SAMPLES}/{p.name}": p for p in files}
    inputs[F_PLAN] = wd / F_PLAN
    return inputs, {F_BATCHES: wd / F_BATCHES}


def _vector_lookup(path: Path, label: str):
    _, records = read_xemb(path)
    table = dict(records)

    def lookup(rec_id: str, text: str):
        try:
            return table[rec_id]
        except KeyError:
            raise ValueError(f"{label}: no vector for id {rec_id!r}") from None

    return lookup


def _langid_provider(ns):
    if ns.langid_model:
        model = load_model(_require(Path(ns.langid_model), "langid-train"))
        return lambda rec_id, text: model.classify(text), ("langid_model", Path(ns.langid_model))
    if ns.langid_file:
        dists = read_langid_file(_require(Path(ns.langid_file), "langid-export"))

        def from_file(rec_id: str, text: str):
            try:
                return dists[rec_id]
            except KeyError:
                raise ValueError(f"langid file has no entry for id {rec_id!r}") from None

        return from_file, ("langid_file", Path(ns.langid_file))
    corpus = load_corpus(_require(Path(ns.langid_corpus), "corpus-preparation"))
    model = train_langid(
        itertools.chain.from_iterable(
            ((doc.lang, doc.text), (doc.lang, doc.summary)) for doc in corpus.documents
        )
    )
    return lambda rec_id, text: model.classify(text), ("langid_corpus", Path(ns.langid_corpus))


def _stage_evaluate(ns, cfg, wd: Path):
    predictions = _require(Path(ns.predictions), "generation")
    references = _require(Path(ns.references), "reference-export")
    pred_vectors = _require(Path(ns.pred_vectors), "embedding")
    ref_vectors = _require(Path(ns.ref_vectors), "embedding")
    provider, langid_input = _langid_provider(ns)
    samples, aggregates = evaluate_run(
        predictions,
        references,
        provider,
        _vector_lookup(pred_vectors, "pred-vectors"),
        _vector_lookup(ref_vectors, "ref-vectors"),
        length_offset=cfg.lase_c,
        min_samples=ns.min_eval_samples,
    )
    write_scores(samples, wd / F_SCORES)
    text = render_aggregates(aggregates)
    with atomic_write(wd / F_AGGREGATES) as fh:
        fh.write(text)
    print(text, end="")
    inputs = {
        "predictions": predictions,
        "references": references,
        "pred_vectors": pred_vectors,
        "ref_vectors": ref_vectors,
        langid_input[0]: langid_input[1],
    }
    return inputs, {F_SCORES: wd / F_SCORES, F_AGGREGATES: wd / F_AGGREGATES}


def _stage_correlate(ns, cfg, wd: Path):
    from . import report

    scores_path = Path(ns.scores) if ns.scores else wd / F_SCORES
    rows = read_scores(_require(scores_path, "evaluate"))
    inputs = {"scores": scores_path}
    if ns.scores_b:
        other_path = _require(Path(ns.scores_b), "evaluate")
        other = {row["id"]: row for row in read_scores(other_path)}
        ours = {row["id"]: row for row in rows}
        shared = sorted(set(ours) & set(other))
        xs = [ours[i]["lase"] for i in shared]
        ys = [other[i]["lase"] for i in shared]
        xlabel, ylabel = "score A", "score B"
        inputs["scores_b"] = other_path
    else:
        xs = [row["rouge2_f1"] for row in rows]
        ys = [row["lase"] for row in rows]
        xlabel, ylabel = "ROUGE-2 F1", "composite score"
    pearson, spearman = correlate(xs, ys)
    with atomic_write(wd / F_CORR_TSV) as fh:
        fh.write("pearson\tspearman\tn\n")
        fh.write(f"{pearson:.6f}\t{spearman:.6f}\t{len(xs)}\n")
    report.save_correlation_scatter(
        xs, ys, xlabel, ylabel, wd / F_CORR_PNG, pearson=pearson, spearman=spearman
    )
    print(f"correlate: pearson={pearson:.6f} spearman={spearman:.6f} n={len(xs)}")
    return inputs, {F_CORR_TSV: wd / F_CORR_TSV, F_CORR_PNG: wd / F_CORR_PNG}


_STAGES = {
    "synth": _stage_synth,
    "embed-import": _stage_embed_import,
    "align": _stage_align,
    "induce": _stage_induce,
    "dedup": _stage_dedup,
    "split": _stage_split,
    "materialize": _stage_materialize,
    "stats": _stage_stats,
    "plan": _stage_plan,
    "sample": _stage_sample,
    "evaluate": _stage_evaluate,
    "correlate": _stage_correlate,
}


def _build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--workdir", default=".", help="directory holding pipeline artifacts")
    common.add_argument("--config", metavar="FILE", help="flat key = value config file")
    common.add_argument(
        "--print-config", action="store_true", help="print the resolved config and exit"
    )
    # config flags stay strings here; resolve_config coerces and validates
    # so a bad value exits 3 instead of tripping argparse's usage error
    for field in _FIELDS:
        flag = "--" + field.replace("_", "-")
        metavar = "A,B,C" if field == "ratios" else "N"
        common.add_argument(flag, dest=field, metavar=metavar, help=argparse.SUPPRESS)

    parser = argparse.ArgumentParser(
        prog="xsumforge",
        description="Cross-lingual summary pair mining and evaluation pipeline.",
    )
    parser.add_argument("--print-config", action="store_true", help=argparse.SUPPRESS)
    sub = parser.add_subparsers(dest="command", metavar="STAGE")

    p = sub.add_parser("synth", parents=[common], help="generate the bundled synthetic corpus")
    p.add_argument("--out", help="output directory (default: WORKDIR/synth)")
    p.add_argument("--clusters", type=int, default=60, help="number of story clusters")

    p = sub.add_parser(
        "embed-import", parents=[common], help="validate corpus + vectors into the workdir"
    )
    p.add_argument("--corpus", required=True, help="corpus JSONL")
    p.add_argument("--vectors", required=True, help="embedding file matching the corpus")

    sub.add_parser("align", parents=[common], help="mine direct pairs by mutual nearest neighbor")
    sub.add_parser(
        "induce", parents=[common], help="cap components and mine induced pairs inside them"
    )
    sub.add_parser("dedup", parents=[common], help="collapse near-duplicate summaries")
    sub.add_parser("split", parents=[common], help="assign components to train/dev/test")

    p = sub.add_parser("materialize", parents=[common], help="expand pairs into sample files")
    p.add_argument(
        "--include-in-language",
        action="store_true",
        help="also emit each document's own (article, summary) sample",
    )

    sub.add_parser("stats", parents=[common], help="sample count matrix (TSV + chart)")
    sub.add_parser("plan", parents=[common], help="fit the smoothed sampling distributions")

    p = sub.add_parser("sample", parents=[common], help="draw training batches from the plan")
    p.add_argument("--steps", type=int, default=10, help="number of batches to draw")

    p = sub.add_parser("evaluate", parents=[common], help="score predictions against references")
    p.add_argument("--predictions", required=True, help="prediction JSONL (id, lang, text)")
    p.add_argument("--references", required=True, help="reference JSONL (id, lang, text)")
    p.add_argument("--pred-vectors", required=True, help="embeddings of prediction texts")
    p.add_argument("--ref-vectors", required=True, help="embeddings of reference texts")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--langid-corpus", help="train the built-in identifier on this corpus")
    src.add_argument("--langid-file", help="precomputed language distributions JSONL")
    src.add_argument("--langid-model", help="trained identifier model file")
    p.add_argument("--min-eval-samples", type=int, default=500, help="low-confidence threshold")

    p = sub.add_parser("correlate", parents=[common], help="correlation between score columns")
    p.add_argument("--scores", help="scores JSONL (default: WORKDIR/scores.jsonl)")
    p.add_argument("--scores-b", help="second scores JSONL; correlates the two composite scores")

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    ns = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.INFO, format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr
    )
    try:
        cfg = resolve_config(ns)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return 3
    if getattr(ns, "print_config", False):
        print(format_config(cfg), end="")
        return 0
    if ns.command is None:
        parser.print_usage(sys.stderr)
        return 1
    wd = Path(ns.workdir)
    wd.mkdir(parents=True, exist_ok=True)
    try:
        inputs, outputs = _STAGES[ns.command](ns, cfg, wd)
    except MissingArtifactError as e:
        print(f"{ns.command}: {e}", file=sys.stderr)
        return 2
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return 3
    except (
        CorpusFormatError,
        DuplicateIdError,
        UnresolvedIdError,
        VectorFormatError,
        NormError,
        ValueError,
        KeyError,
        OSError,
    ) as e:
        print(f"{ns.command}: error: {e}", file=sys.stderr)
        return 1
    _write_run_manifest(wd, ns.command, cfg, inputs, outputs)
    return 0


if __name__ == "__main__":
    sys.exit(main())
