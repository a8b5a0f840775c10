"""Command-line entry point.

Two subcommands, both reading a corpus JSONL and operating on the
summary field:

    bridge embed  --in corpus.jsonl --out vectors.xemb [--model SPEC] [--batch-size N]
    bridge langid --in corpus.jsonl --out langid.jsonl [--model SPEC]

Each writes its output atomically plus a ``<out>.meta.json`` sidecar
naming the model that produced it. Exit codes: 0 success, 1 on any
corpus, model, or I/O failure (reported on stderr).
"""

from __future__ import annotations

import argparse
import logging
import sys

from . import embed, langid
from .corpus import CorpusError
from .embed import ModelError
from .xemb import XembWriteError


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bridge",
        description="Run pretrained embedding and language-ID models over a corpus JSONL.",
    )
    sub = parser.add_subparsers(dest="command")

    p_embed = sub.add_parser("embed", help="embed summaries into an XEMB container")
    p_embed.add_argument("--in", dest="input", required=True, metavar="CORPUS")
    p_embed.add_argument("--out", dest="output", required=True, metavar="XEMB")
    p_embed.add_argument(
        "--model",
        default=embed.DEFAULT_MODEL,
        help=f"embedding backend spec (default: {embed.DEFAULT_MODEL})",
    )
    p_embed.add_argument(
        "--batch-size", type=int, default=embed.DEFAULT_BATCH_SIZE, metavar="N"
    )

    p_langid = sub.add_parser(
        "langid", help="classify summary language into a distributions JSONL"
    )
    p_langid.add_argument("--in", dest="input", required=True, metavar="CORPUS")
    p_langid.add_argument("--out", dest="output", required=True, metavar="JSONL")
    p_langid.add_argument(
        "--model",
        default=langid.DEFAULT_MODEL,
        help="builtin or fasttext:<path> (default: builtin)",
    )
    return parser


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(
        stream=sys.stderr, level=logging.INFO, format="%(levelname)s %(message)s"
    )
    parser = _build_parser()
    ns = parser.parse_args(argv)
    if ns.command is None:
        parser.print_usage(sys.stderr)
        return 1
    try:
        if ns.command == "embed":
            summary = embed.embed_corpus(
                ns.input, ns.output, model_spec=ns.model, batch_size=ns.batch_size
            )
            print(
                f"embed: {summary['records']} vectors, dim {summary['dim']}, "
                f"model {summary['model']} -> {ns.output}"
            )
        else:
            summary = langid.langid_corpus(ns.input, ns.output, model_spec=ns.model)
            print(
                f"langid: {summary['records']} distributions, "
                f"model {summary['model']} -> {ns.output}"
            )
    except (CorpusError, ModelError, XembWriteError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
