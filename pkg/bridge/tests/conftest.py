"""Shared fixtures.

The embedding tests need a sentence-transformers model without network
access, so we build a tiny randomly-initialized BERT on disk once per
session. The vocabulary carries "##" continuation pieces for every
letter; without them WordPiece maps every word to [UNK] and the encoder
collapses to one constant vector.
"""

import string

import pytest


@pytest.fixture(scope="session")
def tiny_model_dir(tmp_path_factory) -> str:
    import torch
    from transformers import BertConfig, BertModel, BertTokenizerFast

    out = tmp_path_factory.mktemp("tiny-st-model")
    letters = list(string.ascii_lowercase)
    vocab = (
        ["[PAD]", "[UNK]", "[CLS]", "[SEP]", "[MASK]"]
        + letters
        + ["##" + ch for ch in letters]
    )
    vocab_file = out / "vocab.txt"
    vocab_file.write_text("\n".join(vocab) + "\n")
    tokenizer = BertTokenizerFast(str(vocab_file), do_lower_case=True)

    config = BertConfig(
        vocab_size=len(vocab),
        hidden_size=32,
        num_hidden_layers=2,
        num_attention_heads=2,
        intermediate_size=64,
        max_position_embeddings=128,
    )
    torch.manual_seed(0)
    model = BertModel(config)
    model.save_pretrained(out)
    tokenizer.save_pretrained(out)
    return str(out)
