"""Model bridge: pretrained embeddings and language ID over corpus JSONL files.

The bridge talks to the dataset toolkit only through its file formats
(corpus JSONL in, XEMB vectors and language-ID JSONL out), so either side
can be swapped out without touching the other.
"""

__version__ = "0.1.0"
