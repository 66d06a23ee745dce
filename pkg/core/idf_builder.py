"""
IDF Builder - Default Lexical Weights from a Document Collection
================================================================

Builds the ``term<TAB>weight`` table read by ``IdfTable``. Document
frequencies come from a plain-text collection (one file per document,
``.gz`` allowed) or from the Brown corpus shipped with nltk.

Weights use the smoothed BM25 idf ``ln(1 + (N - df + 0.5) / (df + 0.5))``
rescaled so that a term seen in exactly ``min_df`` documents weighs
``ceiling`` (the out-of-vocabulary default). Rarer terms are left out of
the table and fall back to that default, so listed weights never exceed it.
"""

import gzip
import logging
import math
import os
from collections import Counter
from typing import Dict, Iterable, Iterator, List, Optional, Tuple

from .error_handler import ConfigError
from .scoring import content_words

logger = logging.getLogger(__name__)

MIN_TERM_LENGTH = 2
MAX_TERM_LENGTH = 20


def document_terms(text: str) -> set:
    """Distinct alphabetic, stopword-free, unstemmed words of one document"""
    return {
        w for w in content_words(text)
        if w.isalpha() and MIN_TERM_LENGTH <= len(w) <= MAX_TERM_LENGTH
    }


def document_frequencies(documents: Iterable[str]) -> Tuple[Counter, int]:
    """(df per term, number of documents)"""
    df: Counter = Counter()
    n_docs = 0
    for text in documents:
        df.update(document_terms(text))
        n_docs += 1
    return df, n_docs


def bm25_idf(df: int, n_docs: int) -> float:
    return math.log(1.0 + (n_docs - df + 0.5) / (df + 0.5))


def scaled_weights(df: Dict[str, int], n_docs: int, min_df: int = 3,
                   ceiling: float = 1.5) -> Dict[str, float]:
    if n_docs < 1:
        raise ConfigError("IDF table needs at least one document")
    if not 1 <= min_df <= n_docs:
        raise ConfigError(f"min_df must be in [1, {n_docs}], got {min_df}")
    if ceiling <= 0:
        raise ConfigError(f"ceiling must be positive, got {ceiling}")
    scale = ceiling / bm25_idf(min_df, n_docs)
    return {t: round(scale * bm25_idf(n, n_docs), 4) for t, n in df.items() if n >= min_df}


def read_documents(directory: str) -> Iterator[str]:
    """Every regular file under ``directory`` in sorted path order"""
    if not os.path.isdir(directory):
        raise ConfigError(f"Document directory not found: {directory}")
    paths: List[str] = []
    for root, _, files in os.walk(directory):
        paths.extend(os.path.join(root, f) for f in files)
    for path in sorted(paths):
        if not os.path.isfile(path):
            continue
        opener = gzip.open if path.endswith(".gz") else open
        try:
            with opener(path, 'rb') as f:
                yield f.read().decode('utf-8', errors='ignore')
        except (OSError, EOFError) as e:
            logger.warning(f"⚠️ Skipping unreadable document {path}: {e}")


def brown_documents() -> Iterator[str]:
    """The 500 Brown corpus files; needs ``nltk.download('brown')``"""
    from nltk.corpus import brown

    for fileid in brown.fileids():
        yield " ".join(brown.words(fileid))


def write_idf_table(path: str, weights: Dict[str, float], source: str, n_docs: int,
                    min_df: int, ceiling: float) -> str:
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    ordered = sorted(weights.items(), key=lambda kv: (kv[1], kv[0]))
    with open(path, 'w', encoding='utf-8', newline="\n") as f:
        f.write("# term<TAB>idf\n")
        f.write(f"# source: {source} ({n_docs} documents)\n")
        f.write(f"# weight = {ceiling} * bm25_idf(df) / bm25_idf({min_df}); df < {min_df} omitted\n")
        for term, weight in ordered:
            f.write(f"{term}\t{weight:.4f}\n")
    logger.info(f"📝 Wrote {len(ordered)} idf weights to {path}")
    return path


def build_idf_table(path: str, docs_dir: Optional[str] = None, min_df: int = 3,
                    ceiling: float = 1.5) -> Dict[str, float]:
    """Build from ``docs_dir``, or from the Brown corpus when it is None"""
    documents = read_documents(docs_dir) if docs_dir else brown_documents()
    df, n_docs = document_frequencies(documents)
    weights = scaled_weights(df, n_docs, min_df, ceiling)
    write_idf_table(path, weights, docs_dir or "nltk brown corpus", n_docs, min_df, ceiling)
    return weights
