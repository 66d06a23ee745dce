"""
Evidence Scoring - Lexical, Semantic and Source-Aware Fusion
============================================================

Scores textual evidence (caption, on-screen text, speech transcript)
against query facets:

- lexical: IDF-weighted keyword overlap, min(1, sum(idf) / z_lex)
- semantic: max cosine against the facet's event descriptions
- fused: lambda_source * lexical + (1 - lambda_source) * semantic
"""

import os
import re
import logging
import threading
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, List, Optional, Sequence, Tuple, Iterable

import numpy as np
from nltk.stem import PorterStemmer

from .error_handler import InvalidSource, NoEvidence, ConfigError

logger = logging.getLogger(__name__)

_WORD_RE = re.compile(r"[a-z0-9]+")
_stemmer = PorterStemmer()

STOPWORDS = frozenset({
    "a", "about", "above", "after", "again", "against", "all", "am", "an", "and",
    "any", "are", "as", "at", "be", "because", "been", "before", "being", "below",
    "between", "both", "but", "by", "can", "could", "did", "do", "does", "doing",
    "down", "during", "each", "either", "else", "ever", "every", "few", "for", "from",
    "further", "had", "has", "have", "having", "he", "her", "here", "hers", "herself",
    "him", "himself", "his", "how", "however", "i", "if", "in", "into", "is",
    "it", "its", "itself", "just", "let", "may", "me", "might", "more", "most",
    "much", "must", "my", "myself", "neither", "no", "nor", "not", "now", "of",
    "off", "on", "once", "one", "only", "or", "other", "ought", "our", "ours",
    "ourselves", "out", "over", "own", "per", "same", "shall", "she", "should", "so",
    "some", "such", "than", "that", "the", "their", "theirs", "them", "themselves", "then",
    "there", "these", "they", "this", "those", "though", "through", "thus", "to", "too",
    "under", "until", "up", "upon", "us", "very", "via", "was", "we", "were",
    "what", "whatever", "when", "whenever", "where", "whereas", "whether", "which", "while", "who",
    "whom", "whose", "why", "will", "with", "within", "without", "would", "yet", "you",
    "your", "yours", "yourself", "yourselves", "also", "although", "among", "another", "anything", "around",
    "become", "becomes", "else", "etc", "many", "often", "onto", "really", "something", "still",
    "therefore", "toward", "towards", "unless", "whereby", "wherein", "whichever", "shown", "seen", "appears",
})

DEFAULT_IDF_PATH = os.path.join(os.path.dirname(__file__), "data", "default_idf.tsv")


class EvidenceSource(str, Enum):
    CAPTION = "caption"
    OCR = "ocr"
    ASR = "asr"


# Tie-break order for equal scores
SOURCE_PRIORITY = {EvidenceSource.OCR: 0, EvidenceSource.ASR: 1, EvidenceSource.CAPTION: 2}

DEFAULT_SOURCE_WEIGHTS = {"ocr": 0.7, "asr": 0.5, "caption": 0.3}


@dataclass
class EvidenceItem:
    source: EvidenceSource
    text: str
    node_id: int

    def __post_init__(self):
        try:
            self.source = EvidenceSource(self.source)
        except ValueError:
            raise InvalidSource(f"Unknown evidence source '{self.source}'", context={'source': str(self.source)})

    def to_dict(self) -> dict:
        return {'source': self.source.value, 'text': self.text, 'node_id': self.node_id}


def stem(token: str) -> str:
    return _stemmer.stem(token)


def content_words(text: str) -> List[str]:
    """Lowercased, stopword-free words without stemming"""
    return [t for t in _WORD_RE.findall((text or "").lower().replace("'", "")) if t not in STOPWORDS]


def tokenize(text: str) -> List[str]:
    """Lowercase, drop stopwords, Porter-stem"""
    return [stem(t) for t in content_words(text)]


class IdfTable:
    """term -> idf weight, keyed by stemmed term; colliding stems keep the smallest weight"""

    def __init__(self, weights: Optional[Dict[str, float]] = None, default_idf: float = 1.5):
        if default_idf <= 0:
            raise ConfigError(f"default_idf must be positive, got {default_idf}")
        self.default_idf = default_idf
        self.weights: Dict[str, float] = {}
        for term, weight in (weights or {}).items():
            if weight <= 0:
                raise ConfigError(f"idf weight for '{term}' must be positive")
            for key in tokenize(term) or [term.lower()]:
                self.weights[key] = min(weight, self.weights.get(key, weight))

    def idf(self, token: str) -> float:
        return self.weights.get(token, self.default_idf)

    @classmethod
    def from_file(cls, path: str, default_idf: float = 1.5) -> 'IdfTable':
        """Read ``term<TAB>weight`` lines; '#' starts a comment"""
        if not os.path.isfile(path):
            raise ConfigError(f"IDF table not found: {path}")
        weights: Dict[str, float] = {}
        with open(path, 'r', encoding='utf-8') as f:
            for line_no, line in enumerate(f, 1):
                line = line.strip()
                if not line or line.startswith("#"):
                    continue
                term, _, value = line.partition("\t")
                try:
                    weights[term.strip()] = float(value)
                except ValueError:
                    raise ConfigError(f"{path}:{line_no}: bad idf weight '{value}'")
        logger.debug(f"Loaded {len(weights)} idf weights from {path}")
        return cls(weights, default_idf)

    @classmethod
    def load_default(cls, default_idf: float = 1.5) -> 'IdfTable':
        return cls.from_file(DEFAULT_IDF_PATH, default_idf)


def _contains_sequence(tokens: Sequence[str], phrase: Sequence[str]) -> bool:
    n = len(phrase)
    if n == 1:
        return phrase[0] in tokens
    return any(tuple(tokens[i:i + n]) == tuple(phrase) for i in range(len(tokens) - n + 1))


def lexical_score(evidence_text: str, keywords: Iterable[str], idf: IdfTable,
                  z_lex: float = 3.0) -> float:
    """Each keyword counts once; multi-word keywords must match contiguously"""
    if z_lex <= 0:
        raise ConfigError(f"z_lex must be positive, got {z_lex}")
    tokens = tokenize(evidence_text)
    if not tokens:
        return 0.0
    total = 0.0
    seen = set()
    for keyword in keywords:
        phrase = tuple(tokenize(keyword))
        if not phrase or phrase in seen:
            continue
        seen.add(phrase)
        if _contains_sequence(tokens, phrase):
            total += min(sum(idf.idf(t) for t in phrase), z_lex)
    return min(1.0, total / z_lex)


def cosine_max(vector: np.ndarray, candidates: np.ndarray, eps: float = 1e-8) -> float:
    if candidates.size == 0:
        return 0.0
    sims = candidates @ vector / (np.linalg.norm(candidates, axis=1) * np.linalg.norm(vector) + eps)
    return float(np.clip(np.max(sims), 0.0, 1.0))


def semantic_score(evidence_text: str, descriptions: Sequence[str], encoder) -> float:
    """Max cosine between the evidence and any description under ``encoder``"""
    descriptions = [d for d in descriptions if d and d.strip()]
    if not descriptions or not (evidence_text or "").strip():
        return 0.0
    vectors = encoder.embed_texts([evidence_text] + list(descriptions))
    return cosine_max(vectors[0], vectors[1:])


def fuse_scores(source, s_lex: float, s_sem: float,
                weights: Optional[Dict[str, float]] = None) -> float:
    weights = weights or DEFAULT_SOURCE_WEIGHTS
    try:
        key = EvidenceSource(source).value
    except ValueError:
        raise InvalidSource(f"Unknown evidence source '{source}'", context={'source': str(source)})
    lam = weights[key]
    return lam * s_lex + (1.0 - lam) * s_sem


@dataclass
class NodeScore:
    score: float
    best_item: EvidenceItem
    best_facet: int
    facet_scores: List[float] = field(default_factory=list)
    item_scores: List[float] = field(default_factory=list)


def node_score(items: Sequence[EvidenceItem], facets, idf: IdfTable, encoder,
               z_lex: float = 3.0, weights: Optional[Dict[str, float]] = None) -> NodeScore:
    """
    Max fused score over (item, facet) pairs.

    Ties go to the source order ocr > asr > caption, then the lower facet
    index. ``facets`` is a QueryFacets (or anything with ``.facets`` whose
    entries expose ``keywords`` and ``descriptions``).
    """
    if not items:
        raise NoEvidence("node_score needs at least one evidence item")
    facet_list = facets.facets

    ranked = sorted(range(len(items)), key=lambda i: SOURCE_PRIORITY[items[i].source])
    item_scores = [0.0] * len(items)
    facet_scores = [0.0] * len(facet_list)
    best = (-1.0, ranked[0], 0)

    for i in ranked:
        item = items[i]
        for r, facet in enumerate(facet_list):
            s = fuse_scores(
                item.source,
                lexical_score(item.text, facet.keywords, idf, z_lex),
                semantic_score(item.text, facet.descriptions, encoder),
                weights
            )
            item_scores[i] = max(item_scores[i], s)
            facet_scores[r] = max(facet_scores[r], s)
            if s > best[0]:
                best = (s, i, r)

    score, best_index, best_facet = best
    return NodeScore(
        score=max(score, 0.0),
        best_item=items[best_index],
        best_facet=best_facet,
        facet_scores=facet_scores,
        item_scores=item_scores,
    )


class CachedTextEncoder:
    """Memoizes embed_texts per text; descriptions get encoded once per session"""

    def __init__(self, encoder):
        self.encoder = encoder
        self._cache: Dict[str, np.ndarray] = {}
        self._lock = threading.Lock()

    def embed_texts(self, texts: Sequence[str]) -> np.ndarray:
        with self._lock:
            missing = [t for t in dict.fromkeys(texts) if t not in self._cache]
        if missing:
            vectors = self.encoder.embed_texts(missing)
            with self._lock:
                for text, vec in zip(missing, vectors):
                    self._cache[text] = np.asarray(vec, dtype=np.float64)
        with self._lock:
            return np.stack([self._cache[t] for t in texts])
