"""
BM25 relevance over node descriptors.

One document per node (its descriptor text). Documents are numbered in ascending NodeId order,
so ordering by document number is ordering by NodeId; Top-k ties fall back to it.
"""

import math
import re
from collections import Counter
from dataclasses import dataclass
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from kgscout_shared import get_clean_logger
from .graph_store import Graph, NodeNotFoundError

_TOKEN = re.compile(r"[^\W_]+")


def tokenize(text: Optional[str]) -> List[str]:
    """Lowercase, split on every non-alphanumeric character, drop empties. No stemming, no stop words."""
    if not text:
        return []
    return _TOKEN.findall(text.lower())


def query_terms(text: Optional[str]) -> List[str]:
    """Distinct query tokens in first-occurrence order."""
    return list(dict.fromkeys(tokenize(text)))


@dataclass(frozen=True)
class Bm25Params:
    k1: float = 1.2
    b: float = 0.75

    def __post_init__(self):
        if self.k1 < 0:
            raise ValueError(f"k1 must be >= 0, got {self.k1}")
        if not 0.0 <= self.b <= 1.0:
            raise ValueError(f"b must be in [0, 1], got {self.b}")


@dataclass(frozen=True)
class ScoredNode:
    id: str
    score: float


class InvertedIndex:
    """
    Postings over descriptor tokens.

    postings[token] holds two aligned arrays: document numbers (ascending) and term frequencies.
    """

    def __init__(
        self,
        node_ids: Sequence[str],
        postings: Mapping[str, Tuple[np.ndarray, np.ndarray]],
        doc_lengths: np.ndarray,
        params: Bm25Params = Bm25Params(),
        logger=None,
    ):
        self.logger = get_clean_logger("lexical_index", logger)
        self.node_ids: Tuple[str, ...] = tuple(node_ids)
        self._position: Dict[str, int] = {node_id: i for i, node_id in enumerate(self.node_ids)}
        self._postings = dict(postings)
        self.doc_lengths = np.asarray(doc_lengths, dtype=np.float64)
        self.doc_count = len(self.node_ids)
        self.avg_doc_length = float(self.doc_lengths.sum() / self.doc_count) if self.doc_count else 0.0
        self.params = params

    @classmethod
    def from_postings(
        cls,
        node_ids: Sequence[str],
        doc_lengths: Sequence[int],
        postings: Iterable[Tuple[str, Sequence[Tuple[str, int]]]],
        params: Bm25Params = Bm25Params(),
        logger=None,
    ) -> "InvertedIndex":
        """Rebuild from a postings dump: (token, [(node id, tf), ...]) pairs."""
        node_ids = tuple(node_ids)
        position = {node_id: i for i, node_id in enumerate(node_ids)}
        arrays = {}
        for token, entries in postings:
            docs = np.fromiter((position[node_id] for node_id, _ in entries), dtype=np.int64)
            tfs = np.fromiter((tf for _, tf in entries), dtype=np.float64)
            order = np.argsort(docs, kind="stable")
            arrays[token] = (docs[order], tfs[order])
        return cls(node_ids, arrays, np.asarray(doc_lengths, dtype=np.float64), params, logger=logger)

    # -- inspection -----------------------------------------------------------------------------

    def tokens(self) -> List[str]:
        return sorted(self._postings)

    def __contains__(self, node_id: object) -> bool:
        return node_id in self._position

    def document_frequency(self, token: str) -> int:
        entry = self._postings.get(token)
        return 0 if entry is None else len(entry[0])

    def postings_for(self, token: str) -> List[Tuple[str, int]]:
        entry = self._postings.get(token)
        if entry is None:
            return []
        docs, tfs = entry
        return [(self.node_ids[d], int(tf)) for d, tf in zip(docs.tolist(), tfs.tolist())]

    def doc_length(self, node_id: str) -> int:
        return int(self.doc_lengths[self._doc(node_id)])

    def _doc(self, node_id: str) -> int:
        try:
            return self._position[node_id]
        except KeyError:
            raise NodeNotFoundError(node_id) from None

    # -- scoring --------------------------------------------------------------------------------

    def idf(self, token: str) -> float:
        n_t = self.document_frequency(token)
        return math.log(1.0 + (self.doc_count - n_t + 0.5) / (n_t + 0.5))

    def _score_all(self, terms: Sequence[str]) -> np.ndarray:
        scores = np.zeros(self.doc_count, dtype=np.float64)
        if not self.doc_count or self.avg_doc_length == 0.0:
            return scores
        k1, b = self.params.k1, self.params.b
        for token in terms:
            entry = self._postings.get(token)
            if entry is None:
                continue
            docs, tfs = entry
            norm = k1 * (1.0 - b + b * self.doc_lengths[docs] / self.avg_doc_length)
            scores[docs] += self.idf(token) * (tfs * (k1 + 1.0)) / (tfs + norm)
        return scores

    def rel_score(self, q: str, node_id: str) -> float:
        """BM25 score of one node for query text q; tokens absent from the index contribute 0."""
        doc = self._doc(node_id)
        terms = query_terms(q)
        if not terms:
            return 0.0
        return float(self._score_all(terms)[doc])

    def _rank(self, scores: np.ndarray, docs: np.ndarray, k: int) -> List[ScoredNode]:
        docs = docs[scores[docs] > 0.0]
        if len(docs) > k:
            kth = np.partition(scores[docs], len(docs) - k)[len(docs) - k]
            docs = docs[scores[docs] >= kth]
        order = np.lexsort((docs, -scores[docs]))[:k]
        return [ScoredNode(self.node_ids[d], float(scores[d])) for d in docs[order].tolist()]

    def top_k_global(self, q: str, k: int) -> List[ScoredNode]:
        """The k highest-scoring nodes, descending score, ties by ascending NodeId, zero scores excluded."""
        if k < 1:
            raise ValueError(f"k must be >= 1, got {k}")
        terms = query_terms(q)
        if not terms or not self.doc_count:
            return []
        scores = self._score_all(terms)
        return self._rank(scores, np.arange(self.doc_count), k)

    def top_k_subset(self, q: Optional[str], candidates: Iterable[str], k: int) -> List[ScoredNode]:
        """
        Top-k restricted to candidate nodes.

        With an absent or token-less query the candidates come back in ascending NodeId order
        with score 0 and nothing is excluded.
        """
        if k < 1:
            raise ValueError(f"k must be >= 1, got {k}")
        docs = np.array(sorted({self._doc(node_id) for node_id in candidates}), dtype=np.int64)
        if not len(docs):
            return []
        terms = query_terms(q)
        if not terms:
            return [ScoredNode(self.node_ids[d], 0.0) for d in docs[:k].tolist()]
        return self._rank(self._score_all(terms), docs, k)


def build_index(graph: Graph, params: Bm25Params = Bm25Params(), logger=None) -> InvertedIndex:
    """Index every node's descriptor text."""
    node_ids = graph.node_ids()
    doc_lengths = np.zeros(len(node_ids), dtype=np.float64)
    doc_lists: Dict[str, List[int]] = {}
    tf_lists: Dict[str, List[int]] = {}
    for doc, node_id in enumerate(node_ids):
        tokens = tokenize(graph.descriptor_text(node_id))
        doc_lengths[doc] = len(tokens)
        for token, tf in Counter(tokens).items():
            if token in doc_lists:
                doc_lists[token].append(doc)
                tf_lists[token].append(tf)
            else:
                doc_lists[token] = [doc]
                tf_lists[token] = [tf]

    postings = {
        token: (np.asarray(docs, dtype=np.int64), np.asarray(tf_lists[token], dtype=np.float64))
        for token, docs in doc_lists.items()
    }
    index = InvertedIndex(node_ids, postings, doc_lengths, params, logger=logger)
    index.logger.info(f"Indexed {index.doc_count} documents, {len(postings)} distinct tokens")
    return index


def rel_score(index: InvertedIndex, q: str, node_id: str) -> float:
    return index.rel_score(q, node_id)


def top_k_global(index: InvertedIndex, q: str, k: int) -> List[ScoredNode]:
    return index.top_k_global(q, k)


def top_k_subset(index: InvertedIndex, q: Optional[str], candidates: Iterable[str], k: int) -> List[ScoredNode]:
    return index.top_k_subset(q, candidates, k)
