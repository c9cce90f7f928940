"""Word embeddings and complete-linkage agglomerative word clustering.

Distance is 1 - cosine similarity.  Merging stops when the smallest
complete-linkage (max-pairwise) distance between clusters exceeds the
threshold.  The procedure is deterministic under input reordering: words are
processed in sorted order and distance ties break on the lexicographically
smallest representative pair.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field

import numpy as np

log = logging.getLogger(__name__)


class EmbeddingError(ValueError):
    pass


def load_embeddings(path) -> dict[str, np.ndarray]:
    """Text format: one entry per line, word followed by space-separated
    decimals; all rows must share one dimensionality."""
    table: dict[str, np.ndarray] = {}
    dim = None
    with open(path, encoding="utf-8") as fh:
        for ln, line in enumerate(fh, start=1):
            parts = line.split()
            if not parts:
                continue
            word, nums = parts[0], parts[1:]
            if word in table:
                raise EmbeddingError(f"line {ln}: duplicate word {word!r}")
            try:
                vec = np.array([float(x) for x in nums])
            except ValueError as e:
                raise EmbeddingError(f"line {ln}: non-numeric field") from e
            if vec.size == 0 or not np.all(np.isfinite(vec)):
                raise EmbeddingError(f"line {ln}: empty or non-finite vector")
            if dim is None:
                dim = vec.size
            elif vec.size != dim:
                raise EmbeddingError(
                    f"line {ln}: dimension {vec.size} != expected {dim}"
                )
            table[word] = vec
    return table


@dataclass(frozen=True)
class ClusterAssignment:
    assignment: dict[str, str]  # word -> cluster id
    threshold: float
    min_freq: int | None = None
    skipped: tuple[str, ...] = ()  # words without usable vectors

    def clusters(self) -> dict[str, list[str]]:
        out: dict[str, list[str]] = {}
        for w, cid in sorted(self.assignment.items()):
            out.setdefault(cid, []).append(w)
        return out

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.assignment, fh, indent=0, sort_keys=True)
            fh.write("\n")


def load_cluster_map(path) -> dict[str, str]:
    with open(path, encoding="utf-8") as fh:
        obj = json.load(fh)
    if not isinstance(obj, dict) or any(
        not isinstance(k, str) or not isinstance(v, str) for k, v in obj.items()
    ):
        raise ValueError(f"{path}: cluster file must map word -> cluster id")
    return obj


def frequent_words(documents, min_freq: int) -> list[str]:
    """Lowercased tokens (with at least one alphanumeric character) occurring
    at least min_freq times across the documents."""
    counts: dict[str, int] = {}
    for doc in documents:
        for tok in doc.tokens:
            w = tok.lower()
            if any(ch.isalnum() for ch in w):
                counts[w] = counts.get(w, 0) + 1
    return sorted(w for w, c in counts.items() if c >= min_freq)


def cluster_words(
    table: dict[str, np.ndarray],
    vocabulary,
    distance_threshold: float = 0.4,
    min_freq: int | None = None,
) -> ClusterAssignment:
    """Agglomerative complete-linkage clustering of the vocabulary.

    Words absent from the table and zero-norm vectors are skipped with a
    warning.  Cluster ids are "c0", "c1", ... ordered by each cluster's
    lexicographically smallest word.
    """
    vocab = sorted(set(vocabulary))
    skipped = [w for w in vocab if w not in table]
    words = [w for w in vocab if w in table]
    if skipped:
        log.warning("%d vocabulary words lack embeddings; skipped", len(skipped))
    keep = []
    for w in words:
        if np.linalg.norm(table[w]) == 0.0:
            log.warning("word %r has a zero-norm vector; skipped", w)
            skipped.append(w)
        else:
            keep.append(w)
    words = keep
    m = len(words)
    if m == 0:
        return ClusterAssignment({}, distance_threshold, min_freq, tuple(skipped))

    V = np.stack([table[w] for w in words]).astype(float)
    V /= np.linalg.norm(V, axis=1, keepdims=True)
    D = np.maximum(1.0 - V @ V.T, 0.0)
    np.fill_diagonal(D, np.inf)

    members = {i: [i] for i in range(m)}
    L = D.copy()  # complete-linkage distances between active clusters
    while len(members) > 1:
        flat = np.argmin(L)
        i, j = divmod(int(flat), m)
        if L[i, j] > distance_threshold:
            break
        i, j = min(i, j), max(i, j)  # absorb into the smaller index
        members[i].extend(members.pop(j))
        merged = np.maximum(L[i, :], L[j, :])
        L[i, :] = merged
        L[:, i] = merged
        L[i, i] = np.inf
        L[j, :] = np.inf
        L[:, j] = np.inf

    assignment: dict[str, str] = {}
    for cid, rep in enumerate(sorted(members)):
        for wi in members[rep]:
            assignment[words[wi]] = f"c{cid}"
    return ClusterAssignment(assignment, distance_threshold, min_freq, tuple(skipped))
