"""Coarsening functions over real-vector embeddings, fitted by k-means.

Lloyd iterations with k-means++ seeding, fully deterministic given a seed.
A fitted coarsening maps every training id to a cluster, names one member
(the closest to the centroid, ties to the smallest id) as the cluster
representative, and extends to unseen vectors by nearest centroid.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .dist import SampleSet
from .energy import EnergyValue, energy_coarsened
from .errors import DimMismatchError, InvalidEmbeddingError, UnknownDialogueError

MAX_ITER = 300
DISPLACEMENT_TOL = 1e-8


@dataclass(frozen=True, eq=False)
class EmbeddingTable:
    ids: tuple
    vectors: np.ndarray  # shape (n, d)

    def __post_init__(self):
        vecs = np.asarray(self.vectors, dtype=float)
        object.__setattr__(self, "vectors", vecs)
        if vecs.ndim != 2 or vecs.shape[1] < 1:
            raise InvalidEmbeddingError("vectors must form an (n, d) matrix with d >= 1")
        if len(self.ids) != vecs.shape[0]:
            raise InvalidEmbeddingError("one vector per id required")
        if len(set(self.ids)) != len(self.ids):
            raise InvalidEmbeddingError("duplicate ids in embedding table")
        if not np.all(np.isfinite(vecs)):
            raise InvalidEmbeddingError("embedding vectors must be finite")

    def __len__(self) -> int:
        return len(self.ids)

    @property
    def dim(self) -> int:
        return self.vectors.shape[1]


@dataclass(frozen=True, eq=False)
class CoarseningFunction:
    """Fitted map id -> cluster, with one representative id per cluster."""

    k: int  # requested cluster budget
    centroids: np.ndarray  # (n_clusters, d)
    representatives: tuple  # id per cluster
    assignment: dict  # id -> cluster index
    k_reduced: bool = False  # set when the budget exceeded the input count
    sse_trace: tuple = ()  # within-cluster SSE per Lloyd iteration

    @property
    def n_clusters(self) -> int:
        return len(self.representatives)

    def cluster_of(self, id_) -> int:
        try:
            return self.assignment[id_]
        except KeyError:
            raise UnknownDialogueError(f"id {id_!r} was not assigned a cluster") from None

    def map_label(self, id_):
        """The coarsening map c: id -> representative id of its cluster."""
        return self.representatives[self.cluster_of(id_)]

    def assign(self, v: Sequence) -> int:
        """Out-of-sample extension: nearest centroid, ties to the lowest index."""
        v = np.asarray(v, dtype=float)
        if v.shape != (self.centroids.shape[1],):
            raise DimMismatchError(
                f"vector has dimension {v.shape}, centroids have {self.centroids.shape[1]}"
            )
        d2 = np.einsum("ij,ij->i", self.centroids - v, self.centroids - v)
        return int(np.argmin(d2))  # argmin takes the first minimum

    def to_json(self) -> dict:
        return {
            "schema_version": 1,
            "k": self.k,
            "k_reduced": self.k_reduced,
            "centroids": [[float(x) for x in row] for row in self.centroids],
            "representatives": list(self.representatives),
            "assignment": {str(i): c for i, c in self.assignment.items()},
            "out_of_sample": "nearest-centroid",
        }

    @classmethod
    def from_json(cls, payload: dict) -> "CoarseningFunction":
        return cls(
            k=int(payload["k"]),
            centroids=np.asarray(payload["centroids"], dtype=float),
            representatives=tuple(payload["representatives"]),
            assignment={i: int(c) for i, c in payload["assignment"].items()},
            k_reduced=bool(payload.get("k_reduced", False)),
        )


def _kmeanspp_seeds(x: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    n = x.shape[0]
    first = int(rng.integers(n))
    chosen = [first]
    d2 = np.einsum("ij,ij->i", x - x[first], x - x[first])
    for _ in range(1, k):
        total = float(d2.sum())
        if total <= 0.0:
            # all remaining points coincide with a chosen centroid
            idx = int(rng.integers(n))
        else:
            r = rng.random() * total
            idx = int(np.searchsorted(np.cumsum(d2), r, side="right"))
            idx = min(idx, n - 1)
        chosen.append(idx)
        cand = np.einsum("ij,ij->i", x - x[idx], x - x[idx])
        d2 = np.minimum(d2, cand)
    return x[chosen].copy()


def fit_kmeans(e: EmbeddingTable, k: int, seed: int) -> CoarseningFunction:
    """Cluster the embeddings into at most k groups.

    Runs Lloyd until the largest centroid displacement drops to
    DISPLACEMENT_TOL or MAX_ITER passes. Requesting more clusters than
    points reduces k and flags the result. Clusters left empty at
    convergence are dropped so the image size stays honest.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    if len(e) < 1:
        raise InvalidEmbeddingError("cannot fit a coarsening on an empty table")
    x = e.vectors
    n = len(e)
    requested = k
    k = min(k, n)
    rng = np.random.default_rng(np.random.SeedSequence(seed))

    centroids = _kmeanspp_seeds(x, k, rng)
    sse_trace = []
    labels = np.zeros(n, dtype=int)
    for _ in range(MAX_ITER):
        d2 = ((x[:, None, :] - centroids[None, :, :]) ** 2).sum(axis=2)
        labels = np.argmin(d2, axis=1)
        sse_trace.append(float(d2[np.arange(n), labels].sum()))
        new_centroids = centroids.copy()  # empty clusters keep their centroid
        for j in range(k):
            members = x[labels == j]
            if len(members):
                new_centroids[j] = members.mean(axis=0)
        shift = np.sqrt(((new_centroids - centroids) ** 2).sum(axis=1)).max()
        centroids = new_centroids
        if shift <= DISPLACEMENT_TOL:
            break

    d2 = ((x[:, None, :] - centroids[None, :, :]) ** 2).sum(axis=2)
    labels = np.argmin(d2, axis=1)
    occupied = sorted(set(int(l) for l in labels))
    renumber = {old: new for new, old in enumerate(occupied)}
    centroids = centroids[occupied]
    labels = np.array([renumber[int(l)] for l in labels])

    representatives = []
    for j in range(len(occupied)):
        member_idx = np.flatnonzero(labels == j)
        dists = d2[member_idx, occupied[j]]
        best = dists.min()
        # ties resolved toward the smallest id
        tied = sorted(e.ids[i] for i in member_idx[np.flatnonzero(dists == best)])
        representatives.append(tied[0])

    assignment = {id_: int(lab) for id_, lab in zip(e.ids, labels)}
    return CoarseningFunction(
        k=requested,
        centroids=centroids,
        representatives=tuple(representatives),
        assignment=assignment,
        k_reduced=requested > n,
        sse_trace=tuple(sse_trace),
    )


def label_energy_equivalence(
    a: SampleSet, b: SampleSet, c: CoarseningFunction
) -> tuple[EnergyValue, EnergyValue]:
    """Energy over representative-dialogue labels vs raw cluster indices.

    The two coarse label sets are bijective images of the same partition, so
    the values agree exactly; computing both makes that checkable.
    """
    by_representative = energy_coarsened(a, b, c.map_label)
    by_index = energy_coarsened(a, b, c.cluster_of)
    return by_representative, by_index
