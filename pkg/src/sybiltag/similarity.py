"""Profile distances, the per-slot distance tensor and similarity vectors."""
import csv
from dataclasses import dataclass

import numpy as np

from .exceptions import DomainError

METRICS = ("cosine", "euclidean", "chebyshev", "manhattan")


def _unit(p):
    p = np.asarray(p, dtype=float)
    norm = np.sqrt(np.sum(p * p))
    if not norm > 0:
        raise DomainError("cosine distance is undefined for a zero-norm vector")
    return p / norm


def cosine_distance(p, q):
    """1 - <p, q> / (|p| |q|).

    Evaluated as |p/|p| - q/|q||^2 / 2, the same quantity without the
    cancellation that ``1 - cos`` suffers for nearly parallel vectors.
    """
    u, v = _unit(p), _unit(q)
    if u.shape != v.shape:
        raise ValueError(f"length mismatch: {u.shape} vs {v.shape}")
    d = u - v
    return float(np.sum(d * d) / 2)


def alt_distance(metric, p, q):
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    if p.shape != q.shape:
        raise ValueError(f"length mismatch: {p.shape} vs {q.shape}")
    diff = np.abs(p - q)
    if metric == "euclidean":
        return float(np.sqrt(np.sum(diff * diff)))
    if metric == "chebyshev":
        return float(diff.max()) if diff.size else 0.0
    if metric == "manhattan":
        return float(diff.sum())
    raise ValueError(f"unknown metric {metric!r}")


def distance(metric, p, q):
    if metric == "cosine":
        return cosine_distance(p, q)
    return alt_distance(metric, p, q)


@dataclass(frozen=True)
class DistanceTensor:
    """entries[m, n, l] = dist(row l of profile m, row l of profile n)."""

    entries: np.ndarray
    ids: tuple

    @property
    def num_ids(self):
        return self.entries.shape[0]

    @property
    def length(self):
        return self.entries.shape[2]


def _stack(profiles):
    if len(profiles) < 2:
        raise ValueError("need at least two profiles")
    shapes = {p.signatures.shape for p in profiles}
    if len(shapes) != 1:
        raise ValueError(f"profiles disagree on (L, K): {sorted(shapes)}")
    return np.stack([p.signatures for p in profiles])  # (N, L, K)


def distance_tensor(profiles, metric="cosine"):
    if metric not in METRICS:
        raise ValueError(f"unknown metric {metric!r}; choose from {METRICS}")
    X = _stack(profiles)
    ids = tuple(p.claimed_id for p in profiles)
    if metric == "cosine":
        norms = np.sqrt(np.sum(X * X, axis=2))
        bad = np.argwhere(~(norms > 0))
        if len(bad):
            n, l = bad[0]
            prof = profiles[n]
            slot = prof.slots[l] if prof.slots else int(l)
            raise DomainError(f"zero-norm signature for {ids[n]} at slot {slot}", ids[n], slot)
        X = X / norms[:, :, None]
    diff = X[:, None, :, :] - X[None, :, :, :]  # (N, N, L, K)
    if metric == "cosine":
        D = np.sum(diff * diff, axis=3) / 2
    elif metric == "euclidean":
        D = np.sqrt(np.sum(diff * diff, axis=3))
    elif metric == "chebyshev":
        D = np.abs(diff).max(axis=3)
    else:
        D = np.abs(diff).sum(axis=3)
    return DistanceTensor(D, ids)


@dataclass(frozen=True)
class SimilarityVector:
    values: np.ndarray
    claimed_id: str


def _check_index(tensor, n):
    if tensor.num_ids < 2:
        raise ValueError("similarity needs at least two identities")
    if not 0 <= n < tensor.num_ids:
        raise IndexError(f"robot index {n} out of range")


def similarity_vector(tensor, n):
    """Per-slot minimum distance from identity n to every other identity."""
    _check_index(tensor, n)
    others = np.delete(tensor.entries[:, n, :], n, axis=0)  # (N-1, L)
    return SimilarityVector(others.min(axis=0), tensor.ids[n])


def similarity_vectors(tensor):
    return [similarity_vector(tensor, n) for n in range(tensor.num_ids)]


def mean_peer_vector(tensor, n):
    """Ablation: one peer for the whole window, chosen by smallest mean distance.

    This keeps long-term pairing but loses per-slot selection, so an ID that
    hops between attackers no longer finds a consistently close peer.
    """
    _check_index(tensor, n)
    col = tensor.entries[:, n, :].astype(float)
    means = col.mean(axis=1)
    means[n] = np.inf
    return SimilarityVector(col[int(np.argmin(means))].copy(), tensor.ids[n])


EXTRACTORS = {"min": similarity_vector, "mean_peer": mean_peer_vector}


def write_similarity_csv(vectors, path):
    """Rows of (id, l, value)."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["id", "l", "value"])
        for sv in vectors:
            for l, v in enumerate(sv.values):
                w.writerow([sv.claimed_id, l, f"{v:.6f}"])
