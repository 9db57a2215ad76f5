"""Random forest over similarity vectors.

Trees are unpruned CART classifiers with Gini splits. Each node draws a
fresh subset of z features, and each tree sees its own bootstrap resample.
Optionally every feature vector is sorted ascending first, turning the
per-slot distances into order statistics. The forest predicts "fake" (1)
when at least half of the trees vote for it.
"""
import json
import math
from dataclasses import dataclass

import numpy as np

_EPS = 1e-12


def sort_vector(s):
    return np.sort(np.asarray(s, dtype=float), axis=-1)


def bootstrap_indices(M, rng):
    if M < 1:
        raise ValueError("cannot bootstrap an empty dataset")
    return rng.integers(0, M, size=M)


def bootstrap_sample(X, y, rng):
    """M draws with replacement from (X, y)."""
    X = np.asarray(X)
    idx = bootstrap_indices(len(X), rng)
    return X[idx], np.asarray(y)[idx]


def default_z(L):
    return max(1, int(math.floor(math.log2(L)))) if L >= 1 else 1


def _gini(n0, n1):
    n = n0 + n1
    return 0.0 if n == 0 else 1.0 - (n0 * n0 + n1 * n1) / (n * n)


def _best_split(x, y):
    """Lowest weighted-Gini threshold on one feature.

    Returns ``(impurity, threshold)`` or ``None`` when the feature is constant.
    Candidates are midpoints between consecutive distinct values; ties keep
    the smallest threshold.
    """
    order = np.argsort(x, kind="stable")
    xs, ys = x[order], y[order]
    n = len(xs)
    cuts = np.flatnonzero(xs[1:] > xs[:-1])  # split after position i
    if not len(cuts):
        return None
    ones_left = np.cumsum(ys)[cuts].astype(float)
    n_left = (cuts + 1).astype(float)
    n_right = n - n_left
    ones_right = ys.sum() - ones_left
    g_left = 1.0 - (ones_left ** 2 + (n_left - ones_left) ** 2) / n_left ** 2
    g_right = 1.0 - (ones_right ** 2 + (n_right - ones_right) ** 2) / n_right ** 2
    weighted = (n_left * g_left + n_right * g_right) / n
    i = int(np.argmin(weighted))
    c = cuts[i]
    return float(weighted[i]), float((xs[c] + xs[c + 1]) / 2)


class DecisionTree:
    """Binary tree stored as parallel node arrays.

    Internal node j tests ``x[feature[j]] <= threshold[j]`` and continues at
    ``left[j]`` or ``right[j]``; leaves have ``feature[j] == -1`` and carry
    the training class counts ``counts[j] = (n0, n1)``.
    """

    def __init__(self, feature, threshold, left, right, counts):
        self.feature = np.asarray(feature, dtype=np.int64)
        self.threshold = np.asarray(threshold, dtype=float)
        self.left = np.asarray(left, dtype=np.int64)
        self.right = np.asarray(right, dtype=np.int64)
        self.counts = np.asarray(counts, dtype=np.int64).reshape(-1, 2)
        # tie -> fake
        self.label = (self.counts[:, 1] >= self.counts[:, 0]).astype(np.int64)

    @property
    def num_nodes(self):
        return len(self.feature)

    @property
    def num_leaves(self):
        return int((self.feature < 0).sum())

    def depth(self):
        best, stack = 0, [(0, 0)]
        while stack:
            j, d = stack.pop()
            best = max(best, d)
            if self.feature[j] >= 0:
                stack += [(self.left[j], d + 1), (self.right[j], d + 1)]
        return best

    def apply(self, X):
        """Leaf index reached by every row of X."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        node = np.zeros(len(X), dtype=np.int64)
        active = self.feature[node] >= 0
        while active.any():
            rows = np.flatnonzero(active)
            j = node[rows]
            go_left = X[rows, self.feature[j]] <= self.threshold[j]
            node[rows] = np.where(go_left, self.left[j], self.right[j])
            active = self.feature[node] >= 0
        return node

    def predict(self, X):
        return self.label[self.apply(X)]

    def to_record(self, j=0):
        if self.feature[j] < 0:
            return {"label": int(self.label[j]), "counts": [int(c) for c in self.counts[j]]}
        return {
            "feature": int(self.feature[j]),
            "threshold": float(self.threshold[j]),
            "left": self.to_record(int(self.left[j])),
            "right": self.to_record(int(self.right[j])),
        }

    @classmethod
    def from_record(cls, record):
        feature, threshold, left, right, counts = [], [], [], [], []

        def visit(rec):
            j = len(feature)
            feature.append(-1)
            threshold.append(0.0)
            left.append(-1)
            right.append(-1)
            counts.append((0, 0))
            if "feature" in rec:
                feature[j] = int(rec["feature"])
                threshold[j] = float(rec["threshold"])
                left[j] = visit(rec["left"])
                right[j] = visit(rec["right"])
                counts[j] = tuple(a + b for a, b in zip(counts[left[j]], counts[right[j]]))
            else:
                counts[j] = tuple(int(c) for c in rec["counts"])
            return j

        visit(record)
        return cls(feature, threshold, left, right, counts)


def train_tree(X, y, z, rng, max_depth=None, min_samples_split=2):
    """Grow one unpruned tree.

    Every node draws ``z`` feature indices without replacement, examined in
    ascending index order, and takes the split with the lowest weighted Gini
    impurity. A node becomes a leaf when it is pure, when no drawn feature
    lowers impurity, or when an optional cap is hit.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=np.int64)
    if X.ndim != 2 or len(X) == 0:
        raise ValueError("X must be a nonempty (M, L) matrix")
    if len(y) != len(X):
        raise ValueError("X and y lengths differ")
    L = X.shape[1]
    if not 1 <= z <= L:
        raise ValueError(f"z={z} outside [1, {L}]")

    feature, threshold, left, right, counts = [], [], [], [], []

    def new_node(idx):
        n1 = int(y[idx].sum())
        feature.append(-1)
        threshold.append(0.0)
        left.append(-1)
        right.append(-1)
        counts.append((len(idx) - n1, n1))
        return len(feature) - 1

    stack = [(new_node(np.arange(len(X))), np.arange(len(X)), 0)]
    while stack:
        j, idx, depth = stack.pop()
        n0, n1 = counts[j]
        if n0 == 0 or n1 == 0:
            continue
        if max_depth is not None and depth >= max_depth:
            continue
        if len(idx) < min_samples_split:
            continue
        parent = _gini(n0, n1)
        best = None
        for f in np.sort(rng.choice(L, size=z, replace=False)):
            found = _best_split(X[idx, f], y[idx])
            if found is not None and found[0] < parent - _EPS and (best is None or found[0] < best[0]):
                best = (found[0], int(f), found[1])
        if best is None:
            continue
        _, f, thr = best
        mask = X[idx, f] <= thr
        li, ri = idx[mask], idx[~mask]
        feature[j], threshold[j] = f, thr
        left[j] = new_node(li)
        right[j] = new_node(ri)
        stack.append((right[j], ri, depth + 1))
        stack.append((left[j], li, depth + 1))
    return DecisionTree(feature, threshold, left, right, counts)


@dataclass
class ForestModel:
    trees: list
    z: int
    L: int
    sort_enabled: bool = True

    @property
    def H(self):
        return len(self.trees)

    def _prepare(self, X):
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if X.shape[1] != self.L:
            raise ValueError(f"feature length {X.shape[1]} does not match model L={self.L}")
        return sort_vector(X) if self.sort_enabled else X

    def votes(self, X):
        """(num_samples, H) matrix of per-tree labels."""
        X = self._prepare(X)
        return np.stack([t.predict(X) for t in self.trees], axis=1)

    def to_json(self):
        doc = {
            "H": self.H,
            "z": self.z,
            "L": self.L,
            "sort_enabled": bool(self.sort_enabled),
            "trees": [t.to_record() for t in self.trees],
        }
        return json.dumps(doc, sort_keys=True, separators=(",", ":")) + "\n"

    @classmethod
    def from_json(cls, text):
        doc = json.loads(text)
        trees = [DecisionTree.from_record(r) for r in doc["trees"]]
        if len(trees) != doc["H"]:
            raise ValueError(f"model declares H={doc['H']} but lists {len(trees)} trees")
        return cls(trees, int(doc["z"]), int(doc["L"]), bool(doc["sort_enabled"]))

    def save(self, path):
        with open(path, "w") as fh:
            fh.write(self.to_json())

    @classmethod
    def load(cls, path):
        with open(path) as fh:
            return cls.from_json(fh.read())


def train_forest(X, y, H=30, seed=0, sort_enabled=True, z=None, max_depth=None):
    X = np.atleast_2d(np.asarray(X, dtype=float))
    y = np.asarray(y, dtype=np.int64)
    if len(X) == 0:
        raise ValueError("cannot train on an empty dataset")
    if H < 1:
        raise ValueError("H must be >= 1")
    L = X.shape[1]
    z = default_z(L) if z is None else int(z)
    if sort_enabled:
        X = sort_vector(X)
    trees = []
    for h in range(H):
        rng = np.random.default_rng([seed, h])
        idx = bootstrap_indices(len(X), rng)
        trees.append(train_tree(X[idx], y[idx], z, rng, max_depth=max_depth))
    return ForestModel(trees, z, L, sort_enabled)


def predict_score(model, X):
    """Fraction of trees voting fake, per row (scalar for a single vector)."""
    single = np.asarray(X).ndim == 1
    score = model.votes(X).mean(axis=1)
    return float(score[0]) if single else score


def predict(model, X):
    """1 where at least half the trees vote fake."""
    single = np.asarray(X).ndim == 1
    v = model.votes(X)
    label = (2 * v.sum(axis=1) >= model.H).astype(np.int64)
    return int(label[0]) if single else label
