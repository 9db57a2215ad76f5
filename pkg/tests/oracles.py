"""Slow, obviously-correct reference implementations used by the tests."""
from fractions import Fraction

import numpy as np


def naive_correlation(s, pattern):
    """c[n] = sum_t s[n + t] * pattern[t], one dot product per shift."""
    s = np.asarray(s, dtype=float)
    pattern = np.asarray(pattern, dtype=float)
    T = len(pattern)
    return np.array([float(np.dot(s[n:n + T], pattern)) for n in range(len(s) - T + 1)])


def naive_argmax(values):
    best = 0
    for i, v in enumerate(values):
        if v > values[best]:
            best = i
    return best


def brute_similarity(entries, n):
    N, _, L = entries.shape
    out = []
    for l in range(L):
        best = None
        for i in range(N):
            if i != n and (best is None or entries[i, n, l] < best):
                best = entries[i, n, l]
        out.append(best)
    return np.array(out)


def mann_whitney(scores, labels):
    """Fraction of (positive, negative) pairs ordered correctly, ties count half."""
    pos = [s for s, y in zip(scores, labels) if y == 1]
    neg = [s for s, y in zip(scores, labels) if y == 0]
    wins = sum(1.0 if p > n else 0.5 if p == n else 0.0 for p in pos for n in neg)
    return wins / (len(pos) * len(neg))


def oracle_cart(X, y):
    """Exhaustive CART: every feature, every midpoint, exact Gini arithmetic.

    Returns a predict function. Ties go to the lower feature index, then the
    lower threshold; leaves label fake when n1 >= n0.
    """

    def gini_sum(labels):
        n = len(labels)
        if n == 0:
            return Fraction(0)
        n1 = sum(labels)
        n0 = n - n1
        return Fraction(n) - Fraction(n0 * n0 + n1 * n1, n)  # n * gini

    def grow(idx):
        labels = [int(y[i]) for i in idx]
        n1 = sum(labels)
        leaf = ("leaf", int(n1 >= len(labels) - n1))
        if n1 == 0 or n1 == len(labels):
            return leaf
        best = None
        parent = gini_sum(labels)
        for f in range(X.shape[1]):
            vals = sorted(set(X[i, f] for i in idx))
            for a, b in zip(vals, vals[1:]):
                t = (a + b) / 2
                left = [i for i in idx if X[i, f] <= t]
                right = [i for i in idx if X[i, f] > t]
                g = gini_sum([int(y[i]) for i in left]) + gini_sum([int(y[i]) for i in right])
                if g < parent and (best is None or g < best[0]):
                    best = (g, f, t, left, right)
        if best is None:
            return leaf
        _, f, t, left, right = best
        return ("node", f, t, grow(left), grow(right))

    root = grow(list(range(len(X))))

    def predict_one(x):
        node = root
        while node[0] == "node":
            node = node[3] if x[node[1]] <= node[2] else node[4]
        return node[1]

    return lambda Z: np.array([predict_one(z) for z in Z])
