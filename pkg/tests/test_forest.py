import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from oracles import oracle_cart
from sybiltag.forest import (
    DecisionTree,
    ForestModel,
    _best_split,
    bootstrap_sample,
    default_z,
    predict,
    predict_score,
    sort_vector,
    train_forest,
    train_tree,
)


@pytest.mark.parametrize("seed", range(40))
def test_single_tree_matches_exhaustive_cart(seed):
    rng = np.random.default_rng(seed)
    M, L = rng.integers(4, 14), rng.integers(1, 4)
    X = rng.uniform(size=(M, L)).round(2)
    y = rng.integers(0, 2, size=M)
    tree = train_tree(X, y, z=L, rng=np.random.default_rng(0))
    oracle = oracle_cart(X, y)
    assert np.array_equal(tree.predict(X), oracle(X))
    probes = rng.uniform(size=(50, L))
    assert np.array_equal(tree.predict(probes), oracle(probes))
    assert np.mean(tree.predict(X) == y) == np.mean(oracle(X) == y)


def test_best_split_hand_example():
    x = np.array([1.0, 2.0, 3.0, 4.0])
    y = np.array([0, 0, 1, 1])
    assert _best_split(x, y) == (0.0, 2.5)
    assert _best_split(np.ones(3), np.array([0, 1, 0])) is None


def test_pure_node_is_leaf():
    tree = train_tree(np.array([[1.0], [2.0]]), np.array([1, 1]), 1, np.random.default_rng(0))
    assert tree.num_nodes == 1 and tree.predict([[5.0]])[0] == 1


def test_leaf_tie_votes_fake():
    # identical inputs, conflicting labels: no split possible, counts 1-1
    tree = train_tree(np.array([[1.0], [1.0]]), np.array([0, 1]), 1, np.random.default_rng(0))
    assert tree.predict([[1.0]])[0] == 1


def test_vote_tie_predicts_fake():
    fake, legit = DecisionTree([-1], [0], [-1], [-1], [(0, 1)]), DecisionTree([-1], [0], [-1], [-1], [(1, 0)])
    model = ForestModel([fake, legit, fake, legit], z=1, L=2, sort_enabled=True)
    assert predict_score(model, np.array([0.1, 0.2])) == 0.5
    assert predict(model, np.array([0.1, 0.2])) == 1
    model = ForestModel([fake, legit, legit], z=1, L=2)
    assert predict(model, np.array([0.1, 0.2])) == 0


def test_default_z():
    assert [default_z(L) for L in (1, 2, 3, 4, 10, 16)] == [1, 1, 1, 2, 3, 4]


def test_bootstrap_draws_with_replacement():
    X = np.arange(10.0)[:, None]
    Xb, yb = bootstrap_sample(X, np.arange(10), np.random.default_rng(1))
    assert len(Xb) == 10 and np.array_equal(Xb[:, 0], yb)
    assert len(set(yb.tolist())) < 10


def test_sort_vector():
    assert np.array_equal(sort_vector([[3, 1, 2]]), [[1, 2, 3]])


def _toy(seed=0, M=200, L=6):
    rng = np.random.default_rng(seed)
    y = rng.integers(0, 2, size=M)
    X = rng.uniform(0, 1, size=(M, L)) + 0.6 * (1 - y)[:, None]
    return X, y


def test_forest_learns_and_is_deterministic():
    X, y = _toy()
    a = train_forest(X, y, H=15, seed=3)
    b = train_forest(X, y, H=15, seed=3)
    assert a.to_json() == b.to_json()
    assert np.mean(predict(a, X) == y) > 0.9
    assert a.z == 2 and a.H == 15


def test_forest_seed_changes_model():
    X, y = _toy()
    assert train_forest(X, y, H=5, seed=0).to_json() != train_forest(X, y, H=5, seed=1).to_json()


def test_json_round_trip_is_byte_identical(tmp_path):
    X, y = _toy()
    m = train_forest(X, y, H=7, seed=2, sort_enabled=False)
    m.save(tmp_path / "m.json")
    m2 = ForestModel.load(tmp_path / "m.json")
    assert m2.to_json() == m.to_json()
    assert np.array_equal(predict_score(m2, X), predict_score(m, X))


def test_json_h_mismatch_rejected():
    X, y = _toy()
    doc = train_forest(X, y, H=2).to_json().replace('"H":2', '"H":3')
    with pytest.raises(ValueError):
        ForestModel.from_json(doc)


def test_dimension_mismatch():
    X, y = _toy()
    m = train_forest(X, y, H=2)
    with pytest.raises(ValueError, match="L=6"):
        predict(m, np.zeros((1, 4)))


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10_000))
def test_sorted_model_permutation_invariant(seed):
    X, y = _toy(1, M=80)
    m = train_forest(X, y, H=9, seed=seed % 7)
    rng = np.random.default_rng(seed)
    Z = rng.uniform(0, 1.6, size=(20, 6))
    assert np.array_equal(predict(m, Z), predict(m, Z[:, rng.permutation(6)]))


def test_max_depth_cap():
    X, y = _toy(M=300)
    m = train_forest(X, y, H=4, max_depth=2)
    assert max(t.depth() for t in m.trees) <= 2


def test_bad_inputs():
    with pytest.raises(ValueError):
        train_forest(np.zeros((0, 3)), np.zeros(0))
    with pytest.raises(ValueError):
        train_tree(np.zeros((3, 2)), np.zeros(3), z=3, rng=np.random.default_rng())
    with pytest.raises(ValueError):
        train_forest(np.zeros((3, 2)), np.zeros(3), H=0)
