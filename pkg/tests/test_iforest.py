"""Forest behavior: normalization constants, determinism, separation, serialization.

The c(n) reference values below were computed before this module was
written, from the same published formula evaluated in isolation.
"""

import json
import math

import numpy as np
import pytest

from tripsift.iforest import (
    IForestModel,
    average_path_length,
    fit,
    load_model,
    save_model,
    score_from_mean_path,
    score_vectors,
    threshold_from_contamination,
)

C_2 = 0.15443132979999996
C_256 = 10.244770920116851


def test_average_path_length_oracles():
    assert average_path_length(0) == 0.0
    assert average_path_length(1) == 0.0
    assert average_path_length(2) == pytest.approx(C_2, abs=1e-12)
    assert average_path_length(2) == pytest.approx(0.15443, abs=1e-5)
    assert average_path_length(256) == pytest.approx(C_256, abs=1e-6)


def test_average_path_length_monotone():
    values = [average_path_length(n) for n in range(2, 2000)]
    assert all(b > a for a, b in zip(values, values[1:]))


def test_score_midpoint_exact():
    for c in (C_2, C_256, 3.7):
        assert score_from_mean_path(c, c) == pytest.approx(0.5, abs=1e-12)
    assert score_from_mean_path(0.0, C_256) == 1.0
    assert score_from_mean_path(100 * C_256, C_256) < 1e-9


def blob(n, d, seed, offset=0.0):
    rng = np.random.default_rng(seed)
    return rng.uniform(0.0, 1.0, size=(n, d)) + offset


def test_fit_model_shape():
    X = blob(200, 5, seed=1)
    model = fit(X, n_trees=20, subsample_size=256, rng_seed=3)
    assert model.psi == 200                       # clamped to N
    assert model.max_depth == math.ceil(math.log2(200))
    assert model.c_psi == pytest.approx(average_path_length(200))
    assert model.n_features == 5
    assert len(model.trees) == 20
    scores = score_vectors(model, X)
    assert scores.shape == (200,)
    assert np.all(scores > 0.0) and np.all(scores < 1.0)


def test_fit_deterministic_in_seed():
    X = blob(100, 3, seed=2)
    s1 = score_vectors(fit(X, n_trees=10, rng_seed=7), X)
    s2 = score_vectors(fit(X, n_trees=10, rng_seed=7), X)
    s3 = score_vectors(fit(X, n_trees=10, rng_seed=8), X)
    assert np.array_equal(s1, s2)
    assert not np.array_equal(s1, s3)


def test_fit_validations():
    with pytest.raises(ValueError, match="2-D"):
        fit(np.zeros(5))
    with pytest.raises(ValueError, match="at least 2"):
        fit(np.zeros((1, 3)))
    with pytest.raises(ValueError, match="non-finite"):
        fit(np.array([[0.0, np.nan], [1.0, 2.0]]))
    X = blob(10, 2, seed=0)
    with pytest.raises(ValueError, match="n_trees"):
        fit(X, n_trees=0)
    with pytest.raises(ValueError, match="subsample_size"):
        fit(X, subsample_size=1)
    with pytest.raises(ValueError, match="rng_seed"):
        fit(X, rng_seed=-1)


def test_no_variance_warns_and_scores_half():
    X = np.ones((30, 4))
    with pytest.warns(RuntimeWarning, match="no variance"):
        model = fit(X, n_trees=10)
    scores = score_vectors(model, X)
    # every tree stops at the root, so E[h] = c(psi) up to summation rounding
    np.testing.assert_allclose(scores, 0.5, rtol=0, atol=1e-12)
    assert scores.max() == scores.min()


def walk_tree(nodes):
    """Yield (node, depth) over a tree, verifying reachability."""
    stack = [(0, 0)]
    visited = set()
    while stack:
        idx, depth = stack.pop()
        assert idx not in visited
        visited.add(idx)
        node = nodes[idx]
        yield node, depth
        if node[0] >= 0:
            stack.append((int(node[2]), depth + 1))
            stack.append((int(node[3]), depth + 1))
    assert len(visited) == len(nodes)


def test_tree_structure_invariants():
    X = blob(300, 4, seed=5)
    model = fit(X, n_trees=5, subsample_size=64, rng_seed=1)
    assert model.psi == 64
    for nodes in model.trees:
        external_total = 0
        for node, depth in walk_tree(nodes):
            if node[0] < 0:
                assert node[0] == -1
                assert len(node) == 3
                assert node[2] == depth        # stored depth matches position
                assert depth <= model.max_depth
                external_total += node[1]
            else:
                assert len(node) == 4
                assert 0 <= node[0] < model.n_features
        assert external_total == model.psi


def test_outliers_score_higher():
    inliers = blob(200, 2, seed=11)
    outliers = blob(10, 2, seed=12, offset=15.0)
    X = np.vstack([inliers, outliers])
    model = fit(X, rng_seed=1)
    scores = score_vectors(model, X)
    assert scores[200:].min() > scores[:200].max()


def test_threshold_from_contamination():
    scores = [0.9, 0.5, 0.7, 0.8, 0.6]
    assert threshold_from_contamination(scores, 0.2) == 0.9
    assert threshold_from_contamination(scores, 0.4) == 0.8
    # ceil: 0.3 * 5 = 1.5 rounds up to the 2nd highest
    assert threshold_from_contamination(scores, 0.3) == 0.8
    assert threshold_from_contamination([0.5, 0.5, 0.5], 0.2) == 0.5
    with pytest.raises(ValueError, match="no scores"):
        threshold_from_contamination([], 0.2)
    with pytest.raises(ValueError, match="contamination"):
        threshold_from_contamination(scores, 0.0)
    with pytest.raises(ValueError, match="contamination"):
        threshold_from_contamination(scores, 1.0)


def test_score_vectors_validations():
    model = fit(blob(50, 3, seed=4), n_trees=5)
    with pytest.raises(ValueError, match="expected 3 features"):
        score_vectors(model, np.zeros((2, 5)))
    with pytest.raises(ValueError, match="non-finite"):
        score_vectors(model, np.array([[np.inf, 0.0, 0.0]]))
    single = score_vectors(model, np.array([0.5, 0.5, 0.5]))
    assert single.shape == (1,)


def test_save_load_roundtrip(tmp_path):
    X = blob(80, 4, seed=9)
    model = fit(X, n_trees=8, subsample_size=32, rng_seed=5)
    path = tmp_path / "model.json"
    save_model(model, path)
    loaded = load_model(path)
    assert loaded == model
    assert np.array_equal(score_vectors(loaded, X), score_vectors(model, X))


def test_load_rejects_bad_documents(tmp_path):
    path = tmp_path / "m.json"
    path.write_text(json.dumps({"version": 99}))
    with pytest.raises(ValueError, match="unsupported model version"):
        load_model(path)
    path.write_text(json.dumps({"version": 1, "params": {}}))
    with pytest.raises(ValueError, match="malformed model document"):
        load_model(path)
