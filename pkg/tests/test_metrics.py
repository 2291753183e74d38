import itertools

import numpy as np
import pytest
from scipy.linalg import qr

from blocksdp import metrics, model
from blocksdp.objective import make_theta_hat


def test_misclassification_examples():
    assert metrics.misclassification([1, 1, 0, 0], [0, 0, 1, 1]) == 0
    assert metrics.misclassification([0, 0, 0, 1], [0, 0, 1, 1]) == 0.25
    assert metrics.misclassification([0, 0, 0, 0], [0, 1, 2, 3]) == 0.75
    assert metrics.misclassification([], []) == 0
    with pytest.raises(ValueError):
        metrics.misclassification([0], [0, 1])


def test_misclassification_matches_permutation_search(rng):
    for _ in range(20):
        z = rng.integers(0, 3, 12)
        zh = rng.integers(0, 3, 12)
        brute = min(np.mean(np.asarray(p)[zh] != z) for p in itertools.permutations(range(3)))
        assert metrics.misclassification(zh, z) == pytest.approx(brute)


def test_community_set_error():
    C = [{0, 1, 2}, {2, 3}]
    assert metrics.community_set_error([{2, 3}, {0, 1, 2}], C) == 0
    assert metrics.community_set_error([{0, 1}, {2, 3}], C) == pytest.approx(1 / 5)
    assert metrics.community_set_error([{0, 1, 2}], C) == pytest.approx(2 / 5)
    assert metrics.community_set_error(C + [{4}], C) == pytest.approx(1 / 5)
    assert metrics.community_set_error([], []) == 0


def test_kl_bernoulli():
    assert metrics.kl_bernoulli(0.3, 0.3) == 0
    assert metrics.kl_bernoulli(0.0, 0.5) == pytest.approx(np.log(2))
    assert metrics.kl_bernoulli(1.0, 0.25) == pytest.approx(np.log(4))
    assert metrics.kl_bernoulli(0.5, 0.0) == np.inf
    assert metrics.kl_bernoulli(0.0, 0.0) == 0
    v = metrics.kl_bernoulli(np.array([0.2, 0.7]), 0.5)
    assert v.shape == (2,) and np.all(v > 0)


def test_normalized_kl_risk():
    P = np.full((4, 4), 0.25)
    np.fill_diagonal(P, 0)
    assert metrics.normalized_kl_risk(P, P) == 0
    Q = np.full((4, 4), 0.5)
    expect = 12 * metrics.kl_bernoulli(0.25, 0.5) / (16 * 0.25)
    assert metrics.normalized_kl_risk(P, Q) == pytest.approx(expect)
    with pytest.raises(ValueError):
        metrics.normalized_kl_risk(np.zeros((3, 3)), np.zeros((3, 3)))


def test_best_blockmodel_risk(rng):
    theta = np.array([[0.5, 0.1], [0.1, 0.4]])
    z = np.array([0, 1, 1, 0, 1])
    P = model.block_probability_matrix(theta, z)
    th = make_theta_hat(theta)
    risk, zz = metrics.best_blockmodel_risk(P, th, return_labels=True)
    assert risk == pytest.approx(0, abs=1e-12)
    assert np.array_equal(model.block_probability_matrix(theta, zz), P)
    # exhaustive value is a lower bound for every labeling
    Pn = np.clip(P + rng.uniform(-0.05, 0.05, P.shape), 0.01, 0.99)
    Pn = np.triu(Pn, 1) + np.triu(Pn, 1).T
    r = metrics.best_blockmodel_risk(Pn, th)
    for lab in itertools.product(range(2), repeat=5):
        Q = model.block_probability_matrix(theta, np.array(lab))
        assert r <= metrics.normalized_kl_risk(Pn, Q) + 1e-12
    with pytest.raises(ValueError):
        metrics.best_blockmodel_risk(np.full((30, 30), 0.2), th)


def test_subspace_distance(rng):
    V, _ = qr(rng.normal(size=(10, 3)), mode="economic")
    O, _ = qr(rng.normal(size=(3, 3)))
    assert metrics.subspace_distance(V @ O, V) == pytest.approx(0, abs=1e-20)
    W, _ = qr(rng.normal(size=(10, 3)), mode="economic")
    d = metrics.subspace_distance(W, V)
    assert 0 < d <= 2 * 3 + 1e-12
    with pytest.raises(ValueError):
        metrics.subspace_distance(2 * V, V)


def test_aligned_rms(rng):
    y = rng.normal(size=(8, 2))
    R = np.array([[0, -1], [1, 0.0]])
    assert metrics.aligned_rms(y @ R + 3.0, y) == pytest.approx(0, abs=1e-12)
    assert metrics.aligned_rms(y * [1, -1], y) == pytest.approx(0, abs=1e-12)
    assert metrics.aligned_rms(np.zeros_like(y), y) == pytest.approx(
        np.sqrt(((y - y.mean(0)) ** 2).sum(1).mean()))
    with pytest.raises(ValueError):
        metrics.aligned_rms(y[:, :1], y)


def test_disagreement_fraction():
    theta = np.array([[0.5, 0.1], [0.1, 0.4]])
    z = np.array([0, 0, 1])
    P = model.block_probability_matrix(theta, z)
    assert metrics.disagreement_fraction(P, theta, z) == 0
    P[0, 2] = P[2, 0] = 0.5
    assert metrics.disagreement_fraction(P, theta, z) == pytest.approx(2 / 6)
