import numpy as np
import pytest

from blocksdp import io, model
from blocksdp.blocks import BlockMatrix, SpanBlockMatrix
from blocksdp.estimators import EstimateBundle
from blocksdp.objective import indicator_outer
from blocksdp.scheme import community_scheme


def test_edge_list_round_trip(tmp_path):
    P = np.full((9, 9), 0.4)
    A = model.sample_adjacency(P, seed=1)
    io.write_edge_list(A, tmp_path / "g.edges")
    text = (tmp_path / "g.edges").read_text().splitlines()
    assert text[0] == "n=9"
    assert all(int(a) < int(b) for a, b in (ln.split() for ln in text[1:]))
    assert np.array_equal(io.read_edge_list(tmp_path / "g.edges"), A)


def test_edge_list_isolated_tail(tmp_path):
    A = np.zeros((5, 5), dtype=int)
    A[0, 1] = A[1, 0] = 1
    io.write_edge_list(A, tmp_path / "g")
    assert io.read_edge_list(tmp_path / "g").shape == (5, 5)


@pytest.mark.parametrize("body", ["0 1\n", "n=3\n0 3\n", "n=3\n1 1\n", "n=3\n0 1 2\n"])
def test_edge_list_errors(tmp_path, body):
    (tmp_path / "g").write_text(body)
    with pytest.raises(ValueError):
        io.read_edge_list(tmp_path / "g")


def test_labels_are_one_based_on_disk(tmp_path):
    io.write_labels([0, 2, 1], tmp_path / "z.txt")
    assert (tmp_path / "z.txt").read_text() == "1\n3\n2\n"
    assert list(io.read_labels(tmp_path / "z.txt")) == [0, 2, 1]
    (tmp_path / "bad.txt").write_text("0\n1\n")
    with pytest.raises(ValueError):
        io.read_labels(tmp_path / "bad.txt")


def test_matrix_round_trip_is_exact(tmp_path, rng):
    M = rng.normal(size=(4, 3))
    io.write_matrix(M, tmp_path / "m.csv")
    assert np.array_equal(io.read_matrix(tmp_path / "m.csv"), M)
    io.write_matrix(np.array([[0.5]]), tmp_path / "s.csv")
    assert io.read_matrix(tmp_path / "s.csv").shape == (1, 1)


def test_solution_round_trip(tmp_path, rng):
    X = indicator_outer(np.array([0, 1, 1]), 2)
    io.save_solution(X, tmp_path / "d.npz")
    Y = io.load_solution(tmp_path / "d.npz")
    assert isinstance(Y, BlockMatrix) and np.array_equal(Y.data, X.data) and Y.K == 2
    basis = community_scheme(3)
    coeffs = rng.uniform(size=(len(basis.mats), 4, 4))
    S = SpanBlockMatrix(coeffs + coeffs.transpose(0, 2, 1), basis)
    io.save_solution(S, tmp_path / "s.npz")
    T = io.load_solution(tmp_path / "s.npz")
    assert np.array_equal(T.coeffs, S.coeffs)
    assert np.array_equal(T.basis.mats, basis.mats)
    assert np.array_equal(io.load_solution(tmp_path / "s.npz", basis=basis).coeffs, S.coeffs)


def test_save_bundle(tmp_path):
    b = EstimateBundle(Phat=np.eye(2), zhat=np.array([0, 1]), theta_est=np.eye(2),
                       Ptilde=None, communities=[{1, 0}], Dhat=None, coords=None)
    io.save_bundle(b, tmp_path / "out")
    names = sorted(p.name for p in (tmp_path / "out").iterdir())
    assert names == ["communities.txt", "phat.csv", "theta_est.csv", "zhat.txt"]
    assert (tmp_path / "out" / "communities.txt").read_text() == "0 1\n"
