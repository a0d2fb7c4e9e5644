"""Interpolation matrices, partition decomposition, decoupling identity."""

import itertools
import math

import numpy as np
import pytest
from scipy import integrate

from intervalgas import bkar, trees
from intervalgas.errors import (IndexMismatchError,
                                NotPositiveSemidefiniteError)


def test_interpolation_matrix_path():
    path = trees.Tree(3, ((0, 1), (1, 2)))
    u = bkar.interpolation_matrix(path, [0.3, 0.7])
    assert u[0, 1] == pytest.approx(0.3)
    assert u[1, 2] == pytest.approx(0.7)
    assert u[0, 2] == pytest.approx(0.3)  # min over the connecting path
    assert np.allclose(u, u.T)


def test_interpolation_matrix_disconnected_and_ones():
    forest = trees.Forest(3, ((0, 1),))
    u = bkar.interpolation_matrix(forest, [0.8])
    assert u[0, 2] == 0.0 and u[1, 2] == 0.0
    tree = trees.Tree(4, ((0, 1), (1, 2), (2, 3)))
    u1 = bkar.interpolation_matrix(tree, [1.0, 1.0, 1.0])
    off = ~np.eye(4, dtype=bool)
    assert np.all(u1[off] == 1.0)


def test_interpolation_weights_validation():
    tree = trees.Tree(3, ((0, 1), (1, 2)))
    with pytest.raises(IndexMismatchError):
        bkar.interpolation_matrix(tree, [0.5])
    with pytest.raises(ValueError):
        bkar.interpolation_matrix(tree, [0.5, 1.5])
    w = bkar.InterpolationWeights(tree, (0.2, 0.9))
    assert bkar.interpolation_matrix(tree, w)[0, 2] == pytest.approx(0.2)


def test_partition_decomposition_examples():
    edge = trees.Tree(2, ((0, 1),))
    dec = bkar.partition_decomposition(edge, [0.4])
    assert dec == [(pytest.approx(0.6), ((0,), (1,))),
                   (pytest.approx(0.4), ((0, 1),))]
    path = trees.Tree(3, ((0, 1), (1, 2)))
    dec = bkar.partition_decomposition(path, [0.3, 0.7])
    weights = [w for w, _ in dec]
    parts = [p for _, p in dec]
    assert weights == [pytest.approx(0.3), pytest.approx(0.4),
                       pytest.approx(0.3)]
    assert parts == [((0,), (1,), (2,)), ((0,), (1, 2)), ((0, 1, 2),)]
    ones = bkar.partition_decomposition(path, [1.0, 1.0])
    assert ones == [(pytest.approx(1.0), ((0, 1, 2),))]


def _reconstruct(n, decomposition):
    u = np.zeros((n, n))
    for w, part in decomposition:
        for block in part:
            for a in block:
                for b in block:
                    if a != b:
                        u[a, b] += w
    np.fill_diagonal(u, 1.0)
    return u


def _random_forest(n, rng):
    tree = trees.sample_tree_uniform(n, rng)
    keep = tuple(e for e in tree.edges if rng.uniform() < 0.6)
    return trees.Forest(n, keep)


def test_partition_decomposition_reconstructs_u():
    rng = np.random.default_rng(10)
    for _ in range(1000):
        n = int(rng.integers(2, 7))
        forest = _random_forest(n, rng)
        h = rng.uniform(size=len(forest.edges))
        if forest.edges and rng.uniform() < 0.2:
            h[0] = rng.choice([0.0, 1.0])  # exercise boundary values
        dec = bkar.partition_decomposition(forest, h)
        weights = np.array([w for w, _ in dec])
        assert np.all(weights >= 0)
        assert abs(weights.sum() - 1.0) <= 1e-14
        u = bkar.interpolation_matrix(forest, h)
        assert np.max(np.abs(_reconstruct(n, dec) - u)) <= 1e-12


def test_bkar_check_n2_is_exact():
    rng = np.random.default_rng(3)
    g = rng.standard_normal((2, 3))
    A = g @ g.T / 3
    k = rng.standard_normal((2, 3))
    lhs, rhs = bkar.bkar_check(2, A, k)
    assert lhs == pytest.approx(rhs, abs=1e-12)


def test_bkar_check_decoupled_case():
    # identity A: off-diagonal edge factors vanish, only the empty forest
    # contributes and both sides equal exp(-sum k_i^2 / 2)
    k = np.array([[0.4, 0.1, 0.0], [0.0, 0.8, 0.3], [0.2, 0.0, 0.5]])
    lhs, rhs = bkar.bkar_check(3, np.eye(3), k)
    assert lhs == pytest.approx(math.exp(-0.5 * float(np.sum(k * k))),
                                rel=1e-12)
    assert rhs == pytest.approx(lhs, abs=1e-9)


def test_bkar_check_random_instances():
    rng = np.random.default_rng(4)
    for n in (2, 3, 4):
        for _ in range(5):
            g = rng.standard_normal((n, n + 1))
            A = g @ g.T / (n + 1)
            k = rng.standard_normal((n, 3))
            lhs, rhs = bkar.bkar_check(n, A, k, quad_tol=1e-9)
            assert abs(lhs - rhs) <= 1e-6


def test_bkar_check_rejects_non_psd():
    A = np.array([[1.0, 2.0], [2.0, 1.0]])  # eigenvalues 3, -1
    with pytest.raises(NotPositiveSemidefiniteError):
        bkar.bkar_check(2, A, np.ones((2, 3)))


def test_h_integral_vs_nquad_oracle():
    # the ordering-region Gauss-Legendre integral against adaptive cubature
    rng = np.random.default_rng(5)
    for edges in [((0, 1), (1, 2)), ((0, 1), (1, 2), (2, 3))]:
        n = max(max(e) for e in edges) + 1
        forest = trees.Forest(n, edges)
        g = rng.standard_normal((n, n + 1))
        A = g @ g.T / (n + 1)
        k = rng.standard_normal((n, 3))
        G = k @ k.T
        const = -0.5 * float(np.sum(np.diag(G) * np.diag(A)))
        coeffs = [(i, j, tuple(idx), -G[i, j] * A[i, j])
                  for i, j, idx in trees.pair_paths(forest)]
        val = bkar._forest_h_integral(forest, const, coeffs, nodes=32)

        pair_cache = list(trees.pair_paths(forest))

        def integrand(*h):
            expo = const
            for i, j, idx in pair_cache:
                expo += -G[i, j] * A[i, j] * min(h[e] for e in idx)
            return math.exp(expo)

        ref, err = integrate.nquad(integrand,
                                   [(0.0, 1.0)] * len(edges),
                                   opts={"epsabs": 1e-10, "epsrel": 1e-10})
        assert val == pytest.approx(ref, abs=max(1e-9, 5 * err))
