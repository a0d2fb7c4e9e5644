"""Forest interpolation: u(F, h) matrices, their convex decomposition into
partition indicators, and a numerical check of the decoupling identity.

For a forest F with edge parameters h in [0,1]^F, the pair entry u_{ab} is
the minimum of h along the unique path joining a and b, or 0 across
components.  Thresholding the forest at descending h levels realizes u as
a convex combination of partition indicator matrices, which is what makes
the interpolated quadratic forms nonpositive.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .errors import IndexMismatchError, NotPositiveSemidefiniteError
from .trees import Forest, enumerate_forests, pair_paths

PSD_TOL = 1e-10


@dataclass(frozen=True)
class InterpolationWeights:
    """One h value in [0, 1] per forest edge, in forest.edges order."""

    forest: Forest
    h: tuple[float, ...]

    def __post_init__(self):
        h = tuple(float(x) for x in self.h)
        if len(h) != len(self.forest.edges):
            raise IndexMismatchError(
                f"{len(h)} weights for {len(self.forest.edges)} edges")
        if any(x < 0.0 or x > 1.0 for x in h):
            raise ValueError("edge parameters must lie in [0, 1]")
        object.__setattr__(self, "h", h)


def _edge_values(forest: Forest, h) -> tuple[float, ...]:
    if isinstance(h, InterpolationWeights):
        if h.forest.edges != forest.edges or h.forest.n != forest.n:
            raise IndexMismatchError("weights were built for another forest")
        return h.h
    vals = tuple(float(x) for x in np.atleast_1d(np.asarray(h, dtype=float))) \
        if len(forest.edges) else ()
    if len(vals) != len(forest.edges):
        raise IndexMismatchError(
            f"{len(vals)} weights for {len(forest.edges)} edges")
    if any(x < 0.0 or x > 1.0 for x in vals):
        raise ValueError("edge parameters must lie in [0, 1]")
    return vals


def interpolation_matrix(forest: Forest, h) -> np.ndarray:
    """The symmetric matrix u(F, h); diagonal set to 1 by convention.

    u_{ab} = min of h over the path from a to b, 0 across components.
    """
    vals = _edge_values(forest, h)
    n = forest.n
    u = np.zeros((n, n))
    np.fill_diagonal(u, 1.0)
    for i, j, edge_idx in pair_paths(forest):
        m = min(vals[e] for e in edge_idx)
        u[i, j] = m
        u[j, i] = m
    return u


def partition_decomposition(forest: Forest, h):
    """Write u(F, h) as sum_q lambda_q * v_{pi_q} with lambda_q >= 0 summing
    to one.

    Sweep a threshold from 1 down to 0: the active edges {l : h_l >= tau}
    induce a partition of the vertices, constant between consecutive
    distinct h values; each segment contributes its length as a weight.
    Zero-length segments are dropped.
    """
    vals = _edge_values(forest, h)
    n = forest.n
    levels = sorted(set(vals), reverse=True)
    singletons = tuple((v,) for v in range(n))
    if not levels:
        return [(1.0, singletons)]
    out = []
    if 1.0 - levels[0] > 0.0:  # segment (levels[0], 1]: no active edges
        out.append((1.0 - levels[0], singletons))
    for idx, level in enumerate(levels):
        lower = levels[idx + 1] if idx + 1 < len(levels) else 0.0
        weight = level - lower  # segment (lower, level]
        if weight > 0.0:
            active = tuple(e for e, v in zip(forest.edges, vals) if v >= level)
            out.append((weight, Forest(n, active).components))
    return out


def _forest_h_integral(forest: Forest, const: float, pair_coeffs,
                       nodes: int) -> float:
    """integral over [0,1]^F of exp(const + sum over connected pairs of
    w_ij * u(F,h)_ij), by Gauss-Legendre on each ordering region of h.

    On the region where h is sorted along a fixed edge permutation, each
    u_ij equals the h of the lowest-ranked path edge, so the integrand is
    exp(affine); the region maps to the unit cube with Jacobian
    prod_q x_q^q, keeping the integrand analytic and GL fast-converging.
    """
    m = len(forest.edges)
    if m == 0:
        return math.exp(const)
    x, w = np.polynomial.legendre.leggauss(nodes)
    x = 0.5 * (x + 1.0)
    w = 0.5 * w
    grids = np.meshgrid(*([x] * m), indexing="ij")
    wgrid = np.ones_like(grids[0])
    for g in np.meshgrid(*([w] * m), indexing="ij"):
        wgrid = wgrid * g
    total = 0.0
    for perm in itertools.permutations(range(m)):
        # h_{perm[r]} = prod_{q >= r} x_q  so h ascends along perm
        hvals = []
        acc = np.ones_like(grids[0])
        for rank in range(m - 1, -1, -1):
            acc = acc * grids[rank]
            hvals.append((perm[rank], acc))
        h = [None] * m
        for e, arr in hvals:
            h[e] = arr
        jac = np.ones_like(grids[0])
        for q in range(m):
            jac = jac * grids[q] ** q
        rank_of = {perm[r]: r for r in range(m)}
        expo = np.full_like(grids[0], const)
        for i, j, edge_idx, wij in pair_coeffs:
            emin = min(edge_idx, key=lambda e: rank_of[e])
            expo = expo + wij * h[emin]
        total += float(np.sum(np.exp(expo) * jac * wgrid))
    return total


def bkar_check(n: int, A: np.ndarray, k: np.ndarray,
               quad_tol: float = 1e-9) -> tuple[float, float]:
    """Evaluate both sides of the forest-decoupling identity for the
    Gaussian family F(u) = exp(-1/2 sum k_i.k_j A_ij u_ij).

    lhs is F at all couplings switched on; rhs sums, over every forest on
    [n], the product of edge factors -k_i.k_j A_ij times the h-integral of
    F along the interpolation.  The h-integrals are refined until two
    consecutive quadrature orders agree to quad_tol.
    """
    if n < 1 or n > 4:
        raise ValueError("decoupling check supported for n <= 4")
    A = np.asarray(A, dtype=float)
    k = np.asarray(k, dtype=float)
    if A.shape != (n, n) or k.shape[0] != n:
        raise ValueError("A must be n x n and k must hold n momenta")
    if np.min(np.linalg.eigvalsh(0.5 * (A + A.T))) < -PSD_TOL:
        raise NotPositiveSemidefiniteError("pair matrix is not PSD")
    G = k @ k.T
    lhs = math.exp(-0.5 * float(np.sum(G * A)))
    const = -0.5 * float(np.sum(np.diag(G) * np.diag(A)))

    def rhs_at(nodes: int) -> float:
        total = 0.0
        for forest in enumerate_forests(n):
            prefactor = 1.0
            for (i, j) in forest.edges:
                prefactor *= -G[i, j] * A[i, j]
            # the symmetric double sum contributes -G_ij A_ij per pair
            coeffs = [(i, j, tuple(idx), -G[i, j] * A[i, j])
                      for i, j, idx in pair_paths(forest)]
            total += prefactor * _forest_h_integral(forest, const, coeffs,
                                                    nodes)
        return total

    prev = rhs_at(16)
    for nodes in (24, 32, 48):
        cur = rhs_at(nodes)
        if abs(cur - prev) <= quad_tol:
            return lhs, cur
        prev = cur
    return lhs, prev
