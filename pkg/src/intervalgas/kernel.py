"""Covariance kernels and the interval-gas integrand.

The pair matrix is the Gram matrix of path increments,

    A_ij = C(s_i, s_j) - C(s_i, t_j) - C(t_i, s_j) + C(t_i, t_j),

with C the Ornstein-Uhlenbeck covariance (exp(-|u-v|)/2) or the Brownian
one (min(u, v)).  For Brownian increments A_ij equals the signed length of
the overlap of the intervals [s_i, t_i] and [s_j, t_j]; that form is valid
for arbitrary real times and is what the infinite-volume integrand uses
after the first left endpoint is pinned to 0.

Products are accumulated as sign plus log-magnitude so tree integrands
stay representable at higher orders.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np

from .bkar import interpolation_matrix
from .errors import NegativeTimeError
from .trees import Forest, Tree, pair_paths

if TYPE_CHECKING:
    from .model import ModelParams


class KernelKind(enum.Enum):
    OSCILLATOR = "oscillator"
    BROWNIAN = "brownian"


@dataclass(frozen=True)
class TimeConfig:
    """Interval endpoints s, t with the time-domain convention.

    ``infinite``: whole-line integrand, s[0] pinned to 0.
    ``window``:   all times inside [0, window].
    """

    s: np.ndarray
    t: np.ndarray
    convention: str = "infinite"
    window: float | None = None

    def __post_init__(self):
        s = np.asarray(self.s, dtype=float)
        t = np.asarray(self.t, dtype=float)
        if s.shape != t.shape or s.ndim != 1:
            raise ValueError("s and t must be 1-d arrays of equal length")
        object.__setattr__(self, "s", s)
        object.__setattr__(self, "t", t)
        if self.convention == "infinite":
            if s.size and s[0] != 0.0:
                raise ValueError("infinite-volume convention pins s[0] = 0")
        elif self.convention == "window":
            if self.window is None or self.window <= 0:
                raise ValueError("window convention needs a positive window")
            if np.any(s < 0) or np.any(t < 0) or np.any(s > self.window) \
                    or np.any(t > self.window):
                raise ValueError("window times must lie in [0, window]")
        else:
            raise ValueError(f"unknown convention {self.convention!r}")

    @property
    def n(self) -> int:
        return self.s.size


@dataclass(frozen=True)
class MomentumConfig:
    """n momenta, one d-vector per interval."""

    k: np.ndarray

    def __post_init__(self):
        k = np.asarray(self.k, dtype=float)
        if k.ndim != 2:
            raise ValueError("momenta must form an (n, d) array")
        if not np.all(np.isfinite(k)):
            raise ValueError("momenta must be finite")
        object.__setattr__(self, "k", k)


def _momenta(k) -> np.ndarray:
    if isinstance(k, MomentumConfig):
        return k.k
    return np.asarray(k, dtype=float)


def overlap_a(si, ti, sj, tj):
    """Signed interval-overlap form of the Brownian pair entry.

    sgn(s_i - t_i) * sgn(s_j - t_j) * |I(s_i,t_i) ∩ I(s_j,t_j)|; agrees
    with the min-covariance form whenever all times are nonnegative and is
    invariant under a common time shift.
    """
    si = np.asarray(si, dtype=float)
    ti = np.asarray(ti, dtype=float)
    sj = np.asarray(sj, dtype=float)
    tj = np.asarray(tj, dtype=float)
    lo = np.maximum(np.minimum(si, ti), np.minimum(sj, tj))
    hi = np.minimum(np.maximum(si, ti), np.maximum(sj, tj))
    length = np.maximum(hi - lo, 0.0)
    return np.sign(si - ti) * np.sign(sj - tj) * length


def a_matrix(kind: KernelKind, times: TimeConfig) -> np.ndarray:
    """The symmetric PSD pair matrix A(s, t) for the given kernel.

    Brownian entries use the overlap identity in the infinite-volume
    convention (valid for any real times) and the min-covariance form on a
    finite window, where negative times are rejected.
    """
    s, t = times.s, times.t
    if kind is KernelKind.OSCILLATOR:
        def c(x, y):
            return 0.5 * np.exp(-np.abs(x[:, None] - y[None, :]))

        return c(s, s) - c(s, t) - c(t, s) + c(t, t)
    if times.convention == "window":
        return a_matrix_min_form(times)
    return overlap_a(s[:, None], t[:, None], s[None, :], t[None, :])


def a_matrix_min_form(times: TimeConfig) -> np.ndarray:
    """Brownian A from C(u, v) = min(u, v); requires nonnegative times."""
    s, t = times.s, times.t
    if np.any(s < 0) or np.any(t < 0):
        raise NegativeTimeError(
            "min-covariance form of the Brownian pair matrix needs "
            "nonnegative times; use the overlap form instead")

    def c(x, y):
        return np.minimum(x[:, None], y[None, :])

    return c(s, s) - c(s, t) - c(t, s) + c(t, t)


def exponent(k, A: np.ndarray, u: np.ndarray) -> float:
    """Interpolated quadratic form

        -1/2 sum_i k_i^2 A_ii - 1/2 sum_{i != j} k_i.k_j A_ij u_ij,

    which is nonpositive for every forest interpolation matrix u because
    u decomposes as a convex sum of partition indicators.
    """
    kk = _momenta(k)
    G = kk @ kk.T
    U = np.array(u, dtype=float, copy=True)
    np.fill_diagonal(U, 1.0)
    return -0.5 * float(np.sum(G * np.asarray(A) * U))


def _vertex_log_factors(kind: KernelKind, s, t, k, params) -> np.ndarray:
    """log of prod_j e^{-|k_j||s_j-t_j| - (k_j.P)(s_j-t_j)} rho^2/|k_j|,
    batched; the momentum-drift term is absent for the oscillator."""
    r = np.linalg.norm(k, axis=-1)
    dt = s - t
    out = params.cutoff.log_profile_sq(r) - np.log(r) - r * np.abs(dt)
    if kind is KernelKind.BROWNIAN:
        out = out - (k @ params.momentum) * dt
    return out.sum(axis=-1)


def tree_integrand_parts(tree: Tree, h, times: TimeConfig, k,
                         params: "ModelParams") -> tuple[float, float]:
    """(sign, log magnitude) of the order-n tree integrand.

    Zero-momentum vertices make the integrand vanish by convention (a
    measure-zero set the samplers never hit); the result is then
    (0.0, -inf).
    """
    kk = _momenta(k)
    n = times.n
    if kk.shape[0] != n or len(h) != len(tree.edges) or tree.n != n:
        raise ValueError("inconsistent configuration sizes")
    r = np.linalg.norm(kk, axis=1)
    if np.any(r == 0.0) or np.any(params.cutoff.profile(r) == 0.0):
        return 0.0, -math.inf
    A = a_matrix(params.kernel, times)
    U = interpolation_matrix(tree, h)
    G = kk @ kk.T
    logmag = _vertex_log_factors(params.kernel, times.s, times.t, kk, params)
    sign = 1.0
    for idx, (i, j) in enumerate(tree.edges):
        factor = -G[i, j] * A[i, j]
        if factor == 0.0:
            return 0.0, -math.inf
        sign *= math.copysign(1.0, factor)
        logmag += math.log(abs(factor))
    logmag += exponent(kk, A, U)
    return sign, float(logmag)


def tree_integrand(tree: Tree, h, times: TimeConfig, k,
                   params: "ModelParams") -> float:
    """The order-n tree integrand as a plain float."""
    sign, logmag = tree_integrand_parts(tree, h, times, k, params)
    if sign == 0.0:
        return 0.0
    return sign * math.exp(logmag)


# ---------------------------------------------------------------------------
# batched forms: same math as above, vectorized over a sample axis


def batch_a_matrix(kind: KernelKind, s: np.ndarray, t: np.ndarray) -> np.ndarray:
    """A matrices for a batch: s, t of shape (B, n) -> (B, n, n).

    Brownian entries always use the overlap identity here (equal to the
    min form on nonnegative times).
    """
    if kind is KernelKind.OSCILLATOR:
        def c(x, y):
            return 0.5 * np.exp(-np.abs(x[:, :, None] - y[:, None, :]))

        return c(s, s) - c(s, t) - c(t, s) + c(t, t)
    return overlap_a(s[:, :, None], t[:, :, None], s[:, None, :], t[:, None, :])


def batch_interpolation(tree: Forest, h: np.ndarray,
                        paths=None) -> np.ndarray:
    """Interpolation matrices for a batch of h vectors: (B, m) -> (B, n, n)."""
    B = h.shape[0]
    U = np.zeros((B, tree.n, tree.n))
    idx = np.arange(tree.n)
    U[:, idx, idx] = 1.0
    for i, j, edge_idx in (paths if paths is not None else pair_paths(tree)):
        val = h[:, edge_idx].min(axis=1)
        U[:, i, j] = val
        U[:, j, i] = val
    return U


def batch_exponent(G: np.ndarray, A: np.ndarray, U: np.ndarray) -> np.ndarray:
    """Batched interpolated quadratic form, shape (B,)."""
    return -0.5 * np.einsum("bij,bij,bij->b", G, A, U)


def batch_tree_integrand_parts(tree: Tree, h: np.ndarray, s: np.ndarray,
                               t: np.ndarray, k: np.ndarray,
                               params: "ModelParams", paths=None,
                               momentum: np.ndarray | None = None):
    """(sign, logmag) arrays over a batch; `momentum` overrides params.momentum
    (the mass and linear-term insertions evaluate the integrand at P = 0)."""
    P = params.momentum if momentum is None else momentum
    r = np.linalg.norm(k, axis=2)
    A = batch_a_matrix(params.kernel, s, t)
    U = batch_interpolation(tree, h, paths)
    G = np.einsum("bie,bje->bij", k, k)
    dt = s - t
    logmag = params.cutoff.log_profile_sq(r) - np.log(r) - r * np.abs(dt)
    if params.kernel is KernelKind.BROWNIAN:
        logmag = logmag - np.einsum("bie,e->bi", k, P) * dt
    logmag = logmag.sum(axis=1)
    sign = np.ones(s.shape[0])
    for i, j in tree.edges:
        factor = -G[:, i, j] * A[:, i, j]
        sign *= np.sign(factor)
        with np.errstate(divide="ignore"):
            logmag += np.log(np.abs(factor))
    logmag += batch_exponent(G, A, U)
    return sign, logmag
