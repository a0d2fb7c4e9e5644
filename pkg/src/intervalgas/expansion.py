"""Monte Carlo evaluation of the tree-expansion coefficients.

The order-n coefficient is

    T_n = (1/n!) sum over labeled trees T on [n] of
          integral dh d(times) d(momenta)  [tree integrand],

and the energy series reads  E = P^2/2 - sum_n g^n T_n  (Brownian kernel)
or  E = - sum_n g^n T_n  (oscillator), with g = lambda^2/4.  The sampler
draws configurations from the integrand of the convergence proof itself:

* Brownian: momenta with radial density rho^2 r^{d-3} (that is
  rho^2/|k|^2 per unit d^dk, the exact momentum profile of the bound),
  then times root-to-leaf with the root from |t|^{deg} e^{-mu |t|} and
  each child pair from |s-t|^{deg-1} e^{-mu |s-t|} times the overlap with
  the parent interval, mu_j = |k_j| (1-|P|).  The proposal is then exactly
  the normalized dominating integrand, so importance weights are bounded
  by the closed-form normalization 2^n (1-|P|)^{-3n+2} M(-2)^n prod d_j!.

* Oscillator: the dominating integrand splits each edge factor into the
  four exponential decays between interval endpoints, so momenta carry
  degree-dependent radial densities rho^2 r^{d-3+deg_j}, each edge picks
  one of the four anchors uniformly and times follow anchored Laplace
  draws with mu_j = |k_j|.  Weights are bounded by
  4^{n-1} 2^n prod M(d_j - 2).

Child pairs are realized by exact rejection: propose the length from the
two-Gamma mixture  L^{deg-1} e^{-mu L} (L + parent),  place the interval
uniformly over the admissible window and accept with ratio
overlap/parent; the accepted law is exactly the overlap-weighted density
and its normalization  2 deg! parent / mu^{deg+1}  is what the tree
time-integration identity asserts.

Signed products are handled in log-magnitude plus sign form, with plain
(not self-normalized) importance sampling so signs stay exact.
"""

from __future__ import annotations

import functools
import math
import warnings
from dataclasses import dataclass, replace

import numpy as np
from scipy import integrate

from . import bounds as bounds_mod
from .errors import (DivergentIntegralError, NonpositiveInverseMassError,
                     RadiusExceededWarning)
from .kernel import (KernelKind, TimeConfig, batch_a_matrix, batch_exponent,
                     batch_interpolation, batch_tree_integrand_parts)
from .model import ModelParams, RadialCutoff, moment, sphere_area
from .runner import parallel_map
from .trees import (Tree, bfs_order, degrees, enumerate_trees, pair_paths,
                    sample_tree_uniform, tree_count)

EXHAUSTIVE_CAP_ENERGY = 6
EXHAUSTIVE_CAP_MASS = 5  # the j1, j2 double sum makes mass batches heavier

_STREAM_TAGS = {"energy": 1, "mass": 2, "linear": 3, "tree-window": 4,
                "graph-window": 5}


@dataclass(frozen=True)
class McConfig:
    """Sampling plan for one coefficient estimate.

    samples_per_tree is the total draw count per tree (exhaustive mode) or
    the total draw count (sampled mode, one uniform tree per batch); it is
    split into batches of batch_size whose means give the stderr.
    """

    samples_per_tree: int = 20_000
    seed: int = 0
    batch_size: int = 2_500
    workers: int = 1
    tree_mode: str = "auto"

    def __post_init__(self):
        if self.tree_mode not in ("auto", "exhaustive", "sampled"):
            raise ValueError(f"unknown tree_mode {self.tree_mode!r}")
        if self.batch_size < 1 or self.samples_per_tree < 1:
            raise ValueError("sample counts must be positive")
        if self.n_batches < 2:
            raise ValueError("need at least 2 batches for error estimation")

    @property
    def n_batches(self) -> int:
        return self.samples_per_tree // self.batch_size


@dataclass(frozen=True)
class CoefficientEstimate:
    order: int
    kind: str
    value: float
    stderr: float
    samples: int
    mode: str  # exhaustive | sampled | closed-form

    def __post_init__(self):
        if self.stderr < 0:
            raise ValueError("stderr must be nonnegative")


@dataclass(frozen=True)
class SeriesResult:
    """A truncated series evaluated at (lambda, P) with its error budget."""

    kind: str
    coefficients: tuple[CoefficientEstimate, ...]
    coupling: float
    p_abs: float
    value: float
    stat_error: float
    truncation_bound: float | None
    radius: float | None
    heavier_than_free: bool | None = None


# ---------------------------------------------------------------------------
# radial momentum sampling: density proportional to rho(r)^2 r^alpha


def _sample_radial(cutoff: RadialCutoff, alpha: float, rng, size) -> np.ndarray:
    if alpha <= -1:
        raise DivergentIntegralError("radial exponent must exceed -1")
    if cutoff.family == "sharp":
        return cutoff.radius * rng.uniform(size=size) ** (1.0 / (alpha + 1.0))
    if cutoff.family == "gaussian":
        y = rng.gamma(0.5 * (alpha + 1.0), 1.0, size=size)
        return cutoff.width * np.sqrt(y)
    q2 = 2.0 * cutoff.exponent
    if q2 - alpha - 1.0 <= 0.0:
        raise DivergentIntegralError(
            "power-law cutoff has no normalizable radial density at this "
            "exponent")
    u = rng.beta(q2 - alpha - 1.0, alpha + 1.0, size=size)
    return cutoff.scale * (1.0 - u) / u


@functools.lru_cache(maxsize=None)
def _log_radial_norm(cutoff: RadialCutoff, alpha: float, d: int) -> float:
    """log of integral rho^2 r^alpha dr = log(M(alpha - d + 1) / S_{d-1})."""
    return math.log(moment(cutoff, alpha - d + 1.0, d) / sphere_area(d))


def _momentum_log_density(cutoff, alpha, d, r):
    """log density w.r.t. d^dk of the radial-alpha, isotropic proposal."""
    return (cutoff.log_profile_sq(r) + (alpha - d + 1.0) * np.log(r)
            - _log_radial_norm(cutoff, alpha, d) - math.log(sphere_area(d)))


# ---------------------------------------------------------------------------
# per-tree precomputation


@dataclass(frozen=True)
class _TreeStruct:
    tree: Tree
    order: tuple[int, ...]
    parent: tuple[int, ...]
    deg: tuple[int, ...]
    paths: tuple


@functools.lru_cache(maxsize=512)
def _struct_for(n: int, edges: tuple) -> _TreeStruct:
    tree = Tree(n, edges)
    order, parent = bfs_order(tree, root=0)
    return _TreeStruct(tree=tree, order=tuple(order), parent=tuple(parent),
                       deg=degrees(tree), paths=tuple(pair_paths(tree)))


def bound_normalization(tree: Tree, params: ModelParams) -> float:
    """Closed-form integral of the dominating proposal integrand.

    Brownian: 2^n (1-|P|)^{-3n+2} M(-2)^n prod_j d_j!;
    oscillator: 4^{n-1} 2^n prod_j M(d_j - 2).
    Normalized importance weights are bounded by 1 in absolute value.
    """
    n = tree.n
    deg = degrees(tree)
    d = params.dimension
    if params.kernel is KernelKind.BROWNIAN:
        m2 = moment(params.cutoff, -2.0, d)
        out = 2.0 ** n * (1.0 - params.p_abs) ** (-3 * n + 2) * m2 ** n
        for dj in deg:
            out *= math.factorial(dj)
        return out
    out = 4.0 ** (n - 1) * 2.0 ** n
    for dj in deg:
        out *= moment(params.cutoff, dj - 2.0, d)
    return out


# ---------------------------------------------------------------------------
# time sampling


def _gamma_magnitude(rng, shape, scale):
    return rng.gamma(shape, 1.0, size=scale.shape) * scale


def _sample_brownian_times(st: _TreeStruct, mu: np.ndarray, rng):
    """Root-to-leaf overlap proposal; returns (s, t, log_density)."""
    B, n = mu.shape
    s = np.zeros((B, n))
    t = np.zeros((B, n))
    logq = np.zeros(B)
    d0 = st.deg[0]
    mag = _gamma_magnitude(rng, d0 + 1.0, 1.0 / mu[:, 0])
    sign = np.where(rng.uniform(size=B) < 0.5, -1.0, 1.0)
    t[:, 0] = sign * mag
    logq += ((d0 + 1.0) * np.log(mu[:, 0]) - math.log(2.0)
             - math.lgamma(d0 + 1.0) + d0 * np.log(mag) - mu[:, 0] * mag)
    for v in st.order[1:]:
        i = st.parent[v]
        lo = np.minimum(s[:, i], t[:, i])
        hi = np.maximum(s[:, i], t[:, i])
        length = hi - lo
        p = st.deg[v] - 1
        muv = mu[:, v]
        L = np.empty(B)
        x = np.empty(B)
        ov = np.empty(B)
        todo = np.arange(B)
        n_cand = 4
        rounds = 0
        while todo.size:
            rounds += 1
            if rounds > 200:
                raise RuntimeError("child-pair rejection failed to converge")
            m = todo.size
            muc = muv[todo]
            lc = length[todo]
            # mixture  L^p e^{-mu L} (L + parent):  Gamma(p+2) vs Gamma(p+1)
            w1 = (p + 1.0) / muc
            pick = rng.uniform(size=(m, n_cand)) * (w1 + lc)[:, None] \
                < w1[:, None]
            g_hi = rng.gamma(p + 2.0, 1.0, size=(m, n_cand))
            g_lo = rng.gamma(p + 1.0, 1.0, size=(m, n_cand))
            Lc = np.where(pick, g_hi, g_lo) / muc[:, None]
            xc = (lo[todo, None] - Lc
                  + rng.uniform(size=(m, n_cand)) * (lc[:, None] + Lc))
            ovc = (np.minimum(xc + Lc, hi[todo, None])
                   - np.maximum(xc, lo[todo, None]))
            acc = rng.uniform(size=(m, n_cand)) * lc[:, None] < ovc
            hit = acc.any(axis=1)
            first = np.argmax(acc, axis=1)
            rows = np.nonzero(hit)[0]
            sel = todo[rows]
            L[sel] = Lc[rows, first[rows]]
            x[sel] = xc[rows, first[rows]]
            ov[sel] = ovc[rows, first[rows]]
            todo = todo[~hit]
            n_cand = min(2 * n_cand, 65_536)
        swap = rng.uniform(size=B) < 0.5
        s[:, v] = np.where(swap, x, x + L)
        t[:, v] = np.where(swap, x + L, x)
        logq += ((st.deg[v] + 1.0) * np.log(muv) - math.log(2.0)
                 - math.lgamma(st.deg[v] + 1.0) - np.log(length)
                 + p * np.log(L) - muv * L + np.log(ov))
    return s, t, logq


def _sample_oscillator_times(st: _TreeStruct, mu: np.ndarray, rng):
    """Refined-tree proposal: each edge anchors one endpoint of the child
    to one endpoint of the parent with a unit Laplace displacement."""
    B, n = mu.shape
    s = np.zeros((B, n))
    t = np.zeros((B, n))
    logq = np.zeros(B)
    mag = rng.exponential(1.0, size=B) / mu[:, 0]
    sign = np.where(rng.uniform(size=B) < 0.5, -1.0, 1.0)
    t[:, 0] = sign * mag
    logq += np.log(mu[:, 0]) - math.log(2.0) - mu[:, 0] * mag
    for v in st.order[1:]:
        i = st.parent[v]
        muv = mu[:, v]
        anchor = np.where(rng.uniform(size=B) < 0.5, s[:, i], t[:, i])
        e_val = anchor + rng.laplace(0.0, 1.0, size=B)
        o_val = e_val + rng.laplace(0.0, 1.0, size=B) / muv
        to_s = rng.uniform(size=B) < 0.5
        s[:, v] = np.where(to_s, e_val, o_val)
        t[:, v] = np.where(to_s, o_val, e_val)
        four = (np.exp(-np.abs(s[:, v] - s[:, i]))
                + np.exp(-np.abs(t[:, v] - s[:, i]))
                + np.exp(-np.abs(s[:, v] - t[:, i]))
                + np.exp(-np.abs(t[:, v] - t[:, i])))
        logq += (np.log(muv) - math.log(16.0)
                 - muv * np.abs(s[:, v] - t[:, v]) + np.log(four))
    return s, t, logq


# ---------------------------------------------------------------------------
# batched importance weights


def _batch_config(st: _TreeStruct, params: ModelParams, rng, B: int,
                  momentum: np.ndarray):
    """Sample momenta, times and h for B configurations of one tree.

    Returns (h, s, t, k, log_density); `momentum` is the evaluation
    momentum of the integrand (the mass and linear insertions use P = 0
    regardless of params.momentum).
    """
    n = st.tree.n
    d = params.dimension
    p_abs = float(np.linalg.norm(momentum))
    r = np.empty((B, n))
    logq = np.zeros(B)
    for j in range(n):
        alpha = float(d - 3 if params.kernel is KernelKind.BROWNIAN
                      else d - 3 + st.deg[j])
        r[:, j] = _sample_radial(params.cutoff, alpha, rng, B)
        logq += _momentum_log_density(params.cutoff, alpha, d, r[:, j])
    direction = rng.standard_normal(size=(B, n, d))
    direction /= np.linalg.norm(direction, axis=2, keepdims=True)
    k = r[:, :, None] * direction
    if params.kernel is KernelKind.BROWNIAN:
        mu = r * (1.0 - p_abs)
        s, t, logq_t = _sample_brownian_times(st, mu, rng)
    else:
        s, t, logq_t = _sample_oscillator_times(st, r, rng)
    logq += logq_t
    m = len(st.tree.edges)
    h = rng.uniform(size=(B, m))
    return h, s, t, k, logq


def _batch_weights(st: _TreeStruct, params: ModelParams, rng, B: int,
                   statistic: str, direction: np.ndarray | None):
    """Importance weights (and insertion statistics) for one tree batch."""
    if statistic == "energy":
        momentum = params.momentum
    else:
        momentum = np.zeros(params.dimension)
    h, s, t, k, logq = _batch_config(st, params, rng, B, momentum)
    sign, logmag = batch_tree_integrand_parts(
        st.tree, h, s, t, k, params, paths=st.paths, momentum=momentum)
    with np.errstate(over="ignore"):
        w = sign * np.exp(logmag - logq)
    w = np.where(np.isfinite(w), w, 0.0)
    if statistic == "energy":
        return w
    v = np.einsum("bje,bj->be", k, s - t)
    if statistic == "mass":
        return w * np.einsum("be,be->b", v, v)
    if statistic == "linear":
        return w * (-(v @ direction))
    raise ValueError(f"unknown statistic {statistic!r}")


# ---------------------------------------------------------------------------
# batch tasks (top-level for process pools)


def _coefficient_batch(task) -> float:
    (statistic, params, n, mode, seed, batch_idx, batch_size,
     direction) = task
    tag = _STREAM_TAGS[statistic]
    rng = np.random.default_rng(
        np.random.SeedSequence(entropy=seed, spawn_key=(tag, n, batch_idx)))
    inv_fact = 1.0 / math.factorial(n)
    if mode == "sampled":
        tree = sample_tree_uniform(n, rng)
        st = _struct_for(n, tree.edges)
        vals = _batch_weights(st, params, rng, batch_size, statistic,
                              direction)
        return tree_count(n) * inv_fact * float(vals.mean())
    total = 0.0
    for tree in enumerate_trees(n):
        st = _struct_for(n, tree.edges)
        vals = _batch_weights(st, params, rng, batch_size, statistic,
                              direction)
        total += float(vals.mean())
    return inv_fact * total


def _window_vertex_parts(params, n, window, rng, batch_size):
    """Uniform times on [0, T]^{2n}, vertex-matched momenta, shared parts."""
    d = params.dimension
    r = np.empty((batch_size, n))
    logq = np.zeros(batch_size)
    for j in range(n):
        r[:, j] = _sample_radial(params.cutoff, float(d - 2), rng, batch_size)
        logq += _momentum_log_density(params.cutoff, float(d - 2), d, r[:, j])
    direction = rng.standard_normal(size=(batch_size, n, d))
    direction /= np.linalg.norm(direction, axis=2, keepdims=True)
    k = r[:, :, None] * direction
    s = rng.uniform(0.0, window, size=(batch_size, n))
    t = rng.uniform(0.0, window, size=(batch_size, n))
    logq += -2.0 * n * math.log(window)
    dt = s - t
    vertex = params.cutoff.log_profile_sq(r) - np.log(r) - r * np.abs(dt)
    if params.kernel is KernelKind.BROWNIAN:
        vertex = vertex - np.einsum("bje,e->bj", k, params.momentum) * dt
    vertex = vertex.sum(axis=1)
    A = batch_a_matrix(params.kernel, s, t)
    G = np.einsum("bie,bje->bij", k, k)
    return vertex, A, G, logq


def _window_batch(task) -> float:
    """Finite-window coefficients: the full-coupling (graph) integrand or
    the tree-indexed one, times uniform on [0, T]^{2n}."""
    (statistic, params, n, window, seed, batch_idx, batch_size) = task
    tag = _STREAM_TAGS[statistic]
    rng = np.random.default_rng(
        np.random.SeedSequence(entropy=seed, spawn_key=(tag, n, batch_idx)))
    inv_fact = 1.0 / math.factorial(n)
    if statistic == "graph-window":
        vertex, A, G, logq = _window_vertex_parts(params, n, window, rng,
                                                  batch_size)
        logmag = vertex - 0.5 * np.einsum("bij,bij->b", G, A)
        with np.errstate(over="ignore"):
            w = np.exp(logmag - logq)
        w = np.where(np.isfinite(w), w, 0.0)
        return inv_fact * float(w.mean())
    total = 0.0
    for tree in enumerate_trees(n):
        st = _struct_for(n, tree.edges)
        vertex, A, G, logq = _window_vertex_parts(params, n, window, rng,
                                                  batch_size)
        h = rng.uniform(size=(batch_size, len(tree.edges)))
        U = batch_interpolation(tree, h, st.paths)
        logmag = vertex + batch_exponent(G, A, U)
        sign = np.ones(batch_size)
        for (a, b) in tree.edges:
            factor = -G[:, a, b] * A[:, a, b]
            sign *= np.sign(factor)
            with np.errstate(divide="ignore"):
                logmag += np.log(np.abs(factor))
        with np.errstate(over="ignore"):
            w = sign * np.exp(logmag - logq)
        w = np.where(np.isfinite(w), w, 0.0)
        total += float(w.mean())
    return inv_fact * total


# ---------------------------------------------------------------------------
# public estimators


def _resolve_mode(mc: McConfig, n: int, statistic: str) -> str:
    cap = EXHAUSTIVE_CAP_ENERGY if statistic == "energy" else EXHAUSTIVE_CAP_MASS
    if mc.tree_mode == "auto":
        return "exhaustive" if n <= cap else "sampled"
    return mc.tree_mode


def _estimate(statistic: str, n: int, params: ModelParams, mc: McConfig,
              prefactor: float, kind_label: str,
              direction: np.ndarray | None = None) -> CoefficientEstimate:
    if n < 1:
        raise ValueError("order must be >= 1")
    mode = _resolve_mode(mc, n, statistic)
    B = mc.n_batches
    tasks = [(statistic, params, n, mode, mc.seed, b, mc.batch_size,
              direction) for b in range(B)]
    means = np.array(parallel_map(_coefficient_batch, tasks, mc.workers))
    value = prefactor * float(means.mean())
    stderr = abs(prefactor) * float(means.std(ddof=1) / math.sqrt(B))
    per_tree = B * mc.batch_size
    samples = per_tree * (tree_count(n) if mode == "exhaustive" else 1)
    return CoefficientEstimate(order=n, kind=kind_label, value=value,
                               stderr=stderr, samples=samples, mode=mode)


def _radius_for(params: ModelParams) -> float:
    if params.kernel is KernelKind.BROWNIAN:
        return bounds_mod.lambda0_translation(params.cutoff, params.dimension,
                                              params.p_abs)
    return bounds_mod.lambda0_ho(params.cutoff, params.dimension)


def _warn_if_beyond_radius(params: ModelParams) -> None:
    if params.coupling == 0.0:
        return
    radius = _radius_for(params)
    if abs(params.coupling) >= radius:
        warnings.warn(
            f"|lambda| = {abs(params.coupling):g} is at or beyond the "
            f"rigorous radius {radius:g}; coefficients remain well-defined "
            f"but the truncation bound is infinite", RadiusExceededWarning,
            stacklevel=3)


def energy_coefficient(n: int, params: ModelParams,
                       mc: McConfig) -> CoefficientEstimate:
    """Estimate T_n; the energy series is E = P^2/2 - sum g^n T_n
    (Brownian) or E = - sum g^n T_n (oscillator)."""
    if params.kernel is KernelKind.BROWNIAN and params.p_abs >= 1.0:
        raise ValueError("translation-invariant estimates need |P| < 1")
    _warn_if_beyond_radius(params)
    label = ("energy-brownian" if params.kernel is KernelKind.BROWNIAN
             else "energy-oscillator")
    return _estimate("energy", n, params, mc, prefactor=1.0, kind_label=label)


def mass_coefficient(n: int, params: ModelParams,
                     mc: McConfig) -> CoefficientEstimate:
    """The lambda^{2n} coefficient of 1/m_eff: the squared first-moment
    insertion |sum_j k_j (s_j - t_j)|^2 against the P = 0 integrand with
    prefactor -1/(d 4^n n!)."""
    if params.kernel is not KernelKind.BROWNIAN:
        raise ValueError("the effective mass is defined for the "
                         "translation-invariant (Brownian) kernel")
    prefactor = -1.0 / (params.dimension * 4.0 ** n)
    return _estimate("mass", n, params, mc, prefactor=prefactor,
                     kind_label="inverse-mass")


def linear_term_check(params: ModelParams, mc: McConfig,
                      n: int) -> CoefficientEstimate:
    """The order-P insertion sum_j -(k_j . Phat)(s_j - t_j) against the
    P = 0 integrand; rotation invariance makes it vanish, so the estimate
    must be statistically consistent with zero."""
    if params.kernel is not KernelKind.BROWNIAN:
        raise ValueError("linear-term check applies to the Brownian kernel")
    p = params.momentum
    norm = np.linalg.norm(p)
    direction = p / norm if norm > 0 else np.eye(params.dimension)[0]
    return _estimate("linear", n, params, mc, prefactor=1.0,
                     kind_label="linear-term", direction=direction)


# ---------------------------------------------------------------------------
# deterministic order-1 reductions


def _radial_quad(cutoff: RadialCutoff, d: int, weight) -> float:
    """S_{d-1} integral_0^inf r^{d-3} rho^2 weight(r) dr at 1e-10."""
    upper = cutoff.radius if cutoff.family == "sharp" else np.inf

    def f(r):
        return r ** (d - 3.0) * cutoff.profile_sq(r) * weight(r)

    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        val, err = integrate.quad(f, 0.0, upper, epsabs=0.0, epsrel=1e-12,
                                  limit=400)
    if val != 0.0 and err / abs(val) > 1e-10:
        raise DivergentIntegralError("radial quadrature below target accuracy")
    return sphere_area(d) * val


def first_order_closed_form(params: ModelParams) -> float:
    """Order-lambda^2 energy term by deterministic quadrature.

    P = 0 reduces to -(lambda^2/2) integral d^dk rho^2/(k^2 (1 + |k|/2));
    for P != 0 the time integral leaves an angular factor
    2a/(a^2 - (|k||P|c)^2), a = |k| + k^2/2, handled by an explicit
    arctanh in d = 3 and a nested angular quadrature otherwise.
    """
    if params.kernel is not KernelKind.BROWNIAN:
        raise ValueError("closed-form first order applies to the Brownian "
                         "kernel")
    lam2 = params.coupling ** 2
    d = params.dimension
    p_abs = params.p_abs
    if p_abs == 0.0:
        return -0.5 * lam2 * _radial_quad(params.cutoff, d,
                                          lambda r: 1.0 / (1.0 + 0.5 * r))
    if p_abs >= 1.0:
        raise ValueError("need |P| < 1")
    g = 0.25 * lam2
    if d == 3:
        # angular integral of 2a/(a^2 - b^2 c^2) over the sphere is
        # (4 pi / (|k|^2 P)) arctanh(P / (1 + |k|/2)) with a = |k|(1+|k|/2)
        def weight(r):
            return 2.0 * np.arctanh(p_abs / (1.0 + 0.5 * r)) / p_abs

        return -g * _radial_quad(params.cutoff, 3, weight)
    sphere_ratio = sphere_area(d - 1) / sphere_area(d)

    def weight(r):
        a = r * (1.0 + 0.5 * r)
        b = r * p_abs

        def ang(c):
            return (1.0 - c * c) ** ((d - 3) / 2.0) \
                * 2.0 * a / (a * a - b * b * c * c)

        val, _ = integrate.quad(ang, -1.0, 1.0, epsabs=0.0, epsrel=1e-12)
        return val * r * sphere_ratio

    return -g * _radial_quad(params.cutoff, d, weight)


def c2_closed_form(cutoff: RadialCutoff, d: int) -> float:
    """c2 = -(1/d) integral d^dk rho^2 / (k^2 (1 + |k|/2)^3)."""
    return -(1.0 / d) * _radial_quad(cutoff, d,
                                     lambda r: (1.0 + 0.5 * r) ** -3.0)


# ---------------------------------------------------------------------------
# series assembly


def ground_state_energy(params: ModelParams, n_max: int,
                        mc: McConfig) -> SeriesResult:
    """Truncated energy series with statistical and rigorous tail errors."""
    kernel = params.kernel
    d = params.dimension
    if kernel is KernelKind.BROWNIAN and params.p_abs >= 1.0:
        raise ValueError("translation-invariant series needs |P| < 1")
    free = 0.5 * params.p_abs ** 2 if kernel is KernelKind.BROWNIAN else 0.0
    if params.coupling == 0.0:
        radius = _radius_for(params)
        return SeriesResult(kind=f"energy-{kernel.value}", coefficients=(),
                            coupling=0.0, p_abs=params.p_abs, value=free,
                            stat_error=0.0, truncation_bound=0.0,
                            radius=radius)
    coeffs = tuple(energy_coefficient(n, params, mc)
                   for n in range(1, n_max + 1))
    g = params.g
    value = free - sum(g ** c.order * c.value for c in coeffs)
    stat = math.sqrt(sum((g ** c.order * c.stderr) ** 2 for c in coeffs))
    if kernel is KernelKind.BROWNIAN:
        tail = bounds_mod.gamma_tail_translation(
            params.coupling, params.p_abs, params.cutoff, d,
            from_order=n_max + 1)
    else:
        tail = bounds_mod.gamma_tail_oscillator(
            params.coupling, params.cutoff, d, from_order=n_max + 1)
    return SeriesResult(kind=f"energy-{kernel.value}", coefficients=coeffs,
                        coupling=params.coupling, p_abs=params.p_abs,
                        value=value, stat_error=stat,
                        truncation_bound=tail.total, radius=tail.radius)


def effective_mass(params: ModelParams, n_max: int,
                   mc: McConfig) -> SeriesResult:
    """m_eff = 1 / (1 + sum_{n<=n_max} c_{2n} lambda^{2n}) with propagated
    statistical errors; no printed rigorous tail exists for the mass
    series, so the truncation bound is reported as None."""
    radius = bounds_mod.lambda0_translation(params.cutoff, params.dimension,
                                            0.0)
    if params.coupling == 0.0:
        return SeriesResult(kind="effective-mass", coefficients=(),
                            coupling=0.0, p_abs=0.0, value=1.0,
                            stat_error=0.0, truncation_bound=None,
                            radius=radius, heavier_than_free=False)
    coeffs = tuple(mass_coefficient(n, params, mc)
                   for n in range(1, n_max + 1))
    lam2 = params.coupling ** 2
    inverse = 1.0 + sum(lam2 ** c.order * c.value for c in coeffs)
    inv_err = math.sqrt(sum((lam2 ** c.order * c.stderr) ** 2
                            for c in coeffs))
    if inverse <= 0.0:
        raise NonpositiveInverseMassError(
            f"truncated inverse mass {inverse:g} is not positive at "
            f"lambda = {params.coupling:g}")
    value = 1.0 / inverse
    return SeriesResult(kind="effective-mass", coefficients=coeffs,
                        coupling=params.coupling, p_abs=0.0, value=value,
                        stat_error=inv_err * value * value,
                        truncation_bound=None, radius=radius,
                        heavier_than_free=bool(value > 1.0))


# ---------------------------------------------------------------------------
# finite-window coefficients (exp-log resummation checks)


def zt_graph_coefficient(n: int, window: float, params: ModelParams,
                         mc: McConfig) -> CoefficientEstimate:
    """Order-g^n coefficient of the finite-window partition function with
    the full (graph) coupling; desk-scale only (n <= 2, T <= 2)."""
    if n > 2 or window > 2.0 or window <= 0.0:
        raise ValueError("graph coefficients supported for n <= 2, T <= 2")
    if n == 0:
        return CoefficientEstimate(order=0, kind="graph-window", value=1.0,
                                   stderr=0.0, samples=0, mode="closed-form")
    return _window_estimate("graph-window", n, window, params, mc)


def tree_coefficient_window(n: int, window: float, params: ModelParams,
                            mc: McConfig) -> CoefficientEstimate:
    """Order-g^n tree-indexed coefficient of log Z_T on a finite window."""
    if n > 2 or window > 2.0 or window <= 0.0:
        raise ValueError("window tree coefficients supported for n <= 2, "
                         "T <= 2")
    return _window_estimate("tree-window", n, window, params, mc)


def _window_estimate(statistic: str, n: int, window: float,
                     params: ModelParams, mc: McConfig) -> CoefficientEstimate:
    B = mc.n_batches
    tasks = [(statistic, params, n, window, mc.seed, b, mc.batch_size)
             for b in range(B)]
    means = np.array(parallel_map(_window_batch, tasks, mc.workers))
    return CoefficientEstimate(order=n, kind=statistic,
                               value=float(means.mean()),
                               stderr=float(means.std(ddof=1) / math.sqrt(B)),
                               samples=B * mc.batch_size, mode="exhaustive")


# ---------------------------------------------------------------------------
# single-configuration interface


@dataclass(frozen=True)
class SampledConfig:
    """One proposal draw with its exact (normalized) density."""

    h: np.ndarray
    times: TimeConfig
    momenta: np.ndarray
    log_density: float

    @property
    def density(self) -> float:
        return math.exp(self.log_density)


def sample_configuration(tree: Tree, params: ModelParams,
                         rng: np.random.Generator) -> SampledConfig:
    """Draw (h, times, momenta) for one tree from the dominating-integrand
    proposal and return the exact joint density value."""
    st = _struct_for(tree.n, tree.edges)
    h, s, t, k, logq = _batch_config(st, params, rng, 1, params.momentum)
    times = TimeConfig(s=s[0] - 0.0, t=t[0], convention="infinite")
    return SampledConfig(h=h[0], times=times, momenta=k[0],
                         log_density=float(logq[0]))
