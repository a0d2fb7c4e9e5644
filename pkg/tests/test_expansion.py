"""Monte Carlo coefficient estimators against closed forms, independent
integrators and their own exactness identities."""

import math

import numpy as np
import pytest
from scipy import integrate

from intervalgas import checks, expansion, trees
from intervalgas.errors import RadiusExceededWarning
from intervalgas.expansion import (McConfig, _batch_config, _sample_radial,
                                   _struct_for, bound_normalization,
                                   c2_closed_form, first_order_closed_form)
from intervalgas.kernel import KernelKind, batch_tree_integrand_parts
from intervalgas.model import ModelParams, RadialCutoff, moment, sphere_area

SHARP = RadialCutoff.sharp(1.0)
T1_SHARP = 16.0 * math.pi * math.log(1.5)
C2_SHARP = -20.0 * math.pi / 27.0


def brownian(lam=0.05, P=0.0, cutoff=SHARP, d=3):
    return ModelParams(d, lam, P, KernelKind.BROWNIAN, cutoff)


def oscillator(lam=0.05, cutoff=SHARP):
    return ModelParams(3, lam, 0.0, KernelKind.OSCILLATOR, cutoff)


def mc(samples=40_000, seed=0, batch=2_000, mode="auto", workers=1):
    return McConfig(samples_per_tree=samples, seed=seed, batch_size=batch,
                    tree_mode=mode, workers=workers)


# ---------------------------------------------------------------------------
# proposal building blocks


def test_radial_sampler_moments():
    rng = np.random.default_rng(0)
    for cutoff, alpha in [(SHARP, 0.0), (SHARP, 2.0),
                          (RadialCutoff.gaussian(1.0), 0.0),
                          (RadialCutoff.powerlaw(1.0, 3.0), 0.0)]:
        r = _sample_radial(cutoff, alpha, rng, 200_000)

        def dens(x):
            return x ** alpha * cutoff.profile_sq(x)

        upper = cutoff.radius if cutoff.family == "sharp" else np.inf
        norm = integrate.quad(dens, 0, upper)[0]
        mean = integrate.quad(lambda x: x * dens(x), 0, upper)[0] / norm
        z = (r.mean() - mean) / (r.std(ddof=1) / math.sqrt(r.size))
        assert abs(z) < 4.0, (cutoff.family, alpha, z)


def test_root_time_is_laplace():
    # mu = 2, degree 0: |t| is Exp(2), so E|t| = 1/2
    st = _struct_for(1, ())
    rng = np.random.default_rng(1)
    mu = np.full((100_000, 1), 2.0)
    s, t, logq = expansion._sample_brownian_times(st, mu, rng)
    m = np.abs(t[:, 0]).mean()
    sd = np.abs(t[:, 0]).std(ddof=1) / math.sqrt(t.shape[0])
    assert abs(m - 0.5) < 3 * sd
    # density value: (mu/2) e^{-mu|t|}
    expect = np.log(2.0 / 2.0) - 2.0 * np.abs(t[:, 0])
    assert np.max(np.abs(logq - expect)) < 1e-12


def test_child_pair_sampler_matches_interval_lemma():
    """The two-vertex proposal realizes the overlap-weighted density whose
    normalization the interval identity gives in closed form."""
    rng = np.random.default_rng(2)
    tree = trees.Tree(2, ((0, 1),))
    mu = np.array([1.3, 0.8])
    dev = checks.time_lemma_pointwise(tree, mu, 50_000, rng)
    assert dev <= 1e-10


def test_time_lemma_mc_independent_proposal():
    rng = np.random.default_rng(3)
    for edges in [((0, 1),), ((0, 1), (1, 2)), ((0, 1), (0, 2), (0, 3))]:
        tree = trees.Tree(max(max(e) for e in edges) + 1, edges)
        mu = rng.uniform(0.6, 2.0, size=tree.n)
        est, err = checks.time_lemma_mc(tree, mu, 60_000, rng)
        exact = checks.time_lemma_closed_form(tree, mu)
        assert abs(est - exact) <= 3.0 * err


def test_importance_weights_bounded_by_normalization():
    rng = np.random.default_rng(4)
    for params in (brownian(P=0.0), brownian(P=0.3), oscillator()):
        worst = 0.0
        for n in (1, 2, 3, 4, 5):
            tree = trees.sample_tree_uniform(n, rng)
            st = _struct_for(n, tree.edges)
            h, s, t, k, logq = _batch_config(st, params, rng, 20_000,
                                             params.momentum)
            sign, logmag = batch_tree_integrand_parts(
                st.tree, h, s, t, k, params, paths=st.paths,
                momentum=params.momentum)
            ratio = np.max(np.exp(logmag - logq)) / bound_normalization(
                tree, params)
            worst = max(worst, ratio)
        assert worst <= 1.0 + 1e-12, params.kernel


# ---------------------------------------------------------------------------
# closed forms


def test_first_order_closed_form_sharp():
    params = brownian(lam=1.0)
    # antiderivative oracle: 8 pi ln(1 + r/2) on [0, 1]
    oracle = -0.5 * 8.0 * math.pi * math.log(1.5)
    val = first_order_closed_form(params)
    assert abs(val - oracle) <= 1e-8 * abs(oracle)
    assert first_order_closed_form(brownian(lam=0.0)) == 0.0


def test_c2_closed_form_sharp_and_scaling():
    # antiderivative oracle: (1 + r/2)^{-2} gives 5/9 on [0, 1]
    oracle = -(4.0 * math.pi / 3.0) * (5.0 / 9.0)
    assert abs(c2_closed_form(SHARP, 3) - oracle) <= 1e-8 * abs(oracle)
    assert c2_closed_form(RadialCutoff.sharp(1.0, amplitude=2.0), 3) == \
        pytest.approx(4.0 * c2_closed_form(SHARP, 3), rel=1e-10)


# ---------------------------------------------------------------------------
# coefficient estimates vs oracles


def test_energy_coefficient_order1_matches_closed_form():
    est = expansion.energy_coefficient(1, brownian(), mc(seed=5))
    assert abs(est.value - T1_SHARP) <= 3.0 * est.stderr
    assert est.mode == "exhaustive"


def test_energy_coefficient_order1_gaussian_cross_check():
    params = brownian(lam=1.0, cutoff=RadialCutoff.gaussian(1.0))
    with pytest.warns(RadiusExceededWarning):  # lambda = 1 is way outside
        est = expansion.energy_coefficient(1, params, mc(seed=6))
    quad_val = first_order_closed_form(params)
    # -g T_1 should equal the quadrature value
    assert abs(-params.g * est.value - quad_val) <= 3.0 * params.g * est.stderr


def test_energy_coefficient_order1_oscillator_vs_quadrature():
    def inner(t):
        f = lambda r: r * math.exp(-r * t) * math.exp(
            -0.5 * r * r * (1.0 - math.exp(-t)))
        return integrate.quad(f, 0, 1, epsabs=1e-13)[0]

    oracle = 2 * 4 * math.pi * integrate.quad(inner, 0, np.inf,
                                              epsabs=1e-12, limit=200)[0]
    est = expansion.energy_coefficient(1, oscillator(), mc(seed=7))
    assert abs(est.value - oracle) <= 3.0 * est.stderr


def _stratified_oscillator_t2(rounds, seed):
    """Plain stratified sampling of the order-2 oscillator coefficient on a
    compactified domain (independent of the importance sampler).

    Coordinates: radii r1, r2 in (0,1) (sharp cutoff support), the cosine
    of the momentum angle, a logistic-compactified root endpoint t1 and
    partner midpoint m2 with r-scaled widths, an exponentially
    compactified partner length, and one cell axis carrying (orientation,
    h) jointly.
    """
    m = 3  # strata per axis
    cells = np.stack(np.meshgrid(*([np.arange(m)] * 7), indexing="ij"),
                     axis=-1).reshape(-1, 7)
    rng = np.random.default_rng(seed)
    beta = 1.2
    totals = []
    for _ in range(rounds):
        u = (cells + rng.uniform(size=cells.shape)) / m
        r1, r2 = u[:, 0], u[:, 1]
        cosg = 2.0 * u[:, 2] - 1.0
        jac = np.full(len(cells), 2.0)
        t1 = (beta / r1) * np.log(u[:, 3] / (1.0 - u[:, 3]))
        jac *= (beta / r1) / (u[:, 3] * (1.0 - u[:, 3]))
        spread = 1.0 + beta / r1
        m2 = spread * np.log(u[:, 4] / (1.0 - u[:, 4]))
        jac *= spread / (u[:, 4] * (1.0 - u[:, 4]))
        L2 = -(1.0 / r2) * np.log(1.0 - u[:, 5])
        jac *= 1.0 / (r2 * (1.0 - u[:, 5]))
        orient = np.where(u[:, 6] < 0.5, 1.0, -1.0)
        h = 2.0 * np.abs(u[:, 6] - 0.5)
        jac *= 2.0  # the orientation pair is summed, h stays uniform
        s2 = m2 + 0.5 * orient * L2
        t2 = m2 - 0.5 * orient * L2

        def cov(a, b):
            return 0.5 * np.exp(-np.abs(a - b))

        zeros = np.zeros_like(t1)
        a11 = cov(zeros, zeros) - 2 * cov(zeros, t1) + cov(t1, t1)
        a22 = cov(s2, s2) - 2 * cov(s2, t2) + cov(t2, t2)
        a12 = cov(zeros, s2) - cov(zeros, t2) - cov(t1, s2) + cov(t1, t2)
        dot = r1 * r2 * cosg
        vertex = (np.exp(-r1 * np.abs(t1)) / r1
                  * np.exp(-r2 * np.abs(s2 - t2)) / r2)
        expo = np.exp(-0.5 * (r1 ** 2 * a11 + r2 ** 2 * a22) - dot * a12 * h)
        f = 0.5 * (4.0 * math.pi) * (2.0 * math.pi) * r1 ** 2 * r2 ** 2 \
            * vertex * (-dot * a12) * expo
        totals.append(float(np.mean(f * jac)))
    totals = np.array(totals)
    return float(totals.mean()), float(totals.std(ddof=1)
                                       / math.sqrt(len(totals)))


def test_energy_coefficient_order2_oscillator_dual_integrator():
    est = expansion.energy_coefficient(2, oscillator(), mc(
        samples=120_000, seed=8, batch=6_000))
    oracle, oracle_err = _stratified_oscillator_t2(rounds=48, seed=8)
    err = math.hypot(est.stderr, oracle_err)
    assert abs(est.value - oracle) <= 3.0 * err, (est.value, oracle, err)


def test_mass_coefficient_order1():
    est = expansion.mass_coefficient(1, brownian(), mc(seed=9))
    assert abs(est.value - C2_SHARP) <= 3.0 * est.stderr
    assert est.kind == "inverse-mass"


def test_mass_coefficient_independent_of_coupling():
    a = expansion.mass_coefficient(1, brownian(lam=0.05), mc(seed=10))
    b = expansion.mass_coefficient(1, brownian(lam=0.3), mc(seed=10))
    assert a.value == b.value and a.stderr == b.stderr


def test_mass_coefficient_gaussian_cross_check():
    cutoff = RadialCutoff.gaussian(1.0)
    est = expansion.mass_coefficient(1, brownian(cutoff=cutoff),
                                     mc(samples=80_000, seed=11, batch=4_000))
    assert abs(est.value - c2_closed_form(cutoff, 3)) <= 3.0 * est.stderr


def test_mass_coefficient_order2_seed_stability():
    a = expansion.mass_coefficient(2, brownian(), mc(seed=12))
    b = expansion.mass_coefficient(2, brownian(), mc(seed=13))
    assert abs(a.value - b.value) <= 3.0 * math.hypot(a.stderr, b.stderr)
    assert math.isfinite(a.value)


def test_linear_term_consistent_with_zero():
    for n in (1, 2):
        est = expansion.linear_term_check(brownian(P=0.2), mc(seed=14), n)
        assert abs(est.value) <= 3.0 * est.stderr, (n, est)


def test_sampled_mode_agrees_with_exhaustive():
    exh = expansion.energy_coefficient(
        3, brownian(), mc(samples=30_000, seed=15, batch=1_500,
                          mode="exhaustive"))
    smp = expansion.energy_coefficient(
        3, brownian(), mc(samples=90_000, seed=15, batch=1_500,
                          mode="sampled"))
    assert exh.mode == "exhaustive" and smp.mode == "sampled"
    assert abs(exh.value - smp.value) <= 3.0 * math.hypot(exh.stderr,
                                                          smp.stderr)


def test_coefficient_bounded_by_gamma_terms():
    """|g^n T_n| <= the order-n term of the translation tail bound."""
    from intervalgas import bounds as bounds_mod

    params = brownian(lam=0.05)
    conf = mc(samples=60_000, seed=16, batch=3_000)
    tail = bounds_mod.gamma_tail_translation(params.coupling, 0.0, SHARP, 3,
                                             from_order=1)
    g = params.g
    for n in (1, 2, 3):
        est = expansion.energy_coefficient(n, params, conf)
        lhs = abs(g ** n * est.value) - 3.0 * g ** n * est.stderr
        assert lhs <= tail.terms[n - 1]


# ---------------------------------------------------------------------------
# series assembly


def test_ground_state_energy_free_case():
    series = expansion.ground_state_energy(brownian(lam=0.0, P=0.2), 3,
                                           mc(seed=17))
    assert series.value == pytest.approx(0.5 * 0.04, rel=1e-15)
    assert series.coefficients == ()
    assert series.stat_error == 0.0 and series.truncation_bound == 0.0


def test_ground_state_energy_small_coupling():
    params = brownian(lam=0.05)
    series = expansion.ground_state_energy(params, 2, mc(seed=18))
    first = first_order_closed_form(params)
    # E - first-order = -g^2 T_2 (+ stat error), below the order-2 tail
    from intervalgas import bounds as bounds_mod

    tail2 = bounds_mod.gamma_tail_translation(params.coupling, 0.0, SHARP, 3,
                                              from_order=2)
    assert abs(series.value - first) <= tail2.terms[0] \
        + 3.0 * series.stat_error
    assert series.truncation_bound <= tail2.total
    assert series.radius == pytest.approx(0.5 * (4 * math.pi) ** -0.5)


def test_energy_quadratic_momentum_response():
    """E(P) - E(0) - P^2/2 should follow (c2 lambda^2 / 2) P^2."""
    lam = 0.05
    conf = mc(samples=400_000, seed=19, batch=20_000)
    e0 = expansion.ground_state_energy(brownian(lam=lam, P=0.0), 1, conf)
    d_by_p = {}
    for p in (0.1, 0.2):
        ep = expansion.ground_state_energy(brownian(lam=lam, P=p), 1, conf)
        d_by_p[p] = (ep.value - 0.5 * p * p - e0.value,
                     math.hypot(ep.stat_error, e0.stat_error))
    pred = 0.5 * C2_SHARP * lam * lam
    for p, (diff, err) in d_by_p.items():
        allowance = 3.0 * err + abs(C2_SHARP) * lam * lam * p ** 4
        assert abs(diff - pred * p * p) <= allowance, (p, diff, pred * p * p)


def test_effective_mass_series():
    series = expansion.effective_mass(brownian(lam=0.05), 1, mc(seed=20))
    expected = 1.0 / (1.0 + C2_SHARP * 0.0025)
    assert abs(series.value - expected) <= 3.0 * series.stat_error + 1e-9
    assert series.heavier_than_free is True
    assert series.truncation_bound is None
    free = expansion.effective_mass(brownian(lam=0.0), 1, mc(seed=20))
    assert free.value == 1.0 and free.heavier_than_free is False
    neg = expansion.effective_mass(brownian(lam=-0.05), 1, mc(seed=20))
    assert neg.value == series.value  # even series in lambda


# ---------------------------------------------------------------------------
# finite-window coefficients


def test_zt_graph_order0_and_order1():
    params = oscillator(lam=0.1)
    conf = mc(samples=60_000, seed=21, batch=3_000)
    zero = expansion.zt_graph_coefficient(0, 1.0, params, conf)
    assert zero.value == 1.0 and zero.stderr == 0.0
    a1 = expansion.zt_graph_coefficient(1, 1.0, params, conf)
    b1 = expansion.tree_coefficient_window(1, 1.0, params, conf)
    # trees and graphs coincide at order 1
    assert abs(a1.value - b1.value) <= 3.0 * math.hypot(a1.stderr, b1.stderr)


def test_zt_graph_exp_log_identity():
    params = oscillator(lam=0.1)
    conf = mc(samples=120_000, seed=22, batch=6_000)
    a2 = expansion.zt_graph_coefficient(2, 1.0, params, conf)
    b1 = expansion.tree_coefficient_window(1, 1.0, params, conf)
    b2 = expansion.tree_coefficient_window(2, 1.0, params, conf)
    rhs = b2.value + 0.5 * b1.value ** 2
    err = math.sqrt(a2.stderr ** 2 + b2.stderr ** 2
                    + (b1.value * b1.stderr) ** 2)
    assert abs(a2.value - rhs) <= 3.0 * err


def test_zt_graph_caps():
    with pytest.raises(ValueError):
        expansion.zt_graph_coefficient(3, 1.0, oscillator(), mc())
    with pytest.raises(ValueError):
        expansion.zt_graph_coefficient(2, 5.0, oscillator(), mc())


# ---------------------------------------------------------------------------
# plumbing


def test_sample_configuration_contract():
    rng = np.random.default_rng(23)
    tree = trees.Tree(3, ((0, 1), (1, 2)))
    cfg = expansion.sample_configuration(tree, brownian(P=0.2), rng)
    assert cfg.times.s[0] == 0.0
    assert cfg.h.shape == (2,) and np.all((cfg.h >= 0) & (cfg.h <= 1))
    assert cfg.momenta.shape == (3, 3)
    assert math.isfinite(cfg.log_density) and cfg.density > 0


def test_determinism_same_seed_and_workers():
    a = expansion.energy_coefficient(2, brownian(), mc(samples=8_000,
                                                       seed=24, batch=1_000))
    b = expansion.energy_coefficient(2, brownian(), mc(samples=8_000,
                                                       seed=24, batch=1_000))
    c = expansion.energy_coefficient(2, brownian(), mc(samples=8_000,
                                                       seed=24, batch=1_000,
                                                       workers=2))
    assert a.value == b.value == c.value
    assert a.stderr == b.stderr == c.stderr


def test_radius_warning():
    params = brownian(lam=0.2)  # beyond 0.141
    with pytest.warns(RadiusExceededWarning):
        expansion.energy_coefficient(1, params, mc(samples=4_000, seed=25,
                                                   batch=2_000))


def test_mc_config_validation():
    with pytest.raises(ValueError):
        McConfig(samples_per_tree=1_000, batch_size=1_000)  # one batch
    with pytest.raises(ValueError):
        McConfig(tree_mode="fancy")
