import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from ouriesz.experiments import (
    BMO,
    BOUNDED,
    H1,
    INCONCLUSIVE,
    LOG_GROWTH,
    CounterexampleGeometry,
    DegenerateLadderError,
    GrowthSeries,
    MissingVerdictError,
    QuadratureNonConvergence,
    Verdict,
    _r1_inner,
    _self_convergent,
    bmo_divergence_s_star,
    classify_growth,
    default_threshold,
    duality_transfer_table,
    is_flat,
    l1_norm_riesz_on_atom,
    ladder_functional,
    lower_bound_functional_r1,
    r1_lower_bound_integrand,
    reflected_s_star_integrand,
    run_ladder,
    run_table,
    s_star_h1_functional,
    s_star_reflection_difference,
    verify_pointwise_bounds,
)
from ouriesz.kernels import SingularInputError, kernel_batch
from ouriesz.quadrature import DEFAULT_SPEC, QuadratureSpec, gauss_legendre
from ouriesz.spaces import AdmissibleRegion, GaussianAtom, make_halves_atom

GEOMS = [CounterexampleGeometry(xi) for xi in (8.0, 16.0, 64.0, 100.5)]


# ---------------------------------------------------------------- geometry

def test_geometry_rejects_bad_input():
    with pytest.raises(ValueError):
        CounterexampleGeometry(8.0, dim=1)
    with pytest.raises(ValueError):
        CounterexampleGeometry(1.5)


@pytest.mark.parametrize("geom", GEOMS, ids=lambda g: f"xi{g.xi:g}")
def test_geometry_invariants_on_samples(geom):
    x, y, r = geom.sample(10_000, np.random.default_rng(0))
    assert np.all(geom.in_a_q(x))
    # A_Q misses 2Q
    assert not np.any(geom.cube.contains(x, 2.0))
    # y in Q+
    assert np.all(geom.cube.contains(y)) and np.all(y[:, 1] >= 0)
    # I(x1) inside (1/2, 1)
    assert np.all((r > 0.5) & (r < 1.0))
    lo, hi = geom.interval(x[:, 0])
    assert np.all(lo > 0.5) and np.all(hi < 1.0)
    # 4/xi < 2 eta < xi - x1
    eta = geom.eta(x[:, 0])
    assert np.all(4.0 / geom.xi < 2 * eta) and np.all(2 * eta < geom.xi - x[:, 0])


def test_a_q_nodes_cover_a_q():
    geom = CounterexampleGeometry(16.0)
    pts, w = geom.a_q_nodes(8)
    assert np.all(geom.in_a_q(pts))
    # area of A_Q: int_{4/xi}^{1} (eta/2) du with eta = sqrt(u/xi)
    u0 = 4.0 / geom.xi
    area = (1.0 - u0**1.5) / (3.0 * math.sqrt(geom.xi))
    assert w.sum() == pytest.approx(area, rel=1e-10)
    pts3, w3 = CounterexampleGeometry(16.0, dim=3).a_q_nodes(6)
    assert np.all(CounterexampleGeometry(16.0, dim=3).in_a_q(pts3))


def test_half_gamma_weights_sum_to_half():
    geom = CounterexampleGeometry(8.0)
    total = sum(geom.half_gamma_nodes(s, 8)[1].sum() for s in (+1, -1))
    assert total == pytest.approx(1.0, rel=1e-12)


def test_degenerate_interval_contributes_nothing():
    geom = CounterexampleGeometry(8.0)
    lo, hi = geom.interval(geom.xi)
    assert lo == hi
    ys, wy = geom.half_gamma_nodes(+1, 6)
    x = np.array([[geom.xi, 0.0], [geom.xi - 1.0, 0.5]])
    inner = _r1_inner(geom, x, ys, wy, 12, check_sign=True)
    assert inner[0] == 0.0 and inner[1] > 0


@given(st.floats(8.0, 200.0), st.integers(0, 2**32 - 1))
def test_integrands_positive_on_samples(xi, seed):
    geom = CounterexampleGeometry(xi)
    x, y, r = geom.sample(200, np.random.default_rng(seed))
    assert np.all(r1_lower_bound_integrand(geom, x, y, r) > 0)
    # S* reflection: y in A_Q, x in Q+, any r in (0, 1)
    assert np.all(reflected_s_star_integrand(geom, y, x, r) >= 0)


# ---------------------------------------------------------------- counterexample functionals

def test_r1_lower_bound_grows_and_is_deterministic():
    a = lower_bound_functional_r1(CounterexampleGeometry(8.0))
    b = lower_bound_functional_r1(CounterexampleGeometry(64.0))
    assert 0 < a < b
    assert lower_bound_functional_r1(CounterexampleGeometry(8.0)) == a
    with pytest.raises(ValueError):
        lower_bound_functional_r1(CounterexampleGeometry(4.0))


def test_self_convergence_guard():
    with pytest.raises(QuadratureNonConvergence):
        _self_convergent(lambda sp: float(sp.nodes), DEFAULT_SPEC, 1e-4)
    assert _self_convergent(lambda sp: 2.0, DEFAULT_SPEC, 1e-4) == 2.0


def test_s_star_divergence_equals_signed_integral_of_kernel_form():
    # gamma(Q)^{-1} int_{Q+} (g(x) - g(x~)) dgamma = gamma(Q)^{-1} int_Q sign(x2) g dgamma by symmetry of gamma,
    # with g = S*_1 1_{A_Q} evaluated from the kernel directly
    geom = CounterexampleGeometry(8.0)
    ys, wy = geom.a_q_nodes(8)
    g_at = {}
    for sign in (+1, -1):
        xs, wx = geom.half_gamma_nodes(sign, 8)
        k = kernel_batch("Sstar", np.repeat(xs, ys.shape[0], axis=0), np.tile(ys, (xs.shape[0], 1)), 1, weight="y")
        g = math.pi ** -1 * k.reshape(xs.shape[0], ys.shape[0]) @ wy
        g_at[sign] = (xs, wx, g)
    signed = float(g_at[1][1] @ g_at[1][2] - g_at[-1][1] @ g_at[-1][2])
    value = bmo_divergence_s_star(geom)
    assert value == pytest.approx(signed, rel=1e-3)
    # and it is bounded by the mean oscillation of g over Q
    w = np.concatenate([g_at[s][1] for s in (1, -1)])
    g = np.concatenate([g_at[s][2] for s in (1, -1)])
    mean = float(w @ g) / w.sum()
    oscillation = float(w @ np.abs(g - mean)) / w.sum()
    assert value <= oscillation * (1 + 1e-3)


def test_reflection_difference_pointwise_matches_kernel():
    geom = CounterexampleGeometry(8.0)
    x = np.array([[8.02, 0.05], [7.95, 0.1]])
    xr = x * np.array([1.0, -1.0])
    ys, wy = geom.a_q_nodes(8)
    k = kernel_batch("Sstar", np.repeat(np.concatenate([x, xr]), ys.shape[0], axis=0),
                     np.tile(ys, (4, 1)), 1, weight="y").reshape(4, -1)
    g = k @ wy / math.pi
    want = g[:2] - g[2:]
    got = s_star_reflection_difference(geom, x, QuadratureSpec(outer_nodes=16))
    np.testing.assert_allclose(got, want, rtol=1e-4)


def test_s_star_divergence_increases():
    assert 0 < bmo_divergence_s_star(CounterexampleGeometry(8.0)) < bmo_divergence_s_star(CounterexampleGeometry(32.0))
    with pytest.raises(ValueError):
        bmo_divergence_s_star(CounterexampleGeometry(4.0))


def test_l1_norm_on_a_q_grows():
    a = l1_norm_riesz_on_atom(CounterexampleGeometry(8.0))
    b = l1_norm_riesz_on_atom(CounterexampleGeometry(32.0))
    assert 0 < a < b
    # the lower bound functional is a lower bound up to the dropped constants; both are positive
    assert lower_bound_functional_r1(CounterexampleGeometry(8.0)) > 0


def test_l1_norm_zero_atom_and_refusal():
    base = make_halves_atom(8.0, 2)
    zero = GaussianAtom(base.support, lambda p: np.zeros(p.shape[:-1]), base.log_amplitude, base.pieces)
    assert l1_norm_riesz_on_atom(CounterexampleGeometry(8.0), atom=zero) == 0.0
    assert l1_norm_riesz_on_atom(4.0, atom=GaussianAtom(
        AdmissibleRegion("cube", (4.0,), 0.25), lambda p: np.zeros(p.shape[:-1]), 0.0,
        ((np.array([3.75]), np.array([4.25])),))) == 0.0
    with pytest.raises(ValueError):
        l1_norm_riesz_on_atom(CounterexampleGeometry(8.0), kind="M")
    with pytest.raises(ValueError):
        l1_norm_riesz_on_atom(8.0, atom=GaussianAtom.exceptional(1))


def test_l1_norm_d1_positive():
    vals = [l1_norm_riesz_on_atom(xi) for xi in (2.0, 4.0)]
    assert all(v > 0 and math.isfinite(v) for v in vals)


# ---------------------------------------------------------------- pointwise bounds

FROZEN_RANGES = {
    # xi = 64, d = 2, 10^4 samples, seed 0
    "one_minus_r2": (1.56896, 2.45298),
    "y1_minus_rx1": (1.63798, 2.37319),
    "exp_phi": (0.423465, 0.993742),
    "tau_ratio": (0.766705, 2.31364),
    "tau": (7.63246e-06, 0.836042),
}


def test_pointwise_bounds_at_64():
    rep = verify_pointwise_bounds(CounterexampleGeometry(64.0), 10_000, 0)
    assert rep.passed, rep.flags
    for key, (lo, hi) in FROZEN_RANGES.items():
        got_lo, got_hi = rep.ranges[key]
        assert got_lo == pytest.approx(lo, rel=1e-5), key
        assert got_hi == pytest.approx(hi, rel=1e-5), key
    # 1 - r lies in (3/4, 5/4) eta^2 and 1 + r in (3/2, 2), so the ratio lies in (9/8, 5/2)
    lo, hi = rep.ranges["one_minus_r2"]
    assert 1.125 < lo and hi < 2.5


@pytest.mark.parametrize("xi", [16.0, 32.0, 128.0])
@pytest.mark.parametrize("seed", [0, 1])
def test_provable_pointwise_flags(xi, seed):
    flags = verify_pointwise_bounds(CounterexampleGeometry(xi), 2000, seed).flags
    assert flags["y1_minus_rx1_at_least_half"]
    assert flags["tau_below_four_thirds"]
    assert flags["positive_and_finite"]


@pytest.mark.parametrize("xi", [16.0, 64.0, 1e4])
def test_tau_corner_exceeds_one_but_not_four_thirds(xi):
    # x1 -> xi - 4/xi, x2 = eta, y2 = 1/xi, r at the top of I(x1)
    geom = CounterexampleGeometry(xi)
    x1 = xi - 4.0 / xi
    eta = float(geom.eta(x1))
    _, hi = geom.interval(x1)
    tau = float(geom.tau(hi, eta, 1.0 / xi))
    assert 1.0 < tau < 4.0 / 3.0


def test_pointwise_report_is_seeded():
    g = CounterexampleGeometry(32.0)
    assert verify_pointwise_bounds(g, 500, 3) == verify_pointwise_bounds(g, 500, 3)


# ---------------------------------------------------------------- S* on H1

@pytest.mark.slow
@pytest.mark.parametrize("xi", [2.0, 4.0])
def test_s_star_functional_below_majorant(xi):
    ball = AdmissibleRegion.maximal_ball((xi, 0.0))
    b = s_star_h1_functional(ball)
    assert 0 < b.functional <= b.majorant
    assert b.majorant == pytest.approx(b.majorant_below_r0 + b.majorant_above_r0)
    assert b.r0 == 1.0 - ball.radius**2 / 4


@pytest.mark.slow
def test_s_star_functional_small_balls_stay_bounded():
    vals = []
    for rb in (0.1, 0.01):
        b = s_star_h1_functional(AdmissibleRegion("ball", (1.0, 0.0), rb))
        assert b.functional <= b.majorant
        vals.append(b.functional)
    # scale invariance of the local singularity: no decay to 0, no blow-up either
    assert 1.0 < min(vals) and max(vals) < 10.0


# ---------------------------------------------------------------- classification

def test_classify_constant_and_exact_log():
    xis = (8.0, 16.0, 32.0, 64.0)
    flat = GrowthSeries(xis, (3.0,) * 4)
    v = classify_growth(flat)
    assert v.classification == BOUNDED and v.slope == 0.0 and flat.r2 == 1.0
    assert is_flat(flat)
    log = GrowthSeries(xis, tuple(0.7 * math.log(x) for x in xis))
    v = classify_growth(log)
    assert v.classification == LOG_GROWTH and v.letter == "U"
    assert log.r2 == pytest.approx(1.0, abs=1e-14) and log.slope == pytest.approx(0.7)
    assert log.increasing and not is_flat(log)


def test_classify_noisy_growth_below_r2_is_bounded():
    s = GrowthSeries((1.0, 2.0, 4.0, 8.0), (1.0, 10.0, 0.5, 12.0))
    assert s.r2 < 0.9
    assert classify_growth(s, slope_threshold=0.0).classification == BOUNDED


def test_threshold_override():
    s = GrowthSeries((8.0, 16.0, 32.0), (1.0, 1.05, 1.1))
    assert default_threshold(s) == pytest.approx(0.1 * 1.05 / math.log(2))
    assert classify_growth(s).classification == BOUNDED
    assert classify_growth(s, slope_threshold=0.01).classification == LOG_GROWTH


@pytest.mark.parametrize("xis,vals", [
    ((8.0, 16.0), (1.0, 2.0)),
    ((8.0, 16.0, 16.0), (1.0, 2.0, 3.0)),
    ((8.0, 16.0, 32.0), (1.0, 2.0)),
    ((8.0, 16.0, 32.0), (1.0, float("nan"), 3.0)),
    ((-1.0, 16.0, 32.0), (1.0, 2.0, 3.0)),
])
def test_degenerate_ladders(xis, vals):
    with pytest.raises(DegenerateLadderError):
        GrowthSeries(xis, vals)


def test_run_ladder_rejects_short_ladder():
    with pytest.raises(DegenerateLadderError):
        run_ladder("R", H1, 2, (8.0, 16.0))
    with pytest.raises(DegenerateLadderError):
        run_table(2, (8.0, 16.0))
    with pytest.raises(ValueError):
        run_table(3)
    with pytest.raises(ValueError):
        ladder_functional("S", H1, 2)


# ---------------------------------------------------------------- duality

def _v(op, direction, cls, d=2):
    return Verdict(op, d, direction, cls, 0.0, 1.0, 0.0)


def test_duality_fills_expected_pattern():
    computed = [_v("R", H1, LOG_GROWTH), _v("Sstar", BMO, LOG_GROWTH), _v("Sstar", H1, BOUNDED), _v("R", BMO, BOUNDED)]
    t = duality_transfer_table(2, computed)
    assert t.pattern() == {H1: "U U B B", BMO: "B B U U"}
    assert t.cells[("Rstar", BMO)].classification == LOG_GROWTH
    assert t.cells[("Rstar", BMO)].source == "duality:R"
    assert t.cells[("S", BMO)].classification == BOUNDED
    assert set(t.residuals) == {"R/Rstar", "S/Sstar"}
    assert max(t.residuals.values()) <= 1e-10
    assert "U" in t.text() and t.text().startswith("d = 2")


def test_duality_all_bounded_in_d1():
    computed = [_v(op, dr, BOUNDED, 1) for op, dr in (("R", H1), ("Sstar", BMO), ("Sstar", H1), ("R", BMO))]
    assert duality_transfer_table(1, computed).pattern() == {H1: "B B B B", BMO: "B B B B"}


def test_duality_inconclusive_propagates():
    computed = [_v("R", H1, INCONCLUSIVE), _v("Sstar", BMO, LOG_GROWTH), _v("Sstar", H1, BOUNDED), _v("R", BMO, BOUNDED)]
    t = duality_transfer_table(2, computed)
    assert t.cells[("Rstar", BMO)].letter == "?"


def test_duality_missing_and_mismatched_verdicts():
    with pytest.raises(MissingVerdictError):
        duality_transfer_table(2, [_v("R", H1, LOG_GROWTH)])
    with pytest.raises(ValueError):
        duality_transfer_table(2, [_v("R", H1, LOG_GROWTH, d=1)])


def test_duality_table_is_deterministic():
    computed = [_v("R", H1, LOG_GROWTH), _v("Sstar", BMO, LOG_GROWTH), _v("Sstar", H1, BOUNDED), _v("R", BMO, BOUNDED)]
    assert duality_transfer_table(2, computed, seed=4) == duality_transfer_table(2, computed, seed=4)
