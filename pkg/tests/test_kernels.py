import numpy as np
import pytest
from scipy import special

import nlgreen as ng
from nlgreen.kernels import cone_solid_angle_fraction, sphere_area


def test_stable_constant_reference_value():
    # Gamma(-1/2) = -2 sqrt(pi), so C(3,1) = 2 * Gamma(2) / (pi^1.5 * 2 sqrt(pi))
    direct = 2.0 * special.gamma(2.0) / (np.pi**1.5 * abs(special.gamma(-0.5)))
    assert ng.stable_constant(3, 1.0) == pytest.approx(direct, rel=1e-12)
    assert ng.stable_constant(3, 1.0) == pytest.approx(1.0 / np.pi**2, rel=1e-12)


def test_stable_constant_ratio_bounded_toward_two():
    ref = ng.stable_constant(3, 1.9) / (2.0 - 1.9)
    for a in np.linspace(1.9, 1.999, 25):
        ratio = ng.stable_constant(3, a) / (2.0 - a)
        assert ratio <= 3.0 * ref and ratio >= ref / 3.0


def test_stable_constant_over_gap_bounded_on_wide_range():
    vals = [ng.stable_constant(3, a) / (2.0 - a) for a in np.linspace(1.0, 1.999, 100)]
    mid = ng.stable_constant(3, 1.5) / 0.5
    assert max(vals) <= 3.0 * mid


def test_stable_kernel_profile_is_exact_power():
    k = ng.make_kernel(ng.KernelSpec("alpha_stable", 1.3, 3))
    rng = np.random.default_rng(0)
    z = rng.standard_normal((50, 3))
    r = np.linalg.norm(z, axis=1)
    np.testing.assert_allclose(k.profile(z) * r**4.3, ng.stable_constant(3, 1.3),
                               rtol=1e-12)


def test_cone_kernel_axis_anisotropy():
    spec = ng.KernelSpec("cone", 1.5, 3, aperture=0.9)
    k = ng.make_kernel(spec)
    e1 = np.array([1.0, 0.0, 0.0])
    e3 = np.array([0.0, 0.0, 1.0])
    assert float(k.intensity(np.zeros(3), e1)) == 0.0
    assert float(k.intensity(np.zeros(3), e3)) == pytest.approx(2.0 - 1.5, rel=1e-14)


def test_bounded_coeff_unit_coefficient_value():
    k = ng.make_kernel(ng.KernelSpec("bounded_coeff", 1.5, 3))
    val = float(k.intensity(np.zeros(3), np.array([2.0, 0.0, 0.0])))
    assert val == pytest.approx(0.5 * 2.0**-4.5, rel=1e-13)  # ~0.0220971


def test_bounded_coeff_symmetrizes_and_enforces_band():
    coeff = lambda x, y: 1.0 + 0.3 * np.sin(np.asarray(x)[..., 0] - np.asarray(y)[..., 0] + 0.4)
    spec = ng.KernelSpec("bounded_coeff", 1.5, 3, coefficient=coeff, coefficient_bound=2.0)
    k = ng.make_kernel(spec)
    assert k.symmetrized and not k.is_translation_invariant
    x = np.array([0.3, 0.0, 0.0])
    y = np.array([-0.2, 0.5, 0.1])
    assert float(k.intensity(x, y)) == float(k.intensity(y, x))

    bad = ng.make_kernel(ng.KernelSpec("bounded_coeff", 1.5, 3,
                                       coefficient=lambda x, y: 5.0,
                                       coefficient_bound=2.0))
    with pytest.raises(ng.NumericsError):
        bad.intensity(x, y)


def test_kernel_symmetry_exact_all_families():
    specs = [
        ng.KernelSpec("alpha_stable", 1.5, 3),
        ng.KernelSpec("cone", 1.5, 3, aperture=0.9),
        ng.KernelSpec("annulus_union", 1.5, 3, ratio=2.0),
        ng.KernelSpec("corner", 1.2, 2, corner_exponent=0.5, smoke_test=True),
    ]
    rng = np.random.default_rng(1)
    for spec in specs:
        k = ng.make_kernel(spec)
        x = rng.uniform(-1, 1, (10**4, spec.dim))
        y = x + rng.uniform(-2, 2, (10**4, spec.dim))
        drop = np.linalg.norm(y - x, axis=1) == 0
        x, y = x[~drop], y[~drop]
        assert np.all(k.intensity(x, y) == k.intensity(y, x))


def test_kernel_rejects_diagonal():
    k = ng.make_kernel(ng.KernelSpec("alpha_stable", 1.5, 3))
    with pytest.raises(ValueError):
        k.intensity(np.ones(3), np.ones(3))


def test_spec_validation():
    with pytest.raises(ng.ConfigurationError):
        ng.KernelSpec("alpha_stable", 2.5, 3)
    with pytest.raises(ng.ConfigurationError):
        ng.KernelSpec("cone", 1.5, 3, aperture=1.5)
    with pytest.raises(ng.ConfigurationError):
        ng.KernelSpec("annulus_union", 1.5, 3, ratio=0.9)
    with pytest.raises(ng.ConfigurationError):
        ng.KernelSpec("annulus_union", 1.5, 3, ratio=2.0, ball_fraction=0.9)
    with pytest.raises(ng.ConfigurationError):
        ng.KernelSpec("alpha_stable", 1.5, 2)  # needs smoke_test
    with pytest.raises(ng.ConfigurationError):
        ng.KernelSpec("corner", 1.2, 3)
    with pytest.raises(ng.ConfigurationError):
        ng.KernelSpec("bounded_coeff", 1.5, 3, coefficient_bound=0.5)


# ---------------------------------------------------------------------------
# tail integrals
# ---------------------------------------------------------------------------

def test_tail_mass_stable_closed_form():
    k = ng.make_kernel(ng.KernelSpec("alpha_stable", 1.0, 3))
    # C |S^2| R^-alpha / alpha = (1/pi^2)(4 pi) / 1 = 4/pi at R = 1
    assert ng.tail_mass(k, np.zeros(3), 1.0) == pytest.approx(4.0 / np.pi, rel=1e-12)


def test_tail_mass_decreases_to_zero():
    k = ng.make_kernel(ng.KernelSpec("alpha_stable", 1.5, 3))
    vals = [ng.tail_mass(k, np.zeros(3), R) for R in (0.5, 1.0, 2.0, 8.0, 64.0)]
    assert all(a > b for a, b in zip(vals, vals[1:]))
    assert vals[-1] < 1e-2 * vals[0]


def test_cone_tail_dominated_by_stable_envelope():
    rng = np.random.default_rng(2)
    alpha = 1.4
    kc = ng.make_kernel(ng.KernelSpec("cone", alpha, 3, aperture=0.9))
    ks = ng.make_kernel(ng.KernelSpec("alpha_stable", alpha, 3))
    scale = (2.0 - alpha) / ng.stable_constant(3, alpha)
    for _ in range(10):
        R = rng.uniform(0.2, 3.0)
        x = rng.uniform(-1, 1, 3)
        assert ng.tail_mass(kc, x, R) <= scale * ng.tail_mass(ks, x, R) * (1 + 1e-9)


def test_annulus_tail_exact_below_bound():
    k = ng.make_kernel(ng.KernelSpec("annulus_union", 1.5, 3, ratio=2.0))
    exact = ng.tail_mass(k, np.zeros(3), 0.5, exact=True)
    bound = ng.tail_mass(k, np.zeros(3), 0.5, exact=False)
    assert 0.0 < exact < bound
    # support of the union ends at (1+a)/2 + c scaled by a^0
    assert ng.tail_mass(k, np.zeros(3), 2.1, exact=True) == 0.0


def test_bounded_coeff_tail_numeric_matches_stable_shape():
    alpha = 1.5
    k = ng.make_kernel(ng.KernelSpec("bounded_coeff", alpha, 3))
    want = (2.0 - alpha) * sphere_area(3) * 1.0 ** (-alpha) / alpha
    assert ng.tail_mass(k, np.zeros(3), 1.0) == pytest.approx(want, rel=1e-6)


# ---------------------------------------------------------------------------
# condition certificates
# ---------------------------------------------------------------------------

def test_moment_condition_stable_closed_form():
    # int (r^2 ^ |z|^2) k = C |S^2| r^(2-alpha) (1/(2-alpha) + 1/alpha); at
    # d=3, alpha=1 the scaled constant is 8/pi independent of r
    k = ng.make_kernel(ng.KernelSpec("alpha_stable", 1.0, 3))
    plan = ng.SamplingPlan(n_r=12, r_min=0.05, r_max=4.0)
    rep = ng.check_condition(k, "moment", plan)
    assert rep.estimated_constant == pytest.approx(8.0 / np.pi, rel=1e-5)
    assert rep.passed and rep.budget is None


def test_pointwise_condition_stable_exact_ratio():
    alpha = 1.3
    k = ng.make_kernel(ng.KernelSpec("alpha_stable", alpha, 3))
    rep = ng.check_condition(k, "pointwise", ng.SamplingPlan(n_pairs=128))
    assert rep.estimated_constant == pytest.approx(
        ng.stable_constant(3, alpha) / (2.0 - alpha), rel=1e-12)


def test_pointwise_condition_annulus_is_one():
    k = ng.make_kernel(ng.KernelSpec("annulus_union", 1.5, 3, ratio=2.0))
    rep = ng.check_condition(k, "pointwise", ng.SamplingPlan(n_pairs=128))
    assert rep.estimated_constant == pytest.approx(1.0, rel=1e-12)


def test_levy_condition_finite():
    for family, kw in (("alpha_stable", {}), ("cone", {"aperture": 0.9}),
                       ("annulus_union", {"ratio": 2.0})):
        k = ng.make_kernel(ng.KernelSpec(family, 1.5, 3, **kw))
        rep = ng.check_condition(k, "levy", ng.SamplingPlan())
        assert np.isfinite(rep.estimated_constant) and rep.estimated_constant > 0


def test_moment_constant_from_pointwise_constant():
    # pointwise constant c_K forces the moment constant <= 2 |S^(d-1)| c_K / alpha;
    # equality holds for the stable kernel
    surf = sphere_area(3)
    for family, kw in (("alpha_stable", {}), ("cone", {"aperture": 0.9})):
        alpha = 1.25
        k = ng.make_kernel(ng.KernelSpec(family, alpha, 3, **kw))
        plan = ng.SamplingPlan(n_r=8, r_min=0.1, r_max=1.0, n_pairs=64)
        c_k = ng.check_condition(k, "pointwise", plan).estimated_constant
        c_u = ng.check_condition(k, "moment", plan).estimated_constant
        bound = 2.0 * surf * c_k / alpha
        assert c_u <= bound * (1 + 1e-5)
        if family == "alpha_stable":
            assert c_u == pytest.approx(bound, rel=1e-4)


def _brute_force_ujs_cone(spec, n=10):
    """Independent maximization of k(x,y) / avg_{B_r(x)} k on a 10^3 grid."""
    k = ng.make_kernel(spec)
    axis = spec.cone_axis
    # dense midpoint cloud for the ball average
    m = 12
    s = (np.arange(m) + 0.5) / m * 2.0 - 1.0
    g = np.stack(np.meshgrid(s, s, s, indexing="ij"), axis=-1).reshape(-1, 3)
    g = g[np.linalg.norm(g, axis=1) <= 1.0]
    best = 0.0
    x = np.zeros(3)
    for ct in np.linspace(0.905, 1.0, n):  # directions inside the cone
        st = np.sqrt(max(0.0, 1.0 - ct * ct))
        w = ct * axis + st * np.array([1.0, 0.0, 0.0])
        for dist in np.exp(np.linspace(np.log(0.1), np.log(1.0), n)):
            y = x + dist * w
            kxy = float(np.atleast_1d(k.intensity(x, y))[0])
            if kxy == 0.0:
                continue
            for frac in np.linspace(0.1, 1.0, n):
                r = 0.5 * dist * frac
                pts = x + r * g
                avg = float(np.mean(k.intensity(pts, np.broadcast_to(y, pts.shape))))
                if avg > 0:
                    best = max(best, kxy / avg)
    return best


def test_ujs_cone_finite_with_brute_force_budget():
    spec = ng.KernelSpec("cone", 1.5, 3, aperture=0.9)
    budget = 1.10 * _brute_force_ujs_cone(spec)
    plan = ng.SamplingPlan(n_r=8, n_pairs=80, n_ball=512, budget=budget)
    rep = ng.check_condition(ng.make_kernel(spec), "ujs", plan)
    assert np.isfinite(rep.estimated_constant)
    assert rep.passed
    # the sampler should land within a factor of the brute-force value
    assert rep.estimated_constant >= 0.25 * budget


def test_ujs_axis_witness_is_finite():
    spec = ng.KernelSpec("cone", 1.5, 3, aperture=0.9)
    k = ng.make_kernel(spec)
    x = np.zeros(3)
    y = np.array([0.0, 0.0, 0.6])
    r = 0.3
    pts = x + r * np.random.default_rng(0).uniform(-1, 1, (4000, 3))
    pts = pts[np.linalg.norm(pts - x, axis=1) <= r]
    avg = float(np.mean(k.intensity(pts, np.broadcast_to(y, pts.shape))))
    ratio = float(np.atleast_1d(k.intensity(x, y))[0]) / avg
    assert np.isfinite(ratio) and ratio > 0


def test_cone_support_fraction_monte_carlo():
    # {k >= lambda (2-alpha)|z|^(-d-alpha)} with lambda <= 1 is exactly the
    # cone, whose ball fraction equals its solid-angle fraction
    spec = ng.KernelSpec("cone", 1.5, 3, aperture=0.9)
    k = ng.make_kernel(spec)
    rng = np.random.default_rng(4)
    x = np.array([0.2, -0.1, 0.3])
    pts = x + rng.uniform(-1, 1, (2 * 10**5, 3))
    pts = pts[np.linalg.norm(pts - x, axis=1) <= 1.0]
    pts = pts[np.linalg.norm(pts - x, axis=1) > 0]
    envelope = 0.5 * np.linalg.norm(pts - x, axis=1) ** -4.5
    frac = np.mean(k.intensity(np.broadcast_to(x, pts.shape), pts) >= envelope)
    expected = cone_solid_angle_fraction(0.9, 3)
    assert expected == pytest.approx(1.0 - 0.9, rel=1e-12)
    assert frac >= expected * 0.98


def test_unknown_condition_rejected():
    k = ng.make_kernel(ng.KernelSpec("alpha_stable", 1.5, 3))
    with pytest.raises(ng.ConfigurationError):
        ng.check_condition(k, "nonsense", ng.SamplingPlan())
