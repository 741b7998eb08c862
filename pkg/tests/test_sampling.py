import numpy as np
import pytest

from causalcost.model import (
    CausalModel,
    DirectInfluence,
    InteractionInfluence,
    evaluate_overhead,
    overhead_bounds,
)
from causalcost.sampling import (
    LATIN_HYPERCUBE,
    MONTE_CARLO,
    RandomSeed,
    SamplePlan,
    draw_uniforms,
    simulate_overhead,
    triangular_inverse_cdf,
)

from test_model import factor, one_factor_model, random_model_ratings_draw, tri


def triangular_cdf(params, x):
    """Independent closed-form CDF used as the inversion oracle."""
    a, c, b = params.min, params.likely, params.max
    if x <= a:
        return 0.0
    if x >= b:
        return 1.0
    if x <= c:
        return (x - a) ** 2 / ((b - a) * (c - a))
    return 1.0 - (b - x) ** 2 / ((b - a) * (b - c))


class TestTriangularInverseCdf:
    def test_degenerate_point(self):
        assert triangular_inverse_cdf(tri(0.05, 0.05, 0.05), 0.7) == 0.05

    def test_symmetric_mode_at_half(self):
        assert triangular_inverse_cdf(tri(0, 10, 20), 0.5) == pytest.approx(10.0, abs=1e-12)

    def test_golden_value_against_cdf_oracle(self):
        x = triangular_inverse_cdf(tri(0, 10, 20), 0.125)
        assert x == pytest.approx(5.0, abs=1e-12)
        assert triangular_cdf(tri(0, 10, 20), x) == pytest.approx(0.125, abs=1e-12)

    def test_roundtrip_with_cdf_oracle(self):
        rng = np.random.default_rng(3)
        for _ in range(200):
            a, c, b = np.sort(rng.uniform(-0.5, 1.5, size=3))
            params = tri(a, c, b)
            u = float(rng.random())
            x = triangular_inverse_cdf(params, u)
            assert a <= x <= b
            assert triangular_cdf(params, x) == pytest.approx(u, abs=1e-9)

    def test_mode_at_endpoints(self):
        assert triangular_inverse_cdf(tri(0, 0, 10), 0.0) == pytest.approx(0.0)
        assert triangular_inverse_cdf(tri(0, 0, 10), 1.0) == pytest.approx(10.0)
        assert triangular_inverse_cdf(tri(0, 10, 10), 0.0) == pytest.approx(0.0)
        assert triangular_inverse_cdf(tri(0, 10, 10), 1.0) == pytest.approx(10.0)

    def test_u_out_of_range(self):
        with pytest.raises(ValueError):
            triangular_inverse_cdf(tri(0, 1, 2), -0.1)
        with pytest.raises(ValueError):
            triangular_inverse_cdf(tri(0, 1, 2), 1.1)

    def test_vectorized_matches_scalar(self):
        params = tri(0.0, 0.1, 0.4)
        us = np.linspace(0, 1, 17)
        vec = triangular_inverse_cdf(params, us)
        for u, x in zip(us, vec):
            assert triangular_inverse_cdf(params, float(u)) == x


class TestDrawUniforms:
    def test_lhs_stratification_small(self):
        plan = SamplePlan(LATIN_HYPERCUBE, 4)
        u = draw_uniforms(plan, 0, RandomSeed(1))
        assert sorted(np.floor(u * 4).astype(int)) == [0, 1, 2, 3]

    def test_lhs_single_stratum(self):
        u = draw_uniforms(SamplePlan(LATIN_HYPERCUBE, 1), 0, RandomSeed(1))
        assert u.shape == (1,)
        assert 0.0 <= u[0] < 1.0

    def test_lhs_marginal_exactness(self):
        n = 128
        plan = SamplePlan(LATIN_HYPERCUBE, n)
        for var in range(3):
            u = draw_uniforms(plan, var, RandomSeed(9))
            occupied = np.floor(u * n).astype(int)
            assert sorted(occupied) == list(range(n))

    def test_mc_determinism(self):
        plan = SamplePlan(MONTE_CARLO, 1000)
        a = draw_uniforms(plan, 2, RandomSeed(77))
        b = draw_uniforms(plan, 2, RandomSeed(77))
        assert a.tobytes() == b.tobytes()

    def test_streams_differ_across_variables_and_seeds(self):
        plan = SamplePlan(MONTE_CARLO, 16)
        base = draw_uniforms(plan, 0, RandomSeed(5))
        assert not np.array_equal(base, draw_uniforms(plan, 1, RandomSeed(5)))
        assert not np.array_equal(base, draw_uniforms(plan, 0, RandomSeed(6)))
        assert not np.array_equal(base, draw_uniforms(plan, 0, RandomSeed(5).derive("fold:x")))

    def test_derive_is_pure(self):
        s = RandomSeed(3).derive("project:p1")
        t = RandomSeed(3).derive("project:p1")
        assert s == t
        assert s.generator("var:0").random(4).tobytes() == t.generator("var:0").random(4).tobytes()


class TestSamplePlanAndSeed:
    def test_plan_validation(self):
        with pytest.raises(ValueError):
            SamplePlan("bogus", 10)
        with pytest.raises(ValueError):
            SamplePlan(MONTE_CARLO, 0)

    def test_seed_range(self):
        with pytest.raises(ValueError):
            RandomSeed(-1)
        with pytest.raises(ValueError):
            RandomSeed(2**64)
        RandomSeed(2**64 - 1)


class TestSimulateOverhead:
    def test_all_nominal_gives_zeros(self):
        model = one_factor_model()
        for method in (MONTE_CARLO, LATIN_HYPERCUBE):
            dist = simulate_overhead(model, {"f1": 0}, SamplePlan(method, 50), RandomSeed(0))
            assert np.all(dist.samples == 0.0)

    def test_degenerate_triangular_is_constant(self):
        model = one_factor_model(tri(0.30, 0.30, 0.30))
        dist = simulate_overhead(model, {"f1": 3}, SamplePlan(LATIN_HYPERCUBE, 40), RandomSeed(0))
        assert np.allclose(dist.samples, 0.30)

    def test_mc_mean_converges_to_analytic(self):
        model = one_factor_model(tri(0.0, 0.10, 0.20))
        dist = simulate_overhead(model, {"f1": 3}, SamplePlan(MONTE_CARLO, 100_000), RandomSeed(1))
        assert abs(dist.samples.mean() - 0.10) <= 0.002

    def test_sorted_and_immutable(self):
        model = one_factor_model(tri(0.0, 0.1, 0.3))
        dist = simulate_overhead(model, {"f1": 2}, SamplePlan(MONTE_CARLO, 100), RandomSeed(4))
        assert np.all(np.diff(dist.samples) >= 0)
        with pytest.raises(ValueError):
            dist.samples[0] = 99.0

    def test_determinism_byte_identical(self):
        model = CausalModel(
            factors=(factor("f1"), factor("f2")),
            direct=(
                DirectInfluence("f1", tri(0.0, 0.2, 0.5)),
                DirectInfluence("f2", tri(-0.1, 0.0, 0.4)),
            ),
            interactions=(InteractionInfluence("f1", "f2", -1, tri(0.0, 0.1, 0.2)),),
        )
        ratings = {"f1": 2, "f2": 3}
        for method in (MONTE_CARLO, LATIN_HYPERCUBE):
            plan = SamplePlan(method, 2048)
            a = simulate_overhead(model, ratings, plan, RandomSeed(123))
            b = simulate_overhead(model, ratings, plan, RandomSeed(123))
            assert a.samples.tobytes() == b.samples.tobytes()

    def test_samples_respect_corner_bounds(self):
        rng = np.random.default_rng(21)
        for trial in range(20):
            model, ratings, _ = random_model_ratings_draw(rng)
            lo, hi = overhead_bounds(model, ratings)
            plan = SamplePlan(LATIN_HYPERCUBE if trial % 2 else MONTE_CARLO, 256)
            dist = simulate_overhead(model, ratings, plan, RandomSeed(trial))
            assert dist.samples.min() >= lo - 1e-12
            assert dist.samples.max() <= hi + 1e-12

    def test_single_sample_matches_direct_evaluation(self):
        # One MC iteration must equal evaluate_overhead on the same draw.
        model = CausalModel(
            factors=(factor("f1"), factor("f2")),
            direct=(
                DirectInfluence("f1", tri(0.0, 0.2, 0.5)),
                DirectInfluence("f2", tri(0.1, 0.2, 0.4)),
            ),
            interactions=(InteractionInfluence("f2", "f1", 1, tri(0.0, 0.05, 0.1)),),
        )
        ratings = {"f1": 1, "f2": 2}
        seed = RandomSeed(99)
        plan = SamplePlan(MONTE_CARLO, 1)
        dist = simulate_overhead(model, ratings, plan, seed)
        draw = {}
        for index, inf in enumerate(model.canonical_influences()):
            u = draw_uniforms(plan, index, seed)[0]
            draw[inf.key] = triangular_inverse_cdf(inf.extreme_overhead, float(u))
        assert evaluate_overhead(model, ratings, draw) == dist.samples[0]

    def test_invalid_model_rejected(self):
        model = CausalModel(factors=(factor("f1"),), direct=(DirectInfluence("f1", tri(1, 0, 2)),))
        with pytest.raises(ValueError, match="invalid"):
            simulate_overhead(model, {"f1": 1}, SamplePlan(MONTE_CARLO, 4), RandomSeed(0))

    def test_accepts_bare_int_seed(self):
        model = one_factor_model(tri(0.0, 0.1, 0.3))
        a = simulate_overhead(model, {"f1": 2}, SamplePlan(MONTE_CARLO, 32), 7)
        b = simulate_overhead(model, {"f1": 2}, SamplePlan(MONTE_CARLO, 32), RandomSeed(7))
        assert a.samples.tobytes() == b.samples.tobytes()
