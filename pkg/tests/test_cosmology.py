import numpy as np
import pytest

from ricci_dynamo.cosmology import (
    DECAY,
    DEGENERATE_EIGENVALUES,
    FAST_DYNAMO,
    MARGINAL_EINSTEIN_STATIC,
    CosmologicalState,
    classify,
    contraction_supports_dynamo,
    curvature_flow_history,
    curvature_from_matter,
    desitter_metric,
    desitter_reduced_operator,
    desitter_spatial,
    dynamo_bound,
)
from ricci_dynamo.dynamics import energy_rate, integrate
from ricci_dynamo.errors import NegativeDensity
from ricci_dynamo.geometry import Metric2


class TestCurvatureFromMatter:
    def test_static_candidate(self):
        state = curvature_from_matter(1.0, 0.0)
        assert state.ricci == 1.0

    def test_vacuum(self):
        assert curvature_from_matter(0.0, 0.0).ricci == 0.0

    def test_sum(self):
        assert curvature_from_matter(2.0, 1.0).ricci == 3.0

    def test_negative_density_rejected(self):
        with pytest.raises(NegativeDensity):
            curvature_from_matter(-0.5, 0.0)
        with pytest.raises(NegativeDensity):
            CosmologicalState(rho=-1.0, theta=0.0, ricci=0.0)


class TestClassify:
    def test_einstein_static(self):
        regime = classify(curvature_from_matter(1.0, 0.0))
        assert regime.label == MARGINAL_EINSTEIN_STATIC
        assert regime.real_part == pytest.approx(-1.0)

    def test_negative_curvature_fast(self):
        regime = classify(CosmologicalState(rho=1.0, theta=-2.0, ricci=-1.0))
        assert regime.label == FAST_DYNAMO
        assert regime.real_part == 2.0

    def test_expanding_positive_curvature_decays(self):
        regime = classify(CosmologicalState(rho=1.0, theta=1.0, ricci=1.0))
        assert regime.label == DECAY
        assert regime.real_part == pytest.approx(-1.0)
        assert 1.0 <= 3.0 * 1.0  # the decay bound rho <= 3 R holds here

    def test_degeneracy_takes_precedence(self):
        regime = classify(CosmologicalState(rho=8.0, theta=-3.0, ricci=11.0))
        assert regime.label == DEGENERATE_EIGENVALUES
        assert regime.discriminant == 0.0

    def test_decay_bound_respected(self):
        # rho <= 3 R with nonzero theta and nondegenerate discriminant
        # can never classify as fast
        rng = np.random.default_rng(40)
        for _ in range(200):
            ricci = rng.uniform(0.05, 3.0)
            rho = rng.uniform(0.0, 3.0 * ricci)
            theta = rng.uniform(0.1, 2.0)
            state = CosmologicalState(rho=rho, theta=theta, ricci=ricci)
            regime = classify(state)
            if regime.label == DEGENERATE_EIGENVALUES:
                continue
            assert regime.label != FAST_DYNAMO

    def test_regime_codes_are_stable(self):
        assert classify(curvature_from_matter(1.0, 0.0)).code == 2
        assert classify(CosmologicalState(rho=1.0, theta=-2.0, ricci=-1.0)).code == 1


class TestDeSitterMetric:
    def test_initial_time(self):
        assert np.array_equal(desitter_metric(1.0, 0.0), np.diag([-1.0, 1.0, 1.0]))

    def test_expansion_factor(self):
        m = desitter_metric(1.0, 1.0)
        assert m[1, 1] == pytest.approx(2.718281828459045, rel=1e-15)
        assert m[2, 2] == m[1, 1]

    def test_signature(self):
        rng = np.random.default_rng(41)
        for _ in range(50):
            lam = rng.uniform(-2.0, 2.0)
            t = rng.uniform(-3.0, 3.0)
            m = desitter_metric(lam, t)
            assert m[0, 0] == -1.0
            spatial = desitter_spatial(lam, t)
            assert spatial.det > 0.0 and spatial.g[0, 0] > 0.0
            assert spatial.g[0, 0] == pytest.approx(m[1, 1], rel=1e-15)


class TestDynamoBound:
    def test_marginal_line(self):
        verdict = dynamo_bound(1.0, 2.0)
        assert verdict.marginal
        assert not verdict.supports_fast_dynamo

    def test_expanding_supports(self):
        verdict = dynamo_bound(1.0, 0.0)
        assert verdict.supports_fast_dynamo
        assert verdict.growth == pytest.approx(2.0)

    def test_dilution_decays(self):
        verdict = dynamo_bound(0.0, 1.0)
        assert not verdict.supports_fast_dynamo
        assert verdict.growth == pytest.approx(-1.0)

    def test_sign_agrees_with_fitted_energy_rate(self):
        # 5 x 5 sweep: the fitted energy rate of the expanding-model
        # generator and the bound's sign always agree
        for lam in np.linspace(-1.0, 1.0, 5):
            for theta in np.linspace(-2.0, 2.0, 5):
                verdict = dynamo_bound(lam, theta)
                traj = integrate(desitter_reduced_operator(lam, theta),
                                 [1.0, 0.0], 2.0, 0.1)
                history = energy_rate(traj, Metric2.identity())
                if verdict.marginal:
                    assert abs(history.fitted_rate) <= 1e-6
                else:
                    assert (history.fitted_rate > 0.0) == verdict.supports_fast_dynamo
                    assert history.fitted_rate == pytest.approx(
                        2.0 * verdict.growth, rel=0.01
                    )


class TestContractionCheck:
    def test_contracting_universe_supports(self):
        assert contraction_supports_dynamo(curvature_from_matter(1.0, -2.0))

    def test_expanding_universe_decays(self):
        assert not contraction_supports_dynamo(curvature_from_matter(1.0, 1.0))

    def test_empty_static_is_not_fast(self):
        assert not contraction_supports_dynamo(curvature_from_matter(0.0, 0.0))

    def test_rescaling_invariance(self):
        rng = np.random.default_rng(42)
        for _ in range(100):
            rho = rng.uniform(0.0, 2.0)
            theta = rng.uniform(-3.0, 3.0)
            a = rng.uniform(0.1, 10.0)
            base = contraction_supports_dynamo(curvature_from_matter(rho, theta))
            scaled = contraction_supports_dynamo(curvature_from_matter(a * rho, a * theta))
            assert base == scaled

    def test_requires_matter_relation(self):
        with pytest.raises(ValueError):
            contraction_supports_dynamo(CosmologicalState(rho=1.0, theta=0.0, ricci=5.0))


class TestCurvatureUnderFlow:
    def test_positive_curvature_stays_positive(self):
        times, lams = curvature_flow_history(1.0, 0.4, 200)
        assert lams[0] == pytest.approx(1.0)
        assert np.all(lams > 0.0)
        assert lams[-1] == pytest.approx(1.0 / (1.0 - 2.0 * 0.4), rel=1e-2)

    def test_negative_curvature_stays_negative(self):
        _, lams = curvature_flow_history(-1.0, 2.0, 200)
        assert np.all(lams < 0.0)

    def test_decay_label_stable_along_flow(self):
        # rho <= 3 R initially; R only grows under the flow, so the
        # classifier never leaves the decay branch
        rho = 1.0
        _, lams = curvature_flow_history(1.0, 0.3, 100)
        for ricci in lams:
            regime = classify(CosmologicalState(rho=rho, theta=0.5, ricci=float(ricci)))
            assert regime.label in (DECAY, DEGENERATE_EIGENVALUES)
            assert regime.real_part <= 0.0


class TestEinsteinConditionHelper:
    def test_ricci_tied_to_lambda(self):
        state = CosmologicalState.with_einstein_condition(rho=1.0, theta=0.5, lam=2.0)
        assert state.ricci == 2.0
        assert state.lam == 2.0
