import math

import numpy as np
import pytest

from infoprocure import (
    OPT_OUT,
    AgentType,
    Bounds,
    MechanismParams,
    Prior,
    Report,
    RngStream,
    n_lower_bound,
    sample_types,
    score,
)


class TestScore:
    @pytest.mark.parametrize(
        "price,quality,expected",
        [(0.12, 12.0, 1.44), (1.0, 1.0, 1.0), (0.15, 10.0, 1.5)],
    )
    def test_is_the_product(self, price, quality, expected):
        assert score(Report(price, quality)) == pytest.approx(expected, rel=1e-15)

    def test_strictly_increasing_in_each_argument(self):
        gen = np.random.default_rng(0)
        for _ in range(200):
            p, v = gen.uniform(0.01, 5.0, size=2)
            eps = gen.uniform(1e-6, 0.5)
            assert score(Report(p + eps, v)) > score(Report(p, v))
            assert score(Report(p, v + eps)) > score(Report(p, v))

    def test_argmin_invariant_to_common_price_rescaling(self):
        gen = np.random.default_rng(1)
        for _ in range(100):
            m = int(gen.integers(2, 8))
            prices = gen.uniform(0.1, 0.2, m)
            qualities = gen.uniform(10.0, 20.0, m)
            lam = gen.uniform(0.5, 3.0)
            base = [score(Report(p, v)) for p, v in zip(prices, qualities)]
            scaled = [score(Report(lam * p, v)) for p, v in zip(prices, qualities)]
            assert int(np.argmin(base)) == int(np.argmin(scaled))


class TestBounds:
    def test_score_corners(self, bounds):
        assert bounds.score_lo == pytest.approx(1.0)
        assert bounds.score_hi == pytest.approx(4.0)

    @pytest.mark.parametrize(
        "kwargs",
        [
            dict(c_lo=0.2, c_hi=0.1, v_lo=10.0, v_hi=20.0),
            dict(c_lo=0.1, c_hi=0.1, v_lo=10.0, v_hi=20.0),
            dict(c_lo=0.0, c_hi=0.1, v_lo=10.0, v_hi=20.0),
            dict(c_lo=0.1, c_hi=0.2, v_lo=20.0, v_hi=10.0),
            dict(c_lo=0.1, c_hi=0.2, v_lo=10.0, v_hi=math.inf),
        ],
    )
    def test_rejects_bad_rectangles(self, kwargs):
        with pytest.raises(ValueError):
            Bounds(**kwargs)

    def test_contains(self, bounds):
        assert bounds.contains(0.15, 15.0)
        assert not bounds.contains(0.21, 15.0)


class TestDomainTypes:
    def test_agent_type_must_be_positive(self):
        with pytest.raises(ValueError):
            AgentType(cost=-0.1, inv_fisher=10.0)
        with pytest.raises(ValueError):
            AgentType(cost=0.1, inv_fisher=0.0)

    def test_report_must_be_positive(self):
        with pytest.raises(ValueError):
            Report(price=0.0, reported_inv_fisher=10.0)

    def test_truthful_report_round_trip(self):
        t = AgentType(0.12, 11.0)
        r = t.truthful_report()
        assert (r.price, r.reported_inv_fisher) == (0.12, 11.0)
        assert t.true_score == pytest.approx(score(r))

    def test_opt_out_is_not_a_report(self):
        assert not isinstance(OPT_OUT, Report)


class TestMechanismParams:
    def test_from_bounds_uses_score_upper_bound(self, bounds):
        p = MechanismParams.from_bounds(100.0, bounds)
        assert p.single_bidder_fallback_score == pytest.approx(bounds.score_hi)

    @pytest.mark.parametrize("beta,rho", [(0.0, 1.0), (1.0, 0.0), (1.0, 1.5), (-2.0, 1.0)])
    def test_validation(self, beta, rho, bounds):
        with pytest.raises(ValueError):
            MechanismParams(beta=beta, single_bidder_fallback_score=bounds.score_hi, rho=rho)


class TestRngStream:
    def test_same_path_same_key(self):
        a = RngStream(42).child("exp", 3, "data")
        b = RngStream(42).child("exp", 3, "data")
        assert np.array_equal(a.key(), b.key())
        assert np.array_equal(a.generator().uniform(size=8), b.generator().uniform(size=8))

    def test_distinct_paths_distinct_keys(self):
        root = RngStream(42)
        keys = {
            tuple(root.child(*p).key())
            for p in [("a",), ("b",), ("a", 0), ("a", 1), (0,), ("0",), (0.0,)]
        }
        assert len(keys) == 7

    def test_distinct_seeds_distinct_streams(self):
        a = RngStream(1).child("x")
        b = RngStream(2).child("x")
        assert not np.array_equal(a.key(), b.key())

    def test_rejects_bad_labels(self):
        with pytest.raises(TypeError):
            RngStream(1).child(object())


class TestSampleTypes:
    def test_draws_lie_in_the_rectangle(self, prior, rng):
        types = sample_types(prior, 10, rng.child("types"))
        assert len(types) == 10
        for t in types:
            assert 0.1 <= t.cost <= 0.2
            assert 10.0 <= t.inv_fisher <= 20.0

    def test_degenerate_prior_is_a_point_mass(self, rng):
        prior = Prior(cost=(0.1, 0.1), inv_fisher=(10.0, 10.0))
        types = sample_types(prior, 3, rng)
        assert types == [AgentType(0.1, 10.0)] * 3

    def test_deterministic_given_seed_and_path(self, prior):
        a = sample_types(prior, 5, RngStream(7).child("draw"))
        b = sample_types(prior, 5, RngStream(7).child("draw"))
        assert a == b
        c = sample_types(prior, 5, RngStream(7).child("other"))
        assert a != c

    def test_empty_population_is_an_error(self, prior, rng):
        with pytest.raises(ValueError, match="empty population"):
            sample_types(prior, 0, rng)

    def test_marginals_match_uniform_within_ks_001(self, prior, rng):
        n = 100_000
        types = sample_types(prior, n, rng.child("ks"))
        for values, (lo, hi) in [
            (np.array([t.cost for t in types]), prior.cost),
            (np.array([t.inv_fisher for t in types]), prior.inv_fisher),
        ]:
            u = np.sort((values - lo) / (hi - lo))
            i = np.arange(1, n + 1)
            ks = max(np.max(i / n - u), np.max(u - (i - 1) / n))
            assert ks < 0.01


class TestNLowerBound:
    @pytest.mark.parametrize(
        "beta,expected",
        [(10.0, 15.8113883), (100.0, 50.0), (1000.0, 158.1138830)],
    )
    def test_reference_values(self, beta, expected, bounds):
        assert n_lower_bound(beta, bounds) == pytest.approx(expected, abs=1e-6)

    def test_bounds_every_realized_quantity(self, prior, bounds, rng):
        from infoprocure import run_second_score

        gen = np.random.default_rng(3)
        for trial in range(50):
            beta = float(gen.uniform(5.0, 2000.0))
            params = MechanismParams.from_bounds(beta, bounds)
            m = int(gen.integers(1, 8))
            types = sample_types(prior, m, rng.child("nk", trial))
            # any feasible reports, not only truthful ones
            actions = [
                Report(float(gen.uniform(0.1, 0.2)), float(gen.uniform(10.0, 20.0)))
                for _ in types
            ]
            outcome = run_second_score(actions, params)
            assert outcome.quantity >= n_lower_bound(beta, bounds) - 1e-12

    def test_rejects_nonpositive_beta(self, bounds):
        with pytest.raises(ValueError):
            n_lower_bound(0.0, bounds)
