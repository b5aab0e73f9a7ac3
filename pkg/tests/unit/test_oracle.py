import math

import numpy as np
import pytest
from scipy import stats

from glpp.bridges import Bridge, local_extrema
from glpp.core import ClosurePolicy, ExcessLeak, NoConvergence, StateSpaceTooLarge, SupportMismatch
from glpp.exact import stationary_law
from glpp.measures import DiscreteMeasure, make_edge_lpp_family, make_integrable_family
from glpp.oracle import (
    edge_lpp_enumeration,
    ks_statistic,
    oracle_stationary,
    power_iterate_stationary,
    truncated_transition_matrix,
    tv_distance,
)
from glpp.suites import exact_vs_oracle_tv


class TestTruncatedChain:
    def test_rows_are_stochastic(self, geometric_family):
        chain = truncated_transition_matrix(2, geometric_family, T_cap=8)
        sums = np.asarray(chain.matrix.sum(axis=1)).ravel()
        assert np.allclose(sums, 1.0)
        assert chain.in_cap.all()

    def test_successor_count(self, geometric_family):
        """A state with k maxima has 2^k successors before truncation."""
        chain = truncated_transition_matrix(2, geometric_family, T_cap=6, policy=ClosurePolicy.REFLECT_TO_CAP)
        for i, (steps, _) in enumerate(chain.states):
            k = local_extrema(Bridge(steps)).k
            assert chain.matrix.getrow(i).nnz == 2**k

    def test_reflect_adds_clipped_states(self, geometric_family):
        chain = truncated_transition_matrix(1, geometric_family, T_cap=5, policy=ClosurePolicy.REFLECT_TO_CAP)
        assert chain.n_states == 2 * (5 + 1) + 2
        assert int((~chain.in_cap).sum()) == 2
        assert chain.leak.max() == 0.0

    def test_frame_columns(self, geometric_family):
        frame = truncated_transition_matrix(1, geometric_family, T_cap=3).to_frame()
        assert list(frame.columns) == ["source", "target", "probability"]
        assert frame["source"].iloc[0].startswith(("+-|", "-+|"))

    def test_guard_edge(self, geometric_family):
        with pytest.raises(StateSpaceTooLarge):
            truncated_transition_matrix(4, geometric_family, T_cap=5)
        with pytest.raises(StateSpaceTooLarge):
            truncated_transition_matrix(
                2, geometric_family, T_cap=8, policy=ClosurePolicy.REFLECT_TO_CAP, max_states=10
            )


class TestStationary:
    def test_single_site_geometric(self, geometric_family):
        """L = 1, geometric(1/2), T_cap = 30: π(b, (t, t)) = 0.25 · 0.5^t."""
        law = oracle_stationary(1, geometric_family, T_cap=30)
        assert law.stationary_leak <= 2.0**-30
        for (steps, ages), p in zip(law.chain.states, law.pi):
            assert p == pytest.approx(0.25 * 0.5 ** ages[0], abs=1e-8)
        assert law.bridge_marginal() == pytest.approx({"+-": 0.5, "-+": 0.5})

    def test_excess_leak(self):
        with pytest.raises(ExcessLeak):
            oracle_stationary(2, make_integrable_family(DiscreteMeasure.geometric(0.2)), T_cap=5)

    def test_reflect_accepts_small_cap(self):
        law = oracle_stationary(
            2, make_integrable_family(DiscreteMeasure.geometric(0.2)), T_cap=5, policy=ClosurePolicy.REFLECT_TO_CAP
        )
        assert sum(law.in_cap_law().values()) == pytest.approx(1.0)
        assert law.to_dict()["policy"] == "reflect"

    @pytest.mark.parametrize("L", [1, 2])
    @pytest.mark.parametrize("p", [0.3, 0.5, 0.7])
    def test_agrees_with_exact(self, L, p):
        assert exact_vs_oracle_tv(L, p, T_cap=20) <= 1e-8

    def test_bridge_marginal_matches_exact(self, poisson_family):
        law = oracle_stationary(2, poisson_family, T_cap=20)
        exact = stationary_law(2, DiscreteMeasure.poisson(1.0), T_cap=40).nu
        assert tv_distance(law.bridge_marginal(), exact) <= 1e-8

    def test_power_iteration_edge(self):
        """The uniform start is already fixed for a swap; a slow chain runs out of iterations."""
        flip = np.array([[0.0, 1.0], [1.0, 0.0]])
        result = power_iterate_stationary(flip)
        assert result.vector == pytest.approx([0.5, 0.5])
        lazy = np.array([[0.999999, 0.000001], [0.5, 0.5]])
        with pytest.raises(NoConvergence):
            power_iterate_stationary(lazy, tol=1e-15, max_iters=3)


class TestEdgeLpp:
    @pytest.mark.parametrize("masses", [[0.25, 0.75], [0.5, 0.5]])
    def test_family_matches_enumeration(self, masses):
        mu = DiscreteMeasure.table(masses)
        fam = make_edge_lpp_family(mu)
        for delta in range(6):
            assert np.array_equal(fam.at(delta).pmf, edge_lpp_enumeration(mu, delta))

    def test_geometric_sums_to_one(self, geometric_half):
        fam = make_edge_lpp_family(geometric_half)
        for delta in range(21):
            law = fam.at(delta)
            assert math.fsum(law.pmf) + law.remainder == pytest.approx(1.0, abs=1e-9)


class TestDistances:
    def test_tv(self):
        assert tv_distance([0.5, 0.5], [1.0, 0.0]) == pytest.approx(0.5)
        assert tv_distance({"a": 1.0}, {"b": 1.0}, fill_missing=True) == pytest.approx(1.0)

    def test_support_mismatch_edge(self):
        with pytest.raises(SupportMismatch):
            tv_distance({"a": 1.0}, {"b": 1.0})
        with pytest.raises(SupportMismatch):
            tv_distance([1.0], [0.5, 0.5])

    def test_ks(self):
        rng = np.random.default_rng(0)
        samples = rng.exponential(size=5000)
        assert ks_statistic(samples, stats.expon.cdf) < 0.03
        assert ks_statistic(samples + 1.0, stats.expon.cdf) > 0.5
