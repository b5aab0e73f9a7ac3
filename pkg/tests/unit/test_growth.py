"""Tests for glpp.growth module."""

import numpy as np
import pytest

from glpp.bridges import Bridge, TimedBridge
from glpp.core import BoxExhausted, ConfigError, NotMaterialized, ParityViolation
from glpp.exact import speed_exact
from glpp.growth import (
    CylinderGrowth,
    GrowthField,
    edge_residence_times,
    exponential_shape,
    first_chain_mismatch,
    front_line,
    geometric_shape,
    grow_cylinder,
    grow_quarter_plane,
    phi_inv,
    phi_map,
    shape_profile,
    superadditivity_probe,
)

# Cylinder of circumference 8 read at time 9
FIGURE_CELLS = {
    (1, 1): 1, (3, 1): 2, (5, 1): 1, (7, 1): 3,
    (0, 2): 4, (2, 2): 9, (4, 2): 5, (6, 2): 6,
    (1, 3): 12, (3, 3): 11, (5, 3): 8, (7, 3): 8,
    (0, 4): 14, (2, 4): 13, (4, 4): 13, (6, 4): 10,
}  # fmt: skip


class TestCylinderField:
    """Growth on the cylinder and its front lines."""

    def test_front_line_from_cells(self):
        """The front at time 9 of the hand-built field."""
        field = GrowthField.cylinder_from_cells(4, FIGURE_CELLS, clock=9)
        front = front_line(field, 9)
        assert front == TimedBridge(Bridge.from_code("+-+--+-+"), (5, 0, 0, 4, 1, 1, 1, 1))
        assert front.check()

    def test_front_line_at_zero(self):
        """At time 0 the front is the alternating bridge with zero ages."""
        field = GrowthField.cylinder_from_cells(4, FIGURE_CELLS, clock=9)
        assert front_line(field, 0) == TimedBridge(Bridge.alternating(4), (0,) * 8)

    def test_growth_rule(self, poisson_family):
        """Each cell arrives strictly after both of its predecessors."""
        field = grow_cylinder(3, poisson_family, until_time=40, seed=5)
        for y in range(1, field.n_rows):
            for x in range(y % 2, 6, 2):
                tau = field.tau(x, y)
                assert tau > max(field.tau(x - 1, y - 1), field.tau(x + 1, y - 1))

    def test_last_row_beyond_horizon(self, geometric_family):
        """Growth stops once a whole row lies after the horizon."""
        field = grow_cylinder(2, geometric_family, until_time=30, seed=1)
        assert field.rows[-1].min() > 30
        assert field.rows[-2].min() <= 30

    def test_tau_errors_edge(self, geometric_family):
        """Odd cells and rows beyond the field are refused."""
        field = grow_cylinder(2, geometric_family, until_time=5, seed=1)
        with pytest.raises(ParityViolation):
            field.tau(1, 0)
        with pytest.raises(NotMaterialized):
            field.tau(0, 2 * field.n_rows)
        with pytest.raises(NotMaterialized):
            front_line(field, 6)

    def test_to_frame(self, geometric_family):
        """Long table of every cell."""
        field = grow_cylinder(2, geometric_family, until_time=5, seed=1)
        frame = field.to_frame()
        assert list(frame.columns) == ["x", "y", "tau"]
        assert len(frame) == 2 * field.n_rows

    def test_residence_times_positive(self, poisson_family):
        """The front stays at least one unit on every face."""
        field = grow_cylinder(2, poisson_family, until_time=50, seed=3)
        zeta = edge_residence_times(field, edge=1)
        assert zeta.size == field.n_rows - 1
        assert (zeta > 0).all()

    @pytest.mark.slow
    def test_mean_residence_matches_speed(self, geometric_half, geometric_family):
        """A long L = 2 run spends 1/c_2 on average per face of an edge track."""
        field = grow_cylinder(2, geometric_family, until_time=200_000, seed=11)
        zeta = edge_residence_times(field, edge=0)
        c = speed_exact(2, geometric_half, T_cap=40).c_renewal
        assert c == pytest.approx(0.375, abs=1e-10)
        assert zeta.size > 10_000
        assert zeta.mean() * c == pytest.approx(1.0, rel=0.02)


class TestRowEviction:
    """Rows the front has left behind are dropped with their uniforms."""

    def test_band_keeps_front(self, geometric_family):
        """The front and the kept rows match a run that keeps everything."""
        full = grow_cylinder(2, geometric_family, until_time=2_000, seed=1)
        kept = grow_cylinder(2, geometric_family, until_time=2_000, seed=1, band=4)
        assert kept.offset > 0
        assert kept.n_rows == full.n_rows
        assert len(kept.rows) < 20
        for k, row in enumerate(kept.rows):
            assert np.array_equal(row, full.rows[kept.offset + k])
        assert front_line(kept, 2_000) == front_line(full, 2_000)
        assert kept.to_frame()["y"].min() == kept.offset

    def test_evicted_rows_edge(self, geometric_family):
        """Evicted rows and fronts that need them are not materialized."""
        field = grow_cylinder(2, geometric_family, until_time=2_000, seed=1, band=4)
        with pytest.raises(NotMaterialized):
            field.tau(0, 0)
        with pytest.raises(NotMaterialized):
            front_line(field, 10)

    def test_storage_stays_bounded(self, geometric_family):
        """Advancing and evicting in steps keeps a bounded window of rows and draws."""
        growth = CylinderGrowth(2, geometric_family, seed=2, band=3)
        for n in range(0, 5_000, 100):
            growth.advance(n)
            growth.evict(n)
            assert len(growth.field.rows) < 20
            assert growth.draws.stored < 30
        assert growth.field.offset > 100

    def test_resumed_growth_matches_one_shot(self, poisson_family):
        """Growing in two steps gives the same rows as growing once."""
        growth = CylinderGrowth(3, poisson_family, seed=4)
        growth.advance(30)
        field = growth.advance(80)
        once = grow_cylinder(3, poisson_family, until_time=80, seed=4)
        assert field.n_rows == once.n_rows
        assert all(np.array_equal(a, b) for a, b in zip(field.rows, once.rows))

    def test_growth_arguments_edge(self, geometric_family):
        """Bands under two rows and backward horizons are refused."""
        with pytest.raises(ConfigError):
            CylinderGrowth(2, geometric_family, seed=0, band=1)
        growth = CylinderGrowth(2, geometric_family, seed=0)
        growth.advance(10)
        with pytest.raises(ConfigError):
            growth.advance(5)

class TestCoupling:
    """The chain run on the growth engine's draws reproduces its front lines."""

    @pytest.mark.parametrize("L", [1, 2, 3])
    def test_no_mismatch(self, poisson_family, L):
        """The chain and the growth agree at every time."""
        assert first_chain_mismatch(L, poisson_family, steps=300, seed=L) is None

    def test_no_mismatch_geometric(self, geometric_family):
        """Same for the geometric family."""
        assert first_chain_mismatch(2, geometric_family, steps=1_000, seed=0) is None

    def test_no_mismatch_small_chunks(self, geometric_family):
        """Interleaving growth and eviction in short chunks changes nothing."""
        assert first_chain_mismatch(2, geometric_family, steps=3_000, seed=5, chunk=16, band=2) is None

    def test_bad_chunk_edge(self, geometric_family):
        """Chunks must be positive."""
        with pytest.raises(ConfigError):
            first_chain_mismatch(2, geometric_family, steps=10, seed=0, chunk=0)


class TestSpaceTimeMap:
    """Φ between space-time points and cylinder cells."""

    def test_round_trip(self):
        """Φ⁻¹ ∘ Φ is the identity."""
        for x, y in [(0, 0), (3, 1), (2, 7)]:
            assert phi_inv(phi_map(x, y)) == (x, y)

    def test_odd_cell_edge(self):
        """Odd cells have no preimage."""
        with pytest.raises(ParityViolation):
            phi_inv((1, 2))


class TestQuarterPlane:
    """Quarter-plane growth and its shape."""

    def test_boundary_and_monotonicity(self, poisson_family):
        """τ is zero on the axes and increasing inside."""
        field = grow_quarter_plane(30, poisson_family, seed=2)
        grid = field.grid
        assert (grid[0, :] == 0).all() and (grid[:, 0] == 0).all()
        assert (np.diff(grid[1:, 1:], axis=0) > 0).all()
        assert (np.diff(grid[1:, 1:], axis=1) > 0).all()

    def test_box_exhausted_edge(self, geometric_family):
        """A horizon past the box edge is refused."""
        with pytest.raises(BoxExhausted):
            grow_quarter_plane(5, geometric_family, until_time=1_000, seed=0)

    def test_zero_horizon_boundary_only_edge(self, geometric_family):
        """At t = 0 only the boundary row and column exist."""
        field = grow_quarter_plane(20, geometric_family, until_time=0, seed=0)
        assert len(field.to_frame()) == 2 * 20 + 1
        assert np.isnan(field.grid[1:, 1:]).all()
        assert field.diagonal_ratio() is None
        with pytest.raises(NotMaterialized):
            field.tau(1, 1)

    def test_horizon_keeps_arrived_cells(self, geometric_family):
        """A horizon keeps exactly the cells with τ <= until_time, unchanged."""
        full = grow_quarter_plane(40, geometric_family, seed=6)
        field = grow_quarter_plane(40, geometric_family, until_time=30, seed=6)
        arrived = full.grid <= 30
        assert np.array_equal(~np.isnan(field.grid), arrived)
        assert np.array_equal(field.grid[arrived], full.grid[arrived])
        m = int(np.flatnonzero(np.diagonal(arrived))[-1])
        assert field.diagonal_ratio() == pytest.approx(full.grid[m, m] / m)
        with pytest.raises(NotMaterialized):
            shape_profile(field, 31, geometric_family)

    def test_limit_shapes(self):
        """Classical geometric and exponential limit shapes on the diagonal."""
        assert geometric_shape(1.0, 1.0, 0.5) == pytest.approx(6.828427, abs=1e-6)
        assert geometric_shape(1.0, 1.0, 0.5, zero_support=True) == pytest.approx(4.828427, abs=1e-6)
        assert exponential_shape(1.0, 1.0) == pytest.approx(4.0)

    def test_shape_profile_deviation(self, geometric_family):
        """The scaled front of geometric(1/2) sits near its limit shape."""
        field = grow_quarter_plane(400, geometric_family, until_time=400, seed=3)
        profile = shape_profile(field, 400, geometric_family)
        assert profile.reference == "geometric:0.5"
        assert profile.deviation < 0.15
        assert (profile.points["y"] >= 0).all()
        assert profile.points["y"].is_monotonic_decreasing

    def test_no_reference_for_poisson(self, poisson_family):
        """Non-geometric families get no reference curve."""
        field = grow_quarter_plane(40, poisson_family, seed=3)
        profile = shape_profile(field, 20, poisson_family)
        assert profile.reference is None
        assert profile.deviation is None

    def test_profile_needs_quarter_plane_edge(self, geometric_family):
        """Cylinder fields have no shape profile."""
        with pytest.raises(ConfigError):
            shape_profile(grow_cylinder(2, geometric_family, until_time=3, seed=0), 2)

    def test_superadditivity_slacks(self, classical_geometric):
        """One slack is reported per replica."""
        report = superadditivity_probe(classical_geometric, (5, 5), (5, 5), replicas=20, seed=0)
        assert report.replicas == 20
        assert 0.0 <= report.violation_fraction <= 1.0
        assert report.min_slack <= report.mean_slack
