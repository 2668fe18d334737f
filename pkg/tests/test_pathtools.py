"""
Tests for first-law accounting along paths.
"""

import math

import numpy as np
import pytest

from coherent_szilard.errors import DimensionMismatch, EndpointDiagonalMismatch, ValidationError
from coherent_szilard.matrixcore import dephase, diagonal_density, relative_entropy_of_coherence, validate_density
from coherent_szilard.pathtools import (
    PathNode,
    PathSchedule,
    incoherent_heat,
    incoherent_work,
    internal_energy,
    path_report,
    schedule_from_cycle,
)
from coherent_szilard.szilard import cycle_report, thermal_demon

COHERENT = validate_density(np.array([[0.6, 0.3 + 0.1j], [0.3 - 0.1j, 0.4]]))


def gap_sweep(steps: int) -> PathSchedule:
    """Two levels: the gap opens as 1 + sin t while the upper population grows as 0.2 + 0.3 t^2."""
    t = np.linspace(0.0, 1.0, steps + 1)
    upper = 0.2 + 0.3 * t**2
    energies = np.stack([np.zeros_like(t), 1.0 + np.sin(t)], axis=1)
    populations = np.stack([1.0 - upper, upper], axis=1)
    return PathSchedule.from_arrays(energies, populations, temperature=1.0)


def random_schedule(rng: np.random.Generator) -> PathSchedule:
    d = int(rng.integers(2, 9))
    steps = int(rng.integers(1, 1001))
    energies = np.cumsum(rng.standard_normal((steps + 1, d)) * 0.1, axis=0)
    populations = rng.dirichlet(np.ones(d), size=steps + 1)
    return PathSchedule.from_arrays(energies, populations, temperature=rng.uniform(0.1, 5.0))


class TestInternalEnergy:
    """Tests for internal_energy."""

    def test_degenerate_levels(self):
        assert internal_energy(PathNode.create([2.5, 2.5, 2.5], [0.2, 0.3, 0.5])) == pytest.approx(2.5)

    def test_ground_state(self):
        assert internal_energy(PathNode.create([0.0, 5.0], [1.0, 0.0])) == 0.0

    def test_two_levels(self):
        assert internal_energy(PathNode.create([1.0, 2.0], [0.3, 0.7])) == pytest.approx(1.7)


class TestPathNode:
    """Tests for PathNode and PathSchedule validation."""

    def test_length_mismatch(self):
        with pytest.raises(DimensionMismatch):
            PathNode.create([0.0, 1.0, 2.0], [0.5, 0.5])

    def test_invalid_populations(self):
        with pytest.raises(ValidationError):
            PathNode.create([0.0, 1.0], [0.7, 0.7])

    def test_non_finite_energy(self):
        with pytest.raises(ValidationError):
            PathNode.create([0.0, math.inf], [0.5, 0.5])

    def test_single_node(self):
        with pytest.raises(ValidationError):
            PathSchedule((PathNode.create([0.0], [1.0]),), temperature=1.0)

    def test_changing_level_count(self):
        nodes = (PathNode.create([0.0, 1.0], [0.5, 0.5]), PathNode.create([0.0, 1.0, 2.0], [0.2, 0.3, 0.5]))
        with pytest.raises(DimensionMismatch):
            PathSchedule(nodes, temperature=1.0)

    def test_non_positive_temperature(self):
        with pytest.raises(ValidationError):
            PathSchedule(gap_sweep(2).nodes, temperature=0.0)

    def test_endpoints_together(self):
        nodes = gap_sweep(1).nodes
        with pytest.raises(ValidationError):
            PathSchedule(nodes, 1.0, rho_initial=diagonal_density([0.8, 0.2]))

    def test_endpoint_diagonal_mismatch(self):
        nodes = (PathNode.create([0.0, 1.0], [0.6, 0.4]), PathNode.create([0.0, 1.0], [0.5, 0.5]))
        with pytest.raises(EndpointDiagonalMismatch) as exc:
            PathSchedule(nodes, 1.0, rho_initial=COHERENT, rho_final=diagonal_density([0.4, 0.6]))
        assert exc.value.violation == pytest.approx(0.1)

    def test_shape_mismatch(self):
        with pytest.raises(DimensionMismatch):
            PathSchedule.from_arrays(np.zeros((3, 2)), np.full((4, 2), 0.5), temperature=1.0)


class TestIncoherentTerms:
    """Tests for incoherent_heat and incoherent_work."""

    def test_constant_populations_absorb_no_heat(self):
        path = PathSchedule.from_arrays([[0.0, 1.0], [0.0, 3.0], [0.5, 2.0]], [[0.3, 0.7]] * 3, 1.0)
        assert incoherent_heat(path) == 0.0

    def test_constant_energies(self):
        path = PathSchedule.from_arrays([[0.0, 1.0, 4.0]] * 2, [[0.5, 0.3, 0.2], [0.2, 0.3, 0.5]], 1.0)
        assert incoherent_heat(path) == pytest.approx(4.0 * 0.3 - 1.0 * 0.0 + 0.0 * -0.3)
        assert incoherent_work(path) == 0.0

    def test_constant_populations_work(self):
        path = PathSchedule.from_arrays([[0.0, 1.0], [0.5, 3.0]], [[0.3, 0.7]] * 2, 1.0)
        assert incoherent_work(path) == pytest.approx(-(0.3 * 0.5 + 0.7 * 2.0))

    def test_gap_sweep_converges(self):
        exact = 0.3 + 0.6 * (math.sin(1.0) - math.cos(1.0))
        coarse = incoherent_heat(gap_sweep(10))
        fine = incoherent_heat(gap_sweep(1000))
        assert abs(fine - exact) < 1e-6
        assert abs(coarse - fine) < 1e-2

    def test_second_order_refinement(self):
        q = [incoherent_heat(gap_sweep(n)) for n in (20, 40, 80)]
        ratio = (q[0] - q[1]) / (q[1] - q[2])
        assert 3.5 < ratio < 4.5

    def test_first_law_on_gap_sweep(self):
        for steps in (1, 10, 1000):
            path = gap_sweep(steps)
            delta_e = internal_energy(path.nodes[-1]) - internal_energy(path.nodes[0])
            assert delta_e + incoherent_work(path) - incoherent_heat(path) == pytest.approx(0.0, abs=1e-12)


class TestPathReport:
    """Tests for path_report."""

    def test_first_law_on_random_schedules(self):
        rng = np.random.default_rng(99)
        for _ in range(100):
            report = path_report(random_schedule(rng))
            scale = abs(report.delta_E) + abs(report.W) + abs(report.Q) + 1.0
            assert abs(report.first_law_residual) <= 1e-12 * scale
            assert report.Q == report.Q_incoh + report.Q_coh
            assert report.W == report.W_incoh + report.W_coh

    def test_endpoints_absent(self):
        report = path_report(gap_sweep(5))
        assert report.endpoints_absent
        assert report.Q_coh == 0.0
        assert report.W_coh == 0.0

    def test_diagonal_endpoints(self):
        nodes = (PathNode.create([0.0, 1.0], [0.8, 0.2]), PathNode.create([0.0, 1.0], [0.6, 0.4]))
        path = PathSchedule(nodes, 1.0, diagonal_density([0.8, 0.2]), diagonal_density([0.6, 0.4]))
        report = path_report(path)
        assert not report.endpoints_absent
        assert report.Q_coh == pytest.approx(0.0, abs=1e-14)
        assert report.Q == pytest.approx(report.Q_incoh, abs=1e-14)

    def test_pure_dephasing(self):
        """Static spectrum and populations: all heat and work is coherent."""
        node = PathNode.create([0.0, 1.0], [0.6, 0.4])
        path = PathSchedule((node, node), 2.0, COHERENT, dephase(COHERENT))
        report = path_report(path)
        expected = 2.0 * relative_entropy_of_coherence(COHERENT)
        assert report.delta_E == 0.0
        assert report.Q == pytest.approx(expected, abs=1e-14)
        assert report.W == pytest.approx(expected, abs=1e-14)
        assert report.W_coh == report.Q_coh

    def test_reversal_antisymmetry(self):
        nodes = gap_sweep(50).nodes
        rho_i = validate_density(np.array([[0.8, 0.1], [0.1, 0.2]]))
        rho_f = validate_density(np.array([[0.5, 0.2], [0.2, 0.5]]))
        forward = path_report(PathSchedule(nodes, 1.0, rho_i, rho_f))
        backward = path_report(PathSchedule(nodes, 1.0, rho_i, rho_f).reversed())
        assert backward.Q_incoh == pytest.approx(-forward.Q_incoh, abs=1e-14)
        assert backward.W_incoh == pytest.approx(-forward.W_incoh, abs=1e-14)
        assert backward.delta_E == pytest.approx(-forward.delta_E, abs=1e-14)
        assert backward.delta_C_r == pytest.approx(-forward.delta_C_r, abs=1e-14)

    def test_to_dict(self):
        data = path_report(gap_sweep(3)).to_dict()
        assert set(data) >= {"delta_E", "Q", "W", "first_law_residual", "endpoints_absent"}


class TestScheduleFromCycle:
    """The demon side of a Szilard cycle seen as a path."""

    @pytest.mark.parametrize("factor,phase", [(0.0, 0.0), (0.7, 0.0), (1.0, 0.0), (0.5, 1.3)])
    def test_coherent_heat_matches_cycle(self, reference_well, factor, phase):
        cfg = reference_well.replace(l=0.45)
        d = thermal_demon(cfg, factor, phase)
        report = path_report(schedule_from_cycle(cfg, d))
        assert report.Q_coh == pytest.approx(cycle_report(cfg, d).q_coh, abs=1e-12)

    def test_incoherent_heat_is_demon_energy(self, reference_well):
        d = thermal_demon(reference_well, 0.7)
        report = path_report(schedule_from_cycle(reference_well, d))
        cycle = cycle_report(reference_well, d)
        assert report.delta_E == pytest.approx(cycle.delta_e_tot, abs=1e-15)
        assert report.Q_incoh == pytest.approx(cycle.delta_e_tot, abs=1e-15)
