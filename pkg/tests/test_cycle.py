"""
Tests for the closed-form Szilard cycle and its root-finds.
"""

import math

import numpy as np
import pytest

from coherent_szilard.errors import DegenerateCycle, NoSignChange, ValidationError
from coherent_szilard.szilard import (
    DemonState,
    WellConfig,
    critical_probability,
    cycle_at,
    cycle_report,
    efficiency_curve,
    final_demon,
    free_energy_work,
    quantum_carnot_limit,
    thermal_demon,
    zero_work_probability,
)


class TestCarnotLimit:
    """An incoherent demon never beats Carnot."""

    def test_small_p_r_approaches_carnot(self, reference_well):
        d = thermal_demon(reference_well, 0.0)
        eta = cycle_at(1e-4, reference_well, d).eta
        assert 0.49 <= eta <= 0.5

    def test_bounded_on_grid(self, reference_well):
        d = thermal_demon(reference_well, 0.0)
        grid = np.round(np.arange(1, 1000) * 1e-3, 12)
        etas = [r.eta for r in efficiency_curve(reference_well, d, grid) if r.eta is not None]
        assert len(etas) == len(grid)
        assert max(etas) <= 0.5 + 1e-9

    def test_quantum_limit_equals_carnot(self, reference_well):
        d = thermal_demon(reference_well, 0.0)
        assert quantum_carnot_limit(reference_well, d) == pytest.approx(reference_well.eta_carnot, abs=1e-9)


class TestCoherenceBreakthrough:
    """A coherent demon can exceed Carnot at small P_R."""

    def test_pure_demon_beats_carnot(self, reference_well):
        d = thermal_demon(reference_well, 1.0)
        assert cycle_at(0.05, reference_well, d).eta > 0.5

    def test_partial_coherence_lies_between(self, reference_well):
        etas = [cycle_at(0.05, reference_well, thermal_demon(reference_well, f)).eta for f in (0.0, 0.7, 1.0)]
        assert etas[0] < etas[1] < etas[2]

    def test_pure_demon_limit_is_one(self, reference_well):
        assert quantum_carnot_limit(reference_well, thermal_demon(reference_well, 1.0)) == 1.0

    def test_small_p_r_reaches_quantum_limit(self, reference_well):
        d = thermal_demon(reference_well, 0.7)
        limit = quantum_carnot_limit(reference_well, d)
        assert reference_well.eta_carnot < limit < 1.0
        assert cycle_at(1e-6, reference_well, d).eta == pytest.approx(limit, abs=1e-4)


class TestIdentities:
    """Exact bookkeeping identities on random cycles."""

    def test_random_cycles(self):
        rng = np.random.default_rng(2024)
        for _ in range(1000):
            cfg = WellConfig(
                T=rng.uniform(0.2, 5.0),
                T_D=rng.uniform(0.05, 5.0),
                delta=rng.uniform(0.05, 3.0),
            )
            d = thermal_demon(cfg, rng.uniform(), rng.uniform(0.0, 2 * math.pi))
            r = cycle_at(rng.uniform(), cfg, d, quantum_limit=False)

            scale = abs(r.w_tot) + abs(r.q_tot) + abs(r.delta_e_tot) + 1.0
            assert abs(r.w_tot - r.q_tot + r.delta_e_tot) <= 4e-15 * scale
            assert r.q_tot == pytest.approx(r.q_incoh + r.q_coh, abs=1e-15 * scale)
            assert r.w_coh == r.q_coh
            assert r.q_coh == pytest.approx(cfg.k_b * cfg.T * r.delta_c_r, rel=1e-15)
            assert r.delta_c_r >= -1e-12
            assert r.delta_e_tot == r.w_mea

    def test_measurement_work(self, reference_well):
        d = thermal_demon(reference_well, 0.3)
        r = cycle_at(0.2, reference_well, d)
        assert r.w_mea == pytest.approx(0.2 * (d.p_g - d.p_e) * 0.5, rel=1e-15)

    def test_final_demon_attached(self, reference_well):
        d = thermal_demon(reference_well, 0.6, 1.1)
        r = cycle_at(0.3, reference_well, d)
        assert r.demon_final == final_demon(d, 0.7, 0.3)

    def test_free_energy_route_agrees(self, reference_well):
        d = thermal_demon(reference_well, 0.8, 0.3)
        r = cycle_at(0.25, reference_well, d)
        assert free_energy_work(reference_well, d, 0.25) == pytest.approx(r.w_tot, abs=1e-12)

    def test_incoherent_demon_has_no_coherent_heat(self, reference_well):
        r = cycle_at(0.4, reference_well, thermal_demon(reference_well, 0.0))
        assert r.q_coh == pytest.approx(0.0, abs=1e-15)
        assert r.delta_c_r == pytest.approx(0.0, abs=1e-15)


class TestCycleReport:
    """Tests for cycle_report and degenerate cycles."""

    def test_uses_insertion_probability(self, reference_well):
        r = cycle_report(reference_well, thermal_demon(reference_well, 0.5))
        assert r.p_r == 0.5
        assert r.eta_carnot == 0.5

    def test_balanced_demon_converts_all_heat(self):
        d = DemonState(0.5, 0.3j)
        r = cycle_report(WellConfig(), d, 0.3)
        assert r.delta_e_tot == 0.0
        assert r.eta == 1.0

    def test_zero_p_r_is_degenerate(self, reference_well):
        with pytest.raises(DegenerateCycle) as exc:
            cycle_report(reference_well, thermal_demon(reference_well, 0.5), 0.0)
        report = exc.value.report
        assert report.eta is None
        assert report.q_tot == 0.0
        assert report.w_tot == 0.0

    def test_balanced_incoherent_demon_is_degenerate(self):
        with pytest.raises(DegenerateCycle):
            cycle_report(WellConfig(T_D=1e300), DemonState(0.5), 0.3)

    def test_rejects_bad_probability(self, reference_well):
        with pytest.raises(ValidationError):
            cycle_at(1.5, reference_well, thermal_demon(reference_well, 0.0))

    def test_to_dict(self, reference_well):
        data = cycle_report(reference_well, thermal_demon(reference_well, 0.5)).to_dict()
        assert set(data["demon_final"]) == {"p_g", "p_e", "F_re", "F_im"}
        assert "eta_quantum_limit" in data

    def test_curve_shares_limit(self, reference_well):
        d = thermal_demon(reference_well, 0.5)
        curve = efficiency_curve(reference_well, d, [0.1, 0.2, 0.3])
        assert [r.p_r for r in curve] == [0.1, 0.2, 0.3]
        assert len({r.eta_quantum_limit for r in curve}) == 1


class TestCriticalProbability:
    """Tests for critical_probability."""

    def test_pure_demon_crosses_carnot(self, reference_well):
        d = thermal_demon(reference_well, 1.0)
        p_cri = critical_probability(reference_well, d)
        assert 0.05 < p_cri < 0.5
        assert cycle_at(p_cri, reference_well, d).eta == pytest.approx(reference_well.eta_carnot, abs=1e-8)

    def test_local_ordering(self, reference_well):
        d = thermal_demon(reference_well, 1.0)
        p_cri = critical_probability(reference_well, d)
        before = cycle_at(p_cri - 1e-4, reference_well, d).eta
        after = cycle_at(p_cri + 1e-4, reference_well, d).eta
        assert before > reference_well.eta_carnot > after

    def test_incoherent_demon_has_no_crossing(self, reference_well):
        with pytest.raises(NoSignChange):
            critical_probability(reference_well, thermal_demon(reference_well, 0.0))

    def test_balanced_demon(self):
        with pytest.raises(NoSignChange):
            critical_probability(WellConfig(), DemonState(0.5, 0.2))

    @pytest.mark.parametrize("factor", [0.25, 0.5, 0.75, 1.0])
    def test_eta_at_root_where_defined(self, reference_well, factor):
        d = thermal_demon(reference_well, factor)
        try:
            p_cri = critical_probability(reference_well, d)
        except NoSignChange:
            return
        assert cycle_at(p_cri, reference_well, d).eta == pytest.approx(reference_well.eta_carnot, abs=1e-8)


class TestZeroWorkProbability:
    """Tests for zero_work_probability."""

    def test_residual(self, reference_well):
        d = thermal_demon(reference_well, 0.0)
        p_zero = zero_work_probability(reference_well, d)
        assert 0.0 < p_zero < 1.0
        assert abs(cycle_at(p_zero, reference_well, d).w_tot) <= 1e-12

    def test_nondecreasing_in_coherence(self, reference_well):
        roots = [zero_work_probability(reference_well, thermal_demon(reference_well, f)) for f in (0.0, 0.25, 0.5, 0.75, 1.0)]
        assert all(a <= b for a, b in zip(roots, roots[1:]))
        assert roots[-1] > roots[0]

    def test_balanced_incoherent_demon(self):
        with pytest.raises(NoSignChange):
            zero_work_probability(WellConfig(T_D=1e300), DemonState(0.5))
