"""
Tests for demon qubit algebra.
"""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from coherent_szilard.errors import NotPositive, ValidationError
from coherent_szilard.matrixcore import (
    relative_entropy_of_coherence,
    validate_density,
    von_neumann_entropy,
)
from coherent_szilard.szilard import (
    DemonState,
    demon_coherence,
    demon_from_bloch,
    demon_temperature,
    final_demon,
    thermal_demon,
)

P_G = 1.0 / (1.0 + math.exp(-1.0))

probabilities = st.floats(min_value=0.0, max_value=1.0)
factors = st.floats(min_value=0.0, max_value=1.0)
phases = st.floats(min_value=0.0, max_value=2 * math.pi)


def demon(p_g: float, factor: float, phase: float = 0.0) -> DemonState:
    return DemonState(p_g, factor * math.sqrt(p_g * (1 - p_g)) * complex(math.cos(phase), math.sin(phase)))


class TestDemonState:
    """Tests for DemonState construction and accessors."""

    def test_incoherent(self):
        d = DemonState(0.7)
        assert d.p_e == pytest.approx(0.3)
        assert d.F == 0j
        np.testing.assert_allclose(d.matrix(), np.diag([0.7, 0.3]), atol=1e-16)

    def test_outside_bloch_ball(self):
        with pytest.raises(NotPositive) as exc:
            DemonState(0.7311, 0.5)
        assert exc.value.invariant == "|F|^2 <= p_g p_e"

    def test_population_out_of_range(self):
        with pytest.raises(ValidationError):
            DemonState(1.2)

    def test_matrix_is_hermitian(self):
        m = DemonState(0.6, 0.2 + 0.3j).matrix()
        np.testing.assert_array_equal(m, m.conj().T)

    def test_bloch_vector_of_pure_state(self):
        x, y, z = demon(0.3, 1.0, 0.7).bloch_vector()
        assert x * x + y * y + z * z == pytest.approx(1.0, abs=1e-12)

    def test_from_bloch(self):
        d = demon_from_bloch(0.0, 1.0, 0.0)
        assert d.p_g == 0.5
        assert d.F == pytest.approx(-0.5j)
        np.testing.assert_allclose(d.bloch_vector(), (0.0, 1.0, 0.0), atol=1e-15)

    def test_from_bloch_outside_ball(self):
        with pytest.raises(NotPositive):
            demon_from_bloch(0.8, 0.8, 0.0)

    def test_flipped(self):
        d = DemonState(0.8, 0.1 + 0.2j)
        f = d.flipped()
        assert f.p_g == pytest.approx(0.2)
        assert f.F == 0.1 - 0.2j
        assert f.flipped().F == d.F

    def test_to_dict(self):
        assert DemonState(0.75, 0.25j).to_dict() == {"p_g": 0.75, "p_e": 0.25, "F_re": 0.0, "F_im": 0.25}


class TestEntropy:
    """Tests for the closed-form demon entropy."""

    def test_matches_eigensolver(self):
        d = demon(0.7311, 0.7)
        generic = von_neumann_entropy(validate_density(d.matrix()))
        assert d.entropy() == pytest.approx(generic, abs=1e-12)

    def test_pure_state(self):
        assert demon(P_G, 1.0).entropy() == pytest.approx(0.0, abs=1e-12)

    @given(p_g=probabilities, factor=factors, phase=phases)
    @settings(max_examples=100, deadline=None)
    def test_bounds(self, p_g, factor, phase):
        s = demon(p_g, factor, phase).entropy()
        assert 0.0 <= s <= math.log(2) + 1e-15

    @given(p_g=st.floats(0.01, 0.99), factor=factors, phase=phases)
    @settings(max_examples=100, deadline=None)
    def test_coherence_matches_generic_pipeline(self, p_g, factor, phase):
        d = demon(p_g, factor, phase)
        generic = relative_entropy_of_coherence(validate_density(d.matrix()))
        assert demon_coherence(d) == pytest.approx(generic, abs=1e-12)

    def test_incoherent_has_no_coherence(self):
        assert demon_coherence(DemonState(0.3)) == 0.0


class TestThermalDemon:
    """Tests for thermal_demon and demon_temperature."""

    def test_populations(self, reference_well):
        d = thermal_demon(reference_well, 0.0)
        assert d.p_g == pytest.approx(P_G, rel=1e-15)
        assert d.F == 0j

    def test_pure(self, reference_well):
        d = thermal_demon(reference_well, 1.0)
        assert abs(d.F) ** 2 == pytest.approx(d.p_g * d.p_e, rel=1e-12)

    def test_phase(self, reference_well):
        d = thermal_demon(reference_well, 0.5, phase=math.pi / 2)
        assert d.F.real == pytest.approx(0.0, abs=1e-15)
        assert d.F.imag == pytest.approx(0.5 * math.sqrt(d.p_g * d.p_e))

    def test_rejects_factor_above_one(self, reference_well):
        with pytest.raises(ValidationError):
            thermal_demon(reference_well, 1.5)

    def test_cold_demon_is_fully_polarised(self, reference_well):
        assert thermal_demon(reference_well.replace(T_D=1e-3), 0.0).p_g == 1.0

    def test_temperature_recovered(self, reference_well):
        d = thermal_demon(reference_well, 0.7)
        assert demon_temperature(d, reference_well.delta) == pytest.approx(0.5, rel=1e-12)

    def test_temperature_limits(self):
        assert math.isinf(demon_temperature(DemonState(0.5), 0.5))
        assert demon_temperature(DemonState(1.0), 0.5) == 0.0
        assert demon_temperature(DemonState(0.2), 0.5) < 0.0


class TestFinalDemon:
    """Tests for final_demon."""

    def test_no_flip(self):
        d = DemonState(0.8, 0.1 + 0.3j)
        assert final_demon(d, 1.0) == d

    def test_always_flipped(self):
        d = DemonState(0.8, 0.1 + 0.3j)
        f = final_demon(d, 0.0)
        assert f.p_g == pytest.approx(d.flipped().p_g)
        assert f.F == d.flipped().F

    def test_populations_and_coherence(self):
        d = demon(P_G, 0.7, 0.4)
        f = final_demon(d, 0.7)
        assert f.p_g == pytest.approx(d.p_g * 0.7 + d.p_e * 0.3)
        assert f.F == pytest.approx(d.F * 0.7 + d.F.conjugate() * 0.3)

    def test_real_coherence_survives(self):
        d = demon(P_G, 0.7)
        assert final_demon(d, 0.4).F == pytest.approx(d.F)

    def test_imaginary_coherence_cancels_at_half(self):
        d = demon(P_G, 1.0, math.pi / 2)
        assert abs(final_demon(d, 0.5).F) == pytest.approx(0.0, abs=1e-16)

    @given(p_g=probabilities, factor=factors, phase=phases, p_l=probabilities)
    @settings(max_examples=100, deadline=None)
    def test_entropy_never_decreases(self, p_g, factor, phase, p_l):
        d = demon(p_g, factor, phase)
        assert final_demon(d, p_l).entropy() >= d.entropy() - 1e-12

    @given(p_g=probabilities, factor=factors, phase=phases, p_l=probabilities)
    @settings(max_examples=100, deadline=None)
    def test_coherence_never_grows(self, p_g, factor, phase, p_l):
        d = demon(p_g, factor, phase)
        assert demon_coherence(final_demon(d, p_l)) <= demon_coherence(d) + 1e-12
