"""Input generator: spectral decomposition, exact state evolution, and
component splitting."""
import numpy as np
import pytest

from lftid import InputGenerator, decompose, state_at, states_at, \
    xi_bar_components
from lftid.benchmarks import two_tone_generator
from lftid.errors import (ComponentNotReal, DefectiveGenerator,
                          GeneratorEigenvalueWarning,
                          NearRepeatedEigenvalues)
from lftid.igs import reconstruct_state, xi_bar_matrix

from conftest import random_generator


def rotation_generator(omega=2.0):
    return InputGenerator(Xi=[[0.0, omega], [-omega, 0.0]],
                          Pi=[[1.0, 0.0]], xi0=[1.0, 0.0])


class TestDecompose:
    def test_already_diagonal(self):
        gen = InputGenerator(Xi=np.diag([0.0, 1.0]), Pi=[[1.0, 1.0]],
                             xi0=[1.0, 1.0])
        spec = decompose(gen)
        assert spec.m_r == 2 and spec.m_c == 0
        assert np.allclose(spec.real_eigs, [0.0, 1.0])
        assert np.allclose(spec.T, np.eye(2))

    def test_reference_two_tone(self):
        spec = decompose(two_tone_generator())
        assert spec.m_r == 0 and spec.m_c == 2
        assert np.allclose(spec.complex_pairs,
                           [[0.0, 3.0], [0.0, 4.5]], atol=1e-12)
        # conjugate columns adjacent
        assert np.allclose(spec.T[:, 1], np.conj(spec.T[:, 0]))
        assert np.allclose(spec.T[:, 3], np.conj(spec.T[:, 2]))

    def test_jordan_block_rejected(self):
        gen = InputGenerator(Xi=[[0.0, 1.0], [0.0, 0.0]], Pi=[[1.0, 0.0]],
                             xi0=[1.0, 0.0])
        with pytest.warns(NearRepeatedEigenvalues):
            with pytest.raises(DefectiveGenerator):
                decompose(gen)

    def test_negative_real_part_warns_not_raises(self):
        gen = two_tone_generator(sigmas=(-0.005, -0.004))
        with pytest.warns(GeneratorEigenvalueWarning):
            spec = decompose(gen)
        assert np.allclose(spec.complex_pairs[:, 0], [-0.005, -0.004])

    def test_similarity_relation(self):
        rng = np.random.default_rng(11)
        gen = random_generator(rng, m_u=2, m_r=2, m_c=2)
        spec = decompose(gen)
        lhs = gen.Xi @ spec.T
        rhs = spec.T @ np.diag(spec.eigenvalues)
        assert np.abs(lhs - rhs).max() <= 1e-10 * (1 + np.abs(lhs).max())

    def test_counts_add_up(self):
        rng = np.random.default_rng(12)
        for m_r, m_c in ((0, 2), (3, 0), (2, 1)):
            gen = random_generator(rng, m_u=1, m_r=m_r, m_c=m_c)
            spec = decompose(gen)
            assert spec.m_r + 2 * spec.m_c == gen.m_xi


class TestStateAt:
    def test_time_zero(self):
        gen = rotation_generator()
        assert np.allclose(state_at(gen, 0.0), gen.xi0)

    def test_quarter_turn(self):
        omega = 2.0
        gen = rotation_generator(omega)
        xi = state_at(gen, np.pi / (2 * omega))
        assert np.allclose(xi, [0.0, -1.0], atol=1e-12)

    def test_semigroup_property(self):
        rng = np.random.default_rng(13)
        gen = random_generator(rng, m_u=1, m_r=1, m_c=1)
        import scipy.linalg
        for _ in range(5):
            t1, t2 = rng.uniform(0.0, 2.0, 2)
            lhs = state_at(gen, t1 + t2)
            rhs = scipy.linalg.expm(gen.Xi * t2) @ state_at(gen, t1)
            assert np.abs(lhs - rhs).max() <= 1e-10 * (1 + np.abs(lhs).max())

    def test_ode_satisfied(self):
        rng = np.random.default_rng(14)
        gen = random_generator(rng, m_u=1, m_r=2, m_c=1)
        h = 1e-6
        for t in rng.uniform(0.1, 3.0, 4):
            deriv = (state_at(gen, t + h) - state_at(gen, t - h)) / (2 * h)
            want = gen.Xi @ state_at(gen, t)
            assert np.abs(deriv - want).max() <= \
                1e-6 * (1 + np.abs(want).max())

    def test_states_at_matches_pointwise(self):
        rng = np.random.default_rng(15)
        gen = random_generator(rng, m_u=2, m_r=1, m_c=2)
        times = np.sort(rng.uniform(0.0, 5.0, 8))
        block = states_at(gen, times)
        for k, t in enumerate(times):
            assert np.allclose(block[:, k], state_at(gen, t), atol=1e-10)

    def test_negative_time_rejected(self):
        with pytest.raises(ValueError):
            state_at(rotation_generator(), -0.1)


class TestXiBarComponents:
    def test_identity_spectrum_passthrough(self):
        gen = InputGenerator(Xi=np.diag([0.0, 1.0, 2.0]),
                             Pi=[[1.0, 1.0, 1.0]], xi0=[1.0, 2.0, 3.0])
        spec = decompose(gen)
        xr, xc = xi_bar_components(spec, [4.0, 5.0, 6.0])
        assert np.allclose(xr, [4.0, 5.0, 6.0])
        assert xc.size == 0

    def test_rotation_initial_component(self):
        spec = decompose(rotation_generator())
        xr, xc = xi_bar_components(spec, [1.0, 0.0])
        assert xr.size == 0
        assert xc[0] == pytest.approx(0.5, abs=1e-12)

    def test_round_trip(self):
        rng = np.random.default_rng(16)
        gen = random_generator(rng, m_u=1, m_r=2, m_c=2)
        spec = decompose(gen)
        xi = state_at(gen, 1.234)
        xr, xc = xi_bar_components(spec, xi)
        back = reconstruct_state(spec, xr, xc)
        assert np.abs(back - xi).max() <= 1e-10 * (1 + np.abs(xi).max())

    def test_mispaired_spectrum_detected(self):
        spec = decompose(rotation_generator())
        # breaking conjugacy of T's columns must be flagged
        bad = spec.__class__(
            real_eigs=spec.real_eigs, complex_pairs=spec.complex_pairs,
            T=spec.T, T_inv=np.diag([1.0, 3.0]) @ spec.T_inv,
            eigenvalues=spec.eigenvalues, pi_bar_real=spec.pi_bar_real,
            pi_bar_complex=spec.pi_bar_complex)
        with pytest.raises(ComponentNotReal):
            xi_bar_components(bad, [1.0, 0.5])

    def test_matrix_variant_consistent(self):
        rng = np.random.default_rng(17)
        gen = random_generator(rng, m_u=1, m_r=1, m_c=1)
        spec = decompose(gen)
        times = np.linspace(0.0, 2.0, 5)
        states = states_at(gen, times)
        xr, xc = xi_bar_matrix(spec, states)
        for k, t in enumerate(times):
            r1, c1 = xi_bar_components(spec, states[:, k])
            assert np.allclose(xr[:, k], r1)
            assert np.allclose(xc[:, k], c1)
