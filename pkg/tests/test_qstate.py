import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from jcthermo.qstate import (
    BlochVector,
    DensityMatrix,
    DimensionMismatchError,
    InvalidStateError,
    bloch_from_density,
    density_from_bloch,
    partial_trace_bath,
    partial_trace_system,
    relative_entropy,
    thermal_qubit,
    thermal_state,
    von_neumann_entropy,
)

from conftest import random_density, random_unitary

LN2 = 0.6931471805599453


class TestVonNeumannEntropy:
    def test_maximally_mixed_qubit(self):
        assert von_neumann_entropy(DensityMatrix(np.eye(2) / 2)) == pytest.approx(LN2, abs=1e-14)

    def test_pure_state_zero(self):
        assert von_neumann_entropy(DensityMatrix(np.diag([1.0, 0.0]))) == 0.0

    def test_quarter_three_quarter(self):
        # oracle: hand evaluation of -p ln p - (1-p) ln(1-p) at p = 1/4
        expected = -(0.25 * math.log(0.25) + 0.75 * math.log(0.75))
        assert expected == pytest.approx(0.5623351446188083, abs=1e-15)
        got = von_neumann_entropy(DensityMatrix(np.diag([0.25, 0.75])))
        assert got == pytest.approx(expected, abs=1e-14)

    def test_rejects_non_hermitian(self):
        with pytest.raises(InvalidStateError):
            von_neumann_entropy(np.array([[0.5, 0.1], [0.3, 0.5]], dtype=complex))

    def test_rejects_bad_trace(self):
        with pytest.raises(InvalidStateError):
            von_neumann_entropy(np.diag([0.6, 0.6]).astype(complex))

    def test_basis_invariance(self):
        rng = np.random.default_rng(11)
        for dim in (2, 5):
            rho = random_density(rng, dim)
            s0 = von_neumann_entropy(DensityMatrix(rho))
            for _ in range(10):
                u = random_unitary(rng, dim)
                s1 = von_neumann_entropy(DensityMatrix(u @ rho @ u.conj().T))
                assert abs(s1 - s0) <= 1e-12


class TestRelativeEntropy:
    def test_identical_arguments(self):
        rng = np.random.default_rng(3)
        for dim in (2, 4):
            rho = DensityMatrix(random_density(rng, dim))
            assert relative_entropy(rho, rho) == pytest.approx(0.0, abs=1e-12)

    def test_pure_vs_mixed(self):
        pure = DensityMatrix(np.diag([1.0, 0.0]))
        mixed = DensityMatrix(np.eye(2) / 2)
        assert relative_entropy(pure, mixed) == pytest.approx(LN2, abs=1e-14)

    def test_support_violation_is_infinite(self):
        mixed = DensityMatrix(np.eye(2) / 2)
        pure = DensityMatrix(np.diag([1.0, 0.0]))
        assert relative_entropy(mixed, pure) == math.inf

    def test_klein_inequality(self):
        rng = np.random.default_rng(7)
        for _ in range(50):
            a = DensityMatrix(random_density(rng, 3))
            b = DensityMatrix(random_density(rng, 3))
            assert relative_entropy(a, b) >= -1e-12

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionMismatchError):
            relative_entropy(DensityMatrix(np.eye(2) / 2), DensityMatrix(np.eye(3) / 3))


class TestPartialTraces:
    def test_product_state_recovers_factors(self):
        rng = np.random.default_rng(5)
        for _ in range(100):
            rho_a = random_density(rng, 2)
            rho_b = random_density(rng, 4)
            joint = DensityMatrix(np.kron(rho_a, rho_b))
            assert np.abs(partial_trace_bath(joint, 4).mat - rho_a).max() <= 1e-13
            assert np.abs(partial_trace_system(joint, 4).mat - rho_b).max() <= 1e-13

    def test_bell_like_state(self):
        # (|1,0> + |0,1>) / sqrt(2) with a two-level truncation of the mode
        psi = np.zeros(4, dtype=complex)
        psi[0] = psi[3] = 1.0 / math.sqrt(2.0)   # indices (q=0,n=0) and (q=1,n=1)
        joint = DensityMatrix(np.outer(psi, psi.conj()))
        reduced = partial_trace_bath(joint, 2).mat
        assert np.abs(reduced - np.eye(2) / 2).max() <= 1e-14

    def test_trace_preserved(self):
        rng = np.random.default_rng(9)
        for _ in range(20):
            joint = DensityMatrix(random_density(rng, 6))
            assert abs(partial_trace_bath(joint, 3).mat.trace() - 1) <= 1e-12
            assert abs(partial_trace_system(joint, 3).mat.trace() - 1) <= 1e-12

    def test_thermal_product_at_start(self):
        bath = thermal_state(0.6 * np.arange(5), 0.3)
        qubit = thermal_qubit(1.0, 1.1)
        joint = DensityMatrix(np.kron(qubit.mat, bath.mat))
        assert np.abs(partial_trace_system(joint, 5).mat - bath.mat).max() <= 1e-14

    def test_dimension_validation(self):
        with pytest.raises(DimensionMismatchError):
            partial_trace_bath(DensityMatrix(np.eye(6) / 6), 4)


class TestBlochConversion:
    def test_excited_state_north_pole(self):
        b = bloch_from_density(DensityMatrix(np.diag([1.0, 0.0])))
        assert (b.x, b.y, b.z) == (0.0, 0.0, 1.0)

    def test_maximally_mixed_origin(self):
        b = bloch_from_density(DensityMatrix(np.eye(2) / 2))
        assert b.r == 0.0

    def test_radius_arithmetic(self):
        b = BlochVector(0.3, 0.4, 0.5)
        assert b.r == pytest.approx(math.sqrt(0.5), abs=1e-15)
        assert b.ell == pytest.approx(0.5, abs=1e-15)

    def test_round_trip_grid(self):
        rng = np.random.default_rng(13)
        count = 0
        while count < 1000:
            x, y, z = rng.uniform(-1.0, 1.0, size=3)
            if x * x + y * y + z * z > 1.0:
                continue
            count += 1
            b = BlochVector(x, y, z)
            b2 = bloch_from_density(density_from_bloch(b))
            assert abs(b2.x - x) <= 1e-14
            assert abs(b2.y - y) <= 1e-14
            assert abs(b2.z - z) <= 1e-14

    def test_outside_ball_rejected(self):
        with pytest.raises(InvalidStateError):
            BlochVector(0.9, 0.6, 0.5)

    @given(x=st.floats(-1, 1), y=st.floats(-1, 1), z=st.floats(-1, 1))
    @settings(max_examples=200, deadline=None)
    def test_round_trip_property(self, x, y, z):
        if x * x + y * y + z * z > 1.0:
            return
        b = BlochVector(x, y, z)
        rho = density_from_bloch(b)
        b2 = bloch_from_density(rho)
        assert max(abs(b2.x - x), abs(b2.y - y), abs(b2.z - z)) <= 1e-14


class TestThermalState:
    def test_qubit_population(self):
        rho = thermal_qubit(1.0, 1.1)
        assert rho.mat[0, 0].real == pytest.approx(1.0 / (1.0 + math.exp(1.1)), abs=1e-14)
        assert rho.mat[0, 0].real == pytest.approx(0.249740, abs=5e-7)

    def test_zero_temperature_limit(self):
        rho = thermal_state(np.array([1.0, 0.0]), 1e3)
        assert np.abs(rho.mat - np.diag([0.0, 1.0])).max() <= 1e-10

    def test_truncated_occupation_converges(self):
        # untruncated mean occupation at x = 0.18 from the closed form
        x = 0.18
        exact = 1.0 / math.expm1(x)
        assert exact == pytest.approx(5.0705474617990705, abs=1e-12)
        prev_err = math.inf
        for cutoff in (50, 100, 200, 400):
            w = np.diag(thermal_state(x * np.arange(cutoff), 1.0).mat).real
            nbar = float(np.sum(np.arange(cutoff) * w))
            err = abs(nbar - exact)
            assert err < prev_err or err < 1e-12
            prev_err = err
        assert prev_err <= 1e-10

    def test_normalisation(self):
        rho = thermal_state(np.linspace(0, 3, 40), 2.2)
        assert abs(rho.mat.trace() - 1.0) <= 1e-14

    def test_invalid_inputs(self):
        with pytest.raises(InvalidStateError):
            thermal_state(np.array([np.inf, 0.0]), 1.0)
        with pytest.raises(InvalidStateError):
            thermal_state(np.array([1.0, 0.0]), 0.0)

    @given(beta=st.floats(1e-3, 50.0), gap=st.floats(1e-3, 10.0))
    @settings(max_examples=100, deadline=None)
    def test_gibbs_properties(self, beta, gap):
        rho = thermal_state(gap * np.arange(6), beta)
        w = np.diag(rho.mat).real
        assert abs(w.sum() - 1.0) <= 1e-14
        assert np.all(np.diff(w) <= 1e-15)   # populations decrease with energy


class TestDensityMatrixType:
    def test_outputs_satisfy_invariants(self):
        rng = np.random.default_rng(21)
        outputs = [
            thermal_qubit(1.0, 0.7),
            partial_trace_bath(DensityMatrix(random_density(rng, 8)), 4),
            density_from_bloch(BlochVector(0.1, -0.2, 0.3)),
        ]
        for rho in outputs:
            m = rho.mat
            assert np.abs(m - m.conj().T).max() <= 1e-12
            assert abs(m.trace() - 1.0) <= 1e-12
            assert np.linalg.eigvalsh(m)[0] >= -1e-10

    def test_matrix_is_read_only(self):
        rho = thermal_qubit(1.0, 1.0)
        with pytest.raises(ValueError):
            rho.mat[0, 0] = 0.3

    def test_rejects_genuine_negativity(self):
        with pytest.raises(InvalidStateError):
            DensityMatrix(np.diag([1.1, -0.1]))
