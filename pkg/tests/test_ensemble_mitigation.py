"""
Tests for Ensemble Mitigation Module
"""

import numpy as np
import pytest

from enqsp.block_encoding import dilate_hermitian, encoded_block
from enqsp.ensemble_mitigation import (
    IllPosedError,
    ensemble_average_block,
    ensemble_size_for,
    expectation_check,
    explicit_lcu_average,
    measure_error_budget,
    noisy_sample_encodings,
    polynomial_reference,
    require_signal,
    sample_noisy_block,
    split_error_budget,
)
from enqsp.noise_model import NoiseModel, StreamKey, attenuation_factor
from enqsp.numerics import check_unitary, matfunc_hermitian, random_hermitian
from enqsp.qsp_core import PhaseFactorSequence, QubitizationCircuit


@pytest.fixture
def encoding():
    return dilate_hermitian(random_hermitian(2, np.random.default_rng(21), norm=0.9))


@pytest.fixture
def phases():
    return PhaseFactorSequence((0.3, -1.2, 0.8, 0.5))


class TestEnsembleAverage:
    """Tests for block-level ensemble averaging."""

    def test_noiseless_average_is_polynomial(self, encoding, phases):
        """Test the noiseless average is exactly p(A)."""
        result = ensemble_average_block(encoding, phases, NoiseModel.none(), 3, StreamKey(1))
        assert result.rescale == 1.0
        assert result.error < 1e-12
        assert result.unmitigated_error < 1e-12

    def test_zero_variance_gaussian(self, encoding, phases):
        """Test a zero-variance Gaussian behaves like no noise."""
        result = ensemble_average_block(encoding, phases, NoiseModel.gaussian(0.0), 2, StreamKey(1))
        assert result.error < 1e-12

    def test_reference_is_real_part(self, encoding, phases):
        """Test the default reference is ½(P(A) + P(A)†)."""
        circuit_block = QubitizationCircuit(encoding).block(phases.phases)
        expected = 0.5 * (circuit_block + circuit_block.conj().T)
        assert np.max(np.abs(polynomial_reference(encoding, phases) - expected)) < 1e-12

    def test_query_accounting(self, encoding, phases):
        """Test each of the 2M circuits costs d queries."""
        result = ensemble_average_block(encoding, phases, NoiseModel.gaussian(0.05), 5, StreamKey(2))
        assert result.query_depth == 4
        assert result.total_queries == 2 * 5 * 4

    def test_averaging_reduces_error(self, encoding, phases):
        """Test a large ensemble is within the concentration bound."""
        model = NoiseModel.gaussian(0.05)
        result = ensemble_average_block(encoding, phases, model, 256, StreamKey(3))
        c_d = attenuation_factor(model) ** phases.degree
        assert result.rescale == pytest.approx(c_d)
        assert result.error <= np.sqrt(np.log(2 / 0.05) / 256) / c_d
        assert result.scaling_factor == pytest.approx(1.0 / c_d)

    def test_deterministic_for_seed(self, encoding, phases):
        """Test the same key reproduces the average bit for bit."""
        model = NoiseModel.gaussian(0.1)
        first = ensemble_average_block(encoding, phases, model, 4, StreamKey(7))
        second = ensemble_average_block(encoding, phases, model, 4, StreamKey(7))
        assert np.array_equal(first.averaged_block, second.averaged_block)

    def test_first_sample_matches_single_draw(self, encoding, phases):
        """Test sample 0 of the ensemble uses the stream of child 0."""
        model = NoiseModel.gaussian(0.1)
        key = StreamKey(8)
        single = sample_noisy_block(encoding, phases, model, key.child(0))
        result = ensemble_average_block(encoding, phases, model, 1, key)
        assert np.max(np.abs(result.single_block - 0.5 * (single + single.conj().T))) < 1e-14

    def test_ill_posed(self, encoding, phases):
        """Test a vanishing attenuated signal is rejected."""
        with pytest.raises(IllPosedError, match="ill-posed"):
            ensemble_average_block(encoding, phases, NoiseModel.gaussian(40.0), 1, StreamKey(0))

    def test_size_must_be_positive(self, encoding, phases):
        """Test M = 0 is rejected."""
        with pytest.raises(ValueError, match="at least 1"):
            ensemble_average_block(encoding, phases, NoiseModel.none(), 0, StreamKey(0))


class TestExplicitLCU:
    """Tests for the literal LCU over sampled circuits."""

    def test_matches_block_average(self, encoding, phases):
        """Test the explicit LCU block equals the block-level average for M = 2."""
        model = NoiseModel.gaussian(0.1)
        key = StreamKey(4)
        samples = noisy_sample_encodings(encoding, phases, model, 2, key)
        explicit = explicit_lcu_average(samples)
        averaged = ensemble_average_block(encoding, phases, model, 2, key)
        assert np.max(np.abs(explicit.top_left - averaged.averaged_block)) < 1e-12
        assert check_unitary(explicit.unitary) < 1e-10

    def test_pair_count_must_be_power_of_two(self, encoding, phases):
        """Test M = 3 is rejected."""
        samples = noisy_sample_encodings(encoding, phases, NoiseModel.none(), 3, StreamKey(0))
        with pytest.raises(ValueError, match="power of two"):
            explicit_lcu_average(samples)

    def test_odd_sample_count_rejected(self, encoding, phases):
        """Test an odd sample count is rejected."""
        samples = noisy_sample_encodings(encoding, phases, NoiseModel.none(), 1, StreamKey(0))
        with pytest.raises(ValueError, match="2M samples"):
            explicit_lcu_average(samples[:1])


class TestEnsembleSize:
    """Tests for the ensemble size rule."""

    def test_unattenuated(self):
        """Test ε = 0.1, δ = 0.05, c^d = 1 gives 369."""
        assert ensemble_size_for(0.1, 0.05, 1.0, 4) == 369

    def test_half_signal(self):
        """Test c^d = 0.5 quadruples the size to 1476."""
        assert ensemble_size_for(0.1, 0.05, 0.5, 1) == 1476

    def test_invalid_arguments(self):
        """Test ε, δ and c outside their ranges are rejected."""
        with pytest.raises(ValueError, match="eps_imp"):
            ensemble_size_for(0.0, 0.05, 1.0, 1)
        with pytest.raises(ValueError, match="delta"):
            ensemble_size_for(0.1, 1.0, 1.0, 1)
        with pytest.raises(ValueError, match="Attenuation"):
            ensemble_size_for(0.1, 0.05, 1.5, 1)

    def test_ill_posed_size(self):
        """Test a tiny c^d is ill-posed."""
        with pytest.raises(IllPosedError):
            ensemble_size_for(0.1, 0.05, 0.01, 4)

    def test_require_signal(self):
        """Test the guard passes signals at the threshold."""
        assert require_signal(1e-6) == 1e-6
        with pytest.raises(IllPosedError) as excinfo:
            require_signal(1e-7)
        assert excinfo.value.signal == 1e-7


class TestExpectationCheck:
    """Tests for the Monte Carlo check of E[P̃(A)] = c^d P(A)."""

    def test_noiseless_exact(self, encoding, phases):
        """Test identical samples reproduce the prediction exactly."""
        check = expectation_check(encoding, phases, NoiseModel.none(), 10, StreamKey(5))
        assert check.max_deviation == 0.0
        assert check.standard_error == 0.0

    def test_noisy_mean(self, encoding, phases):
        """Test the noisy mean is close to the attenuated block."""
        check = expectation_check(encoding, phases, NoiseModel.gaussian(0.1), 4000, StreamKey(6))
        assert check.max_deviation <= 0.05
        assert check.max_deviation <= 6 * check.standard_error + 1e-3

    def test_needs_two_samples(self, encoding, phases):
        """Test at least two samples are needed."""
        with pytest.raises(ValueError, match="at least 2"):
            expectation_check(encoding, phases, NoiseModel.none(), 1, StreamKey(0))


class TestErrorBudget:
    """Tests for error budget bookkeeping."""

    def test_split(self):
        """Test the balanced split."""
        budget = split_error_budget(0.1)
        assert budget.implementation == pytest.approx(0.05)
        assert budget.algorithmic == pytest.approx(0.05)
        assert budget.consistent

    def test_split_rejects_zero(self):
        """Test the total must be positive."""
        with pytest.raises(ValueError, match="positive"):
            split_error_budget(0.0)

    def test_measured_budget_triangle(self, encoding):
        """Test measured budgets obey the triangle inequality."""
        a = encoded_block(encoding)
        exact = matfunc_hermitian(a, np.cos)
        polynomial = matfunc_hermitian(a, lambda x: 1 - x * x / 2)
        rescaled = polynomial + 0.01 * np.eye(2)
        budget = measure_error_budget(rescaled, polynomial, exact)
        assert budget.implementation == pytest.approx(0.01)
        assert budget.consistent
