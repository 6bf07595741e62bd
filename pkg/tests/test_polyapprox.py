"""
Tests for Polynomial Approximation Module
"""

import numpy as np
import pytest

from enqsp.polyapprox import (
    CertifiedApproximant,
    chebyshev_fit,
    certify,
    filter_bands,
    gsp_filter_approx,
    inverse_approx,
    trig_approx,
    trig_degree_bound,
)
from enqsp.qsp_core import MAX_TARGET_SUP, SUP_NORM_MARGIN, chebyshev_grid


class TestChebyshevFit:
    """Tests for definite-parity Chebyshev interpolation."""

    def test_degree_follows_parity(self):
        """Test an even degree drops by one for an odd fit."""
        polynomial = chebyshev_fit(lambda x: 0.5 * x ** 3, 4, 1)
        assert polynomial.degree == 3
        assert polynomial(0.5) == pytest.approx(0.0625)

    def test_wrong_parity_coefficients_zeroed(self):
        """Test the opposite-parity part of the function is dropped."""
        polynomial = chebyshev_fit(lambda x: 0.5 * x + 0.3, 3, 0)
        assert polynomial(0.7) == pytest.approx(0.3)

    def test_rescaled_below_one(self):
        """Test interpolants exceeding 1 are scaled to 1 − 1e-6."""
        polynomial = chebyshev_fit(lambda x: 1.5 * x, 1, 1)
        assert polynomial.sup_norm == pytest.approx(MAX_TARGET_SUP, abs=1e-12)

    def test_rescaled_inside_margin(self):
        """Test an interpolant between 1 − 1e-6 and 1 is scaled to the margin."""
        polynomial = chebyshev_fit(lambda x: (1.0 - 0.5 * SUP_NORM_MARGIN) * x, 1, 1)
        assert polynomial.sup_norm == pytest.approx(MAX_TARGET_SUP, abs=1e-12)

    def test_invalid_parity(self):
        """Test parity must be 0 or 1."""
        with pytest.raises(ValueError, match="Parity"):
            chebyshev_fit(np.cos, 4, 3)

    def test_certify_intervals(self):
        """Test certification reports one error per interval."""
        polynomial = chebyshev_fit(lambda x: x ** 2, 2, 0)
        errors = certify(polynomial, [lambda x: x ** 2, lambda x: np.zeros_like(x)], [(-1.0, 1.0), (0.0, 0.5)])
        assert errors[0] < 1e-14
        assert errors[1] == pytest.approx(0.25)


class TestTrigApprox:
    """Tests for the cos/sin approximant pair."""

    def test_certified_within_half_eps(self):
        """Test both approximants are within ε/2 and have the right parity."""
        pair = trig_approx(2.0, 0.1)
        assert pair.cos.parity == 0
        assert pair.sin.parity == 1
        assert pair.cos.max_error <= 0.05
        assert pair.sin.max_error <= 0.05
        assert pair.degree == max(pair.cos.degree, pair.sin.degree)

    def test_values(self):
        """Test the approximants against cos and sin on a dense grid."""
        pair = trig_approx(1.5, 0.01)
        xs = chebyshev_grid(points=301)
        assert np.max(np.abs(pair.cos(xs) - 0.5 * np.cos(1.5 * xs))) <= 0.005
        assert np.max(np.abs(pair.sin(xs) - 0.5 * np.sin(1.5 * xs))) <= 0.005

    def test_zero_time(self):
        """Test β = 0 gives the constant ½ and a vanishing sine."""
        pair = trig_approx(0.0, 0.1)
        assert pair.cos(0.3) == pytest.approx(0.5)
        assert pair.sin(0.3) == pytest.approx(0.0, abs=1e-12)

    def test_degree_grows_with_beta(self):
        """Test the seed degree grows with β."""
        assert trig_degree_bound(10.0, 0.01) > trig_degree_bound(1.0, 0.01)

    def test_eps_range(self):
        """Test ε must lie below 1/e."""
        with pytest.raises(ValueError, match="eps"):
            trig_approx(1.0, 0.5)
        with pytest.raises(ValueError, match="beta"):
            trig_approx(-1.0, 0.1)


class TestInverseApprox:
    """Tests for the odd approximant of 3/(4κx)."""

    def test_certified_on_outer_intervals(self):
        """Test the approximant is odd and within ε away from the origin."""
        approximant = inverse_approx(2.0, 0.05)
        assert approximant.parity == 1
        assert approximant.max_error <= 0.05
        assert approximant.intervals == ((-1.0, -0.5), (0.5, 1.0))
        assert approximant(0.75) == pytest.approx(0.5, abs=0.05)
        assert approximant(-0.75) == pytest.approx(-0.5, abs=0.05)

    def test_degree_grows_with_kappa(self):
        """Test the certified degree is monotone over κ ∈ {2, 4, 8}."""
        degrees = [inverse_approx(kappa, 0.01).degree for kappa in (2.0, 4.0, 8.0)]
        assert degrees == sorted(degrees)
        assert degrees[0] < degrees[-1]

    def test_kappa_range(self):
        """Test κ < 1 is rejected."""
        with pytest.raises(ValueError, match="kappa"):
            inverse_approx(0.5, 0.1)

    def test_record(self):
        """Test the coefficient record rebuilds the same polynomial."""
        approximant = inverse_approx(2.0, 0.1)
        record = approximant.to_record()
        assert record["basis"] == "chebyshev"
        assert record["parity"] == 1
        rebuilt = CertifiedApproximant.from_record(record)
        assert rebuilt.degree == approximant.degree
        assert rebuilt(0.6) == pytest.approx(approximant(0.6))

    def test_record_basis(self):
        """Test only the Chebyshev basis is accepted."""
        with pytest.raises(ValueError, match="Unsupported basis"):
            CertifiedApproximant.from_record({"basis": "monomial"})

    def test_record_missing_field(self):
        """Test a missing field is reported."""
        with pytest.raises(ValueError, match="missing field"):
            CertifiedApproximant.from_record({"basis": "chebyshev", "coefficients": [0.0, 0.5], "parity": 1})


class TestFilterApprox:
    """Tests for the ground-state filter."""

    def test_bands(self):
        """Test the bands in the cosine variable."""
        passband, stopband = filter_bands(0.4, 0.6, 0.05)
        assert passband == pytest.approx((np.cos(0.1), np.cos(0.05)))
        assert stopband == pytest.approx((np.cos(0.95), np.cos(0.7)))

    def test_infeasible_bands(self):
        """Test bands overlapping the margins are rejected."""
        with pytest.raises(ValueError, match="Infeasible"):
            filter_bands(0.2, 0.6, 0.05)

    def test_certified_filter(self):
        """Test the filter is even and within ε of 1 and 0 on its bands."""
        approximant = gsp_filter_approx(0.4, 0.6, 0.05, 0.05)
        assert approximant.parity == 0
        assert approximant.max_error <= 0.05
        assert approximant(np.cos(0.07)) == pytest.approx(1.0, abs=0.05)
        assert approximant(np.cos(0.8)) == pytest.approx(0.0, abs=0.05)
        assert approximant.polynomial.sup_norm < 1.0

    def test_eps_range(self):
        """Test ε must lie in (0, 1)."""
        with pytest.raises(ValueError, match="eps"):
            gsp_filter_approx(0.4, 0.6, 0.05, 1.0)

    def test_degree_grows_as_gap_shrinks(self):
        """Test the certified degree is monotone as Δ halves."""
        degrees = [gsp_filter_approx(0.4, delta, 0.05, 0.1).degree for delta in (0.6, 0.3, 0.15)]
        assert degrees == sorted(degrees)
        assert degrees[0] < degrees[-1]


def _refined_error(approximant, references):
    return max(certify(approximant.polynomial, references, approximant.intervals, points=4001))


class TestRefinedCertification:
    """Tests that certified errors survive a 4001-point grid."""

    def test_trig(self):
        """Test both trig approximants."""
        pair = trig_approx(2.0, 0.1)
        refined_cos = _refined_error(pair.cos, [lambda x: 0.5 * np.cos(2.0 * x)])
        refined_sin = _refined_error(pair.sin, [lambda x: 0.5 * np.sin(2.0 * x)])
        assert refined_cos == pytest.approx(pair.cos.max_error, rel=0.1)
        assert refined_sin == pytest.approx(pair.sin.max_error, rel=0.1)

    def test_inverse(self):
        """Test the 1/x approximant on both outer intervals."""
        approximant = inverse_approx(4.0, 0.05)
        refined = _refined_error(approximant, [lambda x: 0.75 / (4.0 * x)] * 2)
        assert refined == pytest.approx(approximant.max_error, rel=0.1)
        assert refined <= 0.05 * 1.1

    def test_filter(self):
        """Test the filter on its pass and stop bands."""
        approximant = gsp_filter_approx(0.4, 0.6, 0.05, 0.05)
        refined = _refined_error(approximant, [np.ones_like, np.zeros_like])
        assert refined == pytest.approx(approximant.max_error, rel=0.1)
