"""
Polynomial Approximation Module

Bounded, definite-parity polynomials for the applications: Jacobi-Anger style
cos/sin approximants, an odd approximant of 1/x away from the origin, and an
even ground-state filter. Each one is a Chebyshev interpolant of a smooth
target, projected onto its parity and certified on Chebyshev grids.
"""

import logging
from dataclasses import dataclass
from typing import Any, Callable, Dict, List, NamedTuple, Sequence, Tuple

import numpy as np
from numpy.polynomial import chebyshev
from scipy import special

from .qsp_core import GRID_POINTS, MAX_TARGET_SUP, TargetPolynomial, chebyshev_grid

logger = logging.getLogger(__name__)

Interval = Tuple[float, float]
ESCALATION_STEPS = (1.0, 1.25, 1.5, 1.75, 2.0)


class CertificationError(RuntimeError):
    """Raised when no degree up to twice the seed meets the certified error."""

    def __init__(self, message: str, degree: int, best_error: float):
        super().__init__(message)
        self.degree = degree
        self.best_error = best_error


@dataclass(frozen=True, eq=False)
class CertifiedApproximant:
    """
    Polynomial with grid-certified approximation errors.

    Attributes:
        polynomial: The approximant
        target: Description of the approximated function
        intervals: Certification intervals
        certified_errors: Max error on a Chebyshev grid of each interval
    """
    polynomial: TargetPolynomial
    target: str
    intervals: Tuple[Interval, ...]
    certified_errors: Tuple[float, ...]

    @property
    def degree(self) -> int:
        return self.polynomial.degree

    @property
    def parity(self) -> int:
        return self.polynomial.parity

    @property
    def max_error(self) -> float:
        return max(self.certified_errors)

    def __call__(self, x):
        return self.polynomial(x)

    def to_record(self) -> Dict[str, Any]:
        return {
            "basis": "chebyshev",
            "parity": self.parity,
            "degree": self.degree,
            "coefficients": [float(c) for c in self.polynomial.coefficients],
            "certified_errors": list(self.certified_errors),
            "target": self.target,
            "intervals": [list(i) for i in self.intervals],
        }

    @staticmethod
    def from_record(record: Dict[str, Any]) -> "CertifiedApproximant":
        """
        Rebuild an approximant from its coefficient record.

        Raises:
            ValueError: If the basis is not chebyshev or a field is missing
        """
        if record.get("basis") != "chebyshev":
            raise ValueError(f"Unsupported basis {record.get('basis')!r}")
        try:
            polynomial = TargetPolynomial(
                coefficients=np.array(record["coefficients"], dtype=float),
                parity=int(record["parity"]),
            )
            return CertifiedApproximant(
                polynomial=polynomial,
                target=str(record["target"]),
                intervals=tuple((float(a), float(b)) for a, b in record["intervals"]),
                certified_errors=tuple(float(e) for e in record["certified_errors"]),
            )
        except KeyError as e:
            raise ValueError(f"Approximant record is missing field {e}") from e


class TrigApproximants(NamedTuple):
    cos: CertifiedApproximant
    sin: CertifiedApproximant
    degree: int


def chebyshev_fit(func: Callable[[float], float], degree: int, parity: int) -> TargetPolynomial:
    """
    Chebyshev interpolant with definite parity.

    The degree drops by one when its parity disagrees. If the interpolant
    comes within 1e-6 of 1 on the grid, it is scaled down to 1 − 1e-6.

    Args:
        func: Scalar function bounded on [-1, 1]
        degree: Interpolation degree
        parity: 0 for even, 1 for odd

    Returns:
        TargetPolynomial

    Raises:
        ValueError: If no degree of the requested parity fits
    """
    if parity not in (0, 1):
        raise ValueError(f"Parity must be 0 or 1, got {parity}")
    if degree % 2 != parity:
        degree -= 1
    if degree < 0:
        raise ValueError("An odd polynomial needs degree at least 1")
    coefficients = chebyshev.chebinterpolate(np.vectorize(func, otypes=[float]), degree)
    coefficients[1 - parity::2] = 0.0
    sup = float(np.max(np.abs(chebyshev.chebval(chebyshev_grid(), coefficients))))
    if sup > MAX_TARGET_SUP:
        coefficients *= MAX_TARGET_SUP / sup
    return TargetPolynomial(coefficients=coefficients, parity=parity)


def certify(
    polynomial: TargetPolynomial,
    references: Sequence[Callable[[np.ndarray], np.ndarray]],
    intervals: Sequence[Interval],
    points: int = GRID_POINTS,
) -> Tuple[float, ...]:
    """Max |p − reference| on a Chebyshev grid of each interval."""
    errors = []
    for reference, (lower, upper) in zip(references, intervals):
        grid = chebyshev_grid(lower, upper, points)
        errors.append(float(np.max(np.abs(polynomial(grid) - reference(grid)))))
    return tuple(errors)


def _with_parity(degree: int, parity: int, minimum: int) -> int:
    degree = max(int(degree), minimum)
    return degree if degree % 2 == parity else degree + 1


def _certified_fit(
    func: Callable[[float], float],
    parity: int,
    seed: int,
    minimum: int,
    references: Sequence[Callable[[np.ndarray], np.ndarray]],
    intervals: Sequence[Interval],
    tolerance: float,
    label: str,
) -> Tuple[TargetPolynomial, Tuple[float, ...]]:
    """Escalate from the seed degree up to twice it, then lower greedily by 2."""
    seed = _with_parity(seed, parity, minimum)
    best_error = np.inf
    found = None
    for step in ESCALATION_STEPS:
        degree = _with_parity(int(np.ceil(step * seed)), parity, minimum)
        polynomial = chebyshev_fit(func, degree, parity)
        errors = certify(polynomial, references, intervals)
        best_error = min(best_error, max(errors))
        if max(errors) <= tolerance:
            found = (degree, polynomial, errors)
            break
        logger.warning(f"{label}: degree {degree} certifies only {max(errors):.3e} > {tolerance:.3e}")
    if found is None:
        raise CertificationError(
            f"{label}: no degree up to {2 * seed} reaches {tolerance:.3e} (best {best_error:.3e})",
            2 * seed,
            best_error,
        )

    degree, polynomial, errors = found
    while degree - 2 >= minimum:
        lower = chebyshev_fit(func, degree - 2, parity)
        lower_errors = certify(lower, references, intervals)
        if max(lower_errors) > tolerance:
            break
        degree, polynomial, errors = degree - 2, lower, lower_errors
    logger.info(f"{label}: certified degree {degree} with error {max(errors):.3e}")
    return polynomial, errors


def trig_degree_bound(beta: float, eps: float) -> int:
    """⌈min over q ∈ {0.1, …, 3} of e^{q+1}β/2 + ln(4/(5ε))/q + 1⌉."""
    q = np.linspace(0.1, 3.0, 30)
    bound = np.exp(q + 1.0) * beta / 2.0 + np.log(4.0 / (5.0 * eps)) / q + 1.0
    return int(np.ceil(np.min(bound)))


def trig_approx(beta: float, eps: float) -> TrigApproximants:
    """
    Even approximant of cos(βx)/2 and odd approximant of sin(βx)/2.

    Args:
        beta: Evolution parameter β ≥ 0
        eps: Total error; each approximant is certified within ε/2

    Returns:
        TrigApproximants(cos, sin, degree) with degree the larger of the two

    Raises:
        ValueError: If β < 0 or ε ∉ (0, 1/e)
        CertificationError: If certification fails up to twice the seed degree
    """
    if not beta >= 0:
        raise ValueError(f"beta must be non-negative, got {beta}")
    if not 0.0 < eps < np.exp(-1.0):
        raise ValueError(f"eps must lie in (0, 1/e), got {eps}")
    seed = trig_degree_bound(beta, eps)
    full = ((-1.0, 1.0),)
    tolerance = 0.5 * eps

    def cos_target(x):
        return 0.5 * np.cos(beta * x)

    def sin_target(x):
        return 0.5 * np.sin(beta * x)

    p_cos, cos_errors = _certified_fit(
        cos_target, 0, seed, 2, [cos_target], full, tolerance, f"cos({beta:g}x)/2"
    )
    p_sin, sin_errors = _certified_fit(
        sin_target, 1, seed, 1, [sin_target], full, tolerance, f"sin({beta:g}x)/2"
    )
    cos_approx = CertifiedApproximant(p_cos, f"cos({beta!r}x)/2", full, cos_errors)
    sin_approx = CertifiedApproximant(p_sin, f"sin({beta!r}x)/2", full, sin_errors)
    return TrigApproximants(cos_approx, sin_approx, max(p_cos.degree, p_sin.degree))


def inverse_approx(kappa: float, eps: float) -> CertifiedApproximant:
    """
    Odd approximant of 3/(4κx) on [−1, −1/κ] ∪ [1/κ, 1].

    The fitted target is 3/(4κx) · (1 − e^{−(x/σ)⁴}) with
    σ = 1/(κ ln(6/ε)^{1/4}), which is smooth through the origin and within
    ε/8 of 3/(4κx) on the outer intervals. The step width is σ rather than a
    fixed 1/(2κ); the step is within ε/6 of 1 at |x| = 1/κ.

    Args:
        kappa: Condition number κ ≥ 1
        eps: Certified error on the outer intervals

    Returns:
        Odd CertifiedApproximant

    Raises:
        ValueError: If κ < 1 or ε ∉ (0, 1)
        CertificationError: If certification fails up to twice the seed degree
    """
    if not kappa >= 1.0:
        raise ValueError(f"kappa must be at least 1, got {kappa}")
    if not 0.0 < eps < 1.0:
        raise ValueError(f"eps must lie in (0, 1), got {eps}")
    sigma = 1.0 / (kappa * np.log(6.0 / eps) ** 0.25)
    scale = 3.0 / (4.0 * kappa)

    def target(x: float) -> float:
        if x == 0.0:
            return 0.0
        return scale * -np.expm1(-((x / sigma) ** 4)) / x

    def reference(xs: np.ndarray) -> np.ndarray:
        return scale / xs

    intervals = ((-1.0, -1.0 / kappa), (1.0 / kappa, 1.0))
    seed = int(np.ceil(2.0 * kappa * np.log(2.0 / eps)))
    polynomial, errors = _certified_fit(
        target, 1, seed, 1, [reference, reference], intervals, eps, f"3/(4·{kappa:g}x)"
    )
    return CertifiedApproximant(polynomial, f"3/(4*{kappa!r}*x)", intervals, errors)


def filter_bands(mu: float, delta: float, eta: float) -> Tuple[Interval, Interval]:
    """
    Pass and stop bands of the filter in the cosine variable.

    Returns:
        ([cos(μ − Δ/2), cos η], [cos(1 − η), cos(μ + Δ/2)])

    Raises:
        ValueError: Unless 0 < η ≤ μ − Δ/2 < μ + Δ/2 < 1 − η
    """
    if not (0.0 < eta <= mu - 0.5 * delta < mu + 0.5 * delta < 1.0 - eta):
        raise ValueError(
            f"Infeasible filter bands: need 0 < η ≤ μ − Δ/2 < μ + Δ/2 < 1 − η, "
            f"got μ = {mu}, Δ = {delta}, η = {eta}"
        )
    passband = (float(np.cos(mu - 0.5 * delta)), float(np.cos(eta)))
    stopband = (float(np.cos(1.0 - eta)), float(np.cos(mu + 0.5 * delta)))
    return passband, stopband


def gsp_filter_approx(mu: float, delta: float, eta: float, eps: float) -> CertifiedApproximant:
    """
    Even filter F ≈ 1 on the pass band and ≈ 0 on the stop band.

    The fitted target is (1 − ε/4)(h(x) + h(−x)) with the error-function step
    h(x) = ½(1 + erf(k(x − cos μ))), kept below 1 so its phases stay well conditioned.

    Args:
        mu: Filter center in the eigenvalue variable
        delta: Spectral gap Δ
        eta: Margin η
        eps: Certified error on both bands

    Returns:
        Even CertifiedApproximant with intervals (pass band, stop band)

    Raises:
        ValueError: On infeasible bands or ε ∉ (0, 1)
        CertificationError: If certification fails up to twice the seed degree
    """
    if not 0.0 < eps < 1.0:
        raise ValueError(f"eps must lie in (0, 1), got {eps}")
    passband, stopband = filter_bands(mu, delta, eta)
    center = float(np.cos(mu))
    width = min(passband[0] - center, center - stopband[1])
    steepness = float(special.erfcinv(eps)) / width

    ceiling = 1.0 - 0.25 * eps

    def target(x: float) -> float:
        step = 0.5 * (special.erf(steepness * (x - center)) + special.erf(steepness * (-x - center))) + 1.0
        return ceiling * step

    intervals = (passband, stopband)
    references: List[Callable[[np.ndarray], np.ndarray]] = [np.ones_like, np.zeros_like]
    seed = int(np.ceil(2.0 * np.log(2.0 / eps) / width))
    polynomial, errors = _certified_fit(
        target, 0, seed, 2, references, intervals, eps, f"filter(μ={mu:g}, Δ={delta:g})"
    )
    return CertifiedApproximant(polynomial, f"filter(mu={mu!r}, Delta={delta!r}, eta={eta!r})", intervals, errors)
