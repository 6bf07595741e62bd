"""
Experiment Kinds Module

The nine experiment kinds the runner knows. Each kind checks its parameters,
prepares shared read-only state once per run (problem instances, solved
phases, certified approximants), and turns one trial into report rows.

Setup randomness comes from the stream (seed, 1); trial i draws from
(seed, 0, i), so a trial's rows do not depend on which other trials ran.
"""

import logging
import math
from dataclasses import dataclass
from functools import partial
from typing import Any, Callable, Dict, List, Optional, Sequence

import numpy as np

from enqsp.applications import (
    GSPProblem,
    HamSimProblem,
    PostSelectStats,
    QLSPProblem,
    gsp_plan,
    gsp_prepare_state,
    gsp_state_accuracy,
    hsim_plan,
    hsim_prepare_state,
    qlsp_plan,
    qlsp_prepare_state,
    qlsp_state_accuracy,
)
from enqsp.block_encoding import BlockEncoding, dilate_hermitian, encoded_block
from enqsp.ensemble_mitigation import (
    MAX_EXPLICIT_PAIRS,
    ensemble_average_block,
    ensemble_size_for,
    expectation_check,
    explicit_lcu_average,
    noisy_sample_encodings,
    polynomial_reference,
)
from enqsp.estimation import (
    FixedSampler,
    NoisyQSPSampler,
    SignFlipSampler,
    estimate_qsp_observable,
    run_hadamard_test,
    shots_for,
)
from enqsp.noise_model import StreamKey, attenuation_factor
from enqsp.numerics import (
    ComplexMatrix,
    StateVector,
    check_unitary,
    fidelity,
    is_power_of_two,
    matfunc_hermitian,
    random_hermitian,
    random_state,
    random_unitary,
    spectral_norm,
)
from enqsp.qsp_core import (
    PhaseFactorSequence,
    SolverOptions,
    TargetPolynomial,
    chebyshev_grid,
    fit_to_margin,
    qsp_polynomial_values,
    solve_phase_factors,
)

from .config import ExperimentConfig
from .registry import ExperimentRegistry, TrialSpec
from .report import ReportRow

logger = logging.getLogger(__name__)

BLOCK_MATCH_TOL = 1e-12
UNITARITY_TOL = 1e-10
PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
HADAMARD_SAMPLERS = ("fixed", "sign_flip", "noisy_qsp")


def setup_key(config: ExperimentConfig) -> StreamKey:
    return StreamKey(config.master_seed, (1,))


def _row(config: ExperimentConfig, trial: TrialSpec, degree: int, c_d: float,
         metric: str, value: float, bound: float) -> ReportRow:
    return ReportRow(
        experiment_id=trial.trial_id,
        kind=config.kind,
        seed=config.master_seed,
        degree=degree,
        nu=trial.nu,
        c_d=c_d,
        m=trial.m,
        metric=metric,
        value=float(value),
        bound=float(bound),
    )


def random_phases(rng: np.random.Generator, degree: int) -> PhaseFactorSequence:
    return PhaseFactorSequence(tuple(rng.uniform(-np.pi, np.pi, degree)))


def random_target(rng: np.random.Generator, degree: int, sup: float) -> TargetPolynomial:
    """Random Chebyshev series of the degree's parity, scaled to sup-norm `sup` on [-1, 1] and capped at the solver margin."""
    parity = degree % 2
    coefficients = np.zeros(degree + 1)
    coefficients[parity::2] = rng.normal(size=coefficients[parity::2].size)
    values = np.polynomial.chebyshev.chebval(chebyshev_grid(), coefficients)
    coefficients *= sup / np.max(np.abs(values))
    return fit_to_margin(TargetPolynomial(coefficients=coefficients, parity=parity))


class ParamChecker:
    """Collects every problem with a kind's parameters."""

    def __init__(self, params: Dict[str, Any]):
        self.params = params
        self.errors: List[str] = []

    def fail(self, name: str, message: str) -> None:
        self.errors.append(f"params.{name}: {message}")

    def integer(self, name: str, minimum: int = 1, maximum: Optional[int] = None) -> None:
        value = self.params[name]
        if isinstance(value, bool) or not isinstance(value, int) or value < minimum or (
            maximum is not None and value > maximum
        ):
            upper = f", at most {maximum}" if maximum is not None else ""
            self.fail(name, f"must be an integer of at least {minimum}{upper}, got {value!r}")

    def real(self, name: str, lower: float, upper: float, open_lower: bool = True,
             open_upper: bool = True, allow_none: bool = False) -> None:
        value = self.params[name]
        if value is None and allow_none:
            return
        if isinstance(value, bool) or not isinstance(value, (int, float)) or not math.isfinite(value):
            self.fail(name, f"must be a finite number, got {value!r}")
            return
        above = value > lower if open_lower else value >= lower
        below = value < upper if open_upper else value <= upper
        if not (above and below):
            left = "(" if open_lower else "["
            right = ")" if open_upper else "]"
            self.fail(name, f"must lie in {left}{lower:g}, {upper:g}{right}, got {value!r}")

    def flag(self, name: str) -> None:
        if not isinstance(self.params[name], bool):
            self.fail(name, f"must be true or false, got {self.params[name]!r}")

    def ensemble_size(self, name: str = "ensemble_size") -> None:
        value = self.params[name]
        if value != "auto":
            self.integer(name)

    def shots(self, name: str = "shots") -> None:
        if self.params[name] is not None:
            self.integer(name)

    def real_list(self, name: str, length: Optional[int] = None) -> None:
        value = self.params[name]
        if not isinstance(value, list) or not value or not all(
            not isinstance(v, bool) and isinstance(v, (int, float)) and math.isfinite(v) for v in value
        ):
            self.fail(name, f"must be a non-empty list of finite numbers, got {value!r}")
        elif length is not None and len(value) != length:
            self.fail(name, f"must have {length} entries, got {len(value)}")

    def paired(self, first: str, second: str) -> None:
        if (self.params[first] is None) != (self.params[second] is None):
            self.fail(second, f"must be given together with params.{first}")


class SweepExperiment:
    """
    Base experiment: every ν of the sweep times every size, times `trials` repeats.

    Subclasses override `sizes` when their M does not come from sweep.m_values.
    """

    kind = ""
    description = ""
    defaults: Dict[str, Any] = {}
    required_rates: Dict[str, float] = {}

    def check(self, config: ExperimentConfig) -> List[str]:
        return []

    def setup(self, config: ExperimentConfig) -> Any:
        return None

    def sizes(self, config: ExperimentConfig, context: Any, nu: float) -> Sequence[int]:
        return config.sweep.m_values

    def plan(self, config: ExperimentConfig, context: Any) -> List[TrialSpec]:
        trials: List[TrialSpec] = []
        for nu in config.sweep.nu_values:
            for m in self.sizes(config, context, nu):
                for repeat in range(config.trials):
                    trials.append(TrialSpec(len(trials), nu, int(m), repeat))
        return trials

    def run_trial(self, config: ExperimentConfig, context: Any, trial: TrialSpec) -> List[ReportRow]:
        raise NotImplementedError

    def summarize(self, config: ExperimentConfig, context: Any, rows: List[ReportRow]) -> Dict[str, Any]:
        queries = [r.value for r in rows if r.metric == "total_queries" and math.isfinite(r.value)]
        return {
            "checks": [],
            "query_depth": max((r.degree for r in rows), default=0),
            "total_queries": float(sum(queries)),
        }


class ExpectationCheckExperiment(SweepExperiment):
    """Entrywise mean of N noisy blocks against c^d · P(A) for random phases."""

    kind = "expectation_check"
    description = "Monte Carlo check of E[noisy block] = c^d P(A) on random phase sequences"
    defaults = {"qubits": 2, "degree": 8, "samples": 20000, "tolerance": 0.02, "norm": 0.9}

    def check(self, config):
        checker = ParamChecker(config.params)
        checker.integer("qubits", maximum=4)
        checker.integer("degree")
        checker.integer("samples", minimum=2)
        checker.real("tolerance", 0.0, math.inf)
        checker.real("norm", 0.0, 1.0, open_upper=False)
        return checker.errors

    def sizes(self, config, context, nu):
        return [config.params["samples"]]

    def run_trial(self, config, context, trial):
        params = config.params
        key = trial.key(config.master_seed)
        rng = key.child(0).generator()
        a = random_hermitian(2 ** params["qubits"], rng, norm=params["norm"])
        phi = random_phases(rng, params["degree"])
        model = config.noise_at(trial.nu)
        result = expectation_check(dilate_hermitian(a), phi, model, trial.m, key.child(1))
        row = partial(_row, config, trial, phi.degree, attenuation_factor(model) ** phi.degree)
        return [
            row("max_deviation", result.max_deviation, params["tolerance"]),
            row("standard_error", result.standard_error, math.inf),
        ]


@dataclass(frozen=True, eq=False)
class FixedQSPCase:
    """Block-encoding, phases and oracle shared by every trial of a run."""
    encoding: BlockEncoding
    phases: PhaseFactorSequence
    reference: ComplexMatrix


class EnsembleConvergenceExperiment(SweepExperiment):
    """Rescaled ensemble error against M, with the 1/√M law checked in the summary."""

    kind = "ensemble_convergence"
    description = "Ensemble-averaged block error versus ensemble size M, with log-log slope"
    defaults = {
        "qubits": 2,
        "degree": 4,
        "norm": 0.9,
        "eps": 0.1,
        "delta": 0.05,
        "auto_size": False,
        "slope_range": [-0.6, -0.4],
    }
    required_rates = {"rescaled_error": 0.9}

    def check(self, config):
        checker = ParamChecker(config.params)
        checker.integer("qubits", maximum=4)
        checker.integer("degree")
        checker.real("norm", 0.0, 1.0, open_upper=False)
        checker.real("eps", 0.0, 1.0)
        checker.real("delta", 0.0, 1.0)
        checker.flag("auto_size")
        checker.real_list("slope_range", length=2)
        return checker.errors

    def setup(self, config):
        params = config.params
        rng = setup_key(config).generator()
        a = random_hermitian(2 ** params["qubits"], rng, norm=params["norm"])
        encoding = dilate_hermitian(a)
        phases = random_phases(rng, params["degree"])
        return FixedQSPCase(encoding, phases, polynomial_reference(encoding, phases))

    def sizes(self, config, context, nu):
        params = config.params
        if not params["auto_size"]:
            return config.sweep.m_values
        c = attenuation_factor(config.noise_at(nu))
        return [ensemble_size_for(params["eps"], params["delta"], c, params["degree"])]

    def run_trial(self, config, context, trial):
        params = config.params
        model = config.noise_at(trial.nu)
        result = ensemble_average_block(
            context.encoding, context.phases, model, trial.m, trial.key(config.master_seed), context.reference
        )
        d = result.degree
        row = partial(_row, config, trial, d, result.rescale)
        bound = math.sqrt(math.log(2.0 / params["delta"]) / trial.m) / result.rescale
        return [
            row("rescaled_error", result.error, bound),
            row("unrescaled_error", result.unrescaled_error, math.inf),
            row("unmitigated_error", result.unmitigated_error, math.inf),
            row("query_depth", result.query_depth, d),
            row("total_queries", result.total_queries, 2 * trial.m * d),
        ]

    def summarize(self, config, context, rows):
        summary = super().summarize(config, context, rows)
        lower, upper = config.params["slope_range"]
        slopes = {}
        for nu in config.sweep.nu_values:
            by_size: Dict[int, List[float]] = {}
            for r in rows:
                if r.metric == "rescaled_error" and r.nu == nu and math.isfinite(r.value):
                    by_size.setdefault(r.m, []).append(r.value)
            sizes = sorted(by_size)
            medians = [float(np.median(by_size[m])) for m in sizes]
            if len(sizes) < 2 or min(medians) <= 0.0:
                continue
            slope = float(np.polyfit(np.log(sizes), np.log(medians), 1)[0])
            slopes[f"{nu:g}"] = {"m_values": sizes, "median_error": medians, "slope": slope}
            if nu > 0.0:
                summary["checks"].append({
                    "name": f"loglog_slope[nu={nu:g}]",
                    "value": slope,
                    "lower": lower,
                    "upper": upper,
                    "passed": lower <= slope <= upper,
                })
        summary["convergence"] = slopes
        return summary


class LCUEquivalenceExperiment(SweepExperiment):
    """Literal Hadamard-conjugated select unitary against the arithmetic sample average."""

    kind = "lcu_equivalence"
    description = "Explicit LCU unitary corner block versus the arithmetic average of 2M samples"
    defaults = {"qubits": 1, "degree": 4, "norm": 0.9, "pair_counts": [1, 2, 4, 8]}

    def check(self, config):
        checker = ParamChecker(config.params)
        checker.integer("qubits", maximum=2)
        checker.integer("degree")
        checker.real("norm", 0.0, 1.0, open_upper=False)
        counts = config.params["pair_counts"]
        if not isinstance(counts, list) or not counts or not all(
            isinstance(m, int) and not isinstance(m, bool) and is_power_of_two(m) and m <= MAX_EXPLICIT_PAIRS
            for m in counts
        ):
            checker.fail("pair_counts", f"must list powers of two up to {MAX_EXPLICIT_PAIRS}, got {counts!r}")
        return checker.errors

    def sizes(self, config, context, nu):
        return config.params["pair_counts"]

    def run_trial(self, config, context, trial):
        params = config.params
        key = trial.key(config.master_seed)
        rng = key.child(0).generator()
        encoding = dilate_hermitian(random_hermitian(2 ** params["qubits"], rng, norm=params["norm"]))
        phi = random_phases(rng, params["degree"])
        model = config.noise_at(trial.nu)

        samples = noisy_sample_encodings(encoding, phi, model, trial.m, key.child(1))
        explicit = explicit_lcu_average(samples)
        averaged = ensemble_average_block(encoding, phi, model, trial.m, key.child(1))
        row = partial(_row, config, trial, phi.degree, averaged.rescale)
        return [
            row("block_difference", spectral_norm(explicit.top_left - averaged.averaged_block), BLOCK_MATCH_TOL),
            row("unitarity_defect", check_unitary(explicit.unitary), UNITARITY_TOL),
        ]


class PhaseRoundtripExperiment(SweepExperiment):
    """Solve phases for random targets and for T₂ scaled to the solver margin, then re-evaluate Re P on a dense grid."""

    kind = "phase_roundtrip"
    description = "Phase solver roundtrip on random definite-parity targets and on T_2"
    defaults = {"max_degree": 8, "tolerance": 1e-8, "t2_tolerance": 1e-10, "sup": 0.9}

    def check(self, config):
        checker = ParamChecker(config.params)
        checker.integer("max_degree", minimum=2)
        checker.real("tolerance", 0.0, math.inf)
        checker.real("t2_tolerance", 0.0, math.inf)
        checker.real("sup", 0.0, 1.0)
        return checker.errors

    def plan(self, config, context):
        trials = [TrialSpec(i, 0.0, 0, i, "random") for i in range(config.trials)]
        trials.append(TrialSpec(config.trials, 0.0, 0, 0, "t2"))
        return trials

    def run_trial(self, config, context, trial):
        params = config.params
        if trial.label == "t2":
            target = fit_to_margin(TargetPolynomial(coefficients=np.array([0.0, 0.0, 1.0]), parity=0))
            bound = params["t2_tolerance"]
            options = SolverOptions()
        else:
            rng = trial.key(config.master_seed).generator()
            parity = trial.repeat % 2
            half = rng.integers(1, (params["max_degree"] + parity) // 2 + 1)
            target = random_target(rng, int(2 * half - parity), params["sup"])
            bound = params["tolerance"]
            options = SolverOptions(seed=int(rng.integers(2 ** 32)))

        phi = solve_phase_factors(target, tol=min(1e-10, 0.1 * bound), options=options)
        grid = chebyshev_grid()
        residual = float(np.max(np.abs(qsp_polynomial_values(phi, grid).real - target(grid))))
        row = partial(_row, config, trial, target.degree, 1.0)
        return [
            row("grid_residual", residual, bound),
            row("degree_mismatch", abs(phi.degree - target.degree), 0.0),
        ]


@dataclass(frozen=True, eq=False)
class HadamardCase:
    """Operators and state shared by the Hadamard-test trials."""
    unitary: ComplexMatrix
    encoding: BlockEncoding
    phases: PhaseFactorSequence
    polynomial: ComplexMatrix
    psi: StateVector


class HadamardUnbiasedExperiment(SweepExperiment):
    """Randomized Hadamard test on a fixed unitary, a ±X sign flip and a noisy QSP block."""

    kind = "hadamard_unbiased"
    description = "Randomized Hadamard test error for fixed, sign-flip and noisy-QSP samplers"
    defaults = {
        "eps": 0.1,
        "delta": 0.05,
        "degree": 4,
        "norm": 0.9,
        "samplers": list(HADAMARD_SAMPLERS),
        "shots": None,
    }
    required_rates = {"abs_error": 0.9}

    def check(self, config):
        checker = ParamChecker(config.params)
        checker.real("eps", 0.0, 1.0, open_upper=False)
        checker.real("delta", 0.0, 1.0)
        checker.integer("degree")
        checker.real("norm", 0.0, 1.0, open_upper=False)
        checker.shots()
        samplers = config.params["samplers"]
        if not isinstance(samplers, list) or not samplers or any(s not in HADAMARD_SAMPLERS for s in samplers):
            checker.fail("samplers", f"must be a non-empty list from {list(HADAMARD_SAMPLERS)}, got {samplers!r}")
        return checker.errors

    def setup(self, config):
        params = config.params
        rng = setup_key(config).generator()
        unitary = random_unitary(2, rng)
        encoding = dilate_hermitian(random_hermitian(2, rng, norm=params["norm"]))
        phases = random_phases(rng, params["degree"])
        return HadamardCase(unitary, encoding, phases, polynomial_reference(encoding, phases), random_state(2, rng))

    def sizes(self, config, context, nu):
        params = config.params
        if params["shots"] is not None:
            return [params["shots"]]
        return [shots_for(params["eps"], params["delta"], 1.0, 0, 0)]

    def plan(self, config, context):
        trials: List[TrialSpec] = []
        for label in config.params["samplers"]:
            for nu in config.sweep.nu_values:
                for m in self.sizes(config, context, nu):
                    for repeat in range(config.trials):
                        trials.append(TrialSpec(len(trials), nu, int(m), repeat, label))
        return trials

    def run_trial(self, config, context, trial):
        psi = context.psi
        degree, c_d = 0, 1.0
        if trial.label == "fixed":
            sampler = FixedSampler(context.unitary)
            reference = float(np.vdot(psi, context.unitary @ psi).real)
        elif trial.label == "sign_flip":
            sampler = SignFlipSampler(PAULI_X)
            reference = 0.0
        else:
            model = config.noise_at(trial.nu)
            degree = context.phases.degree
            c_d = attenuation_factor(model) ** degree
            sampler = NoisyQSPSampler(context.encoding, context.phases, model)
            reference = c_d * float(np.vdot(psi, context.polynomial @ psi).real)

        estimate = run_hadamard_test(sampler, psi, trial.m, trial.key(config.master_seed), reference=reference)
        row = partial(_row, config, trial, degree, c_d)
        return [
            row("abs_error", estimate.error, config.params["eps"]),
            row("standard_error", estimate.standard_error, math.inf),
        ]


@dataclass(frozen=True, eq=False)
class ObservableCase:
    """Polynomial, observable and state shared by the observable trials."""
    encoding: BlockEncoding
    phases: PhaseFactorSequence
    observable: ComplexMatrix
    psi: StateVector


class ObservableExperiment(SweepExperiment):
    """Two-sided noisy sandwich estimate of ⟨ψ|p(A) O p(A)|ψ⟩ rescaled by c^{2d}."""

    kind = "observable"
    description = "Observable estimation from noisy QSP with a c^{2d} rescale"
    defaults = {"degree": 4, "eps": 0.05, "delta": 0.05, "norm": 0.9, "sup": 0.9, "shots": None}
    required_rates = {"abs_error": 0.95}

    def check(self, config):
        checker = ParamChecker(config.params)
        checker.integer("degree", minimum=2)
        if isinstance(config.params["degree"], int) and config.params["degree"] % 2:
            checker.fail("degree", f"must be even, got {config.params['degree']}")
        checker.real("eps", 0.0, 1.0, open_upper=False)
        checker.real("delta", 0.0, 1.0)
        checker.real("norm", 0.0, 1.0, open_upper=False)
        checker.real("sup", 0.0, 1.0)
        checker.shots()
        return checker.errors

    def setup(self, config):
        params = config.params
        rng = setup_key(config).generator()
        encoding = dilate_hermitian(random_hermitian(2, rng, norm=params["norm"]))
        target = random_target(rng, params["degree"], params["sup"])
        phases = solve_phase_factors(target)
        observable = random_hermitian(2, rng, norm=1.0)
        return ObservableCase(encoding, phases, observable, random_state(2, rng))

    def sizes(self, config, context, nu):
        params = config.params
        if params["shots"] is not None:
            return [params["shots"]]
        c = attenuation_factor(config.noise_at(nu))
        return [shots_for(params["eps"], params["delta"], c, context.phases.degree, 4)]

    def run_trial(self, config, context, trial):
        model = config.noise_at(trial.nu)
        estimate = estimate_qsp_observable(
            context.encoding, context.phases, context.observable, context.psi, model, trial.m,
            trial.key(config.master_seed),
        )
        d = context.phases.degree
        row = partial(_row, config, trial, d, attenuation_factor(model) ** d)
        return [
            row("abs_error", estimate.error, config.params["eps"]),
            row("standard_error", estimate.standard_error, math.inf),
            row("total_queries", estimate.total_queries, 4 * d * trial.m),
        ]


@dataclass(frozen=True, eq=False)
class ApplicationCase:
    """Problem and plan of one application at one noise level."""
    problem: Any
    plan: Any
    ensemble_size: int
    degree: int
    c_d: float


def post_selection_rows(row: Callable[..., ReportRow], stats: PostSelectStats) -> List[ReportRow]:
    return [
        row("success_probability", stats.success_probability, math.inf),
        row("empirical_success_rate", stats.empirical_rate, math.inf),
        row("post_selection_cost", 1.0 / stats.success_probability, 1.0 / stats.predicted_bound),
        row("attempts", stats.attempts, stats.budget),
        row("amplified_budget", stats.amplified_budget, math.inf),
    ]


def empirical_rate_check(rows: List[ReportRow], nu: float, delta: float) -> Optional[Dict[str, Any]]:
    """
    Pooled repeat-until-success rate at one noise level against the predicted bound.

    The rate is successes over attempts across trials; it passes when the rate
    plus the allowance √(ln(1/δ)/(2·attempts)) reaches the bound.
    """
    attempts = [r.value for r in rows if r.metric == "attempts" and r.nu == nu]
    if not attempts:
        return None
    costs = [r for r in rows if r.metric == "post_selection_cost" and r.nu == nu]
    total = float(sum(attempts))
    rate = len(attempts) / total
    bound = 1.0 / costs[0].bound
    allowance = math.sqrt(math.log(1.0 / delta) / (2.0 * total))
    return {
        "name": f"empirical_success_rate[nu={nu:g}]",
        "value": rate,
        "exact": float(np.mean([1.0 / r.value for r in costs])),
        "lower": bound,
        "allowance": allowance,
        "passed": rate + allowance >= bound,
    }


class ApplicationExperiment(SweepExperiment):
    """
    Shared flow of the end-to-end applications.

    Subclasses build the problem and plan; every trial prepares the state by
    post-selection and compares it with the eigendecomposition oracle.
    Post-selection is gated on the pooled empirical success rate; the exact
    probability and its bound are reported without gating.
    """

    required_rates = {"infidelity": 0.9, "post_selection_cost": 0.0}

    def build_problem(self, config: ExperimentConfig, model) -> Any:
        raise NotImplementedError

    def build_plan(self, problem: Any) -> Any:
        raise NotImplementedError

    def state_accuracy(self, problem: Any) -> float:
        raise NotImplementedError

    def prepare(self, problem: Any, m: int, key: StreamKey, plan: Any):
        raise NotImplementedError

    def extra_rows(self, row: Callable[..., ReportRow], case: ApplicationCase) -> List[ReportRow]:
        return []

    def describe(self, case: ApplicationCase) -> Dict[str, Any]:
        return {}

    def check_params(self, checker: ParamChecker) -> None:
        pass

    def check(self, config):
        checker = ParamChecker(config.params)
        checker.real("eps", 0.0, 1.0)
        checker.real("delta", 0.0, 1.0)
        checker.ensemble_size()
        self.check_params(checker)
        if checker.errors:
            return checker.errors
        try:
            self.build_problem(config, config.noise)
        except (TypeError, ValueError) as e:
            checker.errors.append(f"params: {e}")
        return checker.errors

    def setup(self, config):
        cases = {}
        for nu in config.sweep.nu_values:
            model = config.noise_at(nu)
            problem = self.build_problem(config, model)
            plan = self.build_plan(problem)
            c = attenuation_factor(model)
            size = config.params["ensemble_size"]
            if size == "auto":
                size = ensemble_size_for(self.state_accuracy(problem), problem.delta, c, plan.degree)
            cases[nu] = ApplicationCase(problem, plan, int(size), plan.degree, c ** plan.degree)
            logger.info(f"{config.kind}: ν = {nu:g} uses degree {plan.degree} and M = {size}")
        return cases

    def sizes(self, config, context, nu):
        return [context[nu].ensemble_size]

    def run_trial(self, config, context, trial):
        case = context[trial.nu]
        state, stats = self.prepare(case.problem, trial.m, trial.key(config.master_seed), case.plan)
        target = self.target_state(case.problem)
        row = partial(_row, config, trial, case.degree, case.c_d)
        return [
            row("infidelity", max(0.0, 1.0 - fidelity(state, target)), 2.0 * case.problem.eps),
            *post_selection_rows(row, stats),
            *self.extra_rows(row, case),
        ]

    def target_state(self, problem: Any) -> StateVector:
        return problem.target_state()

    def summarize(self, config, context, rows):
        summary = super().summarize(config, context, rows)
        for nu, case in context.items():
            check = empirical_rate_check(rows, nu, case.problem.delta)
            if check is not None:
                summary["checks"].append(check)
        summary["cases"] = {
            f"{nu:g}": {
                "degree": case.degree,
                "ensemble_size": case.ensemble_size,
                "c_d": case.c_d,
                "scaling_factor": 1.0 / case.c_d,
                **self.describe(case),
            }
            for nu, case in context.items()
        }
        return summary


class HamSimExperiment(ApplicationExperiment):
    """Noisy Hamiltonian simulation e^{−iHT}ψ₀ from ensemble-averaged cos/sin circuits."""

    kind = "hsim"
    description = "Hamiltonian simulation by ensemble-averaged cos/sin QSP and post-selection"
    defaults = {
        "qubits": 1,
        "norm": 1.0,
        "time": 1.0,
        "eps": 0.02,
        "delta": 0.05,
        "ensemble_size": 1024,
        "hamiltonian": None,
        "psi0": None,
    }

    def check_params(self, checker):
        checker.integer("qubits", maximum=3)
        checker.real("norm", 0.0, math.inf, open_lower=False)
        checker.real("time", 0.0, math.inf, open_lower=False)
        checker.paired("hamiltonian", "psi0")

    def build_problem(self, config, model):
        params = config.params
        if params["hamiltonian"] is not None:
            return HamSimProblem.from_record({
                "hamiltonian": params["hamiltonian"],
                "psi0": params["psi0"],
                "time": params["time"],
                "eps": params["eps"],
                "delta": params["delta"],
                "noise": model.to_record(),
            })
        rng = setup_key(config).generator()
        dim = 2 ** params["qubits"]
        return HamSimProblem(
            hamiltonian=random_hermitian(dim, rng, norm=params["norm"]) if params["norm"] > 0 else np.zeros((dim, dim)),
            time=float(params["time"]),
            psi0=random_state(dim, rng),
            eps=float(params["eps"]),
            delta=float(params["delta"]),
            model=model,
        )

    def build_plan(self, problem):
        return hsim_plan(problem)

    def state_accuracy(self, problem):
        return 0.5 * problem.eps

    def prepare(self, problem, m, key, plan):
        return hsim_prepare_state(problem, m, key, plan)

    def extra_rows(self, row, case):
        plan = case.plan
        error = max(plan.cos.approximant.max_error, plan.sin.approximant.max_error)
        return [row("approximation_error", error, 0.5 * self.state_accuracy(case.problem))]

    def describe(self, case):
        plan = case.plan
        return {
            "block_factor": plan.block_factor,
            "success_bound": case.c_d ** 2 / 128.0,
            "approximants": [plan.cos.approximant.to_record(), plan.sin.approximant.to_record()],
        }


class QLSPExperiment(ApplicationExperiment):
    """Noisy linear-system solver x/‖x‖ from an ensemble-averaged inverse polynomial."""

    kind = "qlsp"
    description = "Quantum linear system solution by an ensemble-averaged 1/x polynomial"
    defaults = {
        "spectrum": [1.0, -0.5, 0.3, 0.125],
        "kappa": None,
        "eps": 0.05,
        "delta": 0.05,
        "ensemble_size": 1024,
        "matrix": None,
        "b": None,
    }

    def check_params(self, checker):
        checker.real_list("spectrum")
        checker.real("kappa", 1.0, math.inf, open_lower=False, allow_none=True)
        checker.paired("matrix", "b")

    def build_problem(self, config, model):
        params = config.params
        if params["matrix"] is not None:
            return QLSPProblem.from_record({
                "matrix": params["matrix"],
                "b": params["b"],
                "kappa": params["kappa"],
                "eps": params["eps"],
                "delta": params["delta"],
                "noise": model.to_record(),
            })
        spectrum = np.array(params["spectrum"], dtype=float)
        if not is_power_of_two(spectrum.size):
            raise ValueError(f"spectrum length {spectrum.size} is not a power of two")
        if np.any(spectrum == 0.0):
            raise ValueError("spectrum contains zero; the matrix would be singular")
        rng = setup_key(config).generator()
        basis = random_unitary(spectrum.size, rng) if spectrum.size > 1 else np.eye(1)
        kappa = params["kappa"]
        if kappa is None:
            kappa = float(np.max(np.abs(spectrum)) / np.min(np.abs(spectrum)))
        return QLSPProblem(
            matrix=(basis * spectrum) @ basis.conj().T,
            b=random_state(spectrum.size, rng),
            kappa=float(kappa),
            eps=float(params["eps"]),
            delta=float(params["delta"]),
            model=model,
        )

    def build_plan(self, problem):
        return qlsp_plan(problem, qlsp_state_accuracy(problem))

    def state_accuracy(self, problem):
        return qlsp_state_accuracy(problem)

    def prepare(self, problem, m, key, plan):
        return qlsp_prepare_state(problem, m, key, plan)

    def extra_rows(self, row, case):
        return [row("approximation_error", case.plan.approximant.max_error, self.state_accuracy(case.problem))]

    def describe(self, case):
        return {
            "kappa": case.problem.kappa,
            "success_bound": case.c_d ** 2 / (4.0 * case.problem.kappa ** 2),
            "approximants": [case.plan.approximant.to_record()],
        }


class GSPExperiment(ApplicationExperiment):
    """Noisy ground-state preparation with an ensemble-averaged filter of cos(H)."""

    kind = "gsp"
    description = "Ground-state preparation by an ensemble-averaged filter on the cosine encoding"
    defaults = {
        "spectrum": [0.0, 1.5, 1.8, 2.0],
        "overlap": 0.6,
        "eta": 0.05,
        "eps": 0.05,
        "delta": 0.05,
        "ensemble_size": 1024,
        "hamiltonian": None,
        "phi0": None,
    }

    def check_params(self, checker):
        checker.real_list("spectrum")
        checker.real("overlap", 0.0, 1.0, open_upper=False)
        checker.real("eta", 0.0, 0.25)
        checker.paired("hamiltonian", "phi0")

    def build_problem(self, config, model):
        params = config.params
        if params["hamiltonian"] is not None:
            return GSPProblem.from_record({
                "hamiltonian": params["hamiltonian"],
                "phi0": params["phi0"],
                "eta": params["eta"],
                "eps": params["eps"],
                "delta": params["delta"],
                "noise": model.to_record(),
            })
        spectrum = np.sort(np.array(params["spectrum"], dtype=float))
        if spectrum.size < 2 or not is_power_of_two(spectrum.size):
            raise ValueError(f"spectrum length {spectrum.size} is not a power of two of at least 2")
        rng = setup_key(config).generator()
        basis = random_unitary(spectrum.size, rng)
        gamma = float(params["overlap"])
        phi0 = gamma * basis[:, 0] + np.sqrt(1.0 - gamma ** 2) * basis[:, 1]
        return GSPProblem.from_hamiltonian(
            (basis * spectrum) @ basis.conj().T,
            phi0,
            eta=float(params["eta"]),
            eps=float(params["eps"]),
            delta=float(params["delta"]),
            model=model,
        )

    def build_plan(self, problem):
        return gsp_plan(problem, gsp_state_accuracy(problem))

    def state_accuracy(self, problem):
        return gsp_state_accuracy(problem)

    def prepare(self, problem, m, key, plan):
        return gsp_prepare_state(problem, m, key, plan)

    def target_state(self, problem):
        return problem.ground_state()

    def extra_rows(self, row, case):
        cosine = matfunc_hermitian(case.problem.hamiltonian, np.cos)
        block_error = spectral_norm(encoded_block(case.plan.encoding) - cosine)
        return [
            row("approximation_error", case.plan.approximant.max_error, self.state_accuracy(case.problem)),
            row("qetu_block_error", block_error, BLOCK_MATCH_TOL),
        ]

    def describe(self, case):
        problem = case.problem
        return {
            "gamma": problem.gamma,
            "mu": problem.mu,
            "gap": problem.gap,
            "shift": problem.shift,
            "scale": problem.scale,
            "success_bound": case.c_d ** 2 * problem.gamma ** 2 / 2.0,
            "approximants": [case.plan.approximant.to_record()],
        }


EXPERIMENTS = (
    ExpectationCheckExperiment,
    EnsembleConvergenceExperiment,
    LCUEquivalenceExperiment,
    PhaseRoundtripExperiment,
    HadamardUnbiasedExperiment,
    ObservableExperiment,
    HamSimExperiment,
    QLSPExperiment,
    GSPExperiment,
)


def build_registry() -> ExperimentRegistry:
    """Registry with every experiment kind."""
    registry = ExperimentRegistry()
    for experiment in EXPERIMENTS:
        registry.register(experiment())
    return registry
