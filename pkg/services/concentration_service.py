"""
Concentration Service
Runs the rho_1 concentration experiment and turns it into report tables and checks
"""

import logging

from cli.models import ConcentrationParams
from core.concentration import (
    DeviationKind,
    EntryPart,
    LIPSCHITZ_NORMS,
    estimate_lipschitz_norm,
    run_concentration_experiment,
)
from core.sampler import SeededStream
from models.reports import ExperimentResult, InvariantCheck, ReportTable

logger = logging.getLogger(__name__)

# Stream ids under the run seed
MONTE_CARLO_STREAM = 0
GRADIENT_STREAM = 1

# Mean rho_1 is only expected near I/n1 once the sample space is this large
MEAN_RHO_MIN_DIMENSION = 256
MEAN_RHO_MAX_DISTANCE = 0.02


def run_concentration(params: ConcentrationParams, seed: int, threads: int = 1) -> ExperimentResult:
    """
    Run the concentration experiment described by *params*.

    Args:
        params: Validated experiment section of the run config.
        seed: Run seed.
        threads: Worker threads for the Monte Carlo blocks.

    Returns:
        ExperimentResult with the bound table, the mean rho_1 table,
        headline numbers and the built-in checks.
    """
    logger.info(f"Starting concentration run: n1={params.n1}, n2={params.n2}, trials={params.trials}")
    report = run_concentration_experiment(
        params.n1, params.n2, params.trials, params.epsilons,
        SeededStream(seed, MONTE_CARLO_STREAM), threads,
        diagonal_index=params.diagonal_index,
        off_diagonal_pair=tuple(params.off_diagonal_pair),
    )

    bounds = ReportTable("bounds", ["kind", "epsilon", "exceedances", "trials", "empirical",
                                    "bound", "bound_form", "stderr", "within_3_sigma"])
    for row in report.rows:
        bounds.rows.append([row.kind.value, row.epsilon, row.exceedances, row.trials, row.empirical,
                            row.bound, row.bound_form.value, row.stderr, row.within_bound(3.0)])

    mean_rho = ReportTable("mean_rho", ["j", "k", "re", "im"])
    for j in range(params.n1):
        for k in range(params.n1):
            value = report.mean_rho[j, k]
            mean_rho.rows.append([j, k, float(value.real), float(value.imag)])

    # ── Gradient norms against the analytic Lipschitz constants ──
    entries = [(DeviationKind.DIAGONAL_RE, params.diagonal_index, params.diagonal_index, EntryPart.RE)]
    if params.n1 >= 2:
        j, k = params.off_diagonal_pair
        entries += [(DeviationKind.OFF_DIAGONAL_RE, j, k, EntryPart.RE),
                    (DeviationKind.OFF_DIAGONAL_IM, j, k, EntryPart.IM)]
    gradients = ReportTable("gradient_norms", ["kind", "estimated_lipschitz", "analytic_lipschitz"])
    gradient_ok = True
    stream = SeededStream(seed, GRADIENT_STREAM)
    for kind, j, k, part in entries:
        estimate = estimate_lipschitz_norm(params.n1, params.n2, j, k, part, params.gradient_samples, stream)
        gradient_ok &= estimate <= LIPSCHITZ_NORMS[kind] + 1e-12
        gradients.rows.append([kind.value, estimate, LIPSCHITZ_NORMS[kind]])

    violations = report.violations(3.0)
    checks = [
        InvariantCheck("bounds_within_3_sigma", not violations,
                       f"{len(violations)} of {len(report.rows)} rows above bound + 3 stderr"),
        InvariantCheck("gradient_norms_within_lipschitz", bool(gradient_ok),
                       f"{params.gradient_samples} sampled states per entry"),
    ]
    if params.n1 * params.n2 >= MEAN_RHO_MIN_DIMENSION:
        checks.append(InvariantCheck(
            "mean_rho_near_identity", report.mean_rho_distance <= MEAN_RHO_MAX_DISTANCE,
            f"||mean rho_1 - I/n1||_F = {report.mean_rho_distance:.3e} (limit {MEAN_RHO_MAX_DISTANCE})"))

    headline = {
        "n1": params.n1,
        "n2": params.n2,
        "trials": params.trials,
        "worst_bound_ratio": report.worst_ratio(),
        "rows_above_bound": len(violations),
        "mean_rho_distance": report.mean_rho_distance,
        "mean_trial_distance": report.mean_trial_distance,
    }
    for kind, value in report.max_deviation.items():
        headline[f"max_deviation_{kind.value}"] = value

    return ExperimentResult("concentration", [bounds, mean_rho, gradients], headline, checks)
