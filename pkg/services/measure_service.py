"""
Measure Service
Qubit measured by a spin pointer: branch overlap, its decay with N and the
decohered qubit state
"""

import logging
import math

import numpy as np

import configs
from cli.models import MeasureParams
from core.superposition import (
    PointerModel,
    controlled_rotation_unitary,
    overlap_curve,
    overlap_decay_rate,
    pointer_measure,
)
from models.reports import ExperimentResult, InvariantCheck, ReportTable

logger = logging.getLogger(__name__)

# Pointer sizes used for the log-linearity check
SLOPE_SIZES = (10, 20, 40)
# Smallest |cos theta| whose per-spin overlap is resolved to 1e-9 relative
SLOPE_RESOLUTION = 1e-6


def _dense_linearity_defect(model: PointerModel) -> float:
    """|| U (c+|+> + c-|->)|0..0> - (c+ U|+,0..0> + c- U|-,0..0>) || against the pointer state."""
    unitary = controlled_rotation_unitary(model.n_spins, model.theta)
    half = unitary.shape[0] // 2
    initial_plus = np.zeros(unitary.shape[0], dtype=np.complex128)
    initial_plus[0] = 1.0
    initial_minus = np.zeros_like(initial_plus)
    initial_minus[half] = 1.0
    superposed = unitary @ (model.c_plus * initial_plus + model.c_minus * initial_minus)
    separate = model.c_plus * (unitary @ initial_plus) + model.c_minus * (unitary @ initial_minus)
    state, _ = pointer_measure(model)
    return max(float(np.linalg.norm(superposed - separate)),
               float(np.linalg.norm(superposed - state.to_dense().amplitudes)))


def run_measure(params: MeasureParams, seed: int, threads: int = 1) -> ExperimentResult:
    """Run the pointer measurement; deterministic, so *seed* and *threads* are unused."""
    model = PointerModel(params.n_spins, params.theta, params.plus_amplitude, params.minus_amplitude)
    logger.info(f"Starting measurement run: N={model.n_spins}, theta={model.theta}")
    state, overlap = pointer_measure(model)
    closed_form = abs(math.cos(params.theta)) ** params.n_spins
    rate = overlap_decay_rate(params.theta)
    qubit = state.reduced_qubit_matrix()

    # ── Overlap decay table ──
    sizes = sorted(set(params.n_values) | {params.n_spins})
    curve = overlap_curve(params.theta, sizes)
    decay = ReportTable("overlap", ["n_spins", "overlap", "closed_form", "log_overlap"])
    for n, closed in zip(sizes, curve):
        pointed, measured = pointer_measure(PointerModel(n, params.theta, model.c_plus, model.c_minus))
        log_overlap = pointed.log_branch_overlap()
        decay.rows.append([n, measured, float(closed), log_overlap if math.isfinite(log_overlap) else None])

    qubit_table = ReportTable("qubit", ["row", "col", "re", "im"])
    for r in range(2):
        for c in range(2):
            qubit_table.rows.append([r, c, float(qubit[r, c].real), float(qubit[r, c].imag)])

    checks = [
        InvariantCheck("overlap_matches_closed_form", abs(overlap - closed_form) <= 1e-12,
                       f"|{overlap:.17g} - {closed_form:.17g}|"),
        InvariantCheck("norm_preserved", abs(state.norm() - 1.0) <= configs.NORM_TOL,
                       f"norm {state.norm():.17g}"),
    ]
    if math.isfinite(rate):
        logs = [pointer_measure(PointerModel(n, params.theta))[0].log_branch_overlap() for n in SLOPE_SIZES]
        slopes = np.diff(logs) / np.diff(SLOPE_SIZES)
        slope_defect = float(np.max(np.abs(slopes + rate)))
        # cos^2 - sin^2 of the half angles loses relative precision as cos(theta) -> 0
        resolved = abs(math.cos(params.theta)) >= SLOPE_RESOLUTION
        checks.append(InvariantCheck("log_overlap_linear_in_n", slope_defect <= 1e-9,
                                     f"max |slope - ln|cos theta|| = {slope_defect:.3e}", hard=resolved))
    if 2 ** (params.n_spins + 1) <= configs.DIMENSION_CAP:
        defect = _dense_linearity_defect(model)
        checks.append(InvariantCheck("dense_unitary_linear", defect <= 1e-12,
                                     f"max defect {defect:.3e}"))

    headline = {
        "n_spins": params.n_spins,
        "theta": params.theta,
        "branch_overlap": overlap,
        "closed_form_overlap": closed_form,
        "decay_rate": rate if math.isfinite(rate) else None,
        "qubit_coherence": float(abs(qubit[0, 1])),
    }
    return ExperimentResult("measure", [decay, qubit_table], headline, checks)
