"""
Schmidt Service
Schmidt decompositions of random bipartite states checked against the rho_1 spectrum
"""

import logging

import numpy as np

from cli.models import SchmidtParams
from core.hilbert import partial_trace, purity
from core.sampler import SeededStream, iter_uniform_states
from core.superposition import schmidt_decompose
from models.hilbert import HilbertDims
from models.reports import ExperimentResult, InvariantCheck, ReportTable

logger = logging.getLogger(__name__)

SPECTRUM_TOL = 1e-10


def run_schmidt(params: SchmidtParams, seed: int, threads: int = 1) -> ExperimentResult:
    """Decompose *params.samples* uniform states on C^n1 (x) C^n2."""
    dims = HilbertDims(params.n1, params.n2)
    logger.info(f"Starting Schmidt run: n1={dims.n1}, n2={dims.n2}, samples={params.samples}")
    states = iter_uniform_states(dims.total, SeededStream(seed))

    per_state = ReportTable("states", ["sample", "schmidt_rank", "entropy", "purity",
                                       "spectrum_mismatch", "reconstruction_error"])
    first = ReportTable("coefficients", ["k", "coefficient", "squared", "rho_1_eigenvalue"])
    worst_mismatch = 0.0
    worst_reconstruction = 0.0
    entropies = []
    for sample in range(params.samples):
        state = next(states).with_dims(dims)
        decomposition = schmidt_decompose(state)
        rho = partial_trace(state)
        spectrum = np.sort(rho.eigenvalues())[::-1]
        squared = decomposition.coefficients ** 2
        padded = np.zeros(dims.n1)
        padded[:squared.size] = squared
        mismatch = float(np.max(np.abs(padded - spectrum)))
        reconstruction = float(np.linalg.norm(decomposition.reconstruct().amplitudes - state.amplitudes))
        worst_mismatch = max(worst_mismatch, mismatch)
        worst_reconstruction = max(worst_reconstruction, reconstruction)
        entropies.append(decomposition.entanglement_entropy())
        per_state.rows.append([sample, decomposition.schmidt_rank(), entropies[-1], purity(rho),
                               mismatch, reconstruction])
        if sample == 0:
            for k in range(dims.n1):
                coefficient = float(decomposition.coefficients[k]) if k < squared.size else 0.0
                first.rows.append([k, coefficient, coefficient ** 2, float(spectrum[k])])

    checks = [
        InvariantCheck("schmidt_squares_match_rho_spectrum", worst_mismatch <= SPECTRUM_TOL,
                       f"max mismatch {worst_mismatch:.3e}"),
        InvariantCheck("schmidt_reconstruction", worst_reconstruction <= SPECTRUM_TOL,
                       f"max error {worst_reconstruction:.3e}"),
    ]
    headline = {
        "n1": dims.n1,
        "n2": dims.n2,
        "samples": params.samples,
        "mean_entropy": float(np.mean(entropies)),
        "max_entropy_possible": float(np.log(min(dims.n1, dims.n2))),
        "max_spectrum_mismatch": worst_mismatch,
        "max_reconstruction_error": worst_reconstruction,
    }
    return ExperimentResult("schmidt", [per_state, first], headline, checks)
