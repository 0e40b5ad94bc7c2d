"""
Tests for concentration bounds, reduced-entry gradients and the Monte Carlo experiment.
"""

import math

import numpy as np
import pytest

from core.concentration import (
    BoundForm,
    DeviationKind,
    EntryPart,
    estimate_lipschitz_norm,
    factor_pairs,
    general_levy_bound,
    gradient_norm_squared,
    gradient_of_reduced_entry,
    levy_bound,
    levy_delta,
    reduced_entry,
    run_concentration_experiment,
    run_factorization_scan,
)
from core.sampler import SeededStream, sample_uniform_amplitudes, sample_uniform_state
from exceptions import BoundDomainError, ConfigError, DimensionOverflowError, IndexRangeError
from models.hilbert import HilbertDims, StateVector

EPSILON_GRID = [0.02, 0.05, 0.1, 0.2]


def central_difference(amplitudes, dims, j1, k1, part, step=1e-6):
    """Finite-difference gradient over the real coordinates (real parts, then imaginary parts)."""
    n = dims.total
    gradient = np.zeros(2 * n)
    for index in range(2 * n):
        shift = np.zeros(n, dtype=complex)
        shift[index % n] = step if index < n else 1j * step
        forward = reduced_entry(amplitudes + shift, dims, j1, k1, part)
        backward = reduced_entry(amplitudes - shift, dims, j1, k1, part)
        gradient[index] = (forward - backward) / (2 * step)
    return gradient


# ═══════════════════════════════════════════════════════════════════
# Bounds
# ═══════════════════════════════════════════════════════════════════


class TestBounds:

    def test_off_diagonal_bound(self):
        assert levy_bound(DeviationKind.OFF_DIAGONAL_RE, 4, 64, 0.1) == pytest.approx(math.exp(-256 * 0.01))
        assert levy_bound(DeviationKind.OFF_DIAGONAL_IM, 4, 64, 0.1) == pytest.approx(math.exp(-2.56))

    def test_diagonal_bound(self):
        delta = math.sqrt(math.pi / 400)
        expected = math.exp(-100 * (0.2 - delta) ** 2)
        assert levy_bound(DeviationKind.DIAGONAL_RE, 4, 100, 0.2) == pytest.approx(expected, abs=1e-12)
        assert expected == pytest.approx(0.2896, abs=1e-3)

    def test_diagonal_bound_outside_domain(self):
        delta = 2 * math.sqrt(math.pi / 16)
        with pytest.raises(BoundDomainError) as info:
            levy_bound(DeviationKind.DIAGONAL_RE, 2, 2, 0.5)
        assert info.value.delta == pytest.approx(delta)

    def test_delta(self):
        assert levy_delta(4, 100, 2.0) == pytest.approx(2 * math.sqrt(math.pi / 1600))

    def test_median_form(self):
        assert general_levy_bound(2, 8, 0.3, 2.0, BoundForm.MEDIAN) == pytest.approx(math.exp(-16 * 0.09 / 4))

    def test_bound_depends_only_on_product(self):
        for kind in (DeviationKind.OFF_DIAGONAL_RE, DeviationKind.DIAGONAL_RE):
            assert levy_bound(kind, 2, 128, 0.3) == pytest.approx(levy_bound(kind, 16, 16, 0.3))

    def test_bound_monotone_in_epsilon(self):
        values = [levy_bound(DeviationKind.OFF_DIAGONAL_RE, 4, 16, eps) for eps in (0.05, 0.1, 0.2, 0.4)]
        assert all(b < a for a, b in zip(values, values[1:]))

    def test_rejects_non_positive_epsilon(self):
        with pytest.raises(ConfigError):
            levy_bound(DeviationKind.OFF_DIAGONAL_RE, 4, 4, 0.0)


# ═══════════════════════════════════════════════════════════════════
# Gradients
# ═══════════════════════════════════════════════════════════════════


class TestGradients:

    @pytest.mark.parametrize("j1,k1,part", [
        (0, 0, EntryPart.RE), (1, 1, EntryPart.RE), (0, 2, EntryPart.RE),
        (0, 2, EntryPart.IM), (2, 1, EntryPart.IM), (1, 1, EntryPart.IM),
    ])
    def test_matches_finite_differences(self, j1, k1, part):
        dims = HilbertDims(3, 4)
        generator = SeededStream(13).generator()
        for _ in range(100):
            state = sample_uniform_state(dims.total, generator).with_dims(dims)
            analytic = gradient_of_reduced_entry(state, None, j1, k1, part)
            numeric = central_difference(state.amplitudes, dims, j1, k1, part)
            np.testing.assert_allclose(analytic, numeric, atol=1e-6)

    def test_closed_form_norm(self):
        dims = HilbertDims(4, 3)
        generator = SeededStream(17).generator()
        for _ in range(50):
            state = sample_uniform_state(dims.total, generator).with_dims(dims)
            for j1, k1 in [(0, 0), (1, 3)]:
                for part in EntryPart:
                    gradient = gradient_of_reduced_entry(state, None, j1, k1, part)
                    assert gradient_norm_squared(state, None, j1, k1, part) == pytest.approx(
                        float(gradient @ gradient), abs=1e-12)

    def test_norm_bounds_on_many_states(self):
        dims = HilbertDims(4, 8)
        amplitudes = sample_uniform_amplitudes(dims.total, 10000, SeededStream(19).generator())
        worst = {EntryPart.RE: 0.0, EntryPart.IM: 0.0}
        worst_diagonal = 0.0
        for row in amplitudes:
            state = StateVector(row).with_dims(dims)
            gradient = gradient_of_reduced_entry(state, None, 2, 2, EntryPart.RE)
            worst_diagonal = max(worst_diagonal, float(gradient @ gradient))
            for part in EntryPart:
                worst[part] = max(worst[part], gradient_norm_squared(state, None, 0, 3, part))
        assert worst_diagonal <= 4 + 1e-12
        assert worst[EntryPart.RE] <= 1 + 1e-12
        assert worst[EntryPart.IM] <= 1 + 1e-12

    def test_imaginary_diagonal_gradient_vanishes(self):
        state = sample_uniform_state(6, SeededStream(23)).with_dims(HilbertDims(2, 3))
        np.testing.assert_allclose(gradient_of_reduced_entry(state, None, 1, 1, EntryPart.IM), 0.0)

    def test_estimated_lipschitz_norm_below_analytic(self):
        stream = SeededStream(29)
        assert estimate_lipschitz_norm(4, 8, 0, 0, EntryPart.RE, 2000, stream) <= 2.0 + 1e-12
        assert estimate_lipschitz_norm(4, 8, 0, 1, EntryPart.IM, 2000, stream) <= 1.0 + 1e-12

    def test_index_out_of_range(self):
        state = sample_uniform_state(6, SeededStream(1)).with_dims(HilbertDims(2, 3))
        with pytest.raises(IndexRangeError):
            gradient_of_reduced_entry(state, None, 0, 2)
        with pytest.raises(IndexError):
            reduced_entry(state.amplitudes, HilbertDims(2, 3), 5, 0)


# ═══════════════════════════════════════════════════════════════════
# Monte Carlo experiment
# ═══════════════════════════════════════════════════════════════════


class TestExperiment:

    @pytest.mark.parametrize("n1,n2", [(2, 2), (4, 64), (8, 128)])
    def test_frequencies_within_bounds(self, n1, n2):
        report = run_concentration_experiment(n1, n2, 10000, EPSILON_GRID, SeededStream(42))
        assert len(report.rows) == 3 * len(EPSILON_GRID)
        assert report.violations(3.0) == []
        if n1 * n2 >= 256:
            assert report.mean_rho_distance <= 0.02

    def test_trivial_bound_rows(self):
        report = run_concentration_experiment(2, 2, 1000, EPSILON_GRID, SeededStream(1))
        row = report.row(DeviationKind.DIAGONAL_RE, 0.2)
        assert row.bound_form == BoundForm.TRIVIAL
        assert row.bound == 1.0

    def test_thread_count_does_not_change_report(self):
        single = run_concentration_experiment(4, 16, 2500, [0.05, 0.1], SeededStream(8), threads=1)
        pooled = run_concentration_experiment(4, 16, 2500, [0.05, 0.1], SeededStream(8), threads=4)
        assert [r.exceedances for r in single.rows] == [r.exceedances for r in pooled.rows]
        np.testing.assert_array_equal(single.mean_rho, pooled.mean_rho)

    def test_single_row_subsystem_has_only_diagonal(self):
        report = run_concentration_experiment(1, 16, 200, [0.1], SeededStream(2))
        assert [row.kind for row in report.rows] == [DeviationKind.DIAGONAL_RE]
        assert report.row(DeviationKind.DIAGONAL_RE, 0.1).exceedances == 0

    def test_rejects_few_trials(self):
        with pytest.raises(ConfigError):
            run_concentration_experiment(2, 2, 99, [0.1], SeededStream(1))

    def test_rejects_unsorted_grid(self):
        with pytest.raises(ConfigError):
            run_concentration_experiment(2, 2, 100, [0.2, 0.1], SeededStream(1))

    def test_dimension_overflow(self):
        with pytest.raises(DimensionOverflowError):
            run_concentration_experiment(100, 100, 100, [0.1], SeededStream(1))

    def test_factorization_scan(self):
        assert factor_pairs(12) == [(2, 6), (3, 4), (4, 3), (6, 2), (12, 1)]
        reports = run_factorization_scan(16, 500, [0.1, 0.3], SeededStream(4))
        assert [(r.n1, r.n2) for r in reports] == [(2, 8), (4, 4), (8, 2), (16, 1)]
        bounds = {r.row(DeviationKind.OFF_DIAGONAL_RE, 0.3).bound for r in reports}
        assert len(bounds) == 1
