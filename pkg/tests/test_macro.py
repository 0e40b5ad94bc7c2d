"""
Tests for coarse graining, energy shells and macro partitions.
"""

import numpy as np
import pytest
import scipy.linalg

from core.macro import (
    BandSpec,
    build_macro_partition,
    centered_shell,
    coarse_grain,
    energy_shell,
    joint_partition,
)
from core.sampler import SeededStream, random_unitary
from exceptions import (
    ConfigError,
    EmptyShellError,
    EmptySpectrumError,
    NonCommutingObservableError,
    SpectrumError,
)
from models.hilbert import HermitianOperator, SpectralDecomposition
from utils.validation import commutator_norm
from tests.conftest import POSITION_BINS


def operator_with_spectrum(values, seed=0):
    u = random_unitary(len(values), SeededStream(seed))
    return HermitianOperator(u @ np.diag(values) @ u.conj().T)


def diagonal_spectrum(values):
    return SpectralDecomposition(np.asarray(values, dtype=float), np.eye(len(values)))


# ═══════════════════════════════════════════════════════════════════
# Band specifications
# ═══════════════════════════════════════════════════════════════════


class TestBandSpec:

    def test_needs_exactly_one_form(self):
        with pytest.raises(ConfigError):
            BandSpec()
        with pytest.raises(ConfigError):
            BandSpec(width=1.0, edges=(0.0, 1.0))

    def test_edges_must_increase(self):
        with pytest.raises(ConfigError):
            BandSpec.explicit([0.0, 0.0, 1.0])

    def test_interior_tie_goes_to_lower_band(self):
        indices, _, warnings = BandSpec.explicit([0.0, 1.0, 2.0]).assign(np.array([0.0, 0.5, 1.0, 1.5, 2.0]))
        assert indices.tolist() == [0, 0, 0, 1, 1]
        assert len(warnings) == 1

    def test_near_tie_within_tolerance(self):
        indices, _, warnings = BandSpec.explicit([0.0, 1.0, 2.0]).assign(np.array([1.0 + 5e-11, 1.0 + 1e-6]))
        assert indices.tolist() == [0, 1]
        assert len(warnings) == 1

    def test_uncovered_eigenvalue(self):
        with pytest.raises(SpectrumError):
            BandSpec.explicit([0.0, 1.0]).assign(np.array([0.5, 3.0]))

    def test_width_covers_range(self):
        indices, edges, _ = BandSpec.uniform(0.3).assign(np.array([0.0, 0.1, 0.65, 1.0]))
        assert edges[0] == 0.0 and edges[-1] >= 1.0
        assert indices.tolist() == [0, 0, 2, 3]

    def test_width_on_flat_spectrum(self):
        with pytest.raises(EmptySpectrumError):
            BandSpec.uniform(0.5).assign(np.array([2.0, 2.0, 2.0]))

    def test_unit_bins(self):
        assert POSITION_BINS.edges == BandSpec.unit_bins(0, 8, 2).edges


# ═══════════════════════════════════════════════════════════════════
# Coarse graining
# ═══════════════════════════════════════════════════════════════════


class TestCoarseGrain:

    def test_band_means(self):
        op = operator_with_spectrum([0.0, 0.1, 0.2, 5.0, 5.2])
        macro = coarse_grain(op, BandSpec.explicit([-1.0, 1.0, 6.0]))
        np.testing.assert_allclose(np.linalg.eigvalsh(macro.coarse.entries), [0.1, 0.1, 0.1, 5.1, 5.1], atol=1e-12)
        assert [band.size for band in macro.bands] == [3, 2]

    def test_single_band_gives_trace_average(self):
        op = operator_with_spectrum([1.0, 2.0, 4.0, 5.0], seed=3)
        macro = coarse_grain(op, BandSpec.explicit([0.0, 10.0]))
        np.testing.assert_allclose(macro.coarse.entries, 3.0 * np.eye(4), atol=1e-12)

    def test_identity_is_unchanged(self):
        macro = coarse_grain(HermitianOperator(np.eye(3)), BandSpec.explicit([0.0, 2.0]))
        np.testing.assert_allclose(macro.coarse.entries, np.eye(3), atol=1e-12)

    def test_idempotent(self):
        op = operator_with_spectrum([0.0, 0.3, 1.2, 1.4, 2.9], seed=5)
        spec = BandSpec.explicit([-0.5, 1.0, 2.0, 3.0])
        once = coarse_grain(op, spec)
        twice = coarse_grain(once.coarse, spec)
        np.testing.assert_allclose(twice.coarse.entries, once.coarse.entries, atol=1e-12)

    def test_commutes_with_original(self):
        op = operator_with_spectrum([0.0, 0.3, 1.2, 1.4, 2.9], seed=6)
        macro = coarse_grain(op, BandSpec.uniform(1.0))
        assert commutator_norm(macro.coarse.entries, op.entries) <= 1e-10

    def test_flat_spectrum_with_width(self):
        with pytest.raises(EmptySpectrumError):
            coarse_grain(HermitianOperator(np.eye(3)), BandSpec.uniform(1.0))


# ═══════════════════════════════════════════════════════════════════
# Energy shells
# ═══════════════════════════════════════════════════════════════════


class TestEnergyShell:

    def test_full_band(self):
        shell = energy_shell(diagonal_spectrum([0.0, 1.0, 2.0]), -1.0, 3.0)
        assert shell.D == 3

    def test_half_open_band(self):
        shell = energy_shell(diagonal_spectrum([0.0, 1.0, 2.0]), 0.0, 2.0)
        assert shell.indices == (0, 1)

    def test_empty_band_reports_neighbours(self):
        with pytest.raises(EmptyShellError) as info:
            energy_shell(diagonal_spectrum([0.0, 1.0, 2.0]), 1.2, 1.8)
        assert info.value.below == 1.0
        assert info.value.above == 2.0

    def test_model_shell_matches_eigenvalue_count(self, acceptance_model):
        energies = acceptance_model.spectrum.eigenvalues
        lo, hi = float(energies[10]), float(energies[30])
        shell = energy_shell(acceptance_model.spectrum, lo, hi)
        assert shell.D == int(np.count_nonzero((energies >= lo) & (energies < hi))) == 20

    def test_centered_shell(self, acceptance_model):
        shell = centered_shell(acceptance_model.spectrum, 28)
        assert shell.D == 28
        assert shell.indices == tuple(range(14, 42))

    def test_shell_operations(self):
        spectrum = diagonal_spectrum([0.0, 1.0, 2.0, 3.0])
        shell = energy_shell(spectrum, 0.5, 2.5)
        np.testing.assert_allclose(shell.projector(), np.diag([0, 1, 1, 0]))
        inside = shell.lift(np.array([0.6, 0.8]))
        assert shell.leakage(inside) == pytest.approx(0.0, abs=1e-15)
        np.testing.assert_allclose(shell.compress(np.diag([5.0, 6.0, 7.0, 8.0])), np.diag([6.0, 7.0]))


# ═══════════════════════════════════════════════════════════════════
# Partitions
# ═══════════════════════════════════════════════════════════════════


class TestMacroPartition:

    def test_identity_gives_single_cell(self, acceptance_partition):
        shell = acceptance_partition.shell
        partition = build_macro_partition(shell, np.eye(shell.dim), BandSpec.explicit([0.0, 2.0]))
        assert len(partition.cells) == 1
        assert partition.cells[0].dimension == shell.D
        partition.validate()

    def test_position_cells(self, acceptance_partition, acceptance_model):
        partition = acceptance_partition
        partition.validate()
        assert partition.dimensions.sum() == partition.D
        assert np.all(partition.dimensions >= 1)
        assert len(partition.cells) >= 2
        compressed = partition.shell.compress(acceptance_model.basis.ball_position_operator())
        eigenvalues = scipy.linalg.eigvalsh(compressed)
        expected = [np.count_nonzero((eigenvalues > lo) & (eigenvalues <= hi))
                    for lo, hi in zip(POSITION_BINS.edges, POSITION_BINS.edges[1:])]
        assert sorted(partition.dimensions.tolist()) == sorted(d for d in expected if d)

    def test_integer_traces(self, acceptance_partition):
        for cell in acceptance_partition.cells:
            assert np.trace(cell.projector).real == pytest.approx(cell.dimension, abs=1e-8)

    def test_weights_sum_to_one(self, acceptance_partition):
        coordinates = np.ones(acceptance_partition.D) / np.sqrt(acceptance_partition.D)
        assert acceptance_partition.weights(coordinates).sum() == pytest.approx(1.0, abs=1e-10)

    def test_commuting_mode_rejects_generic_observable(self, acceptance_model, acceptance_partition):
        with pytest.raises(NonCommutingObservableError):
            build_macro_partition(acceptance_partition.shell, acceptance_model.basis.ball_position_operator(),
                                  POSITION_BINS, mode="commuting")

    def test_commuting_mode_accepts_hamiltonian(self, acceptance_model, acceptance_partition):
        shell = acceptance_partition.shell
        partition = build_macro_partition(shell, acceptance_model.hamiltonian,
                                          BandSpec.uniform(1.0), mode="commuting")
        assert partition.mode == "commuting"
        assert partition.dimensions.sum() == shell.D

    @staticmethod
    def energy_cells(shell, cuts):
        """Partition by shell energy with edges at the given level indices."""
        e = shell.eigenvalues
        edges = [shell.e_lo] + [0.5 * (e[i - 1] + e[i]) for i in cuts] + [shell.e_hi]
        return build_macro_partition(shell, np.diag(e), BandSpec.explicit(edges))

    def test_joint_partition_of_energy_cells(self, acceptance_partition):
        shell = acceptance_partition.shell
        halves = self.energy_cells(shell, [13])
        thirds = self.energy_cells(shell, [7, 20])
        assert halves.dimensions.tolist() == [13, 13]
        joint = joint_partition(halves, thirds)
        joint.validate()
        assert joint.dimensions.tolist() == [7, 6, 7, 6]
        assert joint.labels == ["0:0", "0:1", "1:1", "1:2"]

    def test_joint_partition_rejects_non_commuting(self, acceptance_partition):
        halves = self.energy_cells(acceptance_partition.shell, [13])
        with pytest.raises(NonCommutingObservableError):
            joint_partition(halves, acceptance_partition)

