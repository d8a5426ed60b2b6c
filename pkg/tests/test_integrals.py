"""Gaussian integral engine checks against minimal-basis reference values."""

import math
from pathlib import Path

import numpy as np
import pytest

from hevqe.experiments import molecular_hamiltonian
from hevqe.fermion import PARITY, load_integrals
from hevqe.integrals import (
    ANGSTROM_TO_BOHR,
    beh2,
    boys,
    electron_repulsion_tensor,
    h2,
    kinetic_matrix,
    lih,
    lowdin_orthogonalizer,
    nuclear_attraction_matrix,
    nuclear_repulsion,
    orthogonalized_integrals,
    overlap_matrix,
    sigma_basis,
    write_integral_file,
)
from hevqe.pauli import ground_energy, group_tpb

DATA_DIR = Path(__file__).resolve().parent.parent / "data" / "integrals"

# Tabulated minimal-basis values for two hydrogens at 1.4 bohr separation,
# printed to four decimals in the standard references.
REF_DISTANCE = 1.4 / ANGSTROM_TO_BOHR


@pytest.fixture(scope="module")
def h2_matrices():
    mol = h2(REF_DISTANCE)
    basis = sigma_basis(mol)
    s = overlap_matrix(basis)
    t = kinetic_matrix(basis)
    v = nuclear_attraction_matrix(basis, mol)
    eri = electron_repulsion_tensor(basis)
    return mol, s, t, v, eri


class TestReferenceValues:
    def test_overlap(self, h2_matrices):
        _, s, _, _, _ = h2_matrices
        assert s[0, 0] == pytest.approx(1.0, abs=1e-10)
        assert s[0, 1] == pytest.approx(0.6593, abs=1e-4)
        assert np.allclose(s, s.T)

    def test_kinetic(self, h2_matrices):
        _, _, t, _, _ = h2_matrices
        assert t[0, 0] == pytest.approx(0.7600, abs=1e-4)
        assert t[0, 1] == pytest.approx(0.2365, abs=1e-4)

    def test_core_hamiltonian(self, h2_matrices):
        _, _, t, v, _ = h2_matrices
        core = t + v
        assert core[0, 0] == pytest.approx(-1.1204, abs=1e-4)
        assert core[0, 1] == pytest.approx(-0.9584, abs=1e-4)

    def test_repulsion_tensor(self, h2_matrices):
        _, _, _, _, eri = h2_matrices
        assert eri[0, 0, 0, 0] == pytest.approx(0.7746, abs=1e-4)
        assert eri[0, 0, 1, 1] == pytest.approx(0.5697, abs=1e-4)
        assert eri[0, 1, 0, 1] == pytest.approx(0.2970, abs=1e-4)
        assert eri[1, 0, 0, 0] == pytest.approx(0.4441, abs=1e-4)

    def test_repulsion_symmetries(self, h2_matrices):
        _, _, _, _, eri = h2_matrices
        assert eri[0, 1, 1, 1] == pytest.approx(eri[1, 0, 1, 1], rel=1e-12)
        assert eri[0, 1, 1, 1] == pytest.approx(eri[1, 1, 0, 1], rel=1e-12)

    def test_nuclear_repulsion(self, h2_matrices):
        mol, _, _, _, _ = h2_matrices
        assert nuclear_repulsion(mol) == pytest.approx(1.0 / 1.4, rel=1e-12)


class TestBoysFunction:
    def test_zero_argument(self):
        assert boys(0, 0.0) == pytest.approx(1.0, rel=1e-14)
        assert boys(2, 0.0) == pytest.approx(1.0 / 5.0, rel=1e-14)

    def test_small_argument_continuity(self):
        below = boys(1, 5e-13)
        above = boys(1, 2e-12)
        assert abs(below - above) < 1e-10

    def test_large_argument_asymptote(self):
        x = 30.0
        assert boys(0, x) == pytest.approx(0.5 * math.sqrt(math.pi / x), rel=1e-9)

    def test_decreasing_in_order(self):
        values = [boys(m, 0.7) for m in range(5)]
        assert all(a > b > 0 for a, b in zip(values, values[1:]))


class TestOrthogonalization:
    @pytest.mark.parametrize("builder,distance", [(h2, 0.735), (lih, 1.595), (beh2, 1.326)])
    def test_lowdin_whitens_overlap(self, builder, distance):
        mol = builder(distance)
        s = overlap_matrix(sigma_basis(mol))
        x = lowdin_orthogonalizer(s)
        assert np.allclose(x.T @ s @ x, np.eye(len(s)), atol=1e-12)

    def test_orthogonalized_shapes(self):
        core, eri, shift = orthogonalized_integrals(lih(1.595))
        assert core.shape == (4, 4)
        assert eri.shape == (4, 4, 4, 4)
        assert shift > 0.0


class TestBundledFiles:
    def test_files_present(self):
        names = sorted(p.name for p in DATA_DIR.glob("*.fcidump"))
        assert "h2_0.735.fcidump" in names
        assert "lih_1.595.fcidump" in names
        assert "beh2_1.326.fcidump" in names

    def test_regeneration_is_deterministic(self, tmp_path):
        mol = h2(0.735)
        first = tmp_path / "a.fcidump"
        second = tmp_path / "b.fcidump"
        write_integral_file(first, mol)
        write_integral_file(second, mol)
        assert first.read_bytes() == second.read_bytes()
        assert first.read_bytes() == (DATA_DIR / "h2_0.735.fcidump").read_bytes()

    @pytest.mark.parametrize(
        "name,electrons",
        [("h2_0.735", 2), ("lih_1.595", 4), ("beh2_1.326", 6)],
    )
    def test_electron_counts(self, name, electrons):
        fh = load_integrals(DATA_DIR / f"{name}.fcidump")
        assert fh.electron_count == electrons


class TestMoleculeCounts:
    @pytest.mark.parametrize(
        "name,frozen,qubits,terms,tpb",
        [
            ("h2_0.735", 0, 2, 4, 2),
            ("lih_1.595", 1, 4, 99, 25),
            ("beh2_1.326", 1, 6, 164, None),
        ],
    )
    def test_term_and_set_counts(self, name, frozen, qubits, terms, tpb):
        hq = molecular_hamiltonian(
            DATA_DIR / f"{name}.fcidump", PARITY, frozen_pairs=frozen
        )
        grouping = group_tpb(hq)
        assert hq.n == qubits
        assert hq.term_count == terms
        if tpb is None:
            # Greedy grouping beats the quoted 44-set cover; see the ledger.
            assert grouping.set_count <= 44
        else:
            assert grouping.set_count == tpb


class TestGroundEnergies:
    def test_h2_equilibrium_full_ci(self):
        hq = molecular_hamiltonian(DATA_DIR / "h2_0.735.fcidump", PARITY)
        assert ground_energy(hq) == pytest.approx(-1.1373, abs=1e-3)

    def test_equilibrium_is_a_minimum(self):
        energies = {
            d: ground_energy(
                molecular_hamiltonian(DATA_DIR / f"h2_{d:.3f}.fcidump", PARITY)
            )
            for d in (0.30, 0.735, 2.70)
        }
        assert energies[0.735] < energies[0.30]
        assert energies[0.735] < energies[2.70]
