import math

import numpy as np
import pytest

from hevqe.estimator import (
    EnergyEstimate,
    error_bound,
    exact_energy,
    sampled_energy,
    variance_comparison_experiment,
)
from hevqe.pauli import PauliString, QubitHamiltonian, group_tpb
from hevqe.simulator import DensityMatrix, ReadoutModel, init_state
from oracles import dense_hamiltonian


def ham(n, pairs, shift=0.0):
    return QubitHamiltonian(
        n,
        [(c, PauliString.from_letters(letters)) for c, letters in pairs],
        identity_shift=shift,
    )


def random_state(rng, n):
    dim = 2**n
    vec = rng.normal(size=dim) + 1j * rng.normal(size=dim)
    vec /= np.linalg.norm(vec)
    return DensityMatrix(n, np.outer(vec, vec.conj()))


def product_state(z_angles):
    data = np.array([[1.0]], dtype=complex)
    for t in z_angles:
        amp = np.array([math.cos(t / 2), math.sin(t / 2)], dtype=complex)
        data = np.kron(data, np.outer(amp, amp.conj()))
    return DensityMatrix(len(z_angles), data)


MOLECULE_SHAPED = ham(
    2,
    [(0.394, "ZI"), (-0.394, "IZ"), (0.011, "ZZ"), (0.181, "XX")],
    shift=-0.321,
)


class TestExactEnergy:
    def test_ground_state_z(self):
        h = ham(1, [(1.0, "Z")])
        assert exact_energy(init_state(1), h) == pytest.approx(1.0, abs=1e-12)

    def test_ground_state_x(self):
        h = ham(1, [(1.0, "X")])
        assert exact_energy(init_state(1), h) == pytest.approx(0.0, abs=1e-12)

    def test_random_matches_dense_trace(self):
        rng = np.random.default_rng(1)
        h = ham(2, [(0.3, "XY"), (-0.7, "ZZ"), (0.2, "IX")], shift=0.4)
        rho = random_state(rng, 2)
        dense = dense_hamiltonian([(c, p.letters) for c, p in h.terms], 2, 0.4)
        expected = float(np.real(np.trace(rho.data @ dense)))
        assert exact_energy(rho, h) == pytest.approx(expected, abs=1e-10)

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError, match="dimensions"):
            exact_energy(init_state(2), ham(1, [(1.0, "Z")]))

    def test_shift_included(self):
        h = ham(1, [(1.0, "Z")], shift=2.5)
        assert exact_energy(init_state(1), h) == pytest.approx(3.5, abs=1e-12)


class TestSampledEnergy:
    def test_z_eigenstate_exact_with_zero_error(self):
        h = ham(2, [(0.7, "ZI"), (-0.3, "IZ"), (0.2, "ZZ")], shift=1.5)
        flip = np.diag([0.0, 1.0])
        rho = DensityMatrix(2, np.kron(np.diag([1.0, 0.0]), flip))  # |01>
        est = sampled_energy(rho, h, shots=50, rng=np.random.default_rng(0))
        assert est.value == pytest.approx(0.7 + 0.3 - 0.2 + 1.5, abs=1e-12)
        assert est.std_error == pytest.approx(0.0, abs=1e-12)

    def test_term_means_follow_hamiltonian_order(self):
        h = ham(2, [(0.7, "ZI"), (-0.3, "IZ"), (0.2, "ZZ")])
        flip = np.diag([0.0, 1.0])
        rho = DensityMatrix(2, np.kron(np.diag([1.0, 0.0]), flip))
        est = sampled_energy(rho, h, shots=20, rng=np.random.default_rng(0))
        by_letters = {p.letters: m for (c, p), m in zip(h.terms, est.term_means)}
        assert by_letters == {"ZI": 1.0, "IZ": -1.0, "ZZ": -1.0}

    def test_rotated_eigenstate_exact(self):
        # |+> x |+i> is a +1 eigenstate of X x Y, so the corrected products
        # are constant and the error vanishes
        plus = np.array([1.0, 1.0]) / math.sqrt(2)
        plus_i = np.array([1.0, 1.0j]) / math.sqrt(2)
        vec = np.kron(plus, plus_i)
        rho = DensityMatrix(2, np.outer(vec, vec.conj()))
        est = sampled_energy(
            rho, ham(2, [(0.5, "XY")]), shots=40, rng=np.random.default_rng(3)
        )
        assert est.value == pytest.approx(0.5, abs=1e-12)
        assert est.std_error == pytest.approx(0.0, abs=1e-12)

    def test_plus_state_statistics(self):
        plus = np.full((2, 2), 0.5, dtype=complex)
        rho = DensityMatrix(1, plus)
        shots = 10**4
        est = sampled_energy(
            rho, ham(1, [(1.0, "Z")]), shots=shots, rng=np.random.default_rng(5)
        )
        assert abs(est.value) < 5 / math.sqrt(shots)
        assert est.std_error == pytest.approx(1 / math.sqrt(shots), rel=0.1)

    def test_unbiased_over_repeats(self):
        rng = np.random.default_rng(7)
        h = ham(
            2,
            [
                (0.4, "ZI"),
                (-0.2, "IZ"),
                (0.3, "ZZ"),
                (0.25, "XX"),
                (-0.15, "YY"),
                (0.1, "XZ"),
                (0.05, "ZX"),
                (-0.3, "YX"),
            ],
            shift=0.2,
        )
        rho = random_state(rng, 2)
        exact = exact_energy(rho, h)
        repeats = 150
        values = np.empty(repeats)
        errors = np.empty(repeats)
        for k in range(repeats):
            est = sampled_energy(rho, h, shots=500, rng=rng)
            values[k] = est.value
            errors[k] = est.std_error
        sigma_of_mean = errors.mean() / math.sqrt(repeats)
        assert abs(values.mean() - exact) < 5 * sigma_of_mean

    def test_reported_error_tracks_empirical_spread(self):
        rng = np.random.default_rng(11)
        rho = random_state(rng, 2)
        repeats = 200
        values = np.empty(repeats)
        errors = np.empty(repeats)
        for k in range(repeats):
            est = sampled_energy(rho, MOLECULE_SHAPED, shots=1000, rng=rng)
            values[k] = est.value
            errors[k] = est.std_error
        ratio = values.std(ddof=1) / errors.mean()
        assert 0.7 < ratio < 1.4

    def test_assignment_corrected_unbiased(self):
        rng = np.random.default_rng(13)
        readout = ReadoutModel.symmetric(2, 0.05)
        h = ham(2, [(0.6, "ZZ"), (0.3, "XI")], shift=0.1)
        rho = random_state(rng, 2)
        exact = exact_energy(rho, h)
        repeats = 120
        values = np.empty(repeats)
        errors = np.empty(repeats)
        for k in range(repeats):
            est = sampled_energy(rho, h, shots=800, readout=readout, rng=rng)
            values[k] = est.value
            errors[k] = est.std_error
        sigma_of_mean = errors.mean() / math.sqrt(repeats)
        assert abs(values.mean() - exact) < 5 * sigma_of_mean

    def test_deterministic_under_seed(self):
        rho = random_state(np.random.default_rng(17), 2)
        a = sampled_energy(rho, MOLECULE_SHAPED, shots=300, rng=np.random.default_rng(23))
        b = sampled_energy(rho, MOLECULE_SHAPED, shots=300, rng=np.random.default_rng(23))
        assert a.value == b.value
        assert a.std_error == b.std_error
        assert a.term_means == b.term_means

    def test_too_few_shots_rejected(self):
        with pytest.raises(ValueError, match="two shots"):
            sampled_energy(init_state(1), ham(1, [(1.0, "Z")]), shots=1)

    def test_negative_error_rejected(self):
        grouping = group_tpb(MOLECULE_SHAPED)
        with pytest.raises(ValueError, match="non-negative"):
            EnergyEstimate(0.0, -1.0, 10, grouping, (0.0,))


class TestErrorBound:
    def test_formula_values(self):
        h = ham(
            2,
            [(0.5, "ZI"), (-0.25, "IZ"), (0.125, "ZZ"), (0.0625, "XX")],
        )
        grouping = group_tpb(h)
        assert grouping.set_count == 2
        ungrouped, grouped = error_bound(h, grouping, 1000)
        assert ungrouped == pytest.approx(math.sqrt(4 * 0.25 / 1000))
        assert grouped == pytest.approx(math.sqrt(2 * 0.25 * (4 + 2 * 9) / (4 * 1000)))

    def test_single_term(self):
        h = ham(1, [(0.8, "Z")])
        grouping = group_tpb(h)
        ungrouped, grouped = error_bound(h, grouping, 400)
        assert ungrouped == pytest.approx(0.8 / 20)
        assert grouped == pytest.approx(math.sqrt(2) * 0.8 / 20)

    def test_quadrupling_shots_halves_bounds(self):
        grouping = group_tpb(MOLECULE_SHAPED)
        u1, g1 = error_bound(MOLECULE_SHAPED, grouping, 1000)
        u4, g4 = error_bound(MOLECULE_SHAPED, grouping, 4000)
        assert u4 == pytest.approx(u1 / 2)
        assert g4 == pytest.approx(g1 / 2)

    def test_bad_shots_rejected(self):
        grouping = group_tpb(MOLECULE_SHAPED)
        with pytest.raises(ValueError):
            error_bound(MOLECULE_SHAPED, grouping, 0)


class TestVarianceComparison:
    def test_single_set_covariance_matches_analytic(self):
        a, b = 0.8, 0.5
        h = ham(2, [(a, "ZI"), (b, "ZZ")])
        t0, t1 = 1.1, 0.4
        z0, z1 = math.cos(t0), math.cos(t1)
        rho = product_state([t0, t1])
        shots = 4 * 10**4
        est = sampled_energy(rho, h, shots=shots, rng=np.random.default_rng(29))
        measured_var = est.std_error**2 * shots
        analytic = (
            a**2 * (1 - z0**2)
            + b**2 * (1 - z0**2 * z1**2)
            + 2 * a * b * z1 * (1 - z0**2)
        )
        assert measured_var == pytest.approx(analytic, rel=0.07)
        assert est.value == pytest.approx(a * z0 + b * z0 * z1, abs=5 * est.std_error)

    def test_no_grouping_possible_distributions_agree(self):
        h = ham(2, [(0.5, "XX"), (0.5, "YY"), (0.5, "ZZ")])
        assert group_tpb(h).set_count == 3
        grouped, ungrouped = variance_comparison_experiment(
            h, 200, 200, np.random.default_rng(31)
        )
        ratio = np.median(grouped) / np.median(ungrouped)
        assert 0.75 < ratio < 1.33

    def test_molecular_shape_grouping_wins(self):
        grouped, ungrouped = variance_comparison_experiment(
            MOLECULE_SHAPED, 300, 300, np.random.default_rng(37)
        )
        assert np.median(grouped) <= np.median(ungrouped)

    def test_bad_state_count_rejected(self):
        with pytest.raises(ValueError):
            variance_comparison_experiment(
                MOLECULE_SHAPED, 0, 100, np.random.default_rng(0)
            )
