import numpy as np
import pytest

from hevqe.pauli import (
    ORACLE_QUBIT_LIMIT,
    PauliString,
    QubitHamiltonian,
    ground_energy,
    group_tpb,
    multiply,
    pauli_expectation,
    qubitwise_compatible,
    to_matrix,
)
from oracles import (
    dense_hamiltonian,
    dense_pauli,
    letters_qubitwise_compatible,
    minimum_tpb_cover,
)

LETTERS = "IXYZ"


def random_hamiltonian(rng, n, n_terms):
    terms = []
    for _ in range(n_terms):
        letters = "".join(rng.choice(list(LETTERS)) for _ in range(n))
        terms.append((float(rng.normal()), letters))
    return QubitHamiltonian(n, terms)


class TestPauliString:
    def test_letters_round_trip(self):
        for letters in ("I", "X", "Y", "Z", "XIZY", "IIII", "YX"):
            assert PauliString.from_letters(letters).letters == letters

    def test_invalid_letter_rejected(self):
        with pytest.raises(ValueError):
            PauliString.from_letters("XA")

    def test_weight_and_support(self):
        p = PauliString.from_letters("IXIZY")
        assert p.weight == 3
        assert p.support == (1, 3, 4)

    def test_immutable_and_hashable(self):
        p = PauliString.from_letters("XZ")
        with pytest.raises(AttributeError):
            p.x = 3
        assert len({p, PauliString.from_letters("XZ")}) == 1

    def test_matrix_matches_kron_oracle(self):
        rng = np.random.default_rng(7)
        for _ in range(30):
            n = int(rng.integers(1, 5))
            letters = "".join(rng.choice(list(LETTERS)) for _ in range(n))
            got = PauliString.from_letters(letters).matrix()
            np.testing.assert_allclose(got, dense_pauli(letters), atol=1e-15)

    def test_big_endian_ordering(self):
        # qubit 0 is the most significant kron factor
        zi = PauliString.from_letters("ZI").matrix()
        np.testing.assert_allclose(zi, np.diag([1, 1, -1, -1]).astype(complex))


class TestMultiply:
    def test_x_times_x_is_identity(self):
        phase, res = multiply(
            PauliString.from_letters("X"), PauliString.from_letters("X")
        )
        assert phase == 1
        assert res.letters == "I"

    def test_x_times_y_is_iz(self):
        phase, res = multiply(
            PauliString.from_letters("X"), PauliString.from_letters("Y")
        )
        assert phase == 1j
        assert res.letters == "Z"

    def test_two_qubit_example_against_oracle(self):
        p = PauliString.from_letters("XZ")
        q = PauliString.from_letters("ZX")
        phase, res = multiply(p, q)
        product = dense_pauli("XZ") @ dense_pauli("ZX")
        np.testing.assert_allclose(phase * dense_pauli(res.letters), product, atol=1e-15)

    def test_all_single_qubit_pairs_against_oracle(self):
        for a in LETTERS:
            for b in LETTERS:
                phase, res = multiply(
                    PauliString.from_letters(a), PauliString.from_letters(b)
                )
                np.testing.assert_allclose(
                    phase * dense_pauli(res.letters),
                    dense_pauli(a) @ dense_pauli(b),
                    atol=1e-15,
                )

    def test_random_pairs_against_oracle(self):
        rng = np.random.default_rng(11)
        for _ in range(100):
            n = int(rng.integers(1, 5))
            a = "".join(rng.choice(list(LETTERS)) for _ in range(n))
            b = "".join(rng.choice(list(LETTERS)) for _ in range(n))
            phase, res = multiply(
                PauliString.from_letters(a), PauliString.from_letters(b)
            )
            np.testing.assert_allclose(
                phase * dense_pauli(res.letters),
                dense_pauli(a) @ dense_pauli(b),
                atol=1e-15,
            )

    def test_associativity(self):
        rng = np.random.default_rng(13)
        for _ in range(50):
            n = int(rng.integers(1, 3))
            a, b, c = (
                PauliString.from_letters(
                    "".join(rng.choice(list(LETTERS)) for _ in range(n))
                )
                for _ in range(3)
            )
            ph1, ab = multiply(a, b)
            ph2, ab_c = multiply(ab, c)
            ph3, bc = multiply(b, c)
            ph4, a_bc = multiply(a, bc)
            assert ab_c == a_bc
            assert ph1 * ph2 == ph3 * ph4

    def test_mismatched_size_rejected(self):
        with pytest.raises(ValueError):
            multiply(PauliString.from_letters("X"), PauliString.from_letters("XX"))


class TestQubitwiseCompatible:
    def test_spec_examples(self):
        zi = PauliString.from_letters("ZI")
        iz = PauliString.from_letters("IZ")
        xx = PauliString.from_letters("XX")
        xi = PauliString.from_letters("XI")
        zz = PauliString.from_letters("ZZ")
        assert qubitwise_compatible(zi, iz)
        assert qubitwise_compatible(xx, xi)
        assert not qubitwise_compatible(xx, zz)

    def test_random_against_letterwise_oracle(self):
        rng = np.random.default_rng(17)
        for _ in range(300):
            n = int(rng.integers(1, 7))
            a = "".join(rng.choice(list(LETTERS)) for _ in range(n))
            b = "".join(rng.choice(list(LETTERS)) for _ in range(n))
            assert qubitwise_compatible(
                PauliString.from_letters(a), PauliString.from_letters(b)
            ) == letters_qubitwise_compatible(a, b)

    def test_compatible_pairs_commute(self):
        rng = np.random.default_rng(19)
        for _ in range(200):
            n = int(rng.integers(1, 6))
            a = PauliString.from_letters(
                "".join(rng.choice(list(LETTERS)) for _ in range(n))
            )
            b = PauliString.from_letters(
                "".join(rng.choice(list(LETTERS)) for _ in range(n))
            )
            if qubitwise_compatible(a, b):
                ph1, ab = multiply(a, b)
                ph2, ba = multiply(b, a)
                assert ab == ba and ph1 == ph2


class TestQubitHamiltonian:
    def test_duplicates_merge(self):
        h = QubitHamiltonian(2, [(0.5, "XX"), (0.25, "XX"), (1.0, "ZI")])
        assert h.term_count == 2
        lookup = {p.letters: c for c, p in h.terms}
        assert lookup["XX"] == pytest.approx(0.75)

    def test_identity_terms_fold_into_shift(self):
        h = QubitHamiltonian(2, [(0.5, "II"), (1.0, "ZZ")], identity_shift=0.25)
        assert h.identity_shift == pytest.approx(0.75)
        assert h.term_count == 1

    def test_tiny_terms_pruned(self):
        h = QubitHamiltonian(1, [(1e-13, "X"), (1.0, "Z")])
        assert [p.letters for _, p in h.terms] == ["Z"]

    def test_cancellation_prunes(self):
        h = QubitHamiltonian(1, [(0.5, "X"), (-0.5, "X"), (1.0, "Z")])
        assert h.term_count == 1

    def test_terms_sorted_lexicographically(self):
        h = QubitHamiltonian(2, [(1.0, "ZZ"), (2.0, "IX"), (3.0, "XI")])
        assert [p.letters for _, p in h.terms] == ["IX", "XI", "ZZ"]

    def test_qubit_count_mismatch_rejected(self):
        with pytest.raises(ValueError):
            QubitHamiltonian(2, [(1.0, "XXX")])

    def test_text_round_trip_is_exact(self):
        rng = np.random.default_rng(23)
        h = random_hamiltonian(rng, 4, 25)
        h2 = QubitHamiltonian.from_text(h.to_text(header=("problem: demo",)))
        assert h == h2

    def test_from_text_rejects_garbage(self):
        with pytest.raises(ValueError):
            QubitHamiltonian.from_text("1.0 XX extra\n")
        with pytest.raises(ValueError):
            QubitHamiltonian.from_text("abc XX\n")
        with pytest.raises(ValueError):
            QubitHamiltonian.from_text("1.0 XX\n2.0 XXX\n")
        with pytest.raises(ValueError):
            QubitHamiltonian.from_text("# only comments\n")


class TestGroupTpb:
    def test_commuting_z_family_shares_one_set(self):
        h = QubitHamiltonian(2, [(1.0, "ZI"), (1.0, "IZ"), (1.0, "ZZ")])
        g = group_tpb(h)
        assert g.set_count == 1
        assert g.bases == ("ZZ",)

    def test_mixed_family_needs_two_sets(self):
        h = QubitHamiltonian(2, [(1.0, "ZI"), (1.0, "IZ"), (1.0, "ZZ"), (0.5, "XX")])
        g = group_tpb(h)
        assert g.set_count == 2

    def test_partition_is_valid(self):
        rng = np.random.default_rng(29)
        for _ in range(20):
            h = random_hamiltonian(rng, 4, 20)
            g = group_tpb(h)
            seen = sorted(i for s in g.sets for i in s)
            assert seen == list(range(h.term_count))
            for members, basis in zip(g.sets, g.bases):
                assert set(basis) <= set("XYZ")
                for i in members:
                    pauli = h.terms[i][1]
                    for q in pauli.support:
                        assert basis[q] == pauli.letter(q)

    def test_greedy_at_least_exhaustive_optimum(self):
        rng = np.random.default_rng(31)
        for _ in range(10):
            h = random_hamiltonian(rng, 3, 8)
            g = group_tpb(h)
            optimum = minimum_tpb_cover([p.letters for _, p in h.terms])
            assert optimum <= g.set_count <= h.term_count

    def test_deterministic(self):
        rng = np.random.default_rng(37)
        h = random_hamiltonian(rng, 4, 30)
        g1 = group_tpb(h)
        g2 = group_tpb(h)
        assert g1.sets == g2.sets and g1.bases == g2.bases

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            group_tpb(QubitHamiltonian(1, []))


class TestToMatrix:
    def test_single_z(self):
        h = QubitHamiltonian(1, [(1.0, "Z")])
        np.testing.assert_allclose(to_matrix(h), np.diag([1.0, -1.0]).astype(complex))

    def test_scaled_xx_antidiagonal(self):
        h = QubitHamiltonian(2, [(0.5, "XX")])
        expected = 0.5 * np.fliplr(np.eye(4)).astype(complex)
        np.testing.assert_allclose(to_matrix(h), expected)

    def test_random_against_kron_oracle(self):
        rng = np.random.default_rng(41)
        for _ in range(10):
            n = int(rng.integers(1, 5))
            h = random_hamiltonian(rng, n, 12)
            expected = dense_hamiltonian(
                [(c, p.letters) for c, p in h.terms], n, shift=h.identity_shift
            )
            np.testing.assert_allclose(h.matrix(), expected, atol=1e-12)

    def test_oracle_limit_enforced(self):
        h = QubitHamiltonian(ORACLE_QUBIT_LIMIT + 1, [(1.0, "Z" * 13)])
        with pytest.raises(ValueError):
            to_matrix(h)


class TestGroundEnergy:
    def test_single_z(self):
        assert ground_energy(QubitHamiltonian(1, [(1.0, "Z")])) == pytest.approx(-1.0)

    def test_two_qubit_exchange_spectrum(self):
        h = QubitHamiltonian(2, [(1.0, "XX"), (1.0, "YY"), (1.0, "ZZ")])
        vals = np.linalg.eigvalsh(h.matrix())
        np.testing.assert_allclose(vals, [-3.0, 1.0, 1.0, 1.0], atol=1e-12)

    def test_shift_moves_ground_energy(self):
        rng = np.random.default_rng(43)
        h = random_hamiltonian(rng, 3, 10)
        shifted = QubitHamiltonian(
            3, [(c, p.letters) for c, p in h.terms], identity_shift=h.identity_shift + 0.5
        )
        assert ground_energy(shifted) == pytest.approx(ground_energy(h) + 0.5)


class TestPauliExpectation:
    def test_matches_trace_oracle(self):
        rng = np.random.default_rng(47)
        for _ in range(20):
            n = int(rng.integers(1, 4))
            dim = 2**n
            raw = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
            rho = raw @ raw.conj().T
            rho /= np.trace(rho).real
            letters = "".join(rng.choice(list(LETTERS)) for _ in range(n))
            got = pauli_expectation(rho, PauliString.from_letters(letters))
            expected = np.trace(rho @ dense_pauli(letters)).real
            assert got == pytest.approx(expected, abs=1e-10)
