"""Pauli string algebra, weighted qubit Hamiltonians, and measurement grouping.

Conventions fixed here and relied on everywhere else:

* Qubit 0 is the leftmost letter in the textual representation.
* Basis states are ordered big-endian in qubit index, i.e. basis index
  ``sum(bit_q << (n - 1 - q))``.
* The identity component of a Hamiltonian is kept as a scalar shift and is
  never grouped or sampled.
"""

from __future__ import annotations

import numpy as np

__all__ = [
    "PauliString",
    "QubitHamiltonian",
    "TpbGrouping",
    "multiply",
    "qubitwise_compatible",
    "group_tpb",
    "to_matrix",
    "ground_energy",
    "pauli_expectation",
    "ORACLE_QUBIT_LIMIT",
    "PRUNE_THRESHOLD",
]

ORACLE_QUBIT_LIMIT = 12
PRUNE_THRESHOLD = 1e-12

# Letter encoding in (x, z) bit pairs: I=(0,0), X=(1,0), Y=(1,1), Z=(0,1).
_LETTER_TO_XZ = {"I": (0, 0), "X": (1, 0), "Y": (1, 1), "Z": (0, 1)}
_XZ_TO_LETTER = {v: k for k, v in _LETTER_TO_XZ.items()}
_PHASES = (1.0 + 0.0j, 1.0j, -1.0 + 0.0j, -1.0j)


class PauliString:
    """Tensor product of single-qubit Pauli operators on ``n`` qubits.

    The letters are bit-packed into two integers ``x`` and ``z`` with bit
    position q holding qubit q. Instances are immutable and hashable;
    ordering compares the textual letters, which gives the lexicographic
    tie-break used by the grouping heuristic.
    """

    __slots__ = ("n", "x", "z")

    def __init__(self, n: int, x: int = 0, z: int = 0):
        if n < 1:
            raise ValueError("need at least one qubit")
        mask = (1 << n) - 1
        if x & ~mask or z & ~mask:
            raise ValueError("bit pattern exceeds qubit count")
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "z", z)

    def __setattr__(self, name, value):
        raise AttributeError("PauliString is immutable")

    @classmethod
    def from_letters(cls, letters: str) -> "PauliString":
        x = z = 0
        for q, letter in enumerate(letters):
            try:
                xb, zb = _LETTER_TO_XZ[letter]
            except KeyError:
                raise ValueError(f"invalid Pauli letter {letter!r}") from None
            x |= xb << q
            z |= zb << q
        return cls(len(letters), x, z)

    @classmethod
    def identity(cls, n: int) -> "PauliString":
        return cls(n, 0, 0)

    @property
    def letters(self) -> str:
        return "".join(
            _XZ_TO_LETTER[(self.x >> q) & 1, (self.z >> q) & 1] for q in range(self.n)
        )

    @property
    def weight(self) -> int:
        return (self.x | self.z).bit_count()

    @property
    def support(self) -> tuple[int, ...]:
        occ = self.x | self.z
        return tuple(q for q in range(self.n) if (occ >> q) & 1)

    def letter(self, q: int) -> str:
        return _XZ_TO_LETTER[(self.x >> q) & 1, (self.z >> q) & 1]

    def is_identity(self) -> bool:
        return self.x == 0 and self.z == 0

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, PauliString)
            and self.n == other.n
            and self.x == other.x
            and self.z == other.z
        )

    def __hash__(self) -> int:
        return hash((self.n, self.x, self.z))

    def __lt__(self, other: "PauliString") -> bool:
        return self.letters < other.letters

    def __repr__(self) -> str:
        return f"PauliString({self.letters!r})"

    def matrix(self) -> np.ndarray:
        """Dense 2^n x 2^n matrix, big-endian qubit ordering."""
        if self.n > ORACLE_QUBIT_LIMIT:
            raise ValueError(f"matrix limited to {ORACLE_QUBIT_LIMIT} qubits")
        dim = 1 << self.n
        cols = np.arange(dim, dtype=np.int64)
        rows = cols ^ _state_mask(self.x, self.n)
        amps = _column_amplitudes(self, cols)
        mat = np.zeros((dim, dim), dtype=complex)
        mat[rows, cols] = amps
        return mat


def _state_mask(bits: int, n: int) -> int:
    """Map qubit-indexed bits to basis-index bits (big-endian)."""
    out = 0
    for q in range(n):
        if (bits >> q) & 1:
            out |= 1 << (n - 1 - q)
    return out


def _parity_of(values: np.ndarray) -> np.ndarray:
    # xor-fold popcount parity; works on any integer dtype up to 64 bits
    v = values.astype(np.int64)
    for shift in (32, 16, 8, 4, 2, 1):
        v ^= v >> shift
    return v & 1


def _column_amplitudes(p: PauliString, cols: np.ndarray) -> np.ndarray:
    """Amplitude of P acting on each basis column: P|b> = amp(b)|b ^ xmask>."""
    zmask = _state_mask(p.z, p.n)
    signs = 1.0 - 2.0 * _parity_of(cols & zmask)
    n_y = (p.x & p.z).bit_count()
    return signs * (1j**n_y)


def multiply(p: PauliString, q: PauliString) -> tuple[complex, PauliString]:
    """Product PQ as (phase, result) with phase in {+1, -1, +i, -i}."""
    if p.n != q.n:
        raise ValueError("qubit count mismatch")
    x3 = p.x ^ q.x
    z3 = p.z ^ q.z
    power = (
        (p.x & p.z).bit_count()
        + (q.x & q.z).bit_count()
        - (x3 & z3).bit_count()
        + 2 * (p.z & q.x).bit_count()
    ) % 4
    return _PHASES[power], PauliString(p.n, x3, z3)


def qubitwise_compatible(p: PauliString, q: PauliString) -> bool:
    """True iff on every qubit the letters are equal or at least one is I."""
    if p.n != q.n:
        raise ValueError("qubit count mismatch")
    both = (p.x | p.z) & (q.x | q.z)
    return both & ((p.x ^ q.x) | (p.z ^ q.z)) == 0


class QubitHamiltonian:
    """Weighted sum of Pauli strings plus a scalar identity shift.

    Terms are merged, pruned below ``prune`` in absolute value, and stored
    sorted lexicographically by letters, so equal Hamiltonians compare and
    serialize identically.
    """

    __slots__ = ("n", "terms", "identity_shift", "_matrix_cache")

    def __init__(self, n, terms, identity_shift=0.0, prune=PRUNE_THRESHOLD):
        merged: dict[PauliString, float] = {}
        shift = float(identity_shift)
        for coeff, pauli in terms:
            if isinstance(pauli, str):
                pauli = PauliString.from_letters(pauli)
            if pauli.n != n:
                raise ValueError("term qubit count mismatch")
            coeff = float(coeff)
            if pauli.is_identity():
                shift += coeff
            else:
                merged[pauli] = merged.get(pauli, 0.0) + coeff
        kept = tuple(
            (c, p) for p, c in sorted(merged.items(), key=lambda kv: kv[0].letters)
            if abs(c) >= prune
        )
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "terms", kept)
        object.__setattr__(self, "identity_shift", shift)
        object.__setattr__(self, "_matrix_cache", None)

    def __setattr__(self, name, value):
        raise AttributeError("QubitHamiltonian is immutable")

    @property
    def term_count(self) -> int:
        return len(self.terms)

    def coefficients(self) -> np.ndarray:
        return np.array([c for c, _ in self.terms])

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, QubitHamiltonian)
            and self.n == other.n
            and self.terms == other.terms
            and self.identity_shift == other.identity_shift
        )

    def __hash__(self):
        return hash((self.n, self.terms, self.identity_shift))

    def __repr__(self) -> str:
        return (
            f"QubitHamiltonian(n={self.n}, terms={self.term_count}, "
            f"shift={self.identity_shift:.6g})"
        )

    def matrix(self) -> np.ndarray:
        if self._matrix_cache is None:
            object.__setattr__(self, "_matrix_cache", to_matrix(self))
        return self._matrix_cache

    def to_text(self, header: tuple[str, ...] = ()) -> str:
        """Serialize as one `coefficient<TAB>letters` line per term.

        The identity shift is written as an all-I letters line. Floats use
        repr, which round-trips exactly.
        """
        lines = [f"# {line}" for line in header]
        lines.append(f"{self.identity_shift!r}\t{'I' * self.n}")
        lines.extend(f"{coeff!r}\t{pauli.letters}" for coeff, pauli in self.terms)
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "QubitHamiltonian":
        entries = []
        n = None
        for lineno, raw in enumerate(text.splitlines(), start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            fields = line.split()
            if len(fields) != 2:
                raise ValueError(f"line {lineno}: expected `coefficient letters`")
            try:
                coeff = float(fields[0])
            except ValueError:
                raise ValueError(f"line {lineno}: bad coefficient {fields[0]!r}") from None
            letters = fields[1]
            if n is None:
                n = len(letters)
            elif len(letters) != n:
                raise ValueError(f"line {lineno}: inconsistent qubit count")
            entries.append((coeff, PauliString.from_letters(letters)))
        if n is None:
            raise ValueError("no Hamiltonian terms found")
        return cls(n, entries)


class TpbGrouping:
    """Partition of Hamiltonian terms into tensor product basis sets.

    ``sets[k]`` lists term indices into the source Hamiltonian's ``terms``;
    ``bases[k]`` is the per-qubit measurement letter string (X, Y or Z on
    every qubit; qubits unconstrained by the set default to Z).
    """

    __slots__ = ("n", "sets", "bases")

    def __init__(self, n, sets, bases):
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "sets", tuple(tuple(s) for s in sets))
        object.__setattr__(self, "bases", tuple(bases))

    def __setattr__(self, name, value):
        raise AttributeError("TpbGrouping is immutable")

    @property
    def set_count(self) -> int:
        return len(self.sets)

    def __repr__(self) -> str:
        return f"TpbGrouping(sets={self.set_count})"


def group_tpb(h: QubitHamiltonian) -> TpbGrouping:
    """Greedy first-fit grouping into tensor product basis sets.

    Terms are visited by descending coefficient magnitude with lexicographic
    letter tie-break, which makes the result deterministic. Each set carries
    the accumulated per-qubit letter constraint; a term joins the first set
    it is qubitwise compatible with.
    """
    if h.term_count == 0:
        raise ValueError("cannot group an empty Hamiltonian")
    order = sorted(
        range(h.term_count),
        key=lambda i: (-abs(h.terms[i][0]), h.terms[i][1].letters),
    )
    members: list[list[int]] = []
    constraints: list[list[int]] = []  # per set: [x, z, occupied] bit ints
    for idx in order:
        pauli = h.terms[idx][1]
        occ = pauli.x | pauli.z
        for k, (cx, cz, cocc) in enumerate(constraints):
            if (cocc & occ) & ((cx ^ pauli.x) | (cz ^ pauli.z)) == 0:
                members[k].append(idx)
                constraints[k] = [cx | pauli.x, cz | pauli.z, cocc | occ]
                break
        else:
            members.append([idx])
            constraints.append([pauli.x, pauli.z, occ])
    bases = []
    for cx, cz, cocc in constraints:
        basis = PauliString(h.n, cx, cz)
        bases.append(
            "".join(basis.letter(q) if (cocc >> q) & 1 else "Z" for q in range(h.n))
        )
    return TpbGrouping(h.n, members, bases)


def to_matrix(h: QubitHamiltonian) -> np.ndarray:
    """Dense Hermitian matrix sum(h_a P_a) + shift * I."""
    if h.n > ORACLE_QUBIT_LIMIT:
        raise ValueError(f"dense oracle limited to {ORACLE_QUBIT_LIMIT} qubits")
    dim = 1 << h.n
    mat = np.zeros((dim, dim), dtype=complex)
    cols = np.arange(dim, dtype=np.int64)
    for coeff, pauli in h.terms:
        rows = cols ^ _state_mask(pauli.x, h.n)
        mat[rows, cols] += coeff * _column_amplitudes(pauli, cols)
    mat[cols, cols] += h.identity_shift
    return mat


def ground_energy(h: QubitHamiltonian) -> float:
    """Minimum eigenvalue of the dense matrix."""
    return float(np.linalg.eigvalsh(h.matrix())[0])


def pauli_expectation(rho: np.ndarray, pauli: PauliString) -> float:
    """tr(rho P) for a density matrix in the big-endian basis."""
    dim = 1 << pauli.n
    cols = np.arange(dim, dtype=np.int64)
    rows = cols ^ _state_mask(pauli.x, pauli.n)
    amps = _column_amplitudes(pauli, cols)
    return float(np.real(np.sum(rho[cols, rows] * amps)))
