"""Second-quantized fermionic Hamiltonians and their qubit encodings.

The pipeline implemented here: ingest one- and two-body integrals, rotate to
the basis where the one-body matrix is diagonal, freeze filled core modes
into effective one-body and scalar terms, map the remaining modes to qubits
through one of three binary encodings, and remove the two spin-parity
symmetry qubits.

Conventions:

* Mode layout is spin-up modes 0..M/2-1 followed by spin-down modes.
* Two-body tensor u is in chemists' notation: the Hamiltonian term is
  ``0.5 * u[a, b, c, d] * adag_a adag_c a_d a_b``.
* In Fock-space matrices mode 0 is the leftmost (most significant) bit,
  matching the qubit ordering of the Pauli layer.
"""

from __future__ import annotations

import re
import warnings
from dataclasses import dataclass

import numpy as np

from .pauli import PauliString, QubitHamiltonian, multiply

__all__ = [
    "FermionHamiltonian",
    "EncodingScheme",
    "SymmetrySector",
    "JORDAN_WIGNER",
    "PARITY",
    "BINARY_TREE",
    "load_integrals",
    "bogoliubov_diagonalize",
    "freeze_core",
    "encode",
    "sector_from_electron_count",
    "taper",
]

SYMMETRY_TOL = 1e-10
FILE_CONFLICT_TOL = 1e-8
HERMITICITY_TOL = 1e-10

_ENCODING_KINDS = ("jordan_wigner", "parity", "binary_tree")


@dataclass(frozen=True)
class EncodingScheme:
    """Choice of fermion-to-qubit binary encoding."""

    kind: str

    def __post_init__(self):
        if self.kind not in _ENCODING_KINDS:
            raise ValueError(f"unknown encoding {self.kind!r}; use one of {_ENCODING_KINDS}")


JORDAN_WIGNER = EncodingScheme("jordan_wigner")
PARITY = EncodingScheme("parity")
BINARY_TREE = EncodingScheme("binary_tree")


@dataclass(frozen=True, eq=False)
class FermionHamiltonian:
    """H = sum t[p,q] adag_p a_q + 0.5 sum u[a,b,c,d] adag_a adag_c a_d a_b + shift.

    ``electron_count`` is bookkeeping carried from the integral file header;
    it is None for hand-built Hamiltonians. Spin-dependent operations
    (dressing, freezing, tapering) require an even mode count; raw
    construction does not, so single-mode toy Hamiltonians stay encodable.
    """

    n_modes: int
    one_body: np.ndarray
    two_body: np.ndarray
    shift: float = 0.0
    electron_count: int | None = None

    def __post_init__(self):
        m = self.n_modes
        if m < 1:
            raise ValueError("need at least one mode")
        t = np.array(self.one_body, dtype=float)
        u = np.array(self.two_body, dtype=float)
        if t.shape != (m, m):
            raise ValueError(f"one-body matrix must be {m}x{m}")
        if u.shape != (m, m, m, m):
            raise ValueError(f"two-body tensor must be rank-4 with side {m}")
        if np.max(np.abs(t - t.T)) > SYMMETRY_TOL:
            raise ValueError("one-body matrix is not symmetric")
        for axes in ((1, 0, 2, 3), (0, 1, 3, 2), (2, 3, 0, 1)):
            if np.max(np.abs(u - u.transpose(axes))) > SYMMETRY_TOL:
                raise ValueError("two-body tensor violates chemists'-notation symmetry")
        t.setflags(write=False)
        u.setflags(write=False)
        object.__setattr__(self, "one_body", t)
        object.__setattr__(self, "two_body", u)
        object.__setattr__(self, "shift", float(self.shift))

    def _require_even(self, what: str) -> int:
        if self.n_modes % 2:
            raise ValueError(f"{what} requires an even mode count (spin pairing)")
        return self.n_modes // 2


_HEADER_FIELDS = {
    "norb": re.compile(r"\bNORB\s*=\s*(\d+)", re.IGNORECASE),
    "nelec": re.compile(r"\bNELEC\s*=\s*(\d+)", re.IGNORECASE),
    "ms2": re.compile(r"\bMS2\s*=\s*(-?\d+)", re.IGNORECASE),
}


def load_integrals(source) -> FermionHamiltonian:
    """Read a plain-text integral file.

    Format: header line ``&FCI NORB=<n> NELEC=<m> MS2=<s>`` where NORB counts
    spin-orbitals, then one entry per line, ``value i j k l`` with 1-indexed
    chemists'-notation indices. ``i j 0 0`` is a one-body entry, ``0 0 0 0``
    the scalar shift, anything else two-body. Symmetry-partner entries are
    mirrored automatically; partners that disagree beyond 1e-8 are rejected.
    """
    with open(source, encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    header = None
    body_start = 0
    for idx, raw in enumerate(lines):
        stripped = raw.strip()
        if not stripped or stripped.startswith("#"):
            continue
        header = stripped
        body_start = idx + 1
        break
    if header is None or not header.upper().startswith("&FCI"):
        raise ValueError("missing &FCI header line")
    parsed = {}
    for key, pattern in _HEADER_FIELDS.items():
        match = pattern.search(header)
        if match is None:
            raise ValueError(f"header missing {key.upper()}=")
        parsed[key] = int(match.group(1))
    m = parsed["norb"]
    if m < 2:
        raise ValueError("NORB must be at least 2")
    if m % 2:
        raise ValueError("NORB counts spin-orbitals and must be even")

    t = np.zeros((m, m))
    t_set = np.zeros((m, m), dtype=bool)
    u = np.zeros((m, m, m, m))
    u_set = np.zeros((m, m, m, m), dtype=bool)
    shift = 0.0

    def assign_one_body(i, j, value, lineno):
        for p, q in ((i, j), (j, i)):
            if t_set[p, q] and abs(t[p, q] - value) > FILE_CONFLICT_TOL:
                raise ValueError(
                    f"line {lineno}: one-body entry ({p + 1},{q + 1}) conflicts "
                    f"with its symmetry partner"
                )
            t[p, q] = value
            t_set[p, q] = True

    def assign_two_body(i, j, k, l, value, lineno):
        partners = (
            (i, j, k, l), (j, i, k, l), (i, j, l, k), (j, i, l, k),
            (k, l, i, j), (l, k, i, j), (k, l, j, i), (l, k, j, i),
        )
        for idx4 in partners:
            if u_set[idx4] and abs(u[idx4] - value) > FILE_CONFLICT_TOL:
                raise ValueError(
                    f"line {lineno}: two-body entry {tuple(x + 1 for x in idx4)} "
                    f"conflicts with its symmetry partner"
                )
            u[idx4] = value
            u_set[idx4] = True

    for lineno, raw in enumerate(lines[body_start:], start=body_start + 1):
        stripped = raw.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if stripped in ("/", "&END") or stripped.upper() == "&END":
            continue
        fields = stripped.split()
        if len(fields) != 5:
            raise ValueError(f"line {lineno}: expected `value i j k l`")
        try:
            value = float(fields[0])
            i, j, k, l = (int(f) for f in fields[1:])
        except ValueError:
            raise ValueError(f"line {lineno}: malformed entry") from None
        if min(i, j, k, l) < 0 or max(i, j, k, l) > m:
            raise ValueError(f"line {lineno}: orbital index out of range")
        if i == j == k == l == 0:
            shift += value
        elif k == 0 and l == 0 and i > 0 and j > 0:
            assign_one_body(i - 1, j - 1, value, lineno)
        elif min(i, j, k, l) > 0:
            assign_two_body(i - 1, j - 1, k - 1, l - 1, value, lineno)
        else:
            raise ValueError(f"line {lineno}: mixed zero and nonzero indices")

    return FermionHamiltonian(m, t, u, shift, electron_count=parsed["nelec"])


def bogoliubov_diagonalize(h: FermionHamiltonian):
    """Rotate to the eigenbasis of the one-body matrix, per spin block.

    Returns ``(U, omega, dressed)`` with U orthogonal and block-diagonal in
    spin, omega the one-body eigenvalues sorted ascending within each block,
    and the dressed Hamiltonian carrying t' = diag(omega) and u transformed
    on all four indices. Eigenvector signs are fixed so the largest-magnitude
    component of each column is positive.
    """
    half = h._require_even("bogoliubov_diagonalize")
    m = h.n_modes
    u_rot = np.zeros((m, m))
    omega = np.zeros(m)
    for block in (slice(0, half), slice(half, m)):
        vals, vecs = np.linalg.eigh(h.one_body[block, block])
        for col in range(vecs.shape[1]):
            lead = np.argmax(np.abs(vecs[:, col]))
            if vecs[lead, col] < 0:
                vecs[:, col] = -vecs[:, col]
        u_rot[block, block] = vecs
        omega[block] = vals
    two = np.einsum(
        "abcd,ap,bq,cr,ds->pqrs", h.two_body, u_rot, u_rot, u_rot, u_rot,
        optimize=True,
    )
    dressed = FermionHamiltonian(
        m, np.diag(omega), two, h.shift, electron_count=h.electron_count
    )
    return u_rot, omega, dressed


def freeze_core(h: FermionHamiltonian, frozen) -> FermionHamiltonian:
    """Project onto the subspace where the frozen modes stay filled.

    Requires a dressed (diagonal one-body) Hamiltonian and a spin-paired
    frozen set. Two-body terms whose frozen indices pair up as number
    operators become effective one-body terms or scalar shifts; terms that
    move charge into or out of the core vanish on the projected block and
    are dropped.
    """
    half = h._require_even("freeze_core")
    m = h.n_modes
    frozen = frozenset(int(f) for f in frozen)
    if not frozen:
        return h
    if any(f < 0 or f >= m for f in frozen):
        raise ValueError("frozen mode index out of range")
    for f in frozen:
        partner = f + half if f < half else f - half
        if partner not in frozen:
            raise ValueError("frozen set must contain spin partners together")
    t = h.one_body
    if np.max(np.abs(t - np.diag(np.diag(t)))) > SYMMETRY_TOL:
        raise ValueError("freeze_core requires a dressed (diagonal one-body) basis")
    if h.electron_count is not None and h.electron_count < len(frozen):
        raise ValueError("cannot freeze more modes than there are electrons")

    u = h.two_body
    umax = float(np.max(np.abs(u))) if u.size else 0.0
    for f in sorted(frozen):
        if -t[f, f] <= umax:
            warnings.warn(
                f"frozen mode {f} has one-body energy {t[f, f]:.4g}, not deep "
                f"below the two-body scale {umax:.4g}; the frozen-core "
                f"approximation may be poor",
                stacklevel=2,
            )

    kept = [mode for mode in range(m) if mode not in frozen]
    pos = {mode: i for i, mode in enumerate(kept)}
    k = len(kept)
    new_t = t[np.ix_(kept, kept)].copy()
    new_u = np.zeros((k, k, k, k))
    new_shift = h.shift + float(sum(t[f, f] for f in frozen))

    in_f = np.zeros(m, dtype=bool)
    in_f[list(frozen)] = True
    for a, b, c, d in zip(*np.nonzero(u)):
        val = u[a, b, c, d]
        fa, fb, fc, fd = in_f[a], in_f[b], in_f[c], in_f[d]
        n_frozen = int(fa) + int(fb) + int(fc) + int(fd)
        if n_frozen == 0:
            new_u[pos[a], pos[b], pos[c], pos[d]] = val
        elif n_frozen == 2:
            if fa and fb and a == b:
                new_t[pos[c], pos[d]] += val / 2
            elif fc and fd and c == d:
                new_t[pos[a], pos[b]] += val / 2
            elif fa and fd and a == d:
                new_t[pos[c], pos[b]] -= val / 2
            elif fb and fc and b == c:
                new_t[pos[a], pos[d]] -= val / 2
            # any other frozen pattern moves charge out of the core: dropped
        elif n_frozen == 4:
            if a == b and c == d and a != c:
                new_shift += val / 2
            elif a == d and b == c and a != c:
                new_shift -= val / 2

    electrons = None if h.electron_count is None else h.electron_count - len(frozen)
    return FermionHamiltonian(k, new_t, new_u, new_shift, electron_count=electrons)


def _encoding_matrix(kind: str, m: int) -> np.ndarray:
    if kind == "jordan_wigner":
        return np.eye(m, dtype=np.uint8)
    if kind == "parity":
        return np.tril(np.ones((m, m), dtype=np.uint8))
    if m & (m - 1):
        raise ValueError("binary_tree encoding requires a power-of-2 mode count")
    mat = np.ones((1, 1), dtype=np.uint8)
    while mat.shape[0] < m:
        s = mat.shape[0]
        grown = np.zeros((2 * s, 2 * s), dtype=np.uint8)
        grown[:s, :s] = mat
        grown[s:, s:] = mat
        grown[2 * s - 1, :s] = 1
        mat = grown
    return mat


def _gf2_inverse(a: np.ndarray) -> np.ndarray:
    m = a.shape[0]
    aug = np.concatenate([a.astype(np.uint8) & 1, np.eye(m, dtype=np.uint8)], axis=1)
    for col in range(m):
        pivot = next((r for r in range(col, m) if aug[r, col]), None)
        if pivot is None:
            raise ValueError("encoding matrix is singular over GF(2)")
        if pivot != col:
            aug[[col, pivot]] = aug[[pivot, col]]
        for row in range(m):
            if row != col and aug[row, col]:
                aug[row] ^= aug[col]
    return aug[:, m:]


def _bits(vec) -> int:
    out = 0
    for q, bit in enumerate(vec):
        if bit:
            out |= 1 << q
    return out


def _mode_quadratures(m: int, scheme: EncodingScheme):
    """Per mode j, the Pauli pair (xpart, ypart) with a_j = (xpart + i ypart)/2.

    xpart = X on the update set and on j, Z on the parity set; ypart swaps the
    letter on j to Y and uses the remainder set (parity xor flip) for Z. All
    three encoding matrices are unit lower triangular, so the X and Z supports
    never collide.
    """
    a = _encoding_matrix(scheme.kind, m)
    ainv = _gf2_inverse(a)
    inv_rows = [_bits(ainv[r]) for r in range(m)]
    prefix = 0
    pairs = []
    for j in range(m):
        update = _bits(a[:, j]) & ~(1 << j)
        parity = prefix
        flip = inv_rows[j] & ~(1 << j)
        remainder = parity ^ flip
        xmask = update | (1 << j)
        if xmask & parity or xmask & remainder:
            raise AssertionError("encoding supports overlap; matrix not triangular")
        pairs.append(
            (PauliString(m, xmask, parity), PauliString(m, xmask, remainder | (1 << j)))
        )
        prefix ^= inv_rows[j]
    return pairs


def _expand_product(coeff: complex, factors):
    """Multiply out a product of two-term operator sums, phases kept exact."""
    acc = [(coeff, None)]
    for factor in factors:
        nxt = []
        for c0, p0 in acc:
            for c1, p1 in factor:
                if p0 is None:
                    nxt.append((c0 * c1, p1))
                else:
                    phase, prod = multiply(p0, p1)
                    nxt.append((c0 * c1 * phase, prod))
        acc = nxt
    return acc


def encode(h: FermionHamiltonian, scheme: EncodingScheme) -> QubitHamiltonian:
    """Map to an M-qubit Hamiltonian with the same Fock-space spectrum."""
    m = h.n_modes
    quads = _mode_quadratures(m, scheme)
    lower = [((0.5 + 0j, xp), (0.5j, yp)) for xp, yp in quads]
    raise_ = [((0.5 + 0j, xp), (-0.5j, yp)) for xp, yp in quads]

    acc: dict[PauliString, complex] = {}

    def add(coeff, factors):
        for c, p in _expand_product(coeff, factors):
            acc[p] = acc.get(p, 0j) + c

    t = h.one_body
    for p in range(m):
        for q in range(m):
            if t[p, q] != 0.0:
                add(complex(t[p, q]), (raise_[p], lower[q]))
    u = h.two_body
    for a, b, c, d in zip(*np.nonzero(u)):
        add(0.5 * complex(u[a, b, c, d]), (raise_[a], raise_[c], lower[d], lower[b]))

    shift = h.shift + acc.pop(PauliString.identity(m), 0j).real
    residue = max((abs(v.imag) for v in acc.values()), default=0.0)
    if residue > HERMITICITY_TOL:
        raise ValueError(f"encoding produced non-Hermitian residue {residue:.3g}")
    return QubitHamiltonian(
        m, [(v.real, p) for p, v in acc.items()], identity_shift=shift
    )


@dataclass(frozen=True)
class SymmetrySector:
    """Eigenvalues of the two spin-parity symmetry operators for m electrons."""

    electron_count: int
    z_half: int
    z_full: int
    degenerate_half: bool


# electron count mod 4 -> (z_half, z_full, degenerate_half);
# degenerate cases default to z_half = +1
_SECTOR_TABLE = {
    0: (1, 1, False),
    1: (1, -1, True),
    2: (-1, 1, False),
    3: (1, -1, True),
}


def sector_from_electron_count(m: int) -> SymmetrySector:
    if m < 0:
        raise ValueError("electron count must be non-negative")
    z_half, z_full, degenerate = _SECTOR_TABLE[m % 4]
    return SymmetrySector(m, z_half, z_full, degenerate)


def _drop_bit(bits: int, pos: int) -> int:
    return (bits & ((1 << pos) - 1)) | ((bits >> (pos + 1)) << pos)


def taper(
    hq: QubitHamiltonian, sector: SymmetrySector, scheme: EncodingScheme
) -> QubitHamiltonian:
    """Substitute sector eigenvalues for the two spin-parity qubits.

    Valid for parity and binary_tree encodings, where qubit M/2-1 stores the
    spin-up parity and qubit M-1 the total parity. Every term must be I or Z
    on those qubits; the factors are then replaced by the sector eigenvalues
    and the two tensor slots deleted.
    """
    if scheme.kind not in ("parity", "binary_tree"):
        raise ValueError("tapering applies to parity or binary_tree encodings")
    m = hq.n
    if m % 2 or m < 4:
        raise ValueError("tapering needs an even qubit count of at least 4")
    q_half = m // 2 - 1
    q_full = m - 1
    sym_mask = (1 << q_half) | (1 << q_full)
    new_terms = []
    for coeff, pauli in hq.terms:
        if pauli.x & sym_mask:
            raise ValueError(
                f"term {pauli.letters} is not diagonal on a symmetry qubit; "
                f"not a spin-parity symmetry"
            )
        factor = 1
        if (pauli.z >> q_half) & 1:
            factor *= sector.z_half
        if (pauli.z >> q_full) & 1:
            factor *= sector.z_full
        x = _drop_bit(_drop_bit(pauli.x, q_full), q_half)
        z = _drop_bit(_drop_bit(pauli.z, q_full), q_half)
        new_terms.append((coeff * factor, PauliString(m - 2, x, z)))
    return QubitHamiltonian(m - 2, new_terms, identity_shift=hq.identity_shift)
