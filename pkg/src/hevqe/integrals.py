"""Minimal-basis Gaussian integrals for small sigma-bonded molecules.

Contracted s/p Gaussians are evaluated with the McMurchie-Davidson scheme,
the atomic orbitals are symmetrically orthogonalized (no self-consistent
field step), and the result is written in the spin-orbital integral file
format that `fermion.load_integrals` reads.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.special

__all__ = [
    "ANGSTROM_TO_BOHR",
    "STO3G_SHELLS",
    "ContractedGaussian",
    "Molecule",
    "boys",
    "sigma_basis",
    "overlap_matrix",
    "kinetic_matrix",
    "nuclear_attraction_matrix",
    "electron_repulsion_tensor",
    "nuclear_repulsion",
    "lowdin_orthogonalizer",
    "orthogonalized_integrals",
    "h2",
    "lih",
    "beh2",
    "write_integral_file",
]

ANGSTROM_TO_BOHR = 1.8897261246257702

_NUCLEAR_CHARGE = {"H": 1, "Li": 3, "Be": 4}

# Contraction data: shared 1s profile, and 2s/2p profiles for the sp shells.
_S1_COEF = (0.15432897, 0.53532814, 0.44463454)
_S2_COEF = (-0.09996723, 0.39951283, 0.70011547)
_P2_COEF = (0.15591627, 0.60768372, 0.39195739)

STO3G_SHELLS = {
    "H": (("1s", (3.42525091, 0.62391373, 0.16885540), _S1_COEF),),
    "Li": (
        ("1s", (16.1195750, 2.9362007, 0.7946505), _S1_COEF),
        ("2sp", (0.6362897, 0.1478601, 0.0480887), (_S2_COEF, _P2_COEF)),
    ),
    "Be": (
        ("1s", (30.1678710, 5.4951153, 1.4871927), _S1_COEF),
        ("2sp", (1.3148331, 0.3055389, 0.0993707), (_S2_COEF, _P2_COEF)),
    ),
}


def _double_factorial(n: int) -> int:
    if n <= 0:
        return 1
    result = 1
    while n > 1:
        result *= n
        n -= 2
    return result


def _primitive_norm(exponent: float, powers) -> float:
    l, m, n = powers
    total = l + m + n
    denom = (
        _double_factorial(2 * l - 1)
        * _double_factorial(2 * m - 1)
        * _double_factorial(2 * n - 1)
    )
    return (2.0 * exponent / math.pi) ** 0.75 * math.sqrt(
        (4.0 * exponent) ** total / denom
    )


@dataclass(frozen=True)
class ContractedGaussian:
    """Fixed linear combination of primitive Cartesian Gaussians."""

    center: tuple[float, float, float]
    powers: tuple[int, int, int]
    exponents: tuple[float, ...]
    coefficients: tuple[float, ...]

    def normalized_coefficients(self) -> tuple[float, ...]:
        scaled = [
            c * _primitive_norm(a, self.powers)
            for c, a in zip(self.coefficients, self.exponents)
        ]
        self_overlap = 0.0
        for ci, ai in zip(scaled, self.exponents):
            for cj, aj in zip(scaled, self.exponents):
                self_overlap += ci * cj * _primitive_overlap(
                    ai, self.center, self.powers, aj, self.center, self.powers
                )
        return tuple(c / math.sqrt(self_overlap) for c in scaled)


@dataclass(frozen=True)
class Molecule:
    """Nuclei with an electron count; coordinates in Bohr."""

    atoms: tuple[tuple[str, tuple[float, float, float]], ...]
    n_electrons: int

    def charges(self):
        return tuple(
            (_NUCLEAR_CHARGE[symbol], center) for symbol, center in self.atoms
        )


def boys(m: int, x: float) -> float:
    """Integral of t^(2m) exp(-x t^2) over [0, 1]."""
    if x < 1e-12:
        return 1.0 / (2 * m + 1) - x / (2 * m + 3)
    half = m + 0.5
    return (
        scipy.special.gamma(half)
        * scipy.special.gammainc(half, x)
        / (2.0 * x**half)
    )


@lru_cache(maxsize=None)
def _hermite_e(i: int, j: int, t: int, q: float, a: float, b: float) -> float:
    """Hermite expansion coefficient for one Cartesian direction."""
    p = a + b
    if t < 0 or t > i + j:
        return 0.0
    if i == j == t == 0:
        return math.exp(-a * b / p * q * q)
    if j == 0:
        return (
            _hermite_e(i - 1, j, t - 1, q, a, b) / (2.0 * p)
            - (b * q / p) * _hermite_e(i - 1, j, t, q, a, b)
            + (t + 1) * _hermite_e(i - 1, j, t + 1, q, a, b)
        )
    return (
        _hermite_e(i, j - 1, t - 1, q, a, b) / (2.0 * p)
        + (a * q / p) * _hermite_e(i, j - 1, t, q, a, b)
        + (t + 1) * _hermite_e(i, j - 1, t + 1, q, a, b)
    )


def _primitive_overlap(a, center_a, powers_a, b, center_b, powers_b) -> float:
    p = a + b
    value = (math.pi / p) ** 1.5
    for axis in range(3):
        value *= _hermite_e(
            powers_a[axis], powers_b[axis], 0,
            center_a[axis] - center_b[axis], a, b,
        )
    return value


def _primitive_kinetic(a, center_a, powers_a, b, center_b, powers_b) -> float:
    l, m, n = powers_b
    total = l + m + n
    value = b * (2 * total + 3) * _primitive_overlap(
        a, center_a, powers_a, b, center_b, powers_b
    )
    for axis, power in enumerate(powers_b):
        raised = list(powers_b)
        raised[axis] += 2
        value -= (
            2.0
            * b
            * b
            * _primitive_overlap(a, center_a, powers_a, b, center_b, tuple(raised))
        )
        if power >= 2:
            lowered = list(powers_b)
            lowered[axis] -= 2
            value -= (
                0.5
                * power
                * (power - 1)
                * _primitive_overlap(
                    a, center_a, powers_a, b, center_b, tuple(lowered)
                )
            )
    return value


def _hermite_coulomb(t, u, v, n, p, delta):
    """Auxiliary Coulomb integral over Hermite Gaussians."""
    if t == u == v == 0:
        dist2 = delta[0] ** 2 + delta[1] ** 2 + delta[2] ** 2
        return (-2.0 * p) ** n * boys(n, p * dist2)
    if t > 0:
        value = delta[0] * _hermite_coulomb(t - 1, u, v, n + 1, p, delta)
        if t > 1:
            value += (t - 1) * _hermite_coulomb(t - 2, u, v, n + 1, p, delta)
        return value
    if u > 0:
        value = delta[1] * _hermite_coulomb(t, u - 1, v, n + 1, p, delta)
        if u > 1:
            value += (u - 1) * _hermite_coulomb(t, u - 2, v, n + 1, p, delta)
        return value
    value = delta[2] * _hermite_coulomb(t, u, v - 1, n + 1, p, delta)
    if v > 1:
        value += (v - 1) * _hermite_coulomb(t, u, v - 2, n + 1, p, delta)
    return value


def _primitive_attraction(a, center_a, powers_a, b, center_b, powers_b, nucleus):
    p = a + b
    composite = tuple(
        (a * center_a[axis] + b * center_b[axis]) / p for axis in range(3)
    )
    delta = tuple(composite[axis] - nucleus[axis] for axis in range(3))
    value = 0.0
    for t in range(powers_a[0] + powers_b[0] + 1):
        ex = _hermite_e(powers_a[0], powers_b[0], t, center_a[0] - center_b[0], a, b)
        for u in range(powers_a[1] + powers_b[1] + 1):
            ey = _hermite_e(
                powers_a[1], powers_b[1], u, center_a[1] - center_b[1], a, b
            )
            for v in range(powers_a[2] + powers_b[2] + 1):
                ez = _hermite_e(
                    powers_a[2], powers_b[2], v, center_a[2] - center_b[2], a, b
                )
                value += ex * ey * ez * _hermite_coulomb(t, u, v, 0, p, delta)
    return 2.0 * math.pi / p * value


def _primitive_repulsion(
    a, center_a, powers_a, b, center_b, powers_b,
    c, center_c, powers_c, d, center_d, powers_d,
):
    p = a + b
    q = c + d
    alpha = p * q / (p + q)
    composite_p = tuple(
        (a * center_a[axis] + b * center_b[axis]) / p for axis in range(3)
    )
    composite_q = tuple(
        (c * center_c[axis] + d * center_d[axis]) / q for axis in range(3)
    )
    delta = tuple(composite_p[axis] - composite_q[axis] for axis in range(3))

    bra = [[], [], []]
    ket = [[], [], []]
    for axis in range(3):
        for t in range(powers_a[axis] + powers_b[axis] + 1):
            bra[axis].append(
                _hermite_e(
                    powers_a[axis], powers_b[axis], t,
                    center_a[axis] - center_b[axis], a, b,
                )
            )
        for t in range(powers_c[axis] + powers_d[axis] + 1):
            ket[axis].append(
                _hermite_e(
                    powers_c[axis], powers_d[axis], t,
                    center_c[axis] - center_d[axis], c, d,
                )
            )

    value = 0.0
    for t, ex in enumerate(bra[0]):
        for u, ey in enumerate(bra[1]):
            for v, ez in enumerate(bra[2]):
                left = ex * ey * ez
                if left == 0.0:
                    continue
                for tp, fx in enumerate(ket[0]):
                    for up, fy in enumerate(ket[1]):
                        for vp, fz in enumerate(ket[2]):
                            right = fx * fy * fz
                            if right == 0.0:
                                continue
                            sign = -1.0 if (tp + up + vp) % 2 else 1.0
                            value += (
                                left
                                * right
                                * sign
                                * _hermite_coulomb(
                                    t + tp, u + up, v + vp, 0, alpha, delta
                                )
                            )
    return (
        2.0
        * math.pi**2.5
        / (p * q * math.sqrt(p + q))
        * value
    )


def _contract_pair(orbital_a, orbital_b, primitive_fn):
    value = 0.0
    for ca, aa in zip(orbital_a.normalized_coefficients(), orbital_a.exponents):
        for cb, ab in zip(orbital_b.normalized_coefficients(), orbital_b.exponents):
            value += ca * cb * primitive_fn(
                aa, orbital_a.center, orbital_a.powers,
                ab, orbital_b.center, orbital_b.powers,
            )
    return value


def overlap_matrix(basis) -> np.ndarray:
    n = len(basis)
    s = np.zeros((n, n))
    for i in range(n):
        for j in range(i + 1):
            s[i, j] = s[j, i] = _contract_pair(basis[i], basis[j], _primitive_overlap)
    return s


def kinetic_matrix(basis) -> np.ndarray:
    n = len(basis)
    t = np.zeros((n, n))
    for i in range(n):
        for j in range(i + 1):
            t[i, j] = t[j, i] = _contract_pair(basis[i], basis[j], _primitive_kinetic)
    return t


def nuclear_attraction_matrix(basis, molecule: Molecule) -> np.ndarray:
    n = len(basis)
    v = np.zeros((n, n))
    for i in range(n):
        for j in range(i + 1):
            total = 0.0
            for charge, nucleus in molecule.charges():

                def attraction(aa, ca, pa, ab, cb, pb, nucleus=nucleus):
                    return _primitive_attraction(aa, ca, pa, ab, cb, pb, nucleus)

                total -= charge * _contract_pair(basis[i], basis[j], attraction)
            v[i, j] = v[j, i] = total
    return v


def electron_repulsion_tensor(basis) -> np.ndarray:
    """Two-electron integrals in chemists' (pq|rs) index order."""
    n = len(basis)
    coefs = [orbital.normalized_coefficients() for orbital in basis]
    eri = np.zeros((n, n, n, n))

    def contracted(p, q, r, s):
        value = 0.0
        op, oq, orr, os = basis[p], basis[q], basis[r], basis[s]
        for cp, ap in zip(coefs[p], op.exponents):
            for cq, aq in zip(coefs[q], oq.exponents):
                for cr, ar in zip(coefs[r], orr.exponents):
                    for cs, as_ in zip(coefs[s], os.exponents):
                        value += cp * cq * cr * cs * _primitive_repulsion(
                            ap, op.center, op.powers,
                            aq, oq.center, oq.powers,
                            ar, orr.center, orr.powers,
                            as_, os.center, os.powers,
                        )
        return value

    for p in range(n):
        for q in range(p + 1):
            for r in range(p + 1):
                s_max = q if r == p else r
                for s in range(s_max + 1):
                    value = contracted(p, q, r, s)
                    for a, b in ((p, q), (q, p)):
                        for c, d in ((r, s), (s, r)):
                            eri[a, b, c, d] = value
                            eri[c, d, a, b] = value
    return eri


def nuclear_repulsion(molecule: Molecule) -> float:
    charges = molecule.charges()
    value = 0.0
    for i in range(len(charges)):
        for j in range(i):
            zi, ri = charges[i]
            zj, rj = charges[j]
            value += zi * zj / math.dist(ri, rj)
    return value


def lowdin_orthogonalizer(s: np.ndarray) -> np.ndarray:
    """Inverse square root of the overlap matrix."""
    eigenvalues, eigenvectors = np.linalg.eigh(s)
    if eigenvalues.min() <= 1e-10:
        raise ValueError("overlap matrix is numerically singular")
    return eigenvectors @ np.diag(eigenvalues**-0.5) @ eigenvectors.T


def sigma_basis(molecule: Molecule, axis: int = 2):
    """Contracted AOs keeping only shells oriented along the bond axis.

    Every atom contributes its s shells; sp shells contribute the 2s
    function and the single p function along `axis`.
    """
    basis = []
    for symbol, center in molecule.atoms:
        for shell in STO3G_SHELLS[symbol]:
            if shell[0] == "1s":
                basis.append(
                    ContractedGaussian(center, (0, 0, 0), shell[1], shell[2])
                )
            else:
                s_coef, p_coef = shell[2]
                basis.append(ContractedGaussian(center, (0, 0, 0), shell[1], s_coef))
                powers = [0, 0, 0]
                powers[axis] = 1
                basis.append(
                    ContractedGaussian(center, tuple(powers), shell[1], p_coef)
                )
    return basis


def orthogonalized_integrals(molecule: Molecule):
    """(one-body matrix, chemists' two-body tensor, scalar shift) in the
    symmetrically orthogonalized sigma-orbital basis."""
    basis = sigma_basis(molecule)
    s = overlap_matrix(basis)
    x = lowdin_orthogonalizer(s)
    core = kinetic_matrix(basis) + nuclear_attraction_matrix(basis, molecule)
    eri = electron_repulsion_tensor(basis)
    core = x.T @ core @ x
    eri = np.einsum("ap,bq,cr,ds,abcd->pqrs", x, x, x, x, eri, optimize=True)
    return core, eri, nuclear_repulsion(molecule)


def h2(distance_angstrom: float) -> Molecule:
    d = distance_angstrom * ANGSTROM_TO_BOHR
    return Molecule((("H", (0.0, 0.0, 0.0)), ("H", (0.0, 0.0, d))), 2)


def lih(distance_angstrom: float) -> Molecule:
    d = distance_angstrom * ANGSTROM_TO_BOHR
    return Molecule((("Li", (0.0, 0.0, 0.0)), ("H", (0.0, 0.0, d))), 4)


def beh2(distance_angstrom: float) -> Molecule:
    d = distance_angstrom * ANGSTROM_TO_BOHR
    return Molecule(
        (
            ("H", (0.0, 0.0, -d)),
            ("Be", (0.0, 0.0, 0.0)),
            ("H", (0.0, 0.0, d)),
        ),
        6,
    )


def write_integral_file(path, molecule: Molecule, threshold: float = 1e-12) -> None:
    """Emit spin-orbital integrals, up block before down block, 1-indexed."""
    core, eri, shift = orthogonalized_integrals(molecule)
    n = core.shape[0]
    lines = [f"&FCI NORB={2 * n} NELEC={molecule.n_electrons} MS2=0"]
    if abs(shift) > threshold:
        lines.append(f"{shift!r} 0 0 0 0")
    for p in range(n):
        for q in range(p + 1):
            value = float(core[p, q])
            if abs(value) <= threshold:
                continue
            lines.append(f"{value!r} {p + 1} {q + 1} 0 0")
            lines.append(f"{value!r} {n + p + 1} {n + q + 1} 0 0")
    for p in range(n):
        for q in range(p + 1):
            pq = p * (p + 1) // 2 + q
            for r in range(p + 1):
                for s in range(r + 1):
                    if r * (r + 1) // 2 + s > pq:
                        continue
                    value = float(eri[p, q, r, s])
                    if abs(value) <= threshold:
                        continue
                    blocks = ((0, 0), (0, n), (n, 0), (n, n))
                    for left, right in blocks:
                        lines.append(
                            f"{value!r} {left + p + 1} {left + q + 1}"
                            f" {right + r + 1} {right + s + 1}"
                        )
    with open(path, "w") as handle:
        handle.write("\n".join(lines) + "\n")
