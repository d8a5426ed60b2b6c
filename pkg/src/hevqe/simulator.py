"""Density-matrix simulation of small qubit registers.

Covers everything the trial-state pipeline needs: Euler rotations, entangler
unitaries generated by a static two-qubit drift Hamiltonian, amplitude
damping / dephasing / depolarizing channels, and finite-shot sampling with
independent per-qubit assignment errors.

State convention matches the Pauli layer: qubit 0 is the leftmost (most
significant) tensor factor, so basis index b has the bit of qubit q at
position n - 1 - q.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.linalg

from .pauli import PauliString

__all__ = [
    "SIM_QUBIT_LIMIT",
    "CR_RATES_MHZ",
    "DensityMatrix",
    "EntanglerSpec",
    "NoiseModel",
    "ReadoutModel",
    "ShotRecord",
    "init_state",
    "euler_unitary",
    "apply_euler",
    "apply_unitary",
    "entangler_unitaries",
    "apply_entangler",
    "apply_thermal_noise",
    "apply_depolarizing",
    "sample_shots",
    "correct_assignment",
    "partial_trace",
    "bloch_vector",
    "concurrence",
]

SIM_QUBIT_LIMIT = 10
HERMITIAN_TOL = 1e-10
TRACE_TOL = 1e-10

# cross-resonance drive strengths from two-qubit Hamiltonian tomography
CR_RATES_MHZ = {
    "ZX": 1.04,
    "ZY": 0.07,
    "ZZ": 0.05,
    "IX": 0.68,
    "IY": 0.12,
    "IZ": 0.02,
}

_ENTANGLER_LABELS = frozenset(CR_RATES_MHZ)


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """Validated 2^n x 2^n density matrix."""

    n_qubits: int
    data: np.ndarray

    def __post_init__(self):
        dim = 1 << self.n_qubits
        data = np.array(self.data, dtype=complex)
        if data.shape != (dim, dim):
            raise ValueError(f"expected a {dim}x{dim} matrix")
        if np.max(np.abs(data - data.conj().T)) > HERMITIAN_TOL:
            raise ValueError("density matrix is not Hermitian")
        if abs(np.trace(data).real - 1.0) > TRACE_TOL:
            raise ValueError("density matrix trace is not 1")
        data.setflags(write=False)
        object.__setattr__(self, "data", data)

    def to_bytes(self) -> bytes:
        """Row-major complex doubles, for debug dumps."""
        return np.ascontiguousarray(self.data, dtype=np.complex128).tobytes()


def init_state(n_qubits: int) -> DensityMatrix:
    """All qubits in |0>."""
    if not 1 <= n_qubits <= SIM_QUBIT_LIMIT:
        raise ValueError(f"qubit count must be in [1, {SIM_QUBIT_LIMIT}]")
    dim = 1 << n_qubits
    data = np.zeros((dim, dim), dtype=complex)
    data[0, 0] = 1.0
    return DensityMatrix(n_qubits, data)


def _embed_one(u2: np.ndarray, qubit: int, n: int) -> np.ndarray:
    left = np.eye(1 << qubit, dtype=complex)
    right = np.eye(1 << (n - 1 - qubit), dtype=complex)
    return np.kron(np.kron(left, u2), right)


def apply_unitary(rho: DensityMatrix, u: np.ndarray) -> DensityMatrix:
    return DensityMatrix(rho.n_qubits, u @ rho.data @ u.conj().T)


def _rot_z(theta: float) -> np.ndarray:
    return np.diag([np.exp(-0.5j * theta), np.exp(0.5j * theta)])


def _rot_x(theta: float) -> np.ndarray:
    c, s = math.cos(theta / 2), math.sin(theta / 2)
    return np.array([[c, -1j * s], [-1j * s, c]])


def euler_unitary(theta1: float, theta2: float, theta3: float) -> np.ndarray:
    """Z(theta1) X(theta2) Z(theta3) as a matrix product; theta3 acts first."""
    return _rot_z(theta1) @ _rot_x(theta2) @ _rot_z(theta3)


def apply_euler(
    rho: DensityMatrix, qubit: int, theta1: float, theta2: float, theta3: float
) -> DensityMatrix:
    if not 0 <= qubit < rho.n_qubits:
        raise ValueError("qubit index out of range")
    u = _embed_one(euler_unitary(theta1, theta2, theta3), qubit, rho.n_qubits)
    return apply_unitary(rho, u)


@dataclass(frozen=True)
class EntanglerSpec:
    """Entangling unitary built from parallel layers of two-qubit drives.

    Each layer is a tuple of directed (control, target) pairs, disjoint in
    qubits; every pair evolves under the same generator, a weighted sum of
    the six drift terms. Strengths are the angles accumulated over the gate
    (2*pi*rate*duration); the layer unitary is exp(-i sum strength/2 * P).
    """

    layers: tuple[tuple[tuple[int, int], ...], ...]
    terms: tuple[tuple[str, float], ...]
    duration: float = 0.0

    def __post_init__(self):
        layers = tuple(tuple((int(c), int(t)) for c, t in layer) for layer in self.layers)
        terms = tuple(sorted((str(k), float(v)) for k, v in dict(self.terms).items()))
        if not terms:
            raise ValueError("entangler needs at least one drift term")
        for label, _ in terms:
            if label not in _ENTANGLER_LABELS:
                raise ValueError(f"unknown drift term {label!r}")
        for layer in layers:
            seen = set()
            for c, t in layer:
                if c == t:
                    raise ValueError("pair must couple two distinct qubits")
                if c in seen or t in seen:
                    raise ValueError("pairs within a layer must be disjoint")
                seen.update((c, t))
        object.__setattr__(self, "layers", layers)
        object.__setattr__(self, "terms", terms)
        object.__setattr__(self, "duration", float(self.duration))

    @classmethod
    def from_rates(cls, layers, rates_hz: dict, duration: float) -> "EntanglerSpec":
        terms = {k: 2.0 * math.pi * v * duration for k, v in rates_hz.items()}
        return cls(tuple(tuple(layer) for layer in layers), tuple(terms.items()), duration)

    @classmethod
    def cr_measured(cls, layers, duration: float = 150e-9) -> "EntanglerSpec":
        rates = {k: v * 1e6 for k, v in CR_RATES_MHZ.items()}
        return cls.from_rates(layers, rates, duration)

    @classmethod
    def ideal_zx(cls, layers, phase: float) -> "EntanglerSpec":
        return cls(tuple(tuple(layer) for layer in layers), (("ZX", float(phase)),))

    @classmethod
    def ideal_zz(cls, layers, phase: float) -> "EntanglerSpec":
        return cls(tuple(tuple(layer) for layer in layers), (("ZZ", float(phase)),))

    def max_qubit(self) -> int:
        return max((max(c, t) for layer in self.layers for c, t in layer), default=-1)


def _pair_pauli(label: str, control: int, target: int, n: int) -> PauliString:
    letters = ["I"] * n
    letters[control] = label[0]
    letters[target] = label[1]
    return PauliString.from_letters("".join(letters))


@lru_cache(maxsize=64)
def entangler_unitaries(spec: EntanglerSpec, n_qubits: int) -> tuple[np.ndarray, ...]:
    """One unitary per layer, by exact matrix exponential of the generator."""
    if spec.max_qubit() >= n_qubits:
        raise ValueError("entangler pair references a qubit outside the register")
    dim = 1 << n_qubits
    out = []
    for layer in spec.layers:
        gen = np.zeros((dim, dim), dtype=complex)
        for control, target in layer:
            for label, strength in spec.terms:
                gen += (strength / 2.0) * _pair_pauli(label, control, target, n_qubits).matrix()
        u = scipy.linalg.expm(-1j * gen)
        u.setflags(write=False)
        out.append(u)
    return tuple(out)


def apply_entangler(rho: DensityMatrix, spec: EntanglerSpec) -> DensityMatrix:
    for u in entangler_unitaries(spec, rho.n_qubits):
        rho = apply_unitary(rho, u)
    return rho


@dataclass(frozen=True)
class NoiseModel:
    """Noise applied between gate layers.

    kind "thermal" holds relaxation/dephasing times plus the step durations
    after single-qubit layers and after entanglers; kind "depolarizing" holds
    the per-gate strength xi; kind "none" is noiseless.
    """

    kind: str = "none"
    t1: float | None = None
    t2_star: float | None = None
    tau_single: float = 100e-9
    tau_entangler: float = 450e-9
    xi: float | None = None

    def __post_init__(self):
        if self.kind not in ("none", "thermal", "depolarizing"):
            raise ValueError(f"unknown noise kind {self.kind!r}")
        if self.kind == "thermal":
            if self.t1 is None or self.t2_star is None:
                raise ValueError("thermal noise needs t1 and t2_star")
            if self.t1 <= 0 or self.t2_star <= 0:
                raise ValueError("relaxation times must be positive")
            if self.t2_star > 2.0 * self.t1 + 1e-15:
                raise ValueError("t2_star cannot exceed 2*t1")
        if self.kind == "depolarizing":
            if self.xi is None or not 0.0 <= self.xi <= 1.0:
                raise ValueError("depolarizing strength must lie in [0, 1]")

    @classmethod
    def none(cls) -> "NoiseModel":
        return cls("none")

    @classmethod
    def thermal(cls, t1, t2_star, tau_single=100e-9, tau_entangler=450e-9):
        return cls("thermal", t1=t1, t2_star=t2_star, tau_single=tau_single,
                   tau_entangler=tau_entangler)

    @classmethod
    def depolarizing(cls, xi: float) -> "NoiseModel":
        return cls("depolarizing", xi=xi)

    @property
    def t_phi(self) -> float:
        """Pure dephasing time 2*T2**T1 / (2*T1 - T2*)."""
        if math.isinf(self.t2_star):
            return math.inf
        denom = 2.0 * self.t1 - self.t2_star
        if denom <= 0:
            return math.inf
        return 2.0 * self.t2_star * self.t1 / denom


def _kraus_apply_per_qubit(rho: DensityMatrix, kraus: list[np.ndarray]) -> DensityMatrix:
    n = rho.n_qubits
    data = rho.data
    for q in range(n):
        ops = [_embed_one(k, q, n) for k in kraus]
        data = sum(op @ data @ op.conj().T for op in ops)
    return DensityMatrix(n, data)


def thermal_kraus(tau: float, t1: float, t_phi: float):
    """Amplitude-damping then dephasing Kraus pairs for a step of length tau."""
    decay = math.exp(-tau / t1) if tau != math.inf else 0.0
    amp = [
        np.array([[1.0, 0.0], [0.0, math.sqrt(decay)]], dtype=complex),
        np.array([[0.0, math.sqrt(1.0 - decay)], [0.0, 0.0]], dtype=complex),
    ]
    lam = math.exp(-tau / t_phi) if tau != math.inf else 0.0
    if t_phi == math.inf:
        lam = 1.0
    deph = [
        np.array([[1.0, 0.0], [0.0, lam]], dtype=complex),
        np.array([[0.0, 0.0], [0.0, math.sqrt(max(0.0, 1.0 - lam * lam))]], dtype=complex),
    ]
    return amp, deph


def apply_thermal_noise(rho: DensityMatrix, tau: float, model: NoiseModel) -> DensityMatrix:
    if model.kind != "thermal":
        raise ValueError("apply_thermal_noise needs a thermal noise model")
    if tau == 0.0:
        return rho
    amp, deph = thermal_kraus(tau, model.t1, model.t_phi)
    rho = _kraus_apply_per_qubit(rho, amp)
    return _kraus_apply_per_qubit(rho, deph)


def apply_depolarizing(rho: DensityMatrix, sites, xi: float) -> DensityMatrix:
    """(1-xi) rho + xi/(4^k - 1) sum over non-identity Pauli conjugations."""
    if not 0.0 <= xi <= 1.0:
        raise ValueError("depolarizing strength must lie in [0, 1]")
    sites = tuple(int(s) for s in sites)
    if len(sites) not in (1, 2) or len(set(sites)) != len(sites):
        raise ValueError("depolarizing acts on one or two distinct qubits")
    if any(not 0 <= s < rho.n_qubits for s in sites):
        raise ValueError("site index out of range")
    if xi == 0.0:
        return rho
    n = rho.n_qubits
    letter_sets = ["X", "Y", "Z"] if len(sites) == 1 else [
        a + b for a in "IXYZ" for b in "IXYZ" if a + b != "II"
    ]
    mixed = np.zeros_like(rho.data)
    for letters in letter_sets:
        full = ["I"] * n
        for s, letter in zip(sites, letters):
            full[s] = letter
        p = PauliString.from_letters("".join(full)).matrix()
        mixed += p @ rho.data @ p.conj().T
    weight = xi / (4 ** len(sites) - 1)
    return DensityMatrix(n, (1.0 - xi) * rho.data + weight * mixed)


@dataclass(frozen=True)
class ReadoutModel:
    """Independent per-qubit deformed measurement.

    The observed one-qubit operator is Zhat = (1 - 2*eta0) I + 2*eta1 Z,
    giving flip probabilities p(1|0) = eta0 - eta1 and p(0|1) = 1 - eta0 - eta1.
    Ideal readout is eta0 = eta1 = 1/2.
    """

    eta0: tuple[float, ...]
    eta1: tuple[float, ...]

    def __post_init__(self):
        eta0 = tuple(float(v) for v in self.eta0)
        eta1 = tuple(float(v) for v in self.eta1)
        if len(eta0) != len(eta1) or not eta0:
            raise ValueError("eta0 and eta1 must be equal-length and nonempty")
        for v0, v1 in zip(eta0, eta1):
            if not (0.0 <= v1 <= 0.5 and 0.0 <= v0 <= 0.5 + 1e-12):
                raise ValueError("eta parameters must lie in [0, 1/2]")
            if v0 - v1 < -1e-12:
                raise ValueError("eta0 must be at least eta1 (non-negative flips)")
        object.__setattr__(self, "eta0", eta0)
        object.__setattr__(self, "eta1", eta1)

    @classmethod
    def ideal(cls, n_qubits: int) -> "ReadoutModel":
        return cls((0.5,) * n_qubits, (0.5,) * n_qubits)

    @classmethod
    def symmetric(cls, n_qubits: int, epsilon_r: float) -> "ReadoutModel":
        if not 0.0 <= epsilon_r < 0.5:
            raise ValueError("assignment error must lie in [0, 1/2)")
        return cls((0.5,) * n_qubits, (0.5 - epsilon_r,) * n_qubits)

    @property
    def n_qubits(self) -> int:
        return len(self.eta0)

    def z_shift(self, qubit: int) -> float:
        return 1.0 - 2.0 * self.eta0[qubit]

    def contrast(self, qubit: int) -> float:
        return 2.0 * self.eta1[qubit]

    def confusion(self, qubit: int) -> np.ndarray:
        """Column-stochastic matrix C[observed, true]."""
        e0, e1 = self.eta0[qubit], self.eta1[qubit]
        return np.array([[1.0 - e0 + e1, 1.0 - e0 - e1], [e0 - e1, e0 + e1]])


@dataclass(frozen=True, eq=False)
class ShotRecord:
    """S sampled bitstrings stored as basis indices, plus the basis used."""

    n_qubits: int
    basis: str
    outcomes: np.ndarray

    @property
    def shots(self) -> int:
        return len(self.outcomes)

    def bit(self, qubit: int) -> np.ndarray:
        return (self.outcomes >> (self.n_qubits - 1 - qubit)) & 1

    def hat_z(self, qubit: int) -> np.ndarray:
        """Per-shot raw Z outcomes (+1 for bit 0, -1 for bit 1)."""
        return 1.0 - 2.0 * self.bit(qubit)


_POST_ROTATIONS = {
    "Z": np.eye(2, dtype=complex),
    # maps the +1 eigenstate of the measured letter to |0>
    "X": (np.eye(2) + 1j * np.array([[0, -1j], [1j, 0]])) / math.sqrt(2),
    "Y": (np.eye(2) - 1j * np.array([[0, 1], [1, 0]])) / math.sqrt(2),
}


def sample_shots(
    rho: DensityMatrix, basis: str, shots: int, readout: ReadoutModel, rng
) -> ShotRecord:
    """Rotate into the basis, add per-qubit assignment errors, draw outcomes."""
    n = rho.n_qubits
    if len(basis) != n or any(b not in "XYZ" for b in basis):
        raise ValueError("basis must give X, Y or Z for every qubit")
    if readout.n_qubits != n:
        raise ValueError("readout model size mismatch")
    if shots < 1:
        raise ValueError("need at least one shot")
    rotated = rho
    for q, letter in enumerate(basis):
        if letter != "Z":
            rotated = apply_unitary(rotated, _embed_one(_POST_ROTATIONS[letter], q, n))
    probs = np.real(np.diag(rotated.data)).copy()
    confusion = np.array([[1.0]])
    for q in range(n):
        confusion = np.kron(confusion, readout.confusion(q))
    probs = confusion @ probs
    probs = np.clip(probs, 0.0, None)
    probs /= probs.sum()
    outcomes = rng.choice(len(probs), size=shots, p=probs).astype(np.int64)
    return ShotRecord(n, basis, outcomes)


def correct_assignment(raw_expectations: dict, readout: ReadoutModel) -> dict:
    """Affine readout correction of per-string expectation estimates.

    Each estimate is divided by the product of contrasts over the string's
    support, after subtracting the product of the per-qubit shifts. Exact for
    symmetric errors (shift zero) and for weight-1 strings; the sampling
    estimator corrects shot-by-shot instead, which is unbiased in general.
    """
    corrected = {}
    for pauli, value in raw_expectations.items():
        shift = 1.0
        contrast = 1.0
        for q in pauli.support:
            c = readout.contrast(q)
            if c <= 0.0:
                raise ValueError(f"readout contrast vanishes on qubit {q}")
            contrast *= c
            shift *= readout.z_shift(q)
        if pauli.weight == 0:
            corrected[pauli] = value
        else:
            corrected[pauli] = (value - shift) / contrast
    return corrected


def partial_trace(rho: DensityMatrix, keep) -> DensityMatrix:
    """Reduced state on the kept qubits, in their original order."""
    keep = sorted(set(int(q) for q in keep))
    n = rho.n_qubits
    if any(not 0 <= q < n for q in keep) or not keep:
        raise ValueError("kept qubits out of range")
    tensor = rho.data.reshape((2,) * (2 * n))
    drop = [q for q in range(n) if q not in keep]
    for count, q in enumerate(drop):
        axis = q - sum(1 for d in drop[:count] if d < q)
        live = tensor.ndim // 2
        tensor = np.trace(tensor, axis1=axis, axis2=axis + live)
    dim = 1 << len(keep)
    return DensityMatrix(len(keep), tensor.reshape((dim, dim)))


def bloch_vector(rho: DensityMatrix) -> np.ndarray:
    """(<X>, <Y>, <Z>) of a single-qubit state."""
    if rho.n_qubits != 1:
        raise ValueError("bloch_vector expects a single-qubit state")
    return np.array(
        [
            float(np.real(np.trace(rho.data @ PauliString.from_letters(l).matrix())))
            for l in "XYZ"
        ]
    )


def concurrence(rho: DensityMatrix) -> float:
    """Wootters concurrence of a two-qubit state."""
    if rho.n_qubits != 2:
        raise ValueError("concurrence expects a two-qubit state")
    yy = PauliString.from_letters("YY").matrix()
    rho_tilde = yy @ rho.data.conj() @ yy
    vals = np.linalg.eigvals(rho.data @ rho_tilde)
    roots = np.sort(np.sqrt(np.clip(vals.real, 0.0, None)))
    return float(max(0.0, roots[-1] - roots[-2] - roots[-3] - roots[-4]))
