"""Exact and finite-shot energy estimation over TPB-grouped Hamiltonians.

A sampled estimate draws one joint shot record per TPB set, reads every term
of the set from that record, and accounts for the within-set covariances that
sharing a record introduces. Readout errors are corrected per shot and per
qubit, which keeps the corrected products unbiased under the same model that
generated the shots.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .pauli import PauliString, QubitHamiltonian, TpbGrouping, group_tpb
from .simulator import DensityMatrix, ReadoutModel, sample_shots

__all__ = [
    "EnergyEstimate",
    "exact_energy",
    "sampled_energy",
    "error_bound",
    "variance_comparison_experiment",
]


@dataclass(frozen=True)
class EnergyEstimate:
    """Finite-shot energy value with its statistical error.

    term_means is aligned with the source Hamiltonian's term order; value
    already includes the identity shift.
    """

    value: float
    std_error: float
    shots_per_set: int
    grouping: TpbGrouping
    term_means: tuple[float, ...]

    def __post_init__(self):
        if self.std_error < 0.0:
            raise ValueError("std_error must be non-negative")


def exact_energy(rho: DensityMatrix, h: QubitHamiltonian) -> float:
    """tr(rho H) through the Hamiltonian's cached dense matrix."""
    if rho.data.shape[0] != 2**h.n:
        raise ValueError("state and Hamiltonian dimensions differ")
    # H is Hermitian, so vdot(H, rho) = tr(H rho)
    return float(np.real(np.vdot(h.matrix(), rho.data)))


def _corrected_products(record, paulis, readout: ReadoutModel) -> np.ndarray:
    """Per-shot corrected +-1 products, one row per Pauli term."""
    out = np.empty((len(paulis), record.shots))
    for row, pauli in enumerate(paulis):
        vals = np.ones(record.shots)
        for q in pauli.support:
            contrast = readout.contrast(q)
            if contrast <= 0.0:
                raise ValueError(f"readout contrast vanishes on qubit {q}")
            vals = vals * (record.hat_z(q) - readout.z_shift(q)) / contrast
        out[row] = vals
    return out


def sampled_energy(
    rho: DensityMatrix,
    h: QubitHamiltonian,
    grouping: TpbGrouping | None = None,
    shots: int = 1000,
    readout: ReadoutModel | None = None,
    rng: np.random.Generator | None = None,
) -> EnergyEstimate:
    """Estimate tr(rho H) from `shots` measurements per TPB set."""
    if shots < 2:
        raise ValueError("need at least two shots per set to estimate covariances")
    if grouping is None:
        grouping = group_tpb(h)
    if readout is None:
        readout = ReadoutModel.ideal(h.n)
    if rng is None:
        rng = np.random.default_rng()

    coeffs = h.coefficients()
    term_means = np.zeros(h.term_count)
    variance = 0.0
    for indices, basis in zip(grouping.sets, grouping.bases):
        record = sample_shots(rho, basis, shots, readout, rng)
        xs = _corrected_products(record, [h.terms[i][1] for i in indices], readout)
        term_means[list(indices)] = xs.mean(axis=1)
        hvec = coeffs[list(indices)]
        cov = np.atleast_2d(np.cov(xs, ddof=1))
        variance += float(hvec @ cov @ hvec)

    value = float(coeffs @ term_means) + h.identity_shift
    std_error = math.sqrt(max(variance, 0.0) / shots)
    return EnergyEstimate(value, std_error, shots, grouping, tuple(term_means))


def error_bound(
    h: QubitHamiltonian, grouping: TpbGrouping, shots: int
) -> tuple[float, float]:
    """Analytic upper bounds on the error of the mean at equal total budget.

    Returns (ungrouped, grouped): sqrt(T h_max^2 / S) for term-by-term
    sampling and sqrt(A h_max^2 (T + A s_max^2) / (T S)) for one record per
    TPB set at the same total number of measurements. These are worst-case
    bounds, not estimates.
    """
    if shots < 1:
        raise ValueError("shots must be positive")
    if h.term_count == 0:
        return 0.0, 0.0
    t_count = h.term_count
    a_count = grouping.set_count
    h_max = float(np.max(np.abs(h.coefficients())))
    s_max = max(len(s) for s in grouping.sets)
    ungrouped = math.sqrt(t_count * h_max**2 / shots)
    grouped = math.sqrt(
        a_count * h_max**2 * (t_count + a_count * s_max**2) / (t_count * shots)
    )
    return ungrouped, grouped


def _term_basis(pauli: PauliString, n: int) -> str:
    letters = [pauli.letter(q) for q in range(n)]
    return "".join("Z" if letter == "I" else letter for letter in letters)


def variance_comparison_experiment(
    h: QubitHamiltonian,
    n_states: int,
    shots: int,
    rng: np.random.Generator,
    readout: ReadoutModel | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Paired grouped/ungrouped empirical variances of the mean energy.

    For every random pure state the grouped protocol takes `shots` joint
    samples per TPB set; the ungrouped one samples each term individually
    with shots*A/T samples so both spend the same total budget.
    """
    if n_states < 1:
        raise ValueError("need at least one state")
    grouping = group_tpb(h)
    if readout is None:
        readout = ReadoutModel.ideal(h.n)
    per_term = max(2, round(shots * grouping.set_count / h.term_count))
    dim = 2**h.n
    grouped = np.empty(n_states)
    ungrouped = np.empty(n_states)
    for k in range(n_states):
        vec = rng.normal(size=dim) + 1j * rng.normal(size=dim)
        vec /= np.linalg.norm(vec)
        rho = DensityMatrix(h.n, np.outer(vec, vec.conj()))
        estimate = sampled_energy(rho, h, grouping, shots, readout, rng)
        grouped[k] = estimate.std_error**2
        total = 0.0
        for coeff, pauli in h.terms:
            record = sample_shots(rho, _term_basis(pauli, h.n), per_term, readout, rng)
            vals = _corrected_products(record, [pauli], readout)[0]
            total += coeff**2 * float(np.var(vals, ddof=1)) / per_term
        ungrouped[k] = total
    return grouped, ungrouped
