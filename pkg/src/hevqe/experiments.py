"""Scripted studies: spin-model pipelines, molecular sweeps, scaling curves.

Every study decomposes into independent (point, run) tasks seeded by hashing
(master seed, scenario, point, run), so results do not depend on thread
count or execution order.
"""

from __future__ import annotations

import hashlib
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .ansatz import AnsatzConfig, build_config, initial_parameters, prepare_state
from .estimator import exact_energy, sampled_energy
from .fermion import (
    EncodingScheme,
    PARITY,
    bogoliubov_diagonalize,
    encode,
    freeze_core,
    load_integrals,
    sector_from_electron_count,
    taper,
)
from .pauli import (
    PauliString,
    QubitHamiltonian,
    ground_energy,
    group_tpb,
    pauli_expectation,
)
from .simulator import (
    DensityMatrix,
    EntanglerSpec,
    NoiseModel,
    ReadoutModel,
    apply_entangler,
    apply_euler,
    concurrence,
    init_state,
)
from .spsa import C_NOISELESS, C_NOISY, OptimizationTrace, SpsaConfig
from .spsa import run as spsa_run

__all__ = [
    "CHEMICAL_ACCURACY",
    "PERCENTILES",
    "HeisenbergConfig",
    "heisenberg_hamiltonian",
    "magnetization",
    "per_qubit_magnetization",
    "SamplingConfig",
    "PointResult",
    "ExperimentReport",
    "DepthSearchResult",
    "PhaseStudyResult",
    "task_seed",
    "build_objectives",
    "surrogate_noise_scale",
    "single_run",
    "vqe_pipeline",
    "escalating_pipeline",
    "critical_depth_search",
    "entangler_phase_study",
    "zx_phase_concurrence",
    "noise_scaling_study",
    "sampling_scaling_study",
    "molecular_hamiltonian",
    "dissociation_sweep",
    "heisenberg_sweep",
]

CHEMICAL_ACCURACY = 0.0016
PERCENTILES = (5, 25, 50, 75, 95)

# 2x2 square lattice as a 4-cycle
DEFAULT_HEISENBERG_EDGES = ((0, 1), (1, 3), (3, 2), (2, 0))


@dataclass(frozen=True)
class HeisenbergConfig:
    """Exchange model J * sum_edges (XX + YY + ZZ) + B * sum_i Z_i."""

    j: float
    b: float
    n_qubits: int = 4
    edges: tuple[tuple[int, int], ...] = DEFAULT_HEISENBERG_EDGES

    def __post_init__(self):
        seen = set()
        for a, b in self.edges:
            if not (0 <= a < self.n_qubits and 0 <= b < self.n_qubits) or a == b:
                raise ValueError(f"edge ({a}, {b}) does not fit the register")
            key = (min(a, b), max(a, b))
            if key in seen:
                raise ValueError(f"duplicate edge ({a}, {b})")
            seen.add(key)


def _embedded(letter: str, qubits: tuple[int, ...], n: int) -> PauliString:
    letters = ["I"] * n
    for q in qubits:
        letters[q] = letter
    return PauliString.from_letters("".join(letters))


def heisenberg_hamiltonian(config: HeisenbergConfig) -> QubitHamiltonian:
    terms = []
    for edge in config.edges:
        for letter in "XYZ":
            terms.append((config.j, _embedded(letter, edge, config.n_qubits)))
    for q in range(config.n_qubits):
        terms.append((config.b, _embedded("Z", (q,), config.n_qubits)))
    return QubitHamiltonian(config.n_qubits, terms)


def per_qubit_magnetization(rho: DensityMatrix) -> tuple[float, ...]:
    return tuple(
        pauli_expectation(rho.data, _embedded("Z", (q,), rho.n_qubits))
        for q in range(rho.n_qubits)
    )


def magnetization(rho: DensityMatrix) -> float:
    """Intensive average (1/N) sum_i <Z_i>."""
    values = per_qubit_magnetization(rho)
    return float(sum(values) / len(values))


@dataclass(frozen=True)
class SamplingConfig:
    """How objective values are produced from prepared states.

    kind "exact" evaluates tr(rho H); "sampled" draws finite shot records per
    TPB set; "surrogate" adds Gaussian noise to exact energies with the std
    measured from grouped sampling on random states at reference_shots and
    scaled by sqrt(reference_shots / shots).
    """

    kind: str = "exact"
    shots: int = 1000
    final_shots: int = 10**5
    eps_r: float = 0.0
    surrogate_states: int = 100
    reference_shots: int = 1000

    def __post_init__(self):
        if self.kind not in ("exact", "sampled", "surrogate"):
            raise ValueError(f"unknown sampling kind {self.kind!r}")
        if self.shots < 2 or self.final_shots < 2:
            raise ValueError("shot counts must be at least 2")
        if not 0.0 <= self.eps_r < 0.5:
            raise ValueError("readout error must lie in [0, 0.5)")
        if self.surrogate_states < 1 or self.reference_shots < 2:
            raise ValueError("surrogate protocol needs states and reference shots")


def task_seed(master_seed: int, scenario: str, point, run: int) -> int:
    """Stable 64-bit per-task seed from the run coordinates."""
    text = f"{master_seed}:{scenario}:{point}:{run}"
    digest = hashlib.sha256(text.encode()).digest()
    return int.from_bytes(digest[:8], "big")


def surrogate_noise_scale(
    h: QubitHamiltonian, n_states: int, shots: int, rng
) -> float:
    """Mean grouped std_error over random pure states at the given shots."""
    grouping = group_tpb(h)
    readout = ReadoutModel.ideal(h.n)
    dim = 2**h.n
    total = 0.0
    for _ in range(n_states):
        vec = rng.normal(size=dim) + 1j * rng.normal(size=dim)
        vec /= np.linalg.norm(vec)
        rho = DensityMatrix(h.n, np.outer(vec, vec.conj()))
        total += sampled_energy(rho, h, grouping, shots, readout, rng).std_error
    return total / n_states


def build_objectives(
    h: QubitHamiltonian,
    ansatz_config: AnsatzConfig,
    noise: NoiseModel,
    sampling: SamplingConfig,
    rng,
):
    """(loop objective, final objective, info dict) for one optimization."""
    if sampling.kind == "exact":

        def objective(theta):
            return exact_energy(prepare_state(ansatz_config, theta, noise), h)

        return objective, objective, {}

    if sampling.kind == "sampled":
        grouping = group_tpb(h)
        readout = (
            ReadoutModel.symmetric(h.n, sampling.eps_r)
            if sampling.eps_r > 0
            else ReadoutModel.ideal(h.n)
        )

        def sampled_at(theta, shots):
            rho = prepare_state(ansatz_config, theta, noise)
            return sampled_energy(rho, h, grouping, shots, readout, rng)

        return (
            lambda theta: sampled_at(theta, sampling.shots),
            lambda theta: sampled_at(theta, sampling.final_shots),
            {},
        )

    eps_a = surrogate_noise_scale(h, sampling.surrogate_states, sampling.reference_shots, rng)
    sigma = eps_a * math.sqrt(sampling.reference_shots / sampling.shots)
    sigma_final = eps_a * math.sqrt(sampling.reference_shots / sampling.final_shots)

    def noisy_at(theta, std):
        value = exact_energy(prepare_state(ansatz_config, theta, noise), h)
        return value + rng.normal(0.0, std), std

    return (
        lambda theta: noisy_at(theta, sigma),
        lambda theta: noisy_at(theta, sigma_final),
        {"epsilon_a": eps_a, "noise_std": sigma},
    )


@dataclass(frozen=True)
class PointResult:
    """All runs of one sweep point plus its exact reference energy."""

    parameter: float
    exact_reference: float
    traces: tuple[OptimizationTrace, ...]
    observables: tuple[dict, ...]

    @property
    def energies(self) -> tuple[float, ...]:
        return tuple(trace.e_final for trace in self.traces)

    @property
    def errors(self) -> tuple[float, ...]:
        return tuple(e - self.exact_reference for e in self.energies)

    def percentile_band(self) -> dict[int, float]:
        values = np.asarray(self.energies)
        return {p: float(np.percentile(values, p)) for p in PERCENTILES}


@dataclass(frozen=True)
class ExperimentReport:
    scenario: str
    master_seed: int
    points: tuple[PointResult, ...]

    def to_json(self) -> str:
        payload = {
            "scenario": self.scenario,
            "seed": self.master_seed,
            "points": [
                {
                    "parameter": point.parameter,
                    "exact_reference": point.exact_reference,
                    "energies": list(point.energies),
                    "errors": list(point.errors),
                    "min": min(point.energies),
                    "median": float(np.median(point.energies)),
                    "percentiles": {
                        str(k): v for k, v in point.percentile_band().items()
                    },
                    "observables": list(point.observables),
                    "runs": [json.loads(t.to_json()) for t in point.traces],
                }
                for point in self.points
            ],
        }
        return json.dumps(payload)

    def csv_rows(self) -> list[list]:
        rows = [
            [
                "scenario",
                "parameter",
                "run",
                "seed",
                "e_final",
                "exact_reference",
                "error",
                "wall_time",
            ]
        ]
        for point in self.points:
            for idx, trace in enumerate(point.traces):
                rows.append(
                    [
                        self.scenario,
                        point.parameter,
                        idx,
                        trace.seed,
                        trace.e_final,
                        point.exact_reference,
                        trace.e_final - point.exact_reference,
                        trace.wall_time,
                    ]
                )
        return rows


def _run_indexed(tasks, threads):
    """Execute callables, returning results in task order."""
    if threads is not None and threads < 1:
        raise ValueError("thread count must be positive")
    if threads == 1 or len(tasks) == 1:
        return [task() for task in tasks]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(lambda task: task(), tasks))


def single_run(
    h: QubitHamiltonian,
    ansatz_config: AnsatzConfig,
    noise: NoiseModel,
    sampling: SamplingConfig,
    spsa_config: SpsaConfig,
    run_seed: int,
    observable_fn=None,
) -> tuple[OptimizationTrace, dict]:
    """One seeded optimization; returns the trace and recorded observables."""
    obj_rng = np.random.default_rng(np.random.SeedSequence(run_seed, spawn_key=(1,)))
    init_rng = np.random.default_rng(np.random.SeedSequence(run_seed, spawn_key=(2,)))
    theta1 = initial_parameters(ansatz_config, init_rng)
    objective, final_objective, info = build_objectives(
        h, ansatz_config, noise, sampling, obj_rng
    )
    final_shots = (
        sampling.final_shots if sampling.kind in ("sampled", "surrogate") else None
    )
    trace = spsa_run(
        objective,
        theta1,
        spsa_config,
        seed=run_seed,
        final_objective=final_objective,
        final_shots=final_shots,
    )
    observed = dict(info)
    if observable_fn is not None:
        rho = prepare_state(ansatz_config, trace.theta_final, noise)
        observed.update(observable_fn(rho))
    return trace, observed


def vqe_pipeline(
    h: QubitHamiltonian,
    ansatz_config: AnsatzConfig,
    noise: NoiseModel,
    sampling: SamplingConfig,
    spsa_config: SpsaConfig,
    n_runs: int,
    seed: int,
    scenario: str = "optimize",
    point: float = 0.0,
    observable_fn=None,
    threads: int | None = None,
) -> ExperimentReport:
    """n_runs independent optimizations of one problem, with exact reference."""
    if n_runs < 1:
        raise ValueError("need at least one run")
    if h.n != ansatz_config.n_qubits:
        raise ValueError("Hamiltonian and ansatz qubit counts differ")
    reference = ground_energy(h)

    def make_task(run_idx: int):
        def task():
            s = task_seed(seed, scenario, point, run_idx)
            return single_run(
                h, ansatz_config, noise, sampling, spsa_config, s, observable_fn
            )

        return task

    results = _run_indexed([make_task(i) for i in range(n_runs)], threads)
    point_result = PointResult(
        point,
        reference,
        tuple(trace for trace, _ in results),
        tuple(observed for _, observed in results),
    )
    return ExperimentReport(scenario, seed, (point_result,))


def escalating_pipeline(
    h: QubitHamiltonian,
    stages,
    n_runs: int,
    seed: int,
    tolerance: float = CHEMICAL_ACCURACY,
    threads: int | None = None,
) -> list[ExperimentReport]:
    """Re-run the pipeline with growing resources until the median converges.

    stages is a sequence of (ansatz_config, noise, sampling, spsa_config)
    tuples in increasing-resource order; the loop stops once the median final
    energy improves by less than `tolerance` from one stage to the next.
    """
    reports = []
    previous_median = None
    for index, (ansatz_config, noise, sampling, spsa_config) in enumerate(stages):
        report = vqe_pipeline(
            h,
            ansatz_config,
            noise,
            sampling,
            spsa_config,
            n_runs,
            seed,
            scenario=f"optimize/stage={index}",
            threads=threads,
        )
        reports.append(report)
        median = float(np.median(report.points[0].energies))
        if previous_median is not None and previous_median - median < tolerance:
            break
        previous_median = median
    return reports


def _budgeted_spsa(budget: int, noisy: bool, calibration_samples: int = 25) -> SpsaConfig:
    """Schedule sized so calibration plus the loop fit the evaluation budget."""
    max_updates = max(1, (int(budget) - 2 * calibration_samples) // 2)
    return SpsaConfig(
        c=C_NOISY if noisy else C_NOISELESS,
        max_updates=max_updates,
        averaging_window=min(25, max_updates),
        calibration_samples=calibration_samples,
    )


@dataclass(frozen=True)
class DepthSearchResult:
    critical_depth: int | None
    mean_errors: tuple[tuple[int, float], ...]
    target: float
    reports: tuple[tuple[int, ExperimentReport], ...]


def critical_depth_search(
    h: QubitHamiltonian,
    topology: str,
    seed: int,
    variant: str = "reduced_zz",
    budget: int = 50_000,
    n_runs: int = 10,
    d_max: int = 12,
    phase: float = math.pi / 2,
    target: float = CHEMICAL_ACCURACY,
    threads: int | None = None,
    custom_layers=None,
) -> DepthSearchResult:
    """Smallest depth whose mean final error over n_runs meets the target.

    Depths are scanned upward from 0 with ideal ZZ entanglers at the given
    phase and a noiseless exact objective, each run keeping within `budget`
    objective evaluations.
    """
    reference = ground_energy(h)
    spsa_config = _budgeted_spsa(budget, noisy=False)
    mean_errors = []
    reports = []
    for depth in range(0, d_max + 1):
        config = build_config(
            h.n,
            depth,
            topology=topology,
            entangler_kind="ideal_zz",
            phase=phase,
            variant=variant,
            custom_layers=custom_layers,
        )
        report = vqe_pipeline(
            h,
            config,
            NoiseModel.none(),
            SamplingConfig("exact"),
            spsa_config,
            n_runs,
            seed,
            scenario="depth-search",
            point=float(depth),
            threads=threads,
        )
        errors = np.abs(np.asarray(report.points[0].energies) - reference)
        mean_errors.append((depth, float(errors.mean())))
        reports.append((depth, report))
        if errors.mean() <= target:
            return DepthSearchResult(depth, tuple(mean_errors), target, tuple(reports))
    return DepthSearchResult(None, tuple(mean_errors), target, tuple(reports))


def zx_phase_concurrence(phase: float) -> float:
    """Concurrence generated by one ZX gate of the given phase from |+0>."""
    rho = init_state(2)
    rho = apply_euler(rho, 0, math.pi / 2, math.pi / 2, 0.0)
    if phase == 0.0:
        return 0.0
    spec = EntanglerSpec.ideal_zx((((0, 1),),), phase)
    return concurrence(apply_entangler(rho, spec))


@dataclass(frozen=True)
class PhaseStudyResult:
    reports: tuple[tuple[int, ExperimentReport], ...]
    concurrence_curve: tuple[tuple[float, float], ...]


def entangler_phase_study(
    h: QubitHamiltonian,
    depths,
    phases,
    seed: int,
    topology: str = "experimental_4q",
    budget: int = 50_000,
    n_runs: int = 10,
    variant: str = "full_euler",
    threads: int | None = None,
    custom_layers=None,
) -> PhaseStudyResult:
    """Noiseless error-vs-entangler-phase curves with a concurrence companion."""
    spsa_config = _budgeted_spsa(budget, noisy=False)
    reports = []
    for depth in depths:
        if depth < 1:
            raise ValueError("phase study needs at least one entangler layer")
        points = []
        scenario = f"phase-study/d={depth}"
        for phase in phases:
            config = build_config(
                h.n,
                depth,
                topology=topology,
                entangler_kind="ideal_zx",
                phase=float(phase),
                variant=variant,
                custom_layers=custom_layers,
            )
            report = vqe_pipeline(
                h,
                config,
                NoiseModel.none(),
                SamplingConfig("exact"),
                spsa_config,
                n_runs,
                seed,
                scenario=scenario,
                point=float(phase),
                threads=threads,
            )
            points.append(report.points[0])
        reports.append((int(depth), ExperimentReport(scenario, seed, tuple(points))))
    curve = tuple((float(p), zx_phase_concurrence(float(p))) for p in phases)
    return PhaseStudyResult(tuple(reports), curve)


def noise_scaling_study(
    h: QubitHamiltonian,
    depths,
    xi_values,
    seed: int,
    topology: str = "all_to_all",
    variant: str = "reduced_zz",
    budget: int = 50_000,
    n_runs: int = 10,
    phase: float = math.pi / 2,
    threads: int | None = None,
) -> tuple[tuple[int, ExperimentReport], ...]:
    """Mean error per (depth, depolarizing strength) with exact objectives."""
    spsa_config = _budgeted_spsa(budget, noisy=False)
    reports = []
    for depth in depths:
        points = []
        scenario = f"noise-scaling/d={depth}"
        for xi in xi_values:
            config = build_config(
                h.n, depth, topology=topology, entangler_kind="ideal_zz",
                phase=phase, variant=variant,
            )
            noise = NoiseModel.depolarizing(float(xi)) if xi > 0 else NoiseModel.none()
            report = vqe_pipeline(
                h,
                config,
                noise,
                SamplingConfig("exact"),
                spsa_config,
                n_runs,
                seed,
                scenario=scenario,
                point=float(xi),
                threads=threads,
            )
            points.append(report.points[0])
        reports.append((int(depth), ExperimentReport(scenario, seed, tuple(points))))
    return tuple(reports)


def sampling_scaling_study(
    h: QubitHamiltonian,
    depth: int,
    shot_values,
    seed: int,
    topology: str = "all_to_all",
    variant: str = "full_euler",
    entangler_kind: str = "ideal_zx",
    phase: float = math.pi / 2,
    budget: int = 50_000,
    n_runs: int = 10,
    threads: int | None = None,
    surrogate_states: int = 100,
    reference_shots: int = 1000,
    final_shots: int = 10**5,
) -> ExperimentReport:
    """Error versus sample count via the Gaussian-surrogate protocol."""
    spsa_config = _budgeted_spsa(budget, noisy=True)
    config = build_config(
        h.n, depth, topology=topology, entangler_kind=entangler_kind,
        phase=phase, variant=variant,
    )
    points = []
    for shots in shot_values:
        sampling = SamplingConfig(
            "surrogate",
            shots=int(shots),
            final_shots=final_shots,
            surrogate_states=surrogate_states,
            reference_shots=reference_shots,
        )
        report = vqe_pipeline(
            h,
            config,
            NoiseModel.none(),
            sampling,
            spsa_config,
            n_runs,
            seed,
            scenario="sampling-scaling",
            point=float(shots),
            threads=threads,
        )
        points.append(report.points[0])
    return ExperimentReport("sampling-scaling", seed, tuple(points))


def molecular_hamiltonian(
    source,
    scheme: EncodingScheme = PARITY,
    frozen_pairs: int = 0,
    taper_qubits: bool = True,
) -> QubitHamiltonian:
    """Integral file to qubit Hamiltonian: dress, freeze, encode, taper."""
    fermionic = load_integrals(source)
    _, _, dressed = bogoliubov_diagonalize(fermionic)
    if frozen_pairs:
        half = dressed.n_modes // 2
        frozen = tuple(range(frozen_pairs)) + tuple(range(half, half + frozen_pairs))
        dressed = freeze_core(dressed, frozen)
    hq = encode(dressed, scheme)
    if taper_qubits:
        if dressed.electron_count is None:
            raise ValueError("integral source does not declare an electron count")
        sector = sector_from_electron_count(dressed.electron_count)
        hq = taper(hq, sector, scheme)
    return hq


def dissociation_sweep(
    geometry_files,
    scheme: EncodingScheme = PARITY,
    frozen_pairs: int = 0,
    depth: int = 1,
    topology: str = "all_to_all",
    entangler_kind: str = "cr_measured",
    phase: float = math.pi / 2,
    duration: float = 150e-9,
    variant: str = "full_euler",
    noise: NoiseModel | None = None,
    sampling: SamplingConfig | None = None,
    spsa_config: SpsaConfig | None = None,
    n_runs: int = 10,
    seed: int = 0,
    threads: int | None = None,
) -> ExperimentReport:
    """Per-geometry optimizations over a set of integral files.

    geometry_files is a sequence of (distance, path) pairs; each point's
    Hamiltonian goes through the full mapping pipeline before optimization.
    """
    noise = noise if noise is not None else NoiseModel.none()
    sampling = sampling if sampling is not None else SamplingConfig("exact")
    points = []
    for distance, path in geometry_files:
        h = molecular_hamiltonian(path, scheme, frozen_pairs)
        config = build_config(
            h.n, depth, topology=topology, entangler_kind=entangler_kind,
            phase=phase, duration=duration, variant=variant,
        )
        run_spsa = spsa_config
        if run_spsa is None:
            run_spsa = SpsaConfig(
                c=C_NOISELESS if sampling.kind == "exact" else C_NOISY
            )
        report = vqe_pipeline(
            h,
            config,
            noise,
            sampling,
            run_spsa,
            n_runs,
            seed,
            scenario="dissociation",
            point=float(distance),
            threads=threads,
        )
        points.append(report.points[0])
    return ExperimentReport("dissociation", seed, tuple(points))


def heisenberg_sweep(
    j_values,
    b: float,
    depth: int,
    topology: str = "experimental_4q",
    entangler_kind: str = "cr_measured",
    phase: float = math.pi / 2,
    duration: float = 150e-9,
    variant: str = "full_euler",
    noise: NoiseModel | None = None,
    sampling: SamplingConfig | None = None,
    spsa_config: SpsaConfig | None = None,
    n_runs: int = 10,
    seed: int = 0,
    n_qubits: int = 4,
    edges=DEFAULT_HEISENBERG_EDGES,
    threads: int | None = None,
) -> ExperimentReport:
    """Exchange-coupling sweep storing magnetization observables per run."""
    noise = noise if noise is not None else NoiseModel.none()
    sampling = sampling if sampling is not None else SamplingConfig("exact")
    points = []
    for j in j_values:
        h = heisenberg_hamiltonian(HeisenbergConfig(float(j), b, n_qubits, tuple(edges)))
        config = build_config(
            n_qubits, depth, topology=topology, entangler_kind=entangler_kind,
            phase=phase, duration=duration, variant=variant,
        )
        run_spsa = spsa_config
        if run_spsa is None:
            run_spsa = SpsaConfig(
                c=C_NOISELESS if sampling.kind == "exact" else C_NOISY
            )
        report = vqe_pipeline(
            h,
            config,
            noise,
            sampling,
            run_spsa,
            n_runs,
            seed,
            scenario="heisenberg",
            point=float(j),
            observable_fn=lambda rho: {
                "m_z": magnetization(rho),
                "z_per_qubit": list(per_qubit_magnetization(rho)),
            },
            threads=threads,
        )
        points.append(report.points[0])
    return ExperimentReport("heisenberg", seed, tuple(points))
