"""Run configuration files: schema validation and section objects.

A run is described by one YAML mapping. Unknown keys anywhere in the tree
are rejected so typos fail loudly instead of silently falling back to a
default. Sections build the library-level objects on demand; scenario
handlers read only the sections they need.
"""

from __future__ import annotations

import hashlib
import math
import re
from dataclasses import dataclass, replace
from pathlib import Path

import yaml

from .ansatz import AnsatzConfig, build_config
from .experiments import DEFAULT_HEISENBERG_EDGES, HeisenbergConfig, SamplingConfig
from .simulator import NoiseModel
from .spsa import C_NOISELESS, C_NOISY, SpsaConfig

__all__ = [
    "SCENARIOS",
    "TIERS",
    "ConfigError",
    "AnsatzSection",
    "SpsaSection",
    "StudySection",
    "ProblemConfig",
    "RunConfig",
    "parse_config",
    "load_config",
    "config_digest",
]

SCENARIOS = (
    "optimize",
    "sweep",
    "heisenberg",
    "group",
    "map",
    "phase-study",
    "noise-scaling",
    "sampling-scaling",
    "depth-search",
)
TIERS = ("smoke", "paper")
SCHEMES = ("jordan_wigner", "parity", "binary_tree")

_SMOKE_BUDGET = 2_000
_PAPER_BUDGET = 50_000
_SMOKE_RUNS = 5
_PAPER_RUNS = 10
# distance suffix of bundled geometry file stems, e.g. h2_0.735
_STEM_DISTANCE = re.compile(r"_([0-9]+(?:\.[0-9]+)?)$")


class ConfigError(Exception):
    """Malformed or invalid run configuration."""


def _require_mapping(value, path: str) -> dict:
    if value is None:
        return {}
    if not isinstance(value, dict):
        raise ConfigError(f"{path}: expected a mapping")
    return value


def _reject_unknown(mapping: dict, allowed, path: str) -> None:
    for key in mapping:
        if key not in allowed:
            raise ConfigError(f"unknown key {path}{key}")


def _as_bool(value, path: str) -> bool:
    if not isinstance(value, bool):
        raise ConfigError(f"{path}: expected true or false")
    return value


def _as_int(value, path: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"{path}: expected an integer")
    return value


def _as_float(value, path: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{path}: expected a number")
    return float(value)


def _as_str(value, path: str) -> str:
    if not isinstance(value, str):
        raise ConfigError(f"{path}: expected a string")
    return value


def _as_choice(value, choices, path: str) -> str:
    name = _as_str(value, path)
    if name not in choices:
        raise ConfigError(f"{path}: must be one of {', '.join(choices)}")
    return name


def _as_list(value, path: str) -> list:
    if not isinstance(value, list):
        raise ConfigError(f"{path}: expected a list")
    return value


@dataclass(frozen=True)
class AnsatzSection:
    depth: int = 1
    topology: str = "all_to_all"
    variant: str = "full_euler"
    entangler_kind: str = "cr_measured"
    phase: float = math.pi / 2
    duration: float = 150e-9

    def build(self, n_qubits: int) -> AnsatzConfig:
        return build_config(
            n_qubits,
            self.depth,
            topology=self.topology,
            entangler_kind=self.entangler_kind,
            phase=self.phase,
            duration=self.duration,
            variant=self.variant,
        )


@dataclass(frozen=True)
class SpsaSection:
    c: float | None = None
    a: float | None = None
    max_updates: int | None = None
    averaging_window: int = 25
    calibration_samples: int = 25

    def build(self, sampling_kind: str, budget: int) -> SpsaConfig:
        c = self.c
        if c is None:
            c = C_NOISELESS if sampling_kind == "exact" else C_NOISY
        updates = self.max_updates
        if updates is None:
            updates = max(1, (budget - 2 * self.calibration_samples) // 2)
        return SpsaConfig(
            c=c,
            a=self.a,
            max_updates=updates,
            averaging_window=min(self.averaging_window, updates),
            calibration_samples=self.calibration_samples,
        )


@dataclass(frozen=True)
class StudySection:
    budget: int | None = None
    d_max: int = 12
    target: float = 0.0016
    depths: tuple[int, ...] = (0, 1, 2)
    phases: tuple[float, ...] = tuple(i * math.pi / 8 for i in range(9))
    xi_values: tuple[float, ...] = (0.0, 1e-4, 1e-3, 1e-2)
    shot_values: tuple[int, ...] = (10**3, 10**4, 10**5, 10**6)
    j_values: tuple[float, ...] | None = None


@dataclass(frozen=True)
class ProblemConfig:
    integral_file: str | None = None
    integral_files: tuple[tuple[float, str], ...] = ()
    hamiltonian_file: str | None = None
    scheme: str = "parity"
    frozen_pairs: int = 0
    taper: bool = True
    heisenberg: HeisenbergConfig | None = None

    def source_count(self) -> int:
        return sum(
            (
                self.integral_file is not None,
                bool(self.integral_files),
                self.hamiltonian_file is not None,
                self.heisenberg is not None,
            )
        )


@dataclass(frozen=True)
class RunConfig:
    scenario: str
    seed: int = 0
    tier: str = "smoke"
    out: str = "out"
    threads: int | None = None
    runs: int | None = None
    problem: ProblemConfig = ProblemConfig()
    ansatz: AnsatzSection = AnsatzSection()
    noise: NoiseModel = NoiseModel.none()
    sampling: SamplingConfig = SamplingConfig()
    spsa: SpsaSection = SpsaSection()
    study: StudySection = StudySection()

    @property
    def budget(self) -> int:
        if self.study.budget is not None:
            return self.study.budget
        return _SMOKE_BUDGET if self.tier == "smoke" else _PAPER_BUDGET

    @property
    def run_count(self) -> int:
        if self.runs is not None:
            return self.runs
        return _SMOKE_RUNS if self.tier == "smoke" else _PAPER_RUNS


def _parse_edges(value, path: str):
    edges = []
    for idx, entry in enumerate(_as_list(value, path)):
        pair = _as_list(entry, f"{path}[{idx}]")
        if len(pair) != 2:
            raise ConfigError(f"{path}[{idx}]: an edge is a pair of qubit indices")
        edges.append((_as_int(pair[0], f"{path}[{idx}][0]"),
                      _as_int(pair[1], f"{path}[{idx}][1]")))
    return tuple(edges)


def _parse_heisenberg(data, path: str) -> HeisenbergConfig:
    allowed = {"j", "b", "n_qubits", "edges"}
    _reject_unknown(data, allowed, path)
    kwargs = {
        "j": _as_float(data["j"], f"{path}j") if "j" in data else 1.0,
        "b": _as_float(data["b"], f"{path}b") if "b" in data else 1.0,
    }
    if "n_qubits" in data:
        kwargs["n_qubits"] = _as_int(data["n_qubits"], f"{path}n_qubits")
    kwargs["edges"] = (
        _parse_edges(data["edges"], f"{path}edges")
        if "edges" in data
        else DEFAULT_HEISENBERG_EDGES
    )
    try:
        return HeisenbergConfig(**kwargs)
    except ValueError as exc:
        raise ConfigError(f"{path.rstrip('.')}: {exc}") from None


def _parse_integral_files(value, path: str):
    points = []
    for idx, entry in enumerate(_as_list(value, path)):
        where = f"{path}[{idx}]"
        if isinstance(entry, str):
            stem = Path(entry).stem
            match = _STEM_DISTANCE.search(stem)
            if match is None:
                raise ConfigError(
                    f"{where}: file stem carries no trailing _<distance>; "
                    "use a [distance, path] pair instead"
                )
            points.append((float(match.group(1)), entry))
        else:
            pair = _as_list(entry, where)
            if len(pair) != 2:
                raise ConfigError(f"{where}: expected [distance, path]")
            points.append(
                (_as_float(pair[0], f"{where}[0]"), _as_str(pair[1], f"{where}[1]"))
            )
    return tuple(points)


def _parse_problem(data, path: str) -> ProblemConfig:
    allowed = {
        "integral_file",
        "integral_files",
        "hamiltonian_file",
        "scheme",
        "frozen_pairs",
        "taper",
        "heisenberg",
    }
    _reject_unknown(data, allowed, path)
    kwargs = {}
    if "integral_file" in data:
        kwargs["integral_file"] = _as_str(data["integral_file"], f"{path}integral_file")
    if "integral_files" in data:
        kwargs["integral_files"] = _parse_integral_files(
            data["integral_files"], f"{path}integral_files"
        )
    if "hamiltonian_file" in data:
        kwargs["hamiltonian_file"] = _as_str(
            data["hamiltonian_file"], f"{path}hamiltonian_file"
        )
    if "scheme" in data:
        kwargs["scheme"] = _as_choice(data["scheme"], SCHEMES, f"{path}scheme")
    if "frozen_pairs" in data:
        kwargs["frozen_pairs"] = _as_int(data["frozen_pairs"], f"{path}frozen_pairs")
        if kwargs["frozen_pairs"] < 0:
            raise ConfigError(f"{path}frozen_pairs: must be non-negative")
    if "taper" in data:
        kwargs["taper"] = _as_bool(data["taper"], f"{path}taper")
    if "heisenberg" in data:
        kwargs["heisenberg"] = _parse_heisenberg(
            _require_mapping(data["heisenberg"], f"{path}heisenberg"),
            f"{path}heisenberg.",
        )
    return ProblemConfig(**kwargs)


def _parse_ansatz(data, path: str) -> AnsatzSection:
    allowed = {"depth", "topology", "variant", "entangler_kind", "phase", "duration"}
    _reject_unknown(data, allowed, path)
    kwargs = {}
    if "depth" in data:
        kwargs["depth"] = _as_int(data["depth"], f"{path}depth")
        if kwargs["depth"] < 0:
            raise ConfigError(f"{path}depth: must be non-negative")
    if "topology" in data:
        kwargs["topology"] = _as_str(data["topology"], f"{path}topology")
    if "variant" in data:
        kwargs["variant"] = _as_choice(
            data["variant"], ("full_euler", "reduced_zz"), f"{path}variant"
        )
    if "entangler_kind" in data:
        kwargs["entangler_kind"] = _as_choice(
            data["entangler_kind"],
            ("cr_measured", "ideal_zx", "ideal_zz"),
            f"{path}entangler_kind",
        )
    if "phase" in data:
        kwargs["phase"] = _as_float(data["phase"], f"{path}phase")
    if "duration" in data:
        kwargs["duration"] = _as_float(data["duration"], f"{path}duration")
        if kwargs["duration"] <= 0:
            raise ConfigError(f"{path}duration: must be positive")
    return AnsatzSection(**kwargs)


def _parse_noise(data, path: str) -> NoiseModel:
    allowed = {"kind", "t1", "t2_star", "tau_single", "tau_entangler", "xi"}
    _reject_unknown(data, allowed, path)
    kind = _as_choice(
        data.get("kind", "none"), ("none", "thermal", "depolarizing"), f"{path}kind"
    )
    try:
        if kind == "none":
            extras = set(data) - {"kind"}
            if extras:
                raise ConfigError(
                    f"{path}{sorted(extras)[0]}: not valid for noiseless runs"
                )
            return NoiseModel.none()
        if kind == "thermal":
            if "xi" in data:
                raise ConfigError(f"{path}xi: not valid for thermal noise")
            if "t1" not in data or "t2_star" not in data:
                raise ConfigError(f"{path.rstrip('.')}: thermal noise needs t1 and t2_star")
            return NoiseModel.thermal(
                _as_float(data["t1"], f"{path}t1"),
                _as_float(data["t2_star"], f"{path}t2_star"),
                tau_single=_as_float(data.get("tau_single", 100e-9), f"{path}tau_single"),
                tau_entangler=_as_float(
                    data.get("tau_entangler", 450e-9), f"{path}tau_entangler"
                ),
            )
        extras = set(data) - {"kind", "xi"}
        if extras:
            raise ConfigError(
                f"{path}{sorted(extras)[0]}: not valid for depolarizing noise"
            )
        return NoiseModel.depolarizing(_as_float(data.get("xi", 0.0), f"{path}xi"))
    except ValueError as exc:
        raise ConfigError(f"{path.rstrip('.')}: {exc}") from None


def _parse_sampling(data, path: str) -> SamplingConfig:
    allowed = {
        "kind",
        "shots",
        "final_shots",
        "eps_r",
        "surrogate_states",
        "reference_shots",
    }
    _reject_unknown(data, allowed, path)
    kwargs = {}
    if "kind" in data:
        kwargs["kind"] = _as_choice(
            data["kind"], ("exact", "sampled", "surrogate"), f"{path}kind"
        )
    if "shots" in data:
        kwargs["shots"] = _as_int(data["shots"], f"{path}shots")
    if "final_shots" in data:
        kwargs["final_shots"] = _as_int(data["final_shots"], f"{path}final_shots")
    if "eps_r" in data:
        kwargs["eps_r"] = _as_float(data["eps_r"], f"{path}eps_r")
    if "surrogate_states" in data:
        kwargs["surrogate_states"] = _as_int(
            data["surrogate_states"], f"{path}surrogate_states"
        )
    if "reference_shots" in data:
        kwargs["reference_shots"] = _as_int(
            data["reference_shots"], f"{path}reference_shots"
        )
    try:
        return SamplingConfig(**kwargs)
    except ValueError as exc:
        raise ConfigError(f"{path.rstrip('.')}: {exc}") from None


def _parse_spsa(data, path: str) -> SpsaSection:
    allowed = {"c", "a", "max_updates", "averaging_window", "calibration_samples"}
    _reject_unknown(data, allowed, path)
    kwargs = {}
    if "c" in data:
        kwargs["c"] = _as_float(data["c"], f"{path}c")
        if kwargs["c"] <= 0:
            raise ConfigError(f"{path}c: must be positive")
    if "a" in data:
        kwargs["a"] = _as_float(data["a"], f"{path}a")
        if kwargs["a"] <= 0:
            raise ConfigError(f"{path}a: must be positive")
    if "max_updates" in data:
        kwargs["max_updates"] = _as_int(data["max_updates"], f"{path}max_updates")
        if kwargs["max_updates"] < 1:
            raise ConfigError(f"{path}max_updates: must be at least 1")
    if "averaging_window" in data:
        kwargs["averaging_window"] = _as_int(
            data["averaging_window"], f"{path}averaging_window"
        )
        if kwargs["averaging_window"] < 1:
            raise ConfigError(f"{path}averaging_window: must be at least 1")
    if "calibration_samples" in data:
        kwargs["calibration_samples"] = _as_int(
            data["calibration_samples"], f"{path}calibration_samples"
        )
        if kwargs["calibration_samples"] < 1:
            raise ConfigError(f"{path}calibration_samples: must be at least 1")
    return SpsaSection(**kwargs)


def _parse_study(data, path: str) -> StudySection:
    allowed = {
        "budget",
        "d_max",
        "target",
        "depths",
        "phases",
        "xi_values",
        "shot_values",
        "j_values",
    }
    _reject_unknown(data, allowed, path)
    kwargs = {}
    if "budget" in data:
        kwargs["budget"] = _as_int(data["budget"], f"{path}budget")
        if kwargs["budget"] < 52:
            raise ConfigError(f"{path}budget: too small to calibrate and update")
    if "d_max" in data:
        kwargs["d_max"] = _as_int(data["d_max"], f"{path}d_max")
        if kwargs["d_max"] < 0:
            raise ConfigError(f"{path}d_max: must be non-negative")
    if "target" in data:
        kwargs["target"] = _as_float(data["target"], f"{path}target")
        if kwargs["target"] <= 0:
            raise ConfigError(f"{path}target: must be positive")
    if "depths" in data:
        kwargs["depths"] = tuple(
            _as_int(v, f"{path}depths[{i}]")
            for i, v in enumerate(_as_list(data["depths"], f"{path}depths"))
        )
    if "phases" in data:
        kwargs["phases"] = tuple(
            _as_float(v, f"{path}phases[{i}]")
            for i, v in enumerate(_as_list(data["phases"], f"{path}phases"))
        )
    if "xi_values" in data:
        kwargs["xi_values"] = tuple(
            _as_float(v, f"{path}xi_values[{i}]")
            for i, v in enumerate(_as_list(data["xi_values"], f"{path}xi_values"))
        )
    if "shot_values" in data:
        kwargs["shot_values"] = tuple(
            _as_int(v, f"{path}shot_values[{i}]")
            for i, v in enumerate(_as_list(data["shot_values"], f"{path}shot_values"))
        )
    if "j_values" in data:
        kwargs["j_values"] = tuple(
            _as_float(v, f"{path}j_values[{i}]")
            for i, v in enumerate(_as_list(data["j_values"], f"{path}j_values"))
        )
    return StudySection(**kwargs)


def _check_sources(scenario: str, problem: ProblemConfig) -> None:
    if scenario == "sweep":
        if not problem.integral_files:
            raise ConfigError("sweep needs problem.integral_files")
        return
    if scenario == "map":
        if problem.integral_file is None:
            raise ConfigError("map needs problem.integral_file")
        return
    if scenario == "heisenberg":
        return  # section defaults apply
    if scenario == "group":
        if problem.integral_file is None and problem.hamiltonian_file is None:
            raise ConfigError("group needs an integral or hamiltonian file")
        return
    if problem.source_count() == 0:
        raise ConfigError(f"{scenario} needs a problem source")
    if problem.source_count() > 1:
        raise ConfigError(f"{scenario} needs exactly one problem source")


def parse_config(data: dict) -> RunConfig:
    """Validate one configuration mapping and build the run description."""
    data = _require_mapping(data, "config")
    allowed = {
        "scenario",
        "seed",
        "tier",
        "out",
        "threads",
        "runs",
        "problem",
        "ansatz",
        "noise",
        "sampling",
        "spsa",
        "study",
    }
    _reject_unknown(data, allowed, "")
    if "scenario" not in data:
        raise ConfigError("scenario is required")
    scenario = _as_choice(data["scenario"], SCENARIOS, "scenario")
    kwargs = {"scenario": scenario}
    if "seed" in data:
        seed = _as_int(data["seed"], "seed")
        if not 0 <= seed < 2**64:
            raise ConfigError("seed: must fit in 64 bits")
        kwargs["seed"] = seed
    if "tier" in data:
        kwargs["tier"] = _as_choice(data["tier"], TIERS, "tier")
    if "out" in data:
        kwargs["out"] = _as_str(data["out"], "out")
    if "threads" in data:
        kwargs["threads"] = _as_int(data["threads"], "threads")
        if kwargs["threads"] < 1:
            raise ConfigError("threads: must be positive")
    if "runs" in data:
        kwargs["runs"] = _as_int(data["runs"], "runs")
        if kwargs["runs"] < 1:
            raise ConfigError("runs: must be at least 1")
    kwargs["problem"] = _parse_problem(
        _require_mapping(data.get("problem"), "problem"), "problem."
    )
    kwargs["ansatz"] = _parse_ansatz(
        _require_mapping(data.get("ansatz"), "ansatz"), "ansatz."
    )
    kwargs["noise"] = _parse_noise(_require_mapping(data.get("noise"), "noise"), "noise.")
    kwargs["sampling"] = _parse_sampling(
        _require_mapping(data.get("sampling"), "sampling"), "sampling."
    )
    kwargs["spsa"] = _parse_spsa(_require_mapping(data.get("spsa"), "spsa"), "spsa.")
    kwargs["study"] = _parse_study(_require_mapping(data.get("study"), "study"), "study.")
    if scenario == "heisenberg" and kwargs["problem"].heisenberg is None:
        kwargs["problem"] = replace(
            kwargs["problem"], heisenberg=HeisenbergConfig(1.0, 1.0)
        )
    _check_sources(scenario, kwargs["problem"])
    return RunConfig(**kwargs)


def config_digest(raw: bytes) -> str:
    return hashlib.sha256(raw).hexdigest()


def load_config(path) -> tuple[RunConfig, str]:
    """Read and validate a YAML run configuration.

    Returns the parsed config plus the sha-256 of the raw file bytes, which
    output files embed as provenance.
    """
    try:
        raw = Path(path).read_bytes()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from None
    try:
        data = yaml.safe_load(raw)
    except yaml.YAMLError as exc:
        raise ConfigError(f"config is not valid YAML: {exc}") from None
    return parse_config(data), config_digest(raw)
