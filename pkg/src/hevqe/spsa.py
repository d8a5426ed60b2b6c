"""Simultaneous perturbation stochastic approximation.

Each update draws one random +-1 direction and spends exactly two objective
evaluations; the energy at the undisplaced angles is never measured. The
final angles are the mean of the displaced vectors from the last
`averaging_window` updates (both signs, so 2*window vectors).
"""

from __future__ import annotations

import json
import math
import time
from collections import deque
from dataclasses import asdict, dataclass, replace

import numpy as np

__all__ = [
    "C_NOISY",
    "C_NOISELESS",
    "SpsaConfig",
    "IterationRecord",
    "OptimizationTrace",
    "gain_schedule",
    "calibrate_a",
    "spsa_iterate",
    "run",
]

# perturbation scales: the larger one keeps finite-shot objectives in the
# regime where the +- difference dominates the estimation noise
C_NOISY = 0.1
C_NOISELESS = 0.01

_FLAT_TOL = 1e-12


@dataclass(frozen=True)
class SpsaConfig:
    """Gain schedules and averaging settings for one optimization run."""

    c: float
    a: float | None = None
    alpha: float = 0.602
    gamma: float = 0.101
    max_updates: int = 250
    averaging_window: int = 25
    calibration_samples: int = 25
    target_first_step: float = 2 * math.pi / 10

    def __post_init__(self):
        if self.c <= 0:
            raise ValueError("perturbation scale c must be positive")
        if self.a is not None and self.a <= 0:
            raise ValueError("step scale a must be positive")
        if self.max_updates < 1:
            raise ValueError("need at least one update")
        if not 1 <= self.averaging_window <= self.max_updates:
            raise ValueError("averaging window must fit inside the update count")
        if self.calibration_samples < 1:
            raise ValueError("need at least one calibration sample")
        if self.target_first_step <= 0:
            raise ValueError("target first step must be positive")


@dataclass(frozen=True)
class IterationRecord:
    k: int
    theta_plus: np.ndarray
    theta_minus: np.ndarray
    energy_plus: float
    energy_minus: float
    std_plus: float
    std_minus: float


@dataclass(frozen=True)
class OptimizationTrace:
    config: SpsaConfig
    seed: int
    iterations: tuple[IterationRecord, ...]
    theta_final: np.ndarray
    e_final: float
    final_std: float
    final_shots: int | None
    wall_time: float

    def to_json(self) -> str:
        payload = {
            "config": asdict(self.config),
            "seed": self.seed,
            "iterations": [
                {
                    "k": rec.k,
                    "theta_plus_energy": rec.energy_plus,
                    "theta_minus_energy": rec.energy_minus,
                    "std_plus": rec.std_plus,
                    "std_minus": rec.std_minus,
                }
                for rec in self.iterations
            ],
            "theta_final": [float(v) for v in self.theta_final],
            "E_f": self.e_final,
            "S_f": self.final_shots,
            "wall_time": self.wall_time,
        }
        return json.dumps(payload)


def gain_schedule(config: SpsaConfig, k: int) -> tuple[float, float]:
    """(a_k, c_k) for update index k >= 1."""
    if k < 1:
        raise ValueError("update index starts at 1")
    if config.a is None:
        raise ValueError("step scale a is not set; calibrate first")
    return config.a / k**config.alpha, config.c / k**config.gamma


def _evaluate(objective, theta) -> tuple[float, float]:
    """Normalize objective results to (value, std_error)."""
    result = objective(theta)
    if hasattr(result, "value") and hasattr(result, "std_error"):
        return float(result.value), float(result.std_error)
    if isinstance(result, tuple):
        value, std = result
        return float(value), float(std)
    return float(result), 0.0


def calibrate_a(objective, theta1, config: SpsaConfig, rng) -> float:
    """Step scale giving a target_first_step-sized first angle update.

    Averages |E(theta1 + c*delta) - E(theta1 - c*delta)| over random +-1
    directions and solves a * mean / (2c) = target_first_step.
    """
    theta1 = np.asarray(theta1, dtype=float)
    diffs = np.empty(config.calibration_samples)
    for i in range(config.calibration_samples):
        delta = rng.integers(0, 2, size=theta1.size) * 2 - 1
        plus, _ = _evaluate(objective, theta1 + config.c * delta)
        minus, _ = _evaluate(objective, theta1 - config.c * delta)
        diffs[i] = abs(plus - minus)
    mean_diff = float(diffs.mean())
    if mean_diff < _FLAT_TOL:
        raise ValueError(
            "objective is flat around the start point; cannot calibrate a"
        )
    return 2.0 * config.target_first_step * config.c / mean_diff


def spsa_iterate(
    objective, theta, k: int, config: SpsaConfig, rng
) -> tuple[np.ndarray, IterationRecord]:
    """One update: theta_{k+1} = theta_k - a_k * g_k with two evaluations."""
    theta = np.asarray(theta, dtype=float)
    a_k, c_k = gain_schedule(config, k)
    delta = rng.integers(0, 2, size=theta.size) * 2 - 1
    theta_plus = theta + c_k * delta
    theta_minus = theta - c_k * delta
    energy_plus, std_plus = _evaluate(objective, theta_plus)
    energy_minus, std_minus = _evaluate(objective, theta_minus)
    gradient = (energy_plus - energy_minus) / (2.0 * c_k) * delta
    record = IterationRecord(
        k, theta_plus, theta_minus, energy_plus, energy_minus, std_plus, std_minus
    )
    return theta - a_k * gradient, record


def run(
    objective,
    theta1,
    config: SpsaConfig,
    seed: int,
    final_objective=None,
    final_shots: int | None = None,
) -> OptimizationTrace:
    """Full optimization: optional calibration, max_updates steps, averaging.

    The returned angles are the mean of the displaced +- vectors from the
    last averaging_window updates; the final energy is one evaluation of
    final_objective (default: objective) at those angles.
    """
    start = time.perf_counter()
    rng = np.random.default_rng(seed)
    theta = np.asarray(theta1, dtype=float)
    if config.a is None:
        config = replace(config, a=calibrate_a(objective, theta, config, rng))

    records = []
    tail = deque(maxlen=config.averaging_window)
    for k in range(1, config.max_updates + 1):
        theta, record = spsa_iterate(objective, theta, k, config, rng)
        records.append(record)
        tail.append((record.theta_plus, record.theta_minus))

    stack = [vec for pair in tail for vec in pair]
    theta_final = np.mean(stack, axis=0)
    closer = final_objective if final_objective is not None else objective
    e_final, std_final = _evaluate(closer, theta_final)
    wall_time = time.perf_counter() - start
    return OptimizationTrace(
        config,
        seed,
        tuple(records),
        theta_final,
        e_final,
        std_final,
        final_shots,
        wall_time,
    )
