"""Hardware-efficient trial states: topologies, parameter layout, preparation.

The circuit is [Euler layer 0] (U_ENT [Euler layer i]) x d acting on |0...0>.
Parameters are stored depth-major, qubit-minor, and time-ordered within a
qubit's rotation triple: a full layer stores (z_first, x, z_last) meaning
the unitary Z(z_last) X(x) Z(z_first); layer 0 and every reduced_zz layer
drop the time-first Z and store (x, z_last). Counts: N(3d+2) for full_euler,
2N(d+1) for reduced_zz.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .simulator import (
    DensityMatrix,
    EntanglerSpec,
    NoiseModel,
    apply_depolarizing,
    apply_euler,
    apply_thermal_noise,
    apply_unitary,
    entangler_unitaries,
    init_state,
)

__all__ = [
    "AnsatzConfig",
    "TOPOLOGY_LAYERS",
    "round_robin_layers",
    "topology_layers",
    "build_config",
    "parameter_count",
    "initial_parameters",
    "prepare_state",
    "parameters_to_json",
    "parameters_from_json",
]

# fixed device-style connectivities; inner tuples are parallel layers of
# directed (control, target) pairs
TOPOLOGY_LAYERS = {
    "experimental_2q": (((0, 1),),),
    "experimental_4q": (((1, 0),), ((0, 2), (1, 3))),
    "experimental_6q": (((1, 0), (3, 4)), ((0, 2), (5, 4)), ((1, 3),)),
}

_TOPOLOGY_SIZES = {"experimental_2q": 2, "experimental_4q": 4, "experimental_6q": 6}

VARIANTS = ("full_euler", "reduced_zz")


def round_robin_layers(n_qubits: int):
    """All-to-all coupling scheduled into disjoint parallel layers."""
    if n_qubits < 2:
        raise ValueError("need at least two qubits to entangle")
    players = list(range(n_qubits))
    if n_qubits % 2:
        players.append(-1)  # bye slot
    count = len(players)
    rounds = []
    for r in range(count - 1):
        pairs = []
        ring = [players[0]] + players[1:][r:] + players[1:][:r]
        for i in range(count // 2):
            a, b = ring[i], ring[count - 1 - i]
            if a != -1 and b != -1:
                pairs.append((min(a, b), max(a, b)))
        rounds.append(tuple(sorted(pairs)))
    return tuple(rounds)


def topology_layers(name: str, n_qubits: int, custom_layers=None):
    if name == "custom":
        if not custom_layers:
            raise ValueError("custom topology needs an explicit layer list")
        layers = tuple(tuple((int(c), int(t)) for c, t in layer) for layer in custom_layers)
        for layer in layers:
            for c, t in layer:
                if not (0 <= c < n_qubits and 0 <= t < n_qubits):
                    raise ValueError("custom topology references an invalid qubit")
        return layers
    if name == "all_to_all":
        return round_robin_layers(n_qubits)
    if name in TOPOLOGY_LAYERS:
        if n_qubits != _TOPOLOGY_SIZES[name]:
            raise ValueError(f"topology {name} is defined for {_TOPOLOGY_SIZES[name]} qubits")
        return TOPOLOGY_LAYERS[name]
    raise ValueError(f"unknown topology {name!r}")


@dataclass(frozen=True)
class AnsatzConfig:
    """Immutable description of the trial-state circuit."""

    n_qubits: int
    depth: int
    topology: str
    entangler: EntanglerSpec | None
    variant: str = "full_euler"

    def __post_init__(self):
        if self.n_qubits < 1:
            raise ValueError("need at least one qubit")
        if self.depth < 0:
            raise ValueError("depth must be non-negative")
        if self.variant not in VARIANTS:
            raise ValueError(f"variant must be one of {VARIANTS}")
        if self.depth > 0:
            if self.entangler is None or not self.entangler.layers:
                raise ValueError("positive depth needs an entangler with layers")
            if self.entangler.max_qubit() >= self.n_qubits:
                raise ValueError("entangler references a qubit outside the register")


def build_config(
    n_qubits: int,
    depth: int,
    topology: str = "all_to_all",
    entangler_kind: str = "cr_measured",
    phase: float = math.pi / 2,
    duration: float = 150e-9,
    variant: str = "full_euler",
    custom_layers=None,
) -> AnsatzConfig:
    """Assemble a config with the entangler acting on the topology's layers."""
    if depth > 0:
        layers = topology_layers(topology, n_qubits, custom_layers)
        if entangler_kind == "cr_measured":
            spec = EntanglerSpec.cr_measured(layers, duration)
        elif entangler_kind == "ideal_zx":
            spec = EntanglerSpec.ideal_zx(layers, phase)
        elif entangler_kind == "ideal_zz":
            spec = EntanglerSpec.ideal_zz(layers, phase)
        else:
            raise ValueError(f"unknown entangler kind {entangler_kind!r}")
    else:
        spec = None
    return AnsatzConfig(n_qubits, depth, topology, spec, variant)


def parameter_count(config: AnsatzConfig) -> int:
    n, d = config.n_qubits, config.depth
    if config.variant == "full_euler":
        return n * (3 * d + 2)
    return 2 * n * (d + 1)


def _unpack(config: AnsatzConfig, theta: np.ndarray):
    """Per layer, per qubit (z_first, x, z_last) triples in time order."""
    layers = []
    idx = 0
    for layer in range(config.depth + 1):
        full = config.variant == "full_euler" and layer > 0
        per_qubit = []
        for _ in range(config.n_qubits):
            if full:
                z_first, x, z_last = theta[idx], theta[idx + 1], theta[idx + 2]
                idx += 3
            else:
                z_first = 0.0
                x, z_last = theta[idx], theta[idx + 1]
                idx += 2
            per_qubit.append((z_first, x, z_last))
        layers.append(per_qubit)
    return layers


def initial_parameters(config: AnsatzConfig, rng) -> np.ndarray:
    """Z angles standard-normal, X angles pi/2, drawn in canonical order."""
    values = []
    for layer in range(config.depth + 1):
        full = config.variant == "full_euler" and layer > 0
        for _ in range(config.n_qubits):
            if full:
                values.append(float(rng.normal()))
            values.append(math.pi / 2)
            values.append(float(rng.normal()))
    return np.array(values)


def _euler_layer(rho, per_qubit, noise: NoiseModel):
    for q, (z_first, x, z_last) in enumerate(per_qubit):
        rho = apply_euler(rho, q, z_last, x, z_first)
    if noise.kind == "thermal":
        rho = apply_thermal_noise(rho, noise.tau_single, noise)
    elif noise.kind == "depolarizing":
        for q in range(rho.n_qubits):
            rho = apply_depolarizing(rho, (q,), noise.xi)
    return rho


def _entangler_step(rho, config: AnsatzConfig, noise: NoiseModel):
    spec = config.entangler
    for layer_pairs, unitary in zip(spec.layers, entangler_unitaries(spec, rho.n_qubits)):
        rho = apply_unitary(rho, unitary)
        if noise.kind == "depolarizing":
            for pair in layer_pairs:
                rho = apply_depolarizing(rho, pair, noise.xi)
    if noise.kind == "thermal":
        rho = apply_thermal_noise(rho, noise.tau_entangler, noise)
    return rho


def prepare_state(
    config: AnsatzConfig, theta, noise: NoiseModel | None = None
) -> DensityMatrix:
    """Run the interleaved circuit with noise after each layer."""
    noise = noise if noise is not None else NoiseModel.none()
    theta = np.asarray(theta, dtype=float)
    expected = parameter_count(config)
    if theta.shape != (expected,):
        raise ValueError(f"expected {expected} parameters, got {theta.shape}")
    layers = _unpack(config, theta)
    rho = init_state(config.n_qubits)
    rho = _euler_layer(rho, layers[0], noise)
    for layer in range(1, config.depth + 1):
        rho = _entangler_step(rho, config, noise)
        rho = _euler_layer(rho, layers[layer], noise)
    return rho


def parameters_to_json(theta) -> str:
    return json.dumps([float(v) for v in np.asarray(theta).ravel()])


def parameters_from_json(text: str) -> np.ndarray:
    values = json.loads(text)
    if not isinstance(values, list) or not all(
        isinstance(v, (int, float)) for v in values
    ):
        raise ValueError("expected a JSON array of numbers")
    return np.array([float(v) for v in values])
