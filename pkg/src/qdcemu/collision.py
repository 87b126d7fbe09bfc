"""Collision-model interconnect noise.

Each collision couples a system qubit to a fresh environment qubit through
the excitation-exchange Hamiltonian ``kappa * (s+ e- + s- e+)`` for a time
``dt``. Tracing the environment out afterwards gives an amplitude-damping
channel with ``eta = sin^2(kappa * dt)``. Environment qubits are recycled with
Reset, which is exactly equivalent to drawing a new one per collision.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .circuit import Circuit, Gate, instruction_qubits
from .errors import NegativeCoupling, NonPositiveAlpha, QubitRoleViolation

FIBER_CATALOG: dict[str, float] = {
    "G652D": 0.0415,
    "G654D": 0.0392,
    "G655D": 0.0507,
}
# G.654.E is listed under that name in some sweeps; same low-loss entry
FIBER_ALIASES = {"G654E": "G654D"}

RECEIVER_ONLY = "receiver_only"
SYMMETRIC = "symmetric"


@dataclass(frozen=True)
class FiberCatalogEntry:
    name: str
    alpha: float  # km^-1

    def __post_init__(self):
        if not self.alpha > 0:
            raise NonPositiveAlpha(f"fiber {self.name}: alpha must be > 0, got {self.alpha}")


def normalize_fiber_name(name: str) -> str:
    key = name.upper().replace("-", "").replace(".", "").replace("_", "")
    return FIBER_ALIASES.get(key, key)


def load_fiber_catalog(path: str | Path | None = None) -> dict[str, FiberCatalogEntry]:
    """Built-in catalog, optionally extended/overridden by a JSON {name: alpha} file."""
    table = dict(FIBER_CATALOG)
    if path is not None:
        with open(path) as fh:
            extra = json.load(fh)
        table.update({normalize_fiber_name(k): float(v) for k, v in extra.items()})
    return {name: FiberCatalogEntry(name, alpha) for name, alpha in table.items()}


def fiber_alpha(fiber_type: str | float, catalog: dict[str, FiberCatalogEntry] | None = None) -> float:
    if isinstance(fiber_type, (int, float)):
        alpha = float(fiber_type)
        if not alpha > 0:
            raise NonPositiveAlpha(f"alpha must be > 0, got {alpha}")
        return alpha
    catalog = catalog or load_fiber_catalog()
    key = normalize_fiber_name(fiber_type)
    if key not in catalog:
        raise KeyError(f"unknown fiber type {fiber_type!r}")
    return catalog[key].alpha


@dataclass(frozen=True)
class NoiseLinkSpec:
    kappa_transducer: float = 0.1
    kappa_fiber: float = 0.1
    dt: float = 1.0
    fiber_steps: int = 0
    transducer_collisions: int = 1
    fiber_side: str = RECEIVER_ONLY
    fiber_type: str | float = "G652D"

    def __post_init__(self):
        if self.kappa_transducer < 0 or self.kappa_fiber < 0:
            raise NegativeCoupling("couplings must be >= 0")
        if not self.dt > 0:
            raise ValueError(f"dt must be > 0, got {self.dt}")
        if self.fiber_steps < 0 or self.transducer_collisions < 0:
            raise ValueError("fiber_steps and transducer_collisions must be >= 0")
        if self.fiber_side not in (RECEIVER_ONLY, SYMMETRIC):
            raise ValueError(f"fiber_side must be {RECEIVER_ONLY!r} or {SYMMETRIC!r}")

    @classmethod
    def noiseless(cls) -> "NoiseLinkSpec":
        return cls(transducer_collisions=0, fiber_steps=0)

    @property
    def is_noiseless(self) -> bool:
        t_off = self.transducer_collisions == 0 or self.kappa_transducer == 0
        f_off = self.fiber_steps == 0 or self.kappa_fiber == 0
        return t_off and f_off

    @property
    def alpha(self) -> float:
        return fiber_alpha(self.fiber_type)

    def with_steps(self, steps: int) -> "NoiseLinkSpec":
        return replace(self, fiber_steps=steps)


def collision_unitary(kappa: float, dt: float = 1.0) -> np.ndarray:
    """exp(-i H dt) for H = kappa (s+ e- + s- e+), in basis |s e>.

    Built from the closed form: identity on |00>, |11> and a rotation by
    ``kappa * dt`` inside span{|01>, |10>}.
    """
    if kappa < 0:
        raise NegativeCoupling(f"kappa must be >= 0, got {kappa}")
    if not dt > 0:
        raise ValueError(f"dt must be > 0, got {dt}")
    theta = kappa * dt
    c, s = math.cos(theta), math.sin(theta)
    u = np.eye(4, dtype=complex)
    u[1, 1] = u[2, 2] = c
    u[1, 2] = u[2, 1] = -1j * s
    return u


def collision_gate(kappa: float, dt: float, system: int, env: int) -> Gate:
    return Gate("COLLISION", collision_unitary(kappa, dt), (system, env), (kappa * dt,))


def damping_parameter(kappa: float, dt: float = 1.0) -> float:
    """Decay probability of one collision: sin^2(kappa * dt)."""
    return math.sin(kappa * dt) ** 2


def amplitude_damping_kraus(eta: float) -> list[np.ndarray]:
    if not 0.0 <= eta <= 1.0:
        raise ValueError(f"eta must be in [0, 1], got {eta}")
    k0 = np.array([[1, 0], [0, math.sqrt(1 - eta)]], dtype=complex)
    k1 = np.array([[0, math.sqrt(eta)], [0, 0]], dtype=complex)
    return [k0, k1]


def analytic_excited_population(n: int, kappa: float, dt: float = 1.0) -> float:
    """Survival of |1> after ``n`` collisions with fresh |0> environments."""
    if n < 0:
        raise ValueError("n must be >= 0")
    return math.cos(kappa * dt) ** (2 * n)


def lindblad_excited_population(n: int, kappa: float, dt: float = 1.0) -> float:
    """Continuous-time limit exp(-n (kappa dt)^2) of the same decay."""
    return math.exp(-n * (kappa * dt) ** 2)


def distance_for_steps(n: int, kappa: float, alpha: float) -> float:
    """Fiber length in km reached after ``n`` collisions: kappa^2 n / alpha."""
    if n < 0:
        raise ValueError("n must be >= 0")
    if not alpha > 0:
        raise NonPositiveAlpha(f"alpha must be > 0, got {alpha}")
    return kappa**2 * n / alpha


def _collide(circuit: Circuit, kappa: float, dt: float, system: int, env: int, times: int):
    for _ in range(times):
        circuit.append(collision_gate(kappa, dt, system, env))
        circuit.reset(env)


def insert_link_noise(
    circuit: Circuit,
    comm_a: int,
    env_a: int,
    comm_b: int,
    env_b: int,
    noise: NoiseLinkSpec,
) -> Circuit:
    """Append transducer then fiber collisions on a freshly shared pair.

    Transducer collisions hit both communication qubits; fiber collisions hit
    only ``comm_b`` unless ``noise.fiber_side`` is symmetric. Every collision is
    followed by a Reset of its environment qubit.
    """
    env = {env_a, env_b}
    if len(env) != 2 or env & {comm_a, comm_b} or comm_a == comm_b:
        raise QubitRoleViolation("environment and communication qubits must all be distinct")
    for ins in circuit:
        touched = set(instruction_qubits(ins))
        if len(touched) > 1 and touched & env and not _is_env_collision(ins, env):
            raise QubitRoleViolation(f"environment qubit used in a non-collision gate: {ins}")

    _collide(circuit, noise.kappa_transducer, noise.dt, comm_a, env_a, noise.transducer_collisions)
    _collide(circuit, noise.kappa_transducer, noise.dt, comm_b, env_b, noise.transducer_collisions)
    if noise.fiber_side == SYMMETRIC:
        _collide(circuit, noise.kappa_fiber, noise.dt, comm_a, env_a, noise.fiber_steps)
    _collide(circuit, noise.kappa_fiber, noise.dt, comm_b, env_b, noise.fiber_steps)
    return circuit


def _is_env_collision(ins, env) -> bool:
    return isinstance(ins, Gate) and ins.name == "COLLISION" and ins.qubits[1] in env
