"""Emulation of fiber-interconnected QPUs with collision-model link noise."""

from .algorithms import DISTRIBUTED, MONOLITHIC, AlgorithmCircuit, cross_qpu_bell, grover2, qft
from .circuit import Barrier, Circuit, Conditional, Gate, Measure, Reset, standard_gate
from .collision import (
    FIBER_CATALOG,
    NoiseLinkSpec,
    amplitude_damping_kraus,
    analytic_excited_population,
    collision_gate,
    collision_unitary,
    damping_parameter,
    distance_for_steps,
    insert_link_noise,
    lindblad_excited_population,
    load_fiber_catalog,
)
from .engine import (
    DensityMatrix,
    ShotResult,
    apply_gate,
    apply_kraus,
    evolve_exact,
    expectation,
    partial_trace,
    reduced,
    sample_shots,
)
from .errors import QdcError
from .qasm import export_qasm, to_qasm
from .remote import (
    CAT_COMM,
    TP1,
    RemoteGateRequest,
    build_bell_pair,
    cat_comm_cu,
    success_probability,
    tp1_cnot,
    tp1_cu,
)
from .runner import ExperimentConfig, ExperimentRecord, export_csv, run
from .tomography import fidelity, reconstruct, tomography_settings
from .topology import CouplingMap, VirtualTopology, assign_roles, partition

__version__ = "0.1.0"
