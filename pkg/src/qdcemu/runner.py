"""Configuration-driven sweeps over fiber types and fiber steps.

A config is a JSON object::

    {
      "id": "cnot-cat-1",                       # optional experiment id
      "experiment": {"kind": "remote_cnot", "protocol": "CatComm", "control_init": 1},
      "noise": {"kappa_transducer": 0.1, "kappa_fiber": 0.1, "dt": 1.0,
                "transducer_collisions": 1, "fiber_side": "receiver_only"},
      "fiber_types": ["G652D", "G654D", "G655D"],
      "steps_range": [1, 10],
      "shots": "exact",                         # or a positive integer
      "seed": 1234,
      "output": {"csv": "out.csv", "json": "out.json"},
      "workers": 1,
      "fiber_catalog": null                     # optional JSON {name: alpha}
    }

Experiment kinds are ``remote_cnot`` (protocol, control_init), ``cross_bell``,
``grover`` (marked) and ``qft`` (input_index, cat_sessions). Step 0 is the
noiseless baseline: the monolithic circuit for the algorithms and a
noiseless link for the remote CNOT.
"""

from __future__ import annotations

import csv
import json
import math
import zlib
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Any, Mapping, Sequence, TextIO

import numpy as np

from .algorithms import (
    DISTRIBUTED,
    MONOLITHIC,
    cross_bell_layout,
    cross_qpu_bell,
    grover2,
    monolithic_bell,
    qft,
    qft_ideal_state,
)
from .circuit import Circuit
from .collision import (
    RECEIVER_ONLY,
    SYMMETRIC,
    FiberCatalogEntry,
    NoiseLinkSpec,
    distance_for_steps,
    load_fiber_catalog,
    normalize_fiber_name,
)
from .engine import DensityMatrix, evolve_exact, reduced, sample_shots
from .errors import ConfigValidationError
from .remote import CAT_COMM, PROTOCOLS, remote_cnot_circuit
from .tomography import fidelity, run_tomography

EXPERIMENT_KINDS = ("remote_cnot", "cross_bell", "grover", "qft")
EXACT = "exact"
SHOTS = "shots"


@dataclass(frozen=True)
class ExperimentSpec:
    kind: str
    protocol: str = CAT_COMM
    control_init: int | None = None
    marked: str | None = None
    input_index: int = 0
    cat_sessions: bool = False

    def default_id(self) -> str:
        if self.kind == "remote_cnot":
            return f"remote_cnot-{self.protocol}-c{self.control_init}"
        if self.kind == "grover":
            return f"grover-{self.marked}"
        if self.kind == "qft":
            return f"qft-in{self.input_index}" + ("-sessions" if self.cat_sessions else "")
        return self.kind


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: ExperimentSpec
    noise: NoiseLinkSpec = field(default_factory=NoiseLinkSpec)
    fiber_types: tuple[str, ...] = ("G652D",)
    steps_range: tuple[int, int] = (1, 10)
    shots: int | None = None  # None means exact
    seed: int = 0
    output_csv: str | None = None
    output_json: str | None = None
    workers: int = 1
    fiber_catalog: str | None = None
    id: str = ""

    @property
    def mode(self) -> str:
        return EXACT if self.shots is None else SHOTS

    @property
    def experiment_id(self) -> str:
        return self.id or self.experiment.default_id()

    def catalog(self) -> dict[str, FiberCatalogEntry]:
        return load_fiber_catalog(self.fiber_catalog)

    def steps(self) -> range:
        return range(self.steps_range[0], self.steps_range[1] + 1)

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "ExperimentConfig":
        return _parse_config(data)

    @classmethod
    def load(cls, path: str | Path) -> "ExperimentConfig":
        try:
            with open(path) as fh:
                data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigValidationError("", f"invalid JSON: {exc}") from exc
        except OSError as exc:
            raise ConfigValidationError("", f"cannot read config: {exc}") from exc
        return _parse_config(data)


@dataclass(frozen=True)
class ExperimentRecord:
    experiment_id: str
    protocol: str
    control_init: int | None
    fiber_type: str
    alpha: float
    kappa_t: float
    kappa_f: float
    dt: float
    steps: int
    distance_km: float
    mode: str
    shots: int | None
    seed: int
    metric_name: str
    metric_value: float
    stderr: float | None

    def sort_key(self):
        return (self.experiment_id, self.fiber_type, self.steps, self.metric_name)


RECORD_FIELDS = tuple(f.name for f in fields(ExperimentRecord))


# ---------------------------------------------------------------------------
# config parsing


def _require(cond: bool, path: str, message: str):
    if not cond:
        raise ConfigValidationError(path, message)


def _is_int(v) -> bool:
    return isinstance(v, int) and not isinstance(v, bool)


def _is_num(v) -> bool:
    return isinstance(v, (int, float)) and not isinstance(v, bool)


def _parse_experiment(raw) -> ExperimentSpec:
    _require(isinstance(raw, Mapping), "experiment", "must be an object")
    kind = raw.get("kind")
    _require(kind in EXPERIMENT_KINDS, "experiment.kind", f"must be one of {', '.join(EXPERIMENT_KINDS)}")
    allowed = {"kind"}
    exp_spec = ExperimentSpec(kind)
    if kind == "remote_cnot":
        allowed |= {"protocol", "control_init"}
        protocol = raw.get("protocol", CAT_COMM)
        _require(protocol in PROTOCOLS, "experiment.protocol", f"must be one of {', '.join(PROTOCOLS)}")
        ci = raw.get("control_init", 1)
        _require(_is_int(ci) and ci in (0, 1), "experiment.control_init", "must be 0 or 1")
        exp_spec = replace(exp_spec, protocol=protocol, control_init=ci)
    elif kind == "grover":
        allowed |= {"marked"}
        marked = raw.get("marked")
        _require(marked in ("00", "01", "10", "11"), "experiment.marked", "must be one of 00, 01, 10, 11")
        exp_spec = replace(exp_spec, marked=marked)
    elif kind == "qft":
        allowed |= {"input_index", "cat_sessions"}
        idx = raw.get("input_index", 0)
        _require(_is_int(idx) and 0 <= idx < 32, "experiment.input_index", "must be an integer in 0..31")
        sessions = raw.get("cat_sessions", False)
        _require(isinstance(sessions, bool), "experiment.cat_sessions", "must be a boolean")
        exp_spec = replace(exp_spec, input_index=idx, cat_sessions=sessions)
    for key in raw:
        _require(key in allowed, f"experiment.{key}", f"unknown field for kind {kind}")
    return exp_spec


_NOISE_FIELDS = ("kappa_transducer", "kappa_fiber", "dt", "transducer_collisions", "fiber_side")


def _parse_noise(raw) -> NoiseLinkSpec:
    if raw is None:
        return NoiseLinkSpec()
    _require(isinstance(raw, Mapping), "noise", "must be an object")
    for key in raw:
        _require(key in _NOISE_FIELDS, f"noise.{key}", "unknown field (fiber steps and type come from the sweep)")
    kw = {}
    for key in ("kappa_transducer", "kappa_fiber"):
        if key in raw:
            _require(_is_num(raw[key]) and raw[key] >= 0, f"noise.{key}", "must be a number >= 0")
            kw[key] = float(raw[key])
    if "dt" in raw:
        _require(_is_num(raw["dt"]) and raw["dt"] > 0, "noise.dt", "must be a number > 0")
        kw["dt"] = float(raw["dt"])
    if "transducer_collisions" in raw:
        v = raw["transducer_collisions"]
        _require(_is_int(v) and v >= 0, "noise.transducer_collisions", "must be an integer >= 0")
        kw["transducer_collisions"] = v
    if "fiber_side" in raw:
        _require(raw["fiber_side"] in (RECEIVER_ONLY, SYMMETRIC), "noise.fiber_side",
                 f"must be {RECEIVER_ONLY!r} or {SYMMETRIC!r}")
        kw["fiber_side"] = raw["fiber_side"]
    return NoiseLinkSpec(**kw)


_TOP_FIELDS = {"id", "experiment", "noise", "fiber_types", "steps_range", "shots", "seed",
               "output", "workers", "fiber_catalog"}


def _parse_config(data) -> ExperimentConfig:
    _require(isinstance(data, Mapping), "", "config must be a JSON object")
    for key in data:
        _require(key in _TOP_FIELDS, key, "unknown field")
    _require("experiment" in data, "experiment", "missing")
    exp = _parse_experiment(data["experiment"])
    noise = _parse_noise(data.get("noise"))

    catalog_path = data.get("fiber_catalog")
    _require(catalog_path is None or isinstance(catalog_path, str), "fiber_catalog", "must be a path string")
    try:
        catalog = load_fiber_catalog(catalog_path)
    except Exception as exc:  # unreadable file or a bad alpha inside it
        raise ConfigValidationError("fiber_catalog", str(exc)) from exc

    fibers = data.get("fiber_types", ["G652D"])
    _require(isinstance(fibers, list) and fibers, "fiber_types", "must be a non-empty list")
    names = []
    for i, f in enumerate(fibers):
        _require(isinstance(f, str), f"fiber_types[{i}]", "must be a string")
        key = normalize_fiber_name(f)
        _require(key in catalog, f"fiber_types[{i}]", f"unknown fiber type {f!r}")
        _require(key not in names, f"fiber_types[{i}]", f"duplicate fiber type {f!r}")
        names.append(key)

    sr = data.get("steps_range", [1, 10])
    _require(isinstance(sr, list) and len(sr) == 2, "steps_range", "must be [min, max]")
    for i in (0, 1):
        _require(_is_int(sr[i]) and sr[i] >= 0, f"steps_range[{i}]", "must be an integer >= 0")
    _require(sr[0] <= sr[1], "steps_range", "min must not exceed max")

    shots = data.get("shots", EXACT)
    if shots == EXACT:
        shots = None
    else:
        _require(_is_int(shots) and shots >= 1, "shots", 'must be "exact" or an integer >= 1')

    seed = data.get("seed", 0)
    _require(_is_int(seed) and seed >= 0, "seed", "must be an integer >= 0")
    workers = data.get("workers", 1)
    _require(_is_int(workers) and workers >= 1, "workers", "must be an integer >= 1")

    out = data.get("output", {}) or {}
    _require(isinstance(out, Mapping), "output", "must be an object")
    for key, val in out.items():
        _require(key in ("csv", "json"), f"output.{key}", "unknown output kind")
        _require(val is None or isinstance(val, str), f"output.{key}", "must be a path string")

    ident = data.get("id", "")
    _require(isinstance(ident, str), "id", "must be a string")
    return ExperimentConfig(
        experiment=exp,
        noise=noise,
        fiber_types=tuple(names),
        steps_range=(sr[0], sr[1]),
        shots=shots,
        seed=seed,
        output_csv=out.get("csv"),
        output_json=out.get("json"),
        workers=workers,
        fiber_catalog=catalog_path,
        id=ident,
    )


# ---------------------------------------------------------------------------
# point evaluation


def point_seed(seed: int, fiber_type: str, steps: int) -> int:
    """seed XOR a stable hash of the sweep point (independent of PYTHONHASHSEED)."""
    return seed ^ zlib.crc32(f"{fiber_type}:{steps}".encode())


def point_noise(config: ExperimentConfig, fiber_type: str, steps: int) -> NoiseLinkSpec:
    if steps == 0:
        return replace(config.noise, fiber_type=fiber_type, transducer_collisions=0, fiber_steps=0)
    return replace(config.noise, fiber_type=fiber_type, fiber_steps=steps)


@dataclass
class PointCircuit:
    """The circuit of one sweep point and the qubits its metric reads, MSB first."""

    circuit: Circuit
    readout: tuple[int, ...]
    layout: str


def build_point(config: ExperimentConfig, fiber_type: str, steps: int) -> PointCircuit:
    exp = config.experiment
    noise = point_noise(config, fiber_type, steps)
    layout = MONOLITHIC if steps == 0 else DISTRIBUTED
    if exp.kind == "remote_cnot":
        rc = remote_cnot_circuit(exp.protocol, exp.control_init, noise)
        return PointCircuit(rc.circuit, (rc.control_out, rc.target), DISTRIBUTED)
    if exp.kind == "cross_bell":
        if layout == MONOLITHIC:
            alg = monolithic_bell()
        else:
            topo, labels = cross_bell_layout()
            proc = topo.processing_qubits()
            alg = cross_qpu_bell(topo, proc[0], proc[-1], noise, labels)
    elif exp.kind == "grover":
        alg = grover2(exp.marked, layout, noise)
    else:
        alg = qft(5, layout, noise, input_index=exp.input_index, cat_sessions=exp.cat_sessions)
    return PointCircuit(alg.circuit, alg.logical_qubits, layout)


def with_readout(pc: PointCircuit) -> tuple[Circuit, list[int]]:
    circ = pc.circuit.copy()
    bits = []
    for q in pc.readout:
        c = circ.new_clbit()
        circ.measure(q, c)
        bits.append(c)
    return circ, bits


def _binomial_stderr(p: float, shots: int) -> float:
    return math.sqrt(max(p * (1 - p), 0.0) / shots)


def _probabilities(pc: PointCircuit, keys: Sequence[str], shots: int | None, seed: int):
    """[(key, value, stderr)] for the readout register."""
    if shots is None:
        rho = reduced(evolve_exact(pc.circuit), pc.readout)
        return [(k, rho.probability(k), None) for k in keys]
    circ, bits = with_readout(pc)
    counts = sample_shots(circ, shots, seed).marginal(bits, circ.num_clbits)
    out = []
    for k in keys:
        p = counts.get(k, 0) / shots
        out.append((k, p, _binomial_stderr(p, shots)))
    return out


def evaluate_point(config: ExperimentConfig, fiber_type: str, steps: int) -> list[tuple[str, float, float | None]]:
    """Metric triples (name, value, stderr) for one sweep point."""
    exp = config.experiment
    pc = build_point(config, fiber_type, steps)
    seed = point_seed(config.seed, fiber_type, steps)
    if exp.kind == "remote_cnot":
        ideal = f"{exp.control_init}{exp.control_init}"
        (_, p, err), = _probabilities(pc, [ideal], config.shots, seed)
        return [("success_probability", p, err)]
    if exp.kind == "cross_bell":
        res = _probabilities(pc, ["00", "11"], config.shots, seed)
        return [(f"p{k}", p, err) for k, p, err in res]
    if exp.kind == "grover":
        (_, p, err), = _probabilities(pc, [exp.marked], config.shots, seed)
        return [("p_marked", p, err)]
    rho = reduced(evolve_exact(pc.circuit), pc.readout)
    tomo = run_tomography(rho, config.shots, seed if config.shots is not None else None)
    target = DensityMatrix.from_statevector(qft_ideal_state(5, exp.input_index))
    return [("fidelity", fidelity(tomo.rho_hat, target), None)]


def _point_records(config: ExperimentConfig, fiber_type: str, steps: int) -> list[ExperimentRecord]:
    catalog = config.catalog()
    alpha = catalog[fiber_type].alpha
    exp = config.experiment
    if exp.kind == "remote_cnot":
        protocol = exp.protocol
    else:
        protocol = MONOLITHIC if steps == 0 else CAT_COMM
    seed = config.seed if config.shots is None else point_seed(config.seed, fiber_type, steps)
    records = []
    for name, value, err in evaluate_point(config, fiber_type, steps):
        records.append(ExperimentRecord(
            experiment_id=config.experiment_id,
            protocol=protocol,
            control_init=exp.control_init,
            fiber_type=fiber_type,
            alpha=alpha,
            kappa_t=config.noise.kappa_transducer,
            kappa_f=config.noise.kappa_fiber,
            dt=config.noise.dt,
            steps=steps,
            distance_km=distance_for_steps(steps, config.noise.kappa_fiber, alpha),
            mode=config.mode,
            shots=config.shots,
            seed=seed,
            metric_name=name,
            metric_value=float(value),
            stderr=err,
        ))
    return records


def _run_point(args):
    return _point_records(*args)


def run(config: ExperimentConfig, workers: int | None = None) -> list[ExperimentRecord]:
    """Evaluate every (fiber type, step) point; records come back sorted."""
    points = [(config, f, s) for f in config.fiber_types for s in config.steps()]
    workers = config.workers if workers is None else workers
    if workers > 1 and len(points) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            chunks = list(pool.map(_run_point, points))
    else:
        chunks = [_run_point(p) for p in points]
    records = [r for chunk in chunks for r in chunk]
    return sorted(records, key=ExperimentRecord.sort_key)


# ---------------------------------------------------------------------------
# export


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return format(v, ".6g")
    return str(v)


def check_distance(record: ExperimentRecord, rel: float = 1e-9) -> None:
    expected = distance_for_steps(record.steps, record.kappa_f, record.alpha)
    if not math.isclose(record.distance_km, expected, rel_tol=rel, abs_tol=1e-12):
        raise ValueError(f"distance_km {record.distance_km} inconsistent with steps/kappa_f/alpha ({expected})")


def export_csv(records: Sequence[ExperimentRecord], path: str | Path) -> None:
    """Header of field names, one row per record, floats to 6 significant digits."""
    with open(path, "w", newline="") as fh:
        write_csv(records, fh)


def write_csv(records: Sequence[ExperimentRecord], fh: TextIO) -> None:
    for r in records:
        check_distance(r)
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(RECORD_FIELDS)
    for r in records:
        w.writerow([_fmt(getattr(r, f)) for f in RECORD_FIELDS])


def read_csv(path: str | Path) -> list[dict[str, str]]:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def export_json(records: Sequence[ExperimentRecord], path: str | Path, config: ExperimentConfig | None = None) -> None:
    blob: dict[str, Any] = {"records": [asdict(r) for r in records]}
    if config is not None:
        blob["experiment_id"] = config.experiment_id
        blob["mode"] = config.mode
    with open(path, "w") as fh:
        json.dump(blob, fh, indent=1, sort_keys=True)
        fh.write("\n")


def series(records: Sequence[ExperimentRecord], fiber_type: str, metric_name: str) -> np.ndarray:
    """Metric values of one fiber/metric in step order."""
    rows = sorted((r for r in records if r.fiber_type == fiber_type and r.metric_name == metric_name),
                  key=lambda r: r.steps)
    return np.array([r.metric_value for r in rows])
