import collections
import dataclasses
import logging
from concurrent.futures import ThreadPoolExecutor

import numpy as np
import stim

from arc.circuit import readout_layout
from arc.model import CircuitIR, CountsRecord, NoiseModel, OpKind, Pauli, SimulationMethod, SINGLE_QUBIT_GATES
from arc.utils import derive_seeds, split_shots

log = logging.getLogger(__name__)

STIM_GATES = {
    OpKind.H: "H",
    OpKind.S: "S",
    OpKind.SDG: "S_DAG",
    OpKind.X: "X",
    OpKind.Y: "Y",
    OpKind.Z: "Z",
    OpKind.I: "I",
    OpKind.CX: "CX",
    OpKind.M: "M",
    OpKind.R: "R",
}
CONTROLLED = {Pauli.X: "CX", Pauli.Y: "CY", Pauli.Z: "CZ"}


@dataclasses.dataclass(frozen=True)
class Fault:
    """A single fault: a pauli inserted at a tick, or a flip of a recorded classical bit."""

    tick: int | None = None  # index of the TICK after which the pauli is inserted
    qubit: int | None = None
    pauli: Pauli | None = None
    clbit: int | None = None  # readout fault on this classical bit

    @classmethod
    def gap(cls, tick: int, qubit: int, pauli: Pauli) -> "Fault":
        return cls(tick=tick, qubit=qubit, pauli=Pauli(pauli))

    @classmethod
    def readout(cls, clbit: int) -> "Fault":
        return cls(clbit=clbit)

    @property
    def is_readout(self) -> bool:
        return self.clbit is not None


def to_stim(circuit: CircuitIR, noise: NoiseModel | None = None) -> stim.Circuit:
    """Converts a circuit to stim, attaching the noise channels.

    Single qubit gates and conditional paulis are followed by single qubit depolarizing noise, CX by two qubit
    depolarizing noise, measurements are preceded by an x flip and idle placeholders carry only idle noise.

    :param circuit: the circuit
    :param noise: the noise model, noiseless when not given
    :return: the stim circuit, with one measurement per classical bit in order
    """
    noise = noise or NoiseModel()
    out = stim.Circuit()
    measured = 0
    for op in circuit.ops:
        match op.kind:
            case OpKind.TICK:
                out.append("TICK")
            case OpKind.BARRIER:
                pass
            case OpKind.I:
                out.append("I", list(op.qubits))
                p = noise.idle_for(op.qubits[0])
                if p:
                    out.append("DEPOLARIZE1", list(op.qubits), p)
            case OpKind.CX:
                out.append("CX", list(op.qubits))
                if noise.p2:
                    out.append("DEPOLARIZE2", list(op.qubits), noise.p2)
            case OpKind.M:
                if noise.p_meas:
                    out.append("X_ERROR", list(op.qubits), noise.p_meas)
                out.append("M", list(op.qubits))
                measured += 1
            case OpKind.R:
                out.append("R", list(op.qubits))
            case OpKind.CPAULI:
                target = stim.target_rec(op.clbit - measured)  # type: ignore[operator]
                out.append(CONTROLLED[op.pauli], [target, op.qubits[0]])  # type: ignore[index]
                if noise.p1:
                    out.append("DEPOLARIZE1", list(op.qubits), noise.p1)
            case _:
                out.append(STIM_GATES[op.kind], list(op.qubits))
                if noise.p1 and op.kind in SINGLE_QUBIT_GATES:
                    out.append("DEPOLARIZE1", list(op.qubits), noise.p1)
    return out


def _sample_frame(program: stim.Circuit, shots: int, seed: int) -> np.ndarray:
    return program.compile_sampler(seed=seed).sample(shots)


def _sample_tableau(program: stim.Circuit, shots: int, seed: int) -> np.ndarray:
    rng = np.random.default_rng(seed)
    rows = []
    for shot_seed in rng.integers(0, 2**63, size=shots):
        sim = stim.TableauSimulator(seed=int(shot_seed))
        sim.do(program)
        rows.append(sim.current_measurement_record())
    return np.array(rows, dtype=np.bool_).reshape(shots, program.num_measurements)


def sample(
    circuit: CircuitIR,
    noise: NoiseModel,
    shots: int,
    seed: int,
    workers: int = 1,
    method: SimulationMethod = SimulationMethod.FRAME,
) -> np.ndarray:
    """Samples noisy shots of a circuit.

    Shots are split over the workers, each with its own seed derived from (seed, worker index), and the results are
    concatenated in worker order.

    :param circuit: the circuit
    :param noise: the noise model
    :param shots: the number of shots
    :param seed: the seed
    :param workers: the number of parallel workers
    :param method: the sampling method
    :return: a (shots, clbits) boolean matrix
    """
    if shots < 1:
        raise ValueError(f"shots must be at least 1, got {shots}")
    program = to_stim(circuit, noise)
    run = _sample_tableau if SimulationMethod(method) == SimulationMethod.TABLEAU else _sample_frame
    parts = split_shots(shots, workers)
    seeds = derive_seeds(seed, len(parts))
    if log.isEnabledFor(logging.DEBUG):  # pragma: no cover
        log.debug(f"Sampling {shots} shots of '{circuit.basis}' with {method} in {len(parts)} part(s)")
    if len(parts) == 1:
        return run(program, parts[0], seeds[0])
    with ThreadPoolExecutor(max_workers=len(parts)) as pool:
        results = list(pool.map(run, [program] * len(parts), parts, seeds))
    return np.vstack(results)


def simulate(
    circuit: CircuitIR,
    noise: NoiseModel,
    shots: int,
    seed: int,
    workers: int = 1,
    method: SimulationMethod = SimulationMethod.FRAME,
) -> CountsRecord:
    """Samples noisy shots of a circuit and counts the output strings.

    :return: the counts record, its strings in sorted order
    """
    bits = sample(circuit, noise, shots, seed, workers=workers, method=method)
    counts = collections.Counter(readout_layout(circuit).render_many(bits))
    return CountsRecord(
        counts=dict(sorted(counts.items())),
        shots=shots,
        seed=seed,
        basis=circuit.basis,
        logical=circuit.options.logical,
        method=method,
        noise=noise,
    )


def fault_locations(circuit: CircuitIR) -> list[Fault]:
    """Lists every x, y and z fault at every tick on every used qubit, then every readout fault."""
    qubits = circuit.used_qubits
    faults = [
        Fault.gap(tick, q, pauli) for tick in range(len(circuit.tick_times)) for q in qubits for pauli in Pauli
    ]
    return faults + [Fault.readout(clbit) for clbit in range(len(circuit.clbits))]


def _check_fault(circuit: CircuitIR, fault: Fault, ticks: int) -> None:
    if fault.is_readout:
        if not 0 <= fault.clbit < len(circuit.clbits):  # type: ignore[operator]
            raise ValueError(f"Readout fault on classical bit {fault.clbit} which does not exist")
        return
    if fault.tick is None or fault.qubit is None or fault.pauli is None:
        raise ValueError(f"Fault {fault} needs a tick, a qubit and a pauli")
    if not 0 <= fault.tick < ticks:
        raise ValueError(f"Fault at tick {fault.tick} but the circuit has {ticks} ticks")
    if not 0 <= fault.qubit < circuit.num_qubits:
        raise ValueError(f"Fault on qubit {fault.qubit} which is not in the circuit")


def propagate_faults(circuit: CircuitIR, faults: list[Fault]) -> np.ndarray:
    """Propagates many single faults through the noiseless circuit at once.

    Each fault is a column of a pauli frame; the frame records which classical bits it flips relative to the
    noiseless reference.

    :param circuit: the circuit
    :param faults: the faults
    :return: a (clbits, faults) boolean matrix of flipped bits
    :raises: ValueError for a fault at a location the circuit does not have
    """
    ticks = len(circuit.tick_times)
    injections: dict[int, list[tuple[int, int, Pauli]]] = collections.defaultdict(list)
    misreads: dict[int, list[int]] = collections.defaultdict(list)
    for column, fault in enumerate(faults):
        _check_fault(circuit, fault, ticks)
        if fault.is_readout:
            misreads[fault.clbit].append(column)  # type: ignore[index]
        else:
            injections[fault.tick].append((column, fault.qubit, fault.pauli))  # type: ignore[index,arg-type]

    x = np.zeros((circuit.num_qubits, len(faults)), dtype=np.bool_)
    z = np.zeros_like(x)
    record = np.zeros((len(circuit.clbits), len(faults)), dtype=np.bool_)
    tick = 0
    for op in circuit.ops:
        match op.kind:
            case OpKind.H:
                q = op.qubits[0]
                x[q], z[q] = z[q].copy(), x[q].copy()
            case OpKind.S | OpKind.SDG:
                q = op.qubits[0]
                z[q] ^= x[q]
            case OpKind.CX:
                c, t = op.qubits
                x[t] ^= x[c]
                z[c] ^= z[t]
            case OpKind.M:
                q = op.qubits[0]
                record[op.clbit] = x[q]
                record[op.clbit, misreads.get(op.clbit, [])] ^= True  # type: ignore[arg-type]
                z[q] = False
            case OpKind.R:
                q = op.qubits[0]
                x[q] = False
                z[q] = False
            case OpKind.CPAULI:
                q = op.qubits[0]
                flip = record[op.clbit]
                if op.pauli in (Pauli.X, Pauli.Y):
                    x[q] ^= flip
                if op.pauli in (Pauli.Z, Pauli.Y):
                    z[q] ^= flip
            case OpKind.TICK:
                for column, qubit, pauli in injections.get(tick, []):
                    if pauli in (Pauli.X, Pauli.Y):
                        x[qubit, column] ^= True
                    if pauli in (Pauli.Z, Pauli.Y):
                        z[qubit, column] ^= True
                tick += 1
    return record


def simulate_with_fault(circuit: CircuitIR, fault: Fault | None = None) -> frozenset[int]:
    """Returns the classical bits a single fault flips relative to the noiseless run.

    :param circuit: the circuit
    :param fault: the fault, or None for no fault
    :return: the flipped classical bits
    """
    if fault is None:
        return frozenset()
    flips = propagate_faults(circuit, [fault])
    return frozenset(int(c) for c in np.flatnonzero(flips[:, 0]))
