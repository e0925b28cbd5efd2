import collections
import dataclasses
import logging
import typing
from pathlib import Path

import numpy as np
import scipy.sparse

from arc.circuit import ReadoutLayout, readout_layout
from arc.model import Block, CircuitIR, CountsRecord, MeasurementKind

log = logging.getLogger(__name__)


@dataclasses.dataclass(frozen=True, order=True)
class DetectionEvent:
    """A change between consecutive values of the same check, at a round and link."""

    time: int
    link: int
    is_conjugate: bool = False
    is_final: bool = False
    is_block: bool = False  # a standard check inside a [[2,0,2]] block, compared only within the block

    def __str__(self) -> str:
        tag = "c" if self.is_conjugate else "f" if self.is_final else "b" if self.is_block else ""
        return f"({self.time},{self.link}{tag})"

    @property
    def is_internal(self) -> bool:
        """Whether the event only compares values inside a [[2,0,2]] block and so takes no part in flattening."""
        return self.is_conjugate or self.is_block


@dataclasses.dataclass(frozen=True)
class ShotSyndrome:
    """The detection events of one shot and its uncorrected logical readout."""

    events: frozenset[DetectionEvent]
    raw_logical: int


def _frame_shift(block: Block, qubits: typing.Iterable[int]) -> frozenset[int]:
    """The control bits whose parity says how the given code qubits of the block's link moved during the block."""
    shift: frozenset[int] = frozenset()
    for q in qubits:
        if q in block.controls:
            shift ^= {block.controls[q]}
    return shift


def detector_definitions(
    circuit: CircuitIR,
) -> tuple[list[DetectionEvent], list[frozenset[int]], dict[int, frozenset[int]]]:
    """Defines every detection event as the parity of a set of classical bits.

    With resets each standard value is compared with the previous standard value of its link, conjugate values with
    the previous conjugate value in the same [[2,0,2]] block, and the final parity of a link's code qubits with its
    last standard value. Without resets the auxiliaries accumulate, so each value is compared with the value two
    rounds earlier and the final parity with the last two values.

    Inside a [[2,0,2]] block the standard values of the given link form their own chain. The conjugate measurements
    move the code qubits of the given link by an unknown amount, which the neighbour measurement chosen for each of
    them records; comparisons across the block add those control bits, and with feedforward so do the comparisons
    after the correction. The unreset measurement of a neighbour is compared with its value before the block.

    :param circuit: the circuit
    :return: the events, the classical bits each event is the parity of, and the bits whose parity is the readout
        of each code qubit
    """
    nodes: list[DetectionEvent] = []
    parities: list[frozenset[int]] = []
    options = circuit.options
    history: dict[int, list[int]] = {}
    last_standard: dict[int, frozenset[int]] = {}
    last_inner: dict[tuple[int, int], int] = {}
    last_conjugate: dict[tuple[int, int | None], int] = {}
    # corrections applied by feedforward since the last value of a link
    pending: dict[int, frozenset[int]] = collections.defaultdict(frozenset)

    def add(event: DetectionEvent, parity: typing.AbstractSet[int]) -> None:
        nodes.append(event)
        parities.append(frozenset(parity))

    for clbit, info in enumerate(circuit.clbits):
        if info.kind == MeasurementKind.FINAL:
            continue
        link, r = typing.cast(int, info.link), typing.cast(int, info.round)
        block = circuit.blocks[info.block] if info.block is not None else None
        if not options.resets:
            previous = history.setdefault(link, [])
            add(DetectionEvent(r, link), {clbit} ^ ({previous[-2]} if len(previous) >= 2 else set()))
            previous.append(clbit)
        elif info.kind == MeasurementKind.CONJUGATE:
            key = (link, info.block)
            if key in last_conjugate:
                add(DetectionEvent(r, link, is_conjugate=True), {clbit, last_conjugate[key]})
            last_conjugate[key] = clbit
        elif block is not None and link == block.link and block.start < r < block.start + block.rounds - 1:
            inner = (link, typing.cast(int, info.block))
            if inner in last_inner:
                add(DetectionEvent(r, link, is_block=True), {clbit, last_inner[inner]})
            last_inner[inner] = clbit
        elif info.held:
            block = typing.cast(Block, block)
            shift = _frame_shift(block, circuit.links[link][::2])
            parity = {clbit} ^ shift
            if parity:
                add(DetectionEvent(r, link), parity)
            last_standard[link] = last_standard.get(link, frozenset()) ^ {clbit}
            if options.ff:
                pending[link] ^= shift
        else:
            parity = {clbit} ^ last_standard.get(link, frozenset()) ^ pending.pop(link, frozenset())
            if block is not None and link == block.link and r == block.start + block.rounds - 1:
                shift = _frame_shift(block, circuit.links[link][::2])
                parity ^= shift
                if options.ff:
                    pending[link] ^= shift
            add(DetectionEvent(r, link), parity)
            last_standard[link] = frozenset({clbit})

    for link, (a, _, b) in enumerate(circuit.links):
        parity = {circuit.final_clbit(a), circuit.final_clbit(b)}
        if options.resets:
            parity ^= last_standard.get(link, frozenset()) ^ pending.pop(link, frozenset())
        else:
            parity ^= set(history.get(link, [])[-2:])
        add(DetectionEvent(circuit.T, link, is_final=True), parity)

    readouts = {}
    for q in sorted({q for a, _, b in circuit.links for q in (a, b)}):
        readout = frozenset({circuit.final_clbit(q)})
        if not options.ff:
            for block in circuit.blocks:
                readout ^= _frame_shift(block, [q])
        readouts[q] = readout
    return nodes, parities, readouts


class SyndromeExtractor:
    """Turns counts strings or bit matrices of one circuit into detection events."""

    def __init__(self, circuit: CircuitIR):
        self.circuit = circuit
        self.layout: ReadoutLayout = readout_layout(circuit)
        self.nodes, self.parities, self.readouts = detector_definitions(circuit)
        self.node_index = {node: i for i, node in enumerate(self.nodes)}
        self.code_qubits = sorted(self.readouts)
        self.logical_bits = self.readouts[circuit.designated_qubit]

        rows = [i for i, parity in enumerate(self.parities) for _ in parity]
        cols = [c for parity in self.parities for c in sorted(parity)]
        self.matrix = scipy.sparse.csr_matrix(
            (np.ones(len(rows), dtype=np.int32), (rows, cols)), shape=(len(self.nodes), len(circuit.clbits))
        )
        self._readout = np.zeros((len(self.code_qubits), len(circuit.clbits)), dtype=np.int32)
        for row, q in enumerate(self.code_qubits):
            self._readout[row, list(self.readouts[q])] = 1
        self._logical = self._readout[self.code_qubits.index(circuit.designated_qubit)]

    def events_matrix(self, bits: np.ndarray) -> np.ndarray:
        """Evaluates every detector on a (shots, clbits) matrix, returning a (shots, nodes) boolean matrix."""
        bits = np.atleast_2d(np.asarray(bits, dtype=np.int32))
        if bits.shape[1] != len(self.circuit.clbits):
            raise ValueError(f"Expected {len(self.circuit.clbits)} classical bits, got {bits.shape[1]}")
        return np.asarray((self.matrix @ bits.T).T % 2, dtype=np.bool_)

    def logicals(self, bits: np.ndarray) -> np.ndarray:
        bits = np.atleast_2d(np.asarray(bits, dtype=np.int32))
        return (bits @ self._logical) % 2

    def extract_bits(self, bits: np.ndarray) -> ShotSyndrome:
        fired = self.events_matrix(bits)[0]
        events = frozenset(self.nodes[i] for i in np.flatnonzero(fired))
        return ShotSyndrome(events=events, raw_logical=int(self.logicals(bits)[0]))

    def extract(self, string: str) -> ShotSyndrome:
        """Extracts the detection events and raw logical value of a counts string.

        :param string: the counts string
        :return: the shot syndrome
        :raises: ValueError if the string does not match the circuit's readout format
        """
        return self.extract_bits(self.layout.parse(string))

    def events_of_flips(self, flips: np.ndarray) -> list[frozenset[DetectionEvent]]:
        """Returns the events triggered by each column of a (clbits, faults) flip matrix."""
        fired = np.asarray((self.matrix @ flips.astype(np.int32)) % 2, dtype=np.bool_)
        return [frozenset(self.nodes[i] for i in np.flatnonzero(fired[:, f])) for f in range(flips.shape[1])]

    def logical_flips(self, flips: np.ndarray) -> np.ndarray:
        return (self._logical @ flips.astype(np.int32)) % 2 == 1

    def qubit_flips(self, flips: np.ndarray) -> list[frozenset[int]]:
        """Returns the code qubits whose readout each column of a (clbits, faults) flip matrix changes."""
        changed = (self._readout @ flips.astype(np.int32)) % 2 == 1
        qubits = np.array(self.code_qubits)
        return [frozenset(int(q) for q in qubits[changed[:, f]]) for f in range(flips.shape[1])]


def extract(string: str, circuit: CircuitIR) -> ShotSyndrome:
    return SyndromeExtractor(circuit).extract(string)


def load_counts(path: Path) -> CountsRecord:
    """Loads a counts record from a JSON file."""
    log.info(f"Loading counts from '{path}'")
    return CountsRecord.model_validate_json(path.read_text())
