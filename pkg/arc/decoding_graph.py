import collections
import dataclasses
import itertools
import logging
import typing

from arc.detection import DetectionEvent, SyndromeExtractor
from arc.model import CircuitIR, EdgeClass, MeasurementKind, OpKind, Pauli
from arc.simulator import Fault, fault_locations, propagate_faults

log = logging.getLogger(__name__)

NodePair = tuple[DetectionEvent, DetectionEvent]


@dataclasses.dataclass(frozen=True)
class Edge:
    """A pair of nodes triggered together by single faults; both nodes are equal for a self-edge."""

    nodes: NodePair
    edge_class: EdgeClass
    qubits: frozenset[int]
    time_range: tuple[float, float]
    multiplicity: int
    fault_times: tuple[float, ...] = ()
    flips: frozenset[int] = frozenset()  # code qubits whose readout the faults behind the edge change

    @property
    def is_self_edge(self) -> bool:
        return self.nodes[0] == self.nodes[1]


@dataclasses.dataclass
class DecodingGraph:
    """Nodes are detection events; edges join the nodes that single faults trigger together."""

    nodes: tuple[DetectionEvent, ...]
    edges: tuple[Edge, ...]
    logical_boundary: frozenset[DetectionEvent]
    undetectable: tuple[Fault, ...]
    layers_per_round: int
    T: int
    basis: str = ""

    def __post_init__(self):
        adjacency: dict[DetectionEvent, set[DetectionEvent]] = {node: set() for node in self.nodes}
        for edge in self.edges:
            a, b = edge.nodes
            if a not in adjacency or b not in adjacency:
                raise ValueError(f"Edge {edge.nodes} references a node that is not in the graph")
            if a != b:
                adjacency[a].add(b)
                adjacency[b].add(a)
        self.adjacency = {node: tuple(sorted(others)) for node, others in adjacency.items()}

    def neighbours(self, node: DetectionEvent) -> tuple[DetectionEvent, ...]:
        return self.adjacency[node]

    def degree(self, node: DetectionEvent) -> int:
        return len(self.adjacency[node])

    def to_json(self) -> dict[str, typing.Any]:
        """Exports the graph as plain JSON data."""

        def node(event: DetectionEvent) -> dict[str, typing.Any]:
            return dataclasses.asdict(event)

        return {
            "basis": self.basis,
            "T": self.T,
            "layers_per_round": self.layers_per_round,
            "nodes": [node(n) for n in self.nodes],
            "edges": [
                {
                    "nodes": [node(n) for n in edge.nodes],
                    "class": edge.edge_class.value,
                    "qubits": sorted(edge.qubits),
                    "time_range": list(edge.time_range),
                    "multiplicity": edge.multiplicity,
                    "flips": sorted(edge.flips),
                }
                for edge in self.edges
            ],
            "logical_boundary": [node(n) for n in sorted(self.logical_boundary)],
            "undetectable": len(self.undetectable),
        }


def time_coordinate(round: int, layer_index: int, layers_per_round: int) -> float:
    """Returns the time of the gap after layer_index layers of the given round: r + j/λ."""
    return round + layer_index / layers_per_round


class _InteractionTimes:
    """The layer in which each code qubit interacts with each auxiliary, per round."""

    def __init__(self, circuit: CircuitIR):
        self.circuit = circuit
        self.layers: dict[tuple[int, int, int], int] = {}
        per_round = circuit.layers_per_round
        tick = 0
        times = circuit.tick_times
        for op in circuit.ops:
            if op.kind == OpKind.TICK:
                tick += 1
            elif op.kind == OpKind.CX:
                # the tick after layer j of round r sits at r + (j + 1)/λ
                r, j = divmod(round(times[tick] * per_round) - 1, per_round)
                code, aux = op.qubits
                self.layers[(int(r), code, aux)] = int(j)

    def layers_in(self, r: int, qubit: int, auxiliaries: typing.Iterable[int]) -> list[int]:
        return sorted(self.layers[(r, qubit, aux)] for aux in auxiliaries if (r, qubit, aux) in self.layers)


def assign_time_range(
    edge: Edge, circuit: CircuitIR, interactions: _InteractionTimes | None = None
) -> tuple[float, float]:
    """Works out the time window in which the faults behind an edge occurred.

    :param edge: the edge, with the times of its generating faults
    :param circuit: the circuit the edge was built from
    :param interactions: precomputed interaction layers of the circuit
    :return: the window (t_lo, t_hi) in rounds
    """
    interactions = interactions or _InteractionTimes(circuit)
    lam, T = circuit.layers_per_round, circuit.T
    hull = (min(edge.fault_times, default=0.0), max(edge.fault_times, default=0.0))
    first, second = sorted(edge.nodes)
    if edge.is_self_edge:
        return hull

    t1, t2 = first.time, second.time
    if first.link == second.link:
        if circuit.options.resets:
            return float(t1), float(t1 + 1)
        if t2 - t1 == 1:
            return float(t1), t1 + (lam - 1) / lam
        if t2 - t1 == 2:
            return t1 + (lam - 1) / lam, float(t1 + 1)
        return hull

    shared = set(circuit.links[first.link][::2]) & set(circuit.links[second.link][::2])
    if len(shared) != 1:
        return hull
    qubit = shared.pop()
    auxiliaries = (circuit.links[first.link][1], circuit.links[second.link][1])
    if t1 == t2:
        before = interactions.layers_in(t1 - 1, qubit, auxiliaries)
        after = interactions.layers_in(t1, qubit, auxiliaries)
        lo = 0.0 if t1 == 0 else (t1 - 1) + before[-1] / lam if before else None
        hi = float(T) if t1 == T else t1 + (after[0] + 1) / lam if after else None
        if lo is None or hi is None:
            return hull
        return lo, hi
    if t2 - t1 == 1:
        layers = interactions.layers_in(t1, qubit, auxiliaries)
        if len(layers) == 2:
            return t1 + layers[0] / lam, t1 + (layers[1] + 1) / lam
    return hull


class _FaultClassifier:
    def __init__(self, circuit: CircuitIR):
        self.circuit = circuit
        self.auxiliaries = {aux for _, aux, _ in circuit.links}
        self.ff_clbits = circuit.ff_clbits()
        # the measurement that first sees a fault inserted on an auxiliary at a given tick
        self.next_measurement: dict[tuple[int, int], int] = {}
        pending: dict[int, list[int]] = collections.defaultdict(list)
        tick = 0
        for op in circuit.ops:
            if op.kind == OpKind.TICK:
                for q in self.auxiliaries:
                    pending[q].append(tick)
                tick += 1
            elif op.kind == OpKind.M:
                q = op.qubits[0]
                for t in pending.pop(q, []):
                    self.next_measurement[(t, q)] = typing.cast(int, op.clbit)

    def fault_time(self, fault: Fault) -> float:
        circuit = self.circuit
        if not fault.is_readout:
            return circuit.tick_times[typing.cast(int, fault.tick)]
        info = circuit.clbits[typing.cast(int, fault.clbit)]
        if info.kind == MeasurementKind.FINAL:
            return float(circuit.T)
        lam = circuit.layers_per_round
        return typing.cast(int, info.round) + (lam - 1) / lam

    def classify(self, fault: Fault, nodes: typing.Collection[DetectionEvent]) -> EdgeClass:
        circuit = self.circuit
        if fault.is_readout:
            info = circuit.clbits[typing.cast(int, fault.clbit)]
            if info.kind == MeasurementKind.FINAL:
                return self._code_class(info.qubit)
            if not circuit.options.resets:
                return EdgeClass.MISASSIGNMENT
            return EdgeClass.FEEDFORWARD if fault.clbit in self.ff_clbits else EdgeClass.AUX_FLIP

        qubit = typing.cast(int, fault.qubit)
        if qubit in self.auxiliaries:
            upcoming = self.next_measurement.get((typing.cast(int, fault.tick), qubit))
            return EdgeClass.FEEDFORWARD if upcoming in self.ff_clbits else EdgeClass.AUX_FLIP
        if any(node.is_conjugate for node in nodes):
            return EdgeClass.CONJUGATE
        return self._code_class(qubit)

    def _code_class(self, qubit: int) -> EdgeClass:
        return EdgeClass.CODE_BITFLIP if self.circuit.basis_of(qubit) == Pauli.Z else EdgeClass.CODE_PHASEFLIP

    def qubit_of(self, fault: Fault) -> int:
        if fault.is_readout:
            return self.circuit.clbits[typing.cast(int, fault.clbit)].qubit
        return typing.cast(int, fault.qubit)


def build(circuit: CircuitIR, extractor: SyndromeExtractor | None = None) -> DecodingGraph:
    """Builds the decoding graph by propagating every single fault through the circuit.

    A fault triggering one node adds a self-edge, two nodes an edge, and more nodes an edge for every pair.
    Edges with the same nodes and class are merged, counting the faults behind them.

    :param circuit: the circuit
    :param extractor: the syndrome extractor of the circuit
    :return: the decoding graph
    """
    extractor = extractor or SyndromeExtractor(circuit)
    faults = fault_locations(circuit)
    flips = propagate_faults(circuit, faults)
    fault_events = extractor.events_of_flips(flips)
    logical = extractor.logical_flips(flips)
    qubits = extractor.qubit_flips(flips)
    classifier = _FaultClassifier(circuit)

    merged: dict[tuple[NodePair, EdgeClass], dict[str, typing.Any]] = {}
    boundary: set[DetectionEvent] = set()
    undetectable: list[Fault] = []
    for fault, events, flips_logical, flipped in zip(faults, fault_events, logical, qubits):
        if not events:
            undetectable.append(fault)
            if flips_logical:
                log.warning(f"Fault {fault} flips the logical readout without triggering any node")
            continue
        if flips_logical:
            boundary |= events
        edge_class = classifier.classify(fault, events)
        ordered = sorted(events)
        pairs = [(ordered[0], ordered[0])] if len(ordered) == 1 else list(itertools.combinations(ordered, 2))
        for pair in pairs:
            entry = merged.setdefault(
                (pair, edge_class), {"multiplicity": 0, "qubits": set(), "times": [], "flips": set()}
            )
            entry["multiplicity"] += 1
            entry["qubits"].add(classifier.qubit_of(fault))
            entry["times"].append(classifier.fault_time(fault))
            entry["flips"] |= flipped

    interactions = _InteractionTimes(circuit)
    edges = []
    for (pair, edge_class), entry in sorted(merged.items(), key=lambda item: (item[0][0], item[0][1].value)):
        edge = Edge(
            nodes=pair,
            edge_class=edge_class,
            qubits=frozenset(entry["qubits"]),
            time_range=(0.0, 0.0),
            multiplicity=entry["multiplicity"],
            fault_times=tuple(sorted(set(entry["times"]))),
            flips=frozenset(entry["flips"]),
        )
        edges.append(dataclasses.replace(edge, time_range=assign_time_range(edge, circuit, interactions)))

    log.info(
        f"Decoding graph for '{circuit.basis}': {len(extractor.nodes)} nodes, {len(edges)} edges, "
        f"{len(undetectable)} undetectable faults"
    )
    return DecodingGraph(
        nodes=tuple(extractor.nodes),
        edges=tuple(edges),
        logical_boundary=frozenset(boundary),
        undetectable=tuple(undetectable),
        layers_per_round=circuit.layers_per_round,
        T=circuit.T,
        basis=circuit.basis,
    )
