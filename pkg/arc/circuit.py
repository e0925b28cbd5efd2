import logging
import typing

import numpy as np

from arc.code_graph import Coloring, LinkGraph, Schedule, validate_coloring, validate_schedule
from arc.model import (
    ArcOptions,
    Block,
    CircuitIR,
    ClbitInfo,
    MeasurementKind,
    Op,
    OpKind,
    Pauli,
)
from arc.utils import GROUP_SEPARATOR

log = logging.getLogger(__name__)

# gates taking a basis pauli to z, applied in order
TO_Z: dict[Pauli, tuple[OpKind, ...]] = {
    Pauli.Z: (),
    Pauli.X: (OpKind.H,),
    Pauli.Y: (OpKind.SDG, OpKind.H),
}
INVERSE = {OpKind.H: OpKind.H, OpKind.S: OpKind.SDG, OpKind.SDG: OpKind.S}
# basis used on both qubits of a monochromatic link for its conjugate observable
UNUSED_BASIS = {Pauli.X: Pauli.Z, Pauli.Z: Pauli.X, Pauli.Y: Pauli.X}


def from_z(pauli: Pauli) -> tuple[OpKind, ...]:
    return tuple(INVERSE[kind] for kind in reversed(TO_Z[pauli]))


def conjugate_paulis(basis_a: Pauli, basis_b: Pauli) -> tuple[Pauli, Pauli]:
    """Returns the conjugate observable of a link measuring basis_a ⊗ basis_b.

    The tensor product is reversed; when both qubits share a basis a different basis is used on both so that
    the two observables still anticommute qubit-wise and commute overall.
    """
    if basis_a != basis_b:
        return basis_b, basis_a
    return UNUSED_BASIS[basis_a], UNUSED_BASIS[basis_a]


class ReadoutLayout:
    """Maps classical bits to and from the space separated counts strings.

    The leftmost group is the final readout, followed by the syndrome rounds from last to first. Within each group
    bits appear by descending qubit id.
    """

    def __init__(self, circuit: CircuitIR):
        by_round: dict[int, list[tuple[int, int]]] = {r: [] for r in range(circuit.T)}
        final: list[tuple[int, int]] = []
        for clbit, info in enumerate(circuit.clbits):
            if info.kind == MeasurementKind.FINAL:
                final.append((info.qubit, clbit))
            else:
                by_round[typing.cast(int, info.round)].append((info.qubit, clbit))

        self.groups: list[list[int]] = [[c for _, c in sorted(final, reverse=True)]]
        for r in reversed(range(circuit.T)):
            self.groups.append([c for _, c in sorted(by_round[r], reverse=True)])
        self.num_clbits = len(circuit.clbits)
        self.order = np.array([c for group in self.groups for c in group], dtype=np.intp)
        self.lengths = [len(group) for group in self.groups]

    @property
    def format(self) -> str:
        return GROUP_SEPARATOR.join("b" * n for n in self.lengths)

    def parse(self, string: str) -> np.ndarray:
        """Parses a counts string into classical bits indexed by clbit.

        :param string: the counts string
        :return: array of 0/1 values
        :raises: ValueError if the string does not match the layout
        """
        parts = string.split(GROUP_SEPARATOR)
        if [len(part) for part in parts] != self.lengths:
            raise ValueError(f"Counts string '{string}' does not match the readout format '{self.format}'")
        raw = np.frombuffer("".join(parts).encode("ascii"), dtype=np.uint8) - ord("0")
        if np.any(raw > 1):
            raise ValueError(f"Counts string '{string}' contains characters other than 0 and 1")
        bits = np.zeros(self.num_clbits, dtype=np.uint8)
        bits[self.order] = raw
        return bits

    def render(self, bits: np.ndarray) -> str:
        return self.render_many(np.asarray(bits)[np.newaxis, :])[0]

    def render_many(self, bits: np.ndarray) -> list[str]:
        """Renders a (shots, clbits) matrix as one counts string per shot."""
        shots = bits.shape[0]
        width = len(self.order) + len(self.groups) - 1
        chars = np.full((shots, width), ord(GROUP_SEPARATOR), dtype=np.uint8)
        column = 0
        for group in self.groups:
            chars[:, column:column + len(group)] = np.asarray(bits[:, group], dtype=np.uint8) + ord("0")
            column += len(group) + 1
        return [row.tobytes().decode("ascii") for row in chars]


def readout_layout(circuit: CircuitIR) -> ReadoutLayout:
    return ReadoutLayout(circuit)


class _CircuitBuilder:
    """Accumulates the ops and classical bit metadata of one circuit."""

    def __init__(self, graph: LinkGraph, color: Coloring, schedule: Schedule, options: ArcOptions):
        self.graph = graph
        self.color = color
        self.schedule = schedule
        self.options = options
        self.bases = options.bases
        self.ops: list[Op] = []
        self.clbits: list[ClbitInfo] = []
        self.layers = len(schedule) + 1
        self.all_qubits = tuple(sorted(set(graph.code_qubits) | set(graph.auxiliaries)))
        self.link_of_aux = {aux: index for index, (_, aux, _) in enumerate(graph.links)}

    def basis(self, qubit: int) -> Pauli:
        return self.bases[self.color[qubit]]

    def link_paulis(self, link: int, kind: MeasurementKind) -> dict[int, Pauli]:
        a, _, b = self.graph.links[link]
        if kind == MeasurementKind.CONJUGATE:
            pa, pb = conjugate_paulis(self.basis(a), self.basis(b))
            return {a: pa, b: pb}
        return {a: self.basis(a), b: self.basis(b)}

    def add(self, kind: OpKind, *qubits: int, **kwargs: typing.Any) -> None:
        self.ops.append(Op(kind=kind, qubits=qubits, **kwargs))

    def tick(self, time: float) -> None:
        if self.options.barriers:
            self.add(OpKind.BARRIER, *self.all_qubits)
        self.add(OpKind.TICK, time=time)

    def prepare(self) -> None:
        for q in self.graph.code_qubits:
            if self.options.logical:
                self.add(OpKind.X, q)
            for kind in from_z(self.basis(q)):
                self.add(kind, q)
        self.tick(0.0)

    def syndrome_round(
        self,
        r: int,
        kinds: dict[int, MeasurementKind],
        hold: frozenset[int] = frozenset(),
        held: frozenset[int] = frozenset(),
        block: dict[int, int] | None = None,
    ) -> dict[int, int]:
        """Emits one syndrome round.

        :param r: the round index
        :param kinds: the measurement kind of each link measured this round; other links stay idle
        :param hold: links whose auxiliary is not reset after measurement
        :param held: links whose auxiliary was not reset after its previous measurement
        :param block: the [[2,0,2]] block index of links taking part in one
        :return: the classical bit of each measured link
        """
        block = block or {}
        paulis = {link: self.link_paulis(link, kind) for link, kind in kinds.items()}
        for j, layer in enumerate(self.schedule):
            active = [(q, aux) for q, aux in layer if self.link_of_aux[aux] in kinds]
            rotations = {q: paulis[self.link_of_aux[aux]][q] for q, aux in active}
            for q, pauli in rotations.items():
                for kind in TO_Z[pauli]:
                    self.add(kind, q)
            for q, aux in active:
                self.add(OpKind.CX, q, aux)
            for q, pauli in rotations.items():
                for kind in from_z(pauli):
                    self.add(kind, q)
            self.tick(r + (j + 1) / self.layers)

        measured: dict[int, int] = {}
        for link in sorted(kinds):
            aux = self.graph.links[link][1]
            measured[link] = len(self.clbits)
            self.add(OpKind.M, aux, clbit=measured[link])
            self.clbits.append(
                ClbitInfo(
                    round=r,
                    link=link,
                    qubit=aux,
                    kind=kinds[link],
                    held=link in held,
                    block=block.get(link),
                    reset=self.options.resets and link not in hold,
                )
            )
        if self.options.resets:
            for link in sorted(kinds):
                if link in hold:
                    continue
                aux = self.graph.links[link][1]
                if self.options.conditional_reset:
                    self.add(OpKind.CPAULI, aux, clbit=measured[link], pauli=Pauli.X, label="reset")
                else:
                    self.add(OpKind.R, aux)
        return measured

    def idle(self) -> None:
        if not self.options.delay:
            return
        qubits = list(self.graph.code_qubits)
        if not self.options.resets:
            qubits += list(self.graph.auxiliaries)
        for q in sorted(qubits):
            for _ in range(self.options.delay):
                self.add(OpKind.I, q)

    def standard_round(self, r: int) -> None:
        self.syndrome_round(r, {link: MeasurementKind.STANDARD for link in range(len(self.graph.links))})
        self.idle()
        self.tick(float(r + 1))

    def final_readout(self) -> None:
        for q in self.graph.code_qubits:
            for kind in TO_Z[self.basis(q)]:
                self.add(kind, q)
        for q in self.graph.code_qubits:
            self.add(OpKind.M, q, clbit=len(self.clbits))
            self.clbits.append(ClbitInfo(qubit=q, kind=MeasurementKind.FINAL))


def _feedforward_controls(graph: LinkGraph, link: int) -> dict[int, int]:
    """Picks, for each code qubit of a link, the lowest-index neighbouring link through that qubit.

    A code qubit without neighbours borrows the choice made for the other code qubit.
    """
    a, _, b = graph.links[link]
    chosen = {}
    for q in (a, b):
        others = [i for i in graph.links_of(q) if i != link]
        if others:
            chosen[q] = min(others)
    if not chosen:
        raise ValueError(f"Link {link} has no neighbouring links for feedforward")
    for q in (a, b):
        chosen.setdefault(q, chosen[b if q == a else a])
    return chosen


def insert_202(builder: _CircuitBuilder, given_link: int, start: int, number: int) -> Block:
    """Emits a [[2,0,2]] sequence on a link, starting at the given round.

    The first round measures every link, leaving the auxiliaries of neighbouring links unreset. The given link
    then alternates conjugate and standard measurements, starting with the conjugate, while its neighbours are
    left idle. The last round measures every link again and, with feedforward, applies to each code qubit of the
    given link the conjugate pauli conditioned on a neighbour's measurement.

    :param builder: the circuit under construction
    :param given_link: the link running the sequence
    :param start: the first round of the sequence
    :param number: the index of this block
    :return: the block metadata
    """
    graph, options = builder.graph, builder.options
    links = range(len(graph.links))
    neighbours = frozenset(graph.neighbours(given_link))
    chosen = _feedforward_controls(graph, given_link)
    members = {link: number for link in neighbours | {given_link}}
    standard = {link: MeasurementKind.STANDARD for link in links}

    builder.syndrome_round(start, standard, hold=neighbours, block=members)
    builder.idle()
    builder.tick(float(start + 1))

    for k in range(1, options.rounds_per_202 - 1):
        r = start + k
        kinds = {link: MeasurementKind.STANDARD for link in links if link not in neighbours}
        kinds[given_link] = MeasurementKind.CONJUGATE if k % 2 else MeasurementKind.STANDARD
        builder.syndrome_round(r, kinds, block=members)
        builder.idle()
        builder.tick(float(r + 1))

    last = start + options.rounds_per_202 - 1
    measured = builder.syndrome_round(last, standard, held=neighbours, block=members)
    controls = {q: measured[link] for q, link in chosen.items()}
    if options.ff:
        conjugate = builder.link_paulis(given_link, MeasurementKind.CONJUGATE)
        for q, clbit in sorted(controls.items()):
            builder.add(OpKind.CPAULI, q, clbit=clbit, pauli=conjugate[q], label="ff")
    builder.idle()
    builder.tick(float(last + 1))

    log.debug(f"Inserted [[2,0,2]] block {number} on link {given_link} for rounds {start} to {last}")
    return Block(
        link=given_link,
        start=start,
        rounds=options.rounds_per_202,
        neighbours=tuple(sorted(neighbours)),
        controls=controls,
    )


def _links_for_202(graph: LinkGraph, options: ArcOptions) -> list[int]:
    if options.links_202 is None:
        return [
            index
            for index, (a, _, b) in enumerate(graph.links)
            if len(graph.links_of(a)) > 1 and len(graph.links_of(b)) > 1
        ]
    for index in options.links_202:
        if not 0 <= index < len(graph.links):
            raise ValueError(f"Link {index} does not exist, the graph has {len(graph.links)} links")
        _feedforward_controls(graph, index)
    return sorted(set(options.links_202))


def _effective_options(graph: LinkGraph, options: ArcOptions) -> tuple[ArcOptions, list[int]]:
    if not options.run_202:
        return options, []
    reason = None
    chosen = _links_for_202(graph, options)
    if not options.resets:
        reason = "[[2,0,2]] sequences need resets"
    elif not chosen:
        reason = "no link has neighbours on both code qubits"
    elif options.T < options.rounds_per_202 * len(chosen):
        reason = f"T={options.T} is too small for {len(chosen)} sequence(s) of {options.rounds_per_202} rounds"
    if reason is not None:
        log.warning(f"Disabling run_202: {reason}")
        return options.model_copy(update={"run_202": False}), []
    return options, chosen


def build_circuit(graph: LinkGraph, color: Coloring, schedule: Schedule, options: ArcOptions) -> CircuitIR:
    """Builds the memory experiment circuit for the basis given in the options.

    :param graph: the link graph
    :param color: the colouring of the code qubits
    :param schedule: the layers of code qubit and auxiliary interactions
    :param options: the circuit options
    :return: the circuit
    :raises: ValueError if the colouring or schedule does not fit the graph
    """
    validate_coloring(graph, color)
    validate_schedule(graph, schedule)
    options, chosen = _effective_options(graph, options)

    builder = _CircuitBuilder(graph, color, schedule, options)
    builder.prepare()
    blocks: list[Block] = []
    r = 0
    while r < options.T:
        if len(blocks) < len(chosen) and r == len(blocks) * options.rounds_per_202:
            blocks.append(insert_202(builder, chosen[len(blocks)], r, len(blocks)))
            r += options.rounds_per_202
        else:
            builder.standard_round(r)
            r += 1
    builder.final_readout()

    return CircuitIR(
        basis=options.basis,
        options=options,
        links=graph.links,
        color=dict(color),
        schedule=tuple(tuple((int(q), int(aux)) for q, aux in layer) for layer in schedule),
        num_qubits=max(builder.all_qubits) + 1,
        ops=tuple(builder.ops),
        clbits=tuple(builder.clbits),
        blocks=tuple(blocks),
    )


def build_arc(
    graph: LinkGraph, color: Coloring, schedule: Schedule, options: ArcOptions
) -> dict[str, CircuitIR]:
    """Builds the circuits for the given basis and for its reverse.

    :param graph: the link graph
    :param color: the colouring of the code qubits
    :param schedule: the layers of code qubit and auxiliary interactions
    :param options: the circuit options
    :return: the circuits keyed by basis string
    """
    circuits = {}
    for basis in dict.fromkeys([options.basis, options.basis[::-1]]):
        circuits[basis] = build_circuit(graph, color, schedule, options.model_copy(update={"basis": basis}))
    return circuits
