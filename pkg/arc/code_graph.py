import collections
import dataclasses
import itertools
import logging
import typing

import networkx as nx

from arc.model import Layout, Link, Pair

log = logging.getLogger(__name__)

Coloring = dict[int, int]
Schedule = list[list[Pair]]
FlipRegion = frozenset[int]


class HasLink(typing.Protocol):
    @property
    def link(self) -> int: ...


class LinkGraph:
    """The links of a repetition code: code qubits joined through a shared auxiliary."""

    def __init__(self, links: typing.Iterable[typing.Sequence[int]]):
        """Validates and indexes a set of links.

        :param links: (code qubit, auxiliary, code qubit) triples
        :raises: ValueError if the links do not describe a single connected code
        """
        self.links: tuple[Link, ...] = tuple((int(a), int(aux), int(b)) for a, aux, b in links)
        if not self.links:
            raise ValueError("A link graph needs at least one link")

        code: set[int] = set()
        pairs: dict[frozenset[int], int] = {}
        for index, (a, aux, b) in enumerate(self.links):
            if min(a, aux, b) < 0:
                raise ValueError(f"Link {index} {self.links[index]} has a negative qubit id")
            if a == b:
                raise ValueError(f"Link {index} {self.links[index]} joins code qubit {a} to itself")
            pair = frozenset((a, b))
            if pair in pairs:
                raise ValueError(f"Links {pairs[pair]} and {index} both join code qubits {a} and {b}")
            pairs[pair] = index
            code.update((a, b))

        auxiliaries = [aux for _, aux, _ in self.links]
        for aux, count in collections.Counter(auxiliaries).items():
            if count > 1:
                raise ValueError(f"Auxiliary {aux} is used by {count} links")
            if aux in code:
                raise ValueError(f"Auxiliary {aux} is also used as a code qubit")

        self.code_qubits: tuple[int, ...] = tuple(sorted(code))
        self.auxiliaries: tuple[int, ...] = tuple(auxiliaries)
        self._pairs = pairs

        links_of: dict[int, list[int]] = collections.defaultdict(list)
        for index, (a, _, b) in enumerate(self.links):
            links_of[a].append(index)
            links_of[b].append(index)
        self._links_of = {q: tuple(indices) for q, indices in links_of.items()}

        self.graph = nx.Graph()
        self.graph.add_nodes_from(self.code_qubits)
        for index, (a, aux, b) in enumerate(self.links):
            self.graph.add_edge(a, b, link=index, aux=aux)
        if not nx.is_connected(self.graph):
            raise ValueError("The link graph is not connected")

    @classmethod
    def from_layout(cls, layout: Layout) -> "LinkGraph":
        return cls(layout.links)

    def __len__(self) -> int:
        return len(self.links)

    def __repr__(self) -> str:
        return f"LinkGraph({len(self.code_qubits)} code qubits, {len(self.links)} links)"

    @property
    def designated_qubit(self) -> int:
        """The code qubit whose final readout gives the logical value."""
        return self.code_qubits[0]

    @property
    def max_degree(self) -> int:
        return max(len(indices) for indices in self._links_of.values())

    def links_of(self, qubit: int) -> tuple[int, ...]:
        return self._links_of.get(qubit, ())

    def neighbours(self, link: int) -> tuple[int, ...]:
        """Returns the links sharing a code qubit with the given link, in index order."""
        a, _, b = self.links[link]
        return tuple(sorted((set(self.links_of(a)) | set(self.links_of(b))) - {link}))

    def link_between(self, a: int, b: int) -> int | None:
        return self._pairs.get(frozenset((a, b)))

    def other_end(self, link: int, qubit: int) -> int:
        a, _, b = self.links[link]
        return b if qubit == a else a

    def boundary(self, qubits: typing.Iterable[int]) -> frozenset[int]:
        """Returns the links with exactly one code qubit in the given set."""
        region = set(qubits)
        return frozenset(i for i, (a, _, b) in enumerate(self.links) if (a in region) != (b in region))


@dataclasses.dataclass(frozen=True)
class CycleBasisIndex:
    """A fundamental cycle basis together with the cycles passing through each link."""

    cycles: tuple[frozenset[int], ...]
    link_to_cycles: dict[int, frozenset[int]]

    def cycles_of(self, links: typing.Iterable[int]) -> set[int]:
        found: set[int] = set()
        for link in links:
            found |= self.link_to_cycles.get(link, frozenset())
        return found


def count_monochromatic(graph: LinkGraph, color: Coloring) -> int:
    return sum(1 for a, _, b in graph.links if color[a] == color[b])


def auto_color(graph: LinkGraph, max_dist: int = 2) -> Coloring:
    """Colours the code qubits so that as many links as possible join differently coloured qubits.

    A breadth first 2-colouring from the lowest qubit is refined by flipping balls of radius below
    max_dist while that strictly reduces the number of monochromatic links.

    :param graph: the link graph
    :param max_dist: bound on the radius of the recoloured neighbourhoods
    :return: a colour for every code qubit
    """
    if max_dist < 1:
        raise ValueError(f"max_dist must be positive, got {max_dist}")

    root = graph.code_qubits[0]
    color: Coloring = {root: 0}
    for parent, child in nx.bfs_edges(graph.graph, root, sort_neighbors=sorted):
        color[child] = 1 - color[parent]

    best = count_monochromatic(graph, color)
    improved = best > 0
    while improved:
        improved = False
        for radius, qubit in itertools.product(range(max_dist), graph.code_qubits):
            ball = nx.single_source_shortest_path_length(graph.graph, qubit, cutoff=radius)
            trial = {q: c ^ 1 if q in ball else c for q, c in color.items()}
            mono = count_monochromatic(graph, trial)
            if mono < best:
                color, best, improved = trial, mono, True
        if best == 0:
            break

    if best:
        log.info(f"Link graph is not bipartite, colouring leaves {best} monochromatic link(s)")
    return dict(sorted(color.items()))


def auto_schedule(graph: LinkGraph) -> Schedule:
    """Schedules the code qubit and auxiliary interactions of every link into layers.

    Interactions sharing a qubit conflict; a greedy colouring of the conflict graph, visiting the interactions
    in link order, gives the layers.

    :param graph: the link graph
    :return: layers of (code qubit, auxiliary) pairs
    """
    pairs: list[Pair] = []
    for a, aux, b in graph.links:
        pairs += [(a, aux), (b, aux)]

    by_qubit: dict[int, list[Pair]] = collections.defaultdict(list)
    for pair in pairs:
        for q in pair:
            by_qubit[q].append(pair)

    conflicts = nx.Graph()
    conflicts.add_nodes_from(pairs)
    for sharing in by_qubit.values():
        conflicts.add_edges_from(itertools.combinations(sharing, 2))

    coloring = nx.greedy_color(conflicts, strategy=lambda G, colors: iter(pairs))
    layers: Schedule = [[] for _ in range(max(coloring.values()) + 1)]
    for pair in pairs:
        layers[coloring[pair]].append(pair)
    return layers


def validate_coloring(graph: LinkGraph, color: typing.Mapping[int, int]) -> None:
    """Checks a colouring assigns 0 or 1 to every code qubit.

    :raises: ValueError if the colouring is partial or uses other colours
    """
    missing = set(graph.code_qubits) - set(color)
    if missing:
        raise ValueError(f"Colouring is missing code qubits {sorted(missing)}")
    bad = {q: c for q, c in color.items() if c not in (0, 1)}
    if bad:
        raise ValueError(f"Colours must be 0 or 1, got {bad}")


def validate_schedule(graph: LinkGraph, schedule: typing.Sequence[typing.Sequence[Pair]]) -> None:
    """Checks a schedule runs both interactions of every link exactly once, with no qubit twice in a layer.

    :raises: ValueError describing the first problem found
    """
    expected = {(q, aux) for a, aux, b in graph.links for q in (a, b)}
    seen: set[Pair] = set()
    for number, layer in enumerate(schedule):
        used: set[int] = set()
        for pair in layer:
            pair = (int(pair[0]), int(pair[1]))
            if pair not in expected:
                raise ValueError(
                    f"Schedule layer {number} has {pair} which is not a code qubit and auxiliary of a link"
                )
            if pair in seen:
                raise ValueError(f"Schedule repeats the interaction {pair}")
            if used & set(pair):
                raise ValueError(f"Schedule layer {number} uses a qubit of {pair} more than once")
            seen.add(pair)
            used.update(pair)
    if seen != expected:
        raise ValueError(f"Schedule is missing interactions {sorted(expected - seen)}")
    if len(schedule) < graph.max_degree:
        raise ValueError(f"Schedule has {len(schedule)} layers but the maximum degree is {graph.max_degree}")


def cycle_basis(graph: LinkGraph) -> CycleBasisIndex:
    """Finds the fundamental cycles of a breadth first spanning tree rooted at the lowest code qubit.

    :param graph: the link graph
    :return: the cycles, as sets of link indices, and the cycles through each link
    """
    root = graph.code_qubits[0]
    parent_link: dict[int, int | None] = {root: None}
    depth = {root: 0}
    queue = collections.deque([root])
    while queue:
        qubit = queue.popleft()
        for link in sorted(graph.links_of(qubit), key=lambda i: graph.other_end(i, qubit)):
            other = graph.other_end(link, qubit)
            if other not in parent_link:
                parent_link[other] = link
                depth[other] = depth[qubit] + 1
                queue.append(other)

    tree = {link for link in parent_link.values() if link is not None}
    cycles: list[frozenset[int]] = []
    for index, (a, _, b) in enumerate(graph.links):
        if index in tree:
            continue
        cycle = {index}
        while a != b:
            if depth[a] < depth[b]:
                a, b = b, a
            step = typing.cast(int, parent_link[a])
            cycle ^= {step}
            a = graph.other_end(step, a)
        cycles.append(frozenset(cycle))

    link_to_cycles: dict[int, set[int]] = collections.defaultdict(set)
    for number, cycle in enumerate(cycles):
        for link in cycle:
            link_to_cycles[link].add(number)
    return CycleBasisIndex(tuple(cycles), {link: frozenset(c) for link, c in link_to_cycles.items()})


def flatten(events: typing.Iterable[HasLink]) -> frozenset[int]:
    """Returns the links carrying an odd number of the given events."""
    counts = collections.Counter(event.link for event in events)
    return frozenset(link for link, count in counts.items() if count % 2)


def is_edge_cut(index: CycleBasisIndex, cut: typing.Collection[int]) -> bool:
    """A link set is an edge cut when it meets every basis cycle an even number of times."""
    return all(len(index.cycles[c] & set(cut)) % 2 == 0 for c in index.cycles_of(cut))


def bicolor_query(graph: LinkGraph, index: CycleBasisIndex, cut: typing.Iterable[int]) -> FlipRegion | None:
    """Finds the code qubits to flip to produce exactly the given links as a syndrome.

    Both sides of the cut are flooded in lockstep from the endpoints of its first link. The first side to stop
    growing, once every cut link has been reached, is complete; the smaller of it and its complement is returned,
    with ties going to the side holding the lowest qubit id.

    :param graph: the link graph
    :param index: the cycle basis of the graph
    :param cut: the candidate edge cut
    :return: the flip region, an empty region for an empty cut, or None when the links are not an edge cut
    """
    cut = frozenset(cut)
    if not cut:
        return frozenset()
    if not is_edge_cut(index, cut):
        return None

    pending = {q for link in cut for q in (graph.links[link][0], graph.links[link][2])}
    first = min(cut)
    a, _, b = graph.links[first]
    label = {a: 0, b: 1}
    members: tuple[set[int], set[int]] = ({a}, {b})
    frontier: tuple[list[int], list[int]] = ([a], [b])
    pending -= {a, b}

    region: set[int] | None = None
    while region is None:
        for side in (0, 1):
            if not frontier[side] and not pending:
                region = members[side]
                break
        if region is not None:
            break
        for side in (0, 1):
            layer, frontier[side][:] = list(frontier[side]), []
            for qubit in layer:
                for link in graph.links_of(qubit):
                    other = graph.other_end(link, qubit)
                    if other in label:
                        continue
                    side_of_other = label[qubit] ^ (link in cut)
                    label[other] = side_of_other
                    members[side_of_other].add(other)
                    frontier[side_of_other].append(other)
                    pending.discard(other)

    size = len(graph.code_qubits)
    if 2 * len(region) < size:
        return frozenset(region)
    complement = frozenset(graph.code_qubits) - region
    if 2 * len(region) > size:
        return complement
    return frozenset(region) if graph.code_qubits[0] in region else complement
