import collections
import dataclasses
import json
import logging
import typing

from arc.code_graph import CycleBasisIndex, FlipRegion, LinkGraph, bicolor_query, cycle_basis, flatten
from arc.decoding_graph import DecodingGraph
from arc.detection import DetectionEvent, ShotSyndrome, SyndromeExtractor
from arc.model import CountsRecord

log = logging.getLogger(__name__)

# growth units of a fully grown edge: each growing cluster adds one per step, so an edge between two growing
# clusters is fully grown after a single step
FULL_EDGE = 2


@dataclasses.dataclass(frozen=True)
class Cluster:
    """A neutral set of decoding graph nodes together with the code qubits it flips."""

    nodes: frozenset[DetectionEvent]
    events: frozenset[DetectionEvent]
    neutral: bool
    flip_region: FlipRegion
    touches_logical: bool = False

    @property
    def size(self) -> int:
        """The number of code qubits the cluster flips, the fewest errors that explain it."""
        return len(self.flip_region)

    def to_json(self) -> dict[str, typing.Any]:
        return {
            "events": [str(event) for event in sorted(self.events)],
            "nodes": len(self.nodes),
            "flip_region": sorted(self.flip_region),
            "size": self.size,
            "touches_logical": self.touches_logical,
        }


@dataclasses.dataclass(frozen=True)
class DecodeResult:
    clusters: tuple[Cluster, ...]
    raw_logical: int
    corrected_logical: int

    @property
    def logical_flipped(self) -> bool:
        """Whether the decoder flipped the raw logical readout."""
        return self.raw_logical != self.corrected_logical

    def to_json(self) -> dict[str, typing.Any]:
        return {
            "raw_logical": self.raw_logical,
            "corrected_logical": self.corrected_logical,
            "logical_flipped": self.logical_flipped,
            "clusters": [cluster.to_json() for cluster in self.clusters],
        }


@dataclasses.dataclass
class _ClusterState:
    nodes: set[int]
    events: set[int]
    reached: set[int] = dataclasses.field(default_factory=set)
    neutral: bool = False
    region: FlipRegion = frozenset()


class UnionFindDecoder:
    """Decoder growing clusters around detection events until every cluster is neutral.

    Every non-neutral cluster grows each edge leaving it by half an edge per step, at uniform speed, together with
    the self-edges of its nodes, which lead out of the graph. Clusters meeting on a fully grown edge are merged, the
    smaller into the larger, in the order the edges were grown. The qubits a cluster has reached are those changed by
    the faults behind the edges inside it and behind its fully grown self-edges. A cluster is neutral once its
    flattened events form an edge cut of the link graph with a side inside the reached qubits; that side is its flip
    region, the smaller side when both qualify. A cluster turning neutral takes no further merges within the step.

    The working state is reset at the start of every decode, so one instance can decode any number of shots but
    must not be shared between threads.
    """

    def __init__(self, dgraph: DecodingGraph, graph: LinkGraph, index: CycleBasisIndex | None = None):
        """Initializes a new decoder

        :param dgraph: the decoding graph of the circuit the shots come from
        :param graph: the link graph of the code
        :param index: the cycle basis of the link graph, computed when not given
        """
        self.dgraph = dgraph
        self.graph = graph
        self.index = index or cycle_basis(graph)
        self.designated = graph.designated_qubit
        self.nodes = dgraph.nodes
        self.node_index = {node: i for i, node in enumerate(self.nodes)}

        flips: dict[tuple[int, int], set[int]] = collections.defaultdict(set)
        for edge in dgraph.edges:
            a, b = sorted((self.node_index[edge.nodes[0]], self.node_index[edge.nodes[1]]))
            flips[(a, b)] |= edge.flips
        self.edge_ends: list[tuple[int, int]] = [(a, b) for a, b in sorted(flips) if a != b]
        self.edge_flips = [frozenset(flips[pair]) for pair in self.edge_ends]
        self.boundary = {a: frozenset(qubits) for (a, b), qubits in flips.items() if a == b}
        self.incident: list[list[int]] = [[] for _ in self.nodes]
        for e, (a, b) in enumerate(self.edge_ends):
            self.incident[a].append(e)
            self.incident[b].append(e)
        self.logical_nodes = {self.node_index[node] for node in dgraph.logical_boundary}
        self._sides: dict[frozenset[int], tuple[FlipRegion, ...] | None] = {}
        self.reset()

    def reset(self) -> None:
        self.growth = [0] * len(self.edge_ends)
        self.boundary_growth: dict[int, int] = {}
        self.parent: dict[int, int] = {}
        self.clusters: dict[int, _ClusterState] = {}
        self.odd_roots: list[int] = []

    def find(self, u: int) -> int:
        """Returns the root of the cluster holding node u, compressing the path to it."""
        root = u
        while self.parent.get(root, root) != root:
            root = self.parent[root]
        while u != root:
            self.parent[u], u = root, self.parent[u]
        return root

    def sides_of(self, events: typing.Iterable[DetectionEvent]) -> tuple[FlipRegion, ...] | None:
        """Returns the sides of the edge cut formed by the flattened events, the smaller first.

        Events internal to a [[2,0,2]] block are left out. An empty cut has the empty region as its only side.

        :param events: the events of a cluster
        :return: the sides, or None when the flattened events are not an edge cut
        """
        cut = flatten(event for event in events if not event.is_internal)
        if cut not in self._sides:
            region = bicolor_query(self.graph, self.index, cut)
            if region is None:
                self._sides[cut] = None
            elif not cut:
                self._sides[cut] = (region,)
            else:
                self._sides[cut] = (region, frozenset(self.graph.code_qubits) - region)
        return self._sides[cut]

    def _other_end(self, e: int, u: int) -> int:
        a, b = self.edge_ends[e]
        return b if a == u else a

    def _settle(self, root: int) -> bool:
        cluster = self.clusters[root]
        sides = self.sides_of(self.nodes[i] for i in cluster.events)
        region = next((side for side in sides if side <= cluster.reached), None) if sides is not None else None
        cluster.neutral = region is not None
        cluster.region = region or frozenset()
        return cluster.neutral

    def _absorb(self, root: int, v: int) -> None:
        cluster = self.clusters[root]
        self.parent[v] = root
        cluster.nodes.add(v)
        for e in self.incident[v]:
            if self.find(self._other_end(e, v)) == root:
                cluster.reached |= self.edge_flips[e]

    def _union(self, root_u: int, root_v: int) -> int:
        big, small = root_u, root_v
        if len(self.clusters[root_v].nodes) > len(self.clusters[root_u].nodes):
            big, small = root_v, root_u
        other = self.clusters.pop(small)
        cluster = self.clusters[big]
        self.parent[small] = big
        cluster.nodes |= other.nodes
        cluster.events |= other.events
        cluster.reached |= other.reached
        for u in other.nodes:
            for e in self.incident[u]:
                if self.find(self._other_end(e, u)) == big:
                    cluster.reached |= self.edge_flips[e]
        return big

    def _grow(self) -> tuple[list[tuple[int, int]], set[int], bool]:
        fusions: list[tuple[int, int]] = []
        bounded: set[int] = set()
        grew = False
        for root in self.odd_roots:
            cluster = self.clusters[root]
            for u in list(cluster.nodes):
                if u in self.boundary and self.boundary_growth.get(u, 0) < FULL_EDGE:
                    self.boundary_growth[u] = self.boundary_growth.get(u, 0) + 1
                    grew = True
                    if self.boundary_growth[u] >= FULL_EDGE:
                        cluster.reached |= self.boundary[u]
                        bounded.add(root)
                for e in self.incident[u]:
                    v = self._other_end(e, u)
                    if self.find(v) == root:
                        continue
                    if self.growth[e] < FULL_EDGE:
                        self.growth[e] += 1
                        grew = True
                    # an edge grown earlier whose merge was held back is tried again
                    if self.growth[e] >= FULL_EDGE:
                        fusions.append((u, v))
        return fusions, bounded, grew

    def _merge(self, fusions: list[tuple[int, int]], fresh: set[int]) -> None:
        for u, v in fusions:
            root = self.find(u)
            if root in fresh:
                continue
            if v not in self.parent:
                self._absorb(root, v)
            else:
                other = self.find(v)
                if other == root or other in fresh:
                    continue
                root = self._union(root, other)
            if self._settle(root):
                fresh.add(root)

    def _sort_odd(self) -> None:
        self.odd_roots = sorted(
            (root for root, cluster in self.clusters.items() if not cluster.neutral),
            key=lambda root: (len(self.clusters[root].nodes), root),
        )

    def decode(self, shot: ShotSyndrome) -> DecodeResult:
        """Decodes one shot.

        :param shot: the detection events and raw logical readout of the shot
        :return: the neutral clusters and the corrected logical readout
        :raises: ValueError for events that are not nodes of the decoding graph, or when the clusters cannot all
            be made neutral
        """
        unknown = sorted(event for event in shot.events if event not in self.node_index)
        if unknown:
            raise ValueError(f"Unknown detection event {unknown[0]} is not a node of the decoding graph")
        if not shot.events:
            return DecodeResult(clusters=(), raw_logical=shot.raw_logical, corrected_logical=shot.raw_logical)

        self.reset()
        for event in sorted(shot.events):
            node = self.node_index[event]
            self.parent[node] = node
            self.clusters[node] = _ClusterState(nodes={node}, events={node})
            self._settle(node)
        self._sort_odd()

        steps, limit = 0, 2 * (len(self.nodes) + 2)
        while self.odd_roots:
            if steps >= limit:
                raise ValueError(f"Clusters did not become neutral within {limit} growth steps")
            fusions, bounded, grew = self._grow()
            if not grew and not fusions:
                stuck = [str(self.nodes[root]) for root in self.odd_roots]
                raise ValueError(f"Clusters rooted at {', '.join(stuck)} cannot be made neutral")
            fresh = {root for root in bounded if self._settle(root)}
            self._merge(fusions, fresh)
            self._sort_odd()
            steps += 1

        clusters = tuple(
            Cluster(
                nodes=frozenset(self.nodes[i] for i in state.nodes),
                events=frozenset(self.nodes[i] for i in state.events),
                neutral=state.neutral,
                flip_region=state.region,
                touches_logical=bool(state.nodes & self.logical_nodes),
            )
            for _, state in sorted(self.clusters.items(), key=lambda item: min(item[1].nodes))
        )
        flips = sum(self.designated in cluster.flip_region for cluster in clusters)
        if log.isEnabledFor(logging.DEBUG):  # pragma: no cover
            log.debug(f"Decoded {len(shot.events)} event(s) into {len(clusters)} cluster(s) in {steps} step(s)")
        corrected = shot.raw_logical ^ (flips % 2)
        return DecodeResult(clusters=clusters, raw_logical=shot.raw_logical, corrected_logical=corrected)


def decode(
    shot: ShotSyndrome, dgraph: DecodingGraph, graph: LinkGraph, index: CycleBasisIndex | None = None
) -> DecodeResult:
    return UnionFindDecoder(dgraph, graph, index).decode(shot)


@dataclasses.dataclass
class DecodedCounts:
    """The decode results of each distinct counts string, weighted by the number of shots producing it."""

    strings: list[str]
    syndromes: list[ShotSyndrome]
    results: list[DecodeResult | None]  # None when the shot could not be decoded
    weights: list[int]

    @property
    def shots(self) -> int:
        return sum(self.weights)

    @property
    def undecodable(self) -> int:
        return sum(w for result, w in zip(self.results, self.weights) if result is None)

    def decoded(self) -> tuple[list[DecodeResult], list[int]]:
        pairs = [(result, w) for result, w in zip(self.results, self.weights) if result is not None]
        return [result for result, _ in pairs], [w for _, w in pairs]

    def to_jsonl(self) -> str:
        lines = []
        for string, result, weight in zip(self.strings, self.results, self.weights):
            record = {"string": string, "count": weight}
            record.update(result.to_json() if result is not None else {"undecodable": True})
            lines.append(json.dumps(record, sort_keys=True))
        return "".join(line + "\n" for line in lines)


def decode_counts(record: CountsRecord, extractor: SyndromeExtractor, decoder: UnionFindDecoder) -> DecodedCounts:
    """Decodes each distinct counts string once.

    Shots the decoder rejects are kept with a None result and logged, so a single bad shot does not end a run.

    :param record: the counts
    :param extractor: the syndrome extractor of the circuit the counts come from
    :param decoder: the decoder of the same circuit
    :return: the decoded counts
    """
    decoded = DecodedCounts(strings=[], syndromes=[], results=[], weights=[])
    for string, count in record.counts.items():
        syndrome = extractor.extract(string)
        try:
            result: DecodeResult | None = decoder.decode(syndrome)
        except ValueError as ex:
            log.warning(f"Could not decode '{string}' ({count} shot(s)): {ex}")
            result = None
        decoded.strings.append(string)
        decoded.syndromes.append(syndrome)
        decoded.results.append(result)
        decoded.weights.append(count)
    return decoded


@dataclasses.dataclass(frozen=True)
class ClusterHistogram:
    """Number of clusters of each size over a number of shots."""

    counts: dict[int, int]
    shots: int

    @property
    def frequencies(self) -> dict[int, float]:
        if not self.shots:
            return {}
        return {size: count / self.shots for size, count in sorted(self.counts.items())}

    @property
    def log_errors(self) -> dict[int, float]:
        """Error bars of the log frequencies, 1/√N for N clusters of a size."""
        return {size: count**-0.5 for size, count in sorted(self.counts.items())}


def cluster_histogram(
    results: typing.Sequence[DecodeResult], weights: typing.Sequence[int] | None = None
) -> ClusterHistogram:
    """Counts the clusters of each size, including size 0, over all shots.

    :param results: the decode results
    :param weights: the number of shots behind each result, one each when not given
    :return: the histogram
    """
    weights = weights if weights is not None else [1] * len(results)
    counts: collections.Counter[int] = collections.Counter()
    for result, weight in zip(results, weights):
        for cluster in result.clusters:
            counts[cluster.size] += weight
    return ClusterHistogram(counts=dict(sorted(counts.items())), shots=sum(weights))


def logical_error_rate(
    results: typing.Sequence[DecodeResult], encoded: int, weights: typing.Sequence[int] | None = None
) -> float:
    """Returns the fraction of shots whose corrected logical readout differs from the encoded value.

    :raises: ValueError when there are no shots
    """
    weights = weights if weights is not None else [1] * len(results)
    shots = sum(weights)
    if shots < 1:
        raise ValueError("At least one shot is needed for a logical error rate")
    failures = sum(w for result, w in zip(results, weights) if result.corrected_logical != encoded)
    return failures / shots
