import functools
import itertools

import networkx as nx
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from arc.code_graph import (
    LinkGraph,
    auto_color,
    auto_schedule,
    bicolor_query,
    count_monochromatic,
    cycle_basis,
    flatten,
    is_edge_cut,
    validate_coloring,
    validate_schedule,
)
from arc.detection import DetectionEvent
from arc.layouts import generate_heavy_hex

LAGOS = [(0, 1, 3), (3, 5, 6)]
TRIANGLE = [(0, 1, 2), (2, 3, 4), (4, 5, 0)]
SQUARE = [(0, 1, 2), (2, 3, 4), (4, 5, 6), (6, 7, 0)]
STAR = [(0, 1, 2), (0, 3, 4), (0, 5, 6)]
HEXAGON = [(2 * k, 2 * k + 1, (2 * k + 2) % 12) for k in range(6)]


@pytest.fixture
def lagos() -> LinkGraph:
    return LinkGraph(LAGOS)


@pytest.fixture
def triangle() -> LinkGraph:
    return LinkGraph(TRIANGLE)


@st.composite
def link_graphs(draw, max_code: int = 8) -> LinkGraph:
    """Random connected link graphs: a random spanning tree plus a few extra links."""
    n = draw(st.integers(min_value=2, max_value=max_code))
    pairs = {(draw(st.integers(min_value=0, max_value=i - 1)), i) for i in range(1, n)}
    extra = draw(st.sets(st.tuples(st.integers(0, n - 1), st.integers(0, n - 1)), max_size=6))
    pairs |= {(min(a, b), max(a, b)) for a, b in extra if a != b}
    return LinkGraph([(a, n + k, b) for k, (a, b) in enumerate(sorted(pairs))])


def brute_force_cuts(graph: LinkGraph) -> set[frozenset[int]]:
    code = graph.code_qubits
    return {
        graph.boundary(subset) for size in range(len(code) + 1) for subset in itertools.combinations(code, size)
    }


class TestLinkGraph:
    def test_links(self, lagos):
        assert lagos.code_qubits == (0, 3, 6)
        assert lagos.auxiliaries == (1, 5)
        assert len(lagos) == 2
        assert lagos.designated_qubit == 0
        assert lagos.max_degree == 2
        assert lagos.links_of(3) == (0, 1)
        assert lagos.links_of(1) == ()
        assert lagos.link_between(6, 3) == 1
        assert lagos.link_between(0, 6) is None
        assert lagos.other_end(0, 3) == 0
        assert repr(lagos) == "LinkGraph(3 code qubits, 2 links)"

    def test_neighbours(self):
        line = LinkGraph([(0, 1, 4), (4, 7, 10), (10, 12, 15)])
        assert line.neighbours(1) == (0, 2)
        assert line.neighbours(0) == (1,)
        assert line.neighbours(2) == (1,)

    def test_boundary(self, lagos, triangle):
        assert lagos.boundary([0]) == {0}
        assert lagos.boundary([3]) == {0, 1}
        assert lagos.boundary([0, 3, 6]) == frozenset()
        assert triangle.boundary([2]) == {0, 1}

    def test_empty(self):
        with pytest.raises(ValueError) as excinfo:
            LinkGraph([])
        assert "at least one link" in str(excinfo.value)

    def test_self_link(self):
        with pytest.raises(ValueError) as excinfo:
            LinkGraph([(0, 1, 0)])
        assert "joins code qubit 0 to itself" in str(excinfo.value)

    def test_duplicate_link(self):
        with pytest.raises(ValueError) as excinfo:
            LinkGraph([(0, 1, 3), (3, 2, 0)])
        assert "Links 0 and 1 both join code qubits 3 and 0" in str(excinfo.value)

    def test_shared_auxiliary(self):
        with pytest.raises(ValueError) as excinfo:
            LinkGraph([(0, 1, 3), (3, 1, 6)])
        assert "Auxiliary 1 is used by 2 links" in str(excinfo.value)

    def test_auxiliary_as_code_qubit(self):
        with pytest.raises(ValueError) as excinfo:
            LinkGraph([(0, 1, 3), (3, 5, 1)])
        assert "Auxiliary 1 is also used as a code qubit" in str(excinfo.value)

    def test_negative_qubit(self):
        with pytest.raises(ValueError) as excinfo:
            LinkGraph([(0, -1, 3)])
        assert "negative qubit id" in str(excinfo.value)

    def test_disconnected(self):
        with pytest.raises(ValueError) as excinfo:
            LinkGraph([(0, 1, 2), (3, 4, 5)])
        assert "not connected" in str(excinfo.value)


class TestColoring:
    def test_lagos(self, lagos):
        color = auto_color(lagos)
        assert color == {0: 0, 3: 1, 6: 0}
        assert count_monochromatic(lagos, color) == 0

    def test_triangle(self, triangle):
        color = auto_color(triangle)
        assert set(color) == {0, 2, 4}
        assert count_monochromatic(triangle, color) == 1

    def test_heavy_hex(self):
        for size in (12, 127):
            graph = LinkGraph.from_layout(generate_heavy_hex(size))
            assert count_monochromatic(graph, auto_color(graph)) == 0

    def test_max_dist(self, lagos):
        with pytest.raises(ValueError) as excinfo:
            auto_color(lagos, max_dist=0)
        assert "max_dist must be positive" in str(excinfo.value)

    def test_validate(self, lagos):
        validate_coloring(lagos, {0: 0, 3: 1, 6: 1})

        with pytest.raises(ValueError) as excinfo:
            validate_coloring(lagos, {0: 0, 3: 1})
        assert "missing code qubits [6]" in str(excinfo.value)

        with pytest.raises(ValueError) as excinfo:
            validate_coloring(lagos, {0: 0, 3: 2, 6: 0})
        assert "Colours must be 0 or 1" in str(excinfo.value)

    @settings(max_examples=50, deadline=None)
    @given(graph=link_graphs())
    def test_bipartite_graphs_need_no_monochromatic_links(self, graph):
        color = auto_color(graph)
        validate_coloring(graph, color)
        if nx.is_bipartite(graph.graph):
            assert count_monochromatic(graph, color) == 0


class TestSchedule:
    def test_lagos(self, lagos):
        schedule = auto_schedule(lagos)
        assert schedule == [[(0, 1), (3, 5)], [(3, 1), (6, 5)]]
        validate_schedule(lagos, schedule)

    def test_single_link(self):
        graph = LinkGraph([(0, 1, 2)])
        assert auto_schedule(graph) == [[(0, 1)], [(2, 1)]]

    def test_star(self):
        graph = LinkGraph(STAR)
        schedule = auto_schedule(graph)
        assert len(schedule) >= 3
        validate_schedule(graph, schedule)

    def test_missing_interaction(self, lagos):
        with pytest.raises(ValueError) as excinfo:
            validate_schedule(lagos, [[(0, 1), (3, 5)], [(3, 1)]])
        assert "missing interactions [(6, 5)]" in str(excinfo.value)

    def test_repeated_interaction(self, lagos):
        with pytest.raises(ValueError) as excinfo:
            validate_schedule(lagos, [[(0, 1), (3, 5)], [(3, 1), (6, 5)], [(0, 1)]])
        assert "repeats the interaction (0, 1)" in str(excinfo.value)

    def test_qubit_twice_in_layer(self, lagos):
        with pytest.raises(ValueError) as excinfo:
            validate_schedule(lagos, [[(0, 1), (3, 1)], [(3, 5), (6, 5)]])
        assert "layer 0 uses a qubit of (3, 1) more than once" in str(excinfo.value)

    def test_unknown_interaction(self, lagos):
        with pytest.raises(ValueError) as excinfo:
            validate_schedule(lagos, [[(0, 5)]])
        assert "not a code qubit and auxiliary of a link" in str(excinfo.value)

    @settings(max_examples=50, deadline=None)
    @given(graph=link_graphs())
    def test_auto_schedule_is_valid(self, graph):
        schedule = auto_schedule(graph)
        validate_schedule(graph, schedule)
        assert len(schedule) >= graph.max_degree


class TestCycleBasis:
    def test_tree(self, lagos):
        index = cycle_basis(lagos)
        assert index.cycles == ()
        assert index.link_to_cycles == {}

    def test_triangle(self, triangle):
        index = cycle_basis(triangle)
        assert index.cycles == (frozenset({0, 1, 2}),)
        assert index.cycles_of([1]) == {0}

    def test_square(self):
        index = cycle_basis(LinkGraph(SQUARE))
        assert len(index.cycles) == 1
        assert len(index.cycles[0]) == 4

    def test_eagle(self):
        graph = LinkGraph.from_layout(generate_heavy_hex(127))
        index = cycle_basis(graph)
        assert len(index.cycles) == len(graph.links) - len(graph.code_qubits) + 1
        # every basis cycle of the fundamental basis closes a real cycle: each code qubit is met an even number of
        # times
        for cycle in index.cycles:
            degrees = {}
            for link in cycle:
                a, _, b = graph.links[link]
                degrees[a] = degrees.get(a, 0) + 1
                degrees[b] = degrees.get(b, 0) + 1
            assert all(d % 2 == 0 for d in degrees.values())


class TestFlatten:
    def test_flatten(self):
        assert flatten([]) == frozenset()
        events = [DetectionEvent(0, 1), DetectionEvent(1, 1), DetectionEvent(2, 0), DetectionEvent(3, 2)]
        assert flatten(events) == {0, 2}

    @given(
        a=st.sets(st.builds(DetectionEvent, st.integers(0, 4), st.integers(0, 5))),
        b=st.sets(st.builds(DetectionEvent, st.integers(0, 4), st.integers(0, 5))),
    )
    def test_linear(self, a, b):
        assert flatten(list(a) + list(b)) == flatten(a) ^ flatten(b)


class TestBicolorQuery:
    def test_lagos(self, lagos):
        index = cycle_basis(lagos)
        assert bicolor_query(lagos, index, [0]) == {0}
        assert bicolor_query(lagos, index, [1]) == {6}
        assert bicolor_query(lagos, index, [0, 1]) == {3}
        assert bicolor_query(lagos, index, []) == frozenset()

    def test_triangle(self, triangle):
        index = cycle_basis(triangle)
        assert bicolor_query(triangle, index, [0]) is None
        assert bicolor_query(triangle, index, [0, 1, 2]) is None
        assert bicolor_query(triangle, index, [0, 2]) == {0}
        assert bicolor_query(triangle, index, [0, 1]) == {2}
        assert is_edge_cut(index, [1, 2])
        assert not is_edge_cut(index, [1])

    def test_tie_goes_to_the_lowest_qubit(self):
        graph = LinkGraph.from_layout(generate_heavy_hex(12))
        index = cycle_basis(graph)
        cut = graph.boundary([0, 2, 4])
        assert cut == {2, 5}
        assert bicolor_query(graph, index, cut) == {0, 2, 4}
        assert bicolor_query(graph, index, graph.boundary([6, 8, 10])) == {0, 2, 4}

    def test_disconnected_region(self):
        graph = LinkGraph([(0, 1, 2), (2, 3, 4), (4, 5, 6), (6, 7, 8)])
        index = cycle_basis(graph)
        assert bicolor_query(graph, index, graph.boundary([0, 8])) == {0, 8}

    @pytest.mark.parametrize("links", [LAGOS, TRIANGLE, SQUARE, STAR, HEXAGON])
    def test_agrees_with_brute_force(self, links):
        graph = LinkGraph(links)
        index = cycle_basis(graph)
        cuts = brute_force_cuts(graph)
        for size in range(len(graph.links) + 1):
            for subset in itertools.combinations(range(len(graph.links)), size):
                cut = frozenset(subset)
                region = bicolor_query(graph, index, cut)
                assert (region is not None) == (cut in cuts)
                assert is_edge_cut(index, cut) == (cut in cuts)
                if region is not None:
                    assert graph.boundary(region) == cut

    @settings(max_examples=100, deadline=None)
    @given(data=st.data())
    def test_round_trip(self, data):
        graph = data.draw(link_graphs(max_code=12))
        region = data.draw(st.sets(st.sampled_from(graph.code_qubits)))
        cut = graph.boundary(region)
        found = bicolor_query(graph, cycle_basis(graph), cut)
        assert found is not None
        assert graph.boundary(found) == cut
        size = len(graph.code_qubits)
        assert 2 * len(found) <= size
        if 2 * len(found) == size:
            assert graph.designated_qubit in found

    @settings(max_examples=30, deadline=None)
    @given(data=st.data())
    def test_round_trip_eagle(self, data):
        graph = eagle()
        region = data.draw(st.sets(st.sampled_from(graph.code_qubits), max_size=10))
        cut = graph.boundary(region)
        found = bicolor_query(graph, eagle_index(), cut)
        assert found is not None
        assert graph.boundary(found) == cut
        assert len(found) <= len(region)


@functools.cache
def eagle() -> LinkGraph:
    return LinkGraph.from_layout(generate_heavy_hex(127))


@functools.cache
def eagle_index():
    return cycle_basis(eagle())
