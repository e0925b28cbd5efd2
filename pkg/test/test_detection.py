import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from arc.detection import (
    DetectionEvent,
    ShotSyndrome,
    SyndromeExtractor,
    detector_definitions,
    extract,
    load_counts,
)
from arc.model import CountsRecord
from arc.simulator import fault_locations, propagate_faults

E = DetectionEvent


@pytest.fixture
def lagos(make_circuit):
    return make_circuit("lagos_d3", T=2, basis="zx")


@pytest.fixture
def extractor(lagos) -> SyndromeExtractor:
    return SyndromeExtractor(lagos)


class TestDetectionEvent:
    def test_order(self):
        assert sorted([E(1, 0), E(0, 1), E(0, 0)]) == [E(0, 0), E(0, 1), E(1, 0)]

    def test_str(self):
        assert str(E(3, 2)) == "(3,2)"
        assert str(E(3, 2, is_conjugate=True)) == "(3,2c)"
        assert str(E(10, 0, is_final=True)) == "(10,0f)"
        assert str(E(4, 1, is_block=True)) == "(4,1b)"

    def test_internal(self):
        assert E(3, 1, is_conjugate=True).is_internal
        assert E(4, 1, is_block=True).is_internal
        assert not E(4, 1).is_internal
        assert not E(10, 1, is_final=True).is_internal


class TestDetectorDefinitions:
    def test_with_resets(self, lagos):
        nodes, parities, readouts = detector_definitions(lagos)
        assert nodes == [E(0, 0), E(0, 1), E(1, 0), E(1, 1), E(2, 0, is_final=True), E(2, 1, is_final=True)]
        assert parities == [{0}, {1}, {0, 2}, {1, 3}, {2, 4, 5}, {3, 5, 6}]
        assert readouts == {0: {4}, 3: {5}, 6: {6}}

    def test_without_resets(self, make_circuit):
        circuit = make_circuit("lagos_d3", T=3, resets=False)
        nodes, parities, _ = detector_definitions(circuit)
        # clbits: round r measures link 0 into 2r and link 1 into 2r + 1, the finals are 6, 7 and 8
        assert nodes[:6] == [E(0, 0), E(0, 1), E(1, 0), E(1, 1), E(2, 0), E(2, 1)]
        assert parities[:6] == [{0}, {1}, {2}, {3}, {0, 4}, {1, 5}]
        assert parities[6:] == [{6, 7, 2, 4}, {7, 8, 3, 5}]

    # clbits of line_202 at T=10: round 0 measures every link into 0, 1 and 2, rounds 1 to 7 only the given
    # link 1 into 3 to 9, round 8 every link into 10, 11 and 12 and round 9 into 13, 14 and 15; the finals of
    # qubits 0, 4, 10 and 15 are 16 to 19. Qubit 4 takes its control from link 0 and qubit 10 from link 2.

    def test_202_with_feedforward(self, make_circuit):
        circuit = make_circuit("line_202", T=10, basis="xz", run_202=True)
        nodes, parities, readouts = detector_definitions(circuit)
        by_node = dict(zip(nodes, parities))
        # an unreset neighbour that controls the feedforward has nothing to compare with
        assert E(8, 0) not in by_node
        assert by_node[E(9, 0)] == {0, 13}
        # the given link compares across the block with the frame shift, then again after the feedforward
        assert by_node[E(8, 1)] == {1, 10, 11, 12}
        assert by_node[E(9, 1)] == {10, 11, 12, 14}
        # the standard values inside the block form their own chain, starting with round 2
        assert E(2, 1, is_block=True) not in by_node
        assert by_node[E(4, 1, is_block=True)] == {4, 6}
        assert by_node[E(6, 1, is_block=True)] == {6, 8}
        # conjugate values compare with the previous conjugate value
        assert E(1, 1, is_conjugate=True) not in by_node
        assert by_node[E(3, 1, is_conjugate=True)] == {3, 5}
        assert by_node[E(7, 1, is_conjugate=True)] == {7, 9}
        assert readouts == {0: {16}, 4: {17}, 10: {18}, 15: {19}}

    def test_202_without_feedforward(self, make_circuit):
        circuit = make_circuit("line_202", T=10, basis="xz", run_202=True, ff=False)
        nodes, parities, readouts = detector_definitions(circuit)
        by_node = dict(zip(nodes, parities))
        assert by_node[E(9, 0)] == {0, 10, 13}
        assert by_node[E(9, 2)] == {2, 12, 15}
        assert by_node[E(8, 1)] == {1, 10, 11, 12}
        assert by_node[E(9, 1)] == {11, 14}
        # the readouts of the given link's qubits move with their controls
        assert readouts == {0: {16}, 4: {17, 10}, 10: {18, 12}, 15: {19}}


class TestSyndromeExtractor:
    def test_noiseless(self, extractor):
        assert extractor.extract("000 00 00") == ShotSyndrome(events=frozenset(), raw_logical=0)

    def test_single_event(self, extractor):
        syndrome = extractor.extract("100 10 00")
        assert syndrome.events == {E(1, 1)}
        assert syndrome.raw_logical == 0

    def test_logical_flip(self, extractor):
        syndrome = extractor.extract("001 00 00")
        assert syndrome.events == {E(2, 0, is_final=True)}
        assert syndrome.raw_logical == 1

    def test_time_like_pair(self, extractor):
        assert extractor.extract("000 00 10").events == {E(0, 1), E(1, 1)}

    def test_events_matrix(self, extractor):
        bits = np.zeros((3, 7), dtype=np.uint8)
        bits[1, [3, 6]] = 1
        bits[2, 4] = 1
        fired = extractor.events_matrix(bits)
        assert fired.shape == (3, 6)
        assert fired.dtype == np.bool_
        assert np.flatnonzero(fired[0]).tolist() == []
        assert np.flatnonzero(fired[1]).tolist() == [3]
        assert np.flatnonzero(fired[2]).tolist() == [4]
        assert extractor.logicals(bits).tolist() == [0, 0, 1]

    def test_wrong_width(self, extractor):
        with pytest.raises(ValueError) as excinfo:
            extractor.events_matrix(np.zeros((1, 5)))
        assert "Expected 7 classical bits, got 5" in str(excinfo.value)

    def test_events_of_flips(self, extractor):
        flips = np.zeros((7, 2), dtype=np.bool_)
        flips[[3, 6], 0] = True
        flips[4, 1] = True
        assert extractor.events_of_flips(flips) == [{E(1, 1)}, {E(2, 0, is_final=True)}]
        assert extractor.logical_flips(flips).tolist() == [False, True]

    @settings(max_examples=50, deadline=None)
    @given(data=st.data())
    def test_faults_add_up(self, make_circuit, data):
        # the events and logical value of two faults together are the sums of those of each fault
        circuit = make_circuit("lagos_d3", T=2, basis="zx")
        extractor = SyndromeExtractor(circuit)
        flips = propagate_faults(circuit, fault_locations(circuit))
        first, second = data.draw(st.lists(st.integers(0, flips.shape[1] - 1), min_size=2, max_size=2, unique=True))
        one, other = extractor.extract_bits(flips[:, first]), extractor.extract_bits(flips[:, second])
        both = extractor.extract_bits(flips[:, first] ^ flips[:, second])
        assert both.events == one.events ^ other.events
        assert both.raw_logical == one.raw_logical ^ other.raw_logical

    def test_bad_string(self, extractor):
        with pytest.raises(ValueError):
            extractor.extract("1000 10 00")

    def test_extract(self, lagos):
        assert extract("100 10 00", lagos).events == {E(1, 1)}


def test_load_counts(tmp_path):
    record = CountsRecord(counts={"000 00 00": 9, "100 10 00": 1}, shots=10, basis="zx", logical=0)
    path = tmp_path / "counts.json"
    path.write_text(record.model_dump_json())
    assert load_counts(path) == record
