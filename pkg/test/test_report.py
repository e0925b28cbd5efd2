import json

import pytest

from arc.decoder import ClusterHistogram
from arc.diagnostics import TimePoint
from arc.model import DecayFit, EdgeClass, EdgeEstimate, ExperimentSummary, InstanceSummary, SweepPoint
from arc.report import (
    ESTIMATE_COLUMNS,
    plot_histogram,
    plot_qubits,
    plot_sweep,
    plot_time_series,
    qubit_positions,
    render_summary,
    render_sweep,
    write_estimates,
    write_histogram,
    write_json,
    write_model,
    write_qubit_averages,
    write_sweep,
    write_time_series,
)

LAGOS_POSITIONS = {0: (0.0, 0.0), 3: (2.0, 0.0), 6: (4.0, 0.0)}


@pytest.fixture
def fit() -> DecayFit:
    return DecayFit(
        ln_rho=-1.2,
        stderr=0.05,
        rho=0.3012,
        intercept=-0.4,
        residual=0.01,
        sizes=[1, 2, 3],
        frequencies=[0.2, 0.06, 0.018],
        min_count=5,
    )


@pytest.fixture
def summary(fit) -> ExperimentSummary:
    return ExperimentSummary(
        name="demo",
        layout="lagos_d3",
        T=2,
        p=0.01,
        shots=100,
        instances=[
            InstanceSummary(basis="zx", logical=0, shots=100, logical_errors=3, undecodable=1),
            InstanceSummary(basis="xz", logical=0, shots=100, logical_errors=0),
        ],
        logical_errors=3,
        logical_error_rate=0.015,
        fit=fit,
        cluster_counts={0: 40, 1: 20},
        worst_qubits=[(3, 0.04), (5, 0.0125)],
        blocks=[{"block": 0, "link": 1, "basis": "xz", "conjugate": 0.02, "standard": None, "feedforward": 0.005}],
    )


def test_write_json(tmp_path):
    path = write_json(tmp_path / "data.json", {"b": 1, "a": [1, 2]})
    text = path.read_text()
    assert text.endswith("}\n")
    assert text.index('"a"') < text.index('"b"')
    assert json.loads(text) == {"a": [1, 2], "b": 1}


def test_write_model(tmp_path, summary):
    path = write_model(tmp_path / "summary.json", summary)
    assert ExperimentSummary.model_validate_json(path.read_text()) == summary


class TestCsv:
    def test_estimates(self, tmp_path):
        estimate = EdgeEstimate(
            edge=4,
            basis="zx",
            nodes=((0, 1), (1, 1)),
            edge_class=EdgeClass.AUX_FLIP,
            qubits=(5, 6),
            time_range=(0.0, 1.0),
            n00=90,
            n11=10,
            p_hat=0.1,
            stderr=0.03,
        )
        lines = write_estimates(tmp_path / "estimates.csv", [estimate]).read_text().splitlines()
        assert lines[0] == ",".join(ESTIMATE_COLUMNS)
        assert lines[1] == "zx,4,0,1,1,1,aux-flip,5 6,0.0,1.0,90,10,0.1,0.03,0"

    def test_qubit_averages(self, tmp_path):
        path = write_qubit_averages(tmp_path / "qubits.csv", {3: 0.04, 0: 0.02})
        assert path.read_text() == "qubit,p_avg\n0,0.02\n3,0.04\n"

    def test_time_series(self, tmp_path):
        points = [TimePoint(time=0.5, edge_class=EdgeClass.AUX_FLIP, mean=0.01, count=2)]
        path = write_time_series(tmp_path / "time.csv", points)
        assert path.read_text() == "time,class,mean,count\n0.5,aux-flip,0.01,2\n"

    def test_histogram(self, tmp_path):
        path = write_histogram(tmp_path / "histogram.csv", ClusterHistogram(counts={1: 4, 2: 1}, shots=10))
        assert path.read_text() == "size,count,frequency,log_error\n1,4,0.4,0.5\n2,1,0.1,1.0\n"

    def test_sweep(self, tmp_path, fit):
        points = [
            SweepPoint(p=0.01, shots=100, logical_errors=1, logical_error_rate=0.01, fit=fit),
            SweepPoint(p=0.02, shots=100, logical_errors=5, logical_error_rate=0.05),
        ]
        lines = write_sweep(tmp_path / "sweep.csv", points).read_text().splitlines()
        assert lines == [
            "p,shots,logical_errors,logical_error_rate,ln_rho,rho",
            "0.01,100,1,0.01,-1.2,0.3012",
            "0.02,100,5,0.05,,",
        ]


class TestRender:
    def test_summary(self, summary):
        text = render_summary(summary)
        assert text.startswith("Experiment 'demo' on lagos_d3: T=2, p=0.01, 100 shots per instance\n")
        assert "  zx/0: 3 logical error(s) in 100 shots, 1 undecodable\n" in text
        assert "  xz/0: 0 logical error(s) in 100 shots\n" in text
        assert "Logical error rate: 0.015000 (3 error(s))" in text
        assert "Decay fit: ln rho = -1.2000 +/- 0.0500, rho = 0.3012 over sizes 1, 2, 3" in text
        assert "Worst qubits: 3 (0.0400) 5 (0.0125)" in text
        assert "[[2,0,2]] block 0 on link 1 (xz): conjugate 0.0200, standard -, feedforward 0.0050" in text

    def test_summary_without_fit(self, summary):
        text = render_summary(summary.model_copy(update={"fit": None, "worst_qubits": [], "blocks": []}))
        assert "Decay fit: not enough cluster sizes" in text
        assert "Worst qubits" not in text
        assert "[[2,0,2]]" not in text

    def test_sweep(self, fit):
        points = [
            SweepPoint(p=0.01, shots=100, logical_errors=1, logical_error_rate=0.01, fit=fit),
            SweepPoint(p=0.02, shots=100, logical_errors=5, logical_error_rate=0.05),
        ]
        text = render_sweep(points, 0.0147)
        assert "p=0.0100: logical error rate 0.010000, ln rho -1.2000, rho/p 30.1\n" in text
        assert "p=0.0200: logical error rate 0.050000\n" in text
        assert text.endswith("Pseudothreshold: 0.0147\n")
        assert render_sweep(points, None).endswith("Pseudothreshold: no crossing\n")


class TestQubitPositions:
    def test_given(self, make_graph):
        placed = qubit_positions(make_graph("lagos_d3"), LAGOS_POSITIONS)
        assert placed[0] == (0.0, 0.0)
        # auxiliaries without a position sit between their code qubits
        assert placed[1] == (1.0, 0.0)
        assert placed[5] == (3.0, 0.0)

    def test_auxiliary_given(self, make_graph):
        placed = qubit_positions(make_graph("lagos_d3"), {**LAGOS_POSITIONS, 1: (1.0, 1.0)})
        assert placed[1] == (1.0, 1.0)
        assert placed[5] == (3.0, 0.0)

    def test_spring_layout(self, make_graph):
        graph = make_graph("triangle")
        placed = qubit_positions(graph)
        assert set(placed) == {0, 1, 2, 3, 4, 5}
        assert placed == qubit_positions(graph)


class TestPlots:
    def test_qubits(self, tmp_path, make_graph):
        graph = make_graph("lagos_d3")
        first = plot_qubits(tmp_path / "a.svg", graph, {0: 0.01, 1: 0.02, 3: 0.03}, LAGOS_POSITIONS)
        second = plot_qubits(tmp_path / "b.svg", graph, {0: 0.01, 1: 0.02, 3: 0.03}, LAGOS_POSITIONS)
        assert first.read_text().startswith("<?xml")
        assert first.read_bytes() == second.read_bytes()

    def test_time_series(self, tmp_path):
        points = [
            TimePoint(time=0.0, edge_class=EdgeClass.CODE_BITFLIP, mean=0.01, count=2),
            TimePoint(time=0.5, edge_class=EdgeClass.AUX_FLIP, mean=0.02, count=1),
            TimePoint(time=1.0, edge_class=EdgeClass.CODE_BITFLIP, mean=0.015, count=2),
        ]
        assert "aux-flip" in plot_time_series(tmp_path / "time.svg", points).read_text()
        assert plot_time_series(tmp_path / "empty.svg", []).exists()

    def test_histogram(self, tmp_path, fit):
        histogram = ClusterHistogram(counts={0: 50, 1: 20, 2: 6, 3: 2}, shots=100)
        assert plot_histogram(tmp_path / "histogram.svg", histogram, fit).exists()
        assert plot_histogram(tmp_path / "empty.svg", ClusterHistogram(counts={}, shots=0)).exists()

    def test_sweep(self, tmp_path):
        points = [
            SweepPoint(p=0.01, shots=100, logical_errors=0, logical_error_rate=0.0),
            SweepPoint(p=0.02, shots=100, logical_errors=4, logical_error_rate=0.04),
        ]
        assert "pseudothreshold 0.0150" in plot_sweep(tmp_path / "sweep.svg", points, 0.015).read_text()
