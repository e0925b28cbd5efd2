import csv
import json
import logging
import typing
from pathlib import Path

import matplotlib
import networkx as nx
import numpy as np
from jinja2 import Environment, PackageLoader, StrictUndefined
from matplotlib.figure import Figure
from pydantic import BaseModel

from arc.code_graph import LinkGraph
from arc.decoder import ClusterHistogram
from arc.diagnostics import TimePoint
from arc.model import DecayFit, EdgeEstimate, ExperimentSummary, SweepPoint

log = logging.getLogger(__name__)

ESTIMATE_COLUMNS = [
    "basis",
    "edge",
    "node0_time",
    "node0_link",
    "node1_time",
    "node1_link",
    "class",
    "qubits",
    "t_lo",
    "t_hi",
    "n00",
    "n11",
    "p_hat",
    "stderr",
    "flagged",
]
# fixed svg ids and no timestamps, so that reruns write identical plots
SVG_PARAMS = {"svg.hashsalt": "arc", "svg.fonttype": "none"}
SVG_METADATA = {"Date": None}

_env = Environment(
    loader=PackageLoader("arc", "templates"),
    undefined=StrictUndefined,
    keep_trailing_newline=True,
    trim_blocks=True,
    lstrip_blocks=True,
)


def write_json(path: Path, data: typing.Any) -> Path:
    path.write_text(json.dumps(data, indent=2, sort_keys=True) + "\n")
    return path


def write_model(path: Path, model: BaseModel) -> Path:
    return write_json(path, model.model_dump(mode="json"))


def write_csv(path: Path, header: typing.Sequence[str], rows: typing.Iterable[typing.Sequence[typing.Any]]) -> Path:
    with path.open("w", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)
    return path


def _fmt(value: float) -> str:
    return repr(float(value))


def write_estimates(path: Path, estimates: typing.Iterable[EdgeEstimate]) -> Path:
    rows = (
        [
            e.basis,
            e.edge,
            e.nodes[0][0],
            e.nodes[0][1],
            e.nodes[1][0],
            e.nodes[1][1],
            e.edge_class.value,
            " ".join(str(q) for q in e.qubits),
            _fmt(e.time_range[0]),
            _fmt(e.time_range[1]),
            e.n00,
            e.n11,
            _fmt(e.p_hat),
            _fmt(e.stderr),
            int(e.flagged),
        ]
        for e in estimates
    )
    return write_csv(path, ESTIMATE_COLUMNS, rows)


def write_qubit_averages(path: Path, averages: typing.Mapping[int, float]) -> Path:
    return write_csv(path, ["qubit", "p_avg"], ([q, _fmt(p)] for q, p in sorted(averages.items())))


def write_time_series(path: Path, points: typing.Iterable[TimePoint]) -> Path:
    rows = ([_fmt(p.time), p.edge_class.value, _fmt(p.mean), p.count] for p in points)
    return write_csv(path, ["time", "class", "mean", "count"], rows)


def write_histogram(path: Path, histogram: ClusterHistogram) -> Path:
    frequencies, errors = histogram.frequencies, histogram.log_errors
    rows = ([n, histogram.counts[n], _fmt(frequencies[n]), _fmt(errors[n])] for n in sorted(histogram.counts))
    return write_csv(path, ["size", "count", "frequency", "log_error"], rows)


def write_sweep(path: Path, points: typing.Iterable[SweepPoint]) -> Path:
    rows = (
        [
            _fmt(point.p),
            point.shots,
            point.logical_errors,
            _fmt(point.logical_error_rate),
            "" if point.fit is None else _fmt(point.fit.ln_rho),
            "" if point.fit is None else _fmt(point.fit.rho),
        ]
        for point in points
    )
    return write_csv(path, ["p", "shots", "logical_errors", "logical_error_rate", "ln_rho", "rho"], rows)


def render_summary(summary: ExperimentSummary) -> str:
    """Renders the one-screen text summary of an experiment."""
    return _env.get_template("summary.txt.j2").render(summary=summary)


def render_sweep(points: typing.Sequence[SweepPoint], threshold: float | None) -> str:
    return _env.get_template("sweep.txt.j2").render(points=points, threshold=threshold)


def _save(fig: Figure, path: Path) -> Path:
    with matplotlib.rc_context(SVG_PARAMS):
        fig.savefig(path, format="svg", metadata=SVG_METADATA)
    log.debug(f"Wrote plot '{path}'")
    return path


def qubit_positions(
    graph: LinkGraph, positions: typing.Mapping[int, tuple[float, float]] | None = None
) -> dict[int, tuple[float, float]]:
    """Returns plot positions of the code qubits and auxiliaries, laying the graph out when none are given.

    Auxiliaries without a position sit halfway between the code qubits of their link.
    """
    if positions is None or any(q not in positions for q in graph.code_qubits):
        layout = nx.spring_layout(graph.graph, seed=0)
        placed = {q: (float(x), float(y)) for q, (x, y) in layout.items()}
    else:
        placed = {q: tuple(positions[q]) for q in graph.code_qubits}  # type: ignore[misc]
    for a, aux, b in graph.links:
        if positions is not None and aux in positions and a in positions:
            placed[aux] = tuple(positions[aux])  # type: ignore[assignment]
        else:
            placed[aux] = ((placed[a][0] + placed[b][0]) / 2, (placed[a][1] + placed[b][1]) / 2)
    return placed


def plot_qubits(
    path: Path,
    graph: LinkGraph,
    averages: typing.Mapping[int, float],
    positions: typing.Mapping[int, tuple[float, float]] | None = None,
) -> Path:
    """Plots the average error estimate of every qubit over the layout of the code."""
    placed = qubit_positions(graph, positions)
    fig = Figure(figsize=(10, 6))
    ax = fig.subplots()
    for a, aux, b in graph.links:
        xs = [placed[a][0], placed[aux][0], placed[b][0]]
        ys = [-placed[a][1], -placed[aux][1], -placed[b][1]]
        ax.plot(xs, ys, color="lightgray", linewidth=1, zorder=1)
    qubits = sorted(placed)
    values = [averages.get(q, np.nan) for q in qubits]
    points = ax.scatter(
        [placed[q][0] for q in qubits],
        [-placed[q][1] for q in qubits],
        c=values,
        cmap="viridis",
        s=[80 if q in graph.code_qubits else 40 for q in qubits],
        zorder=2,
    )
    ax.set_aspect("equal")
    ax.axis("off")
    fig.colorbar(points, ax=ax, label="average error probability")
    return _save(fig, path)


def plot_time_series(path: Path, points: typing.Sequence[TimePoint]) -> Path:
    """Plots the mean estimate of each edge class against time."""
    fig = Figure(figsize=(8, 5))
    ax = fig.subplots()
    classes = sorted({p.edge_class for p in points}, key=lambda c: c.value)
    for edge_class in classes:
        series = [p for p in points if p.edge_class == edge_class]
        ax.plot([p.time for p in series], [p.mean for p in series], marker="o", label=edge_class.value)
    ax.set_xlabel("time (rounds)")
    ax.set_ylabel("mean error probability")
    if classes:
        ax.legend()
    return _save(fig, path)


def plot_histogram(path: Path, histogram: ClusterHistogram, fit: DecayFit | None = None) -> Path:
    """Plots log cluster size frequencies with 1/√N error bars and the decay fit."""
    fig = Figure(figsize=(6, 5))
    ax = fig.subplots()
    frequencies, errors = histogram.frequencies, histogram.log_errors
    sizes = [n for n in frequencies if n >= 1]
    if sizes:
        ax.errorbar(
            sizes,
            [np.log(frequencies[n]) for n in sizes],
            yerr=[errors[n] for n in sizes],
            fmt="o",
            capsize=3,
            label="clusters",
        )
    if fit is not None:
        xs = np.array([min(fit.sizes), max(fit.sizes)], dtype=float)
        ax.plot(xs, fit.intercept + fit.ln_rho * xs, label=f"ln ρ = {fit.ln_rho:.3f} ± {fit.stderr:.3f}")
    ax.set_xlabel("cluster size")
    ax.set_ylabel("ln frequency")
    if sizes or fit is not None:
        ax.legend()
    return _save(fig, path)


def plot_sweep(path: Path, points: typing.Sequence[SweepPoint], threshold: float | None = None) -> Path:
    """Plots the logical error rate against the physical error rate, with the line y = p."""
    fig = Figure(figsize=(6, 5))
    ax = fig.subplots()
    ps = [point.p for point in points]
    ax.plot(ps, [point.logical_error_rate for point in points], marker="o", label="logical error rate")
    ax.plot(ps, ps, linestyle="--", color="gray", label="p")
    if threshold is not None:
        ax.axvline(threshold, color="red", linewidth=1, label=f"pseudothreshold {threshold:.4f}")
    ax.set_xlabel("physical error rate p")
    ax.set_ylabel("logical error rate")
    ax.legend()
    return _save(fig, path)
