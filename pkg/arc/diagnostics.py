import collections
import dataclasses
import logging
import math
import typing

import numpy as np
import scipy.sparse
import scipy.stats

from arc.decoder import ClusterHistogram
from arc.decoding_graph import DecodingGraph
from arc.detection import ShotSyndrome
from arc.model import CircuitIR, DecayFit, EdgeClass, EdgeEstimate

log = logging.getLogger(__name__)

# qubits whose average estimate reaches this are left out of the time series
WELL_BEHAVED_LIMIT = 0.1
CODE_CLASSES = (EdgeClass.CODE_BITFLIP, EdgeClass.CODE_PHASEFLIP)


def naive_estimate(
    shots: typing.Sequence[ShotSyndrome], dgraph: DecodingGraph, weights: typing.Sequence[int] | None = None
) -> list[EdgeEstimate]:
    """Estimates the probability of every edge from how often its nodes appear together.

    With n11 the shots holding both nodes of an edge and n00 the shots holding neither, r = n11/n00 and the
    estimate is r/(1+r). For a self-edge n11 counts the shots holding the node and n00 the rest.

    :param shots: the shot syndromes
    :param dgraph: the decoding graph the syndromes belong to
    :param weights: the number of shots behind each syndrome, one each when not given
    :return: one estimate per edge, in edge order
    :raises: ValueError when there are no shots
    """
    weights = np.asarray(weights if weights is not None else [1] * len(shots), dtype=np.int64)
    total = int(weights.sum())
    if total < 1:
        raise ValueError("At least one shot is needed to estimate edge probabilities")

    index = {node: i for i, node in enumerate(dgraph.nodes)}
    rows = [row for row, shot in enumerate(shots) for _ in shot.events]
    cols = [index[event] for shot in shots for event in shot.events]
    present = scipy.sparse.csr_matrix(
        (np.ones(len(rows), dtype=np.int64), (rows, cols)), shape=(len(shots), len(dgraph.nodes))
    )
    singles = np.asarray(present.T @ weights).ravel()
    pairs = (present.T @ scipy.sparse.diags(weights) @ present).tocsr()

    estimates = []
    for number, edge in enumerate(dgraph.edges):
        i, j = index[edge.nodes[0]], index[edge.nodes[1]]
        if i == j:
            n11 = int(singles[i])
            n00 = total - n11
        else:
            n11 = int(pairs[i, j])
            n00 = total - int(singles[i]) - int(singles[j]) + n11
        flagged = n00 == 0
        if flagged:
            p_hat, stderr = 1.0, math.inf
        else:
            p_hat = n11 / (n00 + n11)
            stderr = math.sqrt(p_hat * (1 - p_hat) / (n00 + n11))
        estimates.append(
            EdgeEstimate(
                edge=number,
                basis=dgraph.basis,
                nodes=((edge.nodes[0].time, edge.nodes[0].link), (edge.nodes[1].time, edge.nodes[1].link)),
                edge_class=edge.edge_class,
                qubits=tuple(sorted(edge.qubits)),
                time_range=edge.time_range,
                n00=n00,
                n11=n11,
                p_hat=p_hat,
                stderr=stderr,
                flagged=flagged,
            )
        )
    flagged_count = sum(e.flagged for e in estimates)
    if flagged_count:
        log.warning(f"{flagged_count} edge estimate(s) of '{dgraph.basis}' have no shot without either node")
    return estimates


def qubit_averages(estimates: typing.Iterable[EdgeEstimate]) -> dict[int, float]:
    """Averages the estimates of all edges with support on each qubit, leaving out flagged estimates."""
    values: dict[int, list[float]] = collections.defaultdict(list)
    for estimate in estimates:
        if estimate.flagged:
            continue
        for q in estimate.qubits:
            values[q].append(estimate.p_hat)
    return {q: float(np.mean(v)) for q, v in sorted(values.items())}


@dataclasses.dataclass(frozen=True)
class TimePoint:
    time: float
    edge_class: EdgeClass
    mean: float
    count: int


def time_series(estimates: typing.Sequence[EdgeEstimate], limit: float = WELL_BEHAVED_LIMIT) -> list[TimePoint]:
    """Averages edge estimates by class and by time, rounded to the nearest half round.

    The time of an edge is the midpoint of its time range, so auxiliary edges with resets sit halfway between
    rounds. Only edges whose qubits all average below the limit are included.

    :param estimates: the edge estimates
    :param limit: the average above which a qubit is not well behaved
    :return: the mean estimate of each (time, class) bin, sorted by time then class
    """
    averages = qubit_averages(estimates)
    bins: dict[tuple[float, EdgeClass], list[float]] = collections.defaultdict(list)
    for estimate in estimates:
        if estimate.flagged or any(averages.get(q, 0.0) >= limit for q in estimate.qubits):
            continue
        middle = sum(estimate.time_range) / 2
        bins[(round(middle * 2) / 2, estimate.edge_class)].append(estimate.p_hat)
    return [
        TimePoint(time=time, edge_class=edge_class, mean=float(np.mean(values)), count=len(values))
        for (time, edge_class), values in sorted(bins.items(), key=lambda item: (item[0][0], item[0][1].value))
    ]


def _check_probability(name: str, value: float) -> None:
    if not 0.0 <= value <= 0.5:
        raise ValueError(f"{name} must be between 0 and 0.5, got {value}")


def estimated_probability(p: float, q: float, degree: int = 10) -> float:
    """Returns the naive estimate of an edge of probability p whose nodes each have degree - 1 other edges of q.

    A node appears when an odd number of its adjacent errors occur, so the other edges of a node make it appear
    with probability (1 - (1 - 2q)^(degree - 1))/2.
    """
    _check_probability("p", p)
    _check_probability("q", q)
    if degree < 1:
        raise ValueError(f"degree must be positive, got {degree}")
    w = (1 - (1 - 2 * q) ** (degree - 1)) / 2
    p11 = p * (1 - w) ** 2 + (1 - p) * w**2
    p00 = (1 - p) * (1 - w) ** 2 + p * w**2
    return p11 / (p00 + p11)


def estimator_error_curve(p: float, q: float, degree: int = 10, relative_to: str = "p") -> float:
    """Returns the relative error of the naive estimate of an edge surrounded by edges of another probability.

    :param p: the probability of the edge
    :param q: the probability of the other edges of both its nodes
    :param degree: the degree of both nodes
    :param relative_to: "p" to compare the estimate with p, "q" to compare it with q
    :return: |p̂ - ref| / ref
    :raises: ValueError for probabilities outside [0, 0.5]
    """
    if relative_to not in ("p", "q"):
        raise ValueError(f"relative_to must be 'p' or 'q', got '{relative_to}'")
    p_hat = estimated_probability(p, q, degree)
    reference = p if relative_to == "p" else q
    if reference == 0:
        return 0.0 if p_hat == 0 else math.inf
    return abs(p_hat - reference) / reference


def fit_decay(
    histogram: ClusterHistogram | typing.Mapping[int, float], min_count: int = 5, include_zero: bool = False
) -> DecayFit:
    """Fits a decay of the form ρ^n to cluster size frequencies.

    A least squares line is fitted to the logarithms of the frequencies of sizes n >= 1 (n >= 0 with include_zero),
    keeping only the sizes seen at least min_count times when the histogram carries counts.

    :param histogram: a cluster histogram, or frequencies by size
    :param min_count: the fewest clusters of a size for it to enter the fit
    :param include_zero: whether size 0 clusters enter the fit
    :return: the fit
    :raises: ValueError when fewer than two sizes are usable
    """
    if isinstance(histogram, ClusterHistogram):
        frequencies = histogram.frequencies
        usable = {n: f for n, f in frequencies.items() if histogram.counts[n] >= min_count}
    else:
        usable = dict(histogram)
    usable = {n: f for n, f in sorted(usable.items()) if f > 0 and (n >= 1 or (include_zero and n == 0))}
    if len(usable) < 2:
        raise ValueError(f"At least two cluster sizes are needed for a decay fit, got {len(usable)}")

    sizes = np.array(list(usable), dtype=float)
    logs = np.log(np.array(list(usable.values())))
    fit = scipy.stats.linregress(sizes, logs)
    residual = float(np.sum((logs - (fit.intercept + fit.slope * sizes)) ** 2))
    return DecayFit(
        ln_rho=float(fit.slope),
        stderr=float(fit.stderr),
        rho=math.exp(fit.slope),
        intercept=float(fit.intercept),
        residual=residual,
        sizes=[int(n) for n in usable],
        frequencies=list(usable.values()),
        min_count=min_count,
    )


@dataclasses.dataclass(frozen=True)
class BlockSummary:
    """The edges that describe one [[2,0,2]] block."""

    block: int
    link: int
    conjugate: list[EdgeEstimate]
    standard: list[EdgeEstimate]
    feedforward: list[EdgeEstimate]

    @staticmethod
    def mean(estimates: typing.Sequence[EdgeEstimate]) -> float | None:
        usable = [e.p_hat for e in estimates if not e.flagged]
        return float(np.mean(usable)) if usable else None


def summarize_202(estimates: typing.Iterable[EdgeEstimate], circuit: CircuitIR) -> list[BlockSummary]:
    """Picks out the conjugate self-edges, the standard self-edges and the feedforward edges of each block.

    :param estimates: edge estimates of the circuit
    :param circuit: the circuit holding the blocks
    :return: one summary per block
    """
    estimates = list(estimates)
    summaries = []
    for number, block in enumerate(circuit.blocks):
        first, last = block.start, block.start + block.rounds

        def on_link(e: EdgeEstimate, times: typing.Collection[int]) -> bool:
            (t, link), _ = e.nodes
            return e.is_self_edge and link == block.link and t in times

        summaries.append(
            BlockSummary(
                block=number,
                link=block.link,
                conjugate=[
                    e for e in estimates if e.edge_class == EdgeClass.CONJUGATE and on_link(e, block.conjugate_rounds)
                ],
                standard=[e for e in estimates if e.edge_class in CODE_CLASSES and on_link(e, block.standard_rounds)],
                feedforward=[
                    e
                    for e in estimates
                    if e.edge_class == EdgeClass.FEEDFORWARD and all(first <= t <= last for t, _ in e.nodes)
                ],
            )
        )
    return summaries


def pseudothreshold(points: typing.Iterable[tuple[float, float]]) -> float | None:
    """Finds where the logical error rate first reaches the physical error rate.

    :param points: (physical error rate, logical error rate) pairs
    :return: the crossing, interpolated linearly between neighbouring points, or None without a crossing
    """
    ordered = sorted(points)
    for (p0, rate0), (p1, rate1) in zip(ordered, ordered[1:]):
        below, above = rate0 - p0, rate1 - p1
        if below == 0:
            return p0
        if below < 0 <= above:
            return p0 + (p1 - p0) * (-below) / (above - below)
    if ordered and ordered[-1][1] == ordered[-1][0]:
        return ordered[-1][0]
    return None
