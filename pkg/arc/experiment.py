import dataclasses
import logging
import typing
from pathlib import Path

from arc import report
from arc.circuit import build_circuit
from arc.code_graph import CycleBasisIndex, LinkGraph, auto_color, auto_schedule, cycle_basis
from arc.decoder import (
    ClusterHistogram,
    DecodedCounts,
    DecodeResult,
    UnionFindDecoder,
    cluster_histogram,
    decode_counts,
)
from arc.decoding_graph import DecodingGraph, build
from arc.detection import SyndromeExtractor
from arc.diagnostics import (
    TimePoint,
    fit_decay,
    naive_estimate,
    pseudothreshold,
    qubit_averages,
    summarize_202,
    time_series,
)
from arc.layouts import LayoutDB, MemoryLayoutDB, load_layout
from arc.model import (
    CircuitIR,
    CountsRecord,
    DecayFit,
    EdgeEstimate,
    ExperimentConfig,
    ExperimentSummary,
    InstanceSummary,
    Layout,
    SweepPoint,
)
from arc.simulator import simulate, to_stim
from arc.utils import derive_seeds

log = logging.getLogger(__name__)

WORST_QUBITS = 5


@dataclasses.dataclass
class Instance:
    """One circuit of the experiment: an encoding basis and a logical value."""

    basis: str
    logical: int
    circuit: CircuitIR
    counts: CountsRecord | None = None
    decoded: DecodedCounts | None = None

    @property
    def key(self) -> str:
        return f"{self.basis}_{self.logical}"

    def summary(self) -> InstanceSummary:
        if self.decoded is None:
            raise ValueError(f"Instance '{self.key}' has not been decoded")
        results, weights = self.decoded.decoded()
        failures = sum(w for result, w in zip(results, weights) if result.corrected_logical != self.logical)
        undecodable = self.decoded.undecodable
        return InstanceSummary(
            basis=self.basis,
            logical=self.logical,
            shots=self.decoded.shots,
            logical_errors=failures + undecodable,
            undecodable=undecodable,
        )


@dataclasses.dataclass
class Analysis:
    estimates: list[EdgeEstimate]
    averages: dict[int, float]
    series: list[TimePoint]
    histogram: ClusterHistogram
    fit: DecayFit | None
    blocks: list[dict[str, typing.Any]]


@dataclasses.dataclass
class ReportBundle:
    """The files written by a run and its summary."""

    output: Path
    files: list[Path]
    summary: ExperimentSummary
    text: str


class ExperimentSession:
    def __init__(self, config: ExperimentConfig, db: LayoutDB | None = None):
        """Creates a new experiment session and builds its circuits.

        :param config: the experiment configuration
        :param db: the layout database, loaded from the configured layouts file when not given
        :raises: ValueError if the layout cannot be found or does not describe a valid code
        """
        self.config = config
        if db is None and config.layouts_file.exists():
            db = MemoryLayoutDB(config.layouts_file)
        self.db = db
        self.instances: dict[tuple[str, int], Instance] = {}
        self.extractors: dict[str, SyndromeExtractor] = {}
        self.dgraphs: dict[str, DecodingGraph] = {}
        self.decoders: dict[str, UnionFindDecoder] = {}
        self.prepare()

    @property
    def name(self) -> str:
        return self.config.name

    @property
    def bases(self) -> list[str]:
        bases = [self.config.basis]
        if self.config.both_bases:
            bases.append(self.config.basis[::-1])
        return list(dict.fromkeys(bases))

    def prepare(self) -> None:
        """Loads the layout, completes its colouring and schedule, and builds every circuit instance."""
        config = self.config
        layout = load_layout(config.layout, self.db)
        self.graph = LinkGraph.from_layout(layout)
        color = layout.color if layout.color is not None else auto_color(self.graph, config.max_dist)
        schedule = layout.schedule if layout.schedule is not None else auto_schedule(self.graph)
        self.layout: Layout = layout.model_copy(update={"color": color, "schedule": schedule})
        self.index: CycleBasisIndex = cycle_basis(self.graph)
        log.info(
            f"Experiment '{self.name}': layout '{layout.name}' has {len(self.graph.code_qubits)} code qubits, "
            f"{len(self.graph)} links and {len(schedule)} schedule layers"
        )

        for basis in self.bases:
            for logical in config.logicals:
                circuit = build_circuit(self.graph, color, schedule, config.arc_options(logical, basis))
                self.instances[(basis, logical)] = Instance(basis=basis, logical=logical, circuit=circuit)

    def decoding_graph(self, basis: str) -> DecodingGraph:
        """Builds, once per basis, the extractor, decoding graph and decoder shared by both logical values."""
        if basis not in self.dgraphs:
            circuit = next(i.circuit for i in self.instances.values() if i.basis == basis)
            self.extractors[basis] = SyndromeExtractor(circuit)
            self.dgraphs[basis] = build(circuit, self.extractors[basis])
            self.decoders[basis] = UnionFindDecoder(self.dgraphs[basis], self.graph, self.index)
        return self.dgraphs[basis]

    def simulate(self) -> None:
        config = self.config
        noise = config.noise_model()
        seeds = derive_seeds(config.seed, len(self.instances))
        for instance, seed in zip(self.instances.values(), seeds):
            log.info(f"Experiment '{self.name}': simulating {config.shots} shots of '{instance.key}'")
            instance.counts = simulate(
                instance.circuit, noise, config.shots, seed, workers=config.workers, method=config.method
            )

    def add_counts(self, record: CountsRecord) -> Instance:
        """Attaches externally produced counts to the instance with the same basis and logical value.

        :raises: ValueError if the record does not name a basis and logical value of this experiment
        """
        if record.basis is None or record.logical is None:
            raise ValueError("Counts records need a basis and a logical value to be matched to a circuit")
        key = (record.basis, record.logical)
        if key not in self.instances:
            raise ValueError(f"Counts for '{record.basis}'/{record.logical} do not match any circuit of the experiment")
        self.instances[key].counts = record
        return self.instances[key]

    def decode(self) -> None:
        for instance in self.instances.values():
            if instance.counts is None:
                continue
            self.decoding_graph(instance.basis)
            distinct = len(instance.counts.counts)
            log.info(f"Experiment '{self.name}': decoding {distinct} distinct strings of '{instance.key}'")
            instance.decoded = decode_counts(
                instance.counts, self.extractors[instance.basis], self.decoders[instance.basis]
            )
            if instance.decoded.undecodable:
                log.warning(
                    f"Experiment '{self.name}': {instance.decoded.undecodable} shot(s) of '{instance.key}' "
                    "could not be decoded"
                )

    @property
    def decoded_instances(self) -> list[Instance]:
        return [i for i in self.instances.values() if i.decoded is not None]

    def analyze(self) -> Analysis:
        """Estimates edge probabilities, fits the cluster size decay and summarizes any [[2,0,2]] blocks.

        :raises: ValueError if nothing has been decoded
        """
        instances = self.decoded_instances
        if not instances:
            raise ValueError(f"Experiment '{self.name}' has no decoded counts to analyze")

        estimates: list[EdgeEstimate] = []
        blocks: list[dict[str, typing.Any]] = []
        for basis in self.bases:
            of_basis = [i.decoded for i in instances if i.basis == basis and i.decoded is not None]
            if not of_basis:
                continue
            syndromes = [s for d in of_basis for s in d.syndromes]
            basis_weights = [w for d in of_basis for w in d.weights]
            basis_estimates = naive_estimate(syndromes, self.dgraphs[basis], basis_weights)
            estimates += basis_estimates
            circuit = next(i.circuit for i in instances if i.basis == basis)
            for block in summarize_202(basis_estimates, circuit):
                blocks.append(
                    {
                        "basis": basis,
                        "block": block.block,
                        "link": block.link,
                        "conjugate": block.mean(block.conjugate),
                        "standard": block.mean(block.standard),
                        "feedforward": block.mean(block.feedforward),
                    }
                )

        results: list[DecodeResult] = []
        weights: list[int] = []
        shots = 0
        for instance in instances:
            decoded = typing.cast(DecodedCounts, instance.decoded)
            r, w = decoded.decoded()
            results += r
            weights += w
            shots += decoded.shots
        # undecodable shots still count towards the frequencies
        histogram = ClusterHistogram(counts=cluster_histogram(results, weights).counts, shots=shots)
        try:
            fit: DecayFit | None = fit_decay(histogram, self.config.min_count)
        except ValueError as ex:
            log.info(f"Experiment '{self.name}': no decay fit: {ex}")
            fit = None

        return Analysis(
            estimates=estimates,
            averages=qubit_averages(estimates),
            series=time_series(estimates),
            histogram=histogram,
            fit=fit,
            blocks=blocks,
        )

    def summarize(self, analysis: Analysis) -> ExperimentSummary:
        instances = [i.summary() for i in self.decoded_instances]
        shots = sum(i.shots for i in instances)
        errors = sum(i.logical_errors for i in instances)
        worst = sorted(analysis.averages.items(), key=lambda item: (-item[1], item[0]))[:WORST_QUBITS]
        return ExperimentSummary(
            name=self.name,
            layout=self.layout.name,
            T=self.config.T,
            p=self.config.p,
            shots=self.config.shots,
            instances=instances,
            logical_errors=errors,
            logical_error_rate=errors / shots if shots else 0.0,
            fit=analysis.fit,
            cluster_counts=analysis.histogram.counts,
            worst_qubits=worst,
            blocks=analysis.blocks,
        )

    def write_circuits(self, output: Path) -> list[Path]:
        output.mkdir(parents=True, exist_ok=True)
        files = [report.write_model(output / "layout.json", self.layout)]
        noise = self.config.noise_model()
        for instance in self.instances.values():
            path = output / f"circuit_{instance.key}.json"
            path.write_text(instance.circuit.to_json() + "\n")
            stim_path = output / f"circuit_{instance.key}.stim"
            stim_path.write_text(str(to_stim(instance.circuit, noise)) + "\n")
            files += [path, stim_path]
        return files

    def write_counts(self, output: Path) -> list[Path]:
        output.mkdir(parents=True, exist_ok=True)
        files = []
        for instance in self.instances.values():
            if instance.counts is not None:
                files.append(report.write_model(output / f"counts_{instance.key}.json", instance.counts))
        return files

    def write_decoded(self, output: Path) -> list[Path]:
        output.mkdir(parents=True, exist_ok=True)
        files = []
        for basis, dgraph in sorted(self.dgraphs.items()):
            files.append(report.write_json(output / f"dgraph_{basis}.json", dgraph.to_json()))
        for instance in self.decoded_instances:
            path = output / f"decode_{instance.key}.jsonl"
            path.write_text(instance.decoded.to_jsonl())  # type: ignore[union-attr]
            files.append(path)
        return files

    def write_report(self, output: Path | None = None) -> ReportBundle:
        """Analyzes the decoded counts and writes every output file.

        :param output: the output directory, the configured one when not given
        :return: the written files and the summary
        """
        output = output or self.config.output
        output.mkdir(parents=True, exist_ok=True)
        analysis = self.analyze()
        summary = self.summarize(analysis)
        text = report.render_summary(summary)

        files = [report.write_model(output / "config.json", self.config)]
        files += self.write_circuits(output)
        files += self.write_counts(output)
        files += self.write_decoded(output)
        files += [
            report.write_estimates(output / "estimates.csv", analysis.estimates),
            report.write_qubit_averages(output / "qubits.csv", analysis.averages),
            report.write_time_series(output / "time_series.csv", analysis.series),
            report.write_histogram(output / "histogram.csv", analysis.histogram),
            report.write_json(output / "fit.json", analysis.fit.model_dump(mode="json") if analysis.fit else None),
            report.write_model(output / "summary.json", summary),
            report.plot_qubits(output / "qubits.svg", self.graph, analysis.averages, self.layout.positions),
            report.plot_time_series(output / "time_series.svg", analysis.series),
            report.plot_histogram(output / "histogram.svg", analysis.histogram, analysis.fit),
        ]
        summary_path = output / "summary.txt"
        summary_path.write_text(text)
        files.append(summary_path)
        log.info(f"Experiment '{self.name}': wrote {len(files)} files to '{output}'")
        return ReportBundle(output=output, files=files, summary=summary, text=text)

    def run(self) -> ReportBundle:
        """Simulates, decodes and analyzes every circuit instance, then writes the report."""
        self.simulate()
        self.decode()
        return self.write_report()


@dataclasses.dataclass
class SweepResult:
    points: list[SweepPoint]
    threshold: float | None
    files: list[Path]
    text: str


def sweep(config: ExperimentConfig, ps: typing.Sequence[float], db: LayoutDB | None = None) -> SweepResult:
    """Runs the experiment at several uniform error probabilities.

    :param config: the experiment configuration, its noise replaced by each uniform probability in turn
    :param ps: the error probabilities
    :param db: the layout database
    :return: the logical error rate and decay fit at each probability, and the pseudothreshold
    :raises: ValueError when no probabilities are given
    """
    if not ps:
        raise ValueError("A sweep needs at least one error probability")
    points = []
    for p in sorted(ps):
        session = ExperimentSession(ExperimentConfig.model_validate({**config.model_dump(), "p": p, "noise": None}), db)
        session.simulate()
        session.decode()
        analysis = session.analyze()
        summary = session.summarize(analysis)
        shots = sum(i.shots for i in summary.instances)
        log.info(f"Sweep '{config.name}': p={p} gives logical error rate {summary.logical_error_rate}")
        points.append(
            SweepPoint(
                p=p,
                shots=shots,
                logical_errors=summary.logical_errors,
                logical_error_rate=summary.logical_error_rate,
                fit=analysis.fit,
            )
        )

    threshold = pseudothreshold((point.p, point.logical_error_rate) for point in points)
    output = config.output
    output.mkdir(parents=True, exist_ok=True)
    text = report.render_sweep(points, threshold)
    files = [
        report.write_model(output / "config.json", config),
        report.write_sweep(output / "sweep.csv", points),
        report.write_json(
            output / "sweep.json",
            {"points": [point.model_dump(mode="json") for point in points], "pseudothreshold": threshold},
        ),
        report.plot_sweep(output / "sweep.svg", points, threshold),
    ]
    text_path = output / "sweep.txt"
    text_path.write_text(text)
    files.append(text_path)
    return SweepResult(points=points, threshold=threshold, files=files, text=text)
