import enum
import json
try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
import typing
from pathlib import Path

from pydantic import BaseModel, ConfigDict, Field, model_validator

Probability = typing.Annotated[float, Field(ge=0.0, le=1.0)]
Link = tuple[int, int, int]
Pair = tuple[int, int]


class Pauli(str, enum.Enum):
    """Single-qubit Pauli labels, also used as encoding bases."""

    X = "x"
    Y = "y"
    Z = "z"


class OpKind(str, enum.Enum):
    """The operations a circuit is built from."""

    H = "H"
    S = "S"
    SDG = "SDG"
    X = "X"
    Y = "Y"
    Z = "Z"
    I = "I"  # noqa: E741 - idle placeholder for delays, carries only idle noise
    CX = "CX"
    M = "M"  # measure in the z basis into the next classical bit
    R = "R"  # reset to |0>
    CPAULI = "CPAULI"  # pauli applied when a recorded classical bit is 1
    TICK = "TICK"  # layer boundary, carries the time coordinate of the gap
    BARRIER = "BARRIER"  # layer marker only


SINGLE_QUBIT_GATES = frozenset([OpKind.H, OpKind.S, OpKind.SDG, OpKind.X, OpKind.Y, OpKind.Z])


class MeasurementKind(str, enum.Enum):
    """What a classical bit records."""

    STANDARD = "standard"  # the normal parity check of a link
    CONJUGATE = "conjugate"  # the tensor-reversed check measured inside a [[2,0,2]] block
    FINAL = "final"  # final readout of a code qubit


class EdgeClass(str, enum.Enum):
    """The kind of fault a decoding graph edge is attributed to."""

    CODE_BITFLIP = "code-bitflip"
    CODE_PHASEFLIP = "code-phaseflip"
    AUX_FLIP = "aux-flip"
    MISASSIGNMENT = "misassignment"
    CONJUGATE = "conjugate"
    FEEDFORWARD = "feedforward"


class SimulationMethod(str, enum.Enum):
    """How shots are sampled."""

    FRAME = "frame"  # compiled pauli-frame sampler
    TABLEAU = "tableau"  # full stabilizer tableau per shot


class Layout(BaseModel):
    """A named link graph with optional colouring, schedule and plot positions."""

    name: str = Field(title="A name for this layout", default="custom")
    links: list[Link] = Field(title="Links as (code qubit, auxiliary, code qubit) triples", min_length=1)
    color: dict[int, typing.Literal[0, 1]] | None = Field(title="Colour of each code qubit", default=None)
    schedule: list[list[Pair]] | None = Field(title="Layers of (code qubit, auxiliary) interactions", default=None)
    positions: dict[int, tuple[float, float]] | None = Field(title="Plot coordinates of each qubit", default=None)
    num_qubits: int | None = Field(title="Number of qubits on the device", default=None, ge=1)

    @model_validator(mode="after")
    def check_qubits_fit_device(self) -> "Layout":
        if self.num_qubits is not None:
            largest = max(max(link) for link in self.links)
            if largest >= self.num_qubits:
                raise ValueError(f"qubit {largest} does not fit on a device of {self.num_qubits} qubits")
        return self

    @property
    def used_qubits(self) -> set[int]:
        return {q for link in self.links for q in link}


class ArcOptions(BaseModel):
    """The options used to build the circuits of an alternating repetition code."""

    model_config = ConfigDict(frozen=True)

    T: int = Field(title="Number of syndrome measurement rounds", ge=0)
    basis: str = Field(title="Encoding basis of colour 0 then colour 1 qubits", default="xy", pattern=r"^[xyz]{2}$")
    logical: typing.Literal[0, 1] = Field(title="The encoded logical value", default=0)
    resets: bool = Field(title="Whether auxiliaries are reset after measurement", default=True)
    conditional_reset: bool = Field(title="Reset with a pauli conditioned on the measurement", default=False)
    run_202: bool = Field(title="Whether to interleave [[2,0,2]] sequences", default=True)
    rounds_per_202: int = Field(title="Rounds in each [[2,0,2]] sequence", default=9, ge=1)
    ff: bool = Field(title="Undo the [[2,0,2]] side effects with feedforward", default=True)
    barriers: bool = Field(title="Emit barriers between layers", default=True)
    delay: int | None = Field(title="Idle placeholders added in each measurement layer", default=None, ge=0)
    links_202: list[int] | None = Field(title="Links that get a [[2,0,2]] sequence", default=None)

    @model_validator(mode="after")
    def check_rounds_per_202(self) -> "ArcOptions":
        if self.run_202 and self.rounds_per_202 < 9:
            raise ValueError("rounds_per_202 must be at least 9")
        return self

    @property
    def bases(self) -> tuple[Pauli, Pauli]:
        return Pauli(self.basis[0]), Pauli(self.basis[1])


class NoiseModel(BaseModel):
    """Independent pauli noise attached to gates, measurements and idle placeholders."""

    model_config = ConfigDict(frozen=True)

    p1: Probability = Field(title="Depolarizing probability after single-qubit gates", default=0.0)
    p2: Probability = Field(title="Depolarizing probability after each CX", default=0.0)
    p_meas: Probability = Field(title="Probability of an x flip before each measurement", default=0.0)
    idle: Probability = Field(title="Depolarizing probability at idle placeholders", default=0.0)
    idle_overrides: dict[int, Probability] = Field(title="Per-qubit idle probabilities", default_factory=dict)

    @classmethod
    def uniform(cls, p: float, idle: float = 0.0) -> "NoiseModel":
        return cls(p1=p, p2=p, p_meas=p, idle=idle)

    def idle_for(self, qubit: int) -> float:
        return self.idle_overrides.get(qubit, self.idle)

    @property
    def is_noiseless(self) -> bool:
        return not any([self.p1, self.p2, self.p_meas, self.idle, *self.idle_overrides.values()])


class Op(BaseModel):
    """A single circuit operation."""

    model_config = ConfigDict(frozen=True)

    kind: OpKind
    qubits: tuple[int, ...] = ()
    clbit: int | None = None  # written by M, read by CPAULI
    pauli: Pauli | None = None  # the pauli applied by CPAULI
    time: float | None = None  # time coordinate of a TICK
    label: str | None = None  # "reset" or "ff" for CPAULI


class ClbitInfo(BaseModel):
    """Metadata of one classical bit."""

    model_config = ConfigDict(frozen=True)

    round: int | None = Field(title="Syndrome round, None for final readout", default=None)
    link: int | None = Field(title="Index of the measured link, None for final readout", default=None)
    qubit: int = Field(title="The measured qubit")
    kind: MeasurementKind = MeasurementKind.STANDARD
    held: bool = Field(title="Measured on an auxiliary not reset since its last measurement", default=False)
    block: int | None = Field(title="Index of the [[2,0,2]] block this bit belongs to", default=None)
    reset: bool = Field(title="Whether the auxiliary is reset after this measurement", default=True)


class Block(BaseModel):
    """A [[2,0,2]] sequence on one link."""

    model_config = ConfigDict(frozen=True)

    link: int = Field(title="The link alternating between standard and conjugate measurements")
    start: int = Field(title="First round of the block")
    rounds: int = Field(title="Number of rounds in the block")
    neighbours: tuple[int, ...] = Field(title="Links sharing a code qubit with the given link")
    controls: dict[int, int] = Field(title="Classical bit controlling the feedforward on each code qubit")

    @property
    def conjugate_rounds(self) -> list[int]:
        return [self.start + k for k in range(1, self.rounds - 1) if k % 2 == 1]

    @property
    def standard_rounds(self) -> list[int]:
        return [self.start + k for k in range(1, self.rounds - 1) if k % 2 == 0]


class CircuitIR(BaseModel):
    """A layered clifford circuit with measurements, resets and conditional paulis."""

    model_config = ConfigDict(frozen=True)

    basis: str
    options: ArcOptions = Field(title="Effective options, after any overrides")
    links: tuple[Link, ...]
    color: dict[int, int]
    schedule: tuple[tuple[Pair, ...], ...]
    num_qubits: int
    ops: tuple[Op, ...]
    clbits: tuple[ClbitInfo, ...]
    blocks: tuple[Block, ...] = ()

    @property
    def T(self) -> int:
        return self.options.T

    @property
    def layers_per_round(self) -> int:
        """λ: the CX layers of a round plus its measurement layer."""
        return len(self.schedule) + 1

    @property
    def code_qubits(self) -> list[int]:
        return sorted(self.color)

    @property
    def designated_qubit(self) -> int:
        return min(self.color)

    @property
    def tick_times(self) -> list[float]:
        return [typing.cast(float, op.time) for op in self.ops if op.kind == OpKind.TICK]

    @property
    def used_qubits(self) -> list[int]:
        return sorted({q for op in self.ops for q in op.qubits})

    def basis_of(self, qubit: int) -> Pauli:
        return Pauli(self.basis[self.color[qubit]])

    def final_clbit(self, qubit: int) -> int:
        for index, info in enumerate(self.clbits):
            if info.kind == MeasurementKind.FINAL and info.qubit == qubit:
                return index
        raise ValueError(f"Qubit {qubit} has no final readout")

    def ff_clbits(self) -> set[int]:
        return {op.clbit for op in self.ops if op.kind == OpKind.CPAULI and op.label == "ff"}  # type: ignore[misc]

    def to_json(self) -> str:
        return self.model_dump_json(indent=2)


class CountsRecord(BaseModel):
    """The counts of each output string over a number of shots."""

    counts: dict[str, int] = Field(title="Number of shots that produced each output string")
    shots: int = Field(title="Total number of shots", ge=0)
    seed: int | None = None
    basis: str | None = None
    logical: int | None = None
    method: SimulationMethod | None = None
    noise: NoiseModel | None = None

    @model_validator(mode="after")
    def check_counts_sum_to_shots(self) -> "CountsRecord":
        total = sum(self.counts.values())
        if total != self.shots:
            raise ValueError(f"counts sum to {total} but shots is {self.shots}")
        return self


class EdgeEstimate(BaseModel):
    """Naive estimate of the probability of a decoding graph edge."""

    edge: int = Field(title="Index of the edge in the decoding graph")
    basis: str = Field(title="Basis variant of the circuit the edge belongs to", default="")
    nodes: tuple[tuple[int, int], tuple[int, int]] = Field(title="(time, link) of the edge's two nodes")
    edge_class: EdgeClass
    qubits: tuple[int, ...]
    time_range: tuple[float, float]
    n00: int = Field(title="Shots containing neither node", ge=0)
    n11: int = Field(title="Shots containing both nodes", ge=0)
    p_hat: float
    stderr: float
    flagged: bool = Field(title="No shot lacked both nodes, so the estimate is unbounded", default=False)

    @property
    def is_self_edge(self) -> bool:
        return self.nodes[0] == self.nodes[1]


class DecayFit(BaseModel):
    """Linear fit of log cluster-size frequencies."""

    ln_rho: float
    stderr: float
    rho: float
    intercept: float
    residual: float = Field(title="Sum of squared residuals of the fit")
    sizes: list[int]
    frequencies: list[float]
    min_count: int


class ExperimentConfig(BaseModel):
    """Configuration of an end-to-end benchmarking run."""

    name: str = Field(title="A name for the experiment", default="arc", max_length=100)
    layout: str = Field(title="Builtin layout, a name from the layouts file or a path", default="heavy_hex_127")
    layouts_file: Path = Field(title="JSON file of named layouts", default=Path("conf/layouts.json"))
    T: int = Field(title="Number of syndrome measurement rounds", default=10, ge=0)
    basis: str = Field(title="Encoding basis", default="xz", pattern=r"^[xyz]{2}$")
    logicals: list[typing.Literal[0, 1]] = Field(title="Logical values to run", default=[0, 1], min_length=1)
    both_bases: bool = Field(title="Also run the reversed basis", default=True)
    resets: bool = True
    conditional_reset: bool = False
    run_202: bool = False
    rounds_per_202: int = Field(default=9, ge=1)
    ff: bool = True
    links_202: list[int] | None = None
    barriers: bool = True
    delay: int | None = Field(default=None, ge=0)
    max_dist: int = Field(title="Neighbourhood radius of the colouring search", default=2, ge=1)
    p: Probability = Field(title="Uniform error probability", default=0.01)
    noise: NoiseModel | None = Field(title="Per-channel noise, overrides p", default=None)
    shots: int = Field(title="Shots per circuit instance", default=10000, ge=1)
    seed: int = Field(title="Seed of all randomness", default=0, ge=0)
    workers: int = Field(title="Parallel sampling workers", default=1, ge=1)
    method: SimulationMethod = SimulationMethod.FRAME
    min_count: int = Field(title="Minimum cluster count for a size to enter the decay fit", default=5, ge=1)
    sweep: list[Probability] = Field(title="Uniform error probabilities of a sweep", default=[])
    output: Path = Field(title="Output directory", default=Path("out"))

    @model_validator(mode="after")
    def check_arc_options(self) -> "ExperimentConfig":
        self.arc_options(self.logicals[0])
        return self

    @classmethod
    def load(cls, path: Path) -> "ExperimentConfig":
        """Loads a configuration from a TOML or JSON file.

        :param path: the configuration file
        :return: the validated configuration
        :raises: FileNotFoundError if the file does not exist, ValidationError if it is invalid
        """
        if path.suffix == ".toml":
            with path.open("rb") as f:
                return cls.model_validate(tomllib.load(f))
        with path.open() as f:
            return cls.model_validate(json.load(f))

    def noise_model(self) -> NoiseModel:
        return self.noise if self.noise is not None else NoiseModel.uniform(self.p)

    def arc_options(self, logical: int, basis: str | None = None) -> ArcOptions:
        return ArcOptions(
            T=self.T,
            basis=basis or self.basis,
            logical=logical,  # type: ignore[arg-type]
            resets=self.resets,
            conditional_reset=self.conditional_reset,
            run_202=self.run_202,
            rounds_per_202=self.rounds_per_202,
            ff=self.ff,
            barriers=self.barriers,
            delay=self.delay,
            links_202=self.links_202,
        )


class InstanceSummary(BaseModel):
    """The decoding outcome of one circuit instance: a basis and an encoded logical value."""

    basis: str
    logical: int
    shots: int
    logical_errors: int = Field(title="Shots whose corrected logical readout differs from the encoded value")
    undecodable: int = Field(title="Shots the decoder could not neutralise, counted as logical errors", default=0)

    @property
    def logical_error_rate(self) -> float:
        return self.logical_errors / self.shots if self.shots else 0.0


class ExperimentSummary(BaseModel):
    """The headline results of an experiment."""

    name: str
    layout: str
    T: int
    p: float
    shots: int = Field(title="Shots per circuit instance")
    instances: list[InstanceSummary]
    logical_errors: int
    logical_error_rate: float
    fit: DecayFit | None = Field(title="Decay fit of the cluster size histogram, None when too few sizes", default=None)
    cluster_counts: dict[int, int] = Field(title="Clusters of each size over all instances", default_factory=dict)
    worst_qubits: list[tuple[int, float]] = Field(title="Qubits with the highest average estimates", default=[])
    blocks: list[dict[str, typing.Any]] = Field(title="Mean estimates of each [[2,0,2]] block", default=[])


class SweepPoint(BaseModel):
    """The outcome of an experiment at one uniform error probability."""

    p: float
    shots: int
    logical_errors: int
    logical_error_rate: float
    fit: DecayFit | None = None
