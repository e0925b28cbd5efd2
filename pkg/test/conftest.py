import pathlib
import typing

import pytest

from arc.circuit import build_circuit
from arc.code_graph import LinkGraph, auto_color, auto_schedule
from arc.layouts import MemoryLayoutDB, load_layout
from arc.model import ArcOptions, CircuitIR

LAYOUTS = pathlib.Path("conf/layouts.json")


@pytest.fixture(scope="session")
def db() -> MemoryLayoutDB:
    return MemoryLayoutDB(LAYOUTS)


@pytest.fixture(scope="session")
def make_graph(db) -> typing.Callable[[str], LinkGraph]:
    def make(name: str = "lagos_d3") -> LinkGraph:
        return LinkGraph.from_layout(load_layout(name, db))

    return make


@pytest.fixture(scope="session")
def make_circuit(db) -> typing.Callable[..., CircuitIR]:
    """Builds the circuit of a named layout, completing its colouring and schedule when the layout has none.

    [[2,0,2]] sequences are off unless asked for.
    """

    def make(name: str = "lagos_d3", **options: typing.Any) -> CircuitIR:
        layout = load_layout(name, db)
        graph = LinkGraph.from_layout(layout)
        color = layout.color if layout.color is not None else auto_color(graph)
        schedule = layout.schedule if layout.schedule is not None else auto_schedule(graph)
        options.setdefault("T", 2)
        options.setdefault("basis", "zx")
        options.setdefault("run_202", False)
        return build_circuit(graph, color, schedule, ArcOptions(**options))

    return make
