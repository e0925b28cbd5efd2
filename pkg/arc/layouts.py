import abc
import json
import logging
import math
from pathlib import Path

from arc.model import Layout, Link

log = logging.getLogger(__name__)

# rows of the 127 qubit heavy-hex lattice, the parity of their code qubits and the x offset of their first qubit
EAGLE_ROWS = ((0, 13, 0, 0), (18, 32, 0, 18), (37, 51, 1, 37), (56, 70, 0, 56), (75, 89, 1, 75), (94, 108, 0, 94),
              (113, 126, 0, 112))
# auxiliaries bridging consecutive rows, with the code qubits they join
EAGLE_BRIDGES = {
    14: (0, 18), 15: (4, 22), 16: (8, 26), 17: (12, 30),
    33: (20, 39), 34: (24, 43), 35: (28, 47), 36: (32, 51),
    52: (37, 56), 53: (41, 60), 54: (45, 64), 55: (49, 68),
    71: (58, 77), 72: (62, 81), 73: (66, 85), 74: (70, 89),
    90: (75, 94), 91: (79, 98), 92: (83, 102), 93: (87, 106),
    109: (96, 114), 110: (100, 118), 111: (104, 122), 112: (108, 126),
}
HEAVY_HEX_SIZES = (12, 127)
BUILTIN_LAYOUTS = {f"heavy_hex_{size}": size for size in HEAVY_HEX_SIZES}


class LayoutDB(abc.ABC):
    """Abstract layout database class"""

    @abc.abstractmethod
    def get_layouts(self) -> list[Layout]:
        """Returns the available layouts from the database.

        :return: the list of layouts
        """

    @abc.abstractmethod
    def get_layout_by_name(self, name: str) -> Layout:
        """Returns a layout by its name

        :param name: the name of the layout to return
        :return: the layout
        :raises: ValueError if no layout with the name is found
        """


class MemoryLayoutDB(LayoutDB):
    """An in memory layout database - loads layouts from a JSON file upon init."""

    def __init__(self, config: Path):
        """Initializes a new Memory Layout DB

        :param config: the path to a JSON file that contains a list of layouts
        """
        self.layouts: dict[str, Layout] = {}

        # we expect this to be a list of layouts
        with config.open() as f:
            parsed = json.load(f)

        for obj in parsed:
            layout = Layout.model_validate(obj)
            self.layouts[layout.name] = layout

    def get_layouts(self) -> list[Layout]:
        return list(self.layouts.values())

    def get_layout_by_name(self, name: str) -> Layout:
        try:
            return self.layouts[name]
        except KeyError:
            raise ValueError(f"No layout exists with name '{name}'")


def _eagle() -> Layout:
    links: list[Link] = []
    positions: dict[int, tuple[float, float]] = {}
    for row, (start, end, parity, offset) in enumerate(EAGLE_ROWS):
        for q in range(start, end + 1):
            positions[q] = (float(q - offset), float(2 * row))
        code = [q for q in range(start, end + 1) if q % 2 == parity]
        links += [(a, a + 1, b) for a, b in zip(code, code[1:])]

    for aux, (a, b) in EAGLE_BRIDGES.items():
        links.append((a, aux, b))
        positions[aux] = (positions[a][0], (positions[a][1] + positions[b][1]) / 2)

    links.sort(key=lambda link: link[1])
    used = {q for link in links for q in link}
    positions = {q: xy for q, xy in positions.items() if q in used}
    return Layout(name="heavy_hex_127", links=links, positions=positions, num_qubits=127)


def _hexagon() -> Layout:
    links = [(2 * k, 2 * k + 1, (2 * k + 2) % 12) for k in range(6)]
    positions = {
        q: (round(math.cos(math.pi * q / 6), 6), round(math.sin(math.pi * q / 6), 6)) for q in range(12)
    }
    return Layout(name="heavy_hex_12", links=links, positions=positions, num_qubits=12)


def generate_heavy_hex(num_qubits: int) -> Layout:
    """Generates a heavy-hex layout: code qubits on the vertices of a honeycomb, auxiliaries on its edges.

    :param num_qubits: 127 for the Eagle lattice or 12 for a single hexagon
    :return: the layout
    :raises: ValueError for any other size
    """
    if num_qubits == 127:
        return _eagle()
    if num_qubits == 12:
        return _hexagon()
    raise ValueError(f"Unsupported heavy-hex size {num_qubits}, supported sizes are {HEAVY_HEX_SIZES}")


def load_layout(name: str, db: LayoutDB | None = None) -> Layout:
    """Finds a layout by builtin name, by name in a layout database, or as a JSON file path.

    :param name: the layout name or path
    :param db: the layout database to search
    :return: the layout
    :raises: ValueError if nothing matches
    """
    if name in BUILTIN_LAYOUTS:
        return generate_heavy_hex(BUILTIN_LAYOUTS[name])
    path = Path(name)
    if path.suffix == ".json" and path.exists():
        log.info(f"Loading layout from '{path}'")
        return Layout.model_validate_json(path.read_text())
    if db is None:
        raise ValueError(f"No layout exists with name '{name}'")
    return db.get_layout_by_name(name)
