import pathlib

import pytest

from arc.code_graph import LinkGraph, validate_schedule
from arc.layouts import MemoryLayoutDB, generate_heavy_hex, load_layout
from arc.model import Layout

db = MemoryLayoutDB(pathlib.Path("conf/layouts.json"))


class TestMemoryLayoutDB:
    def test_get_layouts(self):
        layouts = db.get_layouts()
        assert [layout.name for layout in layouts] == ["lagos_d3", "line_202", "linear_d5", "triangle"]

    def test_get_layout_by_name(self):
        layout = db.get_layout_by_name("lagos_d3")
        assert layout.links == [(0, 1, 3), (3, 5, 6)]
        assert layout.color == {0: 0, 3: 1, 6: 0}
        assert layout.schedule == [[(0, 1), (3, 5)], [(3, 1), (6, 5)]]
        assert layout.num_qubits == 7

    def test_schedules_are_valid(self):
        for layout in db.get_layouts():
            graph = LinkGraph.from_layout(layout)
            if layout.schedule is not None:
                validate_schedule(graph, layout.schedule)

    def test_unknown_name(self):
        with pytest.raises(ValueError) as excinfo:
            db.get_layout_by_name("nope")
        assert "No layout exists with name 'nope'" in str(excinfo.value)


class TestHeavyHex:
    def test_eagle(self):
        layout = generate_heavy_hex(127)
        graph = LinkGraph.from_layout(layout)
        assert layout.name == "heavy_hex_127"
        assert len(graph.code_qubits) == 54
        assert len(graph.links) == 71
        assert set(range(127)) - layout.used_qubits == {13, 113}
        assert graph.max_degree == 3
        assert layout.positions is not None
        assert set(layout.positions) == layout.used_qubits

    def test_hexagon(self):
        layout = generate_heavy_hex(12)
        graph = LinkGraph.from_layout(layout)
        assert graph.code_qubits == (0, 2, 4, 6, 8, 10)
        assert len(graph.links) == 6
        assert graph.max_degree == 2

    def test_unsupported_size(self):
        with pytest.raises(ValueError) as excinfo:
            generate_heavy_hex(50)
        assert "Unsupported heavy-hex size 50" in str(excinfo.value)


class TestLoadLayout:
    def test_builtin(self):
        assert load_layout("heavy_hex_12").name == "heavy_hex_12"
        assert load_layout("heavy_hex_127", db).num_qubits == 127

    def test_from_db(self):
        assert load_layout("triangle", db).links == [(0, 1, 2), (2, 3, 4), (4, 5, 0)]

    def test_from_path(self, tmp_path):
        path = tmp_path / "square.json"
        path.write_text(Layout(name="square", links=[(0, 1, 2), (2, 3, 4), (4, 5, 6), (6, 7, 0)]).model_dump_json())
        layout = load_layout(str(path))
        assert layout.name == "square"
        assert len(layout.links) == 4

    def test_unknown_without_db(self):
        with pytest.raises(ValueError) as excinfo:
            load_layout("lagos_d3")
        assert "No layout exists with name 'lagos_d3'" in str(excinfo.value)
