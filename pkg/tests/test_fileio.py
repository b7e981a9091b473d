import numpy as np
import pytest

from iqpgraph.fileio import read_csv, read_graphs, read_json, write_csv, write_graphs, write_json
from iqpgraph.graphcodec import GraphBits, GraphError


def test_graph_file_round_trip(tmp_path):
    graphs = [GraphBits(4, [1, 0, 0, 1, 1, 0]), GraphBits(4, [0] * 6)]
    write_graphs(tmp_path / "g.jsonl", graphs, header={"kind": "dataset", "seed": 3})
    header, mat, m = read_graphs(tmp_path / "g.jsonl")
    assert header == {"kind": "dataset", "seed": 3} and m == 4
    assert mat.tolist() == [[1, 0, 0, 1, 1, 0], [0] * 6]


def test_matrix_input_needs_no_header(tmp_path):
    x = np.eye(3, dtype=np.uint8)
    write_graphs(tmp_path / "s.jsonl", x)
    header, mat, m = read_graphs(tmp_path / "s.jsonl")
    assert header is None and m == 3 and np.array_equal(mat, x)


def test_read_graphs_rejects_bad_files(tmp_path):
    p = tmp_path / "bad.jsonl"
    p.write_text("")
    with pytest.raises(GraphError):
        read_graphs(p)
    p.write_text('{"m": 3, "bits": "101"}\n{"m": 4, "bits": "000000"}\n')
    with pytest.raises(GraphError, match="mixed"):
        read_graphs(p)
    p.write_text('{"m": 3, "bits": "10"}\n')
    with pytest.raises(GraphError):
        read_graphs(p)


def test_json_and_csv_round_trip(tmp_path):
    write_json(tmp_path / "a.json", {"x": 1.5, "y": [1, 2]})
    assert read_json(tmp_path / "a.json") == {"x": 1.5, "y": [1, 2]}
    rows = [{"a": 1, "b": "x"}, {"a": 2, "b": "y"}]
    write_csv(tmp_path / "t.csv", rows)
    assert read_csv(tmp_path / "t.csv") == [{"a": "1", "b": "x"}, {"a": "2", "b": "y"}]
