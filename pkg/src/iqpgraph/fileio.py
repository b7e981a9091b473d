"""On-disk formats.

Graph/sample files are JSON lines, one ``{"m": M, "bits": "0101..."}`` per
graph (bit 0 leftmost), optionally preceded by one ``#``-prefixed JSON header
line carrying the dataset spec or sampling metadata.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from iqpgraph.graphcodec import GraphBits, GraphError, node_count_for, to_matrix


def write_graphs(path, graphs, header: dict | None = None, m: int | None = None) -> None:
    mat = to_matrix(graphs)
    if m is None:
        m = graphs[0].node_count if not isinstance(graphs, np.ndarray) else node_count_for(mat.shape[1])
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w") as fh:
        if header is not None:
            fh.write("#" + json.dumps(header, sort_keys=True) + "\n")
        for row in mat:
            bits = (row + ord("0")).astype(np.uint8).tobytes().decode("ascii")
            fh.write(json.dumps({"m": m, "bits": bits}) + "\n")


def read_graphs(path) -> tuple[dict | None, np.ndarray, int]:
    """Return ``(header, bit_matrix, node_count)``."""
    header = None
    rows = []
    m = None
    with Path(path).open() as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                if rows or header is not None:
                    raise GraphError(f"{path}:{lineno}: header must be the first line")
                header = json.loads(line[1:])
                continue
            rec = json.loads(line)
            g = GraphBits.from_string(rec["bits"], int(rec["m"]))
            if m is None:
                m = g.node_count
            elif g.node_count != m:
                raise GraphError(f"{path}:{lineno}: mixed node counts")
            rows.append(g.bits)
    if not rows:
        raise GraphError(f"{path}: no graphs")
    return header, np.stack(rows), m


def write_json(path, obj) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


def read_json(path):
    return json.loads(Path(path).read_text())


def write_csv(path, rows: list[dict], fieldnames: list[str] | None = None) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fieldnames = fieldnames or (list(rows[0]) if rows else [])
    with path.open("w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=fieldnames)
        writer.writeheader()
        writer.writerows(rows)


def read_csv(path) -> list[dict]:
    with Path(path).open(newline="") as fh:
        return list(csv.DictReader(fh))
