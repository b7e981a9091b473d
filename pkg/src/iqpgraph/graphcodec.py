"""Graph <-> edge-bitstring codec, random-graph datasets and per-graph features.

An ``M``-node undirected graph is stored as the row-major flattening of the
strict upper triangle of its adjacency matrix (0-based nodes), giving
``N = M(M-1)/2`` bits.  Bit ``edge_index(i, j, M)`` is the edge ``{i, j}``.
"""

from __future__ import annotations

import logging
import math
from collections import deque
from dataclasses import asdict, dataclass
from functools import lru_cache
from typing import Iterable, Sequence

import numpy as np

from iqpgraph.jacobi import jacobi_eigenvalues

log = logging.getLogger(__name__)

MAX_NODES = 64

FAMILIES = ("ER", "BP")
DENSITY_CLASSES = ("sparse", "medium", "dense")

# (mean density, dataset size) per node count, family and density class
DATASET_TARGETS = {
    8: {
        "BP": {"dense": (0.3110, 261), "medium": (0.2887, 271), "sparse": (0.2256, 133)},
        "ER": {"dense": (0.7618, 200), "medium": (0.4420, 200), "sparse": (0.2207, 200)},
    },
    10: {
        "BP": {"dense": (0.3470, 498), "medium": (0.2307, 500), "sparse": (0.1771, 473)},
        "ER": {"dense": (0.7884, 500), "medium": (0.4380, 500), "sparse": (0.1919, 500)},
    },
    14: {
        "BP": {"dense": (0.3727, 995), "medium": (0.2084, 999), "sparse": (0.1042, 995)},
        "ER": {"dense": (0.8145, 1000), "medium": (0.4487, 1000), "sparse": (0.1575, 1000)},
    },
    18: {
        "BP": {"dense": (0.3697, 995), "medium": (0.1967, 998), "sparse": (0.0747, 992)},
        "ER": {"dense": (0.8255, 1000), "medium": (0.4428, 1000), "sparse": (0.1497, 1000)},
    },
}
FALLBACK_SAMPLE_COUNT = 200


class GraphError(ValueError):
    pass


class DatasetCapError(RuntimeError):
    """Raised when the unique-graph attempt budget runs out."""


def edge_count(m: int) -> int:
    return m * (m - 1) // 2


def node_count_for(n_bits: int) -> int:
    """Inverse of ``edge_count``; raises if ``n_bits`` is not triangular."""
    m = int(round((1 + math.sqrt(1 + 8 * n_bits)) / 2))
    if edge_count(m) != n_bits or m < 2:
        raise GraphError(f"{n_bits} bits do not encode an undirected graph")
    return m


def edge_index(i: int, j: int, m: int) -> int:
    if not (0 <= i < j < m):
        raise GraphError(f"invalid edge ({i}, {j}) for {m} nodes")
    return i * m - i * (i + 1) // 2 + (j - i - 1)


@lru_cache(maxsize=None)
def edge_pairs(m: int) -> tuple[np.ndarray, np.ndarray]:
    """Endpoint arrays ``(rows, cols)`` in bit order."""
    rows, cols = np.triu_indices(m, k=1)
    rows.setflags(write=False)
    cols.setflags(write=False)
    return rows, cols


@lru_cache(maxsize=None)
def incidence(m: int) -> np.ndarray:
    """``(N, M)`` edge-node incidence matrix."""
    rows, cols = edge_pairs(m)
    inc = np.zeros((edge_count(m), m), dtype=np.int64)
    inc[np.arange(len(rows)), rows] = 1
    inc[np.arange(len(cols)), cols] = 1
    inc.setflags(write=False)
    return inc


@dataclass(frozen=True, eq=False)
class GraphBits:
    node_count: int
    bits: np.ndarray

    def __post_init__(self):
        bits = np.asarray(self.bits, dtype=np.uint8).reshape(-1).copy()
        if self.node_count < 2 or self.node_count > MAX_NODES:
            raise GraphError(f"node count must be in [2, {MAX_NODES}], got {self.node_count}")
        if bits.size != edge_count(self.node_count):
            raise GraphError(f"expected {edge_count(self.node_count)} bits, got {bits.size}")
        if np.any(bits > 1):
            raise GraphError("bits must be 0/1")
        bits.setflags(write=False)
        object.__setattr__(self, "bits", bits)

    @classmethod
    def from_string(cls, s: str, m: int | None = None) -> "GraphBits":
        if set(s) - {"0", "1"}:
            raise GraphError(f"not a bitstring: {s!r}")
        bits = np.frombuffer(s.encode("ascii"), dtype=np.uint8) - ord("0")
        return cls(node_count_for(len(s)) if m is None else m, bits)

    def to_string(self) -> str:
        return (self.bits + ord("0")).tobytes().decode("ascii")

    def __eq__(self, other):
        if not isinstance(other, GraphBits):
            return NotImplemented
        return self.node_count == other.node_count and np.array_equal(self.bits, other.bits)

    def __hash__(self):
        return hash((self.node_count, self.bits.tobytes()))

    def __repr__(self):
        return f"GraphBits(m={self.node_count}, bits='{self.to_string()}')"


def encode(adjacency) -> GraphBits:
    a = np.asarray(adjacency)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise GraphError("adjacency must be a square matrix")
    if not np.isin(a, (0, 1)).all():
        raise GraphError("adjacency must be 0/1")
    if not np.array_equal(a, a.T):
        raise GraphError("adjacency is not symmetric")
    if np.any(np.diagonal(a) != 0):
        raise GraphError("adjacency has a nonzero diagonal (self-loop)")
    rows, cols = edge_pairs(a.shape[0])
    return GraphBits(a.shape[0], a[rows, cols])


def decode(g: GraphBits) -> np.ndarray:
    m = g.node_count
    rows, cols = edge_pairs(m)
    a = np.zeros((m, m), dtype=np.uint8)
    a[rows, cols] = g.bits
    a[cols, rows] = g.bits
    return a


def to_matrix(graphs: Sequence[GraphBits] | np.ndarray) -> np.ndarray:
    """Stack graphs into an ``(S, N)`` uint8 matrix; arrays pass through."""
    if isinstance(graphs, np.ndarray):
        mat = graphs.astype(np.uint8, copy=False)
        return mat.reshape(1, -1) if mat.ndim == 1 else mat
    graphs = list(graphs)
    if not graphs:
        return np.zeros((0, 0), dtype=np.uint8)
    sizes = {g.node_count for g in graphs}
    if len(sizes) != 1:
        raise GraphError(f"mixed node counts {sorted(sizes)}")
    return np.stack([g.bits for g in graphs])


def from_matrix(mat: np.ndarray, m: int | None = None) -> list[GraphBits]:
    mat = np.asarray(mat, dtype=np.uint8)
    m = node_count_for(mat.shape[1]) if m is None else m
    return [GraphBits(m, row) for row in mat]


def density(g: GraphBits) -> float:
    return float(g.bits.sum()) / g.bits.size


def degree_sequence(g: GraphBits) -> np.ndarray:
    return g.bits.astype(np.int64) @ incidence(g.node_count)


def degree_matrix(mat: np.ndarray, m: int) -> np.ndarray:
    """Degree sequences for every row of an ``(S, N)`` bit matrix."""
    return np.asarray(mat, dtype=np.int64) @ incidence(m)


def is_bipartite(g: GraphBits) -> bool:
    m = g.node_count
    rows, cols = edge_pairs(m)
    adj: list[list[int]] = [[] for _ in range(m)]
    for k in np.flatnonzero(g.bits):
        adj[rows[k]].append(cols[k])
        adj[cols[k]].append(rows[k])
    color = [-1] * m
    for start in range(m):
        if color[start] != -1:
            continue
        color[start] = 0
        queue = deque([start])
        while queue:
            u = queue.popleft()
            for v in adj[u]:
                if color[v] == -1:
                    color[v] = 1 - color[u]
                    queue.append(v)
                elif color[v] == color[u]:
                    return False
    return True


def bipartite_mask(mat: np.ndarray, m: int, chunk: int = 65536) -> np.ndarray:
    """Vectorised bipartiteness test for every row of an ``(S, N)`` bit matrix.

    Propagates even/odd walk reachability for ``m`` steps; a graph has an odd
    cycle iff some node reaches itself by an odd walk of length <= m.
    """
    mat = np.asarray(mat)
    rows, cols = edge_pairs(m)
    out = np.empty(mat.shape[0], dtype=bool)
    eye = np.eye(m, dtype=np.float32)
    for start in range(0, mat.shape[0], chunk):
        block = mat[start:start + chunk]
        a = np.zeros((block.shape[0], m, m), dtype=np.float32)
        a[:, rows, cols] = block
        a[:, cols, rows] = block
        even = np.broadcast_to(eye, a.shape).copy()
        odd = np.zeros_like(a)
        for _ in range(m):
            even, odd = np.minimum(even + odd @ a, 1.0), np.minimum(odd + even @ a, 1.0)
        out[start:start + chunk] = ~(np.diagonal(odd, axis1=1, axis2=2) > 0).any(axis=1)
    return out


def _beta_from_eigs(eigs: np.ndarray) -> np.ndarray:
    return np.cosh(eigs).sum(axis=-1) / np.exp(eigs).sum(axis=-1)


def spectral_bipartivity(g: GraphBits) -> float:
    """Sum of cosh over sum of exp of the adjacency eigenvalues."""
    return float(_beta_from_eigs(jacobi_eigenvalues(decode(g))))


def spectral_bipartivity_batch(mat: np.ndarray, m: int) -> np.ndarray:
    mat = np.asarray(mat)
    if mat.shape[0] == 0:
        return np.zeros(0)
    rows, cols = edge_pairs(m)
    a = np.zeros((mat.shape[0], m, m))
    a[:, rows, cols] = mat
    a[:, cols, rows] = mat
    return _beta_from_eigs(jacobi_eigenvalues(a))


@dataclass(frozen=True)
class DatasetSpec:
    graph_family: str
    node_count: int
    density_class: str
    edge_probability: float
    sample_count: int
    seed: int = 0

    def __post_init__(self):
        if self.graph_family not in FAMILIES:
            raise ValueError(f"graph_family must be one of {FAMILIES}")
        if self.density_class not in DENSITY_CLASSES:
            raise ValueError(f"density_class must be one of {DENSITY_CLASSES}")
        if not 0.0 <= self.edge_probability <= 1.0:
            raise ValueError("edge_probability must lie in [0, 1]")
        if self.sample_count < 1:
            raise ValueError("sample_count must be >= 1")
        if not 2 <= self.node_count <= MAX_NODES:
            raise ValueError(f"node_count must be in [2, {MAX_NODES}]")

    @classmethod
    def default(cls, family: str, node_count: int, density_class: str, seed: int = 0,
                sample_count: int | None = None) -> "DatasetSpec":
        """Spec whose expected mean density matches the reference table.

        Node counts without a reference row reuse the 8-node targets.
        """
        family = family.upper()
        targets = DATASET_TARGETS.get(node_count, DATASET_TARGETS[8])
        rho, count = targets[family][density_class]
        if node_count not in DATASET_TARGETS:
            count = FALLBACK_SAMPLE_COUNT
        p = rho if family == "ER" else min(1.0, rho / bipartite_cross_fraction(node_count))
        return cls(family, node_count, density_class, p,
                   count if sample_count is None else sample_count, seed)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "DatasetSpec":
        return cls(**{k: d[k] for k in cls.__dataclass_fields__ if k in d})


def bipartite_cross_fraction(m: int) -> float:
    """Expected fraction of node pairs split across sides under the BP partition law."""
    total = 0.0
    for left in range(1, m):
        total += math.comb(m, left) * left * (m - left)
    return total / (2 ** m - 2) / edge_count(m)


def _support_size(spec: DatasetSpec) -> int | None:
    """Number of distinct graphs the generator can emit, when it is small and known."""
    p, m = spec.edge_probability, spec.node_count
    if p == 0.0:
        return 1
    if spec.graph_family == "ER" and p == 1.0:
        return 1
    if spec.graph_family == "BP" and p == 1.0:
        # one complete bipartite graph per unordered nontrivial partition
        return (2 ** m - 2) // 2
    return None


def _unique_rows(draw, spec: DatasetSpec, rng: np.random.Generator) -> list[GraphBits]:
    wanted = spec.sample_count
    support = _support_size(spec)
    if support is not None and support < wanted:
        log.warning("only %d distinct graphs exist for %s; truncating", support, spec)
        wanted = support
    cap = 100 * spec.sample_count
    seen: set[bytes] = set()
    out: list[np.ndarray] = []
    attempts = 0
    while len(out) < wanted:
        if attempts >= cap:
            raise DatasetCapError(
                f"{len(out)}/{wanted} unique graphs after {cap} attempts for {spec}")
        batch = min(max(wanted - len(out), 16), cap - attempts)
        for row in draw(batch, rng):
            attempts += 1
            key = row.tobytes()
            if key not in seen:
                seen.add(key)
                out.append(row)
                if len(out) == wanted:
                    break
    return [GraphBits(spec.node_count, row) for row in out]


def gen_er(spec: DatasetSpec, rng: np.random.Generator) -> list[GraphBits]:
    if spec.graph_family != "ER":
        raise ValueError("gen_er needs an ER spec")
    n = edge_count(spec.node_count)

    def draw(k, rng):
        return (rng.random((k, n)) < spec.edge_probability).astype(np.uint8)

    return _unique_rows(draw, spec, rng)


def gen_bipartite(spec: DatasetSpec, rng: np.random.Generator) -> list[GraphBits]:
    if spec.graph_family != "BP":
        raise ValueError("gen_bipartite needs a BP spec")
    m = spec.node_count
    rows, cols = edge_pairs(m)

    def draw(k, rng):
        out = np.empty((k, len(rows)), dtype=np.uint8)
        for t in range(k):
            side = rng.integers(0, 2, size=m)
            while side.min() == side.max():
                side = rng.integers(0, 2, size=m)
            cross = side[rows] != side[cols]
            out[t] = cross & (rng.random(len(rows)) < spec.edge_probability)
        return out

    return _unique_rows(draw, spec, rng)


def generate(spec: DatasetSpec, rng: np.random.Generator) -> list[GraphBits]:
    return gen_er(spec, rng) if spec.graph_family == "ER" else gen_bipartite(spec, rng)


def summarize(graphs: Iterable[GraphBits]) -> dict:
    """Mean density, bipartite percentage, mean spectral bipartivity and size."""
    graphs = list(graphs)
    mat = to_matrix(graphs)
    m = graphs[0].node_count
    return {
        "mean_density": float(mat.mean()),
        "bipartite_pct": 100.0 * float(bipartite_mask(mat, m).mean()),
        "mean_beta": float(spectral_bipartivity_batch(mat, m).mean()),
        "count": len(graphs),
    }
