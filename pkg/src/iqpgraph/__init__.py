"""Shallow IQP-circuit Born machines for random-graph generation.

Training runs on classical hardware through Pauli-Z expectation estimates;
sampling uses exact statevector simulation in place of a QPU.
"""

from iqpgraph.circuit import IqpCircuit, build_shallow_ansatz, validate
from iqpgraph.graphcodec import (
    DatasetSpec,
    GraphBits,
    decode,
    density,
    degree_sequence,
    edge_index,
    encode,
    gen_bipartite,
    gen_er,
    is_bipartite,
    spectral_bipartivity,
)

__version__ = "0.1.0"

__all__ = [
    "DatasetSpec",
    "GraphBits",
    "IqpCircuit",
    "build_shallow_ansatz",
    "decode",
    "degree_sequence",
    "density",
    "edge_index",
    "encode",
    "gen_bipartite",
    "gen_er",
    "is_bipartite",
    "spectral_bipartivity",
    "validate",
]
