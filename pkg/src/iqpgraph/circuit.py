"""Shallow IQP ansatz: Pauli-Z generators with one angle each.

Gate convention: generator ``g`` with angle ``theta`` contributes
``exp(i * theta * Z^g)`` to the diagonal block, so the prepared state is
``H^n exp(i sum_j theta_j Z^{g_j}) H^n |0...0>``.  Every formula in
``expval`` and ``sampler`` assumes this convention.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np


class CircuitError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class IqpCircuit:
    qubit_count: int
    generators: tuple[tuple[int, ...], ...]
    thetas: np.ndarray = field(default=None)

    def __post_init__(self):
        gens = tuple(tuple(int(q) for q in g) for g in self.generators)
        object.__setattr__(self, "generators", gens)
        thetas = np.zeros(len(gens)) if self.thetas is None else np.array(self.thetas, dtype=np.float64)
        thetas.setflags(write=False)
        object.__setattr__(self, "thetas", thetas)

    @property
    def n_params(self) -> int:
        return len(self.generators)

    @property
    def generator_matrix(self) -> np.ndarray:
        """``(G, n)`` 0/1 matrix whose row ``j`` is the mask of generator ``j``."""
        mat = np.zeros((len(self.generators), self.qubit_count), dtype=np.uint8)
        for j, g in enumerate(self.generators):
            mat[j, list(g)] = 1
        return mat

    def with_thetas(self, thetas) -> "IqpCircuit":
        thetas = np.asarray(thetas, dtype=np.float64)
        if thetas.shape != (self.n_params,):
            raise CircuitError(f"expected {self.n_params} angles, got shape {thetas.shape}")
        return IqpCircuit(self.qubit_count, self.generators, thetas)

    def to_dict(self) -> dict:
        return {
            "n": self.qubit_count,
            "generators": [list(g) for g in self.generators],
            "thetas": [float(t) for t in self.thetas],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "IqpCircuit":
        c = cls(int(d["n"]), tuple(tuple(g) for g in d["generators"]), d["thetas"])
        validate(c)
        return c

    def save(self, path) -> None:
        # repr of a Python float round-trips exactly
        Path(path).write_text(json.dumps(self.to_dict()) + "\n")

    @classmethod
    def load(cls, path) -> "IqpCircuit":
        return cls.from_dict(json.loads(Path(path).read_text()))

    def __eq__(self, other):
        if not isinstance(other, IqpCircuit):
            return NotImplemented
        return (self.qubit_count == other.qubit_count and self.generators == other.generators
                and np.array_equal(self.thetas, other.thetas))


def build_shallow_ansatz(n: int) -> IqpCircuit:
    """All single-qubit Z rotations, then nearest-neighbour ZZ rotations on the chain."""
    if n < 1:
        raise CircuitError("need at least one qubit")
    gens = [(i,) for i in range(n)] + [(i, i + 1) for i in range(n - 1)]
    return IqpCircuit(n, tuple(gens))


def validate(c: IqpCircuit) -> None:
    """Raise ``CircuitError`` naming the first violated invariant."""
    if c.qubit_count < 1:
        raise CircuitError("qubit count must be >= 1")
    seen = set()
    for j, g in enumerate(c.generators):
        support = set(g)
        if len(support) != len(g) or len(g) not in (1, 2):
            raise CircuitError(f"mask arity: generator {j} acts on {sorted(support)}")
        if any(q < 0 or q >= c.qubit_count for q in g):
            raise CircuitError(f"qubit index out of range in generator {j}")
        if len(g) == 2 and abs(g[0] - g[1]) != 1:
            raise CircuitError(f"non-adjacent pair in generator {j}: {g}")
        key = frozenset(g)
        if key in seen:
            raise CircuitError(f"duplicate generator {sorted(key)}")
        seen.add(key)
    if c.thetas.shape != (len(c.generators),):
        raise CircuitError(f"length mismatch: {len(c.generators)} generators, {c.thetas.size} angles")
    if not np.all(np.isfinite(c.thetas)):
        raise CircuitError("non-finite angle")
