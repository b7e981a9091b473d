"""Exact computational-basis sampling of IQP circuits (QPU stand-in).

amplitude(y) = 2^-n sum_z exp(i phi(z)) (-1)^{y.z},  phi(z) = sum_j theta_j (-1)^{g_j.z}

The phase vector is filled in index blocks and pushed through an in-place
Walsh-Hadamard transform, O(n 2^n) time and one complex vector of memory.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from iqpgraph.circuit import IqpCircuit
from iqpgraph.expval import data_expval

log = logging.getLogger(__name__)

MAX_SAMPLER_QUBITS = 28
HEAVY_QUBITS = 27
DEFAULT_SHOTS = 512
CDF_CHUNK = 1 << 20
NEGATIVE_TOL = 1e-12


@dataclass(frozen=True)
class OutputDistribution:
    qubit_count: int
    probabilities: np.ndarray


def fwht_inplace(arr: np.ndarray) -> np.ndarray:
    """Unnormalised in-place Walsh-Hadamard transform along a length-2^k vector."""
    size = arr.shape[0]
    if size & (size - 1):
        raise ValueError(f"length must be a power of two, got {size}")
    h = 1
    while h < size:
        view = arr.reshape(-1, 2, h)
        top = view[:, 0, :].copy()
        view[:, 0, :] += view[:, 1, :]
        view[:, 1, :] *= -1
        view[:, 1, :] += top
        h *= 2
    return arr


def phase_vector(c: IqpCircuit, block: int = 1 << 18) -> np.ndarray:
    """``exp(i phi(z))`` for every basis index ``z``."""
    n = c.qubit_count
    gmat = c.generator_matrix.astype(np.int64)
    # integer mask of each generator in index bit order
    gint = gmat @ (np.int64(1) << np.arange(n - 1, -1, -1, dtype=np.int64))
    size = 1 << n
    out = np.empty(size, dtype=np.complex128)
    for start in range(0, size, block):
        idx = np.arange(start, min(size, start + block), dtype=np.int64)
        phi = np.zeros(idx.size)
        for gm, theta in zip(gint, c.thetas):
            par = _popcount_parity(idx & gm)
            phi += theta * (1.0 - 2.0 * par)
        out[start:start + idx.size] = np.exp(1j * phi)
    return out


def _popcount_parity(x: np.ndarray) -> np.ndarray:
    x = x.copy()
    for shift in (32, 16, 8, 4, 2, 1):
        x ^= x >> shift
    return x & 1


def exact_distribution(c: IqpCircuit) -> OutputDistribution:
    n = c.qubit_count
    if n > MAX_SAMPLER_QUBITS:
        raise ValueError(f"exact sampling limited to {MAX_SAMPLER_QUBITS} qubits, got {n}")
    if n >= HEAVY_QUBITS:
        log.warning("heavy run: %d qubits needs >= %.1f GiB", n, (16 << n) / 2**30)
    amps = fwht_inplace(phase_vector(c))
    amps /= float(1 << n)
    probs = amps.real ** 2 + amps.imag ** 2
    del amps
    if probs.min() < -NEGATIVE_TOL:
        raise RuntimeError("negative probability; transform is broken")
    np.maximum(probs, 0.0, out=probs)
    return OutputDistribution(n, probs)


def sample_indices(probs: np.ndarray, shots: int, rng: np.random.Generator,
                   chunk: int = CDF_CHUNK) -> np.ndarray:
    """Inverse-CDF draws using prefix sums computed one chunk at a time."""
    if shots < 1:
        raise ValueError("shots must be >= 1")
    u = rng.random(shots) * probs.sum()
    order = np.argsort(u, kind="stable")
    us = u[order]
    out_sorted = np.empty(shots, dtype=np.int64)
    offset = 0.0
    pos = 0
    last_nonzero = int(np.flatnonzero(probs)[-1])
    for start in range(0, probs.size, chunk):
        cdf = np.cumsum(probs[start:start + chunk]) + offset
        end = np.searchsorted(us, cdf[-1], side="left") if start + chunk < probs.size else shots
        if end > pos:
            local = np.searchsorted(cdf, us[pos:end], side="right")
            out_sorted[pos:end] = np.minimum(start + local, last_nonzero)
            pos = end
        offset = cdf[-1]
        if pos == shots:
            break
    out = np.empty(shots, dtype=np.int64)
    out[order] = out_sorted
    return out


def sample(c: IqpCircuit, shots: int, rng: np.random.Generator) -> np.ndarray:
    """``(shots, n)`` uint8 matrix of measured bitstrings."""
    dist = exact_distribution(c)
    idx = sample_indices(dist.probabilities, shots, rng)
    n = c.qubit_count
    shifts = np.arange(n - 1, -1, -1, dtype=np.int64)
    return ((idx[:, None] >> shifts) & 1).astype(np.uint8)


def expval_from_samples(samples, a) -> float:
    return data_expval(samples, a)

