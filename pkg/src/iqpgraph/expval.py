"""Pauli-Z expectation values of IQP circuits and of data.

For the convention in ``iqpgraph.circuit``, conjugating ``X_a`` through the
diagonal block and evaluating on ``|+>^n`` gives

    <Z_a> = E_{z ~ U{0,1}^n} cos(2 * sum_{j in A(a)} theta_j * (-1)^{g_j . z}),

with ``A(a) = {j : g_j . a odd}``.  The same expression, averaged over all
``2^n`` strings, is the exact enumeration; averaged over a uniform batch it
is an unbiased Monte-Carlo estimate that scales to any qubit count.  The
gate-by-gate statevector simulation is kept separate as an oracle.

Bit ordering: qubit 0 is the most significant bit of a basis-state index,
i.e. index ``= sum_i x_i 2^(n-1-i)``, matching bitstrings printed left to right.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from iqpgraph.circuit import IqpCircuit

MAX_EXACT_QUBITS = 24
_ENUM_CHUNK = 1 << 14

_HADAMARD = np.array([[1.0, 1.0], [1.0, -1.0]]) / np.sqrt(2.0)


@dataclass(frozen=True)
class ExpvalEstimate:
    value: float
    std_error: float
    batch_size: int


def as_mask(a, n: int) -> np.ndarray:
    a = np.asarray(a, dtype=np.uint8).reshape(-1)
    if a.size != n:
        raise ValueError(f"mask has {a.size} bits, circuit has {n} qubits")
    return a


def as_masks(masks, n: int) -> np.ndarray:
    masks = np.asarray(masks, dtype=np.uint8)
    if masks.ndim == 1:
        masks = masks.reshape(1, -1)
    if masks.shape[1] != n:
        raise ValueError(f"masks have {masks.shape[1]} bits, expected {n}")
    return masks


def _check_exact(n: int) -> None:
    if n > MAX_EXACT_QUBITS:
        raise ValueError(f"exact evaluation limited to {MAX_EXACT_QUBITS} qubits, got {n}")


def bitstrings(n: int, start: int = 0, stop: int | None = None) -> np.ndarray:
    """Rows are the bit vectors of indices ``start..stop-1`` (qubit 0 first)."""
    stop = 1 << n if stop is None else stop
    idx = np.arange(start, stop, dtype=np.int64)
    shifts = np.arange(n - 1, -1, -1, dtype=np.int64)
    return ((idx[:, None] >> shifts) & 1).astype(np.uint8)


def bits_to_index(mat: np.ndarray) -> np.ndarray:
    mat = np.asarray(mat, dtype=np.int64)
    n = mat.shape[1]
    return mat @ (np.int64(1) << np.arange(n - 1, -1, -1, dtype=np.int64))


def parity_products(left: np.ndarray, right: np.ndarray) -> np.ndarray:
    """``(left @ right.T) mod 2`` for 0/1 matrices, as int64."""
    return (left.astype(np.int64) @ right.T.astype(np.int64)) & 1


def overlap_matrix(c: IqpCircuit, masks: np.ndarray) -> np.ndarray:
    """``(m, G)`` float indicator of ``g_j . a`` odd."""
    return parity_products(masks, c.generator_matrix).astype(np.float64)


def z_signs(c: IqpCircuit, z: np.ndarray) -> np.ndarray:
    """``(batch, G)`` matrix of ``(-1)^{g_j . z}``."""
    return 1.0 - 2.0 * parity_products(z, c.generator_matrix)


def _phase_terms(thetas, overlap, signs):
    # phase argument 2 sum_{j in A(a)} theta_j s_j(z), shape (batch, m)
    return 2.0 * signs @ (overlap * thetas).T


def cosine_sums(c: IqpCircuit, masks: np.ndarray, z: np.ndarray, with_grad: bool = False):
    """Sums over the ``z`` rows of the cosine terms (and their theta-derivatives).

    Returns ``(sum_cos, sum_cos_sq, sum_grad)`` with shapes ``(m,)``, ``(m,)``
    and ``(m, G)`` (``None`` unless ``with_grad``).  Sums rather than means so
    chunked enumeration and sharded batches reduce exactly.
    """
    overlap = overlap_matrix(c, masks)
    signs = z_signs(c, z)
    phase = _phase_terms(c.thetas, overlap, signs)
    cos = np.cos(phase)
    grad = None
    if with_grad:
        grad = -2.0 * overlap * (np.sin(phase).T @ signs)
    return cos.sum(axis=0), np.square(cos).sum(axis=0), grad


def statevector(c: IqpCircuit) -> np.ndarray:
    """Gate-by-gate simulation of ``H^n D H^n |0>``; flat amplitude vector."""
    n = c.qubit_count
    _check_exact(n)
    psi = np.zeros((2,) * n, dtype=np.complex128)
    psi[(0,) * n] = 1.0

    def hadamard_layer(psi):
        for q in range(n):
            psi = np.moveaxis(np.tensordot(_HADAMARD, psi, axes=([1], [q])), 0, q)
        return psi

    psi = hadamard_layer(psi)
    for g, theta in zip(c.generators, c.thetas):
        plus, minus = np.exp(1j * theta), np.exp(-1j * theta)
        shape = [1] * n
        if len(g) == 1:
            shape[g[0]] = 2
            factor = np.array([plus, minus])
        else:
            lo, hi = sorted(g)
            shape[lo] = shape[hi] = 2
            factor = np.array([[plus, minus], [minus, plus]])
        psi = psi * factor.reshape(shape)
    psi = hadamard_layer(psi)
    return psi.reshape(-1)


def _parity_signs_tensor(a: np.ndarray) -> np.ndarray:
    n = a.size
    out = np.ones((1,) * n)
    for q in np.flatnonzero(a):
        shape = [1] * n
        shape[q] = 2
        out = out * np.array([1.0, -1.0]).reshape(shape)
    return out


def expval_exact_statevector(c: IqpCircuit, a) -> float:
    a = as_mask(a, c.qubit_count)
    amps = statevector(c).reshape((2,) * c.qubit_count)
    value = np.sum(np.abs(amps) ** 2 * _parity_signs_tensor(a))
    return float(np.real(value))


def expvals_exact(c: IqpCircuit, masks, with_grad: bool = False):
    """Exact ``<Z_a>`` for every mask row by enumerating all ``2^n`` strings.

    Returns values ``(m,)`` and, if requested, gradients ``(m, G)``.
    """
    n = c.qubit_count
    _check_exact(n)
    masks = as_masks(masks, n)
    total = np.zeros(masks.shape[0])
    grad = np.zeros((masks.shape[0], c.n_params)) if with_grad else None
    size = 1 << n
    for start in range(0, size, _ENUM_CHUNK):
        z = bitstrings(n, start, min(size, start + _ENUM_CHUNK))
        s, _, g = cosine_sums(c, masks, z, with_grad)
        total += s
        if with_grad:
            grad += g
    total /= size
    if with_grad:
        return total, grad / size
    return total


def expval_exact_enumeration(c: IqpCircuit, a) -> float:
    return float(expvals_exact(c, as_mask(a, c.qubit_count))[0])


def expval_grad_exact(c: IqpCircuit, a) -> np.ndarray:
    _, grad = expvals_exact(c, as_mask(a, c.qubit_count), with_grad=True)
    return grad[0]


def uniform_z(n: int, batch: int, rng: np.random.Generator) -> np.ndarray:
    return rng.integers(0, 2, size=(batch, n), dtype=np.uint8)


def expval_and_grad_mc(c: IqpCircuit, a, batch: int, rng: np.random.Generator):
    """Paired value estimate and gradient from one uniform batch of ``z``."""
    if batch < 1:
        raise ValueError("batch must be >= 1")
    a = as_mask(a, c.qubit_count)
    z = uniform_z(c.qubit_count, batch, rng)
    s, s2, g = cosine_sums(c, a.reshape(1, -1), z, with_grad=True)
    mean = s[0] / batch
    if batch > 1:
        var = max(s2[0] - batch * mean * mean, 0.0) / (batch - 1)
        se = float(np.sqrt(var / batch))
    else:
        se = 0.0
    return ExpvalEstimate(float(mean), se, batch), g[0] / batch


def expval_mc(c: IqpCircuit, a, batch: int, rng: np.random.Generator) -> ExpvalEstimate:
    return expval_and_grad_mc(c, a, batch, rng)[0]


def expval_grad_mc(c: IqpCircuit, a, batch: int, rng: np.random.Generator) -> np.ndarray:
    return expval_and_grad_mc(c, a, batch, rng)[1]


def data_expvals(samples, masks) -> np.ndarray:
    """Mean of ``(-1)^{a . x}`` over sample rows, for every mask row."""
    x = np.asarray(samples, dtype=np.uint8)
    if x.ndim != 2 or x.shape[0] == 0:
        raise ValueError("need a nonempty 2-D sample matrix")
    masks = as_masks(masks, x.shape[1])
    return 1.0 - 2.0 * parity_products(x, masks).mean(axis=0)


def data_expval(samples, a) -> float:
    x = np.asarray(samples, dtype=np.uint8)
    if x.ndim != 2 or x.shape[0] == 0:
        raise ValueError("need a nonempty 2-D sample matrix")
    return float(data_expvals(x, as_mask(a, x.shape[1]))[0])
