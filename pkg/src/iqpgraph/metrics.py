"""Scores for generated graph sets against a target dataset."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from iqpgraph import rng as rngmod
from iqpgraph.graphcodec import (
    GraphBits,
    bipartite_mask,
    degree_matrix,
    edge_count,
    node_count_for,
    spectral_bipartivity_batch,
    to_matrix,
)
from iqpgraph.trainer import hamming_matrix, median_heuristic

DEFAULT_BASELINE_TRIALS = 10**6


class EmptySampleError(ValueError):
    pass


def graph_matrix(graphs, m: int | None = None) -> tuple[np.ndarray, int]:
    """``(S, N)`` bit matrix and node count from GraphBits or a bit matrix."""
    if isinstance(graphs, np.ndarray):
        mat = to_matrix(graphs)
    else:
        graphs = list(graphs)
        if graphs and isinstance(graphs[0], GraphBits):
            m = graphs[0].node_count if m is None else m
        mat = to_matrix(graphs) if graphs else np.zeros((0, 0), dtype=np.uint8)
    if mat.shape[0] == 0:
        raise EmptySampleError("empty sample set")
    return mat, node_count_for(mat.shape[1]) if m is None else m


def mean_density(graphs) -> float:
    mat, _ = graph_matrix(graphs)
    return float(mat.mean())


def density_error(generated, target_mean_density: float) -> float:
    """Generated mean density minus the target mean (negative = too sparse)."""
    return mean_density(generated) - target_mean_density


def binomial_pmf(trials: int, p: float) -> np.ndarray:
    k = np.arange(trials + 1)
    return np.array([math.comb(trials, int(i)) for i in k], dtype=np.float64) * p ** k * (1 - p) ** (trials - k)


def degree_histogram(generated, m: int | None = None) -> np.ndarray:
    """Pooled node-degree frequencies over every node of every graph, k = 0..M-1."""
    mat, m = graph_matrix(generated, m)
    degrees = degree_matrix(mat, m).reshape(-1)
    return np.bincount(degrees, minlength=m).astype(np.float64) / degrees.size


def tvd(p, q) -> float:
    return 0.5 * float(np.abs(np.asarray(p) - np.asarray(q)).sum())


def degree_tvd(generated, m: int, rho_ref: float) -> float:
    if not 0.0 <= rho_ref <= 1.0:
        raise ValueError("reference density must lie in [0, 1]")
    return tvd(degree_histogram(generated, m), binomial_pmf(m - 1, rho_ref))


def bipartite_accuracy(generated) -> float:
    mat, m = graph_matrix(generated)
    return 100.0 * float(bipartite_mask(mat, m).mean())


@dataclass(frozen=True)
class BaselineEstimate:
    pct: float
    std_error: float
    trials: int


def er_baseline(m: int, rho: float, trials: int, rng: np.random.Generator,
                chunk: int = 100_000) -> BaselineEstimate:
    """Percentage of ER(m, rho) graphs that are bipartite, by Monte Carlo."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    n = edge_count(m)
    hits = 0
    done = 0
    while done < trials:
        k = min(chunk, trials - done)
        mat = (rng.random((k, n)) < rho).astype(np.uint8)
        hits += int(bipartite_mask(mat, m).sum())
        done += k
    frac = hits / trials
    return BaselineEstimate(100.0 * frac, 100.0 * math.sqrt(frac * (1 - frac) / trials), trials)


def expected_bipartivity(generated) -> float:
    mat, m = graph_matrix(generated)
    return float(spectral_bipartivity_batch(mat, m).mean())


def empirical_mmd(set_a, set_b, sigma: float) -> float:
    """Unbiased (U-statistic) squared MMD, Gaussian kernel on Hamming distance."""
    a = np.asarray(to_matrix(set_a) if not isinstance(set_a, np.ndarray) else set_a, dtype=np.uint8)
    b = np.asarray(to_matrix(set_b) if not isinstance(set_b, np.ndarray) else set_b, dtype=np.uint8)
    if a.shape[0] < 2 or b.shape[0] < 2:
        raise ValueError("each set needs at least two samples")
    if a.shape[1] != b.shape[1]:
        raise ValueError("sample lengths differ")
    scale = 1.0 / (2.0 * sigma * sigma)
    kaa = np.exp(-scale * hamming_matrix(a, a))
    kbb = np.exp(-scale * hamming_matrix(b, b))
    kab = np.exp(-scale * hamming_matrix(a, b))
    na, nb = a.shape[0], b.shape[0]
    within_a = (kaa.sum() - np.trace(kaa)) / (na * (na - 1))
    within_b = (kbb.sum() - np.trace(kbb)) / (nb * (nb - 1))
    return float(within_a + within_b - 2.0 * kab.mean())


@dataclass(frozen=True)
class MetricsReport:
    node_count: int
    sample_count: int
    mean_density: float
    target_mean_density: float
    density_error: float
    degree_tvd: float
    bipartite_pct: float
    target_bipartite_pct: float
    baseline_pct: float
    baseline_std_error: float
    baseline_density: float
    baseline_target_pct: float
    mean_beta: float
    target_mean_beta: float
    mmd_to_target: float
    sigma: float

    def to_dict(self) -> dict:
        return asdict(self)


def build_report(generated, dataset, spec=None, baseline_trials: int = DEFAULT_BASELINE_TRIALS,
                 seed: int = 0, sigma: float | None = None) -> MetricsReport:
    """Every metric of a generated set against its target dataset.

    ``baseline_pct`` is the ER null rate at the generated mean density;
    ``baseline_target_pct`` is the same rate at the target mean density.
    Both baselines draw from streams keyed by ``seed``.
    """
    gen, m = graph_matrix(generated)
    data, m_data = graph_matrix(dataset)
    if m != m_data:
        raise ValueError(f"generated graphs have {m} nodes, dataset has {m_data}")
    if spec is not None and spec.node_count != m:
        raise ValueError("dataset spec node count does not match samples")
    target_rho = float(data.mean())
    gen_rho = float(gen.mean())
    if sigma is None:
        sigma = median_heuristic(data, rng=rngmod.stream(seed, rngmod.OP_MEDIAN))
    base_gen = er_baseline(m, gen_rho, baseline_trials, rngmod.stream(seed, rngmod.OP_BASELINE, 0))
    base_tgt = er_baseline(m, target_rho, baseline_trials, rngmod.stream(seed, rngmod.OP_BASELINE, 1))
    mmd = empirical_mmd(gen, data, sigma) if min(gen.shape[0], data.shape[0]) >= 2 else float("nan")
    return MetricsReport(
        node_count=m,
        sample_count=int(gen.shape[0]),
        mean_density=gen_rho,
        target_mean_density=target_rho,
        density_error=gen_rho - target_rho,
        degree_tvd=degree_tvd(gen, m, target_rho),
        bipartite_pct=100.0 * float(bipartite_mask(gen, m).mean()),
        target_bipartite_pct=100.0 * float(bipartite_mask(data, m).mean()),
        baseline_pct=base_gen.pct,
        baseline_std_error=base_gen.std_error,
        baseline_density=gen_rho,
        baseline_target_pct=base_tgt.pct,
        mean_beta=float(spectral_bipartivity_batch(gen, m).mean()),
        target_mean_beta=float(spectral_bipartivity_batch(data, m).mean()),
        mmd_to_target=mmd,
        sigma=float(sigma),
    )
