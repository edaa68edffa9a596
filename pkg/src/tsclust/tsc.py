"""The clustering pipeline: pick each point's q nearest neighbors under the
spherical pseudo-distance, turn the retained correlations into edge weights,
symmetrize into an adjacency matrix, and cluster the normalized-Laplacian
embedding.  The number of clusters is either supplied or estimated from the
largest eigenvalue gap of the Laplacian spectrum.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, QTooLarge, TooFewPoints
from .geometry import PointSet, normalize_columns
from .numerics import SpectralDecomposition, kmeans, least_squares, sym_eig

#: Node degrees at or below this are treated as zero (isolated node).
DEGREE_TOL = 1e-14

#: Embedding rows with norm at or below this are left as zero rows.
ROW_NORM_TOL = 1e-14

WEIGHT_VARIANTS = ("exp", "ls")


@dataclass(frozen=True)
class TscConfig:
    """Pipeline parameters.

    ``q`` is the neighbor count.  ``weight_variant`` selects between
    ``"exp"`` (edge weight ``exp(-2 arccos |corr|)``) and ``"ls"`` (absolute
    values of the minimum-norm least-squares coefficients of each point on
    its neighbors).  ``num_subspaces`` fixes the cluster count; ``None``
    estimates it with the eigengap heuristic, searching gap indices up to
    ``max_L`` (default: N - 1).  ``correlation_normalize`` divides inner
    products by the column norms so unnormalized inputs behave as if
    unit-normalized; disable to feed raw inner products through.
    """

    q: int
    weight_variant: str = "exp"
    num_subspaces: int | None = None
    max_L: int | None = None
    seed: int = 0
    kmeans_restarts: int = 10
    kmeans_max_iter: int = 100
    correlation_normalize: bool = True

    def __post_init__(self):
        if self.q < 1:
            raise ConfigError(f"q must be >= 1, got {self.q}")
        if self.weight_variant not in WEIGHT_VARIANTS:
            raise ConfigError(
                f"weight_variant must be one of {WEIGHT_VARIANTS}, got {self.weight_variant!r}"
            )
        if self.num_subspaces is not None and self.num_subspaces < 1:
            raise ConfigError(f"num_subspaces must be >= 1, got {self.num_subspaces}")
        if self.max_L is not None and self.max_L < 1:
            raise ConfigError(f"max_L must be >= 1, got {self.max_L}")


@dataclass(frozen=True)
class NeighborGraph:
    """Per-point neighbor index lists, the weight matrix Z (column j supported
    on the neighbors of point j), and the symmetric adjacency A = Z + Z^T."""

    neighbor_sets: list[np.ndarray]
    Z: np.ndarray
    A: np.ndarray

    def edges_to_csv(self, path) -> None:
        """Write the nonzero upper-triangle adjacency entries as ``i,j,weight``."""
        rows, cols = np.nonzero(np.triu(self.A, k=1))
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["i", "j", "weight"])
            for i, j in zip(rows, cols):
                writer.writerow([int(i), int(j), format(self.A[i, j], ".17g")])


@dataclass(frozen=True)
class ClusterResult:
    """Pipeline output: 1-based labels, the cluster count used, the full
    ascending Laplacian spectrum, the gap index when the count was estimated,
    and the neighbor graph the clustering was computed from."""

    labels: np.ndarray
    L_hat: int
    laplacian_eigenvalues: np.ndarray
    eigengap_index: int | None = None
    graph: NeighborGraph | None = None

    def labels_to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["index", "label"])
            for i, lab in enumerate(self.labels):
                writer.writerow([i, int(lab)])

    def to_json_dict(self) -> dict:
        return {
            "N": int(self.labels.size),
            "L_hat": int(self.L_hat),
            "eigengap_index": None if self.eigengap_index is None else int(self.eigengap_index),
            "labels": [int(v) for v in self.labels],
            "laplacian_eigenvalues": [float(v) for v in self.laplacian_eigenvalues],
        }


def default_q(n: int, L_known: bool) -> int:
    """Default neighbor count ``max(3, ceil(n/20))`` for ``n`` points per
    cluster, doubled when the cluster count is estimated rather than given."""
    if n < 1:
        raise ConfigError(f"n must be >= 1, got {n}")
    q = max(3, -(-n // 20))
    return q if L_known else 2 * q


def _abs_correlations(X: np.ndarray, normalize: bool) -> np.ndarray:
    """|X^T X| with optional division by column norms, clamped to [0, 1]."""
    G = X.T @ X
    if normalize:
        norms = np.linalg.norm(X, axis=0)
        norms = np.where(norms > 0.0, norms, 1.0)
        G /= norms[None, :]
        G /= norms[:, None]
    np.abs(G, out=G)
    np.clip(G, 0.0, 1.0, out=G)
    return G


def select_neighbors(points: PointSet, q: int, normalize: bool = True) -> list[np.ndarray]:
    """For each point j, the q indices i != j with largest absolute
    correlation, in descending correlation order; ties go to the lower index.

    Raises
    ------
    QTooLarge
        If ``q > N - 1``.
    """
    N = points.N
    if q < 1:
        raise ConfigError(f"q must be >= 1, got {q}")
    if q > N - 1:
        raise QTooLarge(f"q={q} exceeds N-1={N - 1}")
    C = _abs_correlations(points.data, normalize)
    np.fill_diagonal(C, -1.0)
    # Stable sort on the negated correlations: descending value, ties by index.
    order = np.argsort(-C, axis=0, kind="stable")
    return [order[:q, j].copy() for j in range(N)]


def compute_weights(
    points: PointSet,
    neighbors: list[np.ndarray],
    weight_variant: str = "exp",
    normalize: bool = True,
) -> np.ndarray:
    """Column-j weights on the neighbor set of point j.

    ``"exp"``: ``exp(-2 arccos |corr(x_j, x_i)|)``.  ``"ls"``: absolute values
    of the minimum-norm least-squares coefficients expressing ``x_j`` in the
    columns indexed by its neighbor set (raw columns as provided; pass
    pre-normalized points for correlation-equivalent behavior).
    """
    if weight_variant not in WEIGHT_VARIANTS:
        raise ConfigError(f"unknown weight variant {weight_variant!r}")
    X = points.data
    N = points.N
    if len(neighbors) != N:
        raise ValueError(f"{len(neighbors)} neighbor sets for {N} points")
    Z = np.zeros((N, N))
    if weight_variant == "exp":
        C = _abs_correlations(X, normalize)
        for j, idx in enumerate(neighbors):
            Z[idx, j] = np.exp(-2.0 * np.arccos(C[idx, j]))
    else:
        for j, idx in enumerate(neighbors):
            w = least_squares(X[:, idx], X[:, j])
            Z[idx, j] = np.abs(w)
    return Z


def assemble_adjacency(Z: np.ndarray, neighbor_sets: list[np.ndarray] | None = None) -> NeighborGraph:
    """Symmetrize the weight matrix into ``A = Z + Z^T``.

    When ``neighbor_sets`` is omitted they are reconstructed from the support
    of each column (descending weight, ties by index); pass the original sets
    to preserve selection order for weights that can be zero.
    """
    Z = np.asarray(Z, dtype=float)
    if Z.ndim != 2 or Z.shape[0] != Z.shape[1]:
        raise ValueError(f"Z must be square, got shape {Z.shape}")
    if np.any(Z < 0.0):
        raise ValueError("Z must be nonnegative")
    if np.any(np.diag(Z) != 0.0):
        raise ValueError("Z must have a zero diagonal")
    if neighbor_sets is None:
        neighbor_sets = []
        for j in range(Z.shape[1]):
            nz = np.flatnonzero(Z[:, j] > 0.0)
            neighbor_sets.append(nz[np.argsort(-Z[nz, j], kind="stable")])
    A = Z + Z.T
    return NeighborGraph(neighbor_sets=neighbor_sets, Z=Z, A=A)


def normalized_laplacian(A: np.ndarray) -> np.ndarray:
    """Symmetric normalized Laplacian ``I - D^{-1/2} A D^{-1/2}``.

    Degrees at or below 1e-14 use the convention ``0^{-1/2} := 0`` and the
    corresponding diagonal entry is set to 0, so an isolated node contributes
    a zero row and hence an exact zero eigenvalue (its own connected
    component, matching the component-count reading of the spectrum).
    """
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError(f"A must be square, got shape {A.shape}")
    deg = A.sum(axis=1)
    pos = deg > DEGREE_TOL
    inv_sqrt = np.zeros(A.shape[0])
    inv_sqrt[pos] = 1.0 / np.sqrt(deg[pos])
    # Outer product keeps the scaled matrix exactly symmetric in floating point.
    L = -(A * np.multiply.outer(inv_sqrt, inv_sqrt))
    np.fill_diagonal(L, np.where(pos, 1.0, 0.0))
    return L


def estimate_L_eigengap(eigenvalues: np.ndarray, max_L: int | None = None) -> tuple[int, int]:
    """Cluster-count estimate: the (1-based) index i maximizing
    ``eigenvalues[i+1] - eigenvalues[i]`` over ``i <= min(N-1, max_L)``,
    ties broken by the smallest index.  Returns ``(L_hat, gap_index)``.

    Raises
    ------
    TooFewPoints
        If fewer than two eigenvalues are supplied.
    """
    ev = np.asarray(eigenvalues, dtype=float).ravel()
    if ev.size < 2:
        raise TooFewPoints(f"need >= 2 eigenvalues, got {ev.size}")
    hi = ev.size - 1
    if max_L is not None:
        hi = max(1, min(hi, int(max_L)))
    gaps = np.diff(ev[: hi + 1])
    i = int(np.argmax(gaps)) + 1  # argmax returns the first maximum
    return i, i


def _cluster_embedding(
    decomposition: SpectralDecomposition,
    L_hat: int,
    seed: int,
    restarts: int,
    max_iter: int,
) -> np.ndarray:
    """Row-normalize the L_hat smallest eigenvectors and k-means them."""
    E = decomposition.eigenvectors[:, :L_hat].copy()
    norms = np.linalg.norm(E, axis=1)
    keep = norms > ROW_NORM_TOL
    E[keep] /= norms[keep, None]
    E[~keep] = 0.0
    result = kmeans(E, L_hat, seed=seed, restarts=restarts, max_iter=max_iter)
    return result.labels


def spectral_cluster(
    L_sym: np.ndarray,
    L_hat: int,
    seed: int = 0,
    restarts: int = 10,
    max_iter: int = 100,
) -> np.ndarray:
    """Normalized spectral clustering of a Laplacian into ``L_hat`` groups.

    Takes the eigenvectors of the ``L_hat`` smallest eigenvalues as an
    ``N x L_hat`` embedding, normalizes each row to unit norm (rows with norm
    <= 1e-14 stay zero), and k-means the rows.  Returns 1-based labels.
    """
    return _cluster_embedding(sym_eig(L_sym), L_hat, seed, restarts, max_iter)


def run_tsc(points: PointSet, config: TscConfig) -> ClusterResult:
    """End-to-end pipeline; deterministic for a fixed config.

    Composes neighbor selection, weight construction, adjacency assembly,
    the normalized Laplacian, cluster-count estimation (when not given), and
    spectral clustering.
    """
    if points.N < 2:
        raise TooFewPoints(f"need >= 2 points, got {points.N}")
    pts = normalize_columns(points) if config.correlation_normalize else points
    neighbors = select_neighbors(pts, config.q, normalize=config.correlation_normalize)
    Z = compute_weights(
        pts, neighbors, config.weight_variant, normalize=config.correlation_normalize
    )
    graph = assemble_adjacency(Z, neighbors)
    L_sym = normalized_laplacian(graph.A)
    decomposition = sym_eig(L_sym)
    if config.num_subspaces is None:
        L_hat, gap_index = estimate_L_eigengap(decomposition.eigenvalues, config.max_L)
    else:
        L_hat, gap_index = config.num_subspaces, None
    labels = _cluster_embedding(
        decomposition, L_hat, config.seed, config.kmeans_restarts, config.kmeans_max_iter
    )
    return ClusterResult(
        labels=labels,
        L_hat=L_hat,
        laplacian_eigenvalues=decomposition.eigenvalues,
        eigengap_index=gap_index,
        graph=graph,
    )
