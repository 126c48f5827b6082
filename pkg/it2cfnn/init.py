"""
Data-driven network initialization.

Rule centers are training samples whose target is a strict local extremum over their
nearest neighbors, preferring the densest neighborhoods. Each rule's feature extraction
matrix whitens the local neighbor cloud around its center, so that the rule fires on
circular contours in the extracted feature space.
"""

import dataclasses as dc
import logging
import warnings
from typing import List, Optional, Sequence

import numpy as np
from scipy import linalg
from scipy.spatial import distance

from . import config, errors
from .data import Dataset
from .network import Network, Parameters
from .typedefs import FloatArray, IntArray
from .utils import ArrayLike, as_matrix, as_vector

__all__ = (
    'KnnIndex',
    'CandidateCenter',
    'knn',
    'find_candidates',
    'select_centers',
    'local_covariance',
    'whitening_transform',
    'neighborhood_size',
    'initialize',
)

logger = logging.getLogger(__name__)

EIGENVALUE_FLOOR = 1e-8
SIGN_TOLERANCE = 1e-12


@dc.dataclass(frozen=True)
class KnnIndex:
    """
    Exact k-nearest-neighbor index over a sample matrix. Neighbors of a sample exclude the sample itself;
    distance ties are resolved by the lower sample index.

    :param samples: ``N x n`` sample matrix
    :param k: number of neighbors
    """

    samples: FloatArray
    k: int

    def __post_init__(self) -> None:
        samples = as_matrix(self.samples, name='samples')
        object.__setattr__(self, 'samples', samples)
        if not 1 <= self.k < samples.shape[0]:
            raise errors.ConfigurationError(
                f"neighbor count must be in [1, {samples.shape[0] - 1}] (got {self.k})",
            )

    def squared_distances(self, query_index: int) -> FloatArray:
        return distance.cdist(self.samples[query_index:query_index + 1], self.samples, 'sqeuclidean')[0]

    def neighbors(self, query_index: int) -> IntArray:
        """
        Returns neighbor indices of a sample ordered by distance.
        """

        if not 0 <= query_index < self.samples.shape[0]:
            raise errors.ContractError(f"sample index {query_index} out of range")

        distances = self.squared_distances(query_index)
        distances[query_index] = np.inf
        return np.argsort(distances, kind='stable')[:self.k]

    def table(self) -> IntArray:
        """
        Returns the ``N x k`` neighbor table of all samples.
        """

        distances = distance.cdist(self.samples, self.samples, 'sqeuclidean')
        np.fill_diagonal(distances, np.inf)
        return np.argsort(distances, axis=1, kind='stable')[:, :self.k]

    def density(self, query_index: int, neighbors: Optional[IntArray] = None) -> float:
        """
        Mean squared distance from a sample to its neighbors.
        """

        if neighbors is None:
            neighbors = self.neighbors(query_index)
        deviations = self.samples[neighbors] - self.samples[query_index]
        return float(np.mean(np.sum(deviations * deviations, axis=1)))


@dc.dataclass(frozen=True)
class CandidateCenter:
    """
    Rule center candidate.

    :param index: sample index
    :param position: sample inputs
    :param output: sample target
    :param density: mean squared distance to the sample neighbors
    """

    index: int
    position: FloatArray
    output: float
    density: float

    def __post_init__(self) -> None:
        if not self.density >= 0.0:
            raise errors.ContractError(f"candidate density must be non-negative (got {self.density})")


def knn(samples: ArrayLike, query_index: int, k: int) -> List[int]:
    """
    Finds the nearest neighbors of a sample.

    :param samples: ``N x n`` sample matrix
    :param query_index: query sample index
    :param k: number of neighbors, ``1 <= k < N``
    :return: neighbor indices ordered by distance, ties by index
    """

    return KnnIndex(as_matrix(samples, name='samples'), k).neighbors(query_index).tolist()


def find_candidates(dataset: Dataset, k: int) -> List[CandidateCenter]:
    """
    Finds samples whose target is strictly greater or strictly lower than all their neighbor targets.

    :param dataset: training data
    :param k: number of neighbors
    :return: candidates ordered by sample index
    """

    index = KnnIndex(dataset.inputs, k)
    table = index.table()
    neighbor_targets = dataset.targets[table]
    maxima = dataset.targets > neighbor_targets.max(axis=1)
    minima = dataset.targets < neighbor_targets.min(axis=1)

    candidates = [
        CandidateCenter(
            index=int(sample),
            position=dataset.inputs[sample].copy(),
            output=float(dataset.targets[sample]),
            density=index.density(int(sample), table[sample]),
        )
        for sample in np.flatnonzero(maxima | minima)
    ]
    logger.debug("found %d center candidates among %d samples (k=%d)", len(candidates), len(dataset), k)

    return candidates


def select_centers(
        candidates: Sequence[CandidateCenter],
        R: int,
        dataset: Optional[Dataset] = None,
        k: Optional[int] = None,
) -> List[CandidateCenter]:
    """
    Selects the candidates with the densest neighborhoods. When there are fewer candidates than rules
    the remaining slots are filled with the samples whose targets are farthest from the target median.

    :param candidates: center candidates
    :param R: number of rules
    :param dataset: training data, required for the shortage fallback
    :param k: number of neighbors used to compute fallback densities
    :return: ``R`` selected centers
    """

    if R < 1:
        raise errors.ConfigurationError(f"rule count must be positive (got {R})")

    selected = sorted(candidates, key=lambda candidate: (candidate.density, candidate.index))[:R]
    if len(selected) == R:
        return selected

    if dataset is None:
        raise errors.ConfigurationError(f"only {len(selected)} candidates for {R} rules and no data to fall back on")
    if R > len(dataset):
        raise errors.ConfigurationError(f"rule count {R} exceeds the number of samples {len(dataset)}")

    warnings.warn(
        f"only {len(selected)} center candidates found for {R} rules, "
        f"filling with samples farthest from the target median",
        errors.CandidateShortageWarning,
        stacklevel=2,
    )

    chosen = {candidate.index for candidate in selected}
    spread = np.abs(dataset.targets - np.median(dataset.targets))
    order = np.lexsort((np.arange(len(dataset)), -spread))
    index = KnnIndex(dataset.inputs, k if k is not None else neighborhood_size(len(dataset), R))
    for sample in order:
        if len(selected) == R:
            break
        if int(sample) in chosen:
            continue
        selected.append(
            CandidateCenter(
                index=int(sample),
                position=dataset.inputs[sample].copy(),
                output=float(dataset.targets[sample]),
                density=index.density(int(sample)),
            ),
        )

    return selected


def local_covariance(neighbors: ArrayLike, center: ArrayLike) -> FloatArray:
    """
    Second moment of a neighbor cloud about the rule center (not the cloud mean).

    :param neighbors: ``K x n`` neighbor samples
    :param center: rule center
    :return: ``n x n`` symmetric positive semi-definite matrix
    """

    neighbors = as_matrix(neighbors, name='neighbors')
    center = as_vector(center, size=neighbors.shape[1], name='center')
    if neighbors.shape[0] < 1:
        raise errors.ContractError("neighbor cloud is empty")

    deviations = neighbors - center
    covariance = deviations.T @ deviations / neighbors.shape[0]

    return 0.5 * (covariance + covariance.T)


def whitening_transform(covariance: ArrayLike) -> FloatArray:
    """
    Computes ``Gamma = Lambda^(-1/2) Phi^T`` from the eigendecomposition ``Q = Phi Lambda Phi^T``.
    Rows are ordered by descending eigenvalue and every eigenvector's first non-zero component is positive.
    Eigenvalues below ``1e-8 max(lambda_max, 1)`` are raised to that floor.

    :param covariance: ``n x n`` symmetric positive semi-definite matrix
    :return: ``n x n`` whitening matrix
    """

    covariance = as_matrix(covariance, name='covariance')
    if covariance.shape[0] != covariance.shape[1]:
        raise errors.ContractError(f"covariance must be square (got shape {covariance.shape})")
    if not np.all(np.isfinite(covariance)):
        raise errors.DomainError("covariance contains non-finite values")

    eigenvalues, eigenvectors = linalg.eigh(0.5 * (covariance + covariance.T))
    order = np.argsort(-eigenvalues, kind='stable')
    eigenvalues, eigenvectors = eigenvalues[order], eigenvectors[:, order]

    for column in range(eigenvectors.shape[1]):
        significant = np.flatnonzero(np.abs(eigenvectors[:, column]) > SIGN_TOLERANCE)
        if significant.size and eigenvectors[significant[0], column] < 0.0:
            eigenvectors[:, column] = -eigenvectors[:, column]

    floor = EIGENVALUE_FLOOR * max(float(eigenvalues[0]), 1.0)
    eigenvalues = np.maximum(eigenvalues, floor)

    return eigenvectors.T / np.sqrt(eigenvalues)[:, None]


def neighborhood_size(n_samples: int, R: int) -> int:
    """
    Neighborhood size ``floor(N / R)`` clipped to ``[1, N - 1]``.
    """

    return int(min(max(n_samples // R, 1), n_samples - 1))


def initialize(
        dataset: Dataset,
        R: int,
        epsilon_delta: float = 0.1,
        normalized_output: Optional[bool] = None,
) -> Network:
    """
    Builds an initial network from training data.

    :param dataset: training data
    :param R: number of rules
    :param epsilon_delta: initial shape uncertainty regulator, ``0 <= epsilon_delta < 1``
    :param normalized_output: output normalization flag, defaults to the process-wide setting
    :return: network with ``beta = 1``, ``delta = epsilon_delta`` and equal type reduction weights
    """

    n_samples = len(dataset)
    if R < 1:
        raise errors.ConfigurationError(f"rule count must be positive (got {R})")
    if n_samples < 2 or n_samples < R:
        raise errors.ConfigurationError(f"{n_samples} samples are not enough for {R} rules")
    if not 0.0 <= epsilon_delta < 1.0:
        raise errors.ConfigurationError(f"initial delta must be in [0, 1) (got {epsilon_delta})")

    k = neighborhood_size(n_samples, R)
    centers = select_centers(find_candidates(dataset, k), R, dataset, k)

    index = KnnIndex(dataset.inputs, k)
    transforms = np.stack([
        whitening_transform(local_covariance(dataset.inputs[index.neighbors(center.index)], center.position))
        for center in centers
    ])

    n = dataset.n_inputs
    params = Parameters(
        centers=np.stack([center.position for center in centers]),
        transforms=transforms,
        beta=np.ones((R, n)),
        delta=np.full((R, n), float(epsilon_delta)),
        weights=np.full((R, 2), 0.5),
        consequents=np.array([center.output for center in centers]),
        normalized_output=config.NORMALIZED_OUTPUT if normalized_output is None else normalized_output,
    )
    logger.info(
        "initialized %d rules from %d samples (k=%d, centers: %s)",
        R, n_samples, k, [center.index for center in centers],
    )

    return Network.from_parameters(params, normalization=dataset.normalization)
