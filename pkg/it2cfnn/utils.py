from typing import Optional, Sequence, Union

import numpy as np
import numpy.typing as npt

from . import errors
from .typedefs import FloatArray

ArrayLike = Union[npt.ArrayLike, Sequence[float]]


def as_vector(value: ArrayLike, size: Optional[int] = None, name: str = 'vector') -> FloatArray:
    """
    Converts a value to a one-dimensional float array.

    :param value: array-like value
    :param size: expected vector length
    :param name: value name used in error messages
    :return: float vector
    """

    vector = np.asarray(value, dtype=np.float64)
    if vector.ndim != 1:
        raise errors.ContractError(f"{name} must be one-dimensional (got shape {vector.shape})")
    if size is not None and vector.shape[0] != size:
        raise errors.ContractError(f"{name} length mismatch (actual: {vector.shape[0]}, expected: {size})")

    return vector


def as_matrix(value: ArrayLike, columns: Optional[int] = None, name: str = 'matrix') -> FloatArray:
    """
    Converts a value to a two-dimensional float array.

    :param value: array-like value
    :param columns: expected number of columns
    :param name: value name used in error messages
    :return: float matrix
    """

    matrix = np.asarray(value, dtype=np.float64)
    if matrix.ndim == 1 and columns is not None and matrix.shape[0] == columns:
        matrix = matrix.reshape(1, columns)
    if matrix.ndim != 2:
        raise errors.ContractError(f"{name} must be two-dimensional (got shape {matrix.shape})")
    if columns is not None and matrix.shape[1] != columns:
        raise errors.ContractError(f"{name} columns mismatch (actual: {matrix.shape[1]}, expected: {columns})")

    return matrix


def rng(seed: Optional[int]) -> np.random.Generator:
    return np.random.default_rng(seed)
