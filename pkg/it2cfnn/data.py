"""
Benchmark datasets: the correlated two-hump function, the Mackey-Glass delay equation,
lag embedding of (multi-)series, Gaussian noise, normalization and CSV ingestion.
"""

import dataclasses as dc
import logging
import math
from pathlib import Path
from typing import Literal, Optional, Sequence, Tuple, Union, overload

import numpy as np
import pandas as pd
import pydantic as pd_

from . import errors
from .typedefs import FloatArray, IntArray, NoiseScope, NormalizationMode
from .utils import ArrayLike, as_matrix, as_vector, rng

__all__ = (
    'Normalization',
    'Dataset',
    'LagTerm',
    'SeriesSpec',
    'TWO_HUMP_CENTERS',
    'two_hump',
    'synthetic_two_hump',
    'mackey_glass',
    'lag_embed',
    'add_gaussian_noise',
    'load_csv',
    'save_csv',
    'load_series',
    'normalize',
    'shuffle_split',
    'head_split',
)

logger = logging.getLogger(__name__)

ColumnKey = Union[int, str]


class Normalization(pd_.BaseModel):
    """
    Affine column scaling ``x' = (x - offset) / scale`` of inputs and target.
    """

    model_config = pd_.ConfigDict(frozen=True, extra='forbid')

    mode: NormalizationMode
    input_offset: Tuple[float, ...]
    input_scale: Tuple[float, ...]
    target_offset: float = 0.0
    target_scale: float = 1.0

    @pd_.model_validator(mode='after')
    def check_scales(self) -> 'Normalization':
        if len(self.input_offset) != len(self.input_scale):
            raise ValueError("input offset and scale lengths differ")
        if any(scale == 0.0 for scale in self.input_scale) or self.target_scale == 0.0:
            raise ValueError("scales must be non-zero")

        return self

    @classmethod
    def identity(cls, n_inputs: int) -> 'Normalization':
        return cls(mode=NormalizationMode.NONE, input_offset=(0.0,) * n_inputs, input_scale=(1.0,) * n_inputs)

    @classmethod
    def fit(cls, inputs: FloatArray, targets: FloatArray, mode: NormalizationMode) -> 'Normalization':
        """
        Estimates scaling from data.

        :param inputs: input matrix
        :param targets: target vector
        :param mode: scaling mode
        :return: fitted normalization
        """

        mode = NormalizationMode(mode)
        if mode is NormalizationMode.NONE:
            return cls.identity(inputs.shape[1])

        columns = np.column_stack([inputs, targets])
        if mode is NormalizationMode.MINMAX01:
            offset = columns.min(axis=0)
            scale = columns.max(axis=0) - offset
        else:
            offset = columns.mean(axis=0)
            scale = columns.std(axis=0)

        for index, value in enumerate(scale):
            if not value > 0.0:
                name = f"x{index + 1}" if index < inputs.shape[1] else 'y'
                raise errors.ConfigurationError(f"column {name} is constant, cannot apply {mode.value} scaling")

        return cls(
            mode=mode,
            input_offset=tuple(float(value) for value in offset[:-1]),
            input_scale=tuple(float(value) for value in scale[:-1]),
            target_offset=float(offset[-1]),
            target_scale=float(scale[-1]),
        )

    def apply_inputs(self, inputs: FloatArray) -> FloatArray:
        return (inputs - np.asarray(self.input_offset)) / np.asarray(self.input_scale)

    def invert_inputs(self, inputs: FloatArray) -> FloatArray:
        return inputs * np.asarray(self.input_scale) + np.asarray(self.input_offset)

    def apply_targets(self, targets: FloatArray) -> FloatArray:
        return (targets - self.target_offset) / self.target_scale

    def invert_targets(self, targets: FloatArray) -> FloatArray:
        return targets * self.target_scale + self.target_offset


@dc.dataclass(frozen=True)
class Dataset:
    """
    Regression samples.

    :param inputs: input matrix, one sample per row
    :param targets: target vector
    :param normalization: scaling applied to the stored values, if any
    """

    inputs: FloatArray
    targets: FloatArray
    normalization: Optional[Normalization] = None

    def __post_init__(self) -> None:
        inputs = as_matrix(self.inputs, name='inputs')
        targets = as_vector(self.targets, name='targets')
        if inputs.shape[0] != targets.shape[0]:
            raise errors.ContractError(
                f"inputs and targets row counts differ (inputs: {inputs.shape[0]}, targets: {targets.shape[0]})",
            )
        object.__setattr__(self, 'inputs', inputs)
        object.__setattr__(self, 'targets', targets)

    def __len__(self) -> int:
        return self.inputs.shape[0]

    @property
    def n_inputs(self) -> int:
        return self.inputs.shape[1]

    def subset(self, indices: Union[IntArray, slice, Sequence[int]]) -> 'Dataset':
        return Dataset(self.inputs[indices], self.targets[indices], self.normalization)

    def original_targets(self) -> FloatArray:
        """
        Returns targets in original units.
        """

        if self.normalization is None:
            return self.targets

        return self.normalization.invert_targets(self.targets)


class LagTerm(pd_.BaseModel):
    """
    One lagged input: ``series[s][t - lag]``.
    """

    model_config = pd_.ConfigDict(frozen=True, extra='forbid')

    series: int = pd_.Field(default=0, ge=0)
    lag: int = pd_.Field(ge=0)


class SeriesSpec(pd_.BaseModel):
    """
    Lag embedding recipe. A row anchored at time ``t`` has inputs ``series[term.series][t - term.lag]``
    and target ``series[target_series][t + horizon]``.

    :param lags: lagged inputs in column order
    :param target_series: index of the predicted series
    :param horizon: prediction horizon
    :param start: first target index (inclusive), defaults to the first index with full history
    :param stop: last target index (inclusive), defaults to the end of the series
    :param train_size: number of leading rows used for training
    :param test_size: number of rows following the training rows used for testing
    """

    model_config = pd_.ConfigDict(frozen=True, extra='forbid')

    lags: Tuple[LagTerm, ...] = pd_.Field(min_length=1)
    target_series: int = pd_.Field(default=0, ge=0)
    horizon: int = pd_.Field(default=0, ge=0)
    start: Optional[int] = None
    stop: Optional[int] = None
    train_size: Optional[int] = pd_.Field(default=None, ge=1)
    test_size: Optional[int] = pd_.Field(default=None, ge=1)

    @pd_.model_validator(mode='after')
    def check_causality(self) -> 'SeriesSpec':
        for term in self.lags:
            if term.lag + self.horizon < 1:
                raise ValueError(f"lag {term.lag} with horizon {self.horizon} leaks the target into the inputs")

        return self

    @classmethod
    def single(cls, lags: Sequence[int], horizon: int = 0, **kwargs: object) -> 'SeriesSpec':
        """
        Creates a single-series spec.

        :param lags: input lags
        :param horizon: prediction horizon
        :param kwargs: other spec fields
        """

        return cls.model_validate(dict(lags=[LagTerm(lag=lag) for lag in lags], horizon=horizon, **kwargs))

    @property
    def history(self) -> int:
        return max(term.lag for term in self.lags) + self.horizon


# translation vectors and correlation matrices of the two-hump function
TWO_HUMP_CENTERS: Tuple[Tuple[float, float], Tuple[float, float]] = ((-0.7, 1.3), (1.2, -0.6))
TWO_HUMP_MATRICES = (
    np.array([[-4.5721, -2.1415], [-0.3855, 0.8230]]),
    np.array([[-2.4801, 0.8700], [-0.3149, 0.8976]]),
)
TWO_HUMP_DOMAIN = (-2.0, 3.0)


def two_hump(inputs: ArrayLike) -> FloatArray:
    """
    Correlated two-hump target ``10 exp(-(|z11|^0.6 + |z12|^0.8)) + 8 exp(-(z21^6 + z22^4))``
    with ``Z_i = A_i (X - c_i)``. Fractional powers are taken on absolute values.

    :param inputs: ``N x 2`` input matrix
    :return: target vector
    """

    inputs = as_matrix(inputs, columns=2, name='inputs')
    z1 = (inputs - np.asarray(TWO_HUMP_CENTERS[0])) @ TWO_HUMP_MATRICES[0].T
    z2 = (inputs - np.asarray(TWO_HUMP_CENTERS[1])) @ TWO_HUMP_MATRICES[1].T

    first = 10.0 * np.exp(-(np.abs(z1[:, 0]) ** 0.6 + np.abs(z1[:, 1]) ** 0.8))
    second = 8.0 * np.exp(-(z2[:, 0] ** 6 + z2[:, 1] ** 4))

    return first + second


def synthetic_two_hump(n_samples: int = 700, seed: Optional[int] = 0, grid: bool = False) -> Dataset:
    """
    Samples the two-hump function over ``[-2, 3]^2``.

    :param n_samples: number of samples (rounded down to a square when ``grid`` is set)
    :param seed: sampling seed
    :param grid: sample a regular grid instead of uniform random points
    :return: dataset
    """

    low, high = TWO_HUMP_DOMAIN
    if grid:
        side = max(int(math.isqrt(n_samples)), 2)
        axis = np.linspace(low, high, side)
        x1, x2 = np.meshgrid(axis, axis, indexing='ij')
        inputs = np.column_stack([x1.ravel(), x2.ravel()])
    else:
        inputs = rng(seed).uniform(low, high, size=(n_samples, 2))

    return Dataset(inputs, two_hump(inputs))


def _mackey_glass_rhs(value: float, delayed: float) -> float:
    return 0.2 * delayed / (1.0 + delayed ** 10) - 0.1 * value


def mackey_glass(
        x0: float = 1.2,
        tau: float = 17.0,
        t_start: int = 0,
        t_end: int = 1123,
        dt: float = 0.1,
        interpolation: Literal['linear', 'hermite'] = 'linear',
) -> FloatArray:
    """
    Integrates the Mackey-Glass delay equation ``dx/dt = 0.2 x(t - tau) / (1 + x(t - tau)^10) - 0.1 x(t)``
    with fourth-order Runge-Kutta and constant history ``x(t) = x0`` for ``t <= 0``.
    Delayed values between stored steps are interpolated from the stored trajectory.

    :param x0: initial value and history
    :param tau: delay, must exceed 16.5
    :param t_start: first sampled integer time
    :param t_end: last sampled integer time (inclusive)
    :param dt: internal step, must divide one
    :param interpolation: delayed value interpolation, ``linear`` or cubic ``hermite`` (uses stored derivatives)
    :return: samples at integer times ``t_start..t_end``
    """

    if not tau > 16.5:
        raise errors.ConfigurationError(f"tau must exceed 16.5 (got {tau})")
    if t_end < t_start:
        raise errors.ConfigurationError(f"empty time range [{t_start}, {t_end}]")
    steps_per_unit = round(1.0 / dt)
    if steps_per_unit < 1 or abs(steps_per_unit * dt - 1.0) > 1e-9:
        raise errors.ConfigurationError(f"integration step must divide one (got {dt})")
    if interpolation not in ('linear', 'hermite'):
        raise errors.ConfigurationError(f"unknown interpolation: {interpolation}")

    dt = 1.0 / steps_per_unit
    delay = tau * steps_per_unit  # in steps
    n_steps = max(t_end, 0) * steps_per_unit

    values = np.empty(n_steps + 1)
    slopes = np.empty(n_steps + 1)
    values[0] = x0

    def delayed(position: float) -> float:
        if position <= 0.0:
            return x0

        index = int(math.floor(position))
        fraction = position - index
        if fraction < 1e-9:
            return float(values[index])
        if fraction > 1.0 - 1e-9:
            return float(values[index + 1])

        left, right = values[index], values[index + 1]
        if interpolation == 'linear':
            return float((1.0 - fraction) * left + fraction * right)

        f2, f3 = fraction * fraction, fraction * fraction * fraction
        return float(
            (2.0 * f3 - 3.0 * f2 + 1.0) * left +
            (f3 - 2.0 * f2 + fraction) * dt * slopes[index] +
            (-2.0 * f3 + 3.0 * f2) * right +
            (f3 - f2) * dt * slopes[index + 1],
        )

    for step in range(n_steps):
        value = float(values[step])
        k1 = _mackey_glass_rhs(value, delayed(step - delay))
        slopes[step] = k1
        half = delayed(step + 0.5 - delay)
        k2 = _mackey_glass_rhs(value + 0.5 * dt * k1, half)
        k3 = _mackey_glass_rhs(value + 0.5 * dt * k2, half)
        k4 = _mackey_glass_rhs(value + dt * k3, delayed(step + 1.0 - delay))
        values[step + 1] = value + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    slopes[n_steps] = _mackey_glass_rhs(float(values[n_steps]), delayed(n_steps - delay))

    times = np.arange(t_start, t_end + 1)
    samples = np.full(times.shape, x0, dtype=np.float64)
    positive = times > 0
    samples[positive] = values[times[positive] * steps_per_unit]

    return samples


def lag_embed(series: ArrayLike, spec: SeriesSpec) -> Dataset:
    """
    Builds a regression dataset from lagged values of one or more series.

    :param series: ``T`` vector or ``T x S`` matrix (one series per column)
    :param spec: embedding recipe
    :return: dataset, one row per target index
    """

    values = np.asarray(series, dtype=np.float64)
    if values.ndim == 1:
        values = values[:, None]
    if values.ndim != 2:
        raise errors.ContractError(f"series must be a vector or a matrix (got shape {values.shape})")

    length, n_series = values.shape
    used = {term.series for term in spec.lags} | {spec.target_series}
    if max(used) >= n_series:
        raise errors.ConfigurationError(f"series index {max(used)} out of range ({n_series} series given)")

    first = spec.history if spec.start is None else spec.start
    last = length - 1 if spec.stop is None else spec.stop
    if first < spec.history:
        raise errors.ConfigurationError(f"target index {first} has no full history (needs {spec.history})")
    if last >= length or last < first:
        raise errors.ConfigurationError(
            f"series of length {length} is too short for target indices [{first}, {last}]",
        )

    anchors = np.arange(first, last + 1) - spec.horizon
    inputs = np.column_stack([values[anchors - term.lag, term.series] for term in spec.lags])
    targets = values[anchors + spec.horizon, spec.target_series]

    return Dataset(inputs, targets)


@overload
def add_gaussian_noise(
        data: Dataset, std: float, seed: Optional[int], scope: NoiseScope = NoiseScope.BOTH,
) -> Dataset: ...


@overload
def add_gaussian_noise(
        data: FloatArray, std: float, seed: Optional[int], scope: NoiseScope = NoiseScope.BOTH,
) -> FloatArray: ...


def add_gaussian_noise(
        data: Union[Dataset, FloatArray],
        std: float,
        seed: Optional[int],
        scope: NoiseScope = NoiseScope.BOTH,
) -> Union[Dataset, FloatArray]:
    """
    Adds zero-mean Gaussian noise.

    :param data: dataset or raw series
    :param std: noise standard deviation, zero leaves the data unchanged
    :param seed: noise seed
    :param scope: perturbed part of a dataset (ignored for raw arrays)
    :return: perturbed copy
    """

    if not std >= 0.0:
        raise errors.ConfigurationError(f"noise std must be non-negative (got {std})")

    generator = rng(seed)
    if not isinstance(data, Dataset):
        values = np.array(data, dtype=np.float64)
        return values + generator.normal(0.0, std, size=values.shape) if std > 0.0 else values

    scope = NoiseScope(scope)
    inputs, targets = data.inputs.copy(), data.targets.copy()
    if std > 0.0:
        if scope in (NoiseScope.INPUTS, NoiseScope.BOTH):
            inputs += generator.normal(0.0, std, size=inputs.shape)
        if scope in (NoiseScope.TARGETS, NoiseScope.BOTH):
            targets += generator.normal(0.0, std, size=targets.shape)

    return Dataset(inputs, targets, data.normalization)


def _read_frame(path: Union[str, Path], header: bool) -> pd.DataFrame:
    try:
        return pd.read_csv(
            path,
            comment='#',
            header=0 if header else None,
            dtype=str,
            keep_default_na=False,
            skipinitialspace=True,
            encoding='utf-8',
        )
    except FileNotFoundError:
        raise errors.DataError(str(path), None, None, "file not found")
    except (pd.errors.ParserError, pd.errors.EmptyDataError, UnicodeDecodeError) as exc:
        raise errors.DataError(str(path), None, None, str(exc).strip())


def _numeric_column(frame: pd.DataFrame, key: ColumnKey, path: Union[str, Path]) -> FloatArray:
    if key in frame.columns:
        column = key
    elif isinstance(key, int) and -len(frame.columns) <= key < len(frame.columns):
        column = frame.columns[key]
    else:
        raise errors.DataError(str(path), None, key, "column not found")

    raw = frame[column]
    parsed = pd.to_numeric(raw, errors='coerce')
    invalid = np.flatnonzero(parsed.isna().to_numpy())
    if invalid.size:
        row = int(invalid[0])
        cell = raw.iloc[row]
        reason = "NaN cell" if cell.strip().lower() in ('nan', '') else f"cannot parse {cell!r} as a number"
        raise errors.DataError(str(path), row + 1, column, reason)

    return parsed.to_numpy(dtype=np.float64)


def load_csv(
        path: Union[str, Path],
        inputs: Optional[Sequence[ColumnKey]] = None,
        target: ColumnKey = -1,
        header: bool = False,
) -> Dataset:
    """
    Loads a dataset from a comma-separated file. Lines starting with ``#`` are comments.

    :param path: file path
    :param inputs: input columns (names when ``header`` is set, positions otherwise), defaults to all but the target
    :param target: target column
    :param header: the first non-comment line holds column names
    :return: dataset
    """

    frame = _read_frame(path, header)
    if frame.shape[0] == 0:
        raise errors.DataError(str(path), None, None, "no data rows")

    targets = _numeric_column(frame, target, path)
    if inputs is None:
        target_column = target if target in frame.columns else frame.columns[target]  # type: ignore[index]
        inputs = [column for column in frame.columns if column != target_column]
    if not inputs:
        raise errors.DataError(str(path), None, None, "no input columns")

    matrix = np.column_stack([_numeric_column(frame, key, path) for key in inputs])
    logger.debug("loaded %d samples with %d inputs from %s", matrix.shape[0], matrix.shape[1], path)

    return Dataset(matrix, targets)


def save_csv(dataset: Dataset, path: Union[str, Path]) -> None:
    """
    Saves a dataset with a header row (``x1..xn,y``) at 17 significant digits.

    :param dataset: dataset to save
    :param path: file path
    """

    frame = pd.DataFrame(dataset.inputs, columns=[f"x{index + 1}" for index in range(dataset.n_inputs)])
    frame['y'] = dataset.targets
    frame.to_csv(path, index=False, float_format='%.17g')


def load_series(
        path: Union[str, Path],
        columns: Optional[Sequence[ColumnKey]] = None,
        header: bool = False,
) -> FloatArray:
    """
    Loads one or more series from a comma-separated file.

    :param path: file path
    :param columns: series columns, defaults to all columns
    :param header: the first non-comment line holds column names
    :return: ``T`` vector for a single series, ``T x S`` matrix otherwise
    """

    frame = _read_frame(path, header)
    if frame.shape[0] == 0:
        raise errors.DataError(str(path), None, None, "no data rows")

    keys = list(columns) if columns is not None else list(frame.columns)
    matrix = np.column_stack([_numeric_column(frame, key, path) for key in keys])

    return matrix[:, 0] if matrix.shape[1] == 1 else matrix


def normalize(dataset: Dataset, mode: NormalizationMode = NormalizationMode.MINMAX01) -> Dataset:
    """
    Scales every column of a dataset. The returned dataset carries the metadata needed
    to map predictions back to original units.

    :param dataset: raw dataset
    :param mode: scaling mode
    :return: scaled dataset
    """

    if dataset.normalization is not None and dataset.normalization.mode is not NormalizationMode.NONE:
        raise errors.ConfigurationError("dataset is already normalized")

    normalization = Normalization.fit(dataset.inputs, dataset.targets, NormalizationMode(mode))

    return Dataset(
        normalization.apply_inputs(dataset.inputs),
        normalization.apply_targets(dataset.targets),
        normalization,
    )


def shuffle_split(dataset: Dataset, train_size: int, seed: Optional[int]) -> Tuple[Dataset, Dataset]:
    """
    Splits a dataset by a seeded permutation.

    :param dataset: dataset
    :param train_size: number of training samples
    :param seed: permutation seed
    :return: ``(train, test)``
    """

    if not 1 <= train_size <= len(dataset):
        raise errors.ConfigurationError(f"train size {train_size} out of range [1, {len(dataset)}]")

    order = rng(seed).permutation(len(dataset))
    return dataset.subset(order[:train_size]), dataset.subset(order[train_size:])


def head_split(dataset: Dataset, train_size: int, test_size: Optional[int] = None) -> Tuple[Dataset, Dataset]:
    """
    Splits a dataset into leading training rows and the following test rows.

    :param dataset: dataset
    :param train_size: number of training samples
    :param test_size: number of test samples, defaults to the rest
    :return: ``(train, test)``
    """

    if not 1 <= train_size <= len(dataset):
        raise errors.ConfigurationError(f"train size {train_size} out of range [1, {len(dataset)}]")
    stop = len(dataset) if test_size is None else train_size + test_size
    if stop > len(dataset):
        raise errors.ConfigurationError(f"train and test sizes exceed {len(dataset)} samples")

    return dataset.subset(slice(0, train_size)), dataset.subset(slice(train_size, stop))
