"""
Benchmark protocols.

An experiment builds its data, initializes a network from the training rows, trains it
and evaluates test RMSE in original target units for every cell of a train-noise x
test-noise grid. Noisy cells are repeated over noise seeds. Canned protocols live in a
versioned registry file.
"""

import dataclasses as dc
import hashlib
import logging
import math
import time
from pathlib import Path
from typing import Annotated, Any, ClassVar, Dict, List, Literal, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
import pydantic as pd_
from joblib import Parallel, delayed

from . import config, errors
from .data import Dataset, Normalization, SeriesSpec, add_gaussian_noise, lag_embed, load_series, mackey_glass
from .data import synthetic_two_hump
from .init import initialize
from .network import Network, fou_width, param_count, predict, trainable_count
from .persistence import save_model
from .train import TrainConfig, fit
from .typedefs import FloatArray, IntArray, NoiseScope, NormalizationMode
from .utils import ArrayLike, as_vector, rng

__all__ = (
    'REGISTRY_VERSION',
    'TwoHumpSource',
    'MackeyGlassSource',
    'CsvSeriesSource',
    'ExperimentSpec',
    'Registry',
    'RepetitionResult',
    'CellReport',
    'RunReport',
    'RunManifest',
    'noise_label',
    'rmse',
    'load_registry',
    'prepare',
    'run_experiment',
    'manifest_of',
)

logger = logging.getLogger(__name__)

REGISTRY_VERSION = 1
DEFAULT_REGISTRY = Path(__file__).parent / 'registry.json'

# seed offset separating test noise streams from training noise streams
TEST_SEED_OFFSET = 10_000


class TwoHumpSource(pd_.BaseModel):
    model_config = pd_.ConfigDict(frozen=True, extra='forbid')

    kind: Literal['two-hump'] = 'two-hump'
    n_samples: int = pd_.Field(default=700, ge=2)
    train_size: int = pd_.Field(default=350, ge=1)
    seed: int = 0
    grid: bool = False


class MackeyGlassSource(pd_.BaseModel):
    model_config = pd_.ConfigDict(frozen=True, extra='forbid')

    kind: Literal['mackey-glass'] = 'mackey-glass'
    x0: float = 1.2
    tau: float = 17.0
    dt: float = 0.1
    t_end: int = 1123
    interpolation: Literal['linear', 'hermite'] = 'linear'
    series: SeriesSpec


class CsvSeriesSource(pd_.BaseModel):
    model_config = pd_.ConfigDict(frozen=True, extra='forbid')

    kind: Literal['csv-series'] = 'csv-series'
    columns: Optional[List[Union[int, str]]] = None
    header: bool = False
    series: SeriesSpec


DataSource = Annotated[Union[TwoHumpSource, MackeyGlassSource, CsvSeriesSource], pd_.Field(discriminator='kind')]


class ExperimentSpec(pd_.BaseModel):
    """
    Experiment protocol.

    :param name: experiment name
    :param description: human-readable protocol summary
    :param source: dataset recipe
    :param rules: number of rules
    :param epsilon_delta: initial shape uncertainty regulator
    :param normalization: scaling applied to the data before noise injection
    :param train: training configuration
    :param train_noise: training noise standard deviations
    :param test_noise: test noise standard deviations (zero is the clean test set)
    :param matched_test_noise: test with the training noise level only, ignoring ``test_noise``
    :param noise_scope: perturbed part of non-series datasets
    :param repetitions: noise seeds per noisy cell
    :param seed: base noise seed
    :param reference_rmse: published test RMSE per cell label, informational
    :param baseline_name: name of a competing model
    :param baseline_rmse: competing model test RMSE per cell label, informational
    """

    model_config = pd_.ConfigDict(frozen=True, extra='forbid')

    name: str
    description: str = ''
    source: DataSource
    rules: int = pd_.Field(ge=1)
    epsilon_delta: float = pd_.Field(default=0.1, ge=0.0, lt=1.0)
    normalization: NormalizationMode = NormalizationMode.NONE
    train: TrainConfig = TrainConfig()
    train_noise: Tuple[float, ...] = pd_.Field(default=(0.0,), min_length=1)
    test_noise: Tuple[float, ...] = pd_.Field(default=(0.0,), min_length=1)
    matched_test_noise: bool = False
    noise_scope: NoiseScope = NoiseScope.BOTH
    repetitions: int = pd_.Field(default=1, ge=1)
    seed: int = 0
    reference_rmse: Dict[str, float] = {}
    baseline_name: Optional[str] = None
    baseline_rmse: Dict[str, float] = {}

    @pd_.field_validator('train_noise', 'test_noise')
    @classmethod
    def check_noise(cls, value: Tuple[float, ...]) -> Tuple[float, ...]:
        if any(not std >= 0.0 for std in value):
            raise ValueError("noise standard deviations must be non-negative")

        return value

    @property
    def requires_data(self) -> bool:
        return isinstance(self.source, CsvSeriesSource)

    def test_levels(self, train_std: float) -> Tuple[float, ...]:
        return (train_std,) if self.matched_test_noise else self.test_noise

    def repetitions_for(self, train_std: float) -> int:
        # noise-free cells are deterministic
        if train_std == 0.0 and all(std == 0.0 for std in self.test_levels(train_std)):
            return 1

        return self.repetitions


class Registry(pd_.BaseModel):
    model_config = pd_.ConfigDict(frozen=True, extra='forbid')

    version: int
    experiments: List[ExperimentSpec]

    @pd_.model_validator(mode='after')
    def check_names(self) -> 'Registry':
        names = [experiment.name for experiment in self.experiments]
        if len(set(names)) != len(names):
            raise ValueError("experiment names are not unique")

        return self

    @property
    def names(self) -> List[str]:
        return [experiment.name for experiment in self.experiments]

    def get(self, name: str) -> ExperimentSpec:
        for experiment in self.experiments:
            if experiment.name == name:
                return experiment

        raise errors.ConfigurationError(f"unknown experiment {name!r} (known: {', '.join(self.names)})")


class RepetitionResult(pd_.BaseModel):
    """
    Outcome of one (train noise, test noise, repetition) evaluation.
    """

    model_config = pd_.ConfigDict(ser_json_inf_nan='constants')

    train_noise: float
    test_noise: float
    repetition: int
    noise_seed: Optional[int]
    test_noise_seed: Optional[int]
    init_rmse: float = math.nan
    train_rmse: float = math.nan
    test_rmse: float = math.nan
    fou_width: float = math.nan
    iterations: int = 0
    error: Optional[str] = None
    clean_train_fingerprint: str = ''
    train_fingerprint: str = ''
    clean_test_fingerprint: str = ''
    test_fingerprint: str = ''
    model_path: Optional[str] = None
    history_path: Optional[str] = None

    @property
    def failed(self) -> bool:
        return self.error is not None


class CellReport(pd_.BaseModel):
    """
    Aggregated grid cell. ``mean_over_test`` rows average the cell means of one training noise level
    over its test noise levels.
    """

    kind: Literal['cell', 'mean_over_test'] = 'cell'
    train_noise: float
    test_noise: Optional[float]
    rules: int
    param_count: int
    trainable_count: int
    repetitions: int
    failed: int = 0
    test_rmse_mean: float = math.nan
    test_rmse_min: float = math.nan
    test_rmse_max: float = math.nan
    train_rmse_mean: float = math.nan
    init_rmse_mean: float = math.nan
    fou_width_mean: float = math.nan
    reference_rmse: Optional[float] = None
    baseline_rmse: Optional[float] = None

    @property
    def label(self) -> str:
        test = 'mean' if self.test_noise is None else noise_label(self.test_noise)
        return f"{noise_label(self.train_noise)}/{test}"


class RunReport(pd_.BaseModel):
    experiment: str
    cells: List[CellReport]
    results: List[RepetitionResult]
    wall_time: float = 0.0

    COLUMNS: ClassVar[Tuple[str, ...]] = (
        'experiment', 'kind', 'train_noise', 'test_noise', 'rules', 'param_count', 'trainable_count',
        'repetitions', 'failed', 'test_rmse_mean', 'test_rmse_min', 'test_rmse_max', 'train_rmse_mean',
        'init_rmse_mean', 'fou_width_mean', 'reference_rmse', 'baseline_rmse',
    )

    def cell(self, label: str) -> CellReport:
        for cell in self.cells:
            if cell.label == label:
                return cell

        raise KeyError(label)

    def to_frame(self) -> pd.DataFrame:
        """
        Returns one row per cell. Timing is left out so that identical runs give identical tables.
        """

        rows = []
        for cell in self.cells:
            row = cell.model_dump()
            row['experiment'] = self.experiment
            row['train_noise'] = noise_label(cell.train_noise)
            row['test_noise'] = 'mean' if cell.test_noise is None else noise_label(cell.test_noise)
            rows.append(row)

        return pd.DataFrame(rows, columns=list(self.COLUMNS))

    def save_csv(self, path: Union[str, Path]) -> None:
        self.to_frame().to_csv(path, index=False, float_format='%.17g')

    def format_table(self) -> str:
        frame = self.to_frame().drop(columns=['experiment', 'param_count', 'trainable_count'])
        return frame.to_string(index=False, float_format=lambda value: f"{value:.4g}", na_rep='-')


class RunManifest(pd_.BaseModel):
    """
    Everything needed to reproduce a report.
    """

    model_config = pd_.ConfigDict(ser_json_inf_nan='constants')

    registry_version: int = REGISTRY_VERSION
    experiment: ExperimentSpec
    data_path: Optional[str] = None
    jobs: int = 1
    wall_time: float = 0.0
    results: List[RepetitionResult]

    def check_labels(self) -> None:
        """
        Verifies that clean cells used clean data and noisy cells used perturbed data.
        """

        for result in self.results:
            if result.failed:
                continue

            checks = (
                ('training', result.train_noise, result.train_fingerprint, result.clean_train_fingerprint),
                ('test', result.test_noise, result.test_fingerprint, result.clean_test_fingerprint),
            )
            for part, std, actual, clean in checks:
                if (std == 0.0) != (actual == clean):
                    raise errors.ContractError(
                        f"{part} data of cell {noise_label(result.train_noise)}/{noise_label(result.test_noise)} "
                        f"repetition {result.repetition} does not match its noise label",
                    )


@dc.dataclass(frozen=True)
class Protocol:
    """
    Prepared experiment data.

    :param spec: experiment protocol
    :param series: clean (scaled) series for series experiments
    :param clean: clean dataset with all rows
    :param train_rows: training row indices
    :param test_rows: test row indices
    :param normalization: scaling metadata attached to every dataset
    """

    spec: ExperimentSpec
    series: Optional[FloatArray]
    clean: Dataset
    train_rows: IntArray
    test_rows: IntArray
    normalization: Optional[Normalization]

    def perturbed(self, std: float, seed: Optional[int]) -> Dataset:
        if std == 0.0:
            return self.clean

        if self.series is None:
            return add_gaussian_noise(self.clean, std, seed, self.spec.noise_scope)

        assert isinstance(self.spec.source, (MackeyGlassSource, CsvSeriesSource))
        noisy = lag_embed(add_gaussian_noise(self.series, std, seed), self.spec.source.series)
        return Dataset(noisy.inputs, noisy.targets, self.normalization)


def noise_label(std: float) -> str:
    return 'clean' if std == 0.0 else f"{std:g}"


def rmse(predictions: ArrayLike, targets: ArrayLike) -> float:
    """
    Root mean squared error.

    :param predictions: predicted values
    :param targets: desired values
    :return: ``sqrt(mean((predictions - targets)^2))``
    """

    predictions = as_vector(predictions, name='predictions')
    targets = as_vector(targets, size=predictions.shape[0], name='targets')
    if predictions.shape[0] == 0:
        raise errors.ContractError("cannot compute RMSE of empty vectors")

    difference = predictions - targets
    return float(np.sqrt(np.mean(difference * difference)))


def load_registry(path: Optional[Union[str, Path]] = None) -> Registry:
    """
    Loads an experiment registry.

    :param path: registry file, defaults to ``IT2CFNN_REGISTRY`` or the packaged registry
    :return: registry
    """

    path = Path(path or config.REGISTRY_PATH or DEFAULT_REGISTRY)
    try:
        registry = Registry.model_validate_json(path.read_bytes())
    except OSError as exc:
        raise errors.ConfigurationError(f"{path}: cannot read registry: {exc.strerror}") from exc
    except pd_.ValidationError as exc:
        raise errors.ConfigurationError(f"{path}: malformed registry: {exc}") from exc

    if registry.version != REGISTRY_VERSION:
        raise errors.ConfigurationError(
            f"{path}: unsupported registry version {registry.version} (expected {REGISTRY_VERSION})",
        )

    return registry


def _series_rows(spec: SeriesSpec, total: int) -> Tuple[IntArray, IntArray]:
    if spec.train_size is None:
        rows = np.arange(total)
        return rows, rows

    stop = total if spec.test_size is None else spec.train_size + spec.test_size
    if spec.train_size >= total or stop > total:
        raise errors.ConfigurationError(
            f"{total} rows are not enough for {spec.train_size} training and {stop - spec.train_size} test rows",
        )

    return np.arange(spec.train_size), np.arange(spec.train_size, stop)


def _scale_series(values: FloatArray, spec: SeriesSpec, mode: NormalizationMode) -> Tuple[FloatArray, Normalization]:
    matrix = values if values.ndim == 2 else values[:, None]
    fitted = Normalization.fit(matrix, matrix[:, spec.target_series], mode)
    normalization = Normalization(
        mode=fitted.mode,
        input_offset=tuple(fitted.input_offset[term.series] for term in spec.lags),
        input_scale=tuple(fitted.input_scale[term.series] for term in spec.lags),
        target_offset=fitted.target_offset,
        target_scale=fitted.target_scale,
    )
    scaled = (matrix - np.asarray(fitted.input_offset)) / np.asarray(fitted.input_scale)

    return (scaled if values.ndim == 2 else scaled[:, 0]), normalization


def prepare(spec: ExperimentSpec, data_path: Optional[Union[str, Path]] = None) -> Protocol:
    """
    Builds the clean data of an experiment.

    :param spec: experiment protocol
    :param data_path: series file of csv-backed experiments
    :return: prepared protocol
    """

    source = spec.source
    if isinstance(source, TwoHumpSource):
        if spec.normalization is not NormalizationMode.NONE:
            raise errors.ConfigurationError("two-hump data does not support normalization")
        clean = synthetic_two_hump(source.n_samples, source.seed, source.grid)
        if not 1 <= source.train_size < len(clean):
            raise errors.ConfigurationError(f"train size {source.train_size} out of range [1, {len(clean) - 1}]")
        order = rng(source.seed).permutation(len(clean))
        return Protocol(spec, None, clean, order[:source.train_size], order[source.train_size:], None)

    if isinstance(source, MackeyGlassSource):
        series = mackey_glass(source.x0, source.tau, 0, source.t_end, source.dt, source.interpolation)
    else:
        if data_path is None:
            raise errors.ConfigurationError(f"experiment {spec.name!r} needs a data file")
        series = load_series(data_path, source.columns, source.header)

    normalization = None
    if spec.normalization is not NormalizationMode.NONE:
        series, normalization = _scale_series(series, source.series, spec.normalization)

    embedded = lag_embed(series, source.series)
    train_rows, test_rows = _series_rows(source.series, len(embedded))

    return Protocol(
        spec,
        series,
        Dataset(embedded.inputs, embedded.targets, normalization),
        train_rows,
        test_rows,
        normalization,
    )


def _fingerprint(dataset: Dataset) -> str:
    digest = hashlib.sha256()
    digest.update(np.ascontiguousarray(dataset.inputs).tobytes())
    digest.update(np.ascontiguousarray(dataset.targets).tobytes())
    return digest.hexdigest()


def _original_rmse(net: Network, dataset: Dataset) -> float:
    predictions = predict(net, dataset.inputs)
    if dataset.normalization is not None:
        predictions = dataset.normalization.invert_targets(predictions)

    return rmse(predictions, dataset.original_targets())


def _run_training(
        protocol: Protocol,
        train_std: float,
        repetition: int,
        output_dir: Optional[Path],
) -> List[RepetitionResult]:
    spec = protocol.spec
    noise_seed = spec.seed + repetition if train_std > 0.0 else None
    test_levels = spec.test_levels(train_std)
    prefix = f"train-{noise_label(train_std)}_rep-{repetition}"

    def test_seed(std: float) -> Optional[int]:
        return spec.seed + TEST_SEED_OFFSET + repetition if std > 0.0 else None

    def failure(message: str) -> List[RepetitionResult]:
        logger.warning("%s %s failed: %s", spec.name, prefix, message)
        return [
            RepetitionResult(
                train_noise=train_std,
                test_noise=std,
                repetition=repetition,
                noise_seed=noise_seed,
                test_noise_seed=test_seed(std),
                error=message,
            )
            for std in test_levels
        ]

    try:
        clean_train = protocol.clean.subset(protocol.train_rows)
        train = protocol.perturbed(train_std, noise_seed).subset(protocol.train_rows)
        initial = initialize(train, spec.rules, spec.epsilon_delta)
        net, history = fit(initial, train, spec.train)

        model_path: Optional[str] = None
        history_path: Optional[str] = None
        if output_dir is not None:
            model_path = str(output_dir / 'models' / f"{prefix}.json")
            history_path = str(output_dir / 'histories' / f"{prefix}.csv")
            save_model(net, model_path)
            history.save_csv(history_path)

        train_rmse = _original_rmse(net, train)
        width = fou_width(net)
        clean_test = protocol.clean.subset(protocol.test_rows)

        results: List[RepetitionResult] = []
        for std in test_levels:
            test = protocol.perturbed(std, test_seed(std)).subset(protocol.test_rows)
            results.append(
                RepetitionResult(
                    train_noise=train_std,
                    test_noise=std,
                    repetition=repetition,
                    noise_seed=noise_seed,
                    test_noise_seed=test_seed(std),
                    init_rmse=_original_rmse(initial, test),
                    train_rmse=train_rmse,
                    test_rmse=_original_rmse(net, test),
                    fou_width=width,
                    iterations=len(history.accepted),
                    clean_train_fingerprint=_fingerprint(clean_train),
                    train_fingerprint=_fingerprint(train),
                    clean_test_fingerprint=_fingerprint(clean_test),
                    test_fingerprint=_fingerprint(test),
                    model_path=model_path,
                    history_path=history_path,
                ),
            )
    except (errors.BaseError, OSError) as exc:
        return failure(str(exc))

    for result in results:
        logger.info(
            "%s %s/%s repetition %d: test RMSE %.6g",
            spec.name, noise_label(train_std), noise_label(result.test_noise), repetition, result.test_rmse,
        )

    return results


def _nan_mean(values: Sequence[float]) -> float:
    return float(np.mean(values)) if values else math.nan


def _aggregate(spec: ExperimentSpec, n: int, results: Sequence[RepetitionResult]) -> List[CellReport]:
    common: Dict[str, Any] = dict(
        rules=spec.rules,
        param_count=param_count(spec.rules, n),
        trainable_count=trainable_count(spec.rules, n),
    )

    cells = []
    for train_std in spec.train_noise:
        row_cells = []
        for test_std in spec.test_levels(train_std):
            group = [r for r in results if r.train_noise == train_std and r.test_noise == test_std]
            ok = [r for r in group if not r.failed]
            test_rmse = [r.test_rmse for r in ok]
            cell = CellReport(
                train_noise=train_std,
                test_noise=test_std,
                repetitions=len(ok),
                failed=len(group) - len(ok),
                test_rmse_mean=_nan_mean(test_rmse),
                test_rmse_min=min(test_rmse, default=math.nan),
                test_rmse_max=max(test_rmse, default=math.nan),
                train_rmse_mean=_nan_mean([r.train_rmse for r in ok]),
                init_rmse_mean=_nan_mean([r.init_rmse for r in ok]),
                fou_width_mean=_nan_mean([r.fou_width for r in ok]),
                **common,
            )
            row_cells.append(cell.model_copy(update=dict(
                reference_rmse=spec.reference_rmse.get(cell.label),
                baseline_rmse=spec.baseline_rmse.get(cell.label),
            )))
        cells.extend(row_cells)

        if len(row_cells) > 1:
            means = [cell.test_rmse_mean for cell in row_cells]
            summary = CellReport(
                kind='mean_over_test',
                train_noise=train_std,
                test_noise=None,
                repetitions=min(cell.repetitions for cell in row_cells),
                failed=sum(cell.failed for cell in row_cells),
                test_rmse_mean=_nan_mean(means),
                test_rmse_min=min(means),
                test_rmse_max=max(means),
                train_rmse_mean=row_cells[0].train_rmse_mean,
                init_rmse_mean=_nan_mean([cell.init_rmse_mean for cell in row_cells]),
                fou_width_mean=row_cells[0].fou_width_mean,
                **common,
            )
            cells.append(summary.model_copy(update=dict(
                reference_rmse=spec.reference_rmse.get(summary.label),
                baseline_rmse=spec.baseline_rmse.get(summary.label),
            )))

    return cells


def run_experiment(
        spec: ExperimentSpec,
        data_path: Optional[Union[str, Path]] = None,
        output_dir: Optional[Union[str, Path]] = None,
        jobs: int = 1,
) -> RunReport:
    """
    Runs an experiment protocol.

    :param spec: experiment protocol
    :param data_path: series file of csv-backed experiments
    :param output_dir: directory receiving models, histories, the report and the manifest
    :param jobs: number of parallel worker processes
    :return: run report
    """

    started = time.perf_counter()
    protocol = prepare(spec, data_path)

    directory = Path(output_dir) if output_dir is not None else None
    if directory is not None:
        (directory / 'models').mkdir(parents=True, exist_ok=True)
        (directory / 'histories').mkdir(parents=True, exist_ok=True)

    tasks = [
        (train_std, repetition)
        for train_std in spec.train_noise
        for repetition in range(spec.repetitions_for(train_std))
    ]
    logger.info("running %s: %d training runs with %d job(s)", spec.name, len(tasks), jobs)

    if jobs > 1:
        batches = Parallel(n_jobs=jobs)(
            delayed(_run_training)(protocol, train_std, repetition, directory) for train_std, repetition in tasks
        )
    else:
        batches = [_run_training(protocol, train_std, repetition, directory) for train_std, repetition in tasks]
    results = [result for batch in batches for result in batch]

    report = RunReport(
        experiment=spec.name,
        cells=_aggregate(spec, protocol.clean.n_inputs, results),
        results=results,
        wall_time=time.perf_counter() - started,
    )
    manifest = RunManifest(
        experiment=spec,
        data_path=str(data_path) if data_path is not None else None,
        jobs=jobs,
        wall_time=report.wall_time,
        results=results,
    )
    manifest.check_labels()

    if directory is not None:
        report.save_csv(directory / 'report.csv')
        (directory / 'manifest.json').write_text(manifest.model_dump_json(indent=2), encoding='utf-8')
        logger.info("report and manifest written to %s", directory)

    return report


def manifest_of(path: Union[str, Path]) -> RunManifest:
    """
    Loads a run manifest.
    """

    try:
        return RunManifest.model_validate_json(Path(path).read_bytes())
    except OSError as exc:
        raise errors.DataError(str(path), None, None, f"cannot read manifest: {exc.strerror}") from exc
    except pd_.ValidationError as exc:
        raise errors.DataError(str(path), None, None, f"malformed manifest: {exc}") from exc
