"""
Hierarchical Levenberg-Marquardt training.

Parameters are split into six groups (feature extraction matrices, centers, consequents,
shape regulators, shape uncertainty regulators and type reduction weights). An outer loop
cycles through the groups; an inner loop runs damped Gauss-Newton steps on one group at
a time with its own trust-region scalar. Both loops stop when the validation error has
not improved for a configured number of iterations, and the parameters with the best
validation error are returned.
"""

import dataclasses as dc
import logging
import math
import typing
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
import pydantic as pd_
from scipy import linalg

from . import errors
from .data import Dataset
from .network import BatchTrace, Network, Parameters, evaluate
from .typedefs import FloatArray, ParamGroup, ValidationSplit
from .utils import rng

__all__ = (
    'TrainConfig',
    'LmState',
    'HistoryRecord',
    'History',
    'FINAL_GROUP',
    'GroupCheck',
    'GradientReport',
    'group_size',
    'pack',
    'unpack',
    'error_vector',
    'jacobian',
    'fd_jacobian',
    'solve_damped',
    'lm_step',
    'update_lambda',
    'split_validation',
    'fit',
    'check_gradients',
)

logger = logging.getLogger(__name__)

ParamsLike = Union[Network, Parameters]

# z magnitudes below this are treated as zero in the feature derivative
FEATURE_EPSILON = 1e-12
JITTER = 1e-12
# group column of the summary record closing a history
FINAL_GROUP = 'final'

_FIELDS: Dict[ParamGroup, str] = {
    ParamGroup.GAMMA: 'transforms',
    ParamGroup.CENTER: 'centers',
    ParamGroup.CONSEQUENT: 'consequents',
    ParamGroup.BETA: 'beta',
    ParamGroup.DELTA: 'delta',
    ParamGroup.TYPERED: 'weights',
}


class TrainConfig(pd_.BaseModel):
    """
    Training configuration.

    :param lambda0: initial trust-region scalar of every group
    :param eta: trust-region multiplier
    :param validation_fraction: share of the training data held out for early stopping
    :param validation_split: held-out samples selection
    :param max_epochs: outer loop iteration cap
    :param max_inner: inner loop iteration cap per group
    :param patience: iterations without validation improvement before a loop stops
    :param max_retries: rejected steps retried with a larger trust-region scalar
    :param group_order: parameter groups in outer loop order
    :param seed: random validation split seed
    :param tolerance: training sum of squared errors considered a perfect fit
    :param divergence_factor: validation error growth over its initial value that aborts training
    """

    model_config = pd_.ConfigDict(frozen=True, extra='forbid')

    lambda0: float = pd_.Field(default=1.0, gt=0.0)
    eta: float = pd_.Field(default=1.001, gt=1.0)
    validation_fraction: float = pd_.Field(default=0.2, ge=0.0, lt=1.0)
    validation_split: ValidationSplit = ValidationSplit.TAIL
    max_epochs: int = pd_.Field(default=100, ge=1)
    max_inner: int = pd_.Field(default=50, ge=1)
    patience: int = pd_.Field(default=5, ge=1)
    max_retries: int = pd_.Field(default=10, ge=0)
    group_order: Tuple[ParamGroup, ...] = pd_.Field(default=tuple(ParamGroup), min_length=1)
    seed: Optional[int] = 0
    tolerance: float = pd_.Field(default=0.0, ge=0.0)
    divergence_factor: float = pd_.Field(default=1e6, gt=1.0)

    @pd_.field_validator('group_order', mode='before')
    @classmethod
    def parse_group_names(cls, value: Any) -> Any:
        if not isinstance(value, (list, tuple)):
            return value

        groups = []
        for item in value:
            if isinstance(item, str):
                if item.upper() not in ParamGroup.__members__:
                    raise ValueError(f"unknown parameter group: {item}")
                item = ParamGroup[item.upper()]
            groups.append(item)

        return tuple(groups)


@dc.dataclass(frozen=True)
class LmState:
    """
    Trust-region state of a training run.

    :param lambdas: per-group trust-region scalars
    :param eta: trust-region multiplier
    :param epoch: completed outer iterations
    :param iteration: completed inner iterations over all groups
    :param best_val_rmse: best validation error seen
    :param best: parameters with the best validation error
    """

    lambdas: Dict[ParamGroup, float]
    eta: float
    epoch: int = 0
    iteration: int = 0
    best_val_rmse: float = math.inf
    best: Optional[Parameters] = None

    def __post_init__(self) -> None:
        if not self.eta > 1.0:
            raise errors.ConfigurationError(f"eta must exceed 1 (got {self.eta})")
        for group, value in self.lambdas.items():
            if not (value > 0.0 and math.isfinite(value)):
                raise errors.NumericError(f"{group.name} trust-region scalar left (0, inf): {value}")

    @classmethod
    def initial(cls, config: TrainConfig) -> 'LmState':
        return cls(lambdas={group: config.lambda0 for group in ParamGroup}, eta=config.eta)

    def replace(self, **changes: Any) -> 'LmState':
        return dc.replace(self, **changes)


class HistoryRecord(typing.NamedTuple):
    outer_epoch: int
    group: str
    inner_iter: int
    lambda_: float
    train_rmse: float
    val_rmse: float
    accepted: bool


class History:
    """
    Training history: one record per trust-region update.
    """

    COLUMNS = ('outer_epoch', 'group', 'inner_iter', 'lambda', 'train_rmse', 'val_rmse', 'accepted')

    def __init__(self, records: Iterable[HistoryRecord] = ()):
        self.records: List[HistoryRecord] = list(records)

    def __len__(self) -> int:
        return len(self.records)

    def __iter__(self) -> typing.Iterator[HistoryRecord]:
        return iter(self.records)

    def append(self, record: HistoryRecord) -> None:
        self.records.append(record)

    def append_final(self, train_rmse: float, val_rmse: float) -> None:
        """
        Appends the summary record of the returned network.

        :param train_rmse: error on the complete training data
        :param val_rmse: error on the validation part, equal to ``train_rmse`` without validation
        """

        epoch = self.records[-1].outer_epoch if self.records else 0
        self.records.append(HistoryRecord(epoch, FINAL_GROUP, 0, math.nan, train_rmse, val_rmse, True))

    @property
    def final(self) -> Optional[HistoryRecord]:
        last = self.records[-1] if self.records else None
        return last if last is not None and last.group == FINAL_GROUP else None

    @property
    def accepted(self) -> List[HistoryRecord]:
        return [record for record in self.records if record.accepted and record.group != FINAL_GROUP]

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame([tuple(record) for record in self.records], columns=list(self.COLUMNS))

    def save_csv(self, path: Union[str, Path]) -> None:
        self.to_frame().to_csv(path, index=False, float_format='%.17g')


class GroupCheck(pd_.BaseModel):
    group: ParamGroup
    max_deviation: float
    compared: int


class GradientReport(pd_.BaseModel):
    """
    Analytic against finite-difference Jacobian comparison.
    """

    checks: List[GroupCheck]
    excluded_samples: int
    tolerance: float

    @property
    def max_deviation(self) -> float:
        return max((check.max_deviation for check in self.checks), default=0.0)

    @property
    def passed(self) -> bool:
        return self.max_deviation < self.tolerance


def _as_parameters(net: ParamsLike) -> Parameters:
    return net.to_parameters() if isinstance(net, Network) else net


def group_size(group: ParamGroup, R: int, n: int) -> int:
    """
    Number of parameters in a group.
    """

    return {
        ParamGroup.GAMMA: R * n * n,
        ParamGroup.CENTER: R * n,
        ParamGroup.CONSEQUENT: R,
        ParamGroup.BETA: R * n,
        ParamGroup.DELTA: R * n,
        ParamGroup.TYPERED: 2 * R,
    }[ParamGroup(group)]


def pack(params: Parameters, group: ParamGroup) -> FloatArray:
    """
    Returns a copy of a parameter group as a flat vector (rule-major order).
    """

    return np.array(getattr(params, _FIELDS[ParamGroup(group)]), dtype=np.float64).reshape(-1)


def unpack(params: Parameters, group: ParamGroup, vector: FloatArray) -> Parameters:
    """
    Returns parameters with a group replaced by a flat vector.
    """

    field = _FIELDS[ParamGroup(group)]
    shape = getattr(params, field).shape
    vector = np.asarray(vector, dtype=np.float64)
    if vector.size != int(np.prod(shape)):
        raise errors.ContractError(f"{group.name} vector length mismatch (actual: {vector.size}, expected: {shape})")

    return params.replace(**{field: vector.reshape(shape).copy()})


def error_vector(net: ParamsLike, dataset: Dataset) -> FloatArray:
    """
    Output errors ``e = y_hat - y``.
    """

    return evaluate(_as_parameters(net), dataset.inputs).output - dataset.targets


def _sse(params: Parameters, dataset: Dataset) -> float:
    residual = error_vector(params, dataset)
    return float(residual @ residual)


def _rmse(params: Parameters, dataset: Dataset) -> float:
    return math.sqrt(_sse(params, dataset) / len(dataset))


def _safe_log(squared: FloatArray) -> FloatArray:
    return np.log(np.where(squared > 0.0, squared, 1.0))


def _feature_derivative(trace: BatchTrace, exponent: FloatArray, power: FloatArray) -> FloatArray:
    # d ln(mu) / dz = -exponent * (z^2)^exponent / z, zero at z = 0
    z = trace.features
    nonzero = np.abs(z) > FEATURE_EPSILON
    return np.where(nonzero, -exponent * power / np.where(nonzero, z, 1.0), 0.0)


def jacobian(
        net: ParamsLike,
        dataset: Dataset,
        group: ParamGroup,
        trace: Optional[BatchTrace] = None,
) -> FloatArray:
    """
    Analytic Jacobian of the network outputs with respect to a parameter group.

    :param net: network or its parameters
    :param dataset: samples
    :param group: parameter group
    :param trace: batch trace of ``net`` over ``dataset`` inputs, computed if not provided
    :return: ``N x p`` matrix, columns in :py:func:`pack` order
    """

    params = _as_parameters(net)
    if trace is None:
        trace = evaluate(params, dataset.inputs)
    group = ParamGroup(group)
    n_samples = trace.output.shape[0]

    if params.normalized_output:
        gain = (params.consequents[None, :] - trace.output[:, None]) / trace.total[:, None]
    else:
        gain = np.broadcast_to(params.consequents[None, :], trace.strength.shape)

    if group is ParamGroup.CONSEQUENT:
        return trace.strength / trace.total[:, None]

    if group is ParamGroup.TYPERED:
        v1, v2 = params.weights[:, 0], params.weights[:, 1]
        total = v1 * v1 + v2 * v2
        spread = trace.lower - trace.upper
        d_v1 = 2.0 * v1 * v2 * v2 / (total * total) * spread
        d_v2 = -2.0 * v2 * v1 * v1 / (total * total) * spread
        return np.stack([gain * d_v1, gain * d_v2], axis=2).reshape(n_samples, -1)

    terms = trace.terms
    lower = (trace.lower_weight * trace.lower)[:, :, None]
    upper = (trace.upper_weight * trace.upper)[:, :, None]

    if group in (ParamGroup.BETA, ParamGroup.DELTA):
        log_squared = _safe_log(terms.squared)
        lower_slope = terms.lower_power * log_squared
        upper_slope = terms.upper_power * log_squared
        if group is ParamGroup.BETA:
            beta = params.beta[None, :, :]
            d_strength = -beta * (lower * lower_slope + upper * upper_slope)
        else:
            # exponent is beta^2 + delta^2 for the upper set inside |z| <= 1 and for the lower set outside
            delta = params.delta[None, :, :]
            lower_sign = np.where(terms.inner, 1.0, -1.0)
            d_strength = delta * lower_sign * (lower * lower_slope - upper * upper_slope)
        return (gain[:, :, None] * d_strength).reshape(n_samples, -1)

    d_features = (
        lower * _feature_derivative(trace, terms.lower_exponent, terms.lower_power) +
        upper * _feature_derivative(trace, terms.upper_exponent, terms.upper_power)
    )
    weighted = gain[:, :, None] * d_features

    if group is ParamGroup.GAMMA:
        return np.einsum('krj,krl->krjl', weighted, trace.deviations).reshape(n_samples, -1)

    return -np.einsum('krj,rjl->krl', weighted, params.transforms).reshape(n_samples, -1)


def fd_jacobian(net: ParamsLike, dataset: Dataset, group: ParamGroup, h: float = 1e-6) -> FloatArray:
    """
    Central finite-difference Jacobian of the network outputs with respect to a parameter group.
    Each parameter ``theta`` is perturbed by ``h max(1, |theta|)``.

    :param net: network or its parameters
    :param dataset: samples
    :param group: parameter group
    :param h: relative step
    :return: ``N x p`` matrix, columns in :py:func:`pack` order
    """

    if not h > 0.0:
        raise errors.ConfigurationError(f"finite-difference step must be positive (got {h})")

    params = _as_parameters(net)
    group = ParamGroup(group)
    vector = pack(params, group)
    result = np.empty((len(dataset), vector.size))
    for column, value in enumerate(vector):
        step = h * max(1.0, abs(value))
        forward, backward = vector.copy(), vector.copy()
        forward[column] = value + step
        backward[column] = value - step
        upper = evaluate(unpack(params, group, forward), dataset.inputs).output
        lower = evaluate(unpack(params, group, backward), dataset.inputs).output
        result[:, column] = (upper - lower) / (2.0 * step)

    return result


def solve_damped(jac: FloatArray, residual: FloatArray, lambda_: float) -> FloatArray:
    """
    Solves the damped normal equations ``(J^T J + lambda I) step = -J^T e``.

    :param jac: ``N x p`` Jacobian
    :param residual: ``N`` error vector
    :param lambda_: trust-region scalar
    :return: parameter step
    """

    if not (np.all(np.isfinite(jac)) and np.all(np.isfinite(residual))):
        raise errors.NumericError("non-finite Jacobian or error vector")

    size = jac.shape[1]
    system = jac.T @ jac
    system[np.diag_indices(size)] += lambda_
    rhs = -(jac.T @ residual)

    try:
        return linalg.cho_solve(linalg.cho_factor(system), rhs)
    except linalg.LinAlgError:
        jitter = JITTER * max(float(np.trace(system)) / size, 1.0)
        logger.debug("normal equations are not positive definite, adding jitter %g", jitter)
        system[np.diag_indices(size)] += jitter

    try:
        return linalg.cho_solve(linalg.cho_factor(system), rhs)
    except linalg.LinAlgError:
        pass

    try:
        return linalg.solve(system, rhs, assume_a='sym')
    except (linalg.LinAlgError, ValueError) as exc:
        raise errors.NumericError(f"damped normal equations cannot be solved: {exc}") from exc


def lm_step(
        net: ParamsLike,
        dataset: Dataset,
        group: ParamGroup,
        state: LmState,
        trace: Optional[BatchTrace] = None,
) -> Parameters:
    """
    Performs one damped Gauss-Newton step on a parameter group. The result is projected
    back onto the admissible parameter set.

    :param net: network or its parameters
    :param dataset: training samples
    :param group: parameter group
    :param state: trust-region state
    :param trace: batch trace of ``net`` over ``dataset`` inputs, computed if not provided
    :return: updated parameters
    """

    params = _as_parameters(net)
    group = ParamGroup(group)
    if trace is None:
        trace = evaluate(params, dataset.inputs)

    residual = trace.output - dataset.targets
    step = solve_damped(jacobian(params, dataset, group, trace), residual, state.lambdas[group])
    if not np.all(np.isfinite(step)):
        raise errors.NumericError(f"non-finite {group.name} step")

    return unpack(params, group, pack(params, group) + step).projected()


def update_lambda(state: LmState, prev_error: float, new_error: float, group: ParamGroup) -> LmState:
    """
    Updates a group trust-region scalar: divided by ``eta`` when the error decreased,
    multiplied by ``eta`` when it increased and kept on a tie.

    :param state: trust-region state
    :param prev_error: sum of squared errors before the step
    :param new_error: sum of squared errors after the step
    :param group: parameter group
    :return: updated state
    """

    if not (math.isfinite(prev_error) and math.isfinite(new_error)):
        raise errors.NumericError(f"non-finite errors (previous: {prev_error}, new: {new_error})")

    lambda_ = state.lambdas[group]
    if new_error < prev_error:
        lambda_ = lambda_ / state.eta
    elif new_error > prev_error:
        lambda_ = lambda_ * state.eta

    return state.replace(lambdas={**state.lambdas, group: lambda_})


def split_validation(dataset: Dataset, config: TrainConfig) -> Tuple[Dataset, Optional[Dataset]]:
    """
    Splits training data into fitting and validation parts.

    :param dataset: training data
    :param config: training configuration
    :return: ``(train, validation)``, validation is ``None`` when the validation fraction is zero
    """

    total = len(dataset)
    held_out = int(math.floor(total * config.validation_fraction))
    if config.validation_fraction > 0.0:
        held_out = max(held_out, 1)
    if total - held_out < 2:
        raise errors.ConfigurationError(f"{total} samples leave fewer than 2 for training")
    if held_out == 0:
        return dataset, None

    if config.validation_split is ValidationSplit.RANDOM:
        order = rng(config.seed).permutation(total)
    else:
        order = np.arange(total)

    return dataset.subset(np.sort(order[:total - held_out])), dataset.subset(np.sort(order[total - held_out:]))


class _Run:
    """
    Mutable bookkeeping of a training run.
    """

    def __init__(self, params: Parameters, train: Dataset, validation: Optional[Dataset], config: TrainConfig):
        self.params = params
        self.train = train
        self.validation = validation
        self.config = config
        self.state = LmState.initial(config)
        self.history = History()
        self.train_sse = _sse(params, train)
        self.val_rmse = self.evaluate_validation(params)
        self.initial_val_rmse = self.val_rmse
        self.state = self.state.replace(best_val_rmse=self.val_rmse, best=params)

    @property
    def train_rmse(self) -> float:
        return math.sqrt(self.train_sse / len(self.train))

    @property
    def converged(self) -> bool:
        return self.train_sse <= self.config.tolerance

    def evaluate_validation(self, params: Parameters) -> float:
        if self.validation is None:
            return _rmse(params, self.train)

        return _rmse(params, self.validation)

    def record(self, group: ParamGroup, inner: int, train_rmse: float, val_rmse: float, accepted: bool) -> None:
        self.history.append(
            HistoryRecord(
                outer_epoch=self.state.epoch + 1,
                group=group.name,
                inner_iter=inner,
                lambda_=self.state.lambdas[group],
                train_rmse=train_rmse,
                val_rmse=val_rmse,
                accepted=accepted,
            ),
        )

    def iterate(self, group: ParamGroup, inner: int) -> bool:
        """
        Runs one inner iteration: steps are retried with a growing trust-region scalar until one
        does not increase the training error. Returns ``False`` if every attempt was rejected.
        """

        trace = evaluate(self.params, self.train.inputs)
        for _ in range(self.config.max_retries + 1):
            try:
                candidate = lm_step(self.params, self.train, group, self.state, trace)
                candidate_sse = _sse(candidate, self.train)
            except (errors.NumericError, errors.DomainError) as exc:
                logger.debug("%s step failed: %s", group.name, exc)
                candidate_sse = math.inf

            if not math.isfinite(candidate_sse):
                lambdas = {**self.state.lambdas, group: self.state.lambdas[group] * self.state.eta}
                self.state = self.state.replace(lambdas=lambdas)
                self.record(group, inner, math.nan, math.nan, False)
                continue

            self.state = update_lambda(self.state, self.train_sse, candidate_sse, group)
            if candidate_sse <= self.train_sse:
                self.params = candidate
                self.train_sse = candidate_sse
                self.val_rmse = self.evaluate_validation(candidate)
                self.record(group, inner, self.train_rmse, self.val_rmse, True)
                return True

            candidate_rmse = math.sqrt(candidate_sse / len(self.train))
            self.record(group, inner, candidate_rmse, self.evaluate_validation(candidate), False)

        logger.debug("%s: all %d attempts rejected", group.name, self.config.max_retries + 1)
        return False

    def track_best(self) -> bool:
        if not self.val_rmse <= self.config.divergence_factor * max(self.initial_val_rmse, 1e-12):
            raise errors.DivergenceError(
                f"validation RMSE diverged (initial: {self.initial_val_rmse:.6g}, current: {self.val_rmse:.6g})",
            )

        if self.val_rmse < self.state.best_val_rmse:
            self.state = self.state.replace(best_val_rmse=self.val_rmse, best=self.params)
            return True

        return False

    def run_group(self, group: ParamGroup) -> None:
        stalled = 0
        for inner in range(1, self.config.max_inner + 1):
            accepted = self.iterate(group, inner)
            self.state = self.state.replace(iteration=self.state.iteration + 1)
            if not accepted:
                break

            stalled = 0 if self.track_best() else stalled + 1
            logger.debug(
                "epoch %d %s iteration %d: lambda=%.6g train_rmse=%.6g val_rmse=%.6g",
                self.state.epoch + 1, group.name, inner, self.state.lambdas[group], self.train_rmse, self.val_rmse,
            )
            if self.converged or stalled >= self.config.patience:
                break

    def run(self) -> None:
        if self.converged:
            logger.info("training error %.6g is within tolerance, nothing to do", self.train_sse)
            return

        stalled = 0
        for _ in range(self.config.max_epochs):
            best_before = self.state.best_val_rmse
            for group in self.config.group_order:
                self.run_group(group)
                if self.converged:
                    break

            self.state = self.state.replace(epoch=self.state.epoch + 1)
            logger.info(
                "epoch %d: train_rmse=%.6g val_rmse=%.6g best_val_rmse=%.6g",
                self.state.epoch, self.train_rmse, self.val_rmse, self.state.best_val_rmse,
            )
            if self.converged:
                break

            stalled = 0 if self.state.best_val_rmse < best_before else stalled + 1
            if stalled >= self.config.patience:
                break


def fit(net: Network, dataset: Dataset, config: Optional[TrainConfig] = None) -> Tuple[Network, History]:
    """
    Trains a network.

    :param net: initial network
    :param dataset: training data (the validation part is split off according to the configuration)
    :param config: training configuration
    :return: network with the best validation error and the training history
    """

    config = config or TrainConfig()
    train, validation = split_validation(dataset, config)
    run = _Run(net.to_parameters().projected(), train, validation, config)
    run.run()

    best = run.state.best if run.state.best is not None else run.params
    logger.info(
        "training finished after %d epochs and %d iterations, best validation RMSE %.6g",
        run.state.epoch, run.state.iteration, run.state.best_val_rmse,
    )

    return Network.from_parameters(best, normalization=net.normalization), run.history


def _excluded_samples(trace: BatchTrace, margin: float) -> np.ndarray:
    magnitude = np.abs(trace.features)
    near_kink = (np.abs(magnitude - 1.0) < margin) | (magnitude < margin)
    return near_kink.reshape(near_kink.shape[0], -1).any(axis=1)


def check_gradients(
        net: ParamsLike,
        dataset: Dataset,
        groups: Sequence[ParamGroup] = tuple(ParamGroup),
        h: float = 1e-6,
        tolerance: float = 1e-4,
        abs_floor: float = 1e-7,
        kink_margin: float = 1e-3,
) -> GradientReport:
    """
    Compares analytic Jacobians with central finite differences. Samples with a feature close
    to zero or to the ``|z| = 1`` branch boundary are excluded.

    :param net: network or its parameters
    :param dataset: samples
    :param groups: checked parameter groups
    :param h: relative finite-difference step
    :param tolerance: maximum accepted relative deviation
    :param abs_floor: absolute differences below this are not counted
    :param kink_margin: exclusion margin around ``z = 0`` and ``|z| = 1``
    :return: comparison report
    """

    params = _as_parameters(net)
    trace = evaluate(params, dataset.inputs)
    excluded = _excluded_samples(trace, kink_margin)
    kept = dataset.subset(np.flatnonzero(~excluded))

    checks = []
    for group in groups:
        group = ParamGroup(group)
        if len(kept) == 0:
            checks.append(GroupCheck(group=group, max_deviation=0.0, compared=0))
            continue

        analytic = jacobian(params, kept, group)
        numeric = fd_jacobian(params, kept, group, h)
        difference = np.abs(analytic - numeric)
        scale = np.maximum(np.abs(analytic), np.abs(numeric))
        deviation = np.where(difference <= abs_floor, 0.0, difference / np.where(scale > 0.0, scale, 1.0))
        checks.append(GroupCheck(group=group, max_deviation=float(deviation.max(initial=0.0)), compared=deviation.size))
        logger.debug("%s: max relative deviation %.3g over %d entries", group.name, checks[-1].max_deviation, deviation.size)

    return GradientReport(checks=checks, excluded_samples=int(excluded.sum()), tolerance=tolerance)
