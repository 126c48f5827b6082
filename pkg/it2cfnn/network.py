"""
Interval type-2 correlation-aware fuzzy neural network.

Each rule extracts features ``z = Gamma (x - M)`` from the inputs, fuzzifies every
feature with a unit uncertain-shape set, combines the memberships with the product
t-norm into a firing interval, reduces the interval to a crisp strength with learned
weights and contributes its scalar consequent to the output.

Two evaluation paths are provided: scalar per-sample operations built directly on the
:py:mod:`it2cfnn.fuzzy` membership functions, and the vectorized :py:func:`evaluate`
used for batch prediction and training.
"""

import dataclasses as dc
import logging
import math
import typing
from typing import Any, List, Literal, Optional, Sequence, Tuple

import numpy as np
import pydantic as pd

from . import config, errors, fuzzy
from .data import Normalization
from .fuzzy import IntervalTerms, ShapeParams
from .typedefs import FloatArray
from .utils import ArrayLike, as_matrix, as_vector, rng

__all__ = (
    'MODEL_VERSION',
    'Rule',
    'Network',
    'FiringInterval',
    'RuleTrace',
    'ForwardResult',
    'Parameters',
    'BatchTrace',
    'transform_features',
    'fuzzify',
    't_norm',
    'fire',
    'type_reduce',
    'forward',
    'evaluate',
    'predict',
    'param_count',
    'trainable_count',
    'fou_width',
    'collapse_fou',
    'random_network',
)

logger = logging.getLogger(__name__)

MODEL_VERSION = 'it2cfnn-v1'

# products over more features are accumulated in log-space
LOG_SPACE_THRESHOLD = 16
# normalized output denominator floor
TOTAL_FLOOR = 1e-12


class Rule(pd.BaseModel):
    """
    Fuzzy rule.

    :param center: rule center ``M`` (input units)
    :param transform: feature extraction matrix ``Gamma``, one row per extracted feature
    :param beta: shape regulators, one per feature
    :param delta: shape uncertainty regulators, one per feature
    :param v1: type reduction weight of the lower firing strength
    :param v2: type reduction weight of the upper firing strength
    :param consequent: rule output (output units)
    """

    model_config = pd.ConfigDict(frozen=True, extra='forbid', allow_inf_nan=False)

    center: Tuple[float, ...] = pd.Field(min_length=1)
    transform: Tuple[Tuple[float, ...], ...]
    beta: Tuple[float, ...]
    delta: Tuple[float, ...]
    v1: float = 0.5
    v2: float = 0.5
    consequent: float = 0.0

    @pd.model_validator(mode='after')
    def check_invariants(self) -> 'Rule':
        n = len(self.center)
        if len(self.transform) != n or any(len(row) != n for row in self.transform):
            raise ValueError(f"transform must be a {n}x{n} matrix")
        if len(self.beta) != n or len(self.delta) != n:
            raise ValueError(f"beta and delta must have {n} elements")
        for index, (beta, delta) in enumerate(zip(self.beta, self.delta)):
            if delta < 0.0 or not beta * beta - delta * delta > 0.0:
                raise ValueError(f"feature {index}: beta^2 - delta^2 must be positive and delta non-negative")
        if not self.v1 * self.v1 + self.v2 * self.v2 > 0.0:
            raise ValueError("type reduction weights must not both be zero")

        return self

    @property
    def n(self) -> int:
        return len(self.center)

    def shape(self, feature: int) -> ShapeParams:
        """
        Returns the unit fuzzy set of an extracted feature.
        """

        return ShapeParams(m=0.0, sigma=1.0, beta=self.beta[feature], delta=self.delta[feature])


class Network(pd.BaseModel):
    """
    Fuzzy neural network model. It is the persisted model document as well.

    :param version: model document version
    :param n: input dimensionality
    :param rules: fuzzy rules
    :param normalized_output: divide the output by the sum of rule strengths
    :param normalization: input/target scaling of the data the network was trained on
    """

    model_config = pd.ConfigDict(frozen=True, extra='forbid')

    version: Literal['it2cfnn-v1'] = MODEL_VERSION
    n: int = pd.Field(gt=0)
    rules: Tuple[Rule, ...] = pd.Field(min_length=1)
    normalized_output: bool = False
    normalization: Optional[Normalization] = None

    @pd.computed_field  # type: ignore[prop-decorator]
    @property
    def R(self) -> int:
        return len(self.rules)

    @pd.model_validator(mode='before')
    @classmethod
    def check_rule_count(cls, data: Any) -> Any:
        if isinstance(data, dict) and 'R' in data:
            data = dict(data)
            count = data.pop('R')
            rules = data.get('rules')
            if rules is not None and count != len(rules):
                raise ValueError(f"rule count mismatch (declared: {count}, actual: {len(rules)})")

        return data

    @pd.model_validator(mode='after')
    def check_dimensions(self) -> 'Network':
        for index, rule in enumerate(self.rules):
            if rule.n != self.n:
                raise ValueError(f"rule {index} dimensionality mismatch (actual: {rule.n}, expected: {self.n})")
        if self.normalization is not None and len(self.normalization.input_offset) != self.n:
            raise ValueError("normalization dimensionality mismatch")

        return self

    def to_parameters(self) -> 'Parameters':
        """
        Returns the array view of the network parameters.
        """

        return Parameters(
            centers=np.array([rule.center for rule in self.rules], dtype=np.float64),
            transforms=np.array([rule.transform for rule in self.rules], dtype=np.float64),
            beta=np.array([rule.beta for rule in self.rules], dtype=np.float64),
            delta=np.array([rule.delta for rule in self.rules], dtype=np.float64),
            weights=np.array([(rule.v1, rule.v2) for rule in self.rules], dtype=np.float64),
            consequents=np.array([rule.consequent for rule in self.rules], dtype=np.float64),
            normalized_output=self.normalized_output,
        )

    @classmethod
    def from_parameters(cls, params: 'Parameters', normalization: Optional[Normalization] = None) -> 'Network':
        """
        Builds a network from an array view.

        :param params: network parameters
        :param normalization: data scaling metadata
        :return: network
        """

        rules = [
            Rule(
                center=tuple(params.centers[index].tolist()),
                transform=tuple(tuple(row) for row in params.transforms[index].tolist()),
                beta=tuple(params.beta[index].tolist()),
                delta=tuple(params.delta[index].tolist()),
                v1=float(params.weights[index, 0]),
                v2=float(params.weights[index, 1]),
                consequent=float(params.consequents[index]),
            )
            for index in range(params.R)
        ]

        return cls(n=params.n, rules=rules, normalized_output=params.normalized_output, normalization=normalization)


@dc.dataclass(frozen=True)
class FiringInterval:
    lower: float
    upper: float

    def __post_init__(self) -> None:
        if not 0.0 <= self.lower <= self.upper <= 1.0:
            raise errors.ContractError(f"invalid firing interval [{self.lower}, {self.upper}]")


@dc.dataclass(frozen=True)
class RuleTrace:
    """
    Per-rule intermediates of a single-sample forward pass.
    """

    features: Tuple[float, ...]
    interval: FiringInterval
    strength: float


class ForwardResult(typing.NamedTuple):
    output: float
    trace: Tuple[RuleTrace, ...]


@dc.dataclass(frozen=True)
class Parameters:
    """
    Array view of the network parameters.

    :param centers: ``R x n`` rule centers
    :param transforms: ``R x n x n`` feature extraction matrices
    :param beta: ``R x n`` shape regulators
    :param delta: ``R x n`` shape uncertainty regulators
    :param weights: ``R x 2`` type reduction weights ``(v1, v2)``
    :param consequents: ``R`` rule outputs
    :param normalized_output: output normalization flag
    """

    centers: FloatArray
    transforms: FloatArray
    beta: FloatArray
    delta: FloatArray
    weights: FloatArray
    consequents: FloatArray
    normalized_output: bool = False

    @property
    def R(self) -> int:
        return self.centers.shape[0]

    @property
    def n(self) -> int:
        return self.centers.shape[1]

    def replace(self, **changes: Any) -> 'Parameters':
        return dc.replace(self, **changes)

    def copy(self) -> 'Parameters':
        return Parameters(
            centers=self.centers.copy(),
            transforms=self.transforms.copy(),
            beta=self.beta.copy(),
            delta=self.delta.copy(),
            weights=self.weights.copy(),
            consequents=self.consequents.copy(),
            normalized_output=self.normalized_output,
        )

    def projected(self) -> 'Parameters':
        """
        Restores the rule invariants: shape regulators are projected onto ``beta^2 > delta^2 >= 0``
        and degenerate type reduction weights are reset to equal weighting.
        """

        beta, delta = fuzzy.project_shape(self.beta, self.delta)
        weights = self.weights.copy()
        degenerate = np.sum(weights * weights, axis=1) < 1e-12
        if np.any(degenerate):
            logger.debug("resetting degenerate type reduction weights of rules %s", np.flatnonzero(degenerate))
            weights[degenerate] = 0.5

        return self.replace(beta=beta, delta=delta, weights=weights)


@dc.dataclass(frozen=True)
class BatchTrace:
    """
    Intermediates of a batch forward pass. ``N`` samples, ``R`` rules, ``n`` features.

    :param deviations: ``N x R x n`` input deviations from the rule centers
    :param features: ``N x R x n`` extracted features
    :param terms: ``N x R x n`` membership terms
    :param lower: ``N x R`` lower firing strengths
    :param upper: ``N x R`` upper firing strengths
    :param lower_weight: ``R`` lower strength type reduction weights
    :param upper_weight: ``R`` upper strength type reduction weights
    :param strength: ``N x R`` reduced firing strengths
    :param total: ``N`` output denominators (ones for the unnormalized output)
    :param output: ``N`` network outputs
    """

    deviations: FloatArray
    features: FloatArray
    terms: IntervalTerms
    lower: FloatArray
    upper: FloatArray
    lower_weight: FloatArray
    upper_weight: FloatArray
    strength: FloatArray
    total: FloatArray
    output: FloatArray


def transform_features(rule: Rule, x: ArrayLike) -> FloatArray:
    """
    Extracts rule features ``z = Gamma (x - M)``.

    :param rule: fuzzy rule
    :param x: input vector
    :return: feature vector
    """

    vector = as_vector(x, size=rule.n, name='input')
    return np.asarray(rule.transform, dtype=np.float64) @ (vector - np.asarray(rule.center, dtype=np.float64))


def fuzzify(rule: Rule, z: ArrayLike) -> List[Tuple[float, float]]:
    """
    Evaluates the unit fuzzy sets of a rule.

    :param rule: fuzzy rule
    :param z: feature vector
    :return: ``(lower, upper)`` membership pairs, one per feature
    """

    features = as_vector(z, size=rule.n, name='features')
    pairs = []
    for index, value in enumerate(features.tolist()):
        shape = rule.shape(index)
        pairs.append((fuzzy.lmf(value, shape), fuzzy.umf(value, shape)))

    return pairs


def _product(values: Sequence[float]) -> float:
    if len(values) <= LOG_SPACE_THRESHOLD:
        return math.prod(values)
    if any(value == 0.0 for value in values):
        return 0.0

    return math.exp(math.fsum(math.log(value) for value in values))


def t_norm(pairs: Sequence[Tuple[float, float]]) -> FiringInterval:
    """
    Product t-norm of membership pairs.
    """

    return FiringInterval(
        lower=_product([lower for lower, _ in pairs]),
        upper=_product([upper for _, upper in pairs]),
    )


def fire(rule: Rule, z: ArrayLike) -> FiringInterval:
    """
    Computes the firing interval of a rule.

    :param rule: fuzzy rule
    :param z: feature vector
    :return: firing interval
    """

    return t_norm(fuzzify(rule, z))


def type_reduce(rule: Rule, interval: FiringInterval) -> float:
    """
    Reduces a firing interval to a crisp strength ``(v1^2 lower + v2^2 upper) / (v1^2 + v2^2)``.

    :param rule: fuzzy rule
    :param interval: firing interval
    :return: reduced firing strength in ``[lower, upper]``
    """

    v1, v2 = rule.v1 * rule.v1, rule.v2 * rule.v2
    total = v1 + v2
    if not total > 0.0:
        raise errors.DegenerateWeightsError("type reduction weights are both zero")

    strength = v1 / total * interval.lower + v2 / total * interval.upper
    # round-off may leave the convex combination a few ulps outside
    return min(max(strength, interval.lower), interval.upper)


def forward(net: Network, x: ArrayLike) -> ForwardResult:
    """
    Evaluates the network on a single input vector rule by rule.

    :param net: network
    :param x: input vector
    :return: output and per-rule trace
    """

    vector = as_vector(x, size=net.n, name='input')
    if not np.all(np.isfinite(vector)):
        raise errors.DomainError(f"input is not finite: {vector.tolist()}")

    trace = []
    for rule in net.rules:
        features = transform_features(rule, vector)
        interval = fire(rule, features)
        trace.append(RuleTrace(tuple(features.tolist()), interval, type_reduce(rule, interval)))

    output = math.fsum(item.strength * rule.consequent for item, rule in zip(trace, net.rules))
    if net.normalized_output:
        output /= max(math.fsum(item.strength for item in trace), TOTAL_FLOOR)

    return ForwardResult(output, tuple(trace))


def evaluate(params: Parameters, inputs: ArrayLike) -> BatchTrace:
    """
    Evaluates the network on a batch of inputs keeping all intermediates.

    :param params: network parameters
    :param inputs: ``N x n`` input matrix
    :return: batch trace
    """

    inputs = as_matrix(inputs, columns=params.n, name='inputs')
    if not np.all(np.isfinite(inputs)):
        raise errors.DomainError("inputs contain non-finite values")

    deviations = inputs[:, None, :] - params.centers[None, :, :]
    features = np.einsum('rjl,krl->krj', params.transforms, deviations)
    terms = fuzzy.interval_terms(features, params.beta[None, :, :], params.delta[None, :, :])

    if params.n > LOG_SPACE_THRESHOLD:
        lower = np.exp(np.sum(terms.log_lower, axis=2))
        upper = np.exp(np.sum(terms.log_upper, axis=2))
    else:
        lower = np.prod(np.exp(terms.log_lower), axis=2)
        upper = np.prod(np.exp(terms.log_upper), axis=2)

    squared_weights = params.weights * params.weights
    weight_total = squared_weights.sum(axis=1)
    if not np.all(weight_total > 0.0):
        raise errors.DegenerateWeightsError(
            f"type reduction weights are both zero for rules {np.flatnonzero(weight_total <= 0.0).tolist()}",
        )
    lower_weight = squared_weights[:, 0] / weight_total
    upper_weight = squared_weights[:, 1] / weight_total
    strength = np.clip(lower_weight * lower + upper_weight * upper, lower, upper)

    if params.normalized_output:
        total = np.maximum(strength.sum(axis=1), TOTAL_FLOOR)
    else:
        total = np.ones(inputs.shape[0])
    output = strength @ params.consequents / total

    return BatchTrace(
        deviations=deviations,
        features=features,
        terms=terms,
        lower=lower,
        upper=upper,
        lower_weight=lower_weight,
        upper_weight=upper_weight,
        strength=strength,
        total=total,
        output=output,
    )


def predict(net: Network, inputs: ArrayLike, original_units: bool = False) -> FloatArray:
    """
    Evaluates the network on a batch of inputs.

    :param net: network
    :param inputs: ``N x n`` input matrix
    :param original_units: inputs and outputs are in original data units, scaled by the network normalization
    :return: ``N`` outputs
    """

    inputs = as_matrix(inputs, columns=net.n, name='inputs')
    if original_units and net.normalization is not None:
        inputs = net.normalization.apply_inputs(inputs)

    output = evaluate(net.to_parameters(), inputs).output
    if original_units and net.normalization is not None:
        output = net.normalization.invert_targets(output)

    return output


def param_count(R: int, n: int) -> int:
    """
    Number of structural parameters ``R (n^2 + 3n + 1)``, type reduction weights excluded.
    """

    if R < 1 or n < 1:
        raise errors.ContractError(f"rule count and dimensionality must be positive (R: {R}, n: {n})")

    return R * (n * n + 3 * n + 1)


def trainable_count(R: int, n: int) -> int:
    """
    Number of trainable values ``R (n^2 + 3n + 3)``, type reduction weights included.
    """

    return param_count(R, n) + 2 * R


def fou_width(net: Network, z: float = 0.5) -> float:
    """
    Mean footprint of uncertainty width ``umf - lmf`` over all rules and features at feature value ``|z|``.

    :param net: network
    :param z: feature value
    :return: mean width
    """

    params = net.to_parameters()
    terms = fuzzy.interval_terms(np.full(params.beta.shape, abs(z)), params.beta, params.delta)

    return float(np.mean(np.exp(terms.log_upper) - np.exp(terms.log_lower)))


def collapse_fou(net: Network) -> Network:
    """
    Returns the type-1 counterpart of a network: all shape uncertainty regulators are zeroed.
    """

    rules = [rule.model_copy(update={'delta': (0.0,) * rule.n}) for rule in net.rules]
    return net.model_copy(update={'rules': tuple(rules)})


def random_network(
        n: int,
        R: int,
        seed: Optional[int] = None,
        normalized_output: Optional[bool] = None,
) -> Network:
    """
    Creates a network with random parameters in a smooth region of the membership functions.

    :param n: input dimensionality
    :param R: number of rules
    :param seed: random seed
    :param normalized_output: output normalization flag, defaults to the process-wide setting
    :return: network
    """

    generator = rng(seed)
    weights = generator.uniform(0.2, 1.2, size=(R, 2)) * generator.choice([-1.0, 1.0], size=(R, 2))
    params = Parameters(
        centers=generator.normal(0.0, 1.0, size=(R, n)),
        transforms=generator.normal(0.0, 1.0 / math.sqrt(n), size=(R, n, n)),
        beta=generator.uniform(0.8, 1.5, size=(R, n)),
        delta=generator.uniform(0.0, 0.3, size=(R, n)),
        weights=weights,
        consequents=generator.normal(0.0, 1.0, size=R),
        normalized_output=config.NORMALIZED_OUTPUT if normalized_output is None else normalized_output,
    )

    return Network.from_parameters(params)
