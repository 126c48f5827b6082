"""
Adaptive-shape type-1 and uncertain-shape interval type-2 fuzzy sets.

The type-1 set is a generalized Gaussian whose shape regulator ``beta`` morphs the
curve between triangular-like (small ``beta``) and trapezoidal-like (large ``beta``)
profiles. The interval type-2 set makes the shape itself uncertain: the exponent
``beta^2`` is widened to the interval ``beta^2 -+ delta^2``, producing an upper and
a lower membership function bounding the footprint of uncertainty.
"""

import math
import typing
from typing import Tuple

import numpy as np
import pydantic as pd

from . import errors
from .typedefs import BoolArray, FloatArray

__all__ = (
    'ShapeParams',
    'IntervalTerms',
    'mu_type1',
    'umf',
    'lmf',
    'interval_terms',
    'project_shape',
)

BETA_FLOOR = 1e-3
DELTA_MARGIN = 1e-6


class ShapeParams(pd.BaseModel):
    """
    Parameters of one uncertain-shape fuzzy set.

    :param m: center (input units)
    :param sigma: width (input units)
    :param beta: shape regulator
    :param delta: shape uncertainty regulator
    """

    model_config = pd.ConfigDict(frozen=True, allow_inf_nan=False)

    m: float = 0.0
    sigma: float = pd.Field(default=1.0, gt=0.0)
    beta: float = 1.0
    delta: float = pd.Field(default=0.0, ge=0.0)

    @pd.model_validator(mode='after')
    def check_exponents(self) -> 'ShapeParams':
        if not self.beta ** 2 - self.delta ** 2 > 0.0:
            raise ValueError(f"beta^2 - delta^2 must be positive (beta: {self.beta}, delta: {self.delta})")

        return self


def _squared_ratio(x: float, p: ShapeParams) -> float:
    if not math.isfinite(x):
        raise errors.DomainError(f"membership argument is not finite: {x}")

    # model_construct() bypasses validation
    if not (
        math.isfinite(p.m) and math.isfinite(p.sigma) and p.sigma > 0.0 and
        p.delta >= 0.0 and p.beta ** 2 - p.delta ** 2 > 0.0
    ):
        raise errors.DomainError(f"invalid fuzzy set parameters: {p!r}")

    ratio = (x - p.m) / p.sigma
    return ratio * ratio


def _membership(squared_ratio: float, exponent: float) -> float:
    # 0 ** exponent is 0 for a positive exponent, no log-based pow of zero involved
    return math.exp(-0.5 * squared_ratio ** exponent)


def mu_type1(x: float, p: ShapeParams) -> float:
    """
    Type-1 adaptive-shape membership ``exp(-1/2 * ((x - m) / sigma) ^ (2 * beta^2))``.
    The power is taken on the squared ratio so that the value is real for ``x < m``.

    :param x: crisp input
    :param p: fuzzy set parameters (``delta`` is ignored)
    :return: membership degree in (0, 1]
    """

    return _membership(_squared_ratio(x, p), p.beta ** 2)


def umf(x: float, p: ShapeParams) -> float:
    """
    Upper membership function of the uncertain-shape interval type-2 set.

    :param x: crisp input
    :param p: fuzzy set parameters
    :return: upper membership degree in (0, 1]
    """

    squared_ratio = _squared_ratio(x, p)
    if abs(x - p.m) <= p.sigma:
        exponent = p.beta ** 2 + p.delta ** 2
    else:
        exponent = p.beta ** 2 - p.delta ** 2

    return _membership(squared_ratio, exponent)


def lmf(x: float, p: ShapeParams) -> float:
    """
    Lower membership function of the uncertain-shape interval type-2 set.

    :param x: crisp input
    :param p: fuzzy set parameters
    :return: lower membership degree in (0, 1]
    """

    squared_ratio = _squared_ratio(x, p)
    if abs(x - p.m) <= p.sigma:
        exponent = p.beta ** 2 - p.delta ** 2
    else:
        exponent = p.beta ** 2 + p.delta ** 2

    return _membership(squared_ratio, exponent)


class IntervalTerms(typing.NamedTuple):
    """
    Element-wise intermediate terms of the unit (``m = 0``, ``sigma = 1``) interval type-2 sets.
    """

    squared: FloatArray  # z^2
    inner: BoolArray  # |z| <= 1
    lower_exponent: FloatArray
    upper_exponent: FloatArray
    lower_power: FloatArray  # (z^2) ^ lower_exponent
    upper_power: FloatArray  # (z^2) ^ upper_exponent

    @property
    def log_lower(self) -> FloatArray:
        return -0.5 * self.lower_power

    @property
    def log_upper(self) -> FloatArray:
        return -0.5 * self.upper_power


def interval_terms(z: FloatArray, beta: FloatArray, delta: FloatArray) -> IntervalTerms:
    """
    Evaluates the unit interval type-2 sets for an array of extracted features.
    ``beta`` and ``delta`` are broadcast against ``z``.

    :param z: extracted features
    :param beta: shape regulators
    :param delta: shape uncertainty regulators
    :return: membership terms
    """

    squared = z * z
    inner = squared <= 1.0
    beta2 = beta * beta
    delta2 = delta * delta
    lower_exponent = np.where(inner, beta2 - delta2, beta2 + delta2)
    upper_exponent = np.where(inner, beta2 + delta2, beta2 - delta2)

    return IntervalTerms(
        squared=squared,
        inner=inner,
        lower_exponent=lower_exponent,
        upper_exponent=upper_exponent,
        lower_power=np.power(squared, lower_exponent),
        upper_power=np.power(squared, upper_exponent),
    )


def project_shape(beta: FloatArray, delta: FloatArray) -> Tuple[FloatArray, FloatArray]:
    """
    Projects shape regulators onto the admissible set ``beta^2 - delta^2 > 0``, ``delta >= 0``.

    :param beta: shape regulators
    :param delta: shape uncertainty regulators
    :return: projected ``(beta, delta)``
    """

    beta = np.asarray(beta, dtype=np.float64)
    beta = np.where(np.abs(beta) < BETA_FLOOR, np.copysign(BETA_FLOOR, beta), beta)
    delta = np.minimum(np.abs(np.asarray(delta, dtype=np.float64)), np.abs(beta) * (1.0 - DELTA_MARGIN))

    return beta, delta
