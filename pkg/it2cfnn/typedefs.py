from enum import Enum, IntEnum

import numpy as np
import numpy.typing as npt

FloatArray = npt.NDArray[np.float64]
IntArray = npt.NDArray[np.intp]
BoolArray = npt.NDArray[np.bool_]


class ParamGroup(IntEnum):
    """
    Trainable parameter group. Values follow the canonical vector numbering.
    """

    GAMMA = 1  # rule transformation matrices
    CENTER = 2  # rule centers
    CONSEQUENT = 3  # rule consequents
    BETA = 4  # shape regulators
    DELTA = 5  # shape uncertainty regulators
    TYPERED = 6  # type reduction weights


class NormalizationMode(str, Enum):
    """
    Column scaling mode.
    """

    MINMAX01 = 'minmax01'
    ZSCORE = 'zscore'
    NONE = 'none'


class NoiseScope(str, Enum):
    """
    Part of a dataset perturbed by noise.
    """

    INPUTS = 'inputs'
    TARGETS = 'targets'
    BOTH = 'both'


class ValidationSplit(str, Enum):
    """
    Validation subset selection.
    """

    TAIL = 'tail'  # last samples, for time series
    RANDOM = 'random'  # seeded permutation, for i.i.d. regression
