"""
Interval type-2 correlation-aware fuzzy neural network
"""

from . import bench, config, data, errors, fuzzy, init, network, persistence, train
from .data import Dataset, Normalization, SeriesSpec, lag_embed, load_csv, load_series, mackey_glass
from .data import synthetic_two_hump
from .errors import BaseError
from .init import initialize
from .network import Network, Rule, evaluate, forward, predict, random_network
from .persistence import load_model, save_model
from .train import History, TrainConfig, check_gradients, fit

__version__ = '1.0.0'

__all__ = (
    'Dataset',
    'Normalization',
    'SeriesSpec',
    'Network',
    'Rule',
    'History',
    'TrainConfig',
    'BaseError',
    'initialize',
    'fit',
    'forward',
    'evaluate',
    'predict',
    'random_network',
    'check_gradients',
    'load_model',
    'save_model',
    'lag_embed',
    'load_csv',
    'load_series',
    'mackey_glass',
    'synthetic_two_hump',
    'bench',
    'config',
    'data',
    'errors',
    'fuzzy',
    'init',
    'network',
    'persistence',
    'train',
)
