from typing import Optional, Sequence

import numpy as np

from it2cfnn.data import Dataset
from it2cfnn.network import Network, Rule


def make_rule(
        n: int = 2,
        center: Optional[Sequence[float]] = None,
        transform: Optional[Sequence[Sequence[float]]] = None,
        beta: float = 1.0,
        delta: float = 0.0,
        v1: float = 0.5,
        v2: float = 0.5,
        consequent: float = 0.0,
) -> Rule:
    return Rule(
        center=tuple(center) if center is not None else (0.0,) * n,
        transform=tuple(map(tuple, transform)) if transform is not None else tuple(map(tuple, np.eye(n).tolist())),
        beta=(beta,) * n,
        delta=(delta,) * n,
        v1=v1,
        v2=v2,
        consequent=consequent,
    )


def make_network(*rules: Rule, normalized_output: bool = False) -> Network:
    return Network(n=rules[0].n, rules=rules, normalized_output=normalized_output)


def random_dataset(n: int, n_samples: int, seed: int = 0, scale: float = 1.0) -> Dataset:
    generator = np.random.default_rng(seed)
    inputs = generator.normal(0.0, scale, size=(n_samples, n))
    targets = np.sin(inputs).sum(axis=1)

    return Dataset(inputs, targets)


def sse(predictions: np.ndarray, targets: np.ndarray) -> float:
    difference = predictions - targets
    return float(difference @ difference)
