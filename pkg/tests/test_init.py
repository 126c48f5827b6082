import numpy as np
import pytest

from it2cfnn import errors
from it2cfnn.data import TWO_HUMP_CENTERS, Dataset, synthetic_two_hump
from it2cfnn.init import CandidateCenter, KnnIndex, find_candidates, initialize, knn, local_covariance
from it2cfnn.init import neighborhood_size, select_centers, whitening_transform


def line(*points: float) -> np.ndarray:
    return np.array(points, dtype=np.float64)[:, None]


def test_knn():
    samples = line(0.0, 1.0, 2.0, 3.0)

    assert knn(samples, 0, 2) == [1, 2]
    assert sorted(knn(samples, 2, 3)) == [0, 1, 3]


def test_knn_ties():
    samples = line(5.0, 0.0, 5.0, 5.0, 6.0, 4.0)

    assert knn(samples, 0, 4) == [2, 3, 4, 5]


def test_knn_invalid_k():
    with pytest.raises(errors.ConfigurationError):
        knn(line(0.0, 1.0, 2.0), 0, 3)

    with pytest.raises(errors.ConfigurationError):
        knn(line(0.0, 1.0, 2.0), 0, 0)


def test_knn_table_matches_single_queries():
    samples = np.random.default_rng(0).normal(size=(30, 3))
    index = KnnIndex(samples, 4)

    table = index.table()
    for query in range(30):
        assert table[query].tolist() == index.neighbors(query).tolist()


def test_find_candidates_parabola():
    x = np.linspace(-2.0, 2.0, 11)
    candidates = find_candidates(Dataset(x[:, None], x * x), 2)

    assert [candidate.index for candidate in candidates] == [0, 5, 10]
    assert candidates[1].output == 0.0


def test_find_candidates_constant_target():
    x = np.linspace(0.0, 1.0, 10)

    assert find_candidates(Dataset(x[:, None], np.ones(10)), 3) == []


def test_find_candidates_two_hump():
    dataset = synthetic_two_hump(40 * 40, grid=True)
    centers = [candidate.position for candidate in find_candidates(dataset, 50)]

    for hump in TWO_HUMP_CENTERS:
        assert min(np.linalg.norm(center - np.array(hump)) for center in centers) < 0.5


def candidate(index: int, density: float) -> CandidateCenter:
    return CandidateCenter(index=index, position=np.array([float(index)]), output=0.0, density=density)


def test_select_centers():
    candidates = [candidate(0, 0.5), candidate(1, 0.1), candidate(2, 0.3)]

    assert [c.index for c in select_centers(candidates, 1)] == [1]
    assert [c.index for c in select_centers(candidates, 3)] == [1, 2, 0]
    assert [c.index for c in select_centers([candidate(4, 0.2), candidate(3, 0.2)], 2)] == [3, 4]


def test_select_centers_shortage():
    dataset = Dataset(line(0.0, 1.0, 2.0, 3.0, 4.0), np.array([0.0, 0.1, 0.2, 5.0, -4.0]))

    with pytest.warns(errors.CandidateShortageWarning):
        selected = select_centers([], 2, dataset)

    assert [c.index for c in selected] == [3, 4]

    with pytest.raises(errors.ConfigurationError):
        select_centers([], 2)


def test_local_covariance():
    assert local_covariance(np.ones((4, 2)), [1.0, 1.0]).tolist() == [[0.0, 0.0], [0.0, 0.0]]
    assert local_covariance([[1.0, 0.0], [-1.0, 0.0]], [0.0, 0.0]).tolist() == [[1.0, 0.0], [0.0, 0.0]]

    cloud = np.random.default_rng(1).normal(size=(30_000, 3))
    assert np.max(np.abs(local_covariance(cloud, np.zeros(3)) - np.eye(3))) < 0.05


def test_local_covariance_is_about_the_center():
    neighbors = np.array([[2.0], [4.0]])

    assert local_covariance(neighbors, [0.0]).tolist() == [[10.0]]


def test_whitening_identity():
    gamma = whitening_transform(np.eye(3))

    assert np.allclose(gamma.T @ gamma, np.eye(3), atol=1e-14)


def test_whitening_diagonal():
    gamma = whitening_transform(np.diag([4.0, 9.0]))

    assert np.allclose(np.abs(gamma), [[0.0, 1.0 / 3.0], [0.5, 0.0]], atol=1e-14)
    assert np.all(gamma.sum(axis=1) > 0.0)


@pytest.mark.parametrize('n', [1, 2, 3, 4, 5, 6])
def test_whitening_of_random_covariances(n):
    generator = np.random.default_rng(n)
    for _ in range(20):
        factor = generator.normal(size=(n, n))
        covariance = factor @ factor.T + 0.1 * np.eye(n)
        gamma = whitening_transform(covariance)

        assert np.max(np.abs(gamma @ covariance @ gamma.T - np.eye(n))) < 1e-10


def test_whitening_singular_covariance():
    gamma = whitening_transform(np.array([[1.0, 1.0], [1.0, 1.0]]))

    assert np.all(np.isfinite(gamma))
    assert np.abs(gamma[1]).max() > 1e3


def test_whitening_is_deterministic():
    covariance = np.array([[2.0, 0.3], [0.3, 1.0]])
    gamma = whitening_transform(covariance)

    assert np.array_equal(gamma, whitening_transform(covariance.copy()))
    for row in gamma:
        assert row[np.flatnonzero(np.abs(row) > 1e-12)[0]] > 0.0


def test_neighborhood_size():
    assert neighborhood_size(350, 2) == 175
    assert neighborhood_size(3, 5) == 1
    assert neighborhood_size(4, 1) == 3


def test_initialize():
    dataset = synthetic_two_hump(350, seed=0)
    net = initialize(dataset, 2, epsilon_delta=0.2)

    assert net.R == 2
    assert net.n == 2
    for rule in net.rules:
        assert rule.beta == (1.0, 1.0)
        assert rule.delta == (0.2, 0.2)
        assert (rule.v1, rule.v2) == (0.5, 0.5)
        assert any(np.array_equal(rule.center, x) for x in dataset.inputs)


def test_initialize_constant_target():
    x = np.random.default_rng(2).normal(size=(20, 2))
    dataset = Dataset(x, np.full(20, 3.0))

    with pytest.warns(errors.CandidateShortageWarning):
        net = initialize(dataset, 1)

    assert net.rules[0].consequent == 3.0
    assert np.all(np.isfinite(np.array(net.rules[0].transform)))


def test_initialize_errors():
    dataset = synthetic_two_hump(10)

    with pytest.raises(errors.ConfigurationError):
        initialize(dataset, 0)

    with pytest.raises(errors.ConfigurationError):
        initialize(dataset, 11)

    with pytest.raises(errors.ConfigurationError):
        initialize(dataset, 2, epsilon_delta=1.0)


def center_index(dataset: Dataset, center) -> int:
    matches = np.flatnonzero(np.all(dataset.inputs == np.array(center), axis=1))
    assert matches.size == 1

    return int(matches[0])


@pytest.mark.parametrize(
    'dataset, R', [
        (synthetic_two_hump(350, seed=0), 2),
        (synthetic_two_hump(500, seed=4), 3),
    ],
)
def test_initialize_whitens_neighborhoods(dataset, R):
    net = initialize(dataset, R)
    index = KnnIndex(dataset.inputs, neighborhood_size(len(dataset), R))

    for rule in net.rules:
        sample = center_index(dataset, rule.center)
        z = (dataset.inputs[index.neighbors(sample)] - np.array(rule.center)) @ np.array(rule.transform).T
        moment = z.T @ z / z.shape[0]

        assert np.max(np.abs(moment - np.eye(net.n))) < 1e-6


def test_initialize_consequents_are_center_targets():
    dataset = synthetic_two_hump(350, seed=5)
    net = initialize(dataset, 3)

    for rule in net.rules:
        assert rule.consequent == dataset.targets[center_index(dataset, rule.center)]


def test_initialize_is_deterministic():
    dataset = synthetic_two_hump(300, seed=6)

    assert initialize(dataset, 2) == initialize(dataset, 2)
    assert initialize(dataset, 2) == initialize(Dataset(dataset.inputs.copy(), dataset.targets.copy()), 2)
