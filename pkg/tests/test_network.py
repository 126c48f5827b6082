import math

import numpy as np
import pydantic as pd
import pytest
from helpers import make_network, make_rule
from hypothesis import given, settings
from hypothesis import strategies as st

from it2cfnn import errors, fuzzy
from it2cfnn.network import FiringInterval, Network, Parameters, collapse_fou, evaluate, fire, forward, fou_width
from it2cfnn.network import fuzzify, param_count, predict, random_network, t_norm, trainable_count
from it2cfnn.network import transform_features, type_reduce


def test_transform_features():
    assert transform_features(make_rule(3), [1.0, -2.0, 3.0]).tolist() == [1.0, -2.0, 3.0]

    rule = make_rule(2, center=[1.0, 1.0], transform=[[2.0, 0.0], [0.0, 3.0]])
    assert transform_features(rule, [2.0, 3.0]).tolist() == [2.0, 6.0]
    assert transform_features(rule, [1.0, 1.0]).tolist() == [0.0, 0.0]

    with pytest.raises(errors.ContractError):
        transform_features(rule, [1.0, 2.0, 3.0])


def test_fuzzify():
    rule = make_rule(3, beta=1.3, delta=0.4)
    pairs = fuzzify(rule, [0.0, 1.0, -1.0])

    assert pairs[0] == (1.0, 1.0)
    assert pairs[1] == pytest.approx((math.exp(-0.5), math.exp(-0.5)), abs=1e-15)
    assert pairs[2] == pytest.approx((math.exp(-0.5), math.exp(-0.5)), abs=1e-15)

    type1 = make_rule(1, beta=1.3)
    lower, upper = fuzzify(type1, [0.7])[0]
    assert lower == upper == fuzzy.mu_type1(0.7, fuzzy.ShapeParams(beta=1.3))


def test_fire():
    rule = make_rule(2, beta=1.1, delta=0.3)

    assert fire(rule, [0.0, 0.0]) == FiringInterval(1.0, 1.0)
    product = t_norm([(0.5, 0.8), (0.5, 0.8)])
    assert (product.lower, product.upper) == pytest.approx((0.25, 0.64), abs=1e-15)
    assert t_norm([(0.0, 0.0), (0.5, 0.8)]) == FiringInterval(0.0, 0.0)

    interval = fire(rule, [0.4, -2.5])
    assert 0.0 <= interval.lower <= interval.upper <= 1.0


def test_long_product_in_log_space():
    pairs = [(0.9, 0.95)] * 40
    interval = t_norm(pairs)

    assert interval.lower == pytest.approx(0.9 ** 40, rel=1e-12)
    assert interval.upper == pytest.approx(0.95 ** 40, rel=1e-12)


def test_invalid_firing_interval():
    with pytest.raises(errors.ContractError):
        FiringInterval(0.6, 0.4)


def test_type_reduce():
    interval = FiringInterval(0.2, 0.8)

    assert type_reduce(make_rule(1, v1=0.3, v2=0.3), interval) == pytest.approx(0.5, abs=1e-15)
    assert type_reduce(make_rule(1, v1=1.0, v2=0.0), interval) == 0.2
    assert type_reduce(make_rule(1, v1=1.0, v2=2.0), interval) == pytest.approx(0.68, abs=1e-15)


@pytest.mark.parametrize('scale', [-3.0, 0.01, 7.5])
def test_type_reduce_scale_invariance(scale):
    interval = FiringInterval(0.1, 0.9)
    base = type_reduce(make_rule(1, v1=0.4, v2=1.3), interval)

    assert type_reduce(make_rule(1, v1=0.4 * scale, v2=1.3 * scale), interval) == pytest.approx(base, abs=1e-14)


def test_degenerate_weights():
    with pytest.raises(pd.ValidationError):
        make_rule(1, v1=0.0, v2=0.0)

    rule = make_rule(1).model_copy(update={'v1': 0.0, 'v2': 0.0})
    with pytest.raises(errors.DegenerateWeightsError):
        type_reduce(rule, FiringInterval(0.1, 0.2))


def test_forward_at_center():
    net = make_network(make_rule(2, center=[0.5, -1.0], delta=0.2, consequent=3.25))
    output, trace = forward(net, [0.5, -1.0])

    assert output == 3.25
    assert trace[0].strength == 1.0
    assert trace[0].features == (0.0, 0.0)


def test_forward_zero_consequents():
    net = random_network(3, 2, seed=1)
    net = Network.from_parameters(net.to_parameters().replace(consequents=np.zeros(2)))

    assert forward(net, [0.3, -0.2, 1.0]).output == 0.0


def test_forward_brute_force():
    net = make_network(
        make_rule(2, center=[0.0, 1.0], transform=[[1.0, 0.5], [-0.2, 0.8]], beta=1.2, delta=0.3,
                  v1=0.6, v2=1.1, consequent=2.0),
        make_rule(2, center=[-1.0, 0.5], transform=[[0.7, 0.0], [0.3, 1.4]], beta=0.9, delta=0.1,
                  v1=1.0, v2=0.4, consequent=-1.5),
    )
    x = np.array([0.3, 0.2])

    expected = 0.0
    for rule in net.rules:
        z = np.array(rule.transform) @ (x - np.array(rule.center))
        lower = upper = 1.0
        for value, beta, delta in zip(z, rule.beta, rule.delta):
            inner = abs(value) <= 1.0
            lower_power = beta ** 2 - delta ** 2 if inner else beta ** 2 + delta ** 2
            upper_power = beta ** 2 + delta ** 2 if inner else beta ** 2 - delta ** 2
            lower *= math.exp(-0.5 * (value * value) ** lower_power)
            upper *= math.exp(-0.5 * (value * value) ** upper_power)
        weight = rule.v1 ** 2 + rule.v2 ** 2
        expected += (rule.v1 ** 2 * lower + rule.v2 ** 2 * upper) / weight * rule.consequent

    assert forward(net, x).output == pytest.approx(expected, rel=1e-13)


@pytest.mark.parametrize('normalized_output', [False, True])
def test_batch_matches_scalar(normalized_output):
    net = random_network(4, 3, seed=11, normalized_output=normalized_output)
    inputs = np.random.default_rng(12).normal(size=(50, 4))

    batch = predict(net, inputs)
    for x, output in zip(inputs, batch):
        assert output == pytest.approx(forward(net, x).output, rel=1e-12, abs=1e-14)


def test_batch_matches_scalar_in_log_space():
    net = random_network(20, 2, seed=5)
    inputs = np.random.default_rng(6).normal(0.0, 0.3, size=(10, 20))

    batch = predict(net, inputs)
    for x, output in zip(inputs, batch):
        assert output == pytest.approx(forward(net, x).output, rel=1e-10, abs=1e-300)


def test_normalized_output():
    net = make_network(
        make_rule(1, center=[0.0], consequent=2.0),
        make_rule(1, center=[3.0], consequent=4.0),
        normalized_output=True,
    )
    output, trace = forward(net, [1.0])

    expected = (trace[0].strength * 2.0 + trace[1].strength * 4.0) / (trace[0].strength + trace[1].strength)
    assert output == pytest.approx(expected, rel=1e-14)
    assert 2.0 < output < 4.0


def test_non_finite_inputs():
    net = random_network(2, 1, seed=0)

    with pytest.raises(errors.DomainError):
        forward(net, [math.nan, 0.0])

    with pytest.raises(errors.DomainError):
        predict(net, [[0.0, math.inf]])

    with pytest.raises(errors.ContractError):
        predict(net, np.zeros((3, 4)))


@pytest.mark.parametrize(
    'R, n, expected', [
        (2, 4, 58),
        (1, 1, 5),
        (3, 5, 123),
    ],
)
def test_param_count(R, n, expected):
    assert param_count(R, n) == expected
    assert trainable_count(R, n) == expected + 2 * R


def test_param_count_matches_fields():
    generator = np.random.default_rng(0)
    for _ in range(50):
        R, n = int(generator.integers(1, 8)), int(generator.integers(1, 8))
        params = random_network(n, R, seed=int(generator.integers(1000))).to_parameters()
        fields = (params.centers, params.transforms, params.beta, params.delta, params.weights, params.consequents)

        assert param_count(R, n) == sum(field.size for field in fields) - params.weights.size


def test_param_count_invalid():
    with pytest.raises(errors.ContractError):
        param_count(0, 3)


def test_network_validation():
    rule = make_rule(2)

    with pytest.raises(pd.ValidationError):
        Network(n=3, rules=[rule])

    with pytest.raises(pd.ValidationError):
        Network(n=2, rules=[])

    with pytest.raises(pd.ValidationError):
        Network.model_validate({'n': 2, 'R': 2, 'rules': [rule.model_dump()]})

    with pytest.raises(pd.ValidationError):
        Network.model_validate({'version': 'it2cfnn-v0', 'n': 2, 'rules': [rule.model_dump()]})

    with pytest.raises(pd.ValidationError):
        make_rule(2, beta=0.5, delta=0.6)

    assert Network.model_validate({'n': 2, 'R': 1, 'rules': [rule.model_dump()]}).R == 1


def test_parameters_round_trip():
    net = random_network(3, 4, seed=9)

    assert Network.from_parameters(net.to_parameters()) == net


def test_projected_parameters():
    params = random_network(2, 2, seed=4).to_parameters()
    broken = params.replace(delta=params.beta * 2.0, weights=np.array([[0.0, 0.0], [0.3, 0.1]]))

    fixed = broken.projected()
    assert np.all(fixed.beta ** 2 - fixed.delta ** 2 > 0.0)
    assert fixed.weights.tolist() == [[0.5, 0.5], [0.3, 0.1]]
    Network.from_parameters(fixed)


def test_evaluate_trace():
    net = random_network(3, 2, seed=2)
    trace = evaluate(net.to_parameters(), np.random.default_rng(0).normal(size=(7, 3)))

    assert trace.features.shape == (7, 2, 3)
    assert trace.strength.shape == (7, 2)
    assert np.all(trace.lower <= trace.upper)
    assert np.all((trace.lower - 1e-15 <= trace.strength) & (trace.strength <= trace.upper + 1e-15))
    assert trace.total.tolist() == [1.0] * 7


def test_fou_width():
    net = random_network(2, 2, seed=3)

    assert fou_width(net) > 0.0
    assert fou_width(collapse_fou(net)) == 0.0
    assert all(rule.delta == (0.0, 0.0) for rule in collapse_fou(net).rules)


def test_random_network_determinism():
    assert random_network(3, 2, seed=42) == random_network(3, 2, seed=42)
    assert isinstance(random_network(3, 2, seed=42).to_parameters(), Parameters)


@settings(max_examples=200, deadline=None)
@given(
    seed=st.integers(min_value=0, max_value=2 ** 16),
    order=st.permutations(range(4)),
    normalized_output=st.booleans(),
)
def test_rule_order_does_not_change_output(seed, order, normalized_output):
    net = random_network(3, 4, seed=seed, normalized_output=normalized_output)
    permuted = Network(n=net.n, rules=tuple(net.rules[i] for i in order), normalized_output=net.normalized_output)
    inputs = np.random.default_rng(seed).normal(size=(20, 3))

    assert np.allclose(predict(permuted, inputs), predict(net, inputs), rtol=1e-12, atol=1e-14)


@settings(max_examples=500, deadline=None)
@given(
    beta=st.floats(min_value=0.3, max_value=2.5),
    ratio=st.floats(min_value=0.0, max_value=0.99),
    other=st.floats(min_value=-3.0, max_value=3.0),
    side=st.sampled_from([-1.0, 1.0]),
)
def test_forward_continuity_at_branch_boundary(beta, ratio, other, side):
    transform = np.array([[1.0, 0.4], [-0.3, 1.2]])
    center = np.array([0.2, -0.5])
    net = make_network(
        make_rule(2, center=center, transform=transform, beta=beta, delta=beta * ratio, v1=0.8, v2=0.6,
                  consequent=1.7),
    )
    boundary = center + np.linalg.solve(transform, [side, other])
    direction = np.linalg.solve(transform, [side, 0.0])

    inside = forward(net, boundary - 1e-12 * direction).output
    outside = forward(net, boundary + 1e-12 * direction).output

    assert abs(inside - outside) < 1e-9


@settings(max_examples=300, deadline=None)
@given(
    seed=st.integers(min_value=0, max_value=2 ** 16),
    scale=st.floats(min_value=0.01, max_value=10.0),
)
def test_reduced_strength_within_interval(seed, scale):
    net = random_network(3, 3, seed=seed)
    inputs = np.random.default_rng(seed).normal(0.0, scale, size=(10, 3))

    trace = evaluate(net.to_parameters(), inputs)
    assert np.all(trace.lower <= trace.upper)
    assert np.all(trace.lower <= trace.strength)
    assert np.all(trace.strength <= trace.upper)

    for rule_trace in forward(net, inputs[0]).trace:
        assert rule_trace.interval.lower <= rule_trace.strength <= rule_trace.interval.upper
