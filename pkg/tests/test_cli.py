import json
import re

import pandas as pd
import pytest

from it2cfnn import cli
from it2cfnn.bench import REGISTRY_VERSION
from it2cfnn.data import load_csv
from it2cfnn.persistence import load_model


def run(capsys, *argv):
    code = cli.main([str(arg) for arg in argv])
    captured = capsys.readouterr()

    return code, captured.out, captured.err


def number(pattern, text):
    match = re.search(pattern, text)
    assert match is not None, text

    return float(match.group(1))


@pytest.fixture
def two_hump_csv(tmp_path, capsys):
    code, out, _ = run(capsys, '--output-dir', tmp_path, '--seed', 1, 'generate', 'two-hump', '--samples', 120)

    assert code == cli.EXIT_OK
    assert out.strip() == str(tmp_path / 'two-hump.csv')

    return tmp_path / 'two-hump.csv'


def test_generate_two_hump(two_hump_csv):
    dataset = load_csv(two_hump_csv, header=True)

    assert len(dataset) == 120
    assert dataset.n_inputs == 2


def test_generate_mackey_glass(tmp_path, capsys):
    embedded = tmp_path / 'embedded.csv'
    code, _, _ = run(
        capsys, 'generate', 'mackey-glass', '--t-end', 300, '--lags', 6, 12, 18, 24, '--output', embedded,
    )
    assert code == cli.EXIT_OK
    assert len(load_csv(embedded, header=True)) == 277

    code, out, _ = run(capsys, '--output-dir', tmp_path, 'generate', 'mackey-glass', '--t-end', 300)
    assert code == cli.EXIT_OK
    series = pd.read_csv(out.strip())
    assert list(series.columns) == ['t', 'x']
    assert len(series) == 301
    assert series['x'][0] == 1.2


def test_train_and_predict(tmp_path, capsys, two_hump_csv):
    config_path = tmp_path / 'train.json'
    config_path.write_text(json.dumps({'max_epochs': 3, 'max_inner': 5}))

    code, out, _ = run(
        capsys, '--output-dir', tmp_path, '--config', config_path, 'train', '--data', two_hump_csv, '--rules', 2,
    )
    assert code == cli.EXIT_OK
    assert 'rules: 2' in out
    assert 'parameters: 22 (trainable: 26)' in out
    training_rmse = number(r'training RMSE: (\S+)', out)
    validation_rmse = number(r'validation RMSE: (\S+)', out)

    history = pd.read_csv(tmp_path / 'history.csv', float_precision='round_trip')
    final = history.iloc[-1]
    assert final['group'] == 'final'
    assert final['train_rmse'] == pytest.approx(training_rmse, rel=1e-15)
    assert final['val_rmse'] == pytest.approx(validation_rmse, rel=1e-15)
    assert (history['group'][:-1] != 'final').all()

    code, out, _ = run(
        capsys, '--output-dir', tmp_path, 'predict', '--data', two_hump_csv, '--model', tmp_path / 'model.json',
    )
    assert code == cli.EXIT_OK
    assert number(r'RMSE: (\S+)', out) == pytest.approx(final['train_rmse'], rel=1e-15)

    predictions = pd.read_csv(tmp_path / 'predictions.csv')
    assert list(predictions.columns) == ['y_hat', 'y']
    assert len(predictions) == 120


def test_train_and_predict_normalized(tmp_path, capsys, two_hump_csv):
    config_path = tmp_path / 'train.json'
    config_path.write_text(json.dumps({'max_epochs': 1, 'max_inner': 2}))

    code, out, _ = run(
        capsys, '--output-dir', tmp_path, '--config', config_path,
        'train', '--data', two_hump_csv, '--rules', 2, '--normalize', 'minmax01',
    )
    assert code == cli.EXIT_OK
    training_rmse = number(r'training RMSE: (\S+)', out)

    code, out, _ = run(
        capsys, '--output-dir', tmp_path, 'predict', '--data', two_hump_csv, '--model', tmp_path / 'model.json',
    )
    assert code == cli.EXIT_OK
    assert number(r'RMSE: (\S+)', out) == pytest.approx(training_rmse, rel=1e-15)


def test_train_from_initial_model(tmp_path, capsys, two_hump_csv):
    initial = tmp_path / 'initial.xml'
    code, _, _ = run(capsys, 'init', '--data', two_hump_csv, '--rules', 3, '--model', initial)
    assert code == cli.EXIT_OK
    assert load_model(initial).R == 3

    config_path = tmp_path / 'train.json'
    config_path.write_text(json.dumps({'max_epochs': 1, 'max_inner': 2}))
    code, _, _ = run(
        capsys, '--config', config_path, 'train', '--data', two_hump_csv, '--initial', initial,
        '--model', tmp_path / 'trained.json', '--history', tmp_path / 'trained.csv',
    )
    assert code == cli.EXIT_OK
    assert load_model(tmp_path / 'trained.json').R == 3


def test_predict_inputs_only(tmp_path, capsys, two_hump_csv):
    run(capsys, 'init', '--data', two_hump_csv, '--rules', 2, '--model', tmp_path / 'model.json')
    inputs = tmp_path / 'inputs.csv'
    pd.read_csv(two_hump_csv)[['x1', 'x2']].to_csv(inputs, index=False)

    code, out, _ = run(
        capsys, '--output-dir', tmp_path, 'predict', '--data', inputs, '--no-target', '--model', tmp_path / 'model.json',
    )
    assert code == cli.EXIT_OK
    assert 'RMSE' not in out
    assert list(pd.read_csv(tmp_path / 'predictions.csv').columns) == ['y_hat']


@pytest.mark.parametrize(
    'argv', [
        [],
        ['frobnicate'],
        ['train'],
        ['check-grad', '--groups', 'nope'],
        ['bench', '--train-noise', '-0.1', 'synthetic'],
        ['--log-level', 'chatty', 'bench', '--list'],
    ],
)
def test_usage_errors(capsys, argv):
    code, _, err = run(capsys, *argv)

    assert code == cli.EXIT_USAGE
    assert 'usage:' in err


def test_missing_rules(tmp_path, capsys, two_hump_csv):
    code, _, err = run(capsys, 'train', '--data', two_hump_csv)

    assert code == cli.EXIT_USAGE
    assert 'either --initial or --rules is required' in err


def test_invalid_config(tmp_path, capsys, two_hump_csv):
    config_path = tmp_path / 'train.json'
    config_path.write_text(json.dumps({'eta': 0.5}))

    code, _, _ = run(capsys, '--config', config_path, 'train', '--data', two_hump_csv, '--rules', 2)

    assert code == cli.EXIT_USAGE


def test_data_errors(tmp_path, capsys, two_hump_csv):
    code, _, err = run(capsys, 'train', '--data', tmp_path / 'missing.csv', '--rules', 2)
    assert code == cli.EXIT_DATA
    assert err.startswith('error: ')

    broken = tmp_path / 'broken.json'
    broken.write_text('{"version": "it2cfnn-v1"}')
    code, _, _ = run(capsys, 'predict', '--data', two_hump_csv, '--model', broken)
    assert code == cli.EXIT_DATA

    run(capsys, 'init', '--data', two_hump_csv, '--rules', 2, '--model', tmp_path / 'model.json')
    series = tmp_path / 'series.csv'
    series.write_text('x\n1\n2\n')
    code, _, err = run(capsys, 'predict', '--data', series, '--no-target', '--model', tmp_path / 'model.json')
    assert code == cli.EXIT_DATA
    assert 'expected 2 input columns' in err


def test_check_grad(capsys):
    code, out, _ = run(capsys, '--seed', 3, 'check-grad', '--inputs', 2, '--rules', 2, '--samples', 20)

    assert code == cli.EXIT_OK
    for group in ('GAMMA', 'CENTER', 'CONSEQUENT', 'BETA', 'DELTA', 'TYPERED'):
        assert f"{group}: max relative deviation" in out
    assert number(r'max relative deviation: (\S+)', out) < 1e-4


def test_check_grad_model(tmp_path, capsys, two_hump_csv):
    run(capsys, 'init', '--data', two_hump_csv, '--rules', 2, '--model', tmp_path / 'model.json')

    code, out, _ = run(
        capsys, 'check-grad', '--model', tmp_path / 'model.json', '--data', two_hump_csv, '--groups', 'beta', 'delta',
    )

    assert code == cli.EXIT_OK
    assert 'GAMMA' not in out


def test_bench_list(capsys):
    code, out, _ = run(capsys, 'bench', '--list')

    assert code == cli.EXIT_OK
    assert out.startswith('synthetic: ')
    assert 'santa-fe: ' in out and '(needs --data)' in out

    code, _, _ = run(capsys, 'bench')
    assert code == cli.EXIT_USAGE


def test_bench_unknown_experiment(capsys):
    code, _, err = run(capsys, 'bench', 'nope')

    assert code == cli.EXIT_USAGE
    assert "unknown experiment 'nope'" in err


def test_bench_run_and_rerun(tmp_path, capsys):
    registry = tmp_path / 'registry.json'
    registry.write_text(json.dumps({
        'version': REGISTRY_VERSION,
        'experiments': [{
            'name': 'tiny',
            'source': {'kind': 'two-hump', 'n_samples': 60, 'train_size': 40},
            'rules': 2,
            'train': {'max_epochs': 1, 'max_inner': 2, 'validation_split': 'random'},
            'train_noise': [0.0],
        }],
    }))

    code, out, _ = run(
        capsys, '--output-dir', tmp_path / 'first', 'bench', 'tiny', '--registry', registry,
        '--train-noise', 'clean', '--train-noise', 0.1, '--test-noise', 0.1, '--repetitions', 2,
    )
    assert code == cli.EXIT_OK
    assert 'test_rmse_mean' in out

    first = tmp_path / 'first' / 'tiny'
    frame = pd.read_csv(first / 'report.csv', keep_default_na=False)
    assert frame['train_noise'].tolist() == ['clean', '0.1']
    assert frame['repetitions'].tolist() == [2, 2]

    code, _, _ = run(capsys, '--output-dir', tmp_path / 'second', 'bench', '--from-manifest', first / 'manifest.json')
    assert code == cli.EXIT_OK
    assert (tmp_path / 'second' / 'tiny' / 'report.csv').read_bytes() == (first / 'report.csv').read_bytes()


def test_bench_missing_data(capsys):
    code, _, err = run(capsys, 'bench', 'box-jenkins')

    assert code == cli.EXIT_USAGE
    assert 'needs a data file' in err


def test_version(capsys):
    with pytest.raises(SystemExit) as exc:
        cli.main(['--version'])

    assert exc.value.code == 0
    assert capsys.readouterr().out.startswith('it2cfnn ')
