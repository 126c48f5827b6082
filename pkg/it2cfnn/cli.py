"""
Command line interface.

Exit codes: 0 success, 1 usage or configuration error, 2 data or model file error,
3 numerical failure (including a failed gradient check).
"""

import argparse
import logging
import sys
from pathlib import Path
from typing import Callable, Dict, NoReturn, Optional, Sequence

import numpy as np
import pandas as pd
import pydantic as pd_

from . import __version__, bench, config, data, errors, init, network, persistence, train
from .typedefs import NoiseScope, NormalizationMode, ParamGroup
from .utils import rng

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_NUMERIC = 3


class UsageError(Exception):
    """
    Command line usage error.
    """


class ArgumentParser(argparse.ArgumentParser):
    def error(self, message: str) -> NoReturn:
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def noise_level(value: str) -> float:
    if value.lower() == 'clean':
        return 0.0
    try:
        std = float(value)
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid noise level: {value!r}")
    if not std >= 0.0:
        raise argparse.ArgumentTypeError(f"noise level must be non-negative: {value!r}")

    return std


def param_group(name: str) -> ParamGroup:
    try:
        return ParamGroup[name.upper()]
    except KeyError:
        raise argparse.ArgumentTypeError(f"unknown parameter group: {name!r}")


def load_train_config(args: argparse.Namespace) -> train.TrainConfig:
    train_config = train.TrainConfig()
    if args.config is not None:
        try:
            train_config = train.TrainConfig.model_validate_json(Path(args.config).read_bytes())
        except OSError as exc:
            raise errors.ConfigurationError(f"{args.config}: cannot read configuration: {exc.strerror}") from exc
    if args.seed is not None:
        train_config = train_config.model_copy(update={'seed': args.seed})

    return train_config


def output_path(args: argparse.Namespace, explicit: Optional[str], default: str) -> Path:
    path = Path(explicit) if explicit is not None else Path(args.output_dir) / default
    path.parent.mkdir(parents=True, exist_ok=True)
    return path


def load_training_data(args: argparse.Namespace) -> data.Dataset:
    dataset = data.load_csv(args.data, header=not args.no_header)
    if args.normalize is not NormalizationMode.NONE:
        dataset = data.normalize(dataset, args.normalize)

    return dataset


def cmd_generate(args: argparse.Namespace) -> int:
    seed = args.seed if args.seed is not None else 0
    if args.dataset == 'two-hump':
        dataset = data.add_gaussian_noise(
            data.synthetic_two_hump(args.samples, seed, grid=args.grid), args.noise, seed, args.noise_scope,
        )
    else:
        series = data.mackey_glass(args.x0, args.tau, args.t_start, args.t_end, args.dt, args.interpolation)
        series = data.add_gaussian_noise(series, args.noise, seed)
        if not args.lags:
            path = output_path(args, args.output, 'mackey-glass-series.csv')
            frame = pd.DataFrame({'t': np.arange(args.t_start, args.t_end + 1), 'x': series})
            frame.to_csv(path, index=False, float_format='%.17g')
            logger.info("series with %d samples written to %s", len(series), path)
            print(path)
            return EXIT_OK

        dataset = data.lag_embed(series, data.SeriesSpec.single(args.lags, args.horizon))

    path = output_path(args, args.output, f"{args.dataset}.csv")
    data.save_csv(dataset, path)
    logger.info("dataset with %d samples written to %s", len(dataset), path)
    print(path)

    return EXIT_OK


def cmd_init(args: argparse.Namespace) -> int:
    dataset = load_training_data(args)
    net = init.initialize(dataset, args.rules, args.epsilon_delta, args.normalized_output)
    path = output_path(args, args.model, 'model.json')
    persistence.save_model(net, path)
    print(path)

    return EXIT_OK


def cmd_train(args: argparse.Namespace) -> int:
    raw = data.load_csv(args.data, header=not args.no_header)
    dataset = raw if args.normalize is NormalizationMode.NONE else data.normalize(raw, args.normalize)
    if args.initial is not None:
        net = persistence.load_model(args.initial)
    elif args.rules is not None:
        net = init.initialize(dataset, args.rules, args.epsilon_delta, args.normalized_output)
    else:
        raise errors.ConfigurationError("either --initial or --rules is required")

    train_config = load_train_config(args)
    trained, history = train.fit(net, dataset, train_config)

    # scored the way `predict` scores the same file
    training_rmse = bench.rmse(network.predict(trained, raw.inputs, original_units=True), raw.targets)
    validation = train.split_validation(raw, train_config)[1]
    validation_rmse = training_rmse if validation is None else bench.rmse(
        network.predict(trained, validation.inputs, original_units=True), validation.targets,
    )
    history.append_final(training_rmse, validation_rmse)

    model_path = output_path(args, args.model, 'model.json')
    history_path = output_path(args, args.history, 'history.csv')
    persistence.save_model(trained, model_path)
    history.save_csv(history_path)

    print(f"rules: {trained.R}")
    print(f"parameters: {network.param_count(trained.R, trained.n)} "
          f"(trainable: {network.trainable_count(trained.R, trained.n)})")
    print(f"training RMSE: {training_rmse:.17g}")
    print(f"validation RMSE: {validation_rmse:.17g}")
    print(f"model: {model_path}")
    print(f"history: {history_path}")

    return EXIT_OK


def cmd_predict(args: argparse.Namespace) -> int:
    net = persistence.load_model(args.model)
    header = not args.no_header

    targets = None
    if args.no_target:
        inputs = data.load_series(args.data, header=header)
        inputs = inputs[:, None] if inputs.ndim == 1 else inputs
    else:
        dataset = data.load_csv(args.data, header=header)
        inputs, targets = dataset.inputs, dataset.targets

    if inputs.shape[1] != net.n:
        raise errors.ContractError(f"{args.data}: expected {net.n} input columns, got {inputs.shape[1]}")

    predictions = network.predict(net, inputs, original_units=True)
    frame = pd.DataFrame({'y_hat': predictions})
    if targets is not None:
        frame['y'] = targets

    path = output_path(args, args.output, 'predictions.csv')
    frame.to_csv(path, index=False, float_format='%.17g')
    if targets is not None:
        print(f"RMSE: {bench.rmse(predictions, targets):.17g}")
    print(f"predictions: {path}")

    return EXIT_OK


def cmd_bench(args: argparse.Namespace) -> int:
    if args.from_manifest is not None:
        manifest = bench.manifest_of(args.from_manifest)
        spec, data_path = manifest.experiment, args.data or manifest.data_path
    else:
        registry = bench.load_registry(args.registry)
        if args.list or args.experiment is None:
            for experiment in registry.experiments:
                marker = ' (needs --data)' if experiment.requires_data else ''
                print(f"{experiment.name}: {experiment.description}{marker}")
            return EXIT_OK if args.list else EXIT_USAGE

        spec, data_path = registry.get(args.experiment), args.data

    overrides: Dict[str, object] = {}
    if args.rules is not None:
        overrides['rules'] = args.rules
    if args.train_noise:
        overrides['train_noise'] = tuple(args.train_noise)
    if args.test_noise:
        overrides['test_noise'] = tuple(args.test_noise)
    if args.repetitions is not None:
        overrides['repetitions'] = args.repetitions
    if args.seed is not None:
        overrides['seed'] = args.seed
    if args.config is not None:
        overrides['train'] = load_train_config(args)
    if overrides:
        spec = bench.ExperimentSpec.model_validate({**spec.model_dump(), **overrides})

    report = bench.run_experiment(spec, data_path, Path(args.output_dir) / spec.name, args.jobs)
    print(report.format_table())

    return EXIT_NUMERIC if report.results and all(result.failed for result in report.results) else EXIT_OK


def cmd_check_grad(args: argparse.Namespace) -> int:
    seed = args.seed if args.seed is not None else 0
    if args.model is not None:
        net = persistence.load_model(args.model)
    else:
        net = network.random_network(args.inputs, args.rules, seed)

    if args.data is not None:
        dataset = data.load_csv(args.data, header=not args.no_header)
    else:
        samples = rng(seed + 1).normal(0.0, 1.0, size=(args.samples, net.n))
        dataset = data.Dataset(samples, np.zeros(args.samples))

    report = train.check_gradients(net, dataset, args.groups or tuple(ParamGroup), tolerance=args.tolerance)
    for check in report.checks:
        print(f"{check.group.name}: max relative deviation {check.max_deviation:.3e} ({check.compared} entries)")
    print(f"excluded samples: {report.excluded_samples}")
    print(f"max relative deviation: {report.max_deviation:.3e}")

    return EXIT_OK if report.passed else EXIT_NUMERIC


def add_data_options(parser: argparse.ArgumentParser, required: bool = True) -> None:
    parser.add_argument('--data', required=required, help="dataset csv file (columns x1..xn, y)")
    parser.add_argument('--no-header', action='store_true', help="the data file has no header row")


def add_init_options(parser: argparse.ArgumentParser) -> None:
    parser.add_argument('--epsilon-delta', type=float, default=0.1, help="initial shape uncertainty regulator")
    parser.add_argument(
        '--normalize', type=NormalizationMode, default=NormalizationMode.NONE,
        choices=list(NormalizationMode), help="scale the data before training",
    )
    parser.add_argument(
        '--normalized-output', action=argparse.BooleanOptionalAction, default=config.NORMALIZED_OUTPUT,
        help="divide the network output by the sum of rule strengths",
    )


def build_parser() -> ArgumentParser:
    parser = ArgumentParser(prog='it2cfnn', description="Interval type-2 correlation-aware fuzzy neural network")
    parser.add_argument('--version', action='version', version=f"%(prog)s {__version__}")
    parser.add_argument('--seed', type=int, default=None, help="random seed")
    parser.add_argument('--config', default=None, help="training configuration json file")
    parser.add_argument('--output-dir', default='.', help="directory receiving output files")
    parser.add_argument(
        '--log-level', default=config.LOG_LEVEL, choices=['DEBUG', 'INFO', 'WARNING', 'ERROR'],
        type=str.upper, help="logging level",
    )
    commands = parser.add_subparsers(dest='command', metavar='command', parser_class=ArgumentParser)
    commands.required = True

    generate = commands.add_parser('generate', help="generate a benchmark dataset")
    generate.add_argument('dataset', choices=['two-hump', 'mackey-glass'])
    generate.add_argument('--output', default=None, help="output csv file")
    generate.add_argument('--samples', type=int, default=700, help="two-hump sample count")
    generate.add_argument('--grid', action='store_true', help="sample the two-hump function on a regular grid")
    generate.add_argument('--x0', type=float, default=1.2)
    generate.add_argument('--tau', type=float, default=17.0)
    generate.add_argument('--t-start', type=int, default=0)
    generate.add_argument('--t-end', type=int, default=1123)
    generate.add_argument('--dt', type=float, default=0.1)
    generate.add_argument('--interpolation', choices=['linear', 'hermite'], default='linear')
    generate.add_argument('--lags', type=int, nargs='*', default=None, help="embed the series with these lags")
    generate.add_argument('--horizon', type=int, default=0)
    generate.add_argument('--noise', type=noise_level, default=0.0, help="gaussian noise standard deviation")
    generate.add_argument('--noise-scope', type=NoiseScope, choices=list(NoiseScope), default=NoiseScope.BOTH)
    generate.set_defaults(handler=cmd_generate)

    init_parser = commands.add_parser('init', help="initialize a network from data")
    add_data_options(init_parser)
    init_parser.add_argument('--rules', type=int, required=True)
    init_parser.add_argument('--model', default=None, help="output model file (.json or .xml)")
    add_init_options(init_parser)
    init_parser.set_defaults(handler=cmd_init)

    train_parser = commands.add_parser('train', help="train a network")
    add_data_options(train_parser)
    train_parser.add_argument('--initial', default=None, help="initial model file")
    train_parser.add_argument('--rules', type=int, default=None, help="initialize a network with this many rules")
    train_parser.add_argument('--model', default=None, help="output model file (.json or .xml)")
    train_parser.add_argument('--history', default=None, help="output history csv file")
    add_init_options(train_parser)
    train_parser.set_defaults(handler=cmd_train)

    predict_parser = commands.add_parser('predict', help="evaluate a network on a dataset")
    add_data_options(predict_parser)
    predict_parser.add_argument('--model', required=True)
    predict_parser.add_argument('--no-target', action='store_true', help="the data file holds inputs only")
    predict_parser.add_argument('--output', default=None, help="output predictions csv file")
    predict_parser.set_defaults(handler=cmd_predict)

    bench_parser = commands.add_parser('bench', help="run a benchmark protocol")
    bench_parser.add_argument('experiment', nargs='?', default=None)
    bench_parser.add_argument('--list', action='store_true', help="list registered experiments")
    bench_parser.add_argument('--registry', default=None, help="experiment registry file")
    bench_parser.add_argument('--from-manifest', default=None, help="rerun the experiment recorded in a manifest")
    bench_parser.add_argument('--data', default=None, help="series csv file of csv-backed experiments")
    bench_parser.add_argument('--rules', type=int, default=None)
    bench_parser.add_argument('--train-noise', type=noise_level, action='append', default=None)
    bench_parser.add_argument('--test-noise', type=noise_level, action='append', default=None)
    bench_parser.add_argument('--repetitions', type=int, default=None)
    bench_parser.add_argument('--jobs', type=int, default=1, help="parallel worker processes")
    bench_parser.set_defaults(handler=cmd_bench)

    check = commands.add_parser('check-grad', help="compare analytic and finite-difference Jacobians")
    check.add_argument('--model', default=None, help="model file, a random network is used if omitted")
    add_data_options(check, required=False)
    check.add_argument('--inputs', type=int, default=3, help="random network input dimensionality")
    check.add_argument('--rules', type=int, default=2, help="random network rule count")
    check.add_argument('--samples', type=int, default=50, help="random sample count")
    check.add_argument('--tolerance', type=float, default=1e-4)
    check.add_argument(
        '--groups', type=param_group, nargs='*', default=None,
        help="parameter groups to check",
    )
    check.set_defaults(handler=cmd_check_grad)

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE

    logging.basicConfig(level=args.log_level, format='%(asctime)s %(levelname)s %(name)s: %(message)s')

    handler: Callable[[argparse.Namespace], int] = args.handler
    error: Exception
    try:
        return handler(args)
    except (UsageError, errors.ConfigurationError, pd_.ValidationError) as exc:
        code, error = EXIT_USAGE, exc
    except (errors.DataError, errors.PersistenceError, errors.ContractError, errors.DomainError, OSError) as exc:
        code, error = EXIT_DATA, exc
    except errors.NumericError as exc:
        code, error = EXIT_NUMERIC, exc

    logger.debug("%s failed", args.command, exc_info=error)
    print(f"error: {error}", file=sys.stderr)

    return code


if __name__ == '__main__':
    sys.exit(main())
