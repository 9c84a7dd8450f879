"""
View layer: the multirank command line.

Subcommands: solve, generate, enumerate, measure, experiment, cost-table.
Exit codes: 0 success, 2 usage, 3 unparseable input, 4 layer/dimension
mismatch, 5 non-convergence, 1 anything else.
"""
import argparse
import json
import logging
import sys
from typing import Optional, Sequence

import numpy as np
import pandas as pd

from baselines import BaselinePreset, ConvergenceError, PresetKind, run_method
from configurations import ConfigurationError, LayerIndexError, enumerate_configs, expected_config_count, parse_config
from engine import EvalMode, NonConvergenceError, SettingsError, SolverSettings, solve
from experiments import Batch, ExperimentPlan, PlanError, load_plan, run_experiment
from generators import GeneratorSpec, GeneratorSpecError, MultiplexSpec, generate_multiplex
from measures import (UndefinedMeasureError, WeightScheme, concatenate_rankings, cost_table, multijaccard,
                      weighted_kendall_tau)
from multiplex import (DimensionError, EdgeListParseError, MultiplexNetwork, dump_multiplex, load_example_ring,
                       read_multiplex, save_multiplex, superposition_check)

logger = logging.getLogger('multirank')

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2
EXIT_PARSE = 3
EXIT_DIMENSION = 4
EXIT_NONCONVERGENCE = 5


def configure_logging(verbosity: int, quiet: bool = False) -> None:
    if quiet:
        level = logging.ERROR
    elif verbosity >= 2:
        level = logging.DEBUG
    elif verbosity == 1:
        level = logging.INFO
    else:
        level = logging.WARNING
    logging.basicConfig(level=level, format='%(asctime)s %(levelname)s %(name)s: %(message)s')
    logging.getLogger().setLevel(level)


def _settings(args: argparse.Namespace) -> SolverSettings:
    return SolverSettings(
        tau0=args.tau0,
        inner_tol=args.inner_tol,
        outer_tol=args.outer_tol,
        max_inner_iters=args.max_inner,
        max_outer_halvings=args.max_outer,
        eval_mode=EvalMode(args.eval_mode),
    )


def _add_settings_arguments(parser: argparse.ArgumentParser) -> None:
    defaults = SolverSettings()
    group = parser.add_argument_group('solver')
    group.add_argument('--tau0', type=float, default=defaults.tau0, help='initial perturbation')
    group.add_argument('--inner-tol', type=float, default=defaults.inner_tol)
    group.add_argument('--outer-tol', type=float, default=defaults.outer_tol)
    group.add_argument('--max-inner', type=int, default=defaults.max_inner_iters)
    group.add_argument('--max-outer', type=int, default=defaults.max_outer_halvings)
    group.add_argument('--eval-mode', choices=[m.value for m in EvalMode], default=defaults.eval_mode.value)


def _load_network(args: argparse.Namespace) -> MultiplexNetwork:
    if args.input:
        return read_multiplex(args.input)
    return load_example_ring()


def _emit(text: str, output: Optional[str]) -> None:
    if output:
        with open(output, 'w', encoding='utf-8') as f:
            f.write(text)
    else:
        sys.stdout.write(text)


def cmd_solve(args: argparse.Namespace) -> int:
    network = _load_network(args)
    settings = _settings(args)
    if args.preset:
        rankings, report = run_method(network, BaselinePreset(PresetKind(args.preset), args.damping), settings)
        data = report.to_dict(network.vertex_ids, include_trace=args.trace) if report else {
            'method': args.preset, 'rankings': [r.to_list() for r in rankings],
            'vertex_ids': list(network.vertex_ids)}
    else:
        sc = parse_config(args.config, network.layer_count)
        report = solve(network, sc, settings)
        rankings = report.rankings
        data = report.to_dict(network.vertex_ids, include_trace=args.trace)
    if report is not None:
        logger.info("converged at tau=%g after %d iterations", report.final_tau, report.total_iterations)
    if args.format == 'csv':
        frame = pd.DataFrame({f'r{s}': r.values for s, r in enumerate(rankings)})
        frame.insert(0, 'vertex', list(network.vertex_ids))
        _emit(frame.to_csv(index=False), args.output)
    else:
        _emit(json.dumps(data, indent=2) + '\n', args.output)
    return EXIT_OK


def cmd_generate(args: argparse.Namespace) -> int:
    if args.generator == 'er':
        base = GeneratorSpec.erdos_renyi(args.nodes, args.p, args.seed)
    else:
        base = GeneratorSpec.two_block_sbm(args.nodes, args.p_in, args.p_out, args.seed)
    probs = args.layer_prob or [0.5] * args.layers
    if len(probs) == 1 and args.layers > 1:
        probs = probs * args.layers
    mspec = MultiplexSpec(base, tuple(probs), independent=not args.exclusive, seed=args.seed)
    network = generate_multiplex(mspec, layer_count=len(probs))
    if args.output:
        save_multiplex(network, args.output)
    else:
        sys.stdout.write(dump_multiplex(network))
    logger.info("generated %d layer(s) on %d vertices", network.layer_count, network.n)
    return EXIT_OK


def cmd_enumerate(args: argparse.Namespace) -> int:
    configs = enumerate_configs(args.layers, k=args.k)
    if args.count:
        print(len(configs))
        if args.k is None:
            logger.info("closed form gives %d", expected_config_count(args.layers))
        return EXIT_OK
    for config in configs:
        print(f"{config}\t{len(set(config.members()))}")
    return EXIT_OK


def _read_scores(path: str) -> np.ndarray:
    """Score vector from a solve JSON (rankings concatenated) or whitespace separated numbers."""
    with open(path, 'r', encoding='utf-8') as f:
        text = f.read()
    try:
        data = json.loads(text)
    except json.JSONDecodeError:
        try:
            return np.array([float(tok) for tok in text.split()])
        except ValueError as e:
            raise EdgeListParseError(0, f"{path}: not a score file ({e})") from None
    if isinstance(data, dict):
        data = data.get('rankings', [])
    if data and isinstance(data[0], list):
        return concatenate_rankings(data)
    return np.asarray(data, dtype=float)


def cmd_measure(args: argparse.Namespace) -> int:
    if args.kind == 'tau':
        if len(args.files) != 2:
            raise argparse.ArgumentTypeError("tau needs two score files")
        result = weighted_kendall_tau(_read_scores(args.files[0]), _read_scores(args.files[1]),
                                      WeightScheme(args.weights))
        print(json.dumps({'tau_w': result.tau_w, 'n_items': result.n_items,
                          'tie_counts': list(result.tie_counts)}))
        return EXIT_OK
    if len(args.files) != 1:
        raise argparse.ArgumentTypeError(f"{args.kind} needs one edge-list file")
    network = read_multiplex(args.files[0])
    if args.kind == 'multijaccard':
        print(json.dumps({'multijaccard': multijaccard(network)}))
    else:
        diag = superposition_check(network)
        print(json.dumps({'irreducible': diag.irreducible, 'aperiodic': diag.aperiodic,
                          'period': diag.period, 'components': diag.components}))
    return EXIT_OK


def cmd_experiment(args: argparse.Namespace) -> int:
    if args.plan:
        plan = load_plan(args.plan)
        overrides = {'seed': args.seed, 'output': args.output}
        plan = ExperimentPlan.from_dict({**plan.to_dict(), **{k: v for k, v in overrides.items() if v is not None},
                                         'deterministic': plan.deterministic or args.deterministic})
    else:
        plan = ExperimentPlan.default_for(
            Batch(args.batch), full_scale=args.full_scale,
            seed=args.seed, output=args.output, repetitions=args.repetitions,
            node_sizes=tuple(args.nodes) if args.nodes else None,
            layers=args.layers, configs=tuple(args.config) if args.config else None,
            shifts=tuple(args.shift) if args.shift else None,
            deterministic=args.deterministic, settings=_settings(args),
        )
    result = run_experiment(plan, progress=not args.quiet)
    if not plan.output:
        sys.stdout.write(result.rows.to_csv(index=False))
    else:
        logger.info("wrote %d rows to %s", len(result.rows), plan.output)
    failures = result.summary.get('failures', 0)
    if failures:
        logger.warning("%d row(s) recorded a failure", failures)
    return EXIT_OK


def cmd_cost_table(args: argparse.Namespace) -> int:
    table = cost_table(args.nodes, args.layers)
    _emit(table.to_csv(index=False), args.output)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog='multirank', description='Configurable centrality on multiplex networks')
    parser.add_argument('-v', '--verbose', action='count', default=0, help='-v info, -vv debug')
    parser.add_argument('--quiet', action='store_true', help='only log errors')
    sub = parser.add_subparsers(dest='command', required=True)

    p = sub.add_parser('solve', help='rank vertices of a multiplex under a configuration or preset')
    p.add_argument('input', nargs='?', help='edge-list file (default: bundled six-vertex ring)')
    how = p.add_mutually_exclusive_group(required=True)
    how.add_argument('--config', help='configuration text, e.g. "A0T A0 A1T A1"')
    how.add_argument('--preset', choices=[k.value for k in PresetKind])
    p.add_argument('--damping', type=float, default=0.85)
    p.add_argument('--trace', action='store_true', help='include the per-tau trace')
    p.add_argument('--format', choices=['json', 'csv'], default='json')
    p.add_argument('--output', '-o')
    _add_settings_arguments(p)
    p.set_defaults(handler=cmd_solve)

    p = sub.add_parser('generate', help='draw a synthetic multiplex')
    p.add_argument('--generator', choices=['er', 'sbm'], default='er')
    p.add_argument('--nodes', '-n', type=int, default=64)
    p.add_argument('--p', type=float, default=0.5, help='ER edge probability')
    p.add_argument('--p-in', type=float, default=0.5)
    p.add_argument('--p-out', type=float, default=0.2)
    p.add_argument('--layers', type=int, default=2)
    p.add_argument('--layer-prob', type=float, nargs='+', help='per-layer probabilities (one value repeats)')
    p.add_argument('--exclusive', action='store_true', help='each arc goes to exactly one layer')
    p.add_argument('--seed', type=int, default=0)
    p.add_argument('--output', '-o')
    p.set_defaults(handler=cmd_generate)

    p = sub.add_parser('enumerate', help='list repetition-free configurations')
    p.add_argument('--layers', type=int, default=2)
    p.add_argument('--k', type=int)
    p.add_argument('--count', action='store_true')
    p.set_defaults(handler=cmd_enumerate)

    p = sub.add_parser('measure', help='weighted tau, MultiJaccard or superposition diagnostics')
    p.add_argument('kind', choices=['tau', 'multijaccard', 'superposition'])
    p.add_argument('files', nargs='+')
    p.add_argument('--weights', choices=[w.value for w in WeightScheme], default=WeightScheme.HYPERBOLIC.value)
    p.set_defaults(handler=cmd_measure)

    p = sub.add_parser('experiment', help='run a batch and write CSV rows plus a JSON summary')
    p.add_argument('batch', nargs='?', choices=[b.value for b in Batch], default=Batch.COMPARE_METHODS.value)
    p.add_argument('--plan', help='JSON experiment plan (overrides the batch defaults)')
    p.add_argument('--paper-scale', '--full-scale', dest='full_scale', action='store_true',
                   help='use the large node sizes and 32 repetitions')
    p.add_argument('--seed', type=int)
    p.add_argument('--repetitions', type=int)
    p.add_argument('--nodes', type=int, nargs='+')
    p.add_argument('--layers', type=int)
    p.add_argument('--config', action='append', help='configuration to include (repeatable)')
    p.add_argument('--shift', type=int, action='append')
    p.add_argument('--deterministic', action='store_true', help='omit timestamps from outputs')
    p.add_argument('--output', '-o')
    _add_settings_arguments(p)
    p.set_defaults(handler=cmd_experiment)

    p = sub.add_parser('cost-table', help='per-iteration operation counts')
    p.add_argument('--nodes', type=int, nargs='+', default=[64, 128, 256, 512, 1024, 2048, 4096])
    p.add_argument('--layers', type=int, default=2)
    p.add_argument('--output', '-o')
    p.set_defaults(handler=cmd_cost_table)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    configure_logging(args.verbose, args.quiet)
    try:
        return args.handler(args)
    except (EdgeListParseError, ConfigurationError, PlanError, json.JSONDecodeError) as e:
        if isinstance(e, LayerIndexError):
            logger.error("%s", e)
            return EXIT_DIMENSION
        logger.error("could not parse input: %s", e)
        return EXIT_PARSE
    except DimensionError as e:
        logger.error("%s", e)
        return EXIT_DIMENSION
    except NonConvergenceError as e:
        logger.error("%s", e)
        return EXIT_NONCONVERGENCE
    except argparse.ArgumentTypeError as e:
        logger.error("%s", e)
        return EXIT_USAGE
    except (SettingsError, GeneratorSpecError, ConvergenceError, UndefinedMeasureError,
            FileNotFoundError, ValueError) as e:
        logger.error("%s", e)
        return EXIT_FAILURE
