#!/usr/bin/env python3
"""
Exposes a terminal interface to fsoturb.
"""
import argparse
import logging
import pathlib
import sys
import time

import numpy as np
from tabulate import tabulate

from fsoturb.helpers import ArgparseChecker, to_csv, to_json, write_output
from fsoturb.config import Config, FORMATS
from fsoturb.errors import ParameterError, DomainError, NumericError, DataError, DegenerateDataError
from fsoturb.spectrum import VARTHETA, FILTER_KINDS, GH_COUPLINGS, variance_kernel, gamma_from_params
from fsoturb.modes import ORDERS
from fsoturb.analytic import PowerLawPdf, pdf_crosstalk, t_n_max
from fsoturb.montecarlo import ENGINES, simulate_transmittance, simulate_crosstalk
from fsoturb.estimate import load_series, estimate_r0


logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_NUMERIC = 3
EXIT_DEGENERATE = 4


def cmd_variances(config):
    """
    The coefficient variances and the r0-independent kernel K = c_a r0^(5/3).

    :return: JSON text {c_a, c_g, c_s, vartheta, K}
    """
    params = config.turbulence()
    mode_filter = config.mode_filter()
    variances = config.variances()
    kernel = variance_kernel(params.l0, params.L0, mode_filter)
    logger.info('\n' + tabulate([['r0 (m)', params.r0], ['l0 (m)', params.l0], ['L0 (m)', params.L0],
                                 ['w (m)', config.w], ['filter', mode_filter.kind],
                                 ['c_a (rad/m)^2', variances.c_a], ['c_g (rad/m^2)^2', variances.c_g],
                                 ['c_s (rad/m^2)^2', variances.c_s], ['K', kernel]],
                                headers=['setting', 'value']))
    return to_json({'c_a': variances.c_a, 'c_g': variances.c_g, 'c_s': variances.c_s,
                    'vartheta': VARTHETA, 'K': kernel})


def _exponent(config):
    if config.gamma is not None:
        return config.gamma
    return gamma_from_params(config.turbulence(), config.beam(), config.mode_filter())


def density_table(config):
    """
    The (T, density) rows of the fundamental mode power law (level 0) or of the level-N cross-talk.

    The fundamental table is tabulated at T = i/K, i = 1..K. The cross-talk table is tabulated at
    T_Nmax sin^2(pi i / (2(K + 1))) which stays below T_Nmax and clusters the rows at both ends,
    where the density is singular.
    """
    gamma = _exponent(config)
    index = np.arange(1, config.points + 1)
    if config.n_level == 0:
        T = index / config.points
        density = PowerLawPdf(gamma).pdf(T)
    else:
        T = t_n_max(config.n_level) * np.sin(np.pi / 2 * index / (config.points + 1)) ** 2
        density = pdf_crosstalk(config.n_level, 2 / gamma, T)
    logger.info(f'Density table of level {config.n_level} with {config.points} rows, gamma={gamma:.6g}')
    return T, density


def cmd_pdf(config):
    """
    :return: CSV text with the columns T,density
    """
    T, density = density_table(config)
    if config.format == 'json':
        return to_json({'level': config.n_level, 'T': T, 'density': density})
    return to_csv(['T', 'density'], zip(T, density))


def cmd_simulate(config):
    """
    Monte Carlo fundamental mode transmittance.

    :return: the histogram as CSV text bin_lo,bin_hi,density, or JSON with {bins, density, mean, std_error, count}
    """
    result = simulate_transmittance(config.variances(), config.beam(), config.sim_config())
    if config.raw_out is not None:
        result.write_samples(config.raw_out)

    logger.info('\n' + tabulate([[config.order, config.tracking, result.pdf.count, result.mean, result.std_error]],
                                headers=['order', 'tracking', 'samples', 'mean T', 'std error']))
    if config.format == 'json':
        return to_json({'bins': result.pdf.edges, 'density': result.pdf.density, 'mean': result.mean,
                        'std_error': result.std_error, 'count': result.pdf.count})
    return to_csv(['bin_lo', 'bin_hi', 'density'], result.pdf.rows())


def cmd_crosstalk(config):
    """
    Monte Carlo cross-talk from the fundamental mode into the power levels 0..n_max.

    :return: CSV text with one histogram block per level, level,bin_lo,bin_hi,density
    """
    result = simulate_crosstalk(config.variances(), config.beam(), config.sim_config(), config.n_max)
    logger.info('\n' + tabulate([[level, mean] for level, mean in enumerate(result.means)],
                                headers=['level', 'mean T']))
    if config.format == 'json':
        return to_json({'levels': [{'level': level, 'mean': float(result.means[level]), 'bins': pdf.edges,
                                    'density': pdf.density}
                                   for level, pdf in enumerate(result.pdfs)]})
    rows = [[str(level), lo, hi, density]
            for level, pdf in enumerate(result.pdfs)
            for lo, hi, density in pdf.rows()]
    return to_csv(['level', 'bin_lo', 'bin_hi', 'density'], rows)


def cmd_estimate_r0(input_path, config):
    """
    Estimate the Fried parameter from measured fundamental mode transmittance.

    :return: JSON text {gamma, c_a, r0, ci_lo, ci_hi, rejected_count}
    """
    series = load_series(input_path, column=config.column)
    estimate = estimate_r0(series, config.beam(), config.l0, config.L0, config.mode_filter(),
                           confidence=config.confidence)
    logger.info('\n' + tabulate([['gamma', estimate.gamma], ['c_a (rad/m)^2', estimate.c_a],
                                 ['r0 (m)', estimate.r0], ['CI low (m)', estimate.ci_lo],
                                 ['CI high (m)', estimate.ci_hi], ['rejected', estimate.rejected_count]],
                                headers=['estimate', 'value']))
    return to_json({'gamma': estimate.gamma, 'c_a': estimate.c_a, 'r0': estimate.r0, 'ci_lo': estimate.ci_lo,
                    'ci_hi': estimate.ci_hi, 'rejected_count': estimate.rejected_count})


def _shared_arguments():
    parser = argparse.ArgumentParser(add_help=False)
    parser.add_argument('-c', '--config', metavar='file', dest='config_file',
                        type=ArgparseChecker.existing_file, required=False,
                        help='A JSON document with the settings. The flags below override it. '
                             'Default: the turbulence chamber of fsoturb/data/chamber.json.')
    parser.add_argument('--r0', metavar='metres', dest='r0',
                        type=ArgparseChecker.positive_float, required=False,
                        help='Fried parameter (m). Default: 0.002.')
    parser.add_argument('--l0', metavar='metres', dest='l0',
                        type=ArgparseChecker.positive_float, required=False,
                        help='Inner scale (m). Default: 0.0027.')
    parser.add_argument('--L0', metavar='metres', dest='L0',
                        type=ArgparseChecker.positive_float, required=False,
                        help='Outer scale (m). Default: 0.051.')
    parser.add_argument('--w', metavar='metres', dest='w',
                        type=ArgparseChecker.positive_float, required=False,
                        help='Waist of the fundamental Gaussian mode (m). Default: 0.001.')
    parser.add_argument('--filter', metavar='str', dest='filter_kind',
                        type=str, required=False, choices=FILTER_KINDS,
                        help='The spectrum of the fundamental mode used as the filter: '
                             '"intensity-spectrum" (default) or "field-spectrum".')
    parser.add_argument('--gamma', metavar='decimal', dest='gamma',
                        type=ArgparseChecker.positive_float, required=False,
                        help='Power-law exponent. When given, r0 is derived from it.')
    parser.add_argument('-o', '--out', metavar='file', dest='out',
                        type=pathlib.Path, required=False,
                        help='Where to save the output. Default: the standard output.')
    parser.add_argument('--format', metavar='str', dest='format',
                        type=str, required=False, choices=FORMATS,
                        help='"csv" (default) or "json".')
    parser.add_argument('-v', '--logging-level', metavar='str or bool', dest='logging_level',
                        type=ArgparseChecker.logging_lvl, required=False, default='INFO',
                        help='Logging level. Can be a boolean value '
                             '(False disables logging by setting it to ERROR). '
                             'A string should specify a logging level (DEBUG, INFO, WARNING, ERROR, CRITICAL). ')
    return parser


def _simulation_arguments():
    parser = argparse.ArgumentParser(add_help=False)
    parser.add_argument('--seed', metavar='u64', dest='seed',
                        type=ArgparseChecker.seed_u64, required=False,
                        help='Unsigned 64-bit seed. Default: 0.')
    parser.add_argument('-n', '--samples', metavar='integer', dest='samples',
                        type=ArgparseChecker.positive_int, required=False,
                        help='Number of phase screen realisations. Default: 100000.')
    parser.add_argument('--order', metavar='str', dest='order',
                        type=str, required=False, choices=ORDERS,
                        help='"first" (tilts, default) or "second" (tilts and curvatures).')
    parser.add_argument('--tracking', metavar='boolean', dest='tracking',
                        type=ArgparseChecker.str2bool, required=False,
                        help='Ideal tilt tracking: zero the tilts in every realisation.')
    parser.add_argument('--gh-coupling', metavar='str', dest='gh_coupling',
                        type=str, required=False, choices=GH_COUPLINGS,
                        help='"independent" (default) or "correlated" curvatures g and h.')
    parser.add_argument('--engine', metavar='str', dest='engine',
                        type=str, required=False, choices=ENGINES,
                        help='"closed-form" (default) expressions or the "grid" overlap integral.')
    parser.add_argument('--bins', metavar='integer', dest='bins',
                        type=ArgparseChecker.positive_int, required=False,
                        help='Number of histogram bins. Default: 100.')
    parser.add_argument('--log-bins', metavar='boolean', dest='log_bins',
                        type=ArgparseChecker.str2bool, required=False,
                        help='Log-spaced bins that resolve the mass close to T = 0.')
    parser.add_argument('--grid-points', metavar='integer', dest='grid_points',
                        type=ArgparseChecker.positive_int, required=False,
                        help='Points along each axis of the overlap grid (at least 256). Default: 512.')
    parser.add_argument('-j', '--workers', metavar='integer', dest='workers',
                        type=ArgparseChecker.positive_int, required=False,
                        help='Worker processes. The results do not depend on it. '
                             'Default: $FSOTURB_WORKERS or 1.')
    return parser


def build_parser():
    shared = _shared_arguments()
    simulation = _simulation_arguments()

    parser = argparse.ArgumentParser(description='fsoturb: turbulence-induced loss and cross-talk '
                                                 'of free-space optical channels')
    subparsers = parser.add_subparsers(dest='command', metavar='command', required=True)
    subparsers.add_parser('variances', parents=[shared],
                          help='Variances of the tilts and the curvatures of the phase screen.')

    pdf = subparsers.add_parser('pdf', parents=[shared],
                                help='Density table of the fundamental mode or of a level of cross-talk.')
    pdf.add_argument('--level', metavar='integer', dest='n_level', type=int, required=False,
                     help='Power level N. 0 (default) is the fundamental mode transmittance.')
    pdf.add_argument('--points', metavar='integer', dest='points',
                     type=ArgparseChecker.positive_int, required=False,
                     help='Number of rows of the table. Default: 1000.')

    simulate = subparsers.add_parser('simulate', parents=[shared, simulation],
                                     help='Monte Carlo histogram of the fundamental mode transmittance.')
    simulate.add_argument('--raw-out', metavar='file', dest='raw_out',
                          type=pathlib.Path, required=False,
                          help='Save the raw samples, one per line.')

    crosstalk = subparsers.add_parser('crosstalk', parents=[shared, simulation],
                                      help='Monte Carlo histograms of the cross-talk into the power levels.')
    crosstalk.add_argument('--n-max', metavar='integer', dest='n_max',
                           type=ArgparseChecker.positive_int, required=False,
                           help='The highest power level. Default: 4.')

    estimate = subparsers.add_parser('estimate-r0', parents=[shared],
                                     help='Estimate the Fried parameter from measured transmittance.')
    estimate.add_argument('-i', '--input', metavar='file', dest='input',
                          type=ArgparseChecker.existing_file, required=True,
                          help='CSV with one transmittance per line or "time,transmittance" pairs.')
    estimate.add_argument('--column', metavar='integer', dest='column', type=int, required=False,
                          help='The 0-based column with the transmittance. Default: the last one.')
    estimate.add_argument('--confidence', metavar='decimal', dest='confidence',
                          type=float, required=False,
                          help='Level of the confidence interval. Default: 0.95.')
    return parser


def main(argv=None):
    """
    Parse the arguments, run the command and return the exit code:
    0 success, 2 invalid input, config or unusable files, 3 numeric failure, 4 degenerate data.
    """
    args = build_parser().parse_args(argv)

    # set the root logger
    logging.getLogger().setLevel(args.logging_level)
    logging.getLogger('fsoturb').setLevel(args.logging_level)

    command = args.command
    input_path = getattr(args, 'input', None)
    settings = {k: v for k, v in vars(args).items()
                if k not in ('command', 'config_file', 'logging_level', 'input')}

    start_time = time.perf_counter()
    try:
        config = Config.from_file(args.config_file) if args.config_file else Config()
        config.set_configs(**settings)
        logger.debug(f'Settings: {config.get_serializable()}')

        if command == 'variances':
            output = cmd_variances(config)
        elif command == 'pdf':
            output = cmd_pdf(config)
        elif command == 'simulate':
            output = cmd_simulate(config)
        elif command == 'crosstalk':
            output = cmd_crosstalk(config)
        else:
            assert command == 'estimate-r0'
            output = cmd_estimate_r0(input_path, config)
        write_output(output, config.out)
    except DegenerateDataError as error:
        logger.error(f'Degenerate data: {error}')
        return EXIT_DEGENERATE
    except NumericError as error:
        logger.error(f'Numeric failure: {error}')
        return EXIT_NUMERIC
    except (ParameterError, DomainError, DataError) as error:
        logger.error(f'Invalid input: {error}')
        return EXIT_INPUT
    except OSError as error:
        logger.error(f'Cannot read or write a file: {error}')
        return EXIT_INPUT

    logger.info(f'{command} finished in {time.perf_counter() - start_time:.1f} s')
    return EXIT_OK


def command_line_script():
    sys.exit(main())
