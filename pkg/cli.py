#!/usr/bin/python3
"""
Experiment runner.

    python cli.py ratio-scan --potential coulomb --nu 3 --soft-core 0.05 --n 4 --x 0,0.5,1,2 --samples 100000 --seed 7

Every subcommand writes <command>.csv (last column pass), <command>.dat (x, value, stderr) and
<command>.manifest.json into the output directory. The exit code is 0 if every declared contract passed,
1 if one failed, 2 for usage or configuration errors and 3 for unexpected errors, which are appended to error.log.
"""
import argparse
import csv
import datetime
import math
import os
import sys
import traceback

import numpy as np

from configuration import COMMAND_KEYS, FLAG, load_config, potential_block, resolve, save_manifest
from estimators import SampleRunner, check_tilt_identity, convexity_scan, estimate_laplacian_I, estimate_ratio
from model import gaussian_factor, make_params
from potentials import build_potential, scale, superharmonic_density, verify_superharmonic
from selftest import run_selftest
from symmetrize import SymmetrizationConfig, theorem2_check
from world_mode import RotationForm, WorldMode

from errors import BridgeError, ConfigError, DomainError, ModeError, SizeError, ValidationError

from constants import ERROR_LOG, FLOAT_FORMAT, IDENTITY_SIGMAS, LOWER_BOUND_SIGMAS

USAGE_ERRORS = (ConfigError, ValidationError, DomainError, ModeError, SizeError)


class ResultWriter:
    """
    Writes the csv, plot and manifest files of one run.

    Attributes
    ----------
    directory: str
        Output directory, created on demand.
    """

    def __init__(self, directory: str, verbose: bool = False):
        self.directory = directory
        self._verbose = verbose
        os.makedirs(directory, exist_ok=True)

    @staticmethod
    def format_value(value) -> str:
        if isinstance(value, (bool, np.bool_)):
            return '1' if value else '0'
        if isinstance(value, (int, np.integer)):
            return str(int(value))
        if isinstance(value, (float, np.floating)):
            return FLOAT_FORMAT.format(float(value))
        return str(value)

    def write_csv(self, name: str, header: list, rows: list):
        path = os.path.join(self.directory, '{0}.csv'.format(name))
        with open(path, mode='w', encoding='utf-8', newline='') as csv_file:
            writer = csv.writer(csv_file, lineterminator='\n')
            writer.writerow(header)
            for row in rows:
                writer.writerow([self.format_value(value) for value in row])
        if self._verbose:
            print('[cli] wrote {0}'.format(path))

    def write_plot(self, name: str, rows: list):
        """
        Whitespace separated x, value, stderr.
        """
        path = os.path.join(self.directory, '{0}.dat'.format(name))
        with open(path, mode='w', encoding='utf-8', newline='\n') as plot_file:
            plot_file.write('# x value stderr\n')
            for x, value, stderr in rows:
                plot_file.write('{0} {1} {2}\n'.format(*(self.format_value(float(entry)) for entry in (x, value, stderr))))

    def write_manifest(self, command: str, config: dict):
        save_manifest(os.path.join(self.directory, '{0}.manifest.json'.format(command)), command, config)


def _point(nu: int, radius: float) -> np.ndarray:
    """
    x = radius * e_1.
    """
    point = np.zeros(nu)
    point[0] = radius
    return point


def _runner(config: dict, label: str) -> SampleRunner:
    return SampleRunner(config['workers'], config['batch_size'], config['verbose'], label)


def _potential(config: dict):
    return build_potential(config['potential'], config['nu'], potential_block(config))


def _params(config: dict, n: int):
    return make_params(config['nu'], config['beta'], n, config['J'], config['wavelength'])


def _say(config: dict, command: str, message: str):
    if config['verbose']:
        print('[{0}] {1}'.format(command, message))


# region commands

def verify_potential(config: dict, writer: ResultWriter) -> bool:
    pot = _potential(config)
    grid = np.geomspace(config['s_min'], config['s_max'], config['points'])
    report = verify_superharmonic(pot, config['nu'], grid)
    _say(config, 'verify-potential', '{0}: worst {1} at s={2}'.format(pot.label, report.worst_value, report.worst_s))
    writer.write_csv('verify-potential', ['potential', 'nu', 'worst_value', 'worst_s', 'claims_superharmonic', 'pass'],
                     [[pot.label, config['nu'], report.worst_value, report.worst_s, pot.claims_superharmonic, report.passed]])
    with np.errstate(all='ignore'):
        density = superharmonic_density(pot, config['nu'], grid)
    writer.write_plot('verify-potential', [(s, value, 0.0) for s, value in zip(grid, density)])
    return report.passed


def ratio_scan(config: dict, writer: ResultWriter) -> bool:
    pot = _potential(config)
    certified = pot.claims_superharmonic
    passed = True
    for n in config['n']:
        params = _params(config, n)
        rows, plot = [], []
        for radius in config['x']:
            point = _point(config['nu'], radius)
            estimate = estimate_ratio(params, pot, point, config['samples'], config['seed'], _runner(config, 'ratio-scan'), check_sign=certified)
            full = estimate.scaled(gaussian_factor(params, point))
            row_passed = not certified or (estimate.at_least(1.0, LOWER_BOUND_SIGMAS) and estimate.diagnostics.sign_violations == 0)
            passed = passed and row_passed
            _say(config, 'ratio-scan', 'n={0} x={1} ratio={2:.6g} +- {3:.2g}'.format(n, radius, estimate.mean, estimate.stderr))
            rows.append([radius, estimate.mean, estimate.stderr, full.mean, row_passed])
            plot.append((radius, estimate.mean, estimate.stderr))
        writer.write_csv('ratio-scan-n{0}'.format(n), ['x', 'ratio', 'stderr', 'full_ratio', 'pass'], rows)
        writer.write_plot('ratio-scan-n{0}'.format(n), plot)
    return passed


def laplacian_check(config: dict, writer: ResultWriter) -> bool:
    pot = _potential(config)
    certified = pot.claims_superharmonic
    params = _params(config, config['n'])
    rows, plot, passed = [], [], True
    for radius in config['x']:
        estimate = estimate_laplacian_I(params, pot, _point(config['nu'], radius), config['samples'], config['seed'], _runner(config, 'laplacian-check'))
        diagnostics = estimate.diagnostics
        row_passed = not certified or (estimate.at_least(0.0, LOWER_BOUND_SIGMAS) and diagnostics.nonnegative_fraction == 1.0)
        passed = passed and row_passed
        _say(config, 'laplacian-check', 'x={0} value={1:.6g} fraction={2}'.format(radius, estimate.mean, diagnostics.nonnegative_fraction))
        rows.append([radius, estimate.mean, estimate.stderr, diagnostics.nonnegative_fraction, diagnostics.sign_violations, row_passed])
        plot.append((radius, estimate.mean, estimate.stderr))
    writer.write_csv('laplacian-check', ['x', 'value', 'stderr', 'nonnegative_fraction', 'sign_violations', 'pass'], rows)
    writer.write_plot('laplacian-check', plot)
    return passed


def convexity(config: dict, writer: ResultWriter) -> bool:
    pot = _potential(config)
    certified = pot.claims_superharmonic
    params = _params(config, config['n'])
    scan = convexity_scan(params, pot, _point(config['nu'], 1.0), config['x'], config['samples'], config['seed'], _runner(config, 'convexity-scan'))
    rows, plot, passed = [], [], True
    for row in scan:
        convex = math.isnan(row.second_difference) or row.second_difference >= -LOWER_BOUND_SIGMAS * row.second_stderr
        even = abs(row.even_difference) <= LOWER_BOUND_SIGMAS * row.even_stderr
        row_passed = not certified or (convex and even)
        passed = passed and row_passed
        rows.append([row.radius, row.ratio.mean, row.ratio.stderr, row.second_difference, row.second_stderr,
                     row.even_difference, row.even_stderr, row_passed])
        plot.append((row.radius, row.ratio.mean, row.ratio.stderr))
    writer.write_csv('convexity-scan', ['x', 'ratio', 'stderr', 'second_difference', 'second_stderr', 'even_difference', 'even_stderr', 'pass'], rows)
    writer.write_plot('convexity-scan', plot)
    return passed


def tilt_check(config: dict, writer: ResultWriter) -> bool:
    pot = _potential(config)
    params = _params(config, config['n'])
    rows, plot, passed = [], [], True
    for radius in config['x']:
        estimate = check_tilt_identity(params, pot, _point(config['nu'], radius), config['samples'], config['seed'], _runner(config, 'tilt-check'))
        row_passed = abs(estimate.mean) <= IDENTITY_SIGMAS * estimate.stderr
        passed = passed and row_passed
        _say(config, 'tilt-check', 'x={0} D={1:.3g} +- {2:.2g}'.format(radius, estimate.mean, estimate.stderr))
        rows.append([radius, estimate.mean, estimate.stderr, row_passed])
        plot.append((radius, estimate.mean, estimate.stderr))
    writer.write_csv('tilt-check', ['x', 'difference', 'stderr', 'pass'], rows)
    writer.write_plot('tilt-check', plot)
    return passed


def external_scan(config: dict, writer: ResultWriter) -> bool:
    u1 = _potential(config)
    mode = WorldMode(config['mode'])
    params = _params(config, config['n'])
    symmetrization = SymmetrizationConfig(
        params=params, mode=mode, u1=u1, u3=scale(u1, config['u3_scale']), u2=scale(u1, config['u2_scale']),
        ions=config['ions'] if mode == WorldMode.CLASSICAL else None, M=config['M'], L=config['L'], samples=config['samples'],
        rotations=config['rotations'], seed=config['seed'], workers=config['workers'], world_wavelength=config['world_wavelength'],
        batch_size=config['batch_size'], form=RotationForm(config['form']), verbose=config['verbose'])
    report = theorem2_check(symmetrization, config['x'])
    rows, plot = [], []
    for row in report.rows:
        radius = float(row.x[0])
        difference = row.form_difference
        unsymmetrized = row.unsymmetrized
        rows.append([radius, row.ratio.mean, row.ratio.stderr, row.full_ratio.mean,
                     unsymmetrized.mean if unsymmetrized else math.nan, unsymmetrized.stderr if unsymmetrized else math.nan,
                     difference.mean if difference else math.nan, difference.stderr if difference else math.nan, row.passed])
        plot.append((radius, row.ratio.mean, row.ratio.stderr))
    writer.write_csv('external-scan', ['x', 'ratio', 'stderr', 'full_ratio', 'unsymmetrized_ratio', 'unsymmetrized_stderr',
                                       'form_difference', 'form_difference_stderr', 'pass'], rows)
    writer.write_plot('external-scan', plot)
    _say(config, 'external-scan', 'sign violations: {0}'.format(report.diagnostics.sign_violations))
    return report.passed


def selftest(config: dict, writer: ResultWriter) -> bool:
    results = run_selftest(config['samples'], config['seed'], config['verbose'])
    writer.write_csv('selftest', ['check', 'pass'], results)
    return all(passed for _, passed in results)

# endregion commands

COMMANDS = {
    'verify-potential': verify_potential,
    'ratio-scan': ratio_scan,
    'laplacian-check': laplacian_check,
    'convexity-scan': convexity,
    'tilt-check': tilt_check,
    'external-scan': external_scan,
    'selftest': selftest,
}


def build_parser() -> argparse.ArgumentParser:
    """
    One subparser per command, one --key-with-dashes flag per config key. Flags default to None.
    """
    parser = argparse.ArgumentParser(prog='cli.py', description='Brownian bridge self-interaction experiments.')
    commands = parser.add_subparsers(dest='command', required=True)
    for command, keys in COMMAND_KEYS.items():
        subparser = commands.add_parser(command)
        subparser.add_argument('--config', default=None, help='json config file or manifest')
        for key, (kind, default) in keys.items():
            flag = '--{0}'.format(key.replace('_', '-'))
            if kind == FLAG:
                subparser.add_argument(flag, dest=key, action='store_const', const=True, default=None)
            else:
                subparser.add_argument(flag, dest=key, default=None, help='default: {0}'.format(default))
    return parser


def run(argv=None) -> int:
    """
    Runs one subcommand.

    Parameter
    ---------
    argv: list
        Command line arguments without the program name, sys.argv[1:] by default.

    Returns
    -------
    int: 0 if every contract passed, 1 if one failed, 2 for usage and configuration errors.
    """
    parser = build_parser()
    try:
        arguments = vars(parser.parse_args(argv))
    except SystemExit as exit_request:
        return 0 if exit_request.code in (0, None) else 2
    command = arguments.pop('command')
    config_path = arguments.pop('config')
    try:
        file_config = load_config(config_path) if config_path else None
        config = resolve(command, file_config, arguments)
        writer = ResultWriter(config['output'], config['verbose'])
        writer.write_manifest(command, config)
        passed = COMMANDS[command](config, writer)
    except USAGE_ERRORS as exception:
        print('[{0}] error: {1}'.format(command, exception), file=sys.stderr)
        return 2
    except BridgeError as exception:
        print('[{0}] failed: {1}'.format(command, exception), file=sys.stderr)
        return 1
    return 0 if passed else 1


def log_error(exception: Exception, component: str = 'cli'):
    """
    Tries to append the error log file with exception.
    If not possible to write to file, prints the traceback to the console.
    """
    try:
        error_str = '[{0}|{1}] {2}\nTraceback:\n{3}'.format(component, datetime.datetime.now().isoformat(), str(exception), traceback.format_exc())
        with open(ERROR_LOG, 'a', encoding='utf-8') as log_file:
            log_file.write(error_str)
    except Exception:
        # If the logging into a file failes, the error is printed to the command line.
        traceback.print_exc()


def main(argv=None) -> int:
    try:
        return run(argv)
    except Exception as exception:
        log_error(exception)
        print('unexpected error, see {0}'.format(ERROR_LOG), file=sys.stderr)
        return 3


if __name__ == '__main__':
    sys.exit(main(sys.argv[1:]))
