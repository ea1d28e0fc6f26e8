"""
Experiment configuration: defaults, json config files, command line overrides and run manifests.

A config file is a json object with one flat object per subcommand, for example
    {"ratio-scan": {"potential": "coulomb", "soft_core": 0.05, "n": [2, 4, 8]}}
A top-level "manifest" object is ignored on input, so a written manifest can be fed back with --config.
"""
import math
import os

from json import dumps, loads
from os.path import isfile

from world_mode import RotationForm, WorldMode

from errors import ConfigError

from constants import BATCH_SIZE, CODE_VERSION, DEFAULT_BETA, DEFAULT_LEGS, DEFAULT_NU, DEFAULT_OUTPUT_DIRECTORY, DEFAULT_ROTATIONS, DEFAULT_SAMPLES, DEFAULT_SEED, DEFAULT_SLICES, DEFAULT_SOFT_CORE, DEFAULT_WAVELENGTH, SEED_ENVIRONMENT_VARIABLE, SUPERHARMONIC_GRID_MAX, SUPERHARMONIC_GRID_MIN, SUPERHARMONIC_GRID_POINTS

# converters by kind
FLOAT, INTEGER, TEXT, FLOATS, INTEGERS, OPTIONAL_FLOAT, FLAG, CHOICE = 'float', 'int', 'str', 'floats', 'ints', 'optional-float', 'bool', 'choice'

CHOICES = {
    'mode': {**{mode.value: mode.value for mode in WorldMode}, 'quantum': WorldMode.QUANTUM.value},
    'form': {form.value: form.value for form in RotationForm},
}
"""
dict:
Accepted spellings of every choice key as key -> (spelling -> canonical value).
"""

POTENTIAL_KEYS = {
    'potential': (TEXT, 'coulomb'),
    'nu': (INTEGER, DEFAULT_NU),
    'sign': (INTEGER, 1),
    'alpha': (FLOAT, 4.0),
    'coefficient': (FLOAT, 1.0),
    'g_coefficient': (FLOAT, 1.0),
    'g_exponent': (FLOAT, 4.0),
    'a': (FLOAT, math.inf),
    'b': (FLOAT, math.inf),
    'c1': (FLOAT, 0.0),
    'c2': (FLOAT, 0.0),
    'soft_core': (FLOAT, DEFAULT_SOFT_CORE),
}
"""
dict:
Keys building the potential u1, see potentials.build_potential.
"""

RUN_KEYS = {
    'output': (TEXT, DEFAULT_OUTPUT_DIRECTORY),
    'verbose': (FLAG, False),
}

SAMPLING_KEYS = {
    'beta': (FLOAT, DEFAULT_BETA),
    'wavelength': (FLOAT, DEFAULT_WAVELENGTH),
    'J': (INTEGER, DEFAULT_SLICES),
    'samples': (INTEGER, DEFAULT_SAMPLES),
    'seed': (INTEGER, None),
    'workers': (INTEGER, 1),
    'batch_size': (INTEGER, BATCH_SIZE),
}

COMMAND_KEYS = {
    'verify-potential': {
        **POTENTIAL_KEYS, **RUN_KEYS,
        'soft_core': (FLOAT, 0.0),
        's_min': (FLOAT, SUPERHARMONIC_GRID_MIN),
        's_max': (FLOAT, SUPERHARMONIC_GRID_MAX),
        'points': (INTEGER, SUPERHARMONIC_GRID_POINTS),
    },
    'ratio-scan': {
        **POTENTIAL_KEYS, **SAMPLING_KEYS, **RUN_KEYS,
        'n': (INTEGERS, [2, 4, 8]),
        'x': (FLOATS, [0.0, 0.5, 1.0, 2.0]),
    },
    'laplacian-check': {
        **POTENTIAL_KEYS, **SAMPLING_KEYS, **RUN_KEYS,
        'n': (INTEGER, DEFAULT_LEGS),
        'x': (FLOATS, [0.0, 0.5, 1.0, 2.0]),
    },
    'convexity-scan': {
        **POTENTIAL_KEYS, **SAMPLING_KEYS, **RUN_KEYS,
        'n': (INTEGER, DEFAULT_LEGS),
        'x': (FLOATS, [-2.0, -1.0, -0.5, 0.0, 0.5, 1.0, 2.0]),
    },
    'tilt-check': {
        **POTENTIAL_KEYS, **SAMPLING_KEYS, **RUN_KEYS,
        'n': (INTEGER, 2),
        'x': (FLOATS, [1.0]),
    },
    'external-scan': {
        **POTENTIAL_KEYS, **SAMPLING_KEYS, **RUN_KEYS,
        'n': (INTEGER, DEFAULT_LEGS),
        'x': (FLOATS, [0.0, 0.5, 1.0, 2.0]),
        'mode': (CHOICE, WorldMode.CLASSICAL.value),
        'ions': (FLOATS, [1.0, 0.0, 0.0, -1.0, 0.0, 0.0]),
        'M': (INTEGER, 2),
        'L': (FLOAT, 2.0),
        'rotations': (INTEGER, DEFAULT_ROTATIONS),
        'u2_scale': (FLOAT, 1.0),
        'u3_scale': (FLOAT, -1.0),
        'world_wavelength': (OPTIONAL_FLOAT, None),
        'form': (CHOICE, RotationForm.ROTATE_X.value),
    },
    'selftest': {
        **RUN_KEYS,
        'samples': (INTEGER, 2000),
        'seed': (INTEGER, None),
    },
}
"""
dict:
Valid keys of every subcommand as key -> (kind, default).
"""


def default_seed() -> int:
    """
    The seed from the environment variable SELFBRIDGE_SEED, else DEFAULT_SEED.
    """
    value = os.environ.get(SEED_ENVIRONMENT_VARIABLE)
    if value is None or value.strip() == '':
        return DEFAULT_SEED
    try:
        return int(value)
    except ValueError:
        raise ConfigError('{0} must be an integer, got {1!r}'.format(SEED_ENVIRONMENT_VARIABLE, value))


def _split(value):
    if isinstance(value, str):
        return [part for part in value.replace(' ', '').split(',') if part != '']
    if isinstance(value, (list, tuple)):
        return list(value)
    return [value]


def convert(key: str, kind: str, value):
    """
    Converts a raw value from a config file or the command line into its kind.
    """
    try:
        if kind == FLOAT:
            return float(value)
        if kind == INTEGER:
            if isinstance(value, float) and not value.is_integer():
                raise ValueError(value)
            return int(value)
        if kind == TEXT:
            return str(value)
        if kind == FLOATS:
            return [float(part) for part in _split(value)]
        if kind == INTEGERS:
            return [int(part) for part in _split(value)]
        if kind == OPTIONAL_FLOAT:
            return None if value is None or value == '' or value == 'none' else float(value)
        if kind == FLAG:
            if isinstance(value, str):
                return value.lower() in ('1', 'true', 'yes')
            return bool(value)
        if kind == CHOICE:
            spellings = CHOICES[key]
            if not isinstance(value, str) or value.lower() not in spellings:
                raise ConfigError('{0}: {1!r} is not one of {2}'.format(key, value, ', '.join(sorted(spellings))))
            return spellings[value.lower()]
    except ConfigError:
        raise
    except (TypeError, ValueError):
        raise ConfigError('{0}: cannot read {1!r} as {2}'.format(key, value, kind))
    raise ConfigError('{0}: unknown kind {1}'.format(key, kind))


def load_config(path: str) -> dict:
    """
    Reads a json config file. Unknown subcommands raise ConfigError listing the valid ones.

    Returns
    -------
    dict: subcommand -> dict of raw values.
    """
    if not isfile(path):
        raise ConfigError('config file {0} does not exist'.format(path))
    with open(path, encoding='utf-8') as config_file:
        try:
            content = loads(config_file.read())
        except ValueError as exception:
            raise ConfigError('config file {0} is no valid json: {1}'.format(path, exception))
    if not isinstance(content, dict):
        raise ConfigError('config file {0} must hold a json object'.format(path))
    content.pop('manifest', None)
    for section, values in content.items():
        if section not in COMMAND_KEYS:
            raise ConfigError('unknown section {0!r}'.format(section), COMMAND_KEYS.keys())
        if not isinstance(values, dict):
            raise ConfigError('section {0!r} must be a json object'.format(section))
    return content


def resolve(command: str, file_config: dict = None, overrides: dict = None) -> dict:
    """
    The configuration of a run, constants < config file section < command line flags.

    Parameter
    ---------
    command: str
        Subcommand.
    file_config: dict
        Result of load_config or None.
    overrides: dict
        Flag values, None means not given.

    Returns
    -------
    dict: key -> converted value, always with a seed.
    """
    keys = COMMAND_KEYS[command]
    config = {key: default for key, (_, default) in keys.items()}
    for source in ((file_config or {}).get(command, {}), overrides or {}):
        for key, value in source.items():
            if key not in keys:
                raise ConfigError('unknown key {0!r} for {1}'.format(key, command), keys.keys())
            if value is not None:
                config[key] = convert(key, keys[key][0], value)
    if 'seed' in config and config['seed'] is None:
        config['seed'] = default_seed()
    return config


def manifest_string(command: str, config: dict) -> str:
    """
    The manifest of a run as sorted json, readable by load_config.
    """
    content = {'manifest': {'code_version': CODE_VERSION, 'command': command}, command: config}
    return dumps(content, sort_keys=True, indent=4) + '\n'


def save_manifest(path: str, command: str, config: dict):
    """
    Writes the manifest of a run.
    """
    with open(path, mode='w', encoding='utf-8', newline='\n') as manifest_file:
        manifest_file.write(manifest_string(command, config))


def potential_block(config: dict) -> dict:
    """
    The potential keys of a resolved config, as expected by potentials.build_potential.
    """
    return {key: config[key] for key in POTENTIAL_KEYS if key not in ('potential', 'nu')}
