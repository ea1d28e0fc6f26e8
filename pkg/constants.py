"""
Constant values for the bridge sampler, the estimators and the experiment runner.
"""
from numpy import pi

# region units

DEFAULT_BETA = 1.0
"""
float:
Inverse temperature beta, the time span of one leg.
"""

DEFAULT_WAVELENGTH = 1.0
"""
float:
Thermal wavelength at beta. All lengths are measured in this unit.
"""

DEFAULT_NU = int(3)
"""
int:
Dimension of space.
"""

DEFAULT_LEGS = int(4)
"""
int:
Number of legs n, the bridge spans the time n * beta.
"""

DEFAULT_SLICES = int(8)
"""
int:
Quadrature slices J per leg, the time step is beta / J.
"""

TWO_PI = 2.0 * pi
"""
float:
Used by the diffusion rate sigma^2 = wavelength^2 / (2 pi beta).
"""

# endregion units

# region potentials

SUPERHARMONIC_GRID_MIN = 1e-3
"""
float:
Smallest s = |y|^2 of the default superharmonicity grid.
"""

SUPERHARMONIC_GRID_MAX = 1e3
"""
float:
Largest s = |y|^2 of the default superharmonicity grid.
"""

SUPERHARMONIC_GRID_POINTS = int(200)
"""
int:
Number of log-spaced points of the default superharmonicity grid.
"""

SUPERHARMONIC_TOLERANCE = 1e-12
"""
float:
Relative slack allowed for nu f'(s) + 2 s f''(s) <= 0, scaled by the size of the terms.
"""

SPEC_CHECK_POINTS = int(50)
"""
int:
Number of log-spaced points on which g >= 0 is checked when a PotentialSpec is built.
"""

ODE_ABSOLUTE_TOLERANCE = 1e-14
"""
float:
Absolute tolerance of the nested radial ode quadrature.
"""

ODE_RELATIVE_TOLERANCE = 1e-10
"""
float:
Relative tolerance of the nested radial ode quadrature.
"""

ODE_TABLE_MIN = 1e-4
"""
float:
Smallest s tabulated for an ode backed potential.
"""

ODE_TABLE_MAX = 1e4
"""
float:
Largest s tabulated for an ode backed potential.
"""

ODE_TABLE_POINTS = int(240)
"""
int:
Number of log-spaced table points of an ode backed potential.
"""

# endregion potentials

# region sampling

BRIDGE_STREAM = int(0)
"""
int:
Stream tag of the main bridge omega_0.
"""

ROTATION_STREAM = int(1)
"""
int:
Stream tag of the Haar rotations of a sample.
"""

WORLD_STREAM = int(2)
"""
int:
Stream tag of the external world (ion positions and their bridges) of a sample.
"""

TILTED_STREAM = int(3)
"""
int:
Stream tag of the tilted 0 -> 0 bridges of the tilt check.
"""

DIRECT_STREAM = int(4)
"""
int:
Stream tag of the direct 0 -> x bridges of the tilt check.
"""

BATCH_SIZE = int(512)
"""
int:
Samples per batch. Independent of the worker count, so results do not depend on it.
"""

BATCH_ELEMENTS = int(32768)
"""
int:
Upper bound of samples times inner repetitions (rotations, permutations) per batch.
"""

# endregion sampling

# region estimators

ENERGY_CLAMP = 700.0
"""
float:
Energies below -ENERGY_CLAMP are clamped and counted, exp(700) is still a finite double.
"""

DEFAULT_SAMPLES = int(100000)
"""
int:
Default number of bridges per estimate.
"""

DEFAULT_SOFT_CORE = 0.05
"""
float:
Default soft-core radius epsilon used by the experiment runner.
"""

LOWER_BOUND_SIGMAS = 3.0
"""
float:
Standard errors allowed below a lower bound before a contract fails.
"""

IDENTITY_SIGMAS = 4.0
"""
float:
Standard errors allowed for an identity check (tilt, form equivalence).
"""

MAX_PERMUTED = int(8)
"""
int:
Largest number of external particles whose permutations are enumerated exactly.
"""

DEFAULT_ROTATIONS = int(64)
"""
int:
Haar rotations drawn per bridge in the classical symmetrization.
"""

QUADRATURE_MAX_DIMENSION = int(6)
"""
int:
Largest dimension of the tensor Gauss-Hermite oracle.
"""

# endregion estimators

# region output

CODE_VERSION = '1.0.0'
"""
str:
Written into every run manifest.
"""

DEFAULT_SEED = int(7)
"""
int:
Seed used when neither the command line, the config file nor SELFBRIDGE_SEED sets one.
"""

SEED_ENVIRONMENT_VARIABLE = 'SELFBRIDGE_SEED'
"""
str:
Environment variable holding the default seed.
"""

DEFAULT_OUTPUT_DIRECTORY = 'results'
"""
str:
Directory the csv, plot and manifest files are written to.
"""

FLOAT_FORMAT = '{:.17g}'
"""
str:
Format of every float written to a csv or plot file, 17 significant digits.
"""

ERROR_LOG = 'error.log'
"""
str:
File unexpected errors of the experiment runner are appended to.
"""

# endregion output
