from enum import Enum


class WorldMode(Enum):
    """
    Enumeration to specify, how the external particles acting on the bridge are represented.
    """
    CLASSICAL = 'classical'  # Immobile ions, omega_i(t) = x_i.
    QUANTUM = 'bosonic'  # Brownian trajectories over [0, beta], bosonic symmetrization.


class RotationForm(Enum):
    """
    Enumeration to specify, what the Haar rotations of the classical symmetrization act on.
    Both rotating forms estimate the same spherical function.
    """
    ROTATE_IONS = 'rotate-ions'  # Rotates the ion positions, keeps x.
    ROTATE_X = 'rotate-x'  # Rotates x, keeps the ions.
    NONE = 'none'  # No rotation, the unsymmetrized estimand.
