"""
Exact grid sampling of Brownian bridges and the tilt transform.

Every sample owns a random stream derived from (seed, tag, index), so sample i is the same
no matter which batch or worker draws it.
"""
import numpy as np

from model import ModelParams, Path, as_vector

from errors import ValidationError


def sample_stream(seed: int, index: int, tag: int) -> np.random.Generator:
    """
    The random stream of one sample.

    Parameter
    ---------
    seed: int
        Run seed.
    index: int
        Sample index.
    tag: int
        What the stream is used for, see the *_STREAM constants.
    """
    return np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=(int(tag), int(index))))


def bridge_positions(params: ModelParams, start, end, normals: np.ndarray) -> np.ndarray:
    """
    Maps standard normal increments onto bridge positions.

    A free walk W_j with increments sqrt(sigma^2 h) * normals is turned into the bridge
    start + W_j - (j / N) (W_N - (end - start)). Leading axes of normals are sample axes.

    Parameter
    ---------
    params: ModelParams
    start, end:
        nu-vectors, or arrays of shape (..., nu) matching the leading axes of normals.
    normals: np.ndarray
        Shape (..., N, nu).

    Returns
    -------
    np.ndarray: Shape (..., N + 1, nu), first and last row equal start and end exactly.
    """
    start = np.asarray(start, dtype=float)
    end = np.asarray(end, dtype=float)
    if start.shape[-1:] != (params.nu,) or end.shape[-1:] != (params.nu,):
        raise ValidationError('start', 'end points must have {0} coordinates'.format(params.nu))
    normals = np.asarray(normals, dtype=float)
    steps = normals.shape[-2]
    walk = np.zeros(normals.shape[:-2] + (steps + 1, params.nu))
    np.cumsum(normals * np.sqrt(params.sigma2 * params.step), axis=-2, out=walk[..., 1:, :])
    ramp = (np.arange(steps + 1) / steps)[:, None]
    origin = start[..., None, :]
    positions = origin + walk - ramp * (walk[..., -1:, :] - (end - start)[..., None, :])
    positions[..., 0, :] = start
    positions[..., -1, :] = end
    return positions


def sample_bridge(params: ModelParams, start, end, total_steps: int, rng_stream: np.random.Generator) -> Path:
    """
    Samples one bridge from start to end over total_steps * h.

    Parameter
    ---------
    params: ModelParams
    start, end:
        nu-vectors.
    total_steps: int
        N >= 1.
    rng_stream: np.random.Generator
        Consumed by N * nu standard normals.

    Returns
    -------
    Path
    """
    if total_steps < 1:
        raise ValidationError('total_steps', 'must be >= 1, got {0}'.format(total_steps))
    normals = rng_stream.standard_normal((total_steps, params.nu))
    return Path(params, bridge_positions(params, start, end, normals))


def sample_normals(params: ModelParams, total_steps: int, seed: int, indices, tag: int) -> np.ndarray:
    """
    Standard normals of the samples in indices, shape (len(indices), total_steps, nu).
    """
    normals = np.empty((len(indices), total_steps, params.nu))
    for row, index in enumerate(indices):
        normals[row] = sample_stream(seed, index, tag).standard_normal((total_steps, params.nu))
    return normals


def sample_bridges(params: ModelParams, start, end, total_steps: int, seed: int, indices, tag: int) -> np.ndarray:
    """
    Batched sample_bridge, row r is the bridge of sample indices[r] on its own stream.

    Returns
    -------
    np.ndarray: Shape (len(indices), total_steps + 1, nu).
    """
    if total_steps < 1:
        raise ValidationError('total_steps', 'must be >= 1, got {0}'.format(total_steps))
    return bridge_positions(params, start, end, sample_normals(params, total_steps, seed, indices, tag))


def tilt_positions(positions: np.ndarray, x) -> np.ndarray:
    """
    positions[..., j, :] + (j / N) x on the uniform grid.
    """
    positions = np.asarray(positions, dtype=float)
    steps = positions.shape[-2] - 1
    ramp = (np.arange(steps + 1) / steps)[:, None]
    return positions + ramp * np.asarray(x, dtype=float)


def tilt_path(path: Path, x) -> Path:
    """
    The tilt transform omega(t) + (t / T) x, turning a bridge ending at e into one ending at e + x.
    """
    return Path(path.params, tilt_positions(path.positions, as_vector(path.params, x)))
