"""Counter-based random streams for reproducible parallel Monte Carlo.

Every stochastic kernel in the package draws its randomness through
`stream_normals(seed, stream, step, shape)`.  The Philox counter is keyed by
(seed, stream, step), so the noise consumed by a given (stream, step) pair is
a pure function of those integers: results do not depend on scheduling, on
how many workers touch the ensemble, or on what was drawn at other steps.
Within one call, row i of the returned array is the noise for sample i.
"""

import numpy as np

__all__ = ["stream_normals", "stream_generator"]

_MASK64 = (1 << 64) - 1


def stream_generator(seed: int, stream: int, step: int) -> np.random.Generator:
    """Generator positioned at the (seed, stream, step) counter block."""
    key = np.array([seed & _MASK64, (seed >> 64) & _MASK64], dtype=np.uint64)
    counter = np.array([0, 0, step & _MASK64, stream & _MASK64], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key, counter=counter))


def stream_normals(seed: int, stream: int, step: int, shape) -> np.ndarray:
    """Standard normals, a pure function of (seed, stream, step, shape)."""
    return stream_generator(seed, stream, step).standard_normal(shape)
