"""Pure-numpy segment reductions (fallback backend).

Accumulation order matters for bit-identical results across backends:
``np.bincount`` sums sequentially over the input, which is exactly the order
the C loop uses, so both backends agree to the last bit.
"""

import numpy as np

BACKEND = "numpy"


def segment_sum(values: np.ndarray, segments: np.ndarray, num_segments: int) -> np.ndarray:
    """Sum rows of ``values`` (E, K) into ``num_segments`` buckets.

    Empty segments come back as zero rows.
    """
    values = np.ascontiguousarray(values, dtype=np.float64)
    segments = np.ascontiguousarray(segments, dtype=np.int64)
    out = np.empty((num_segments, values.shape[1]), dtype=np.float64)
    for k in range(values.shape[1]):
        out[:, k] = np.bincount(segments, weights=values[:, k],
                                minlength=num_segments)
    return out


def segment_max(values: np.ndarray, segments: np.ndarray, num_segments: int) -> np.ndarray:
    """Per-segment maximum of rows of ``values`` (E, K).

    Empty segments come back as -inf rows (the identity of max).
    """
    values = np.ascontiguousarray(values, dtype=np.float64)
    segments = np.ascontiguousarray(segments, dtype=np.int64)
    out = np.full((num_segments, values.shape[1]), -np.inf, dtype=np.float64)
    np.maximum.at(out, segments, values)
    return out
