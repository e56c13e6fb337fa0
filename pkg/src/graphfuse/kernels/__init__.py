"""Segment-reduction kernels with a compiled core and a numpy fallback.

The compiled extension is optional: if it failed to build (or the environment
variable ``GRAPHFUSE_KERNELS=numpy`` forces the fallback) the pure-numpy
implementations are used instead. Both produce bit-identical results; the
compiled path just walks the edge list in C.

``GRAPHFUSE_KERNELS=c`` demands the compiled backend and raises if it is
unavailable, which the benchmark uses to make sure it is comparing two
different things.
"""

import os

from .. import errors
from . import _segment_np

_requested = os.environ.get("GRAPHFUSE_KERNELS", "").strip().lower()

if _requested not in ("", "c", "numpy"):
    raise errors.ConfigError(
        f"GRAPHFUSE_KERNELS must be 'c' or 'numpy', got {_requested!r}")

_impl = None
if _requested in ("", "c"):
    try:
        from . import _segment_c as _impl
    except ImportError:
        if _requested == "c":
            raise errors.ConfigError(
                "GRAPHFUSE_KERNELS=c but the compiled extension is not "
                "available; reinstall with a C compiler present")
        _impl = None
if _impl is None:
    _impl = _segment_np

segment_sum = _impl.segment_sum
segment_max = _impl.segment_max


def backend() -> str:
    """Name of the active backend: 'c' or 'numpy'."""
    return _impl.BACKEND


__all__ = ["segment_sum", "segment_max", "backend"]
