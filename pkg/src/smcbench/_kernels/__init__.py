"""Backend selection for the arithmetic kernels.

The compiled extension is used when it imported successfully and the modulus
fits in 64 bits; otherwise every call routes to the pure-Python reference.
Set ``SMCBENCH_PURE=1`` to force the pure backend (useful for benchmarking
and for debugging the extension).
"""

import os

from . import pure

if os.environ.get("SMCBENCH_PURE", "") not in ("", "0"):
    _compiled = None
else:
    try:
        from . import _core as _compiled
    except ImportError:  # extension not built; pure fallback
        _compiled = None

BACKEND = "pure" if _compiled is None else "compiled"

# Compiled kernels use 128-bit intermediates of 64-bit operands; anything at
# or above 2**62 goes to the big-int path to keep a comfortable margin.
U64_MODULUS_LIMIT = 1 << 62


def impl_for(p):
    """Kernel module appropriate for modulus p."""
    if _compiled is not None and p < U64_MODULUS_LIMIT:
        return _compiled
    return pure
