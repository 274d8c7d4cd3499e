"""Kernel backend selection: compiled extension with pure-Python fallback.

Set ``CROWDFLOW_PURE=1`` to force the fallback (used by the benchmark and
the backend-equivalence tests).
"""

import os

from . import _kernels_py

if os.environ.get("CROWDFLOW_PURE"):
    _impl = _kernels_py
    COMPILED = False
else:
    try:
        from . import _kernels as _impl  # type: ignore[no-redef]

        COMPILED = True
    except ImportError:
        _impl = _kernels_py
        COMPILED = False

upwind_fluxes = _impl.upwind_fluxes
upwind_divergence = _impl.upwind_divergence
pgs_one_phase = _impl.pgs_one_phase
pgs_two_phase = _impl.pgs_two_phase


def backend_name() -> str:
    return "compiled" if COMPILED else "pure-python"
