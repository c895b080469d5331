"""Kernel backend selection.

The compiled Cython extension is preferred when it imported cleanly; otherwise
the NumPy fallback is used.  Set QUBITCORR_FORCE_FALLBACK=1 to skip the
extension (used by the benchmark and the backend-equivalence tests).
"""

from __future__ import annotations

import os

if os.environ.get("QUBITCORR_FORCE_FALLBACK", "") not in ("", "0"):
    from . import _kernels_py as _impl

    BACKEND = "numpy"
else:
    try:
        from . import _kernels as _impl  # type: ignore[attr-defined]

        BACKEND = "cython"
    except ImportError:
        from . import _kernels_py as _impl

        BACKEND = "numpy"

simulate_block_ito = _impl.simulate_block_ito
simulate_block_stratonovich = _impl.simulate_block_stratonovich


def backend_name() -> str:
    return BACKEND
