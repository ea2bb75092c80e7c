"""Kernel selection: compiled extension when available, pure Python otherwise.

Set ``POLESTAR_PURE_PYTHON=1`` to force the fallback (used by the benchmark
and by tests that compare the two implementations).
"""

import os

from . import _pykernel

if os.environ.get("POLESTAR_PURE_PYTHON"):
    csr_dijkstra = _pykernel.csr_dijkstra
    KERNEL = "python"
else:
    try:
        from . import _ckernel

        csr_dijkstra = _ckernel.csr_dijkstra
        KERNEL = "compiled"
    except ImportError:
        csr_dijkstra = _pykernel.csr_dijkstra
        KERNEL = "python"

__all__ = ["csr_dijkstra", "KERNEL"]
