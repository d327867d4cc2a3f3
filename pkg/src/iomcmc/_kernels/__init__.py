"""Backend selection: compiled Cython kernels when available, numpy otherwise.

Set IOMCMC_PURE_PYTHON=1 to force the fallback (used by the benchmark and
the backend-equivalence tests).
"""
import os

if os.environ.get("IOMCMC_PURE_PYTHON"):
    from . import _purepy as backend
else:
    try:
        from . import _core as backend  # type: ignore[attr-defined]
    except ImportError:
        from . import _purepy as backend

BACKEND = backend.NAME
pcn_dense_chain = backend.pcn_dense_chain
lumpy_walk_chain = backend.lumpy_walk_chain
