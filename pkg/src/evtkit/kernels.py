"""Kernel dispatch: compiled Cython loops when built, numpy otherwise.

Set ``EVTKIT_PURE_PYTHON=1`` before import to force the fallback.
"""

import os

BACKEND = "python"

if not os.environ.get("EVTKIT_PURE_PYTHON"):
    try:
        from evtkit._kernels import gpd_nll_derivs, stationary_indices

        BACKEND = "cython"
    except ImportError:  # pragma: no cover - depends on build
        pass

if BACKEND == "python":
    from evtkit._kernels_py import gpd_nll_derivs, stationary_indices

__all__ = ["BACKEND", "gpd_nll_derivs", "stationary_indices"]
