"""Backend selection for the per-step hot kernels.

The compiled Cython module is preferred when it importable; otherwise the
numpy/scipy fallback provides identical semantics.  Setting the
environment variable WAVEKIN_NO_ACCEL=1 before import forces the fallback
(useful for benchmarking and parity testing).
"""

from __future__ import annotations

import os

from . import fallback

compiled = None
if not os.environ.get("WAVEKIN_NO_ACCEL"):
    try:
        from . import _core as compiled  # type: ignore[no-redef]
    except ImportError:
        compiled = None

HAVE_COMPILED = compiled is not None
backend = compiled if HAVE_COMPILED else fallback

gaussian_kernel = backend.gaussian_kernel
diffusion_fields = backend.diffusion_fields
bundle_rates = backend.bundle_rates

__all__ = [
    "HAVE_COMPILED",
    "backend",
    "compiled",
    "fallback",
    "gaussian_kernel",
    "diffusion_fields",
    "bundle_rates",
]
