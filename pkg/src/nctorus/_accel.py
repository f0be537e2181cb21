"""Select the compiled kernels if built, else the numpy fallback.

Set ``NCTORUS_PURE_PYTHON=1`` to force the fallback.
"""
import os

BACKEND = "python"
if os.environ.get("NCTORUS_PURE_PYTHON", "") not in ("", "0"):
    from ._kernels_py import shell_minima, twisted_convolve
else:
    try:
        from ._kernels import shell_minima, twisted_convolve
        BACKEND = "cython"
    except ImportError:
        from ._kernels_py import shell_minima, twisted_convolve

__all__ = ["BACKEND", "shell_minima", "twisted_convolve"]
