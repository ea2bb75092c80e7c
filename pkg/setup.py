"""Build script for the optional compiled search kernel.

The engine runs without the extension (a pure-Python kernel is selected at
import time), so a failed compile only costs speed, never functionality.
"""

import sys

from setuptools import Extension, setup


def _extensions():
    try:
        import numpy
        from Cython.Build import cythonize
    except ImportError:
        return []
    ext = Extension(
        "polestar.kernels._ckernel",
        ["src/polestar/kernels/_ckernel.pyx"],
        include_dirs=[numpy.get_include()],
    )
    try:
        return cythonize([ext], language_level=3)
    except Exception as exc:  # pragma: no cover - toolchain dependent
        print(f"cythonize failed ({exc}); building without compiled kernel", file=sys.stderr)
        return []


setup(ext_modules=_extensions())
