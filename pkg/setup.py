"""Build script for the optional compiled Gillespie kernel.

The package is fully functional without the extension (a pure-Python
kernel is selected at import time); the compiled kernel is what makes
large-N Monte Carlo batches fast.  `pip install .` builds it when a C
compiler and Cython are available and silently falls back otherwise.
"""

import sys

from setuptools import setup

# Identical floating-point results are required from the compiled and the
# pure-Python kernel, so FMA contraction and fast-math are disabled.
EXTRA_COMPILE_ARGS = {
    "unix": ["-O2", "-ffp-contract=off"],
    "msvc": ["/O2", "/fp:strict"],
}


def _extensions():
    try:
        from Cython.Build import cythonize
        from setuptools import Extension
    except ImportError:
        return []
    compiler = "msvc" if sys.platform == "win32" else "unix"
    ext = Extension(
        "multidicke.stochastic._kernel",
        sources=["src/multidicke/stochastic/_kernel.pyx"],
        extra_compile_args=EXTRA_COMPILE_ARGS[compiler],
    )
    return cythonize(
        [ext],
        compiler_directives={
            "language_level": 3,
            "boundscheck": False,
            "wraparound": False,
            "initializedcheck": False,
            "cdivision": True,
        },
    )


setup(ext_modules=_extensions())
