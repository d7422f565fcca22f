"""Build the compiled integrator kernel.

The package works without it: ``kerr_omit.oracle`` falls back to a
pure-Python stepper when the extension is missing.
"""
import os

import numpy as np
from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:  # pragma: no cover
    cythonize = None

ext_modules = []
if cythonize is not None and not os.environ.get("KERR_OMIT_NO_EXT"):
    ext_modules = cythonize(
        [
            Extension(
                "kerr_omit.oracle._kernel",
                ["src/kerr_omit/oracle/_kernel.pyx"],
                include_dirs=[np.get_include()],
                extra_compile_args=["-O3"],
            )
        ],
        compiler_directives={
            "language_level": "3",
            "boundscheck": False,
            "wraparound": False,
            "cdivision": True,
        },
    )

setup(ext_modules=ext_modules)
