"""Build script: compiles the optional rod-solver extension.

The package works without the extension (a pure-numpy solver is selected at
import time); compilation failures therefore only cost speed, not features.
"""

import numpy
from setuptools import setup

try:
    from Cython.Build import cythonize

    ext_modules = cythonize(
        ["src/vesselnav/physics/_rodkernel.pyx"],
        compiler_directives={
            "language_level": "3",
            "boundscheck": False,
            "wraparound": False,
            "cdivision": True,
        },
    )
except Exception as exc:  # pragma: no cover - build-env dependent
    print(f"vesselnav: skipping compiled solver ({exc}); numpy fallback will be used")
    ext_modules = []

setup(
    ext_modules=ext_modules,
    include_dirs=[numpy.get_include()],
)
