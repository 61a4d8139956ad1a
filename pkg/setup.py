import os

import numpy as np
from setuptools import Extension, setup

# KDEKNN_NO_EXT=1 skips the compiled core; the package then runs on the
# pure-Python kernels.
if os.environ.get("KDEKNN_NO_EXT"):
    ext_modules = []
else:
    from Cython.Build import cythonize

    extensions = [
        Extension(
            "kdeknn._kernels",
            ["src/kdeknn/_kernels.pyx"],
            include_dirs=[np.get_include()],
            # no FMA contraction: compiled and fallback kernels must round identically
            extra_compile_args=["-O3", "-ffp-contract=off"],
        )
    ]
    ext_modules = cythonize(
        extensions,
        compiler_directives={
            "language_level": "3",
            "boundscheck": False,
            "wraparound": False,
            "cdivision": True,
            "initializedcheck": False,
        },
    )

setup(ext_modules=ext_modules)
