"""Build the optional compiled kernels; the package works without them."""

import os
import sys

import numpy as np
from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:  # no Cython: numpy fallback only
    cythonize = None

ext_modules = []
if cythonize is not None and os.environ.get("OBSTRUCTION_LAB_NO_EXT") != "1":
    openmp = [] if sys.platform == "darwin" else ["-fopenmp"]
    ext = Extension(
        "obstruction_lab._kernels",
        ["src/obstruction_lab/_kernels.pyx"],
        include_dirs=[np.get_include()],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
        extra_compile_args=["-O3"] + openmp,
        extra_link_args=openmp,
        optional=True,
    )
    ext_modules = cythonize([ext], compiler_directives={"language_level": "3"}, quiet=True)

setup(ext_modules=ext_modules)
