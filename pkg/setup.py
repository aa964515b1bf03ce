"""Build the optional Cython kernels; the package works without them."""

import os

import numpy as np
from setuptools import Extension, setup


def _extensions():
    if os.environ.get("RISIMP_NO_EXT"):
        return []
    try:
        from Cython.Build import cythonize
    except ImportError:
        return []
    ext = Extension(
        "risimp._kernels",
        sources=["src/risimp/_kernels.pyx"],
        include_dirs=[np.get_include()],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
        extra_compile_args=["-O3"],
    )
    return cythonize([ext], language_level=3)


setup(ext_modules=_extensions())
