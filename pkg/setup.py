"""Build hook for the optional compiled kernel extension.

The package works without the extension (a numpy fallback is selected at
import time); building it just makes the exact pair-loop counters fast.
"""

import numpy
from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:  # source dist without Cython: skip the extension
    ext_modules = []
else:
    ext_modules = cythonize(
        [
            Extension(
                "rothlab._kernels._ckernels",
                ["src/rothlab/_kernels/_ckernels.pyx"],
                include_dirs=[numpy.get_include()],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
            )
        ],
        language_level="3",
    )

setup(ext_modules=ext_modules)
