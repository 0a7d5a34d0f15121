"""Build script for the optional compiled kernel extension.

The package works without the extension (a numpy/Python fallback is selected
at import time); building it is strongly recommended for the experiment
harness, where the filter and training kernels dominate runtime.
"""

import numpy
from Cython.Build import cythonize
from setuptools import Extension, setup

extensions = [
    Extension(
        "adlsense._core",
        ["src/adlsense/_core.pyx"],
        include_dirs=[numpy.get_include()],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
        extra_compile_args=["-O3"],
    )
]

setup(ext_modules=cythonize(extensions, language_level=3))
