import os

import numpy as np
from setuptools import Extension, setup

# QGT_NO_EXT=1 installs the pure-Python package only; qgt falls back at import.
ext_modules = []
if not os.environ.get("QGT_NO_EXT"):
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            Extension(
                "qgt._core",
                ["src/qgt/_core.pyx"],
                include_dirs=[np.get_include()],
                # no -ffast-math: DE results must match the Python fallback bit for bit
                extra_compile_args=["-O3"],
            )
        ],
        compiler_directives={"language_level": "3"},
    )

setup(ext_modules=ext_modules)
