import os

import numpy as np
from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:  # pure-Python install; kernels fall back to numpy
    cythonize = None

ext_modules = []
if cythonize is not None and os.environ.get("UNOTB_NO_EXT") != "1":
    ext_modules = cythonize(
        [
            Extension(
                "unotb._kernels",
                ["src/unotb/_kernels.pyx"],
                include_dirs=[np.get_include()],
                extra_compile_args=["-O3", "-ffast-math", "-march=native", "-fopenmp"],
                extra_link_args=["-fopenmp", "-lmvec", "-lm"],
            )
        ],
        compiler_directives={"language_level": "3"},
    )

setup(ext_modules=ext_modules)
