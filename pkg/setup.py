"""Builds the optional compiled kernel extension.

The package is fully functional without the extension; seqbound._kernels
falls back to the pure-numpy implementation when the compiled module is
absent (extension marked optional so a missing C toolchain degrades to a
source-only install instead of failing).
"""

from setuptools import Extension, setup

try:
    import numpy as np
    from Cython.Build import cythonize
except ImportError:
    ext_modules = []
else:
    ext = Extension(
        "seqbound._kernels._fast",
        sources=["src/seqbound/_kernels/_fast.pyx"],
        include_dirs=[np.get_include()],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
        optional=True,
    )
    ext_modules = cythonize(
        [ext],
        compiler_directives={
            "language_level": "3",
            "boundscheck": False,
            "wraparound": False,
            "initializedcheck": False,
            "cdivision": True,
        },
    )

setup(ext_modules=ext_modules)
