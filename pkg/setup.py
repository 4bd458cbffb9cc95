"""Build hook for the optional Cython kernels.

The package is fully functional without the extension; ``cctext._kernels``
falls back to the pure-Python implementations when it cannot be imported.
"""
import os

from setuptools import Extension, setup

ext_modules = []
if not os.environ.get("CCTEXT_NO_EXT"):
    try:
        import numpy as np
        from Cython.Build import cythonize
    except ImportError:
        pass
    else:
        ext_modules = cythonize(
            [
                Extension(
                    "cctext._speedups",
                    ["src/cctext/_speedups.pyx"],
                    include_dirs=[np.get_include()],
                    define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                    extra_compile_args=["-O3"],
                )
            ],
            compiler_directives={"language_level": "3"},
        )

setup(ext_modules=ext_modules)
