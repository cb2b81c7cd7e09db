"""Build script for the optional compiled rate kernel.

The extension is marked optional: if it fails to build (no compiler, no
Cython), the package installs anyway and falls back to the pure-numpy
backend at import time.
"""

from setuptools import Extension, setup

ext_modules = []
try:
    import numpy as np
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            Extension(
                "frenet_adp.engine._ckernel",
                ["src/frenet_adp/engine/_ckernel.pyx"],
                include_dirs=[np.get_include()],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                optional=True,
            )
        ],
        language_level=3,
    )
except ImportError:
    pass

setup(ext_modules=ext_modules)
