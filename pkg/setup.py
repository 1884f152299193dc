import os

from setuptools import Extension, setup

try:
    import numpy as np
    from Cython.Build import cythonize
except ImportError:  # pure-Python install; ouriesz falls back to NumPy kernels
    ext_modules = []
else:
    ext_modules = cythonize(
        [
            Extension(
                "ouriesz._kernels",
                ["src/ouriesz/_kernels.pyx"],
                include_dirs=[np.get_include()],
                extra_compile_args=["-O3"],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
            )
        ],
        language_level=3,
    )

if os.environ.get("OURIESZ_PURE_PYTHON"):
    ext_modules = []

setup(ext_modules=ext_modules)
