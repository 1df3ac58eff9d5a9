"""Build script: compiles the peeling kernel when a C toolchain is available.

The extension is optional; without it the package falls back to the pure
Python kernel in codedgrad._peel_py (selected at import time).
"""

from setuptools import Extension, setup

try:
    import numpy as np
    from Cython.Build import cythonize
except ImportError:
    ext_modules = []
else:
    ext_modules = cythonize(
        [
            Extension(
                "codedgrad._peel",
                ["src/codedgrad/_peel.pyx"],
                include_dirs=[np.get_include()],
                extra_compile_args=["-O3"],
                optional=True,
            )
        ],
        language_level=3,
    )

setup(ext_modules=ext_modules)
