import numpy as np
from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:
    # Source tree without Cython: install pure-Python only, the runtime
    # backend selector falls back automatically.
    cythonize = None

extensions = [
    Extension(
        "plaplab._kernels._stepper",
        ["src/plaplab/_kernels/_stepper.pyx"],
        include_dirs=[np.get_include()],
        extra_compile_args=["-O3"],
    )
]

setup(
    ext_modules=cythonize(
        extensions,
        compiler_directives={"language_level": "3"},
    )
    if cythonize is not None
    else [],
)
