from setuptools import Extension, setup

try:
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            Extension(
                "infoprocure.kernels._mc",
                ["src/infoprocure/kernels/_mc.pyx"],
                extra_compile_args=["-O3"],
            )
        ],
        language_level=3,
    )
except ImportError:
    # No Cython: install without the compiled kernel; the package falls
    # back to the NumPy implementation at import time.
    ext_modules = []

setup(ext_modules=ext_modules)
