import sys

from setuptools import setup

# The compiled kernels are optional: if Cython or a C compiler is missing the
# package falls back to the NumPy implementations selected at import time.
ext_modules = []
try:
    import numpy
    from Cython.Build import cythonize
    from setuptools import Extension

    ext = Extension(
        "geomreg._kernels._native",
        ["src/geomreg/_kernels/_native.pyx"],
        include_dirs=[numpy.get_include()],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
        extra_compile_args=["-O3"],
    )
    ext_modules = cythonize([ext], language_level="3")
except Exception as exc:  # pragma: no cover
    sys.stderr.write(f"geomreg: building without compiled kernels ({exc})\n")

setup(ext_modules=ext_modules)
