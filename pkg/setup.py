"""Build the optional Cython kernels.

The extension is optional: if Cython or a C compiler is unavailable the
package installs without it and ``fallsift._backend`` falls back to the
pure-Python kernels.
"""
import os

from setuptools import Extension, setup


def _extensions():
    if os.environ.get("FALLSIFT_NO_EXT"):
        return []
    try:
        from Cython.Build import cythonize
    except ImportError:
        return []
    ext = Extension(
        "fallsift._kernels",
        ["src/fallsift/_kernels.pyx"],
        extra_compile_args=["-O3", "-ffp-contract=off"],
    )
    return cythonize([ext], compiler_directives={"language_level": "3"})


setup(ext_modules=_extensions())
