"""Build the optional Cython kernel module.

The package works without it: ``lvmzoo._backend`` falls back to the
pure-Python kernels when ``lvmzoo._kernels`` cannot be imported.
"""
import os

from setuptools import Extension, setup

ext_modules = []
if os.environ.get("LVMZOO_NO_EXT") != "1":
    try:
        from Cython.Build import cythonize
    except ImportError:
        cythonize = None
    if cythonize is not None:
        ext_modules = cythonize(
            [
                Extension(
                    "lvmzoo._kernels",
                    ["src/lvmzoo/_kernels.pyx"],
                    extra_compile_args=["-O3"],
                )
            ],
            compiler_directives={
                "language_level": "3",
                "boundscheck": False,
                "wraparound": False,
                "cdivision": True,
                "initializedcheck": False,
            },
        )

setup(ext_modules=ext_modules)
