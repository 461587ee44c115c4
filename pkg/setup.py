"""Build script for the optional compiled sampling core.

The extension is optional: if Cython or a C compiler is unavailable the
package installs without it and falls back to the pure-Python kernel.
"""
import os

from setuptools import setup

ext_modules = []
if os.environ.get("CYCLICAL_MCMC_NO_EXT") != "1":
    try:
        import numpy as np
        from Cython.Build import cythonize
        from setuptools import Extension

        ext_modules = cythonize(
            [
                Extension(
                    "cyclical_mcmc._core",
                    ["src/cyclical_mcmc/_core.pyx"],
                    include_dirs=[np.get_include()],
                    # no fp contraction: keeps results bit-identical to the Python kernel
                    extra_compile_args=["-O3", "-ffp-contract=off"],
                )
            ],
            compiler_directives={
                "language_level": "3",
                "boundscheck": False,
                "wraparound": False,
                "cdivision": True,
            },
        )
    except ImportError:
        ext_modules = []

setup(ext_modules=ext_modules)
