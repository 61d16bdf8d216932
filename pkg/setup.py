"""Build script: compiles the optional Cython kernel core.

The package works without the extension (a numpy fallback is selected at
import time); building it is only needed for speed.  Floating point semantics
must match the fallback bit for bit, so fused multiply-add contraction is
disabled.
"""

import sys

from setuptools import setup

ext_modules = []
try:
    import numpy
    from Cython.Build import cythonize
    from setuptools import Extension

    ext_modules = cythonize(
        [
            Extension(
                "eventstep.kernels._core",
                ["src/eventstep/kernels/_core.pyx"],
                include_dirs=[numpy.get_include()],
                extra_compile_args=["-O2", "-ffp-contract=off"],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
            )
        ],
        compiler_directives={"language_level": "3"},
    )
except Exception as exc:  # pragma: no cover - build environments vary
    sys.stderr.write(f"eventstep: building without compiled kernels ({exc})\n")

setup(ext_modules=ext_modules)
