"""Build script for the compiled kernel extension.

The package works without the extension (a pure-Python fallback is selected
at import time), so a missing Cython or C compiler only costs speed.
"""

from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:
    ext_modules = []
else:
    # -ffp-contract=off keeps the C arithmetic bit-compatible with the
    # pure-Python kernels (no fused multiply-add contraction).
    ext_modules = cythonize(
        [
            Extension(
                "crowdflow._kernels",
                ["src/crowdflow/_kernels.pyx"],
                extra_compile_args=["-O3", "-ffp-contract=off"],
            )
        ],
        compiler_directives={"language_level": "3"},
    )

setup(ext_modules=ext_modules)
