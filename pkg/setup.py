import os

import numpy as np
from setuptools import Extension, setup

# The compiled compositing kernel is optional: if Cython (or a C compiler)
# is unavailable the package falls back to the numpy implementation at
# import time. -ffp-contract=off keeps the C arithmetic bit-compatible
# with the numpy path (no FMA contraction).
ext_modules = []
try:
    from Cython.Build import cythonize

    extra_compile = ["-O3", "-ffp-contract=off"]
    extra_link = []
    if os.environ.get("UQVOL_NO_OPENMP") != "1":
        extra_compile.append("-fopenmp")
        extra_link.append("-fopenmp")
    ext_modules = cythonize(
        [
            Extension(
                "uqvol.render._compositing_cy",
                ["src/uqvol/render/_compositing_cy.pyx"],
                include_dirs=[np.get_include()],
                extra_compile_args=extra_compile,
                extra_link_args=extra_link,
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
            )
        ],
        compiler_directives={"language_level": "3"},
    )
except ImportError:
    pass

setup(ext_modules=ext_modules)
