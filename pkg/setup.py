import os

import numpy as np
from setuptools import Extension, setup

# The compiled kernels are optional: radioshift.adcore.kernels falls back to
# numpy when the extension is missing.
ext_modules = []
if os.environ.get("RADIOSHIFT_NO_EXT") != "1":
    try:
        from Cython.Build import cythonize
    except ImportError:
        cythonize = None
    if cythonize is not None:
        ext_modules = cythonize(
            [
                Extension(
                    "radioshift.adcore._kernels_cy",
                    ["src/radioshift/adcore/_kernels_cy.pyx"],
                    include_dirs=[np.get_include()],
                    extra_compile_args=["-O3"],
                )
            ],
            compiler_directives={"language_level": "3"},
        )

setup(ext_modules=ext_modules)
