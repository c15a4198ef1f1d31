"""Builds the optional compiled kernel extension.

The package works without it: fpl_lab.batch falls back to the pure
numpy implementation when the extension is missing.
"""
from setuptools import Extension, setup

ext_modules = []
try:
    import numpy
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            Extension(
                "fpl_lab._batch_cy",
                ["src/fpl_lab/_batch_cy.pyx"],
                include_dirs=[numpy.get_include()],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
            )
        ],
        language_level=3,
    )
except ImportError:
    pass

setup(ext_modules=ext_modules)
