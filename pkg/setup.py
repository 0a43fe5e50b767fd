import numpy
from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
    USE_CYTHON = True
except ImportError:
    cythonize = None
    USE_CYTHON = False

# The compiled stencil kernels are optional: without a compiler (or Cython)
# the package falls back to the numpy implementation selected at import.
ext_modules = []
if USE_CYTHON:
    ext_modules = cythonize(
        [
            Extension(
                "hydroqm.calculus._stencils_cy",
                ["src/hydroqm/calculus/_stencils_cy.pyx"],
                include_dirs=[numpy.get_include()],
                extra_compile_args=["-O3"],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
            )
        ],
        compiler_directives={"language_level": "3"},
    )

setup(ext_modules=ext_modules)
