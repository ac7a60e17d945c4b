"""Build the optional Cython assembly kernel.

Installation still succeeds without a compiler; the package then falls back
to its NumPy implementation.
"""
from setuptools import setup

ext_modules = []
try:
    import numpy as np
    from Cython.Build import cythonize
    from setuptools import Extension

    ext_modules = cythonize(
        [Extension("surfns._kernels", ["src/surfns/_kernels.pyx"],
                   include_dirs=[np.get_include()],
                   extra_compile_args=["-O3", "-fopenmp"],
                   extra_link_args=["-fopenmp"])],
        compiler_directives={"language_level": "3"},
    )
except ImportError:
    pass

setup(ext_modules=ext_modules)
