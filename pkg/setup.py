"""Build script for the compiled EM kernel.

The extension is optional at runtime: if the compiled module is missing the
package falls back to the pure-NumPy kernel (see shellcohort.emcore).
"""

from Cython.Build import cythonize
from setuptools import Extension, setup

extensions = [
    Extension(
        "shellcohort.emcore._kernel",
        ["src/shellcohort/emcore/_kernel.pyx"],
    )
]

setup(ext_modules=cythonize(extensions, language_level=3))
