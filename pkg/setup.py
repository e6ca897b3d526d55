"""Build script: compiles the optional Cython kernel extension.

The package works without the extension (a pure-Python fallback is
selected at import time), so any failure here is non-fatal.
"""

from setuptools import setup

try:
    from Cython.Build import cythonize
    from setuptools import Extension

    ext_modules = cythonize(
        [Extension("amalgams._ckernels", ["src/amalgams/_ckernels.pyx"])],
        language_level=3,
    )
except Exception:
    ext_modules = []

setup(ext_modules=ext_modules)
