"""Build script: compiles the optional Cython kernel extension.

The package works without the extension (a numpy fallback is selected at
import time), so a missing compiler or Cython only costs speed.

    pip install -e . --no-build-isolation
"""

from setuptools import setup

ext_modules = []
try:
    import numpy
    from Cython.Build import cythonize

    ext_modules = cythonize(
        "src/crowngen/_kernels_cy.pyx",
        compiler_directives={"language_level": 3},
    )
    for ext in ext_modules:
        ext.include_dirs.append(numpy.get_include())
except ImportError as exc:  # pragma: no cover - build-time path
    import warnings

    warnings.warn(f"building without compiled kernels ({exc})")

setup(ext_modules=ext_modules)
