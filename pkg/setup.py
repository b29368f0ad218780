"""Build shim: compiles the batched step kernel when a toolchain is present.

The package works without the extension (a numpy fallback is selected at
import time), so any failure here downgrades to a warning.
"""

import warnings

from setuptools import setup

ext_modules = []
try:
    from Cython.Build import cythonize

    ext_modules = cythonize(
        "src/gridkitchen/_stepper_cy.pyx", language_level=3
    )
except Exception as exc:  # pragma: no cover - toolchain-dependent
    warnings.warn(f"skipping compiled step kernel: {exc}")

setup(ext_modules=ext_modules)
