"""Build script for the optional compiled ALS kernel.

The package is fully functional without the extension (a numpy fallback is
selected at import time), so a failed compile degrades to a warning instead
of aborting the install.
"""

from setuptools import setup

ext_modules = []
try:
    from Cython.Build import cythonize

    ext_modules = cythonize(
        ["src/schmidt_measure/_kernels/als_cy.pyx"],
        compiler_directives={
            "language_level": "3",
            "boundscheck": False,
            "wraparound": False,
            "cdivision": True,
        },
    )
except Exception as exc:  # pragma: no cover - build environment dependent
    import sys

    print(f"warning: compiled kernel disabled ({exc}); using the pure-python "
          "fallback", file=sys.stderr)

setup(ext_modules=ext_modules)
