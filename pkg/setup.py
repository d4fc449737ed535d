"""Build hook for the optional compiled polynomial kernel.

The package is pure Python; if Cython and a C compiler are available the
dense-polynomial kernel `opecalc._polykernels` is compiled, otherwise the
pure-Python twin is used at import time.  Either way `pip install -e .` works.
"""

from setuptools import Extension, setup

ext_modules = []
try:
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            Extension(
                "opecalc._polykernels",
                ["src/opecalc/_polykernels.pyx"],
            )
        ],
        language_level=3,
    )
except Exception as exc:  # no Cython / no compiler: fall back silently
    print(f"building without compiled kernel ({exc!r})")

setup(ext_modules=ext_modules)
