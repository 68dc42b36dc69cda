"""Build script.  The Airy kernel has an optional Cython-compiled core; if
Cython or a C compiler is unavailable the package installs anyway and falls
back to the pure NumPy implementation at import time."""

from setuptools import setup

ext_modules = []
try:
    import numpy
    from Cython.Build import cythonize
    from setuptools import Extension

    ext_modules = cythonize(
        [
            Extension(
                "airylayer._airy_core",
                ["src/airylayer/_airy_core.pyx"],
                include_dirs=[numpy.get_include()],
            )
        ],
        language_level=3,
    )
except Exception as exc:  # pragma: no cover - build-environment dependent
    print(f"airylayer: building without compiled core ({exc!r})")

setup(ext_modules=ext_modules)
